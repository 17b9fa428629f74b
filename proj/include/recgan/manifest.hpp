#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "recgan/common.hpp"

namespace recgan {

struct ManifestEntry {
  std::string name;
  std::uint64_t hash = 0;
  std::uint64_t bytes = 0;
};

std::uint64_t hash_file(const std::string& path);

// Rewrites workdir/manifest.txt with entries for `artifacts` (hashes
// recomputed from disk), keeping entries for files not in the list.
// Lines are `<hex hash>  <bytes>  <name>`, sorted by name.
void update_manifest(const std::string& workdir,
                     const std::vector<std::string>& artifacts);

std::vector<ManifestEntry> read_manifest(const std::string& path);

}  // namespace recgan
