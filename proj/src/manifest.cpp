#include "recgan/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace recgan {

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for hashing: " + path);
  Fnv1a64 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  if (in.bad()) throw IoError("read failed while hashing: " + path);
  return h.digest();
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::vector<ManifestEntry> entries;
  std::ifstream in(path);
  if (!in) return entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string hash_hex;
    ManifestEntry entry;
    if (!(ls >> hash_hex >> entry.bytes >> entry.name)) continue;
    entry.hash = std::stoull(hash_hex, nullptr, 16);
    entries.push_back(std::move(entry));
  }
  return entries;
}

void update_manifest(const std::string& workdir,
                     const std::vector<std::string>& artifacts) {
  const std::string path = workdir + "/manifest.txt";
  std::map<std::string, ManifestEntry> by_name;
  for (auto& entry : read_manifest(path)) by_name[entry.name] = entry;
  for (const auto& name : artifacts) {
    const std::string full = workdir + "/" + name;
    ManifestEntry entry;
    entry.name = name;
    entry.hash = hash_file(full);
    std::ifstream probe(full, std::ios::binary | std::ios::ate);
    entry.bytes = static_cast<std::uint64_t>(probe.tellg());
    by_name[name] = entry;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + path);
  for (const auto& [name, entry] : by_name)
    out << hex64(entry.hash) << "  " << entry.bytes << "  " << name << "\n";
}

}  // namespace recgan
