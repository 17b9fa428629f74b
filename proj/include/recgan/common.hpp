#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace recgan {

// Unrecoverable I/O problem (unreadable file, short read, bad magic).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration or input data; maps to CLI exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// API misuse (shape mismatch, index out of range). Bug, not data.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// Row content does not fit the configured code width.
struct CodeOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite loss during training.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Metric requested on a sample where every realization was skipped.
struct UndefinedMetric : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FNV-1a 64-bit. Used for the artifact manifest and for binding coded
// tensors to the catalog they were produced from.
class Fnv1a64 {
 public:
  void update(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ull;
    }
  }
  void update(std::string_view s) { update(s.data(), s.size()); }
  std::uint64_t digest() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

inline std::uint64_t fnv1a64(std::string_view s) {
  Fnv1a64 h;
  h.update(s);
  return h.digest();
}

std::string hex64(std::uint64_t v);

}  // namespace recgan
