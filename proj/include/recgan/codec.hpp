#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "recgan/common.hpp"
#include "recgan/events.hpp"

namespace recgan {

struct CodecConfig {
  std::uint32_t width_w = 300;
  // Prior strength of the adaptive symbol model as a positive rational;
  // 1/2 is the add-half estimator.
  std::uint32_t prior_num = 1;
  std::uint32_t prior_den = 2;

  void validate() const;
  bool operator==(const CodecConfig&) const = default;
};

// Fixed-width bit sequence. Bit index 0 is the leftmost (first) position;
// bits pack LSB-first into bytes for storage.
class BitRow {
 public:
  BitRow() = default;
  explicit BitRow(std::uint32_t width)
      : width_(width), bytes_((width + 7) / 8, 0) {}

  std::uint32_t width() const { return width_; }
  bool bit(std::uint32_t i) const {
    return (bytes_[i >> 3] >> (i & 7)) & 1;
  }
  void set_bit(std::uint32_t i, bool v) {
    if (v)
      bytes_[i >> 3] |= static_cast<std::uint8_t>(1u << (i & 7));
    else
      bytes_[i >> 3] &= static_cast<std::uint8_t>(~(1u << (i & 7)));
  }
  bool all_zero() const;
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

  bool operator==(const BitRow&) const = default;

 private:
  std::uint32_t width_ = 0;
  std::vector<std::uint8_t> bytes_;
};

// r coded rows of equal width, bound to the catalog that defines row order
// and per-row symbol counts.
struct CodedMatrix {
  std::uint64_t catalog_hash = 0;
  std::uint32_t width = 0;
  std::vector<BitRow> rows;

  bool operator==(const CodedMatrix&) const = default;
};

// Arithmetic code of `row` (one symbol per item), framed as zero padding,
// sentinel 1, code bits; total length cfg.width_w. The n = 0 row encodes
// to all zeros. Throws CodeOverflow when sentinel + code exceed the width.
BitRow encode_row(std::span<const std::uint8_t> row, const CodecConfig& cfg);

// Inverse of encode_row given the symbol count; total over all bit
// patterns (exhausted code bits read as zeros).
std::vector<std::uint8_t> decode_row(const BitRow& coded, std::uint32_t n,
                                     const CodecConfig& cfg);

// Conservative feasibility bound: true when a row of n symbols with k ones
// is guaranteed to fit in width W under the adaptive model. Used to size
// widths and to property-test the no-overflow envelope.
bool fits_width(std::uint32_t n, std::uint32_t k, std::uint32_t width);

// Row-wise encoding of both channels. Throws CodeOverflow annotated with
// the offending row index and density.
std::pair<CodedMatrix, CodedMatrix> encode_matrix(
    const InteractionMatrixPair& pair, const Catalog& catalog,
    const CodecConfig& cfg);

CodedMatrix encode_sparse(const SparseBits& bits, const Catalog& catalog,
                          const CodecConfig& cfg);

// Row-parallel decode back to per-category local item indices.
SparseBits decode_matrix(const CodedMatrix& coded, const Catalog& catalog,
                         const CodecConfig& cfg, unsigned workers = 1);

// ---- coded dataset container (.rgc) ----
//
// Header: magic "RGC1", version u32, r u32, W u32, catalog hash u64,
// record count u64. Records: segment u32, V rows, B rows; each row is
// ceil(W/8) bytes, rows in category order. All integers little-endian.

struct CodedRecord {
  std::uint32_t segment = 0;
  CodedMatrix v;
  CodedMatrix b;
};

struct CodedDataset {
  std::uint32_t r = 0;
  std::uint32_t width = 0;
  std::uint64_t catalog_hash = 0;
  std::vector<CodedRecord> records;
};

void write_coded_dataset(std::ostream& out, const CodedDataset& ds);
CodedDataset read_coded_dataset(std::istream& in);
void write_coded_dataset_file(const std::string& path, const CodedDataset& ds);
CodedDataset read_coded_dataset_file(const std::string& path);

struct CodedHeader {
  std::uint32_t r = 0;
  std::uint32_t width = 0;
  std::uint64_t catalog_hash = 0;
  std::uint64_t records = 0;
};

// Header only; does not load record data.
CodedHeader read_coded_header_file(const std::string& path);

}  // namespace recgan
