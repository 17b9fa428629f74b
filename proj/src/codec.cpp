#include "recgan/codec.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>

#include "recgan/parallel.hpp"

namespace recgan {

namespace {

constexpr std::uint32_t kTop = 0xffffffffu;
constexpr std::uint32_t kHalf = 0x80000000u;
constexpr std::uint32_t kQuarter = 0x40000000u;
constexpr std::uint32_t kThreeQuarters = 0xc0000000u;

// Adaptive binary model: weight of symbol s is
// count(s) * prior_den + prior_num, so the default 1/2 prior gives the
// add-half estimator.
class AdaptiveModel {
 public:
  explicit AdaptiveModel(const CodecConfig& cfg)
      : w0_(cfg.prior_num), w1_(cfg.prior_num), step_(cfg.prior_den) {}

  std::uint64_t zero_weight() const { return w0_; }
  std::uint64_t total() const { return w0_ + w1_; }
  void observe(bool one) { (one ? w1_ : w0_) += step_; }

 private:
  std::uint64_t w0_, w1_, step_;
};

void check_symbol_budget(std::uint64_t n, const CodecConfig& cfg) {
  // total() must stay below 2^30 so every subinterval keeps width >= 1
  // after renormalisation.
  const std::uint64_t final_total =
      2ull * cfg.prior_num + n * static_cast<std::uint64_t>(cfg.prior_den);
  if (final_total > (1ull << 30))
    throw ContractViolation("codec: row symbol count too large for model");
}

class RowEncoder {
 public:
  explicit RowEncoder(const CodecConfig& cfg, std::uint32_t cap)
      : model_(cfg), cap_(cap) {}

  void push(bool symbol) {
    const std::uint64_t width =
        static_cast<std::uint64_t>(hi_) - lo_ + 1;
    const std::uint64_t split = width * model_.zero_weight() / model_.total();
    if (symbol)
      lo_ = static_cast<std::uint32_t>(lo_ + split);
    else
      hi_ = static_cast<std::uint32_t>(lo_ + split - 1);
    model_.observe(symbol);
    for (;;) {
      if (hi_ < kHalf) {
        emit(0);
      } else if (lo_ >= kHalf) {
        emit(1);
        lo_ -= kHalf;
        hi_ -= kHalf;
      } else if (lo_ >= kQuarter && hi_ < kThreeQuarters) {
        ++pending_;
        lo_ -= kQuarter;
        hi_ -= kQuarter;
      } else {
        break;
      }
      lo_ <<= 1;
      hi_ = (hi_ << 1) | 1u;
    }
  }

  // Terminates the code so that any suffix (zeros included) decodes back.
  std::vector<std::uint8_t> finish() {
    ++pending_;
    emit(lo_ >= kQuarter ? 1 : 0);
    return std::move(bits_);
  }

 private:
  void emit(std::uint8_t b) {
    bits_.push_back(b);
    for (; pending_ > 0; --pending_) bits_.push_back(1 - b);
    if (bits_.size() > cap_) throw CodeOverflow("code exceeds row width");
  }

  AdaptiveModel model_;
  std::uint32_t lo_ = 0;
  std::uint32_t hi_ = kTop;
  std::uint64_t pending_ = 0;
  std::vector<std::uint8_t> bits_;
  std::size_t cap_;
};

// Reads code bits from a framed BitRow starting after the sentinel;
// exhausted positions read as zero.
class RowDecoder {
 public:
  RowDecoder(const BitRow& row, std::uint32_t start, const CodecConfig& cfg)
      : model_(cfg), row_(row), pos_(start) {
    for (int i = 0; i < 32; ++i) value_ = (value_ << 1) | next_bit();
  }

  bool pull() {
    const std::uint64_t width =
        static_cast<std::uint64_t>(hi_) - lo_ + 1;
    const std::uint64_t split = width * model_.zero_weight() / model_.total();
    bool symbol;
    if (static_cast<std::uint64_t>(value_) - lo_ < split) {
      symbol = false;
      hi_ = static_cast<std::uint32_t>(lo_ + split - 1);
    } else {
      symbol = true;
      lo_ = static_cast<std::uint32_t>(lo_ + split);
    }
    model_.observe(symbol);
    for (;;) {
      if (hi_ < kHalf) {
        // top bit already zero everywhere
      } else if (lo_ >= kHalf) {
        lo_ -= kHalf;
        hi_ -= kHalf;
        value_ -= kHalf;
      } else if (lo_ >= kQuarter && hi_ < kThreeQuarters) {
        lo_ -= kQuarter;
        hi_ -= kQuarter;
        value_ -= kQuarter;
      } else {
        break;
      }
      lo_ <<= 1;
      hi_ = (hi_ << 1) | 1u;
      value_ = (value_ << 1) | next_bit();
    }
    return symbol;
  }

 private:
  std::uint32_t next_bit() {
    if (pos_ >= row_.width()) return 0;
    return row_.bit(pos_++) ? 1u : 0u;
  }

  AdaptiveModel model_;
  const BitRow& row_;
  std::uint32_t pos_;
  std::uint32_t lo_ = 0;
  std::uint32_t hi_ = kTop;
  std::uint32_t value_ = 0;
};

}  // namespace

void CodecConfig::validate() const {
  if (width_w < 2)
    throw ValidationError("codec width must be at least 2");
  if (prior_num == 0 || prior_den == 0)
    throw ValidationError("codec prior must be a positive rational");
  if (prior_num > (1u << 16) || prior_den > (1u << 16))
    throw ValidationError("codec prior out of range");
}

bool BitRow::all_zero() const {
  for (const auto b : bytes_)
    if (b != 0) return false;
  return true;
}

BitRow encode_row(std::span<const std::uint8_t> row, const CodecConfig& cfg) {
  cfg.validate();
  BitRow out(cfg.width_w);
  if (row.empty()) return out;
  check_symbol_budget(row.size(), cfg);
  RowEncoder enc(cfg, cfg.width_w);
  for (const auto s : row) enc.push(s != 0);
  const std::vector<std::uint8_t> code = enc.finish();
  if (code.size() + 1 > cfg.width_w)
    throw CodeOverflow("code of " + std::to_string(code.size()) +
                       " bits plus sentinel exceeds width " +
                       std::to_string(cfg.width_w));
  std::uint32_t at = cfg.width_w - static_cast<std::uint32_t>(code.size()) - 1;
  out.set_bit(at++, true);
  for (const auto b : code) out.set_bit(at++, b != 0);
  return out;
}

std::vector<std::uint8_t> decode_row(const BitRow& coded, std::uint32_t n,
                                     const CodecConfig& cfg) {
  cfg.validate();
  std::vector<std::uint8_t> out;
  if (n == 0) return out;
  check_symbol_budget(n, cfg);
  out.resize(n, 0);
  std::uint32_t start = 0;
  while (start < coded.width() && !coded.bit(start)) ++start;
  if (start == coded.width()) return out;  // all-zero row convention
  RowDecoder dec(coded, start + 1, cfg);
  for (std::uint32_t i = 0; i < n; ++i) out[i] = dec.pull() ? 1 : 0;
  return out;
}

bool fits_width(std::uint32_t n, std::uint32_t k, std::uint32_t width) {
  if (n == 0) return true;
  if (k > n) return false;
  // The add-half model assigns every row with k ones the same mass
  //   P = prod_{i<k}(i+1/2) * prod_{j<n-k}(j+1/2) / n!
  // and the coder emits at most ceil(-log2 P) + 2 bits; one more for the
  // sentinel and one of slack for lgamma rounding.
  const double q = 0.5;
  const double neg_ln_p = std::lgamma(n + 2 * q) - std::lgamma(2 * q) -
                          std::lgamma(k + q) - std::lgamma(n - k + q) +
                          2 * std::lgamma(q);
  const double bits = neg_ln_p / std::log(2.0);
  return std::ceil(bits) + 4.0 <= static_cast<double>(width);
}

CodedMatrix encode_sparse(const SparseBits& bits, const Catalog& catalog,
                          const CodecConfig& cfg) {
  const std::uint32_t r = catalog.category_count();
  if (bits.rows.size() != r)
    throw ContractViolation("encode: row count does not match catalog");
  CodedMatrix coded;
  coded.catalog_hash = catalog.content_hash();
  coded.width = cfg.width_w;
  coded.rows.reserve(r);
  std::vector<std::uint8_t> dense;
  for (std::uint32_t c = 0; c < r; ++c) {
    const std::uint32_t n = catalog.items_in(c);
    dense.assign(n, 0);
    for (const auto idx : bits.rows[c]) {
      if (idx >= n)
        throw ContractViolation("encode: item index out of range");
      dense[idx] = 1;
    }
    try {
      coded.rows.push_back(encode_row(dense, cfg));
    } catch (const CodeOverflow& e) {
      throw CodeOverflow("row " + std::to_string(c) + " (category " +
                         catalog.category_id(c) + ", " +
                         std::to_string(bits.rows[c].size()) + "/" +
                         std::to_string(n) + " ones): " + e.what());
    }
  }
  return coded;
}

std::pair<CodedMatrix, CodedMatrix> encode_matrix(
    const InteractionMatrixPair& pair, const Catalog& catalog,
    const CodecConfig& cfg) {
  return {encode_sparse(pair.v, catalog, cfg),
          encode_sparse(pair.b, catalog, cfg)};
}

SparseBits decode_matrix(const CodedMatrix& coded, const Catalog& catalog,
                         const CodecConfig& cfg, unsigned workers) {
  const std::uint32_t r = catalog.category_count();
  if (coded.rows.size() != r)
    throw ContractViolation("decode: row count does not match catalog");
  SparseBits out;
  out.rows.resize(r);
  parallel_for(r, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      const auto dense = decode_row(coded.rows[c],
                                    catalog.items_in(
                                        static_cast<std::uint32_t>(c)),
                                    cfg);
      auto& row = out.rows[c];
      for (std::uint32_t i = 0; i < dense.size(); ++i)
        if (dense[i]) row.push_back(i);
    }
  });
  return out;
}

// ---- dataset container ----

namespace {

constexpr char kMagic[4] = {'R', 'G', 'C', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw IoError("coded dataset: truncated header field");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw IoError("coded dataset: truncated header field");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

void write_rows(std::ostream& out, const CodedMatrix& m, std::uint32_t r,
                std::uint32_t width) {
  if (m.rows.size() != r || m.width != width)
    throw ContractViolation("coded dataset: inconsistent matrix shape");
  for (const auto& row : m.rows)
    out.write(reinterpret_cast<const char*>(row.bytes().data()),
              static_cast<std::streamsize>(row.bytes().size()));
}

CodedMatrix read_rows(std::istream& in, std::uint32_t r, std::uint32_t width,
                      std::uint64_t catalog_hash) {
  CodedMatrix m;
  m.catalog_hash = catalog_hash;
  m.width = width;
  m.rows.reserve(r);
  const std::size_t row_bytes = (width + 7) / 8;
  for (std::uint32_t c = 0; c < r; ++c) {
    BitRow row(width);
    in.read(reinterpret_cast<char*>(row.bytes().data()),
            static_cast<std::streamsize>(row_bytes));
    if (!in) throw IoError("coded dataset: truncated row data");
    m.rows.push_back(std::move(row));
  }
  return m;
}

}  // namespace

void write_coded_dataset(std::ostream& out, const CodedDataset& ds) {
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, ds.r);
  put_u32(out, ds.width);
  put_u64(out, ds.catalog_hash);
  put_u64(out, ds.records.size());
  for (const auto& rec : ds.records) {
    put_u32(out, rec.segment);
    write_rows(out, rec.v, ds.r, ds.width);
    write_rows(out, rec.b, ds.r, ds.width);
  }
  if (!out) throw IoError("coded dataset: write failed");
}

CodedDataset read_coded_dataset(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("coded dataset: bad magic");
  const std::uint32_t version = get_u32(in);
  if (version != kVersion)
    throw IoError("coded dataset: unsupported version " +
                  std::to_string(version));
  CodedDataset ds;
  ds.r = get_u32(in);
  ds.width = get_u32(in);
  ds.catalog_hash = get_u64(in);
  const std::uint64_t count = get_u64(in);
  ds.records.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    CodedRecord rec;
    rec.segment = get_u32(in);
    rec.v = read_rows(in, ds.r, ds.width, ds.catalog_hash);
    rec.b = read_rows(in, ds.r, ds.width, ds.catalog_hash);
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

void write_coded_dataset_file(const std::string& path,
                              const CodedDataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  write_coded_dataset(out, ds);
}

CodedDataset read_coded_dataset_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  return read_coded_dataset(in);
}

CodedHeader read_coded_header_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("coded dataset: bad magic");
  const std::uint32_t version = get_u32(in);
  if (version != kVersion)
    throw IoError("coded dataset: unsupported version");
  CodedHeader h;
  h.r = get_u32(in);
  h.width = get_u32(in);
  h.catalog_hash = get_u64(in);
  h.records = get_u64(in);
  return h;
}

}  // namespace recgan
