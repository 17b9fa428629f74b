#pragma once

// Reference arithmetic coder used as the test oracle. Written before and
// kept independent of the production codec: plain symbol-at-a-time interval
// subdivision over a 32-bit register, bits held as one int per entry,
// nothing shared with src/.
//
// Contract (mirrored by the production codec):
//   * adaptive binary model, weights w0 = n0*prior_den + prior_num,
//     w1 likewise; p(0) = w0/(w0+w1); add-half counts at the default 1/2
//   * interval [lo, hi] inclusive over 32 bits; the 0-symbol takes the
//     lower floor(width*w0/total) values
//   * E1/E2/E3 renormalisation with pending-bit counting
//   * flush: pending += 1, then emit (lo >= QUARTER), so any suffix,
//     in particular all zeros, decodes back to the encoded symbols
//   * framing: zero padding ++ sentinel 1 ++ code, total width W;
//     the all-zero row is the n = 0 encoding
//   * decoding skips the zero prefix, drops the sentinel and reads
//     exhausted code bits as zeros

#include <cstdint>
#include <vector>

namespace refcoder {

inline constexpr std::uint64_t kTop = 0xffffffffull;
inline constexpr std::uint64_t kHalf = 0x80000000ull;
inline constexpr std::uint64_t kQuarter = 0x40000000ull;
inline constexpr std::uint64_t kThreeQuarters = 0xc0000000ull;

struct Model {
  std::uint64_t w0, w1;
  std::uint64_t step;
  Model(std::uint64_t prior_num, std::uint64_t prior_den)
      : w0(prior_num), w1(prior_num), step(prior_den) {}
  void observe(int symbol) { (symbol ? w1 : w0) += step; }
};

// Arithmetic code of `symbols`, without framing. Empty input gives an
// empty code.
inline std::vector<int> encode_symbols(const std::vector<int>& symbols,
                                       std::uint64_t prior_num,
                                       std::uint64_t prior_den) {
  std::vector<int> bits;
  if (symbols.empty()) return bits;
  Model model(prior_num, prior_den);
  std::uint64_t lo = 0, hi = kTop;
  std::uint64_t pending = 0;
  auto emit = [&](int b) {
    bits.push_back(b);
    for (; pending > 0; --pending) bits.push_back(1 - b);
  };
  for (int s : symbols) {
    const std::uint64_t width = hi - lo + 1;
    const std::uint64_t split = width * model.w0 / (model.w0 + model.w1);
    if (s == 0) {
      hi = lo + split - 1;
    } else {
      lo = lo + split;
    }
    model.observe(s);
    for (;;) {
      if (hi < kHalf) {
        emit(0);
      } else if (lo >= kHalf) {
        emit(1);
        lo -= kHalf;
        hi -= kHalf;
      } else if (lo >= kQuarter && hi < kThreeQuarters) {
        ++pending;
        lo -= kQuarter;
        hi -= kQuarter;
      } else {
        break;
      }
      lo = lo * 2;
      hi = hi * 2 + 1;
    }
  }
  ++pending;
  emit(lo >= kQuarter ? 1 : 0);
  return bits;
}

// Decode `n` symbols from a code bit sequence; bits beyond the end read
// as zero. Total: every input decodes.
inline std::vector<int> decode_symbols(const std::vector<int>& code,
                                       std::size_t n,
                                       std::uint64_t prior_num,
                                       std::uint64_t prior_den) {
  std::vector<int> symbols;
  if (n == 0) return symbols;
  std::size_t pos = 0;
  auto next_bit = [&]() -> std::uint64_t {
    return pos < code.size() ? static_cast<std::uint64_t>(code[pos++]) : 0;
  };
  Model model(prior_num, prior_den);
  std::uint64_t lo = 0, hi = kTop;
  std::uint64_t value = 0;
  for (int i = 0; i < 32; ++i) value = value * 2 + next_bit();
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t width = hi - lo + 1;
    const std::uint64_t split = width * model.w0 / (model.w0 + model.w1);
    int s;
    if (value - lo < split) {
      s = 0;
      hi = lo + split - 1;
    } else {
      s = 1;
      lo = lo + split;
    }
    symbols.push_back(s);
    model.observe(s);
    for (;;) {
      if (hi < kHalf) {
        // nothing to subtract
      } else if (lo >= kHalf) {
        lo -= kHalf;
        hi -= kHalf;
        value -= kHalf;
      } else if (lo >= kQuarter && hi < kThreeQuarters) {
        lo -= kQuarter;
        hi -= kQuarter;
        value -= kQuarter;
      } else {
        break;
      }
      lo = lo * 2;
      hi = hi * 2 + 1;
      value = value * 2 + next_bit();
    }
  }
  return symbols;
}

// Fixed-width framing: zero padding, sentinel 1, code. Returns false when
// the row does not fit.
inline bool encode_row(const std::vector<int>& row, std::uint32_t width,
                       std::uint64_t prior_num, std::uint64_t prior_den,
                       std::vector<int>& out) {
  out.assign(width, 0);
  if (row.empty()) return true;
  const std::vector<int> code = encode_symbols(row, prior_num, prior_den);
  if (code.size() + 1 > width) return false;
  std::size_t at = width - code.size() - 1;
  out[at++] = 1;
  for (int b : code) out[at++] = b;
  return true;
}

inline std::vector<int> decode_row(const std::vector<int>& framed,
                                   std::size_t n, std::uint64_t prior_num,
                                   std::uint64_t prior_den) {
  if (n == 0) return {};
  std::size_t start = 0;
  while (start < framed.size() && framed[start] == 0) ++start;
  if (start == framed.size()) return std::vector<int>(n, 0);
  const std::vector<int> code(framed.begin() + start + 1, framed.end());
  return decode_symbols(code, n, prior_num, prior_den);
}

}  // namespace refcoder
