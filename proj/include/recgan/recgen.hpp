#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "recgan/codec.hpp"
#include "recgan/gan.hpp"

namespace recgan {

// Decoded recommendation draw: per-category local item indices for the
// view and buy channels. Category sets c_v/c_b are the rows with at least
// one decoded item.
struct RecommendationSet {
  std::uint32_t segment = 0;
  SparseBits items_v;
  SparseBits items_b;

  std::vector<std::uint32_t> categories_v() const;
  std::vector<std::uint32_t> categories_b() const;
  bool operator==(const RecommendationSet&) const = default;
};

// n independent generator draws for one segment, fresh z per draw,
// deterministic under seed. Raw tanh outputs, one [r*w] tensor per channel.
std::vector<std::pair<Tensor<float>, Tensor<float>>> sample_segment(
    CoupledGan<float>& model, std::uint32_t segment, std::size_t n,
    std::uint64_t seed);

// bit = 1 iff element > threshold (strictly).
CodedMatrix binarize(const Tensor<float>& x, std::uint32_t r, std::uint32_t w,
                     double threshold);

RecommendationSet decode_realization(const CodedMatrix& v,
                                     const CodedMatrix& b,
                                     const Catalog& catalog,
                                     const CodecConfig& cfg,
                                     std::uint32_t segment,
                                     unsigned workers = 1);

// Uniform subset without replacement of size round(fraction * n);
// preserves input order. Returns selected indices.
std::vector<std::size_t> subsample_indices(std::size_t n, double fraction,
                                           std::uint64_t seed);

// ---- realization dump (line-oriented, sorted, diffable) ----
//
//   R seg=<segment> idx=<k>
//   V cat=<category_id> items=<id;id;...>
//   B cat=<category_id> items=<id;id;...>
//
// One R line per realization (kept even when empty), item lines only for
// non-empty categories, categories in catalog order.

void write_realizations(std::ostream& out,
                        const std::vector<RecommendationSet>& sets,
                        const Catalog& catalog);
std::vector<RecommendationSet> read_realizations(std::istream& in,
                                                 const Catalog& catalog);

}  // namespace recgan
