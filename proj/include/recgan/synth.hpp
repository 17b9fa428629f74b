#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "recgan/events.hpp"

namespace recgan {

// Synthetic clickstream with a planted, segment-dependent joint
// (view, buy) structure. Each planted segment s owns a block of
// categories; its visitors view items from that block and buy a viewed
// item with fixed conditional probability, so the learnable signal is
// "where the block is" plus the view/buy coupling.
struct SynthConfig {
  std::uint32_t n_categories = 40;
  std::uint32_t items_per_category = 50;
  std::uint32_t n_segments = 4;
  std::uint32_t visitors_per_segment = 200;
  // Per planted segment: [first_category, first_category + n) block.
  // Empty means an equal disjoint partition of the catalog.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> preferred_blocks;
  double p_view = 0.3;
  double p_buy_given_view = 0.5;
  // Stop viewing into a category once it holds this many views, keeping
  // row codes inside the configured width.
  std::uint32_t max_views_per_category = 5;
  BinEdges bin_edges = kDefaultBinEdges;
  std::uint64_t seed = 1;

  void validate() const;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> blocks() const;
};

struct SynthTruth {
  std::uint64_t total_view_items = 0;  // distinct (visitor, item) views
  std::uint64_t total_buy_items = 0;   // distinct (visitor, item) buys
  std::uint64_t total_events = 0;
  std::vector<std::uint32_t> visitors_with_both;  // per planted segment
  // model segment id each planted segment lands in (planted s -> s+1
  // under the default edges; the first bin stays empty because a paired
  // visitor needs at least two events)
  std::vector<int> model_segments;
  double expected_cvr = 0.0;  // 100 * p_buy_given_view
};

struct SynthOutput {
  std::string events_csv;
  std::string catalog_csv;
  SynthTruth truth;
};

SynthOutput synth_generate(const SynthConfig& cfg);

// Expected conversion rate under perfect reproduction of the planted
// conditional: each viewed item is bought independently, so the pooled
// bought/viewed fraction is p_buy_given_view.
double synth_oracle_cvr(const SynthConfig& cfg);

}  // namespace recgan
