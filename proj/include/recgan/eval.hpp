#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "recgan/recgen.hpp"

namespace recgan {

struct MetricResult {
  double percent = 0;
  std::size_t contributing = 0;
  std::size_t skipped = 0;
  bool defined() const { return contributing > 0; }
};

// Conversion rate (Eq.-4 style): per realization, restrict both item sets
// to the overlapping categories and take #(i_v & i_b)/#i_v; mean over
// contributing realizations, in percent. Realizations with empty category
// overlap (or an empty restricted view set) are skipped and counted.
// Accumulation is exact rational; the throwing variants reject samples
// where every realization was skipped.
MetricResult cvr_result(const std::vector<RecommendationSet>& sets);
double cvr(const std::vector<RecommendationSet>& sets);

// Mean Jaccard similarity between recommended category sets, in percent.
// Realizations with both category sets empty are skipped and counted.
MetricResult jaccard_result(const std::vector<RecommendationSet>& sets);
double jaccard(const std::vector<RecommendationSet>& sets);

// Mean fraction of nonzero cells over the full catalog item space, per
// channel (view, buy).
std::pair<double, double> density(const std::vector<RecommendationSet>& sets,
                                  const Catalog& catalog);

struct NullResult {
  MetricResult cvr;
  MetricResult jaccard;
  std::size_t trials = 0;
  std::uint64_t items_per_trial_v = 0;
  std::uint64_t items_per_trial_b = 0;
};

// Matched-sparsity random baseline: per trial, draw uniform item sets of
// size round(density * total_items) per channel (without replacement
// within a channel, channels independent) and evaluate the same metrics.
NullResult null_trials(double density_v, double density_b,
                       const Catalog& catalog, std::size_t n_trials,
                       std::uint64_t seed, unsigned workers = 1);

// ---- report ----

struct SegmentRow {
  std::uint32_t segment = 0;
  double mean_items = 0;       // mean decoded view-item count per draw
  double mean_categories = 0;  // mean decoded view-category count
  double cvr = 0;
  double cvr_rn = 0;
  double jc = 0;
  double jc_rn = 0;
  std::size_t n_realizations = 0;
  std::size_t n_null_trials = 0;
  std::size_t cvr_skipped = 0;
  std::size_t jc_skipped = 0;
};

// Published aggregate conversion-rate benchmarks the run is compared
// against (compiled-in constants).
struct BenchmarkConstants {
  double industry = 2.089;  // average over 11 industrial markets
  double product = 1.827;   // average over 9 product types
  std::string source = "2020 e-commerce conversion benchmark survey";
};

double mean_cvr(const std::vector<SegmentRow>& rows);
std::string render_report_text(const std::vector<SegmentRow>& rows,
                               const BenchmarkConstants& bench = {});
std::string render_report_json(const std::vector<SegmentRow>& rows,
                               const BenchmarkConstants& bench = {});

}  // namespace recgan
