#include "recgan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <boost/multiprecision/cpp_int.hpp>

#include "recgan/parallel.hpp"
#include "recgan/rng.hpp"

#include <json.hpp>

namespace recgan {

namespace {

using Rational = boost::multiprecision::cpp_rational;

std::size_t intersection_size(const std::vector<std::uint32_t>& a,
                              const std::vector<std::uint32_t>& b) {
  std::size_t count = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

// per-realization conversion contribution; false = skipped
bool cvr_contribution(const RecommendationSet& set, Rational& out) {
  std::size_t overlap_cats = 0, iv = 0, ivb = 0;
  const std::size_t r = set.items_v.rows.size();
  for (std::size_t c = 0; c < r; ++c) {
    const auto& v = set.items_v.rows[c];
    const auto& b = set.items_b.rows[c];
    if (v.empty() || b.empty()) continue;
    ++overlap_cats;
    iv += v.size();
    ivb += intersection_size(v, b);
  }
  if (overlap_cats == 0 || iv == 0) return false;
  out = Rational(ivb, iv);
  return true;
}

bool jaccard_contribution(const RecommendationSet& set, Rational& out) {
  std::size_t inter = 0, uni = 0;
  const std::size_t r = set.items_v.rows.size();
  for (std::size_t c = 0; c < r; ++c) {
    const bool in_v = !set.items_v.rows[c].empty();
    const bool in_b = !set.items_b.rows[c].empty();
    if (in_v && in_b) ++inter;
    if (in_v || in_b) ++uni;
  }
  if (uni == 0) return false;
  out = Rational(inter, uni);
  return true;
}

template <typename ContributionFn>
MetricResult metric_over(const std::vector<RecommendationSet>& sets,
                         ContributionFn&& fn) {
  if (sets.empty()) throw ContractViolation("metric over empty sample");
  MetricResult result;
  Rational sum{0};
  for (const auto& set : sets) {
    Rational c;
    if (fn(set, c)) {
      sum += c;
      ++result.contributing;
    } else {
      ++result.skipped;
    }
  }
  if (result.contributing > 0) {
    sum *= 100;
    sum /= static_cast<long>(result.contributing);
    result.percent = sum.convert_to<double>();
  }
  return result;
}

}  // namespace

MetricResult cvr_result(const std::vector<RecommendationSet>& sets) {
  return metric_over(sets, cvr_contribution);
}

double cvr(const std::vector<RecommendationSet>& sets) {
  const auto result = cvr_result(sets);
  if (!result.defined())
    throw UndefinedMetric("cvr: every realization was skipped");
  return result.percent;
}

MetricResult jaccard_result(const std::vector<RecommendationSet>& sets) {
  return metric_over(sets, jaccard_contribution);
}

double jaccard(const std::vector<RecommendationSet>& sets) {
  const auto result = jaccard_result(sets);
  if (!result.defined())
    throw UndefinedMetric("jaccard: every realization was skipped");
  return result.percent;
}

std::pair<double, double> density(const std::vector<RecommendationSet>& sets,
                                  const Catalog& catalog) {
  if (sets.empty()) throw ContractViolation("density over empty sample");
  const std::uint64_t total = catalog.total_items();
  if (total == 0) return {0.0, 0.0};
  std::uint64_t count_v = 0, count_b = 0;
  for (const auto& set : sets) {
    count_v += set.items_v.nonzero_count();
    count_b += set.items_b.nonzero_count();
  }
  const double denom = static_cast<double>(total) *
                       static_cast<double>(sets.size());
  return {static_cast<double>(count_v) / denom,
          static_cast<double>(count_b) / denom};
}

namespace {

// k distinct uniform draws over the flat item space, mapped back to
// per-category local indices.
SparseBits random_item_set(std::uint64_t k, const Catalog& catalog,
                           const std::vector<std::uint64_t>& prefix,
                           Rng& rng) {
  SparseBits bits;
  const std::uint32_t r = catalog.category_count();
  bits.rows.resize(r);
  const std::uint64_t total = catalog.total_items();
  // Floyd's sampling over [0, total)
  std::vector<std::uint64_t> chosen;
  chosen.reserve(k);
  for (std::uint64_t j = total - k; j < total; ++j) {
    const std::uint64_t t = rng.uniform_int(j + 1);
    const bool have_t =
        std::find(chosen.begin(), chosen.end(), t) != chosen.end();
    chosen.push_back(have_t ? j : t);
  }
  for (const auto g : chosen) {
    const auto it = std::upper_bound(prefix.begin(), prefix.end(), g);
    const auto cat = static_cast<std::uint32_t>(it - prefix.begin() - 1);
    bits.rows[cat].push_back(static_cast<std::uint32_t>(g - prefix[cat]));
  }
  for (auto& row : bits.rows) std::sort(row.begin(), row.end());
  return bits;
}

}  // namespace

NullResult null_trials(double density_v, double density_b,
                       const Catalog& catalog, std::size_t n_trials,
                       std::uint64_t seed, unsigned workers) {
  if (density_v < 0 || density_v > 1 || density_b < 0 || density_b > 1)
    throw ValidationError("null trials: densities must be in [0,1]");
  if (n_trials == 0) throw ValidationError("null trials: need trials");
  const std::uint64_t total = catalog.total_items();
  const auto k_of = [&](double d) {
    return static_cast<std::uint64_t>(
        std::llround(d * static_cast<double>(total)));
  };
  NullResult result;
  result.trials = n_trials;
  result.items_per_trial_v = std::min(k_of(density_v), total);
  result.items_per_trial_b = std::min(k_of(density_b), total);

  std::vector<std::uint64_t> prefix(catalog.category_count() + 1, 0);
  for (std::uint32_t c = 0; c < catalog.category_count(); ++c)
    prefix[c + 1] = prefix[c] + catalog.items_in(c);

  std::vector<RecommendationSet> trials(n_trials);
  parallel_for(n_trials, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      Rng rng(Rng::derive(seed, t));
      RecommendationSet set;
      set.segment = 0;
      set.items_v = result.items_per_trial_v == 0
                        ? SparseBits{std::vector<std::vector<std::uint32_t>>(
                              catalog.category_count())}
                        : random_item_set(result.items_per_trial_v, catalog,
                                          prefix, rng);
      set.items_b = result.items_per_trial_b == 0
                        ? SparseBits{std::vector<std::vector<std::uint32_t>>(
                              catalog.category_count())}
                        : random_item_set(result.items_per_trial_b, catalog,
                                          prefix, rng);
      trials[t] = std::move(set);
    }
  });
  result.cvr = cvr_result(trials);
  result.jaccard = jaccard_result(trials);
  return result;
}

// ---- report ----

double mean_cvr(const std::vector<SegmentRow>& rows) {
  if (rows.empty()) throw ContractViolation("report: no segment rows");
  double sum = 0;
  for (const auto& row : rows) sum += row.cvr;
  return sum / static_cast<double>(rows.size());
}

std::string render_report_text(const std::vector<SegmentRow>& rows,
                               const BenchmarkConstants& bench) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%4s %9s %8s %8s %9s %8s %9s %7s %7s %6s %6s\n",
                "seg", "#I", "#C", "CVR", "CVR_rn", "J_c", "J_c_rn", "N",
                "null", "skipC", "skipJ");
  out += buf;
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf,
                  "%4u %9.1f %8.1f %8.3f %9.4f %8.2f %9.2f %7zu %7zu %6zu %6zu\n",
                  row.segment, row.mean_items, row.mean_categories, row.cvr,
                  row.cvr_rn, row.jc, row.jc_rn, row.n_realizations,
                  row.n_null_trials, row.cvr_skipped, row.jc_skipped);
    out += buf;
  }
  std::snprintf(buf, sizeof buf,
                "mean CVR %.3f | industry avg %.3f | product avg %.3f\n",
                mean_cvr(rows), bench.industry, bench.product);
  out += buf;
  return out;
}

std::string render_report_json(const std::vector<SegmentRow>& rows,
                               const BenchmarkConstants& bench) {
  nlohmann::ordered_json doc;
  doc["segments"] = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json seg;
    seg["segment"] = row.segment;
    seg["mean_items"] = row.mean_items;
    seg["mean_categories"] = row.mean_categories;
    seg["cvr"] = row.cvr;
    seg["cvr_rn"] = row.cvr_rn;
    seg["jc"] = row.jc;
    seg["jc_rn"] = row.jc_rn;
    seg["realizations"] = row.n_realizations;
    seg["null_trials"] = row.n_null_trials;
    seg["cvr_skipped"] = row.cvr_skipped;
    seg["jc_skipped"] = row.jc_skipped;
    doc["segments"].push_back(std::move(seg));
  }
  doc["benchmark"]["gan_mean_cvr"] = mean_cvr(rows);
  doc["benchmark"]["industry"] = bench.industry;
  doc["benchmark"]["product"] = bench.product;
  doc["benchmark"]["source"] = bench.source;
  return doc.dump(2) + "\n";
}

}  // namespace recgan
