#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "recgan/eval.hpp"
#include "recgan/rng.hpp"
#include "support/metric_oracle.hpp"
#include "support/null_oracle.hpp"

using namespace recgan;

namespace {

Catalog uniform_catalog(std::uint32_t cats, std::uint32_t items) {
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> members;
  for (std::uint32_t c = 0; c < cats; ++c) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "c%03u", c);
    names.emplace_back(buf);
    std::vector<std::string> row;
    for (std::uint32_t i = 0; i < items; ++i) {
      std::snprintf(buf, sizeof buf, "i%03u_%03u", c, i);
      row.emplace_back(buf);
    }
    members.push_back(std::move(row));
  }
  return Catalog(std::move(names), std::move(members));
}

RecommendationSet make_set(std::uint32_t r,
                           std::vector<std::vector<std::uint32_t>> v,
                           std::vector<std::vector<std::uint32_t>> b) {
  RecommendationSet set;
  set.items_v.rows = std::move(v);
  set.items_b.rows = std::move(b);
  set.items_v.rows.resize(r);
  set.items_b.rows.resize(r);
  return set;
}

std::vector<RecommendationSet> random_sets(std::uint32_t r,
                                           std::uint32_t items, std::size_t n,
                                           Rng& rng, double p_v, double p_b) {
  std::vector<RecommendationSet> sets;
  for (std::size_t k = 0; k < n; ++k) {
    RecommendationSet set;
    set.items_v.rows.resize(r);
    set.items_b.rows.resize(r);
    for (std::uint32_t c = 0; c < r; ++c)
      for (std::uint32_t i = 0; i < items; ++i) {
        if (rng.bernoulli(p_v)) set.items_v.rows[c].push_back(i);
        if (rng.bernoulli(p_b)) set.items_b.rows[c].push_back(i);
      }
    sets.push_back(std::move(set));
  }
  return sets;
}

}  // namespace

TEST_CASE("cvr: spec hand examples") {
  // O = {c0}, i_v = {a,b,c,d}, i_b = {b,c} -> 50.0
  const auto set = make_set(2, {{0, 1, 2, 3}}, {{1, 2}});
  CHECK(cvr({set}) == doctest::Approx(50.0));

  // i_v = i_b non-empty -> 100
  const auto full = make_set(2, {{0, 1}, {2}}, {{0, 1}, {2}});
  CHECK(cvr({full}) == doctest::Approx(100.0));

  // restriction to overlap categories: buys in a non-viewed category are
  // outside O and do not dilute
  const auto mixed = make_set(3, {{0, 1}, {}, {}}, {{0}, {5}, {}});
  CHECK(cvr({mixed}) == doctest::Approx(50.0));
}

TEST_CASE("jaccard: spec hand examples") {
  // c_v = {A,B,C}, c_b = {B,C,D} -> 2/4 = 50
  const auto set =
      make_set(4, {{0}, {0}, {0}, {}}, {{}, {0}, {0}, {0}});
  CHECK(jaccard({set}) == doctest::Approx(50.0));

  const auto same = make_set(3, {{1}, {2}, {}}, {{3}, {4}, {}});
  CHECK(jaccard({same}) == doctest::Approx(100.0));

  const auto disjoint = make_set(3, {{1}, {}, {}}, {{}, {1}, {}});
  CHECK(jaccard({disjoint}) == doctest::Approx(0.0));
}

TEST_CASE("skip rules and undefined metrics") {
  const auto empty = make_set(3, {}, {});
  const auto viewed_only = make_set(3, {{0, 1}}, {});
  CHECK_THROWS_AS(cvr({empty, viewed_only}), UndefinedMetric);
  const auto r = cvr_result({empty, viewed_only});
  CHECK_FALSE(r.defined());
  CHECK(r.skipped == 2);
  CHECK(r.percent == 0.0);

  // jaccard: viewed-only realization still contributes (J = 0)
  CHECK(jaccard({viewed_only}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(jaccard({empty}), UndefinedMetric);

  // skip accounting: contributing + skipped = N
  const auto contributing = make_set(3, {{0}}, {{0}});
  const auto mix = cvr_result({empty, contributing, viewed_only});
  CHECK(mix.contributing + mix.skipped == 3);
  CHECK(mix.contributing == 1);
}

TEST_CASE("metrics agree exactly with the brute-force rational oracle") {
  Rng rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::uint32_t r = 1 + static_cast<std::uint32_t>(rng.uniform_int(5));
    const std::uint32_t items =
        1 + static_cast<std::uint32_t>(rng.uniform_int(6));
    const std::size_t n = 1 + rng.uniform_int(4);
    const auto sets = random_sets(r, items, n, rng, 0.3 * rng.uniform(),
                                  0.3 * rng.uniform());
    const auto got_cvr = cvr_result(sets);
    const auto want_cvr = metric_oracle::cvr(sets);
    CHECK(got_cvr.defined() == want_cvr.defined);
    CHECK(got_cvr.contributing == want_cvr.contributing);
    CHECK(got_cvr.skipped == want_cvr.skipped);
    if (want_cvr.defined) {
      CHECK(got_cvr.percent == want_cvr.percent);  // exact, zero tolerance
      CHECK(got_cvr.percent >= 0.0);
      CHECK(got_cvr.percent <= 100.0);
    }
    const auto got_j = jaccard_result(sets);
    const auto want_j = metric_oracle::jaccard(sets);
    CHECK(got_j.defined() == want_j.defined);
    if (want_j.defined) {
      CHECK(got_j.percent == want_j.percent);
      CHECK(got_j.percent >= 0.0);
      CHECK(got_j.percent <= 100.0);
    }
  }
}

TEST_CASE("density: trivial cases and counting oracle") {
  const Catalog catalog = uniform_catalog(4, 25);  // 100 items
  const auto empty = make_set(4, {}, {});
  const auto [dv0, db0] = density({empty}, catalog);
  CHECK(dv0 == 0.0);
  CHECK(db0 == 0.0);

  const auto one = make_set(4, {{7}}, {});
  const auto [dv1, db1] = density({one}, catalog);
  CHECK(dv1 == doctest::Approx(1.0 / 100.0));
  CHECK(db1 == 0.0);

  Rng rng(33);
  const auto sets = random_sets(4, 25, 10, rng, 0.1, 0.05);
  std::uint64_t count_v = 0, count_b = 0;
  for (const auto& s : sets) {
    count_v += s.items_v.nonzero_count();
    count_b += s.items_b.nonzero_count();
  }
  const auto [dv, db] = density(sets, catalog);
  CHECK(dv == doctest::Approx(static_cast<double>(count_v) / 1000.0));
  CHECK(db == doctest::Approx(static_cast<double>(count_b) / 1000.0));
}

TEST_CASE("null trials: zero density reports all-skipped zeros") {
  const Catalog catalog = uniform_catalog(3, 10);
  const auto result = null_trials(0.0, 0.0, catalog, 20, 7);
  CHECK(result.trials == 20);
  CHECK_FALSE(result.cvr.defined());
  CHECK(result.cvr.percent == 0.0);
  CHECK(result.cvr.skipped == 20);
  CHECK_FALSE(result.jaccard.defined());
}

TEST_CASE("null trials are deterministic and worker-count independent") {
  const Catalog catalog = uniform_catalog(6, 20);
  const auto a = null_trials(0.05, 0.03, catalog, 50, 99, 1);
  const auto b = null_trials(0.05, 0.03, catalog, 50, 99, 4);
  CHECK(a.cvr.percent == b.cvr.percent);
  CHECK(a.jaccard.percent == b.jaccard.percent);
  const auto c = null_trials(0.05, 0.03, catalog, 50, 100, 1);
  CHECK(a.cvr.percent != c.cvr.percent);
}

TEST_CASE("null CVR matches the single-category hypergeometric closed form") {
  // one big category: E[fraction] = k_b / total exactly
  const std::uint64_t total = 10000;
  const Catalog catalog = uniform_catalog(1, total);
  const double p_v = 0.02, p_b = 0.01;
  const std::size_t trials = 500;
  const auto result = null_trials(p_v, p_b, catalog, trials, 4242, 4);
  REQUIRE(result.cvr.defined());
  CHECK(result.cvr.contributing == trials);

  const auto cm = null_oracle::cvr_moments_single_category(
      total, result.items_per_trial_v, result.items_per_trial_b);
  const double sigma_mean =
      std::sqrt(cm.variance / static_cast<double>(trials));
  CHECK(std::abs(result.cvr.percent / 100.0 - cm.mean) <= 3 * sigma_mean);
}

TEST_CASE("null Jaccard matches the exact occupancy closed form") {
  const std::uint64_t r = 20, n_c = 40;
  const Catalog catalog = uniform_catalog(r, n_c);
  const std::uint64_t k_v = 25, k_b = 15;
  const double p_v = static_cast<double>(k_v) / (r * n_c);
  const double p_b = static_cast<double>(k_b) / (r * n_c);
  const std::size_t trials = 500;
  const auto result = null_trials(p_v, p_b, catalog, trials, 777, 4);
  REQUIRE(result.items_per_trial_v == k_v);
  REQUIRE(result.items_per_trial_b == k_b);
  REQUIRE(result.jaccard.defined());

  const auto jm = null_oracle::jaccard_moments(r, n_c, k_v, k_b);
  const double sigma_mean =
      std::sqrt(jm.variance / static_cast<double>(result.jaccard.contributing));
  CHECK(std::abs(result.jaccard.percent / 100.0 - jm.mean) <= 3 * sigma_mean);
}

TEST_CASE("report: paper values reproduce the published rows and mean") {
  std::vector<SegmentRow> rows(4);
  rows[0] = {1, 1648, 239, 1.763, 0.0005, 8.19, 50.66, 200, 500, 0, 0};
  rows[1] = {2, 2037, 213, 1.414, 0.0004, 7.37, 51.36, 200, 500, 0, 0};
  rows[2] = {3, 2522, 190, 1.323, 0.0005, 6.13, 50.04, 200, 500, 0, 0};
  rows[3] = {4, 1419, 222, 1.644, 0.0004, 7.57, 50.81, 200, 500, 0, 0};

  CHECK(mean_cvr(rows) == doctest::Approx(1.536).epsilon(1e-9));

  const std::string text = render_report_text(rows);
  CHECK(text.find("1.763") != std::string::npos);
  CHECK(text.find("0.0005") != std::string::npos);
  CHECK(text.find("8.19") != std::string::npos);
  CHECK(text.find("50.66") != std::string::npos);
  CHECK(text.find("mean CVR 1.536 | industry avg 2.089 | product avg 1.827")
        != std::string::npos);
}

TEST_CASE("report: single segment mean equals that segment") {
  std::vector<SegmentRow> rows(1);
  rows[0] = {2, 10, 5, 42.5, 0.1, 3.0, 50.0, 7, 11, 1, 0};
  CHECK(mean_cvr(rows) == doctest::Approx(42.5));
}

TEST_CASE("report renders identically from identical inputs (golden)") {
  std::vector<SegmentRow> rows(2);
  rows[0] = {1, 12.5, 3.25, 33.333333333333336, 0.5, 66.66666666666667,
             50.0, 100, 500, 2, 1};
  rows[1] = {2, 8.0, 2.0, 25.0, 0.25, 40.0, 60.0, 100, 500, 0, 0};
  const std::string text1 = render_report_text(rows);
  const std::string text2 = render_report_text(rows);
  CHECK(text1 == text2);

  const std::string golden =
      " seg        #I       #C      CVR    CVR_rn      J_c    J_c_rn       N"
      "    null  skipC  skipJ\n"
      "   1      12.5      3.2   33.333    0.5000    66.67     50.00     100"
      "     500      2      1\n"
      "   2       8.0      2.0   25.000    0.2500    40.00     60.00     100"
      "     500      0      0\n"
      "mean CVR 29.167 | industry avg 2.089 | product avg 1.827\n";
  CHECK(text1 == golden);

  const std::string json = render_report_json(rows);
  CHECK(json.find("\"gan_mean_cvr\"") != std::string::npos);
  CHECK(json.find("\"industry\": 2.089") != std::string::npos);
  CHECK(render_report_json(rows) == json);
}
