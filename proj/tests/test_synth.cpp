#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "recgan/rng.hpp"
#include "recgan/synth.hpp"

using namespace recgan;

namespace {

EventLog parse(const std::string& text) {
  std::istringstream in(text);
  return parse_events(in);
}

}  // namespace

TEST_CASE("deterministic limit: p_view=1, p_buy=1, one visitor, two items") {
  SynthConfig cfg;
  cfg.n_categories = 1;
  cfg.items_per_category = 2;
  cfg.n_segments = 1;
  cfg.visitors_per_segment = 1;
  cfg.p_view = 1.0;
  cfg.p_buy_given_view = 1.0;
  const auto out = synth_generate(cfg);
  const EventLog log = parse(out.events_csv);
  int views = 0, buys = 0;
  std::set<std::string> viewed, bought;
  for (const auto& ev : log.events) {
    if (ev.kind == EventKind::View) {
      ++views;
      viewed.insert(ev.item_id);
    } else if (ev.kind == EventKind::Transaction) {
      ++buys;
      bought.insert(ev.item_id);
    }
  }
  CHECK(viewed.size() == 2);
  CHECK(bought.size() == 2);
  CHECK(viewed == bought);
  CHECK(out.truth.total_view_items == 2);
  CHECK(out.truth.total_buy_items == 2);
}

TEST_CASE("p_buy_given_view = 0 emits no transactions") {
  SynthConfig cfg;
  cfg.n_categories = 8;
  cfg.items_per_category = 10;
  cfg.n_segments = 2;
  cfg.visitors_per_segment = 20;
  cfg.p_buy_given_view = 0.0;
  const auto out = synth_generate(cfg);
  const EventLog log = parse(out.events_csv);
  for (const auto& ev : log.events)
    CHECK(ev.kind != EventKind::Transaction);
  CHECK(out.truth.total_buy_items == 0);
}

TEST_CASE("every bought item was viewed by the same visitor") {
  SynthConfig cfg;  // defaults: 40x50, 4 segments, 200 visitors
  cfg.visitors_per_segment = 60;
  cfg.seed = 7;
  const auto out = synth_generate(cfg);
  const EventLog log = parse(out.events_csv);
  std::map<std::string, std::set<std::string>> viewed;
  for (const auto& ev : log.events)
    if (ev.kind == EventKind::View) viewed[ev.visitor_id].insert(ev.item_id);
  for (const auto& ev : log.events) {
    if (ev.kind == EventKind::Transaction) {
      // views precede buys of the same item in the event stream
      CHECK(viewed[ev.visitor_id].count(ev.item_id) == 1);
    }
  }
}

TEST_CASE("seeded determinism of generated corpora") {
  SynthConfig cfg;
  cfg.visitors_per_segment = 10;
  cfg.seed = 99;
  const auto a = synth_generate(cfg);
  const auto b = synth_generate(cfg);
  CHECK(a.events_csv == b.events_csv);
  CHECK(a.catalog_csv == b.catalog_csv);
  cfg.seed = 100;
  const auto c = synth_generate(cfg);
  CHECK(a.events_csv != c.events_csv);
}

TEST_CASE("segment assignment under default edges recovers the plant") {
  SynthConfig cfg;
  cfg.visitors_per_segment = 50;
  cfg.seed = 3;
  const auto out = synth_generate(cfg);
  const EventLog log = parse(out.events_csv);
  const auto segs = segment_visitors(log, cfg.bin_edges);
  for (const auto& s : segs) {
    // visitor ids carry their planted segment: v<ss>_<iiiii>
    const int planted = std::stoi(s.visitor_id.substr(1, 2));
    CHECK(s.segment == out.truth.model_segments[planted]);
  }
  // segment 0 stays empty, mirroring the paired-data constraint
  for (const auto& s : segs) CHECK(s.segment >= 1);
}

TEST_CASE("per-category views never exceed the cap") {
  SynthConfig cfg;
  cfg.visitors_per_segment = 80;
  cfg.seed = 5;
  const auto out = synth_generate(cfg);
  const EventLog log = parse(out.events_csv);
  std::map<std::string, std::map<std::string, std::set<std::string>>>
      views_by_visitor_cat;
  for (const auto& ev : log.events) {
    if (ev.kind != EventKind::View) continue;
    const std::string cat = ev.item_id.substr(1, 4);
    views_by_visitor_cat[ev.visitor_id][cat].insert(ev.item_id);
  }
  for (const auto& [visitor, cats] : views_by_visitor_cat)
    for (const auto& [cat, items] : cats)
      CHECK(items.size() <= cfg.max_views_per_category);
}

TEST_CASE("empirical buy/view ratio within 3 sigma at the desk-scale shape") {
  SynthConfig cfg;  // 40x50, 4 segments, 200 visitors/segment, 0.3 / 0.5
  cfg.seed = 11;
  const auto out = synth_generate(cfg);
  // each distinct viewed item is bought independently with p = 0.5
  const double n = static_cast<double>(out.truth.total_view_items);
  REQUIRE(n > 1000);
  const double ratio = static_cast<double>(out.truth.total_buy_items) / n;
  const double sigma = std::sqrt(0.5 * 0.5 / n);
  CHECK(std::abs(ratio - 0.5) <= 3 * sigma);
}

TEST_CASE("oracle cvr definition and trivial cases") {
  SynthConfig cfg;
  cfg.p_buy_given_view = 0.5;
  CHECK(synth_oracle_cvr(cfg) == doctest::Approx(50.0));
  cfg.p_buy_given_view = 0.0;
  CHECK(synth_oracle_cvr(cfg) == doctest::Approx(0.0));
}

TEST_CASE("Monte-Carlo planted process matches the closed form within 3 sigma") {
  // simulate the per-item conditional directly and compare the pooled
  // bought/viewed fraction to the closed form
  SynthConfig cfg;
  cfg.p_buy_given_view = 0.35;
  Rng rng(17);
  std::uint64_t views = 0, buys = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    if (!rng.bernoulli(cfg.p_view)) continue;
    ++views;
    if (rng.bernoulli(cfg.p_buy_given_view)) ++buys;
  }
  const double ratio = static_cast<double>(buys) / static_cast<double>(views);
  const double p = cfg.p_buy_given_view;
  const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(views));
  CHECK(std::abs(ratio - synth_oracle_cvr(cfg) / 100.0) <= 3 * sigma);

  // and the generator's own output obeys the same law
  cfg.visitors_per_segment = 100;
  cfg.seed = 23;
  const auto out = synth_generate(cfg);
  const double n2 = static_cast<double>(out.truth.total_view_items);
  const double r2 = static_cast<double>(out.truth.total_buy_items) / n2;
  const double s2 = std::sqrt(p * (1 - p) / n2);
  CHECK(std::abs(r2 - p) <= 3 * s2);
}

TEST_CASE("configs are validated") {
  SynthConfig cfg;
  cfg.p_view = 1.5;
  CHECK_THROWS_AS(synth_generate(cfg), ValidationError);
  cfg = SynthConfig{};
  cfg.n_segments = 5;  // more planted segments than depth bins
  CHECK_THROWS_AS(synth_generate(cfg), ValidationError);
  cfg = SynthConfig{};
  cfg.preferred_blocks = {{0, 10}, {10, 10}, {20, 10}, {38, 10}};  // overflow
  CHECK_THROWS_AS(synth_generate(cfg), ValidationError);
}
