#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "recgan/events.hpp"
#include "recgan/rng.hpp"

using namespace recgan;

namespace {

EventLog parse(const std::string& text) {
  std::istringstream in(text);
  return parse_events(in);
}

Catalog catalog_of(const std::string& text) {
  // string item ids are non-numeric, so the fixture needs the header the
  // auto-detection will consume
  std::istringstream in("item_id,category_id\n" + text);
  return build_catalog(in);
}

}  // namespace

TEST_CASE("single well-formed line") {
  const EventLog log = parse("1000,u1,view,i7\n");
  REQUIRE(log.events.size() == 1);
  CHECK(log.events[0].timestamp_ms == 1000);
  CHECK(log.events[0].visitor_id == "u1");
  CHECK(log.events[0].kind == EventKind::View);
  CHECK(log.events[0].item_id == "i7");
  CHECK(log.skipped_lines == 0);
}

TEST_CASE("empty input") {
  const EventLog log = parse("");
  CHECK(log.events.empty());
  CHECK(log.skipped_lines == 0);
}

TEST_CASE("unknown event kind is skipped and counted") {
  const EventLog log = parse(
      "1,u1,view,i1\n"
      "2,u1,addtocart,i1\n"
      "3,u2,foo,i2\n"
      "4,u2,transaction,i2\n");
  CHECK(log.events.size() == 3);
  CHECK(log.skipped_lines == 1);
}

TEST_CASE("header is auto-detected, extra fields ignored") {
  const EventLog with_header = parse(
      "timestamp,visitor_id,event,item_id\n"
      "5,u1,view,i1\n");
  CHECK(with_header.events.size() == 1);
  CHECK(with_header.skipped_lines == 0);

  const EventLog retailrocket_shape = parse("5,u1,transaction,i1,9999\n");
  CHECK(retailrocket_shape.events.size() == 1);
}

TEST_CASE("malformed lines: bad timestamp, short line, negative time") {
  const EventLog log = parse(
      "1,u1,view,i1\n"
      "notatime,u1,view,i1\n"
      "2,u1,view\n"
      "-5,u1,view,i1\n"
      "3,,view,i1\n");
  CHECK(log.events.size() == 1);
  CHECK(log.skipped_lines == 4);
}

TEST_CASE("catalog direct construction") {
  const Catalog c = catalog_of("i1,cA\ni2,cA\ni3,cB\n");
  CHECK(c.category_count() == 2);
  CHECK(c.category_id(0) == "cA");
  CHECK(c.category_id(1) == "cB");
  CHECK(c.items_in(0) == 2);
  CHECK(c.items_in(1) == 1);
  CHECK(c.total_items() == 3);
  const auto* ref = c.find_item("i2");
  REQUIRE(ref != nullptr);
  CHECK(ref->category == 0);
  CHECK(ref->local_index == 1);
}

TEST_CASE("item under two categories is fatal") {
  CHECK_THROWS_AS(catalog_of("i1,cA\ni1,cB\n"), ValidationError);
  // identical duplicate line is tolerated
  const Catalog c = catalog_of("i1,cA\ni1,cA\n");
  CHECK(c.total_items() == 1);
}

TEST_CASE("catalog bit positions match an independent sort oracle") {
  Rng rng(11);
  std::map<std::string, std::string> item_to_cat;
  for (int i = 0; item_to_cat.size() < 10; ++i) {
    item_to_cat.emplace("item" + std::to_string(rng.uniform_int(1000)),
                        "cat" + std::to_string(rng.uniform_int(3)));
  }
  std::string text;
  for (const auto& [item, cat] : item_to_cat) text += item + "," + cat + "\n";
  const Catalog c = catalog_of(text);

  // oracle: independent grouping + ordered sets
  std::map<std::string, std::set<std::string>> grouped;
  for (const auto& [item, cat] : item_to_cat) grouped[cat].insert(item);
  std::uint32_t cat_idx = 0;
  for (const auto& [cat, items] : grouped) {
    CHECK(c.category_id(cat_idx) == cat);
    std::uint32_t local = 0;
    for (const auto& item : items) {
      const auto* ref = c.find_item(item);
      REQUIRE(ref != nullptr);
      CHECK(ref->category == cat_idx);
      CHECK(ref->local_index == local);
      ++local;
    }
    ++cat_idx;
  }
  CHECK(cat_idx == c.category_count());
}

TEST_CASE("catalog determinism: shuffled input, identical hash") {
  const Catalog a = catalog_of("i1,cA\ni2,cA\ni3,cB\n");
  const Catalog b = catalog_of("i3,cB\ni2,cA\ni1,cA\n");
  CHECK(a.content_hash() == b.content_hash());
  const Catalog c = catalog_of("i1,cA\ni2,cA\ni3,cC\n");
  CHECK(a.content_hash() != c.content_hash());
}

TEST_CASE("segment edges") {
  EventLog log;
  auto add = [&](const std::string& v, int n) {
    for (int i = 0; i < n; ++i)
      log.events.push_back({i, v, EventKind::View, "i1"});
  };
  add("low", 1);
  add("deep", 100);
  add("mid", 5);
  const auto segs = segment_visitors(log, kDefaultBinEdges);
  REQUIRE(segs.size() == 3);
  // sorted by visitor id: deep, low, mid
  CHECK(segs[0].visitor_id == "deep");
  CHECK(segs[0].click_depth == 100);
  CHECK(segs[0].segment == 4);
  CHECK(segs[1].visitor_id == "low");
  CHECK(segs[1].segment == 0);
  CHECK(segs[2].visitor_id == "mid");
  CHECK(segs[2].segment == 2);
}

TEST_CASE("non-ascending edges rejected") {
  EventLog log;
  log.events.push_back({0, "u", EventKind::View, "i"});
  CHECK_THROWS_AS(segment_visitors(log, BinEdges{2, 2, 8, 16}),
                  ValidationError);
  CHECK_THROWS_AS(segment_visitors(log, BinEdges{4, 2, 8, 16}),
                  ValidationError);
}

TEST_CASE("segments partition visitors") {
  Rng rng(22);
  EventLog log;
  std::set<std::string> visitors;
  for (int i = 0; i < 500; ++i) {
    const std::string v = "v" + std::to_string(rng.uniform_int(80));
    visitors.insert(v);
    log.events.push_back({i, v, EventKind::View, "i1"});
  }
  const auto segs = segment_visitors(log, kDefaultBinEdges);
  CHECK(segs.size() == visitors.size());
  std::map<int, std::size_t> counts;
  for (const auto& s : segs) {
    CHECK(s.segment >= 0);
    CHECK(s.segment <= 4);
    ++counts[s.segment];
  }
  std::size_t total = 0;
  for (const auto& [seg, n] : counts) total += n;
  CHECK(total == visitors.size());
}

TEST_CASE("one-item session marks both channels identically") {
  const Catalog cat = catalog_of("i1,cA\ni2,cB\n");
  EventLog log;
  log.events.push_back({1, "u1", EventKind::View, "i1"});
  log.events.push_back({2, "u1", EventKind::Transaction, "i1"});
  const auto segs = segment_visitors(log, kDefaultBinEdges);
  const auto result = build_matrices(log, cat, Scheme::ViewBuy, segs);
  REQUIRE(result.pairs.size() == 1);
  const auto& p = result.pairs[0];
  CHECK(p.visitor_id == "u1");
  CHECK(p.v.rows == std::vector<std::vector<std::uint32_t>>{{0}, {}});
  CHECK(p.b.rows == p.v.rows);
}

TEST_CASE("view-only visitor excluded from (view,buy)") {
  const Catalog cat = catalog_of("i1,cA\n");
  EventLog log;
  log.events.push_back({1, "u1", EventKind::View, "i1"});
  log.events.push_back({2, "u1", EventKind::View, "i1"});
  const auto segs = segment_visitors(log, kDefaultBinEdges);
  CHECK(build_matrices(log, cat, Scheme::ViewBuy, segs).pairs.empty());
  // but the same visitor qualifies for (view,add) once there is an add
  log.events.push_back({3, "u1", EventKind::AddToCart, "i1"});
  const auto segs2 = segment_visitors(log, kDefaultBinEdges);
  CHECK(build_matrices(log, cat, Scheme::ViewAdd, segs2).pairs.size() == 1);
}

TEST_CASE("unknown items are skipped and counted") {
  const Catalog cat = catalog_of("i1,cA\n");
  EventLog log;
  log.events.push_back({1, "u1", EventKind::View, "i1"});
  log.events.push_back({2, "u1", EventKind::Transaction, "ghost"});
  const auto segs = segment_visitors(log, kDefaultBinEdges);
  const auto result = build_matrices(log, cat, Scheme::ViewBuy, segs);
  CHECK(result.pairs.empty());  // the only buy was unknown
  CHECK(result.unknown_item_events == 1);
}

TEST_CASE("20-visitor synthetic log matches the event-scan oracle") {
  Rng rng(33);
  std::string catalog_text;
  std::vector<std::string> items;
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < 5; ++i) {
      const std::string id =
          "it" + std::to_string(c) + "_" + std::to_string(i);
      items.push_back(id);
      catalog_text += id + ",cat" + std::to_string(c) + "\n";
    }
  }
  const Catalog cat = catalog_of(catalog_text);

  EventLog log;
  std::int64_t t = 0;
  for (int v = 0; v < 20; ++v) {
    const std::string visitor = "u" + std::to_string(v);
    const int n_events = 1 + static_cast<int>(rng.uniform_int(8));
    for (int e = 0; e < n_events; ++e) {
      const auto kind_draw = rng.uniform_int(3);
      const EventKind kind = kind_draw == 0   ? EventKind::View
                             : kind_draw == 1 ? EventKind::AddToCart
                                              : EventKind::Transaction;
      log.events.push_back(
          {t++, visitor, kind, items[rng.uniform_int(items.size())]});
    }
  }
  const auto segs = segment_visitors(log, kDefaultBinEdges);
  const auto result = build_matrices(log, cat, Scheme::ViewBuy, segs);

  // oracle: brute-force scan of the raw events
  std::set<std::string> should_include;
  std::map<std::string, std::set<std::string>> viewed, bought;
  for (const auto& ev : log.events) {
    if (ev.kind == EventKind::View) viewed[ev.visitor_id].insert(ev.item_id);
    if (ev.kind == EventKind::Transaction)
      bought[ev.visitor_id].insert(ev.item_id);
  }
  for (const auto& [v, items_v] : viewed) {
    if (bought.count(v) && !items_v.empty() && !bought[v].empty())
      should_include.insert(v);
  }
  std::set<std::string> included;
  for (const auto& p : result.pairs) included.insert(p.visitor_id);
  CHECK(included == should_include);

  // contents match the oracle item sets
  for (const auto& p : result.pairs) {
    std::set<std::string> got_v, got_b;
    for (std::uint32_t c = 0; c < cat.category_count(); ++c) {
      for (const auto i : p.v.rows[c]) got_v.insert(cat.item_id(c, i));
      for (const auto i : p.b.rows[c]) got_b.insert(cat.item_id(c, i));
    }
    CHECK(got_v == viewed[p.visitor_id]);
    CHECK(got_b == bought[p.visitor_id]);
  }
}

TEST_CASE("matrices are deterministic across runs") {
  const std::string events_text =
      "3,b,view,i2\n1,a,view,i1\n2,a,transaction,i1\n4,b,transaction,i2\n";
  const std::string catalog_text = "i1,cA\ni2,cB\n";
  auto run = [&] {
    const Catalog cat = catalog_of(catalog_text);
    const EventLog log = parse(events_text);
    const auto segs = segment_visitors(log, kDefaultBinEdges);
    return build_matrices(log, cat, Scheme::ViewBuy, segs);
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.pairs.size() == b.pairs.size());
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK(a.pairs[i].visitor_id == b.pairs[i].visitor_id);
    CHECK(a.pairs[i].v == b.pairs[i].v);
    CHECK(a.pairs[i].b == b.pairs[i].b);
  }
}
