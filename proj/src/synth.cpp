#include "recgan/synth.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>

#include "recgan/rng.hpp"

namespace recgan {

void SynthConfig::validate() const {
  if (n_categories == 0 || items_per_category == 0 || n_segments == 0 ||
      visitors_per_segment == 0)
    throw ValidationError("synth: dimensions must be positive");
  if (p_view < 0 || p_view > 1 || p_buy_given_view < 0 ||
      p_buy_given_view > 1)
    throw ValidationError("synth: probabilities must be in [0,1]");
  if (n_segments > bin_edges.size())
    throw ValidationError("synth: more planted segments than depth bins");
  for (std::size_t i = 1; i < bin_edges.size(); ++i)
    if (bin_edges[i] <= bin_edges[i - 1])
      throw ValidationError("synth: bin edges must be strictly ascending");
  if (bin_edges[0] < 2)
    throw ValidationError(
        "synth: first edge below 2 cannot hold paired visitors");
  for (const auto& [first, count] : blocks()) {
    if (count == 0 || first + count > n_categories)
      throw ValidationError("synth: preferred block out of range");
  }
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> SynthConfig::blocks()
    const {
  if (!preferred_blocks.empty()) {
    if (preferred_blocks.size() != n_segments)
      throw ValidationError("synth: need one preferred block per segment");
    return preferred_blocks;
  }
  // equal disjoint partition, remainder to the last block
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  const std::uint32_t per = std::max(1u, n_categories / n_segments);
  for (std::uint32_t s = 0; s < n_segments; ++s) {
    const std::uint32_t first = std::min(s * per, n_categories - 1);
    std::uint32_t count = (s + 1 == n_segments) ? n_categories - first : per;
    count = std::min(count, n_categories - first);
    out.push_back({first, count});
  }
  return out;
}

namespace {

std::string item_name(std::uint32_t category, std::uint32_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "i%04u_%04u", category, index);
  return buf;
}

std::string category_name(std::uint32_t category) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "c%04u", category);
  return buf;
}

}  // namespace

SynthOutput synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthOutput out;

  out.catalog_csv = "item_id,category_id\n";
  for (std::uint32_t c = 0; c < cfg.n_categories; ++c)
    for (std::uint32_t i = 0; i < cfg.items_per_category; ++i)
      out.catalog_csv += item_name(c, i) + "," + category_name(c) + "\n";

  out.events_csv = "timestamp,visitor_id,event,item_id\n";
  out.truth.visitors_with_both.assign(cfg.n_segments, 0);
  out.truth.expected_cvr = synth_oracle_cvr(cfg);

  const auto blocks = cfg.blocks();
  std::int64_t clock = 1000;
  auto emit = [&](const std::string& visitor, const char* kind,
                  const std::string& item) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%" PRId64, clock);
    clock += 1000;
    out.events_csv += std::string(buf) + "," + visitor + "," + kind + "," +
                      item + "\n";
    ++out.truth.total_events;
  };

  const std::uint32_t n_bins = static_cast<std::uint32_t>(cfg.bin_edges.size());
  for (std::uint32_t s = 0; s < cfg.n_segments; ++s) {
    // Planted segments occupy the top depth bins (bin 0 cannot hold a
    // paired visitor): planted s maps to model segment
    // s + 1 + (n_bins - n_segments). The top bin is unbounded above, so
    // its visitors scan their whole block.
    const std::uint32_t model_seg = s + 1 + (n_bins - cfg.n_segments);
    const std::uint32_t depth_lo = cfg.bin_edges[model_seg - 1];
    const bool top_bin = model_seg == n_bins;
    const std::uint32_t depth_cap =
        top_bin ? UINT32_MAX : cfg.bin_edges[model_seg] - 1;
    out.truth.model_segments.push_back(static_cast<int>(model_seg));

    const auto [block_first, block_count] = blocks[s];
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pool;
    for (std::uint32_t c = block_first; c < block_first + block_count; ++c)
      for (std::uint32_t i = 0; i < cfg.items_per_category; ++i)
        pool.push_back({c, i});

    for (std::uint32_t v = 0; v < cfg.visitors_per_segment; ++v) {
      char vbuf[32];
      std::snprintf(vbuf, sizeof vbuf, "v%02u_%05u", s, v);
      const std::string visitor = vbuf;
      Rng rng(
          Rng::derive(cfg.seed, (static_cast<std::uint64_t>(s) << 32) | v));

      auto order = pool;
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_int(i)]);

      std::vector<std::uint32_t> views_in_cat(cfg.n_categories, 0);
      std::uint32_t depth = 0;
      std::uint32_t buys = 0;
      std::string first_view;
      // Scan items in random order; each scanned item is viewed with
      // p_view and each viewed item bought with p_buy_given_view. Stop
      // before a view+buy could overflow the depth bin.
      for (const auto& [c, i] : order) {
        if (!top_bin && depth + 2 > depth_cap) break;
        if (views_in_cat[c] >= cfg.max_views_per_category) continue;
        if (!rng.bernoulli(cfg.p_view)) continue;
        const std::string item = item_name(c, i);
        emit(visitor, "view", item);
        ++views_in_cat[c];
        ++depth;
        ++out.truth.total_view_items;
        if (first_view.empty()) first_view = item;
        if (rng.bernoulli(cfg.p_buy_given_view)) {
          emit(visitor, "transaction", item);
          ++depth;
          ++buys;
          ++out.truth.total_buy_items;
        }
      }
      // Pad with repeat views up to the bin's lower edge; repeats raise
      // click depth without changing the interaction matrices.
      if (first_view.empty()) {
        const auto& [c, i] = pool[rng.uniform_int(pool.size())];
        first_view = item_name(c, i);
        emit(visitor, "view", first_view);
        ++depth;
        ++out.truth.total_view_items;
      }
      while (depth < depth_lo) {
        emit(visitor, "view", first_view);
        ++depth;
      }
      if (buys > 0) ++out.truth.visitors_with_both[s];
    }
  }
  return out;
}

double synth_oracle_cvr(const SynthConfig& cfg) {
  return 100.0 * cfg.p_buy_given_view;
}

}  // namespace recgan
