#include "recgan/events.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>

namespace recgan {

namespace {

// Splits on commas in place; returns field views into `line`.
std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

bool parse_i64(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

bool numeric_first_field(std::string_view line) {
  const std::size_t comma = line.find(',');
  std::int64_t dummy;
  return parse_i64(line.substr(0, comma), dummy);
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::ViewAdd:
      return "view_add";
    case Scheme::AddBuy:
      return "add_buy";
    case Scheme::ViewBuy:
      return "view_buy";
  }
  return "?";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "view_add") return Scheme::ViewAdd;
  if (name == "add_buy") return Scheme::AddBuy;
  if (name == "view_buy") return Scheme::ViewBuy;
  throw ValidationError("unknown scheme: " + name);
}

std::size_t SparseBits::nonzero_count() const {
  std::size_t n = 0;
  for (const auto& row : rows) n += row.size();
  return n;
}

EventLog parse_events(std::istream& source) {
  EventLog log;
  std::string line;
  bool first = true;
  while (std::getline(source, line)) {
    strip_cr(line);
    if (first) {
      first = false;
      if (!line.empty() && !numeric_first_field(line)) continue;  // header
    }
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() < 4) {
      ++log.skipped_lines;
      continue;
    }
    RawEvent ev;
    if (!parse_i64(fields[0], ev.timestamp_ms) || ev.timestamp_ms < 0) {
      ++log.skipped_lines;
      continue;
    }
    ev.visitor_id = std::string(fields[1]);
    if (fields[2] == "view") {
      ev.kind = EventKind::View;
    } else if (fields[2] == "addtocart") {
      ev.kind = EventKind::AddToCart;
    } else if (fields[2] == "transaction") {
      ev.kind = EventKind::Transaction;
    } else {
      ++log.skipped_lines;
      continue;
    }
    ev.item_id = std::string(fields[3]);
    if (ev.visitor_id.empty() || ev.item_id.empty()) {
      ++log.skipped_lines;
      continue;
    }
    log.events.push_back(std::move(ev));
  }
  if (source.bad()) throw IoError("event source stream failed mid-read");
  return log;
}

Catalog::Catalog(std::vector<std::string> categories,
                 std::vector<std::vector<std::string>> items)
    : categories_(std::move(categories)), items_(std::move(items)) {
  if (categories_.size() != items_.size())
    throw ContractViolation("catalog: category/item list size mismatch");
  for (std::uint32_t c = 0; c < categories_.size(); ++c) {
    category_index_.emplace(categories_[c], c);
    for (std::uint32_t i = 0; i < items_[c].size(); ++i) {
      const auto [it, inserted] =
          item_index_.emplace(items_[c][i], ItemRef{c, i});
      if (!inserted)
        throw ValidationError("item listed under two categories: " +
                              items_[c][i]);
      (void)it;
    }
    total_items_ += items_[c].size();
  }
}

const Catalog::ItemRef* Catalog::find_item(const std::string& item_id) const {
  const auto it = item_index_.find(item_id);
  return it == item_index_.end() ? nullptr : &it->second;
}

const std::uint32_t* Catalog::find_category(
    const std::string& category_id) const {
  const auto it = category_index_.find(category_id);
  return it == category_index_.end() ? nullptr : &it->second;
}

std::vector<std::uint32_t> Catalog::row_sizes() const {
  std::vector<std::uint32_t> sizes(categories_.size());
  for (std::size_t c = 0; c < categories_.size(); ++c)
    sizes[c] = static_cast<std::uint32_t>(items_[c].size());
  return sizes;
}

std::uint64_t Catalog::content_hash() const {
  Fnv1a64 h;
  for (std::uint32_t c = 0; c < categories_.size(); ++c) {
    h.update(categories_[c]);
    h.update("\x1f", 1);
    for (const auto& item : items_[c]) {
      h.update(item);
      h.update("\x1e", 1);
    }
    h.update("\n", 1);
  }
  return h.digest();
}

Catalog build_catalog(std::istream& source) {
  // item -> category, detecting conflicts as we read
  std::map<std::string, std::string> item_to_category;
  std::string line;
  bool first = true;
  while (std::getline(source, line)) {
    strip_cr(line);
    if (first) {
      first = false;
      if (!line.empty() && !numeric_first_field(line)) continue;  // header
    }
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() < 2 || fields[0].empty() || fields[1].empty())
      throw ValidationError("catalog: malformed line: " + line);
    std::string item(fields[0]);
    std::string category(fields[1]);
    const auto it = item_to_category.find(item);
    if (it != item_to_category.end()) {
      if (it->second != category)
        throw ValidationError("item listed under two categories: " + item);
      continue;
    }
    item_to_category.emplace(std::move(item), std::move(category));
  }
  if (source.bad()) throw IoError("catalog source stream failed mid-read");

  std::map<std::string, std::vector<std::string>> grouped;
  for (const auto& [item, category] : item_to_category)
    grouped[category].push_back(item);
  std::vector<std::string> categories;
  std::vector<std::vector<std::string>> items;
  categories.reserve(grouped.size());
  for (auto& [category, members] : grouped) {
    std::sort(members.begin(), members.end());
    categories.push_back(category);
    items.push_back(std::move(members));
  }
  return Catalog(std::move(categories), std::move(items));
}

std::vector<SegmentAssignment> segment_visitors(const EventLog& log,
                                                const BinEdges& edges) {
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i] <= edges[i - 1])
      throw ValidationError("segment bin edges must be strictly ascending");
  }
  std::map<std::string, std::uint32_t> depth;
  for (const auto& ev : log.events) ++depth[ev.visitor_id];
  std::vector<SegmentAssignment> result;
  result.reserve(depth.size());
  for (const auto& [visitor, d] : depth) {
    int segment = static_cast<int>(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (d < edges[i]) {
        segment = static_cast<int>(i);
        break;
      }
    }
    result.push_back({visitor, d, segment});
  }
  return result;
}

namespace {

std::pair<EventKind, EventKind> scheme_kinds(Scheme scheme) {
  switch (scheme) {
    case Scheme::ViewAdd:
      return {EventKind::View, EventKind::AddToCart};
    case Scheme::AddBuy:
      return {EventKind::AddToCart, EventKind::Transaction};
    case Scheme::ViewBuy:
      return {EventKind::View, EventKind::Transaction};
  }
  throw ContractViolation("bad scheme");
}

void insert_sorted_unique(std::vector<std::uint32_t>& row,
                          std::uint32_t value) {
  const auto it = std::lower_bound(row.begin(), row.end(), value);
  if (it == row.end() || *it != value) row.insert(it, value);
}

}  // namespace

BuildMatricesResult build_matrices(
    const EventLog& log, const Catalog& catalog, Scheme scheme,
    const std::vector<SegmentAssignment>& assignments) {
  const auto [first_kind, second_kind] = scheme_kinds(scheme);
  std::map<std::string, int> segment_of;
  for (const auto& a : assignments) segment_of[a.visitor_id] = a.segment;

  struct Acc {
    SparseBits v, b;
    bool has_v = false, has_b = false;
  };
  const std::uint32_t r = catalog.category_count();
  std::map<std::string, Acc> by_visitor;
  BuildMatricesResult result;
  for (const auto& ev : log.events) {
    const bool is_first = ev.kind == first_kind;
    const bool is_second = ev.kind == second_kind;
    if (!is_first && !is_second) continue;
    const auto* ref = catalog.find_item(ev.item_id);
    if (ref == nullptr) {
      ++result.unknown_item_events;
      continue;
    }
    auto& acc = by_visitor[ev.visitor_id];
    if (acc.v.rows.empty()) {
      acc.v.rows.resize(r);
      acc.b.rows.resize(r);
    }
    if (is_first) {
      insert_sorted_unique(acc.v.rows[ref->category], ref->local_index);
      acc.has_v = true;
    }
    if (is_second) {
      insert_sorted_unique(acc.b.rows[ref->category], ref->local_index);
      acc.has_b = true;
    }
  }
  for (auto& [visitor, acc] : by_visitor) {
    if (!acc.has_v || !acc.has_b) continue;
    InteractionMatrixPair pair;
    pair.visitor_id = visitor;
    const auto seg = segment_of.find(visitor);
    if (seg == segment_of.end())
      throw ContractViolation("visitor missing segment assignment: " +
                              visitor);
    pair.segment = seg->second;
    pair.v = std::move(acc.v);
    pair.b = std::move(acc.b);
    result.pairs.push_back(std::move(pair));
  }
  return result;
}

}  // namespace recgan
