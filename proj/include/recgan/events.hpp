#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "recgan/common.hpp"

namespace recgan {

enum class EventKind { View, AddToCart, Transaction };

struct RawEvent {
  std::int64_t timestamp_ms = 0;
  std::string visitor_id;
  EventKind kind = EventKind::View;
  std::string item_id;
};

struct EventLog {
  std::vector<RawEvent> events;
  std::size_t skipped_lines = 0;  // malformed lines dropped during parsing
};

// Item/category hierarchy with the canonical bit order: categories sorted
// lexicographically, items sorted lexicographically within their category.
// A local item index is the item's bit position inside its category row.
class Catalog {
 public:
  struct ItemRef {
    std::uint32_t category = 0;
    std::uint32_t local_index = 0;
  };

  Catalog() = default;
  Catalog(std::vector<std::string> categories,
          std::vector<std::vector<std::string>> items);

  std::uint32_t category_count() const {
    return static_cast<std::uint32_t>(categories_.size());
  }
  std::uint32_t items_in(std::uint32_t category) const {
    return static_cast<std::uint32_t>(items_[category].size());
  }
  std::uint64_t total_items() const { return total_items_; }
  const std::string& category_id(std::uint32_t category) const {
    return categories_[category];
  }
  const std::string& item_id(std::uint32_t category,
                             std::uint32_t local_index) const {
    return items_[category][local_index];
  }
  const std::vector<std::string>& category_ids() const { return categories_; }

  const ItemRef* find_item(const std::string& item_id) const;
  const std::uint32_t* find_category(const std::string& category_id) const;

  // Row sizes n_c in category order; what the codec needs.
  std::vector<std::uint32_t> row_sizes() const;

  // Hash of the canonical serialization; binds coded tensors to this
  // catalog.
  std::uint64_t content_hash() const;

 private:
  std::vector<std::string> categories_;
  std::vector<std::vector<std::string>> items_;
  std::unordered_map<std::string, ItemRef> item_index_;
  std::unordered_map<std::string, std::uint32_t> category_index_;
  std::uint64_t total_items_ = 0;
};

struct SegmentAssignment {
  std::string visitor_id;
  std::uint32_t click_depth = 0;
  int segment = 0;
};

enum class Scheme { ViewAdd, AddBuy, ViewBuy };

const char* scheme_name(Scheme s);
Scheme parse_scheme(const std::string& name);

// Per-category sorted unique local item indices; one entry per catalog
// category.
struct SparseBits {
  std::vector<std::vector<std::uint32_t>> rows;

  bool operator==(const SparseBits&) const = default;
  std::size_t nonzero_count() const;
  bool empty() const { return nonzero_count() == 0; }
};

// Paired binary interaction matrices for one visitor. `v` marks the first
// behavior of the scheme, `b` the second.
struct InteractionMatrixPair {
  std::string visitor_id;
  int segment = 0;
  SparseBits v;
  SparseBits b;
};

struct BuildMatricesResult {
  std::vector<InteractionMatrixPair> pairs;  // sorted by visitor id
  std::size_t unknown_item_events = 0;
};

using BinEdges = std::array<std::uint32_t, 4>;
inline constexpr BinEdges kDefaultBinEdges{2, 4, 8, 16};

// Reads `timestamp,visitor_id,event,item_id` lines. An optional header is
// detected by a non-numeric first field; malformed lines are skipped and
// counted. Extra trailing fields are ignored.
EventLog parse_events(std::istream& source);

// Reads `item_id,category_id` lines, same header rule. An item listed
// under two categories is a fatal validation error.
Catalog build_catalog(std::istream& source);

// Click depth = total event count per visitor; segment = index of the
// first edge exceeding the depth, 4 when none. Output sorted by visitor.
std::vector<SegmentAssignment> segment_visitors(const EventLog& log,
                                                const BinEdges& edges);

// One pair per visitor having at least one event of each behavior in the
// scheme; events whose item is missing from the catalog are skipped and
// counted.
BuildMatricesResult build_matrices(
    const EventLog& log, const Catalog& catalog, Scheme scheme,
    const std::vector<SegmentAssignment>& assignments);

}  // namespace recgan
