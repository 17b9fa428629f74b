#include "recgan/recgen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "recgan/rng.hpp"

namespace recgan {

std::vector<std::uint32_t> RecommendationSet::categories_v() const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t c = 0; c < items_v.rows.size(); ++c)
    if (!items_v.rows[c].empty()) out.push_back(c);
  return out;
}

std::vector<std::uint32_t> RecommendationSet::categories_b() const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t c = 0; c < items_b.rows.size(); ++c)
    if (!items_b.rows[c].empty()) out.push_back(c);
  return out;
}

std::vector<std::pair<Tensor<float>, Tensor<float>>> sample_segment(
    CoupledGan<float>& model, std::uint32_t segment, std::size_t n,
    std::uint64_t seed) {
  if (n == 0) throw ContractViolation("sample: need at least one draw");
  if (segment >= model.cfg.n_segments)
    throw ContractViolation("sample: segment out of range");
  Rng rng(seed);
  std::vector<std::pair<Tensor<float>, Tensor<float>>> out;
  out.reserve(n);
  const std::vector<std::uint32_t> y{segment};
  for (std::size_t i = 0; i < n; ++i) {
    Tensor<float> z({1, model.cfg.z_dim});
    for (auto& v : z.data) v = static_cast<float>(rng.normal());
    auto [x1, x2] = generate_batch(model, z, y);
    out.push_back({std::move(x1), std::move(x2)});
  }
  return out;
}

CodedMatrix binarize(const Tensor<float>& x, std::uint32_t r, std::uint32_t w,
                     double threshold) {
  if (x.numel() != static_cast<std::size_t>(r) * w)
    throw ContractViolation("binarize: shape mismatch");
  CodedMatrix m;
  m.width = w;
  m.rows.reserve(r);
  std::size_t at = 0;
  for (std::uint32_t row_idx = 0; row_idx < r; ++row_idx) {
    BitRow row(w);
    for (std::uint32_t b = 0; b < w; ++b, ++at)
      row.set_bit(b, static_cast<double>(x.at(at)) > threshold);
    m.rows.push_back(std::move(row));
  }
  return m;
}

RecommendationSet decode_realization(const CodedMatrix& v,
                                     const CodedMatrix& b,
                                     const Catalog& catalog,
                                     const CodecConfig& cfg,
                                     std::uint32_t segment,
                                     unsigned workers) {
  RecommendationSet set;
  set.segment = segment;
  set.items_v = decode_matrix(v, catalog, cfg, workers);
  set.items_b = decode_matrix(b, catalog, cfg, workers);
  return set;
}

std::vector<std::size_t> subsample_indices(std::size_t n, double fraction,
                                           std::uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0)
    throw ValidationError("subsample fraction must be in (0,1]");
  const std::size_t k = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(n)));
  if (k >= n) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  // Floyd's sampling, then sort to preserve input order.
  Rng rng(seed);
  std::vector<std::size_t> chosen;
  std::vector<bool> picked(n, false);
  for (std::size_t j = n - k; j < n; ++j) {
    const std::size_t t = rng.uniform_int(j + 1);
    if (picked[t]) {
      picked[j] = true;
      chosen.push_back(j);
    } else {
      picked[t] = true;
      chosen.push_back(t);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

void write_realizations(std::ostream& out,
                        const std::vector<RecommendationSet>& sets,
                        const Catalog& catalog) {
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const auto& set = sets[k];
    out << "R seg=" << set.segment << " idx=" << k << "\n";
    auto dump = [&](const char* tag, const SparseBits& bits) {
      for (std::uint32_t c = 0; c < bits.rows.size(); ++c) {
        if (bits.rows[c].empty()) continue;
        out << tag << " cat=" << catalog.category_id(c) << " items=";
        for (std::size_t i = 0; i < bits.rows[c].size(); ++i) {
          if (i > 0) out << ';';
          out << catalog.item_id(c, bits.rows[c][i]);
        }
        out << "\n";
      }
    };
    dump("V", set.items_v);
    dump("B", set.items_b);
  }
  if (!out) throw IoError("realization dump: write failed");
}

std::vector<RecommendationSet> read_realizations(std::istream& in,
                                                 const Catalog& catalog) {
  std::vector<RecommendationSet> sets;
  std::string line;
  const std::uint32_t r = catalog.category_count();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "R") {
      RecommendationSet set;
      std::string field;
      while (ls >> field) {
        if (field.rfind("seg=", 0) == 0)
          set.segment = static_cast<std::uint32_t>(
              std::stoul(field.substr(4)));
      }
      set.items_v.rows.resize(r);
      set.items_b.rows.resize(r);
      sets.push_back(std::move(set));
    } else if (tag == "V" || tag == "B") {
      if (sets.empty())
        throw ValidationError("realization dump: item line before R line");
      std::string field, cat_id, items;
      while (ls >> field) {
        if (field.rfind("cat=", 0) == 0) cat_id = field.substr(4);
        if (field.rfind("items=", 0) == 0) items = field.substr(6);
      }
      const auto* cat = catalog.find_category(cat_id);
      if (cat == nullptr)
        throw ValidationError("realization dump: unknown category " + cat_id);
      auto& rows =
          (tag == "V") ? sets.back().items_v.rows : sets.back().items_b.rows;
      std::size_t start = 0;
      while (start <= items.size() && !items.empty()) {
        const std::size_t sep = items.find(';', start);
        const std::string item_id =
            items.substr(start, sep == std::string::npos ? std::string::npos
                                                         : sep - start);
        const auto* ref = catalog.find_item(item_id);
        if (ref == nullptr || ref->category != *cat)
          throw ValidationError("realization dump: bad item " + item_id);
        rows[*cat].push_back(ref->local_index);
        if (sep == std::string::npos) break;
        start = sep + 1;
      }
      std::sort(rows[*cat].begin(), rows[*cat].end());
    } else {
      throw ValidationError("realization dump: unknown line tag " + tag);
    }
  }
  if (in.bad()) throw IoError("realization dump: read failed");
  return sets;
}

}  // namespace recgan
