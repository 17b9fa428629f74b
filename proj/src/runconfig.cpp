#include "recgan/runconfig.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace recgan {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ValidationError("config: bad number for " + key + ": " + v);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ValidationError("config: bad integer for " + key + ": " + v);
  return out;
}

std::uint32_t parse_u32(const std::string& key, const std::string& v) {
  const std::uint64_t big = parse_u64(key, v);
  if (big > UINT32_MAX)
    throw ValidationError("config: value out of range for " + key);
  return static_cast<std::uint32_t>(big);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError("config: bad bool for " + key + ": " + v);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  if (v.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = v.find(',', start);
    out.push_back(trim(v.substr(
        start, comma == std::string::npos ? std::string::npos
                                          : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename Int>
std::string join_list(const std::vector<Int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

struct KeyHandler {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<KeyHandler>& key_table() {
  static const std::vector<KeyHandler> table = {
      {"paths.events", [](const RunConfig& c) { return c.events_path; },
       [](RunConfig& c, const std::string& v) { c.events_path = v; }},
      {"paths.catalog", [](const RunConfig& c) { return c.catalog_path; },
       [](RunConfig& c, const std::string& v) { c.catalog_path = v; }},
      {"paths.workdir", [](const RunConfig& c) { return c.workdir; },
       [](RunConfig& c, const std::string& v) { c.workdir = v; }},

      {"ingest.scheme",
       [](const RunConfig& c) { return std::string(scheme_name(c.scheme)); },
       [](RunConfig& c, const std::string& v) { c.scheme = parse_scheme(v); }},
      {"ingest.bin_edges",
       [](const RunConfig& c) {
         return join_list(std::vector<std::uint32_t>(c.bin_edges.begin(),
                                                     c.bin_edges.end()));
       },
       [](RunConfig& c, const std::string& v) {
         const auto parts = split_list(v);
         if (parts.size() != c.bin_edges.size())
           throw ValidationError("config: ingest.bin_edges needs 4 values");
         for (std::size_t i = 0; i < parts.size(); ++i)
           c.bin_edges[i] = parse_u32("ingest.bin_edges", parts[i]);
       }},

      {"codec.width",
       [](const RunConfig& c) { return std::to_string(c.codec.width_w); },
       [](RunConfig& c, const std::string& v) {
         c.codec.width_w = parse_u32("codec.width", v);
       }},
      {"codec.prior_num",
       [](const RunConfig& c) { return std::to_string(c.codec.prior_num); },
       [](RunConfig& c, const std::string& v) {
         c.codec.prior_num = parse_u32("codec.prior_num", v);
       }},
      {"codec.prior_den",
       [](const RunConfig& c) { return std::to_string(c.codec.prior_den); },
       [](RunConfig& c, const std::string& v) {
         c.codec.prior_den = parse_u32("codec.prior_den", v);
       }},

      {"gan.r", [](const RunConfig& c) { return std::to_string(c.gan.r); },
       [](RunConfig& c, const std::string& v) {
         c.gan.r = parse_u32("gan.r", v);
       }},
      {"gan.w", [](const RunConfig& c) { return std::to_string(c.gan.w); },
       [](RunConfig& c, const std::string& v) {
         c.gan.w = parse_u32("gan.w", v);
       }},
      {"gan.z_dim",
       [](const RunConfig& c) { return std::to_string(c.gan.z_dim); },
       [](RunConfig& c, const std::string& v) {
         c.gan.z_dim = parse_u32("gan.z_dim", v);
       }},
      {"gan.n_segments",
       [](const RunConfig& c) { return std::to_string(c.gan.n_segments); },
       [](RunConfig& c, const std::string& v) {
         c.gan.n_segments = parse_u32("gan.n_segments", v);
       }},
      {"gan.g_embed_dim",
       [](const RunConfig& c) { return std::to_string(c.gan.g_embed_dim); },
       [](RunConfig& c, const std::string& v) {
         c.gan.g_embed_dim = parse_u32("gan.g_embed_dim", v);
       }},
      {"gan.g_widths",
       [](const RunConfig& c) { return join_list(c.gan.g_widths); },
       [](RunConfig& c, const std::string& v) {
         c.gan.g_widths.clear();
         for (const auto& part : split_list(v))
           c.gan.g_widths.push_back(parse_u32("gan.g_widths", part));
       }},
      {"gan.d_widths",
       [](const RunConfig& c) { return join_list(c.gan.d_widths); },
       [](RunConfig& c, const std::string& v) {
         c.gan.d_widths.clear();
         for (const auto& part : split_list(v))
           c.gan.d_widths.push_back(parse_u32("gan.d_widths", part));
       }},
      {"gan.pool_window",
       [](const RunConfig& c) { return std::to_string(c.gan.pool_window); },
       [](RunConfig& c, const std::string& v) {
         c.gan.pool_window = parse_u32("gan.pool_window", v);
       }},
      {"gan.pool_stride",
       [](const RunConfig& c) { return std::to_string(c.gan.pool_stride); },
       [](RunConfig& c, const std::string& v) {
         c.gan.pool_stride = parse_u32("gan.pool_stride", v);
       }},
      {"gan.dropout_rate",
       [](const RunConfig& c) { return fmt_double(c.gan.dropout_rate); },
       [](RunConfig& c, const std::string& v) {
         c.gan.dropout_rate = parse_double("gan.dropout_rate", v);
       }},
      {"gan.label_smooth",
       [](const RunConfig& c) { return fmt_double(c.gan.label_smooth); },
       [](RunConfig& c, const std::string& v) {
         c.gan.label_smooth = parse_double("gan.label_smooth", v);
       }},
      {"gan.batch_size",
       [](const RunConfig& c) { return std::to_string(c.gan.batch_size); },
       [](RunConfig& c, const std::string& v) {
         c.gan.batch_size = parse_u32("gan.batch_size", v);
       }},
      {"gan.epochs",
       [](const RunConfig& c) { return std::to_string(c.gan.epochs); },
       [](RunConfig& c, const std::string& v) {
         c.gan.epochs = parse_u32("gan.epochs", v);
       }},
      {"gan.checkpoint_every",
       [](const RunConfig& c) {
         return std::to_string(c.gan.checkpoint_every);
       },
       [](RunConfig& c, const std::string& v) {
         c.gan.checkpoint_every = parse_u32("gan.checkpoint_every", v);
       }},
      {"gan.adam_alpha",
       [](const RunConfig& c) { return fmt_double(c.gan.adam.alpha); },
       [](RunConfig& c, const std::string& v) {
         c.gan.adam.alpha = parse_double("gan.adam_alpha", v);
       }},
      {"gan.adam_beta1",
       [](const RunConfig& c) { return fmt_double(c.gan.adam.beta1); },
       [](RunConfig& c, const std::string& v) {
         c.gan.adam.beta1 = parse_double("gan.adam_beta1", v);
       }},
      {"gan.adam_beta2",
       [](const RunConfig& c) { return fmt_double(c.gan.adam.beta2); },
       [](RunConfig& c, const std::string& v) {
         c.gan.adam.beta2 = parse_double("gan.adam_beta2", v);
       }},
      {"gan.adam_eps",
       [](const RunConfig& c) { return fmt_double(c.gan.adam.eps); },
       [](RunConfig& c, const std::string& v) {
         c.gan.adam.eps = parse_double("gan.adam_eps", v);
       }},
      {"gan.seed",
       [](const RunConfig& c) { return std::to_string(c.gan.seed); },
       [](RunConfig& c, const std::string& v) {
         c.gan.seed = parse_u64("gan.seed", v);
       }},

      {"synth.categories",
       [](const RunConfig& c) { return std::to_string(c.synth.n_categories); },
       [](RunConfig& c, const std::string& v) {
         c.synth.n_categories = parse_u32("synth.categories", v);
       }},
      {"synth.items_per_category",
       [](const RunConfig& c) {
         return std::to_string(c.synth.items_per_category);
       },
       [](RunConfig& c, const std::string& v) {
         c.synth.items_per_category = parse_u32("synth.items_per_category", v);
       }},
      {"synth.segments",
       [](const RunConfig& c) { return std::to_string(c.synth.n_segments); },
       [](RunConfig& c, const std::string& v) {
         c.synth.n_segments = parse_u32("synth.segments", v);
       }},
      {"synth.visitors_per_segment",
       [](const RunConfig& c) {
         return std::to_string(c.synth.visitors_per_segment);
       },
       [](RunConfig& c, const std::string& v) {
         c.synth.visitors_per_segment =
             parse_u32("synth.visitors_per_segment", v);
       }},
      {"synth.blocks",
       [](const RunConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.synth.preferred_blocks.size(); ++i) {
           if (i > 0) out += ',';
           out += std::to_string(c.synth.preferred_blocks[i].first) + ":" +
                  std::to_string(c.synth.preferred_blocks[i].second);
         }
         return out;
       },
       [](RunConfig& c, const std::string& v) {
         c.synth.preferred_blocks.clear();
         for (const auto& part : split_list(v)) {
           const std::size_t colon = part.find(':');
           if (colon == std::string::npos)
             throw ValidationError("config: synth.blocks wants first:count");
           c.synth.preferred_blocks.push_back(
               {parse_u32("synth.blocks", part.substr(0, colon)),
                parse_u32("synth.blocks", part.substr(colon + 1))});
         }
       }},
      {"synth.p_view",
       [](const RunConfig& c) { return fmt_double(c.synth.p_view); },
       [](RunConfig& c, const std::string& v) {
         c.synth.p_view = parse_double("synth.p_view", v);
       }},
      {"synth.p_buy_given_view",
       [](const RunConfig& c) { return fmt_double(c.synth.p_buy_given_view); },
       [](RunConfig& c, const std::string& v) {
         c.synth.p_buy_given_view = parse_double("synth.p_buy_given_view", v);
       }},
      {"synth.max_views_per_category",
       [](const RunConfig& c) {
         return std::to_string(c.synth.max_views_per_category);
       },
       [](RunConfig& c, const std::string& v) {
         c.synth.max_views_per_category =
             parse_u32("synth.max_views_per_category", v);
       }},
      {"synth.seed",
       [](const RunConfig& c) { return std::to_string(c.synth.seed); },
       [](RunConfig& c, const std::string& v) {
         c.synth.seed = parse_u64("synth.seed", v);
       }},

      {"sample.realizations",
       [](const RunConfig& c) {
         return std::to_string(c.sample_realizations);
       },
       [](RunConfig& c, const std::string& v) {
         c.sample_realizations = parse_u64("sample.realizations", v);
       }},
      {"sample.segments",
       [](const RunConfig& c) { return join_list(c.sample_segments); },
       [](RunConfig& c, const std::string& v) {
         c.sample_segments.clear();
         for (const auto& part : split_list(v))
           c.sample_segments.push_back(parse_u32("sample.segments", part));
       }},
      {"sample.subsample",
       [](const RunConfig& c) { return fmt_double(c.subsample_fraction); },
       [](RunConfig& c, const std::string& v) {
         c.subsample_fraction = parse_double("sample.subsample", v);
       }},
      {"sample.threshold",
       [](const RunConfig& c) { return fmt_double(c.binarize_threshold); },
       [](RunConfig& c, const std::string& v) {
         c.binarize_threshold = parse_double("sample.threshold", v);
       }},

      {"eval.null_trials",
       [](const RunConfig& c) { return std::to_string(c.null_trials_count); },
       [](RunConfig& c, const std::string& v) {
         c.null_trials_count = parse_u64("eval.null_trials", v);
       }},

      {"seeds.sample",
       [](const RunConfig& c) { return std::to_string(c.seed_sample); },
       [](RunConfig& c, const std::string& v) {
         c.seed_sample = parse_u64("seeds.sample", v);
       }},
      {"seeds.subsample",
       [](const RunConfig& c) { return std::to_string(c.seed_subsample); },
       [](RunConfig& c, const std::string& v) {
         c.seed_subsample = parse_u64("seeds.subsample", v);
       }},
      {"seeds.null",
       [](const RunConfig& c) { return std::to_string(c.seed_null); },
       [](RunConfig& c, const std::string& v) {
         c.seed_null = parse_u64("seeds.null", v);
       }},

      {"run.workers",
       [](const RunConfig& c) { return std::to_string(c.workers); },
       [](RunConfig& c, const std::string& v) {
         c.workers = parse_u32("run.workers", v);
       }},
      {"run.deterministic",
       [](const RunConfig& c) {
         return std::string(c.deterministic ? "true" : "false");
       },
       [](RunConfig& c, const std::string& v) {
         c.deterministic = parse_bool("run.deterministic", v);
       }},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  codec.validate();
  gan.validate();
  if (subsample_fraction <= 0 || subsample_fraction > 1)
    throw ValidationError("config: sample.subsample must be in (0,1]");
  if (binarize_threshold <= -1 || binarize_threshold >= 1)
    throw ValidationError("config: sample.threshold must be in (-1,1)");
  if (sample_realizations == 0)
    throw ValidationError("config: sample.realizations must be positive");
  if (null_trials_count == 0)
    throw ValidationError("config: eval.null_trials must be positive");
  for (const auto seg : sample_segments)
    if (seg >= gan.n_segments)
      throw ValidationError("config: sample.segments out of model range");
  for (std::size_t i = 1; i < bin_edges.size(); ++i)
    if (bin_edges[i] <= bin_edges[i - 1])
      throw ValidationError("config: ingest.bin_edges must ascend");
}

void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value) {
  for (const auto& handler : key_table()) {
    if (key == handler.key) {
      handler.set(cfg, value);
      return;
    }
  }
  throw ValidationError("config: unknown key: " + key);
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(line_no) +
                            ": expected key = value");
    apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string write_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& handler : key_table()) {
    out += handler.key;
    out += " = ";
    out += handler.get(cfg);
    out += "\n";
  }
  return out;
}

bool config_equal(const RunConfig& a, const RunConfig& b) {
  return write_config(a) == write_config(b);
}

}  // namespace recgan
