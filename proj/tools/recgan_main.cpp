// recgan: recommendation-synthesis pipeline driver.
//
// Commands: synth, ingest, encode, train, sample, decode, eval, nulltest,
// report, selfcheck. Every stage reads and writes files in the workdir so
// stages can be re-run independently; a content-hash manifest records the
// artifacts each command produced.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "recgan/eval.hpp"
#include "recgan/manifest.hpp"
#include "recgan/parallel.hpp"
#include "recgan/recgen.hpp"
#include "recgan/runconfig.hpp"
#include "recgan/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace recgan;

namespace {

struct Cli {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string workdir_flag;
  std::string report_format = "text";
  // train conveniences
  std::int64_t epochs = -1;
  std::int64_t batch_size = -1;
  std::int64_t seed = -1;
  std::int64_t checkpoint_every = -1;
  std::int64_t workers = -1;
  bool deterministic = false;
};

RunConfig effective_config(const Cli& cli) {
  RunConfig cfg;
  if (!cli.config_path.empty()) cfg = parse_config_file(cli.config_path);
  for (const auto& kv : cli.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw ValidationError("--set wants key=value, got: " + kv);
    apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!cli.workdir_flag.empty()) cfg.workdir = cli.workdir_flag;
  if (cli.epochs >= 0) cfg.gan.epochs = static_cast<std::uint32_t>(cli.epochs);
  if (cli.batch_size >= 0)
    cfg.gan.batch_size = static_cast<std::uint32_t>(cli.batch_size);
  if (cli.seed >= 0) cfg.gan.seed = static_cast<std::uint64_t>(cli.seed);
  if (cli.checkpoint_every >= 0)
    cfg.gan.checkpoint_every = static_cast<std::uint32_t>(cli.checkpoint_every);
  if (cli.workers >= 0) cfg.workers = static_cast<unsigned>(cli.workers);
  if (cli.deterministic) cfg.deterministic = true;
  return cfg;
}

unsigned effective_workers(const RunConfig& cfg) {
  if (cfg.deterministic) return 1;
  return cfg.workers == 0 ? default_workers() : cfg.workers;
}

std::string resolve(const RunConfig& cfg, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(cfg.workdir) / path).string();
}

void require_input(const std::string& path, const std::string& producer) {
  if (!fs::exists(path))
    throw ValidationError("missing input " + path + " (run `" + producer +
                          "` first)");
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// every command echoes the effective config and updates the manifest
void finish_command(const RunConfig& cfg, std::vector<std::string> artifacts) {
  write_text_file((fs::path(cfg.workdir) / "config.echo").string(),
                  write_config(cfg));
  artifacts.push_back("config.echo");
  update_manifest(cfg.workdir, artifacts);
}

Catalog load_catalog(const RunConfig& cfg) {
  const std::string path = resolve(cfg, cfg.catalog_path);
  require_input(path, "synth");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  return build_catalog(in);
}

// ---- synth ----

int cmd_synth(const RunConfig& cfg) {
  SynthConfig synth = cfg.synth;
  synth.bin_edges = cfg.bin_edges;
  const auto out = synth_generate(synth);
  fs::create_directories(cfg.workdir);
  write_text_file(resolve(cfg, cfg.events_path), out.events_csv);
  write_text_file(resolve(cfg, cfg.catalog_path), out.catalog_csv);

  ordered_json truth;
  truth["total_events"] = out.truth.total_events;
  truth["total_view_items"] = out.truth.total_view_items;
  truth["total_buy_items"] = out.truth.total_buy_items;
  truth["expected_cvr"] = out.truth.expected_cvr;
  truth["model_segments"] = out.truth.model_segments;
  truth["visitors_with_both"] = out.truth.visitors_with_both;
  write_text_file((fs::path(cfg.workdir) / "truth.json").string(),
                  truth.dump(2) + "\n");

  finish_command(cfg, {fs::path(cfg.events_path).filename().string(),
                       fs::path(cfg.catalog_path).filename().string(),
                       "truth.json"});
  std::cerr << "synth: " << out.truth.total_events << " events, "
            << out.truth.total_view_items << " distinct views, "
            << out.truth.total_buy_items << " distinct buys\n";
  return 0;
}

// ---- ingest ----

int cmd_ingest(const RunConfig& cfg) {
  const std::string events_path = resolve(cfg, cfg.events_path);
  require_input(events_path, "synth");
  const Catalog catalog = load_catalog(cfg);

  std::ifstream in(events_path);
  if (!in) throw IoError("cannot open: " + events_path);
  const EventLog log = parse_events(in);
  const auto assignments = segment_visitors(log, cfg.bin_edges);
  const auto built = build_matrices(log, catalog, cfg.scheme, assignments);

  std::string segments_tsv = "visitor\tclick_depth\tsegment\n";
  for (const auto& a : assignments)
    segments_tsv += a.visitor_id + "\t" + std::to_string(a.click_depth) +
                    "\t" + std::to_string(a.segment) + "\n";
  write_text_file((fs::path(cfg.workdir) / "segments.tsv").string(),
                  segments_tsv);

  std::string interactions = "visitor\tsegment\tchannel\tcategory\titem\n";
  for (const auto& pair : built.pairs) {
    auto dump = [&](const char* channel, const SparseBits& bits) {
      for (std::uint32_t c = 0; c < bits.rows.size(); ++c)
        for (const auto i : bits.rows[c])
          interactions += pair.visitor_id + "\t" +
                          std::to_string(pair.segment) + "\t" + channel +
                          "\t" + catalog.category_id(c) + "\t" +
                          catalog.item_id(c, i) + "\n";
    };
    dump("V", pair.v);
    dump("B", pair.b);
  }
  write_text_file((fs::path(cfg.workdir) / "interactions.tsv").string(),
                  interactions);

  finish_command(cfg, {"segments.tsv", "interactions.tsv"});
  std::cerr << "ingest: " << log.events.size() << " events ("
            << log.skipped_lines << " malformed lines skipped), "
            << assignments.size() << " visitors, " << built.pairs.size()
            << " qualify for scheme " << scheme_name(cfg.scheme) << ", "
            << built.unknown_item_events << " unknown-item events skipped\n";
  return 0;
}

// ---- encode ----

int cmd_encode(const RunConfig& cfg) {
  const Catalog catalog = load_catalog(cfg);
  const std::string interactions_path =
      (fs::path(cfg.workdir) / "interactions.tsv").string();
  require_input(interactions_path, "ingest");

  struct Entry {
    int segment = 0;
    SparseBits v, b;
  };
  std::map<std::string, Entry> by_visitor;
  {
    std::ifstream in(interactions_path);
    if (!in) throw IoError("cannot open: " + interactions_path);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string visitor, segment, channel, category, item;
      if (!std::getline(ls, visitor, '\t') ||
          !std::getline(ls, segment, '\t') ||
          !std::getline(ls, channel, '\t') ||
          !std::getline(ls, category, '\t') || !std::getline(ls, item))
        throw ValidationError("interactions.tsv: malformed line: " + line);
      auto& entry = by_visitor[visitor];
      if (entry.v.rows.empty()) {
        entry.v.rows.resize(catalog.category_count());
        entry.b.rows.resize(catalog.category_count());
      }
      entry.segment = std::stoi(segment);
      const auto* ref = catalog.find_item(item);
      if (ref == nullptr)
        throw ValidationError("interactions.tsv: unknown item " + item);
      auto& rows = channel == "V" ? entry.v.rows : entry.b.rows;
      rows[ref->category].push_back(ref->local_index);
    }
  }

  CodedDataset ds;
  ds.r = catalog.category_count();
  ds.width = cfg.codec.width_w;
  ds.catalog_hash = catalog.content_hash();
  for (auto& [visitor, entry] : by_visitor) {
    for (auto& row : entry.v.rows) std::sort(row.begin(), row.end());
    for (auto& row : entry.b.rows) std::sort(row.begin(), row.end());
    CodedRecord rec;
    rec.segment = static_cast<std::uint32_t>(entry.segment);
    rec.v = encode_sparse(entry.v, catalog, cfg.codec);
    rec.b = encode_sparse(entry.b, catalog, cfg.codec);
    ds.records.push_back(std::move(rec));
  }
  write_coded_dataset_file((fs::path(cfg.workdir) / "coded.rgc").string(),
                           ds);
  finish_command(cfg, {"coded.rgc"});
  std::cerr << "encode: " << ds.records.size() << " records of shape "
            << ds.r << "x" << ds.width << "\n";
  return 0;
}

// ---- train ----

int cmd_train(const RunConfig& cfg) {
  const std::string coded_path =
      (fs::path(cfg.workdir) / "coded.rgc").string();
  require_input(coded_path, "encode");
  const CodedDataset ds = read_coded_dataset_file(coded_path);
  if (ds.r != cfg.gan.r || ds.width != cfg.gan.w)
    throw ValidationError(
        "train: coded data is " + std::to_string(ds.r) + "x" +
        std::to_string(ds.width) + " but config gan.r/gan.w say " +
        std::to_string(cfg.gan.r) + "x" + std::to_string(cfg.gan.w));

  auto model = build_model<float>(cfg.gan);
  std::vector<std::string> artifacts;
  const auto history = train(
      model, ds, [&](CoupledGan<float>& m, std::uint32_t epoch) {
        const std::string name = "checkpoint_" + std::to_string(epoch) +
                                 ".rgan";
        save_checkpoint_file((fs::path(cfg.workdir) / name).string(), m);
        artifacts.push_back(name);
      });
  save_checkpoint_file((fs::path(cfg.workdir) / "model.rgan").string(),
                       model);
  artifacts.push_back("model.rgan");

  std::string stats =
      "epoch,d_loss,g_loss,d_acc_1,d_acc_2,real_mean_1,real_std_1,"
      "gen_mean_1,gen_std_1,real_mean_2,real_std_2,gen_mean_2,gen_std_2\n";
  char line[512];
  for (const auto& rec : history) {
    std::snprintf(line, sizeof line,
                  "%u,%.6f,%.6f,%.4f,%.4f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,"
                  "%.6f,%.6f\n",
                  rec.epoch, rec.d_loss, rec.g_loss, rec.d_acc_1, rec.d_acc_2,
                  rec.real_mean_1, rec.real_std_1, rec.gen_mean_1,
                  rec.gen_std_1, rec.real_mean_2, rec.real_std_2,
                  rec.gen_mean_2, rec.gen_std_2);
    stats += line;
  }
  write_text_file((fs::path(cfg.workdir) / "stats.csv").string(), stats);
  artifacts.push_back("stats.csv");

  finish_command(cfg, artifacts);
  if (!history.empty())
    std::cerr << "train: " << history.size() << " epochs, final d_loss "
              << history.back().d_loss << ", g_loss "
              << history.back().g_loss << ", d_acc "
              << history.back().d_acc_1 << "/" << history.back().d_acc_2
              << "\n";
  return 0;
}

// ---- sample ----

int cmd_sample(const RunConfig& cfg) {
  const std::string model_path =
      (fs::path(cfg.workdir) / "model.rgan").string();
  require_input(model_path, "train");
  auto model = load_checkpoint_file(model_path);

  std::vector<std::uint32_t> segments = cfg.sample_segments;
  if (segments.empty())
    for (std::uint32_t s = 0; s < model.cfg.n_segments; ++s)
      segments.push_back(s);

  CodedDataset out;
  out.r = model.cfg.r;
  out.width = model.cfg.w;
  const std::string coded_path =
      (fs::path(cfg.workdir) / "coded.rgc").string();
  if (fs::exists(coded_path))
    out.catalog_hash = read_coded_header_file(coded_path).catalog_hash;

  for (const auto seg : segments) {
    if (seg >= model.cfg.n_segments)
      throw ValidationError("sample: segment out of model range");
    const auto draws =
        sample_segment(model, seg, cfg.sample_realizations,
                       Rng::derive(cfg.seed_sample, seg));
    for (const auto& [x1, x2] : draws) {
      CodedRecord rec;
      rec.segment = seg;
      rec.v = binarize(x1, model.cfg.r, model.cfg.w, cfg.binarize_threshold);
      rec.b = binarize(x2, model.cfg.r, model.cfg.w, cfg.binarize_threshold);
      rec.v.catalog_hash = out.catalog_hash;
      rec.b.catalog_hash = out.catalog_hash;
      out.records.push_back(std::move(rec));
    }
  }
  write_coded_dataset_file((fs::path(cfg.workdir) / "samples.rgc").string(),
                           out);
  finish_command(cfg, {"samples.rgc"});
  std::cerr << "sample: " << out.records.size() << " realizations over "
            << segments.size() << " segments\n";
  return 0;
}

// ---- decode ----

int cmd_decode(const RunConfig& cfg) {
  const Catalog catalog = load_catalog(cfg);
  const std::string samples_path =
      (fs::path(cfg.workdir) / "samples.rgc").string();
  require_input(samples_path, "sample");
  const CodedDataset samples = read_coded_dataset_file(samples_path);
  if (samples.r != catalog.category_count())
    throw ValidationError("decode: samples row count != catalog categories");
  if (samples.catalog_hash != 0 &&
      samples.catalog_hash != catalog.content_hash())
    throw ValidationError("decode: samples were produced for a different "
                          "catalog (hash mismatch)");
  CodecConfig codec = cfg.codec;
  codec.width_w = samples.width;

  // group record indices by segment, subsample within each segment
  std::map<std::uint32_t, std::vector<std::size_t>> by_segment;
  for (std::size_t i = 0; i < samples.records.size(); ++i)
    by_segment[samples.records[i].segment].push_back(i);

  std::vector<std::size_t> selected;
  for (const auto& [seg, indices] : by_segment) {
    const auto keep =
        subsample_indices(indices.size(), cfg.subsample_fraction,
                          Rng::derive(cfg.seed_subsample, seg));
    for (const auto k : keep) selected.push_back(indices[k]);
  }

  const unsigned workers = effective_workers(cfg);
  std::vector<RecommendationSet> sets(selected.size());
  parallel_for(selected.size(), workers,
               [&](std::size_t begin, std::size_t end) {
                 for (std::size_t i = begin; i < end; ++i) {
                   const auto& rec = samples.records[selected[i]];
                   sets[i] = decode_realization(rec.v, rec.b, catalog, codec,
                                                rec.segment, 1);
                 }
               });

  std::ofstream out((fs::path(cfg.workdir) / "realizations.txt").string(),
                    std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write realizations.txt");
  write_realizations(out, sets, catalog);
  out.close();
  finish_command(cfg, {"realizations.txt"});
  std::cerr << "decode: " << sets.size() << " of " << samples.records.size()
            << " realizations decoded (subsample "
            << cfg.subsample_fraction << ")\n";
  return 0;
}

// ---- eval ----

int cmd_eval(const RunConfig& cfg) {
  const Catalog catalog = load_catalog(cfg);
  const std::string real_path =
      (fs::path(cfg.workdir) / "realizations.txt").string();
  require_input(real_path, "decode");
  std::ifstream in(real_path);
  if (!in) throw IoError("cannot open: " + real_path);
  const auto sets = read_realizations(in, catalog);
  if (sets.empty()) throw ValidationError("eval: no realizations to score");

  std::map<std::uint32_t, std::vector<RecommendationSet>> by_segment;
  for (const auto& s : sets) by_segment[s.segment].push_back(s);

  ordered_json doc;
  doc["segments"] = ordered_json::array();
  for (const auto& [seg, group] : by_segment) {
    const auto cvr_r = cvr_result(group);
    const auto jac_r = jaccard_result(group);
    if (!cvr_r.defined())
      throw UndefinedMetric("eval: segment " + std::to_string(seg) +
                            ": every realization skipped for cvr");
    const auto [dv, db] = density(group, catalog);
    double mean_items = 0, mean_cats = 0;
    for (const auto& s : group) {
      mean_items += static_cast<double>(s.items_v.nonzero_count());
      mean_cats += static_cast<double>(s.categories_v().size());
    }
    mean_items /= static_cast<double>(group.size());
    mean_cats /= static_cast<double>(group.size());

    ordered_json row;
    row["segment"] = seg;
    row["n"] = group.size();
    row["mean_items"] = mean_items;
    row["mean_categories"] = mean_cats;
    row["cvr"] = cvr_r.percent;
    row["cvr_contributing"] = cvr_r.contributing;
    row["cvr_skipped"] = cvr_r.skipped;
    row["jc"] = jac_r.percent;
    row["jc_contributing"] = jac_r.contributing;
    row["jc_skipped"] = jac_r.skipped;
    row["density_v"] = dv;
    row["density_b"] = db;
    doc["segments"].push_back(std::move(row));
  }
  write_text_file((fs::path(cfg.workdir) / "metrics.json").string(),
                  doc.dump(2) + "\n");
  finish_command(cfg, {"metrics.json"});
  std::cerr << "eval: " << by_segment.size() << " segments scored\n";
  return 0;
}

// ---- nulltest ----

int cmd_nulltest(const RunConfig& cfg) {
  const Catalog catalog = load_catalog(cfg);
  const std::string metrics_path =
      (fs::path(cfg.workdir) / "metrics.json").string();
  require_input(metrics_path, "eval");
  const auto metrics = ordered_json::parse(read_text_file(metrics_path));

  const unsigned workers = effective_workers(cfg);
  ordered_json doc;
  doc["segments"] = ordered_json::array();
  for (const auto& seg_row : metrics.at("segments")) {
    const std::uint32_t seg = seg_row.at("segment");
    const auto result = null_trials(
        seg_row.at("density_v").get<double>(),
        seg_row.at("density_b").get<double>(), catalog,
        cfg.null_trials_count, Rng::derive(cfg.seed_null, seg), workers);
    ordered_json row;
    row["segment"] = seg;
    row["trials"] = result.trials;
    row["cvr_rn"] = result.cvr.percent;
    row["cvr_rn_skipped"] = result.cvr.skipped;
    row["jc_rn"] = result.jaccard.percent;
    row["jc_rn_skipped"] = result.jaccard.skipped;
    row["items_per_trial_v"] = result.items_per_trial_v;
    row["items_per_trial_b"] = result.items_per_trial_b;
    doc["segments"].push_back(std::move(row));
  }
  write_text_file((fs::path(cfg.workdir) / "null.json").string(),
                  doc.dump(2) + "\n");
  finish_command(cfg, {"null.json"});
  std::cerr << "nulltest: " << cfg.null_trials_count
            << " trials per segment\n";
  return 0;
}

// ---- report ----

int cmd_report(const RunConfig& cfg, const std::string& format) {
  const std::string metrics_path =
      (fs::path(cfg.workdir) / "metrics.json").string();
  const std::string null_path = (fs::path(cfg.workdir) / "null.json").string();
  require_input(metrics_path, "eval");
  require_input(null_path, "nulltest");
  const auto metrics = ordered_json::parse(read_text_file(metrics_path));
  const auto nulls = ordered_json::parse(read_text_file(null_path));

  std::map<std::uint32_t, ordered_json> null_by_segment;
  for (const auto& row : nulls.at("segments"))
    null_by_segment[row.at("segment").get<std::uint32_t>()] = row;

  std::vector<SegmentRow> rows;
  for (const auto& m : metrics.at("segments")) {
    SegmentRow row;
    row.segment = m.at("segment");
    row.mean_items = m.at("mean_items");
    row.mean_categories = m.at("mean_categories");
    row.cvr = m.at("cvr");
    row.jc = m.at("jc");
    row.n_realizations = m.at("n");
    row.cvr_skipped = m.at("cvr_skipped");
    row.jc_skipped = m.at("jc_skipped");
    const auto it = null_by_segment.find(row.segment);
    if (it != null_by_segment.end()) {
      row.cvr_rn = it->second.at("cvr_rn");
      row.jc_rn = it->second.at("jc_rn");
      row.n_null_trials = it->second.at("trials");
    }
    rows.push_back(row);
  }

  const std::string text = render_report_text(rows);
  const std::string json = render_report_json(rows);
  write_text_file((fs::path(cfg.workdir) / "report.txt").string(), text);
  write_text_file((fs::path(cfg.workdir) / "report.json").string(), json);
  finish_command(cfg, {"report.txt", "report.json"});
  if (format == "json")
    std::cout << json;
  else
    std::cout << text;
  return 0;
}

// ---- selfcheck ----

bool check(const char* name, bool ok) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
  return ok;
}

int cmd_selfcheck(const RunConfig& cfg) {
  bool all = true;

  {  // codec round-trip across the feasible envelope
    Rng rng(1);
    bool ok = true;
    for (int trial = 0; trial < 2000 && ok; ++trial) {
      const std::size_t n = rng.uniform_int(500);
      std::vector<std::uint8_t> row(n);
      std::uint32_t k = 0;
      for (auto& b : row) {
        b = rng.bernoulli(0.08) ? 1 : 0;
        k += b;
      }
      std::uint32_t w = 8;
      while (!fits_width(static_cast<std::uint32_t>(n), k, w)) w += 8;
      CodecConfig codec{.width_w = w};
      ok = decode_row(encode_row(row, codec),
                      static_cast<std::uint32_t>(n), codec) == row;
    }
    all &= check("codec round-trip (2000 random rows)", ok);
  }

  {  // decode totality on arbitrary bit patterns
    Rng rng(2);
    bool ok = true;
    CodecConfig codec{.width_w = 64};
    for (int trial = 0; trial < 2000 && ok; ++trial) {
      BitRow bits(64);
      for (std::uint32_t i = 0; i < 64; ++i)
        bits.set_bit(i, rng.uniform_int(2) == 1);
      ok = decode_row(bits, 40, codec).size() == 40;
    }
    all &= check("codec totality (2000 random patterns)", ok);
  }

  {  // gradient check at toy dims
    GanConfig toy;
    toy.r = 6;
    toy.w = 8;
    toy.z_dim = 4;
    toy.g_embed_dim = 4;
    toy.n_segments = 3;
    toy.g_widths = {6, 10};
    toy.d_widths = {12, 8, 6};
    toy.seed = 5;
    auto model = build_model<double>(toy);
    Rng rng(6);
    const std::size_t batch = 3;
    Tensor<double> x1({batch, toy.code_cells()}),
        x2({batch, toy.code_cells()});
    for (auto& v : x1.data) v = rng.bernoulli(0.2) ? 1.0 : -1.0;
    for (auto& v : x2.data) v = rng.bernoulli(0.2) ? 1.0 : -1.0;
    const std::vector<std::uint32_t> y{0, 1, 2};
    Tensor<double> z({batch, toy.z_dim});
    for (auto& v : z.data) v = rng.normal();
    Rng mask_rng(7);
    std::array<GeneratorNoise<double>, 2> noise;
    for (int h = 0; h < 2; ++h)
      noise[h] = draw_generator_noise<double>(toy, batch, mask_rng);

    for (Param<double>* p : model.generator_params()) p->zero_grad();
    for (int h = 0; h < 2; ++h) {
      GeneratorCache<double> cache;
      auto fake = generator_forward(model, h, z, y, Mode::Train, &noise[h],
                                    false, &cache);
      DiscriminatorCache<double> dcache;
      auto logits = discriminator_forward(model, h, fake, y, &dcache);
      auto [gl, dlogits] = sigmoid_xent_mean(logits, 1.0);
      (void)gl;
      auto dfake =
          discriminator_backward(model, h, fake, y, dcache, dlogits, false);
      generator_backward(model, h, z, y, cache, &noise[h], dfake);
    }
    auto loss_fn = [&] {
      double total = 0;
      for (int h = 0; h < 2; ++h) {
        auto fake = generator_forward(model, h, z, y, Mode::Train, &noise[h],
                                      false);
        auto logits = discriminator_forward(model, h, fake, y);
        total += sigmoid_xent_mean(logits, 1.0).first;
      }
      return total;
    };
    const auto report = grad_check(model.generator_params(), loss_fn, 1e-5);
    std::ostringstream label;
    label << "gradient check (max rel err " << report.max_rel_error << ")";
    all &= check(label.str().c_str(), report.max_rel_error < 1e-4);
  }

  {  // metric hand oracles
    RecommendationSet a;
    a.items_v.rows = {{0, 1, 2, 3}, {}};
    a.items_b.rows = {{1, 2}, {}};
    RecommendationSet b;
    b.items_v.rows = {{0}, {1}};
    b.items_b.rows = {{0}, {1}};
    const bool ok = std::abs(cvr({a}) - 50.0) < 1e-12 &&
                    std::abs(cvr({b}) - 100.0) < 1e-12 &&
                    std::abs(jaccard({b}) - 100.0) < 1e-12;
    all &= check("metric oracle (hand cases)", ok);
  }

  {  // decode throughput, measured only
    std::vector<std::string> cats;
    std::vector<std::vector<std::string>> items;
    for (int c = 0; c < 400; ++c) {
      cats.push_back("c" + std::to_string(c));
      std::vector<std::string> row;
      for (int i = 0; i < 250; ++i)
        row.push_back("i" + std::to_string(c) + "_" + std::to_string(i));
      items.push_back(row);
    }
    const Catalog catalog(std::move(cats), std::move(items));
    CodecConfig codec{.width_w = 300};
    Rng rng(8);
    SparseBits bits;
    bits.rows.resize(400);
    for (auto& row : bits.rows)
      for (std::uint32_t i = 0; i < 250; ++i)
        if (rng.bernoulli(0.03)) row.push_back(i);
    const auto coded = encode_sparse(bits, catalog, codec);
    const auto once = [&](unsigned workers) {
      const auto start = std::chrono::steady_clock::now();
      for (int rep = 0; rep < 10; ++rep)
        decode_matrix(coded, catalog, codec, workers);
      return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                           start)
          .count();
    };
    const double serial = once(1);
    const unsigned many = effective_workers(cfg) == 1
                              ? default_workers()
                              : effective_workers(cfg);
    const double parallel = once(many);
    std::cout << "[info] decode throughput: 1 worker " << serial << "s, "
              << many << " workers " << parallel << "s (speedup "
              << serial / parallel << "x, measured only)\n";
  }

  std::cout << (all ? "selfcheck OK\n" : "selfcheck FAILED\n");
  return all ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coupled conditional GAN recommendation pipeline"};
  app.require_subcommand(1);

  Cli cli;
  app.add_option("--config", cli.config_path, "configuration file");
  app.add_option("--set", cli.overrides, "override: key=value (repeatable)");
  app.add_option("--workdir", cli.workdir_flag, "artifact directory");
  app.add_option("--workers", cli.workers, "worker threads (0 = cores)");
  app.add_flag("--deterministic", cli.deterministic,
               "single-threaded, ordered reductions");

  auto* synth = app.add_subcommand("synth", "generate a planted corpus");
  auto* ingest = app.add_subcommand("ingest", "parse events into matrices");
  auto* encode = app.add_subcommand("encode", "arithmetic-code the matrices");
  auto* train_cmd = app.add_subcommand("train", "train the coupled GAN");
  train_cmd->add_option("--epochs", cli.epochs, "training epochs");
  train_cmd->add_option("--batch-size", cli.batch_size, "batch size");
  train_cmd->add_option("--seed", cli.seed, "training seed");
  train_cmd->add_option("--checkpoint-every", cli.checkpoint_every,
                        "checkpoint interval (epochs)");
  auto* sample = app.add_subcommand("sample", "draw generator realizations");
  auto* decode = app.add_subcommand("decode", "decode realizations to items");
  auto* eval_cmd = app.add_subcommand("eval", "score realizations");
  auto* nulltest = app.add_subcommand("nulltest", "matched-sparsity baseline");
  auto* report = app.add_subcommand("report", "render the metrics report");
  report->add_option("--format", cli.report_format,
                     "stdout format: text|json");
  auto* selfcheck = app.add_subcommand("selfcheck", "built-in verification");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = effective_config(cli);
    cfg.validate();
    fs::create_directories(cfg.workdir);
    if (synth->parsed()) return cmd_synth(cfg);
    if (ingest->parsed()) return cmd_ingest(cfg);
    if (encode->parsed()) return cmd_encode(cfg);
    if (train_cmd->parsed()) return cmd_train(cfg);
    if (sample->parsed()) return cmd_sample(cfg);
    if (decode->parsed()) return cmd_decode(cfg);
    if (eval_cmd->parsed()) return cmd_eval(cfg);
    if (nulltest->parsed()) return cmd_nulltest(cfg);
    if (report->parsed()) return cmd_report(cfg, cli.report_format);
    if (selfcheck->parsed()) return cmd_selfcheck(cfg);
    std::cerr << "no command\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
