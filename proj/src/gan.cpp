#include "recgan/gan.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>

namespace recgan {

static_assert(std::numeric_limits<float>::is_iec559,
              "checkpoint format assumes IEEE-754 floats");

void GanConfig::validate() const {
  if (r == 0 || w == 0) throw ValidationError("gan: r and w must be positive");
  if (z_dim == 0 || n_segments == 0 || g_embed_dim == 0)
    throw ValidationError("gan: dims must be positive");
  if (g_embed_dim != z_dim)
    throw ValidationError(
        "gan: segment embedding width must equal z_dim (multiply coupling)");
  if (g_widths.empty() || d_widths.empty())
    throw ValidationError("gan: layer width lists must be non-empty");
  if (pool_window == 0 || pool_stride == 0 || pool_window > r ||
      pool_window > w)
    throw ValidationError("gan: pooling window out of range");
  if (dropout_rate < 0 || dropout_rate >= 1)
    throw ValidationError("gan: dropout rate must be in [0,1)");
  if (label_smooth <= 0 || label_smooth > 1)
    throw ValidationError("gan: label smoothing must be in (0,1]");
  if (batch_size == 0) throw ValidationError("gan: batch size must be >= 1");
}

std::vector<BlockInfo> param_plan(const GanConfig& cfg) {
  cfg.validate();
  std::vector<BlockInfo> plan;
  const std::size_t s = cfg.n_segments, e = cfg.g_embed_dim;
  const std::size_t cells = cfg.code_cells();

  plan.push_back({"g_embed", {s, e}, true, true});
  std::size_t prev = e;
  for (std::size_t i = 0; i < cfg.g_widths.size(); ++i) {
    const std::size_t u = cfg.g_widths[i];
    const std::string base = "g_shared." + std::to_string(i) + ".";
    plan.push_back({base + "w", {prev, u}, true, true});
    plan.push_back({base + "b", {u}, true, true});
    plan.push_back({base + "gamma", {u}, true, true});
    plan.push_back({base + "beta", {u}, true, true});
    plan.push_back({base + "run_mean", {u}, false, true});
    plan.push_back({base + "run_var", {u}, false, true});
    prev = u;
  }
  for (int h = 0; h < 2; ++h) {
    const std::string base = "g_head." + std::to_string(h) + ".";
    plan.push_back({base + "w", {prev, cells}, true, true});
    plan.push_back({base + "b", {cells}, true, true});
  }
  for (int h = 0; h < 2; ++h)
    plan.push_back(
        {"d_embed." + std::to_string(h), {s, cells}, true, false});
  prev = cfg.pooled_len();
  for (std::size_t j = 0; j < cfg.d_widths.size(); ++j) {
    const std::size_t v = cfg.d_widths[j];
    const std::string base = "d_shared." + std::to_string(j) + ".";
    plan.push_back({base + "w", {prev, v}, true, false});
    plan.push_back({base + "b", {v}, true, false});
    prev = v;
  }
  for (int h = 0; h < 2; ++h) {
    const std::string base = "d_head." + std::to_string(h) + ".";
    plan.push_back({base + "w", {prev, 1}, true, false});
    plan.push_back({base + "b", {1}, true, false});
  }
  return plan;
}

ParamCounts param_count(const GanConfig& cfg, CountConvention convention) {
  ParamCounts counts;
  for (const auto& block : param_plan(cfg)) {
    const std::uint64_t n = block.count();
    counts.total += n;
    const bool trainable = convention == CountConvention::CombinedStack
                               ? block.generator_side && block.trainable
                               : block.trainable;
    if (trainable)
      counts.trainable += n;
    else
      counts.non_trainable += n;
  }
  return counts;
}

// ---- training loop (float) ----

std::vector<TrainRecord> train(
    CoupledGan<float>& model, const CodedDataset& data,
    const std::function<void(CoupledGan<float>&, std::uint32_t)>&
        on_checkpoint) {
  const GanConfig& cfg = model.cfg;
  cfg.validate();
  if (data.records.empty() && cfg.epochs > 0)
    throw ValidationError("train: dataset is empty");
  if (cfg.epochs > 0 && (data.r != cfg.r || data.width != cfg.w))
    throw ValidationError("train: dataset shape does not match model");
  for (const auto& rec : data.records)
    if (rec.segment >= cfg.n_segments)
      throw ValidationError("train: record segment out of model range");

  Rng rng(cfg.seed);
  Optimizers<float> opt;
  opt.init(model);

  const std::size_t n = data.records.size();
  const std::size_t batch = cfg.batch_size;
  const std::size_t cells = cfg.code_cells();
  std::vector<TrainRecord> history;

  for (std::uint32_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::size_t steps = std::max<std::size_t>(1, (n + batch - 1) / batch);
    StepStats epoch_acc;
    for (std::size_t step = 0; step < steps; ++step) {
      Tensor<float> x1({batch, cells});
      Tensor<float> x2({batch, cells});
      std::vector<std::uint32_t> y(batch);
      for (std::size_t j = 0; j < batch; ++j) {
        const auto& rec = data.records[rng.uniform_int(n)];
        y[j] = rec.segment;
        fill_scaled_row(rec.v, x1.data.data() + j * cells);
        fill_scaled_row(rec.b, x2.data.data() + j * cells);
      }
      Tensor<float> z({batch, cfg.z_dim});
      for (auto& v : z.data) v = static_cast<float>(rng.normal());

      const StepStats s = train_step(model, x1, x2, y, z, opt, rng);
      epoch_acc.d_loss += s.d_loss;
      epoch_acc.g_loss += s.g_loss;
      for (int h = 0; h < 2; ++h) {
        epoch_acc.d_acc[h] += s.d_acc[h];
        epoch_acc.real_mean[h] += s.real_mean[h];
        epoch_acc.real_std[h] += s.real_std[h];
        epoch_acc.gen_mean[h] += s.gen_mean[h];
        epoch_acc.gen_std[h] += s.gen_std[h];
      }
    }
    const double inv = 1.0 / static_cast<double>(steps);
    TrainRecord rec;
    rec.epoch = epoch;
    rec.d_loss = epoch_acc.d_loss * inv;
    rec.g_loss = epoch_acc.g_loss * inv;
    rec.d_acc_1 = epoch_acc.d_acc[0] * inv;
    rec.d_acc_2 = epoch_acc.d_acc[1] * inv;
    rec.real_mean_1 = epoch_acc.real_mean[0] * inv;
    rec.real_std_1 = epoch_acc.real_std[0] * inv;
    rec.gen_mean_1 = epoch_acc.gen_mean[0] * inv;
    rec.gen_std_1 = epoch_acc.gen_std[0] * inv;
    rec.real_mean_2 = epoch_acc.real_mean[1] * inv;
    rec.real_std_2 = epoch_acc.real_std[1] * inv;
    rec.gen_mean_2 = epoch_acc.gen_mean[1] * inv;
    rec.gen_std_2 = epoch_acc.gen_std[1] * inv;
    history.push_back(rec);

    if (on_checkpoint && cfg.checkpoint_every > 0 &&
        epoch % cfg.checkpoint_every == 0)
      on_checkpoint(model, epoch);
  }
  return history;
}

// ---- checkpoint io ----

namespace {

constexpr char kMagic[4] = {'R', 'G', 'A', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw IoError("checkpoint: truncated field");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw IoError("checkpoint: truncated field");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double get_f64(std::istream& in) {
  const std::uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::string get_string(std::istream& in) {
  const std::uint32_t len = get_u32(in);
  if (len > (1u << 20)) throw IoError("checkpoint: implausible string");
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw IoError("checkpoint: truncated string");
  return s;
}

void put_config(std::ostream& out, const GanConfig& cfg) {
  put_u32(out, cfg.r);
  put_u32(out, cfg.w);
  put_u32(out, cfg.z_dim);
  put_u32(out, cfg.n_segments);
  put_u32(out, cfg.g_embed_dim);
  put_u32(out, static_cast<std::uint32_t>(cfg.g_widths.size()));
  for (const auto u : cfg.g_widths) put_u32(out, u);
  put_u32(out, static_cast<std::uint32_t>(cfg.d_widths.size()));
  for (const auto v : cfg.d_widths) put_u32(out, v);
  put_u32(out, cfg.pool_window);
  put_u32(out, cfg.pool_stride);
  put_f64(out, cfg.dropout_rate);
  put_f64(out, cfg.label_smooth);
  put_u32(out, cfg.batch_size);
  put_u32(out, cfg.epochs);
  put_u32(out, cfg.checkpoint_every);
  put_f64(out, cfg.adam.alpha);
  put_f64(out, cfg.adam.beta1);
  put_f64(out, cfg.adam.beta2);
  put_f64(out, cfg.adam.eps);
  put_u64(out, cfg.seed);
}

GanConfig get_config(std::istream& in) {
  GanConfig cfg;
  cfg.r = get_u32(in);
  cfg.w = get_u32(in);
  cfg.z_dim = get_u32(in);
  cfg.n_segments = get_u32(in);
  cfg.g_embed_dim = get_u32(in);
  cfg.g_widths.resize(get_u32(in));
  for (auto& u : cfg.g_widths) u = get_u32(in);
  cfg.d_widths.resize(get_u32(in));
  for (auto& v : cfg.d_widths) v = get_u32(in);
  cfg.pool_window = get_u32(in);
  cfg.pool_stride = get_u32(in);
  cfg.dropout_rate = get_f64(in);
  cfg.label_smooth = get_f64(in);
  cfg.batch_size = get_u32(in);
  cfg.epochs = get_u32(in);
  cfg.checkpoint_every = get_u32(in);
  cfg.adam.alpha = get_f64(in);
  cfg.adam.beta1 = get_f64(in);
  cfg.adam.beta2 = get_f64(in);
  cfg.adam.eps = get_f64(in);
  cfg.seed = get_u64(in);
  return cfg;
}

}  // namespace

void save_checkpoint(std::ostream& out, CoupledGan<float>& model) {
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_config(out, model.cfg);
  const auto params = model.all_params();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const Param<float>* p : params) {
    put_string(out, p->name);
    put_u32(out, static_cast<std::uint32_t>(p->value.rank()));
    for (const auto d : p->value.shape)
      put_u64(out, static_cast<std::uint64_t>(d));
    for (const float v : p->value.data) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      put_u32(out, bits);
    }
  }
  if (!out) throw IoError("checkpoint: write failed");
}

CoupledGan<float> load_checkpoint(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("checkpoint: bad magic");
  const std::uint32_t version = get_u32(in);
  if (version != kVersion)
    throw IoError("checkpoint: unsupported version " +
                  std::to_string(version));
  const GanConfig cfg = get_config(in);
  CoupledGan<float> model = build_model<float>(cfg);

  const auto params = model.all_params();
  const std::uint32_t count = get_u32(in);
  if (count != params.size())
    throw IoError("checkpoint: block count mismatch");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = get_string(in);
    const std::uint32_t rank = get_u32(in);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(get_u64(in));
    Param<float>* target = nullptr;
    for (Param<float>* p : params)
      if (p->name == name) {
        target = p;
        break;
      }
    if (target == nullptr)
      throw IoError("checkpoint: unknown block " + name);
    if (target->value.shape != shape)
      throw IoError("checkpoint: shape mismatch for " + name);
    for (auto& v : target->value.data) {
      const std::uint32_t bits = get_u32(in);
      std::memcpy(&v, &bits, 4);
    }
  }
  return model;
}

void save_checkpoint_file(const std::string& path, CoupledGan<float>& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  save_checkpoint(out, model);
}

CoupledGan<float> load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  return load_checkpoint(in);
}

}  // namespace recgan
