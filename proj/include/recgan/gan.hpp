#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "recgan/codec.hpp"
#include "recgan/nn.hpp"

namespace recgan {

struct GanConfig {
  std::uint32_t r = 1669;          // category rows
  std::uint32_t w = 300;           // code width
  std::uint32_t z_dim = 100;
  std::uint32_t n_segments = 5;
  std::uint32_t g_embed_dim = 100;
  std::vector<std::uint32_t> g_widths = {128, 256};
  std::vector<std::uint32_t> d_widths = {512, 256, 64};
  std::uint32_t pool_window = 2;
  std::uint32_t pool_stride = 2;
  double dropout_rate = 0.25;
  double label_smooth = 0.9;
  std::uint32_t batch_size = 16;
  std::uint32_t epochs = 1100;
  std::uint32_t checkpoint_every = 100;
  AdamConfig adam;
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t code_cells() const {
    return static_cast<std::size_t>(r) * w;
  }
  // discriminator feature length after pooling + flatten
  std::size_t pooled_len() const {
    const auto [oh, ow] = avgpool2d_output_shape(r, w, pool_window,
                                                 pool_stride);
    return oh * ow;
  }
  bool operator==(const GanConfig&) const = default;
};

// ---- parameter plan (symbolic; nothing allocated) ----

struct BlockInfo {
  std::string name;
  std::vector<std::size_t> shape;
  bool trainable = true;        // running statistics are not
  bool generator_side = true;   // g_* vs d_*
  std::uint64_t count() const {
    std::uint64_t n = 1;
    for (const auto d : shape) n *= d;
    return n;
  }
};

std::vector<BlockInfo> param_plan(const GanConfig& cfg);

// CombinedStack mirrors the stacked training model with frozen
// discriminators: trainable = generator side minus running statistics.
enum class CountConvention { CombinedStack, AllTrainable };

struct ParamCounts {
  std::uint64_t total = 0;
  std::uint64_t trainable = 0;
  std::uint64_t non_trainable = 0;
};

ParamCounts param_count(const GanConfig& cfg, CountConvention convention);

// ---- model ----

template <typename T>
struct CoupledGan {
  GanConfig cfg;

  // Shared blocks exist once; both heads alias them, so coupling cannot
  // drift.
  Param<T> g_embed;  // [segments, g_embed_dim], shared by both generators
  struct GBlock {
    Param<T> w, b, gamma, beta, run_mean, run_var;
  };
  std::vector<GBlock> g_shared;
  std::array<Param<T>, 2> g_head_w, g_head_b;

  std::array<Param<T>, 2> d_embed;  // per-head [segments, r*w]
  struct DBlock {
    Param<T> w, b;
  };
  std::vector<DBlock> d_shared;
  std::array<Param<T>, 2> d_head_w, d_head_b;

  std::vector<Param<T>*> generator_params();
  std::vector<Param<T>*> discriminator_params();
  std::vector<Param<T>*> all_params();
};

template <typename T>
CoupledGan<T> build_model(const GanConfig& cfg);

// ---- forward/backward ----

template <typename T>
struct GeneratorCache {
  Tensor<T> embed_out;  // [B, E]
  Tensor<T> mul_out;    // [B, E]
  struct Block {
    Tensor<T> input, pre;
    BatchNormCache<T> bn;
    Tensor<T> bn_out;
  };
  std::vector<Block> blocks;
  Tensor<T> head_in;   // after last dropout
  Tensor<T> out;       // tanh output [B, r*w]
};

// Pre-drawn dropout masks, one per generator block; fixing them makes the
// train-mode forward a deterministic function for gradient checking.
template <typename T>
struct GeneratorNoise {
  std::vector<Tensor<T>> masks;
};

template <typename T>
GeneratorNoise<T> draw_generator_noise(const GanConfig& cfg,
                                       std::size_t batch, Rng& rng);

template <typename T>
Tensor<T> generator_forward(CoupledGan<T>& model, int head,
                            const Tensor<T>& z,
                            const std::vector<std::uint32_t>& y, Mode mode,
                            const GeneratorNoise<T>* noise = nullptr,
                            bool update_running = false,
                            GeneratorCache<T>* cache = nullptr);

template <typename T>
void generator_backward(CoupledGan<T>& model, int head, const Tensor<T>& z,
                        const std::vector<std::uint32_t>& y,
                        const GeneratorCache<T>& cache,
                        const GeneratorNoise<T>* noise,
                        const Tensor<T>& d_out);

template <typename T>
struct DiscriminatorCache {
  Tensor<T> embed_out;  // [B, r*w]
  Tensor<T> mul_out;
  Tensor<T> pooled;     // [B, P]
  struct Block {
    Tensor<T> input, pre;
  };
  std::vector<Block> blocks;
  Tensor<T> trunk_out;
};

template <typename T>
Tensor<T> discriminator_forward(CoupledGan<T>& model, int head,
                                const Tensor<T>& x,
                                const std::vector<std::uint32_t>& y,
                                DiscriminatorCache<T>* cache = nullptr);

// Returns dL/dx (needed to train the generator through a frozen
// discriminator); accumulates discriminator gradients only when
// accumulate_grads is set.
template <typename T>
Tensor<T> discriminator_backward(CoupledGan<T>& model, int head,
                                 const Tensor<T>& x,
                                 const std::vector<std::uint32_t>& y,
                                 const DiscriminatorCache<T>& cache,
                                 const Tensor<T>& d_logits,
                                 bool accumulate_grads);

// Inference draw: two (r*w) tanh outputs for one (z, y).
template <typename T>
std::pair<Tensor<T>, Tensor<T>> generate_batch(
    CoupledGan<T>& model, const Tensor<T>& z,
    const std::vector<std::uint32_t>& y);

// ---- training ----

struct StepStats {
  double d_loss = 0, g_loss = 0;
  std::array<double, 2> d_acc{};
  std::array<double, 2> real_mean{}, real_std{};
  std::array<double, 2> gen_mean{}, gen_std{};
};

struct TrainRecord {
  std::uint32_t epoch = 0;
  double d_loss = 0, g_loss = 0;
  double d_acc_1 = 0, d_acc_2 = 0;
  double real_mean_1 = 0, real_std_1 = 0, gen_mean_1 = 0, gen_std_1 = 0;
  double real_mean_2 = 0, real_std_2 = 0, gen_mean_2 = 0, gen_std_2 = 0;
};

template <typename T>
struct Optimizers {
  AdamState<T> d_state, g_state;
  void init(CoupledGan<T>& model) {
    d_state.init(model.discriminator_params());
    g_state.init(model.generator_params());
  }
};

// One adversarial step: a single discriminator update from real
// (label_smooth) and fake (0) batches of both heads, then a generator
// update towards label 1 through the frozen discriminators. The shared
// trunks accumulate gradients from both coupled paths.
template <typename T>
StepStats train_step(CoupledGan<T>& model, const Tensor<T>& x1,
                     const Tensor<T>& x2,
                     const std::vector<std::uint32_t>& y, const Tensor<T>& z,
                     Optimizers<T>& opt, Rng& rng);

using CheckpointFn =
    std::function<void(const struct TrainCheckpoint&, std::uint32_t)>;

std::vector<TrainRecord> train(CoupledGan<float>& model,
                               const CodedDataset& data,
                               const std::function<void(CoupledGan<float>&,
                                                        std::uint32_t)>&
                                   on_checkpoint = nullptr);

// ---- checkpoint file (.rgan) ----
//
// Magic "RGAN", version, config echo, then named parameter blocks
// (name, shape, 32-bit floats, little-endian). Shared blocks are stored
// once; loading reconstructs the aliased structure.

void save_checkpoint(std::ostream& out, CoupledGan<float>& model);
CoupledGan<float> load_checkpoint(std::istream& in);
void save_checkpoint_file(const std::string& path, CoupledGan<float>& model);
CoupledGan<float> load_checkpoint_file(const std::string& path);

// batch assembly: bits to {-1,+1}
template <typename T>
void fill_scaled_row(const CodedMatrix& m, T* out);

}  // namespace recgan

#include "recgan/gan_impl.hpp"
