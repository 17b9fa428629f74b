#pragma once

// Template implementations for gan.hpp.

#include <cmath>

namespace recgan {

template <typename T>
std::vector<Param<T>*> CoupledGan<T>::generator_params() {
  std::vector<Param<T>*> out;
  out.push_back(&g_embed);
  for (auto& gb : g_shared) {
    out.push_back(&gb.w);
    out.push_back(&gb.b);
    out.push_back(&gb.gamma);
    out.push_back(&gb.beta);
    out.push_back(&gb.run_mean);
    out.push_back(&gb.run_var);
  }
  for (int h = 0; h < 2; ++h) {
    out.push_back(&g_head_w[h]);
    out.push_back(&g_head_b[h]);
  }
  return out;
}

template <typename T>
std::vector<Param<T>*> CoupledGan<T>::discriminator_params() {
  std::vector<Param<T>*> out;
  for (int h = 0; h < 2; ++h) out.push_back(&d_embed[h]);
  for (auto& db : d_shared) {
    out.push_back(&db.w);
    out.push_back(&db.b);
  }
  for (int h = 0; h < 2; ++h) {
    out.push_back(&d_head_w[h]);
    out.push_back(&d_head_b[h]);
  }
  return out;
}

template <typename T>
std::vector<Param<T>*> CoupledGan<T>::all_params() {
  auto out = generator_params();
  const auto d = discriminator_params();
  out.insert(out.end(), d.begin(), d.end());
  return out;
}

template <typename T>
CoupledGan<T> build_model(const GanConfig& cfg) {
  cfg.validate();
  CoupledGan<T> model;
  model.cfg = cfg;
  Rng rng(cfg.seed);
  const std::size_t s = cfg.n_segments, e = cfg.g_embed_dim;
  const std::size_t cells = cfg.code_cells();

  model.g_embed = Param<T>("g_embed", {s, e});
  glorot_uniform(model.g_embed.value, s, e, rng);

  std::size_t prev = e;
  for (std::size_t i = 0; i < cfg.g_widths.size(); ++i) {
    const std::size_t u = cfg.g_widths[i];
    const std::string base = "g_shared." + std::to_string(i) + ".";
    typename CoupledGan<T>::GBlock gb{
        Param<T>(base + "w", {prev, u}),       Param<T>(base + "b", {u}),
        Param<T>(base + "gamma", {u}),         Param<T>(base + "beta", {u}),
        Param<T>(base + "run_mean", {u}, false),
        Param<T>(base + "run_var", {u}, false)};
    glorot_uniform(gb.w.value, prev, u, rng);
    gb.gamma.value.fill(T{1});
    gb.run_var.value.fill(T{1});
    model.g_shared.push_back(std::move(gb));
    prev = u;
  }
  for (int h = 0; h < 2; ++h) {
    const std::string base = "g_head." + std::to_string(h) + ".";
    model.g_head_w[h] = Param<T>(base + "w", {prev, cells});
    model.g_head_b[h] = Param<T>(base + "b", {cells});
    glorot_uniform(model.g_head_w[h].value, prev, cells, rng);
  }

  for (int h = 0; h < 2; ++h) {
    model.d_embed[h] =
        Param<T>("d_embed." + std::to_string(h), {s, cells});
    glorot_uniform(model.d_embed[h].value, s, cells, rng);
  }
  prev = cfg.pooled_len();
  for (std::size_t j = 0; j < cfg.d_widths.size(); ++j) {
    const std::size_t v = cfg.d_widths[j];
    const std::string base = "d_shared." + std::to_string(j) + ".";
    typename CoupledGan<T>::DBlock db{Param<T>(base + "w", {prev, v}),
                                      Param<T>(base + "b", {v})};
    glorot_uniform(db.w.value, prev, v, rng);
    model.d_shared.push_back(std::move(db));
    prev = v;
  }
  for (int h = 0; h < 2; ++h) {
    const std::string base = "d_head." + std::to_string(h) + ".";
    model.d_head_w[h] = Param<T>(base + "w", {prev, 1});
    model.d_head_b[h] = Param<T>(base + "b", {1});
    glorot_uniform(model.d_head_w[h].value, prev, 1, rng);
  }
  return model;
}

template <typename T>
GeneratorNoise<T> draw_generator_noise(const GanConfig& cfg,
                                       std::size_t batch, Rng& rng) {
  GeneratorNoise<T> noise;
  for (const auto u : cfg.g_widths)
    noise.masks.push_back(
        dropout_mask<T>({batch, u}, cfg.dropout_rate, rng));
  return noise;
}

template <typename T>
Tensor<T> generator_forward(CoupledGan<T>& model, int head,
                            const Tensor<T>& z,
                            const std::vector<std::uint32_t>& y, Mode mode,
                            const GeneratorNoise<T>* noise,
                            bool update_running, GeneratorCache<T>* cache) {
  if (head < 0 || head > 1) throw ContractViolation("generator head");
  if (z.rank() != 2 || z.dim(1) != model.cfg.z_dim ||
      z.dim(0) != y.size())
    throw ContractViolation("generator: z/y batch mismatch");
  for (const auto seg : y)
    if (seg >= model.cfg.n_segments)
      throw ContractViolation("segment out of range");
  if (mode == Mode::Train &&
      (noise == nullptr || noise->masks.size() != model.g_shared.size()))
    throw ContractViolation("generator: train mode needs dropout masks");

  Tensor<T> e = embedding_forward(model.g_embed, y);
  Tensor<T> h = multiply_forward(e, z);
  if (cache != nullptr) {
    cache->embed_out = e;
    cache->mul_out = h;
    cache->blocks.clear();
  }
  for (std::size_t i = 0; i < model.g_shared.size(); ++i) {
    auto& gb = model.g_shared[i];
    typename GeneratorCache<T>::Block blk;
    blk.input = h;
    Tensor<T> pre = dense_forward(h, gb.w, gb.b);
    Tensor<T> act = relu_forward(pre);
    blk.pre = std::move(pre);
    Tensor<T> bn_out = batchnorm_forward(
        act, gb.gamma, gb.beta, gb.run_mean, gb.run_var, mode,
        update_running, cache != nullptr ? &blk.bn : nullptr);
    blk.bn_out = bn_out;
    h = (mode == Mode::Train) ? apply_mask(bn_out, noise->masks[i])
                              : std::move(bn_out);
    if (cache != nullptr) cache->blocks.push_back(std::move(blk));
  }
  if (cache != nullptr) cache->head_in = h;
  Tensor<T> out =
      tanh_forward(dense_forward(h, model.g_head_w[head],
                                 model.g_head_b[head]));
  if (cache != nullptr) cache->out = out;
  return out;
}

template <typename T>
void generator_backward(CoupledGan<T>& model, int head, const Tensor<T>& z,
                        const std::vector<std::uint32_t>& y,
                        const GeneratorCache<T>& cache,
                        const GeneratorNoise<T>* noise,
                        const Tensor<T>& d_out) {
  Tensor<T> d_pre = tanh_backward(cache.out, d_out);
  Tensor<T> dh = dense_backward(cache.head_in, model.g_head_w[head],
                                model.g_head_b[head], d_pre);
  for (std::size_t idx = model.g_shared.size(); idx-- > 0;) {
    auto& gb = model.g_shared[idx];
    const auto& blk = cache.blocks[idx];
    if (blk.bn.mode == Mode::Train) {
      if (noise == nullptr)
        throw ContractViolation("generator backward: missing masks");
      dh = apply_mask(dh, noise->masks[idx]);
    }
    Tensor<T> d_act = batchnorm_backward(blk.bn, gb.gamma, gb.gamma,
                                         gb.beta, dh);
    Tensor<T> d_dense = relu_backward(blk.pre, d_act);
    dh = dense_backward(blk.input, gb.w, gb.b, d_dense);
  }
  // multiply coupling: d_embed_flat = dh (.) z
  Tensor<T> de = multiply_forward(dh, z);
  embedding_backward(model.g_embed, y, de);
}

template <typename T>
Tensor<T> discriminator_forward(CoupledGan<T>& model, int head,
                                const Tensor<T>& x,
                                const std::vector<std::uint32_t>& y,
                                DiscriminatorCache<T>* cache) {
  if (head < 0 || head > 1) throw ContractViolation("discriminator head");
  const auto& cfg = model.cfg;
  if (x.rank() != 2 || x.dim(1) != cfg.code_cells() || x.dim(0) != y.size())
    throw ContractViolation("discriminator: x/y batch mismatch");
  const std::size_t batch = x.dim(0);

  Tensor<T> e = embedding_forward(model.d_embed[head], y);
  Tensor<T> m = multiply_forward(e, x);
  Tensor<T> m3 = m.reshaped({batch, cfg.r, cfg.w});
  Tensor<T> pooled3 =
      avgpool2d_forward(m3, cfg.pool_window, cfg.pool_stride);
  Tensor<T> h = pooled3.reshaped({batch, cfg.pooled_len()});
  if (cache != nullptr) {
    cache->embed_out = std::move(e);
    cache->mul_out = std::move(m);
    cache->pooled = h;
    cache->blocks.clear();
  }
  for (auto& db : model.d_shared) {
    typename DiscriminatorCache<T>::Block blk;
    blk.input = h;
    Tensor<T> pre = dense_forward(h, db.w, db.b);
    h = relu_forward(pre);
    blk.pre = std::move(pre);
    if (cache != nullptr) cache->blocks.push_back(std::move(blk));
  }
  if (cache != nullptr) cache->trunk_out = h;
  return dense_forward(h, model.d_head_w[head], model.d_head_b[head]);
}

template <typename T>
Tensor<T> discriminator_backward(CoupledGan<T>& model, int head,
                                 const Tensor<T>& x,
                                 const std::vector<std::uint32_t>& y,
                                 const DiscriminatorCache<T>& cache,
                                 const Tensor<T>& d_logits,
                                 bool accumulate_grads) {
  const auto& cfg = model.cfg;
  const std::size_t batch = x.dim(0);
  const std::size_t cells = cfg.code_cells();

  Tensor<T> dh;
  {
    const auto& w = model.d_head_w[head];
    const std::size_t k = w.value.dim(0);
    if (accumulate_grads) {
      dh = dense_backward(cache.trunk_out, model.d_head_w[head],
                          model.d_head_b[head], d_logits);
    } else {
      dh = Tensor<T>({batch, k});
      matmul_nt(d_logits.data.data(), w.value.data.data(), dh.data.data(),
                batch, k, 1, false);
    }
  }
  for (std::size_t idx = model.d_shared.size(); idx-- > 0;) {
    auto& db = model.d_shared[idx];
    const auto& blk = cache.blocks[idx];
    Tensor<T> d_pre = relu_backward(blk.pre, dh);
    if (accumulate_grads) {
      dh = dense_backward(blk.input, db.w, db.b, d_pre);
    } else {
      const std::size_t k = db.w.value.dim(0), n = db.w.value.dim(1);
      dh = Tensor<T>({batch, k});
      matmul_nt(d_pre.data.data(), db.w.value.data.data(), dh.data.data(),
                batch, k, n, false);
    }
  }
  // back through flatten/pool/reshape
  const auto [oh, ow] =
      avgpool2d_output_shape(cfg.r, cfg.w, cfg.pool_window, cfg.pool_stride);
  Tensor<T> d_pool = dh.reshaped({batch, oh, ow});
  Tensor<T> dm3 = avgpool2d_backward(d_pool, cfg.r, cfg.w, cfg.pool_window,
                                     cfg.pool_stride);
  Tensor<T> dm = dm3.reshaped({batch, cells});
  if (accumulate_grads) {
    Tensor<T> de = multiply_forward(dm, x);
    embedding_backward(model.d_embed[head], y, de);
  }
  return multiply_forward(dm, cache.embed_out);
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> generate_batch(
    CoupledGan<T>& model, const Tensor<T>& z,
    const std::vector<std::uint32_t>& y) {
  auto x1 = generator_forward(model, 0, z, y, Mode::Infer);
  auto x2 = generator_forward(model, 1, z, y, Mode::Infer);
  return {std::move(x1), std::move(x2)};
}

namespace detail {

template <typename T>
std::pair<double, double> tensor_mean_std(const Tensor<T>& t) {
  double mean = 0;
  for (const auto v : t.data) mean += v;
  mean /= static_cast<double>(t.numel());
  double var = 0;
  for (const auto v : t.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(t.numel());
  return {mean, std::sqrt(var)};
}

inline void check_finite(double v, const char* what) {
  if (!std::isfinite(v))
    throw DivergenceError(std::string("non-finite ") + what +
                          " (training diverged)");
}

}  // namespace detail

template <typename T>
StepStats train_step(CoupledGan<T>& model, const Tensor<T>& x1,
                     const Tensor<T>& x2,
                     const std::vector<std::uint32_t>& y, const Tensor<T>& z,
                     Optimizers<T>& opt, Rng& rng) {
  StepStats stats;
  const std::array<const Tensor<T>*, 2> reals{&x1, &x2};
  const std::size_t batch = y.size();

  // ---- discriminator update ----
  for (Param<T>* p : model.discriminator_params()) p->zero_grad();
  std::array<Tensor<T>, 2> fakes;
  for (int h = 0; h < 2; ++h) {
    fakes[h] = generator_forward(model, h, z, y, Mode::Infer);

    DiscriminatorCache<T> cache;
    Tensor<T> real_logits =
        discriminator_forward(model, h, *reals[h], y, &cache);
    auto [real_loss, d_real] =
        sigmoid_xent_mean(real_logits, model.cfg.label_smooth);
    discriminator_backward(model, h, *reals[h], y, cache, d_real, true);

    DiscriminatorCache<T> fake_cache;
    Tensor<T> fake_logits =
        discriminator_forward(model, h, fakes[h], y, &fake_cache);
    auto [fake_loss, d_fake] = sigmoid_xent_mean(fake_logits, 0.0);
    discriminator_backward(model, h, fakes[h], y, fake_cache, d_fake, true);

    stats.d_loss += real_loss + fake_loss;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < batch; ++i) {
      if (real_logits.at(i) > T{0}) ++correct;
      if (fake_logits.at(i) <= T{0}) ++correct;
    }
    stats.d_acc[h] =
        static_cast<double>(correct) / static_cast<double>(2 * batch);

    const auto [rm, rs] = detail::tensor_mean_std(*reals[h]);
    const auto [gm, gs] = detail::tensor_mean_std(fakes[h]);
    stats.real_mean[h] = rm;
    stats.real_std[h] = rs;
    stats.gen_mean[h] = gm;
    stats.gen_std[h] = gs;
  }
  detail::check_finite(stats.d_loss, "discriminator loss");
  adam_step(model.discriminator_params(), opt.d_state, model.cfg.adam);

  // ---- generator update through frozen discriminators ----
  for (Param<T>* p : model.generator_params()) p->zero_grad();
  for (int h = 0; h < 2; ++h) {
    const GeneratorNoise<T> noise =
        draw_generator_noise<T>(model.cfg, batch, rng);
    GeneratorCache<T> cache;
    Tensor<T> fake =
        generator_forward(model, h, z, y, Mode::Train, &noise, true, &cache);
    DiscriminatorCache<T> dcache;
    Tensor<T> logits = discriminator_forward(model, h, fake, y, &dcache);
    auto [g_loss, d_logits] = sigmoid_xent_mean(logits, 1.0);
    Tensor<T> d_fake =
        discriminator_backward(model, h, fake, y, dcache, d_logits, false);
    generator_backward(model, h, z, y, cache, &noise, d_fake);
    stats.g_loss += g_loss;
  }
  detail::check_finite(stats.g_loss, "generator loss");
  adam_step(model.generator_params(), opt.g_state, model.cfg.adam);
  return stats;
}

template <typename T>
void fill_scaled_row(const CodedMatrix& m, T* out) {
  std::size_t at = 0;
  for (const auto& row : m.rows)
    for (std::uint32_t i = 0; i < row.width(); ++i)
      out[at++] = row.bit(i) ? T{1} : T{-1};
}

}  // namespace recgan
