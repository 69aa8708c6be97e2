// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cycledcn/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "cycledcn/error.hpp"
#include "cycledcn/log.hpp"
#include "cycledcn/metrics.hpp"

namespace cdn {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void add_into(Tensor& dst, const Tensor& src) {
  if (src.empty()) return;
  if (dst.empty()) {
    dst = src;
  } else {
    dst += src;
  }
}

Tensor scaled(Tensor t, double s) {
  t *= s;
  return t;
}

Tensor filled_like(const Tensor& t, double v) { return Tensor(t.channels(), t.height(), t.width(), v); }

struct SliceResult {
  LossBreakdown loss;
  Tensor fake_low;
  Tensor fake_full;
};

/// Generator forward/backward for one paired slice. Gradients of the weighted,
/// batch-averaged total are accumulated into gp / gc.
SliceResult generator_slice(const CycleModel& m, const LossSet& on, const LossWeights& w,
                            double inv_b, const PairedSample& s, const Tensor* ssim_grad,
                            std::span<double> gp, std::span<double> gc) {
  const NoisePredictor& np = m.predictor;
  const ConsistencyNet& cn = m.consistency;
  const Tensor& o = s.low.target;
  const Tensor& u = s.full.target;

  ConsistencyNet::EncodeCache eco, ecu;
  const Tensor co = cn.enabled() ? cn.encode(s.low.neighbors, &eco) : Tensor{};
  const Tensor cu = cn.enabled() ? cn.encode(s.full.neighbors, &ecu) : Tensor{};
  Tensor d_co, d_cu;

  SliceResult r;
  PassCache c_ff, c_fl;
  r.fake_full = generator_pass(np, cn, o, &co, Direction::Extract, &c_ff);
  r.fake_low = generator_pass(np, cn, u, &cu, Direction::Add, &c_fl);
  Tensor d_ff = Tensor::zeros_like(o);
  Tensor d_fl = Tensor::zeros_like(u);

  if (on.contains(LossTerm::Sup)) {
    r.loss.sup = supervised_loss(r.fake_low, o, r.fake_full, u);
    const double k = w[LossTerm::Sup] * inv_b;
    d_fl += scaled(mean_sq_error_grad(r.fake_low, o), k);
    d_ff += scaled(mean_sq_error_grad(r.fake_full, u), k);
  }
  if (on.contains(LossTerm::Identity)) {
    PassCache c_id;
    const Tensor same = generator_pass(np, cn, u, &cu, Direction::Extract, &c_id);
    r.loss.identity = identity_loss(same, u);
    const Tensor d = scaled(mean_sq_error_grad(same, u), w[LossTerm::Identity] * inv_b);
    add_into(d_cu, generator_pass_backward(np, cn, c_id, d, gp, gc, false).context);
  }
  if (on.contains(LossTerm::Gan)) {
    Discriminator::Cache cl, cf;
    const Tensor sl = m.d_low.forward(r.fake_low, &cl);
    const Tensor sf = m.d_full.forward(r.fake_full, &cf);
    const double a = mean_score(sl), b = mean_score(sf);
    r.loss.gan = gan_generator_loss(a, b);
    const double k = w[LossTerm::Gan] * inv_b;
    // Input gradients only: generator losses never reach discriminator weights.
    d_fl += m.d_low.backward(cl, filled_like(sl, k * 2.0 * (a - 1.0) / static_cast<double>(sl.size())), {}, true);
    d_ff += m.d_full.backward(cf, filled_like(sf, k * 2.0 * (b - 1.0) / static_cast<double>(sf.size())), {}, true);
  }
  if (on.contains(LossTerm::Cyc)) {
    PassCache c_rl, c_rf;
    const Tensor rec_low = generator_pass(np, cn, r.fake_full, &co, Direction::Add, &c_rl);
    const Tensor rec_full = generator_pass(np, cn, r.fake_low, &cu, Direction::Extract, &c_rf);
    r.loss.cyc = cycle_loss(rec_low, o, rec_full, u);
    const double k = w[LossTerm::Cyc] * inv_b;
    NoiseGrad g1 = generator_pass_backward(np, cn, c_rl, scaled(mean_abs_error_grad(rec_low, o), k), gp, gc, true);
    d_ff += g1.target;
    add_into(d_co, g1.context);
    NoiseGrad g2 = generator_pass_backward(np, cn, c_rf, scaled(mean_abs_error_grad(rec_full, u), k), gp, gc, true);
    d_fl += g2.target;
    add_into(d_cu, g2.context);
  }
  if (ssim_grad) d_ff += *ssim_grad;

  add_into(d_co, generator_pass_backward(np, cn, c_ff, d_ff, gp, gc, false).context);
  add_into(d_cu, generator_pass_backward(np, cn, c_fl, d_fl, gp, gc, false).context);
  if (cn.enabled()) {
    if (!d_co.empty()) cn.encode_backward(eco, d_co, gc);
    if (!d_cu.empty()) cn.encode_backward(ecu, d_cu, gc);
  }
  return r;
}

/// Least-squares discriminator objective and its parameter gradient over the batch.
double discriminator_pass(const Discriminator& d, std::span<const Tensor> fakes,
                          std::span<const Tensor> reals, std::span<double> grads, bool low_domain) {
  const double inv_b = 1.0 / static_cast<double>(fakes.size());
  double total = 0.0;
  for (std::size_t i = 0; i < fakes.size(); ++i) {
    Discriminator::Cache cf, cr;
    const Tensor sf = d.forward(fakes[i], &cf);
    const Tensor sr = d.forward(reals[i], &cr);
    const double a = mean_score(sf), b = mean_score(sr);
    total += (low_domain ? discriminator_loss_O(a, b) : discriminator_loss_U(a, b)) * inv_b;
    d.backward(cf, filled_like(sf, inv_b * 2.0 * a / static_cast<double>(sf.size())), grads, false);
    d.backward(cr, filled_like(sr, inv_b * 2.0 * (b - 1.0) / static_cast<double>(sr.size())), grads, false);
  }
  return total;
}

void require_finite_grads(const std::vector<double>& g, const char* term) {
  for (double v : g) {
    if (!std::isfinite(v)) {
      throw DivergenceError(term, std::string("training diverged: non-finite gradient for ") + term);
    }
  }
}

void check_batch(const CycleModel& m, const Batch& batch) {
  if (batch.samples.empty()) throw ValidationError("train_step: empty batch");
  const std::size_t k = m.consistency.neighbor_k();
  for (const auto& s : batch.samples) {
    if (!s.low.target.same_shape(batch.samples.front().low.target) ||
        !s.full.target.same_shape(s.low.target)) {
      throw ValidationError("train_step: batch slices must share one shape");
    }
    if (s.low.k() != k || s.full.k() != k) {
      throw ValidationError("train_step: samples carry " + std::to_string(s.low.k()) +
                            " neighbours per side, model expects " + std::to_string(k));
    }
  }
}

}  // namespace

TrainingState TrainingState::create(const TrainConfig& config) {
  config.validate();
  TrainingState s;
  s.config = config;
  s.model = CycleModel::create(config.model, config.seed);
  s.opt_predictor = AdamState(s.model.predictor.params().size());
  s.opt_consistency = AdamState(s.model.consistency.params().size());
  s.opt_d_low = AdamState(s.model.d_low.params().size());
  s.opt_d_full = AdamState(s.model.d_full.params().size());
  s.weights = weights_for_epoch(config, 0, nullptr);
  return s;
}

LossWeights weights_for_epoch(const TrainConfig& config, std::size_t epoch,
                              const LossBreakdown* previous) {
  for (const auto& o : config.weight_overrides) {
    if (epoch < o.from_epoch || epoch >= o.to_epoch) continue;
    LossWeights w;
    w.epsilon = config.epsilon;
    w.active = config.enabled_losses;
    double sum = 0.0;
    for (const auto& [t, v] : o.weights) sum += v;
    for (const auto& [t, v] : o.weights) w.lambda[static_cast<std::size_t>(t)] = v / sum;
    return w;
  }
  if (previous == nullptr) return LossWeights::uniform(config.enabled_losses, config.epsilon);
  return update_weights(*previous, config.epsilon, config.enabled_losses);
}

Batch make_batch(const CasePair& pair, std::size_t z0, std::size_t count, std::size_t neighbor_k,
                 const Crop& crop) {
  if (count == 0 || z0 + count > pair.full.shape().nz) {
    throw ValidationError("make_batch: slice range exceeds the volume");
  }
  require_same_shape(pair.full, pair.low, "make_batch");
  Batch b;
  for (std::size_t z = z0; z < z0 + count; ++z) {
    b.samples.push_back({make_context(pair.low, z, neighbor_k, crop),
                         make_context(pair.full, z, neighbor_k, crop), 0});
  }
  return b;
}


GeneratorGradients generator_gradients(const CycleModel& m, const LossSet& on, const LossWeights& w,
                                       const Batch& batch, bool deterministic, std::size_t threads) {
  check_batch(m, batch);
  const std::size_t n = batch.samples.size();
  const double inv_b = 1.0 / static_cast<double>(n);

  GeneratorGradients out;
  LossBreakdown& total = out.losses;
  std::vector<Tensor> ssim_grad;
  if (on.contains(LossTerm::SsimPlanes)) {
    std::vector<Tensor> fakes, reals;
    for (const auto& s : batch.samples) {
      fakes.push_back(denoise_P(m.predictor, m.consistency, s.low));
      reals.push_back(s.full.target);
    }
    total.ssim_planes = plane_ssim_loss_grad(fakes, reals, ssim_grad);
    for (auto& g : ssim_grad) g *= w[LossTerm::SsimPlanes];
  }

  std::vector<double>& gp = out.predictor;
  std::vector<double>& gc = out.consistency;
  gp = m.predictor.params().zeros();
  gc = m.consistency.params().zeros();
  std::vector<SliceResult> results(n);
  const auto grad_for = [&](std::size_t i) { return ssim_grad.empty() ? nullptr : &ssim_grad[i]; };

  std::size_t workers = threads > 0 ? threads : std::max(2u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (deterministic || workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      results[i] = generator_slice(m, on, w, inv_b, batch.samples[i], grad_for(i), gp, gc);
    }
  } else {
    // Per-slice gradients are merged in completion order, so the summation
    // order (and the last bits of the result) vary between runs.
    std::atomic<std::size_t> next{0};
    std::mutex merge;
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        try {
          std::vector<double> lp(gp.size()), lc(gc.size());
          for (std::size_t i = next++; i < n; i = next++) {
            std::fill(lp.begin(), lp.end(), 0.0);
            std::fill(lc.begin(), lc.end(), 0.0);
            results[i] = generator_slice(m, on, w, inv_b, batch.samples[i], grad_for(i), lp, lc);
            std::lock_guard lock(merge);
            for (std::size_t j = 0; j < gp.size(); ++j) gp[j] += lp[j];
            for (std::size_t j = 0; j < gc.size(); ++j) gc[j] += lc[j];
          }
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  for (auto& r : results) {
    total.gan += r.loss.gan * inv_b;
    total.cyc += r.loss.cyc * inv_b;
    total.identity += r.loss.identity * inv_b;
    total.sup += r.loss.sup * inv_b;
    out.fake_low.push_back(std::move(r.fake_low));
    out.fake_full.push_back(std::move(r.fake_full));
  }
  return out;
}

LossBreakdown generator_losses(const CycleModel& m, const LossSet& on, const Batch& batch) {
  check_batch(m, batch);
  const NoisePredictor& np = m.predictor;
  const ConsistencyNet& cn = m.consistency;
  const double inv_b = 1.0 / static_cast<double>(batch.samples.size());
  LossBreakdown total;
  std::vector<Tensor> fakes, reals;
  for (const auto& s : batch.samples) {
    const Tensor& o = s.low.target;
    const Tensor& u = s.full.target;
    const Tensor co = neighbor_context(cn, s.low);
    const Tensor cu = neighbor_context(cn, s.full);
    const Tensor* pco = cn.enabled() ? &co : nullptr;
    const Tensor* pcu = cn.enabled() ? &cu : nullptr;
    const Tensor fake_full = generator_pass(np, cn, o, pco, Direction::Extract);
    const Tensor fake_low = generator_pass(np, cn, u, pcu, Direction::Add);
    if (on.contains(LossTerm::Sup)) total.sup += supervised_loss(fake_low, o, fake_full, u) * inv_b;
    if (on.contains(LossTerm::Identity)) {
      total.identity += identity_loss(generator_pass(np, cn, u, pcu, Direction::Extract), u) * inv_b;
    }
    if (on.contains(LossTerm::Gan)) {
      total.gan += gan_generator_loss(mean_score(m.d_low.forward(fake_low)),
                                      mean_score(m.d_full.forward(fake_full))) * inv_b;
    }
    if (on.contains(LossTerm::Cyc)) {
      const Tensor rec_low = generator_pass(np, cn, fake_full, pco, Direction::Add);
      const Tensor rec_full = generator_pass(np, cn, fake_low, pcu, Direction::Extract);
      total.cyc += cycle_loss(rec_low, o, rec_full, u) * inv_b;
    }
    fakes.push_back(fake_full);
    reals.push_back(u);
  }
  if (on.contains(LossTerm::SsimPlanes)) total.ssim_planes = plane_ssim_loss(fakes, reals);
  return total;
}

DiscriminatorGradients discriminator_gradients(const Discriminator& d, std::span<const Tensor> fakes,
                                               std::span<const Tensor> reals, bool low_domain) {
  if (fakes.size() != reals.size() || fakes.empty()) {
    throw ValidationError("discriminator_gradients: need matching, non-empty fake and real lists");
  }
  DiscriminatorGradients g;
  g.grads = d.params().zeros();
  g.loss = discriminator_pass(d, fakes, reals, g.grads, low_domain);
  return g;
}

LossBreakdown train_step(TrainingState& st, const Batch& batch) {
  const TrainConfig& cfg = st.config;
  CycleModel& m = st.model;
  const LossSet& on = cfg.enabled_losses;
  GeneratorGradients gen = generator_gradients(m, on, st.weights, batch, cfg.deterministic, cfg.threads);
  LossBreakdown total = gen.losses;
  const std::vector<double>& gp = gen.predictor;
  const std::vector<double>& gc = gen.consistency;
  const std::size_t n = batch.samples.size();

  std::vector<double> gdl, gdf;
  if (on.contains(LossTerm::Gan)) {
    std::vector<Tensor> real_low, real_full;
    for (std::size_t i = 0; i < n; ++i) {
      real_low.push_back(batch.samples[i].low.target);
      real_full.push_back(batch.samples[i].full.target);
    }
    DiscriminatorGradients dl = discriminator_gradients(m.d_low, gen.fake_low, real_low, true);
    DiscriminatorGradients df = discriminator_gradients(m.d_full, gen.fake_full, real_full, false);
    total.disc_O = dl.loss;
    total.disc_U = df.loss;
    gdl = std::move(dl.grads);
    gdf = std::move(df.grads);
  }

  total.require_finite();
  require_finite_grads(gp, "noise predictor");
  require_finite_grads(gc, "consistency net");
  require_finite_grads(gdl, "disc_O");
  require_finite_grads(gdf, "disc_U");

  const AdamOptions g_opt{cfg.learning_rate_G, cfg.beta1, cfg.beta2, 1e-8};
  const AdamOptions d_opt{cfg.learning_rate_D, cfg.beta1, cfg.beta2, 1e-8};
  adam_step(m.predictor.params().values(), gp, st.opt_predictor, g_opt);
  if (!gc.empty()) adam_step(m.consistency.params().values(), gc, st.opt_consistency, g_opt);
  if (!gdl.empty()) {
    adam_step(m.d_low.params().values(), gdl, st.opt_d_low, d_opt);
    adam_step(m.d_full.params().values(), gdf, st.opt_d_full, d_opt);
  }
  return total;
}

void train(TrainingState& st, std::span<const CasePair> train_cases,
           std::span<const CasePair> val_cases, const TrainHooks& hooks) {
  const TrainConfig& cfg = st.config;
  cfg.validate();
  if (st.epoch >= cfg.epochs) return;
  if (train_cases.empty()) throw ValidationError("train: no training cases");
  const std::size_t k = cfg.model.neighbor_k;
  std::size_t total_slices = 0;
  for (const auto& c : train_cases) {
    require_same_shape(c.full, c.low, ("training pair " + c.id).c_str());
    total_slices += c.full.shape().nz;
  }
  const std::size_t steps =
      cfg.steps_per_epoch > 0 ? cfg.steps_per_epoch : std::max<std::size_t>(1, total_slices / cfg.batch_size);
  const bool ssim = cfg.enabled_losses.contains(LossTerm::SsimPlanes);
  const std::span<const CasePair> val =
      cfg.val_max_cases > 0 && val_cases.size() > cfg.val_max_cases ? val_cases.first(cfg.val_max_cases)
                                                                     : val_cases;

  for (std::size_t e = st.epoch; e < cfg.epochs; ++e) {
    // Epoch-seeded stream: resuming from a checkpoint replays the same batches.
    std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(e + 1)));
    LossBreakdown sum;
    for (std::size_t step = 0; step < steps; ++step) {
      const CasePair& pair = train_cases[rng() % train_cases.size()];
      const Shape3& s = pair.full.shape();
      const std::size_t count = std::min(cfg.batch_size, s.nz);
      if (ssim && count < SsimOptions{}.window) {
        throw ValidationError("case " + pair.id + " has too few slices for the ssim_planes loss");
      }
      const std::size_t z0 = rng() % (s.nz - count + 1);
      Crop crop;
      if (cfg.patch_size > 0 && cfg.patch_size < s.ny && cfg.patch_size < s.nx) {
        crop.h = crop.w = cfg.patch_size;
        crop.y0 = rng() % (s.ny - cfg.patch_size + 1);
        crop.x0 = rng() % (s.nx - cfg.patch_size + 1);
      }
      sum += train_step(st, make_batch(pair, z0, count, k, crop));
    }
    sum *= 1.0 / static_cast<double>(steps);
    st.epoch = e + 1;
    st.weights = weights_for_epoch(cfg, st.epoch, &sum);

    EpochRecord rec;
    rec.epoch = st.epoch;
    rec.losses = sum;
    rec.weights = st.weights;
    if (!val.empty() && (st.epoch % cfg.val_every == 0 || st.epoch == cfg.epochs)) {
      const ValidationScore v = validate_model(st.model, val);
      rec.val_psnr = v.psnr;
      rec.val_ssim = v.ssim;
      if (v.psnr > st.best_val_psnr) {
        st.best_val_psnr = v.psnr;
        st.best_epoch = st.epoch;
      }
    }
    st.log.push_back(rec);

    std::ostringstream msg;
    msg << "epoch " << st.epoch << "/" << cfg.epochs << " gan=" << sum.gan << " cyc=" << sum.cyc
        << " identity=" << sum.identity << " sup=" << sum.sup << " ssim_planes=" << sum.ssim_planes
        << " disc_O=" << sum.disc_O << " disc_U=" << sum.disc_U;
    if (!std::isnan(rec.val_psnr)) msg << " val_psnr=" << rec.val_psnr << " val_ssim=" << rec.val_ssim;
    log_info(msg.str());

    if (hooks.on_epoch) hooks.on_epoch(st, rec);
    if (hooks.on_checkpoint && (st.epoch % cfg.checkpoint_every == 0 || st.epoch == cfg.epochs)) {
      hooks.on_checkpoint(st);
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

void require_unit_range(const Volume& v, const char* what) {
  for (float x : v.data()) {
    if (!(x >= 0.0f && x <= 1.0f)) {
      throw ValidationError(std::string(what) + ": values must be normalised into [0, 1]");
    }
  }
}

}  // namespace

Volume denoise_volume(const CycleModel& model, const Volume& low) {
  require_unit_range(low, "denoise_volume");
  const std::size_t k = model.consistency.neighbor_k();
  Volume out(low.shape(), low.spacing());
  out.meta() = low.meta();
  out.meta()["denoised"] = "cycledcn";
  for (std::size_t z = 0; z < low.shape().nz; ++z) {
    out.set_slice(z, denoise_P(model.predictor, model.consistency, make_context(low, z, k)));
  }
  return out;
}

double mean_abs_predicted_noise(const CycleModel& model, const Volume& input) {
  require_unit_range(input, "mean_abs_predicted_noise");
  const std::size_t k = model.consistency.neighbor_k();
  double total = 0.0;
  for (std::size_t z = 0; z < input.shape().nz; ++z) {
    const SliceContext ctx = make_context(input, z, k);
    const Tensor context = neighbor_context(model.consistency, ctx);
    const Tensor noise = predict_noise(model.predictor, model.consistency, ctx.target, &context,
                                       Direction::Extract);
    for (double v : noise.data()) total += std::abs(v);
  }
  return total / static_cast<double>(input.size());
}

double mean_abs_extracted_noise(const CycleModel& model, const Volume& input) {
  const Volume d = denoise_volume(model, input);
  double total = 0.0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    total += std::abs(static_cast<double>(input.data()[i]) - static_cast<double>(d.data()[i]));
  }
  return total / static_cast<double>(input.size());
}

ValidationScore validate_model(const CycleModel& model, std::span<const CasePair> cases) {
  ValidationScore s;
  if (cases.empty()) return s;
  for (const auto& c : cases) {
    const Volume d = denoise_volume(model, c.low);
    s.psnr += psnr(d, c.full);
    s.ssim += ssim_index(d, c.full);
  }
  s.psnr /= static_cast<double>(cases.size());
  s.ssim /= static_cast<double>(cases.size());
  return s;
}

}  // namespace cdn
