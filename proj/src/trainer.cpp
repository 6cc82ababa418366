#include "tloc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <ostream>
#include <span>
#include <utility>

#include "tloc/optim.hpp"
#include "tloc/runtime.hpp"
#include "tloc/serialize.hpp"

namespace tloc {

void TrainConfig::validate() const {
  if (alpha < 0.0 || beta < 0.0) throw ValidationError("train config: alpha and beta must be >= 0");
  if (!(learning_rate > 0.0)) throw ValidationError("train config: learning_rate must be > 0");
  if (batch_size < 1) throw ValidationError("train config: batch_size must be >= 1");
  if (epochs < 1) throw ValidationError("train config: epochs must be >= 1");
  if (h < 1 || k < 1 || d_r < 1 || d_w < 1 || clips < 1)
    throw ValidationError("train config: dims must all be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0))
    throw ValidationError("train config: dropout must be in [0, 1)");
  if (precision != "f32" && precision != "f64")
    throw ValidationError("train config: precision must be f32 or f64");
}

TrainConfig TrainConfig::resolved() const {
  TrainConfig cfg = *this;
  if (forces_beta_zero(cfg.variant)) cfg.beta = 0.0;
  return cfg;
}

void Checkpoint::expect_variant(Variant v) const {
  if (config.variant != v)
    throw UsageError("checkpoint holds variant " + variant_name(config.variant) +
                     " but variant " + variant_name(v) + " was requested");
}

ModelDims dims_for(const TrainConfig& cfg, const Corpus& corpus) {
  if (corpus.train.empty()) throw UsageError("train split is empty");
  const TensorF& f = corpus.train.front().clip_features;
  if (cfg.clips != f.cols())
    throw ValidationError("config clips=" + std::to_string(cfg.clips) +
                          " but corpus videos have " + std::to_string(f.cols()) + " clips");
  ModelDims dims;
  dims.h = cfg.h;
  dims.k = cfg.k;
  dims.d_r = cfg.d_r;
  dims.d_w = cfg.d_w;
  dims.d_v = f.rows();
  dims.M = f.cols();
  dims.vocab = corpus.vocab.size();
  dims.validate();
  return dims;
}

Prediction predict_sample(const Checkpoint& ckpt, const Sample& sample) {
  return predict(ckpt.params, ckpt.config.variant, ckpt.dims, sample.clip_features, sample.tokens);
}

namespace {

constexpr std::uint64_t kTagShuffle = 0x5F1E;
constexpr std::uint64_t kTagDropout = 0xD401;

double mean_iou_on(const ParamSet<float>& params, Variant variant, const ModelDims& dims,
                   const std::vector<Sample>& samples) {
  const int n = static_cast<int>(samples.size());
  std::vector<double> ious(static_cast<std::size_t>(n), 0.0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  const int nt = runtime::threads();
#pragma omp parallel for schedule(dynamic) num_threads(nt) if (nt > 1)
  for (int i = 0; i < n; ++i) {
    try {
      const Sample& s = samples[static_cast<std::size_t>(i)];
      const Prediction pred = predict(params, variant, dims, s.clip_features, s.tokens);
      ious[static_cast<std::size_t>(i)] = iou(pred.span, s.gt_norm);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  double acc = 0.0;
  for (double v : ious) acc += v;
  return acc / static_cast<double>(n);
}

template <typename T>
Checkpoint train_impl(const Corpus& corpus, const TrainConfig& cfg, const ModelDims& dims,
                      std::ostream* log) {
  ParamSet<T> work = init_params(cfg.variant, dims, cfg.seed).template cast<T>();
  const FlatLayout<T> layout(work);
  Adam<T> adam(layout.total, cfg.learning_rate);

  const int n = static_cast<int>(corpus.train.size());
  const int batch_size = std::min(cfg.batch_size, n);
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  std::vector<std::vector<T>> sample_grads(static_cast<std::size_t>(batch_size));
  for (auto& g : sample_grads) g.assign(static_cast<std::size_t>(layout.total), T(0));
  std::vector<double> lreg_vals(static_cast<std::size_t>(batch_size));
  std::vector<double> lcal_vals(static_cast<std::size_t>(batch_size));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(batch_size));
  std::vector<T> grad_flat(static_cast<std::size_t>(layout.total));

  Checkpoint best;
  best.config = cfg;
  best.dims = dims;
  double best_miou = -1.0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    {
      Rng shuffle_rng = make_rng(mix64(cfg.seed, kTagShuffle, static_cast<std::uint64_t>(epoch)));
      for (int i = n - 1; i > 0; --i) {
        const int j = uniform_int(shuffle_rng, 0, i);
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
      }
    }

    double epoch_reg = 0.0, epoch_cal = 0.0;
    int batch_index = 0;
    for (int start = 0; start < n; start += batch_size, ++batch_index) {
      const int b = std::min(batch_size, n - start);
      std::fill(errors.begin(), errors.end(), nullptr);

      const int nt = runtime::threads();
#pragma omp parallel for schedule(dynamic) num_threads(nt) if (nt > 1)
      for (int slot = 0; slot < b; ++slot) {
        try {
          const int idx = order[static_cast<std::size_t>(start + slot)];
          const Sample& smp = corpus.train[static_cast<std::size_t>(idx)];

          Tape<T> tape;
          BoundParams<T> bound = bind(tape, work);
          ModelGraph<T> graph = bind_model(bound, cfg.variant);

          Tensor<T> vmask, smask;
          const Tensor<T>* pv = nullptr;
          const Tensor<T>* ps = nullptr;
          if (cfg.dropout > 0.0) {
            Rng drng = make_rng(mix64(mix64(cfg.seed, kTagDropout, static_cast<std::uint64_t>(epoch)),
                                      static_cast<std::uint64_t>(idx)));
            vmask = dropout_mask<T>(Shape::mat(dims.h, dims.M), cfg.dropout, drng);
            smask = dropout_mask<T>(Shape::mat(dims.h, static_cast<std::int64_t>(smp.tokens.size())),
                                    cfg.dropout, drng);
            pv = &vmask;
            ps = &smask;
          }

          const Tensor<T> clips = smp.clip_features.template cast<T>();
          SampleForward fwd = build_forward(tape, graph, dims, clips, smp.tokens, pv, ps);
          SampleLossVars loss = build_sample_loss(tape, fwd, smp.gt_norm, dims.M);

          Var total;
          if (loss.l_reg.valid()) total = tape.mul(loss.l_reg, tape.scalar(static_cast<T>(cfg.alpha)));
          Var cal = tape.mul(loss.l_cal, tape.scalar(static_cast<T>(cfg.beta)));
          total = total.valid() ? tape.add(total, cal) : cal;
          tape.backward(total);

          lreg_vals[static_cast<std::size_t>(slot)] =
              loss.l_reg.valid() ? static_cast<double>(tape.val(loss.l_reg)[0]) : 0.0;
          lcal_vals[static_cast<std::size_t>(slot)] = static_cast<double>(tape.val(loss.l_cal)[0]);

          std::vector<T>& gbuf = sample_grads[static_cast<std::size_t>(slot)];
          for (std::size_t p = 0; p < work.size(); ++p) {
            const Tensor<T> g = tape.grad(bound.vars[p]);
            const std::int64_t off = layout.offsets[p];
            for (std::int64_t i = 0; i < g.numel(); ++i)
              gbuf[static_cast<std::size_t>(off + i)] = g[i];
          }
        } catch (...) {
          errors[static_cast<std::size_t>(slot)] = std::current_exception();
        }
      }
      for (int slot = 0; slot < b; ++slot)
        if (errors[static_cast<std::size_t>(slot)])
          std::rethrow_exception(errors[static_cast<std::size_t>(slot)]);

      double batch_reg = 0.0, batch_cal = 0.0;
      for (int slot = 0; slot < b; ++slot) {
        batch_reg += lreg_vals[static_cast<std::size_t>(slot)];
        batch_cal += lcal_vals[static_cast<std::size_t>(slot)];
      }
      const double batch_total =
          (cfg.alpha * batch_reg + cfg.beta * batch_cal) / static_cast<double>(b);
      if (!std::isfinite(batch_total))
        throw Error("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                    ", batch " + std::to_string(batch_index));

      // Deterministic reduction: fixed slot order, then one scale.
      std::fill(grad_flat.begin(), grad_flat.end(), T(0));
      for (int slot = 0; slot < b; ++slot) {
        const std::vector<T>& g = sample_grads[static_cast<std::size_t>(slot)];
        for (std::size_t i = 0; i < grad_flat.size(); ++i) grad_flat[i] += g[i];
      }
      const T inv_b = static_cast<T>(1.0 / static_cast<double>(b));
      bool grads_finite = true;
      for (T& g : grad_flat) {
        g *= inv_b;
        grads_finite = grads_finite && std::isfinite(static_cast<double>(g));
      }
      if (!grads_finite)
        throw Error("training diverged: non-finite gradient at epoch " + std::to_string(epoch) +
                    ", batch " + std::to_string(batch_index));

      clip_global_norm(std::span<T>(grad_flat), cfg.clip_norm);
      adam.step(work, layout, std::span<const T>(grad_flat));

      epoch_reg += batch_reg;
      epoch_cal += batch_cal;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.l_reg = epoch_reg / static_cast<double>(n);
    rec.l_cal = epoch_cal / static_cast<double>(n);
    rec.total = cfg.alpha * rec.l_reg + cfg.beta * rec.l_cal;

    ParamSet<float> snapshot = work.template cast<float>();
    if (!corpus.val.empty()) {
      rec.val_miou = mean_iou_on(snapshot, cfg.variant, dims, corpus.val);
      if (rec.val_miou > best_miou) {
        best_miou = rec.val_miou;
        best.params = snapshot;
        best.epoch = epoch;
      }
    } else if (epoch == cfg.epochs) {
      best.params = std::move(snapshot);
      best.epoch = epoch;
    }
    best.history.push_back(rec);
    if (log) {
      *log << to_json(rec).dump() << '\n';
      log->flush();
    }
  }
  return best;
}

}  // namespace

Checkpoint train(const Corpus& corpus, const TrainConfig& config, std::ostream* log) {
  config.validate();
  const TrainConfig cfg = config.resolved();
  const ModelDims dims = dims_for(cfg, corpus);
  if (cfg.precision == "f64") return train_impl<double>(corpus, cfg, dims, log);
  return train_impl<float>(corpus, cfg, dims, log);
}

}  // namespace tloc
