#include "swa/trainer.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "swa/crc32.hpp"
#include "swa/errors.hpp"

namespace swa {

namespace {

// Without-replacement minibatch sampler, reshuffled every epoch. The last
// partial batch of an epoch is dropped (an epoch is floor(n / batch) steps).
class EpochShuffler {
public:
  EpochShuffler(int n, int batch, std::uint64_t seed)
      : order_(n), batch_(batch), rng_(seed) {
    for (int i = 0; i < n; ++i) order_[i] = i;
    std::shuffle(order_.begin(), order_.end(), rng_);
  }

  void next(const Dataset& data, Batch& out) {
    if (pos_ + batch_ > static_cast<int>(order_.size())) {
      std::shuffle(order_.begin(), order_.end(), rng_);
      pos_ = 0;
    }
    data.gather(order_, pos_, batch_, out);
    pos_ += batch_;
  }

private:
  std::vector<int> order_;
  int batch_;
  int pos_ = 0;
  std::mt19937_64 rng_;
};

std::int64_t resolve_capture_every(const TrainerConfig& cfg, std::int64_t ipe) {
  if (cfg.capture_every > 0) return cfg.capture_every;
  if (const auto* cyc = std::get_if<CyclicLinear>(&cfg.schedule)) return cyc->cycle;
  return ipe;
}

void validate_config(const TrainerConfig& cfg, const Dataset& train) {
  validate(cfg.schedule);
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
    throw ConfigError("trainer: momentum must be in [0, 1)");
  if (cfg.batch_size < 1) throw ConfigError("trainer: batch_size must be >= 1");
  if (cfg.batch_size > train.n)
    throw ConfigError("trainer: batch_size exceeds dataset size");
  if (cfg.iters < 0) throw ConfigError("trainer: iters must be >= 0");
}

MlpState finalize_model(MlpState&& model, const Dataset& train,
                        std::size_t& clamped) {
  bool any_bn = false;
  for (int l = 0; l < model.spec.n_hidden(); ++l)
    if (model.spec.has_bn(l)) any_bn = true;
  if (!any_bn) return std::move(model);
  auto res = recompute_bn_stats(model, train);
  clamped += res.clamped;
  return std::move(res.state);
}

}  // namespace

std::int64_t iters_per_epoch(const Dataset& train, int batch_size) {
  return std::max<std::int64_t>(1, train.n / batch_size);
}

std::uint32_t config_hash(const TrainerConfig& cfg) {
  std::ostringstream os;
  os << describe(cfg.schedule) << '|' << cfg.momentum << '|' << cfg.batch_size
     << '|' << cfg.iters << '|' << cfg.capture_every << '|' << cfg.seed << '|'
     << cfg.swa_enabled << '|' << cfg.include_init << '|' << cfg.iter_offset;
  return crc32_str(os.str());
}

SwaState swa_update(SwaState s, const ParamVector& w) {
  if (!w.same_layout(s.avg))
    throw ShapeError("swa_update: parameter layout mismatch");
  const double n = static_cast<double>(s.n_models);
  for (std::size_t i = 0; i < w.size(); ++i)
    s.avg[i] = (s.avg[i] * n + w[i]) / (n + 1.0);
  ++s.n_models;
  return s;
}

double sgd_step_inplace(MlpState& state, ParamVector& velocity,
                        const Batch& batch, double alpha, double momentum,
                        ForwardCache& cache) {
  if (alpha <= 0.0) throw DomainError("sgd_step: alpha must be > 0");
  if (velocity.size() != state.params.size())
    throw ShapeError("sgd_step: velocity layout mismatch");
  scale(velocity.values(), momentum);
  // Throws before the weights are touched if the forward pass goes nonfinite.
  const double loss = loss_and_grad(state, batch, velocity, cache,
                                    /*accumulate=*/true);
  if (!all_finite(velocity.values()))
    throw NumericError("sgd_step: nonfinite gradient");
  axpy(-alpha, velocity.values(), state.params.values());
  return loss;
}

std::pair<MlpState, ParamVector> sgd_step(const MlpState& state,
                                          const ParamVector& velocity,
                                          const Batch& batch, double alpha,
                                          double momentum) {
  MlpState next = state;
  ParamVector v = velocity;
  ForwardCache cache;
  sgd_step_inplace(next, v, batch, alpha, momentum, cache);
  return {std::move(next), std::move(v)};
}

RunResult run_swa(const MlpState& init, const Dataset& train,
                  const TrainerConfig& cfg, const StepObserver& observer,
                  const ParamVector* initial_velocity) {
  init.spec.validate();
  validate_config(cfg, train);
  const std::int64_t ipe = iters_per_epoch(train, cfg.batch_size);
  const std::int64_t capture = resolve_capture_every(cfg, ipe);
  if (cfg.swa_enabled && cfg.iters < capture)
    throw ConfigError("run_swa: iters < capture interval, no model would be captured");

  RunResult res;
  res.log.seed = cfg.seed;
  res.log.config_hash = config_hash(cfg);

  if (cfg.iters == 0) {
    res.final_sgd_model = init;
    res.swa_model = init;
    res.velocity = initial_velocity ? *initial_velocity
                                    : ParamVector(init.params.size(), 0.0);
    return res;
  }

  // The three persistent parameter buffers of the loop.
  MlpState state = init;
  ParamVector velocity = initial_velocity
                             ? *initial_velocity
                             : ParamVector(init.params.size(), 0.0);
  SwaState swa;
  swa.capture_every = capture;
  if (cfg.swa_enabled) {
    if (cfg.include_init) {
      swa.avg = state.params;
      swa.n_models = 1;
    } else {
      swa.avg.assign(state.params.size(), 0.0);
      swa.n_models = 0;
    }
  }
  if (cfg.log_snapshots) res.log.init_params = init.params;

  EpochShuffler sampler(train.n, cfg.batch_size, cfg.seed);
  ForwardCache cache;
  Batch batch;
  for (std::int64_t i = 1; i <= cfg.iters; ++i) {
    const double alpha = lr_at(cfg.schedule, cfg.iter_offset + i, ipe);
    sampler.next(train, batch);
    const double mb_loss =
        sgd_step_inplace(state, velocity, batch, alpha, cfg.momentum, cache);
    bool captured = false;
    if (cfg.swa_enabled && is_capture_point(i, capture)) {
      swa = swa_update(std::move(swa), state.params);
      captured = true;
      if (cfg.log_snapshots)
        res.log.snapshots.push_back({i, state.params, mb_loss});
    }
    if (observer)
      observer({i, alpha, mb_loss, captured}, state,
               cfg.swa_enabled ? &swa : nullptr);
  }

  if (cfg.swa_enabled) {
    MlpState swa_model;
    swa_model.spec = init.spec;
    swa_model.params = std::move(swa.avg);
    swa_model.bn = init.bn;
    res.swa_model = finalize_model(std::move(swa_model), train, res.bn_clamped);
  }
  res.final_sgd_model = finalize_model(std::move(state), train, res.bn_clamped);
  if (!cfg.swa_enabled) res.swa_model = res.final_sgd_model;
  res.velocity = std::move(velocity);
  return res;
}

RunResult pretrain(const MlpSpec& spec, const Dataset& train,
                   TrainerConfig cfg) {
  cfg.swa_enabled = false;
  MlpState init = init_state(spec, cfg.seed);
  return run_swa(init, train, cfg);
}

}  // namespace swa
