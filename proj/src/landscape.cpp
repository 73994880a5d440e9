#include "swa/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "swa/errors.hpp"

namespace swa {

ParamVector PlaneBasis::point_at(double x, double y) const {
  ParamVector w = origin;
  axpy(x, u_hat.values(), w.values());
  axpy(y, v_hat.values(), w.values());
  return w;
}

std::pair<double, double> PlaneBasis::project(const ParamVector& w) const {
  if (!w.same_layout(origin)) throw ShapeError("project: layout mismatch");
  double px = 0.0, py = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = w[i] - origin[i];
    px += d * u_hat[i];
    py += d * v_hat[i];
  }
  return {px, py};
}

PlaneBasis plane_from_points(const ParamVector& w1, const ParamVector& w2,
                             const ParamVector& w3) {
  if (!w1.same_layout(w2) || !w1.same_layout(w3))
    throw ShapeError("plane_from_points: layout mismatch");
  const std::size_t dim = w1.size();

  ParamVector u(dim);
  for (std::size_t i = 0; i < dim; ++i) u[i] = w2[i] - w1[i];
  const double u_norm = l2_norm(u.values());
  if (u_norm == 0.0)
    throw DomainError("plane_from_points: w2 coincides with w1, basis degenerate");

  // v = (w3 - w1) - <w3 - w1, u> / ||u||^2 * u
  ParamVector v(dim);
  double proj = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    v[i] = w3[i] - w1[i];
    proj += v[i] * u[i];
  }
  const double coef = proj / (u_norm * u_norm);
  axpy(-coef, u.values(), v.values());
  const double v_norm = l2_norm(v.values());
  if (v_norm <= 1e-12 * std::max(1.0, u_norm))
    throw DomainError(
        "plane_from_points: w3 is collinear with w1 and w2, basis degenerate");

  PlaneBasis basis;
  basis.origin = w1;
  basis.u_hat = std::move(u);
  scale(basis.u_hat.values(), 1.0 / u_norm);
  basis.v_hat = std::move(v);
  scale(basis.v_hat.values(), 1.0 / v_norm);
  basis.u_norm = u_norm;
  basis.v_norm = v_norm;
  basis.w3_x = coef * u_norm;  // <w3 - w1, u_hat>
  return basis;
}

PointEvaluator::Value PointEvaluator::eval_params(const ParamVector& w) const {
  evals_.fetch_add(1, std::memory_order_relaxed);
  Value val;
  try {
    MlpState st;
    st.spec = spec_;
    st.params = w;
    st.bn.resize(spec_.n_hidden());
    bool any_bn = false;
    for (int l = 0; l < spec_.n_hidden(); ++l) {
      if (spec_.has_bn(l)) {
        any_bn = true;
        st.bn[l].mean.assign(spec_.layer_dims[l + 1], 0.0);
        st.bn[l].var.assign(spec_.layer_dims[l + 1], 1.0);
      }
    }
    if (any_bn) st = recompute_bn_stats(st, train_).state;
    const EvalMetrics train_m = evaluate(st, train_);
    const EvalMetrics test_m = evaluate(st, test_);
    val.train_loss = train_m.loss;
    val.test_error = test_m.error;
    if (!std::isfinite(val.train_loss) || val.train_loss > loss_cap_) {
      val.train_loss = loss_cap_;
      val.saturated = true;
    }
    if (!std::isfinite(val.test_error)) {
      val.test_error = 1.0;
      val.saturated = true;
    }
  } catch (const NumericError&) {
    val.train_loss = loss_cap_;
    val.test_error = 1.0;
    val.saturated = true;
  }
  return val;
}

GridSurface evaluate_grid(const PlaneBasis& basis, const PointEvaluator& ev,
                          const std::vector<double>& xs,
                          const std::vector<double>& ys) {
  if (xs.empty() || ys.empty()) throw DomainError("evaluate_grid: empty grid");
  GridSurface g;
  g.xs = xs;
  g.ys = ys;
  const int nx = static_cast<int>(xs.size());
  const int ny = static_cast<int>(ys.size());
  g.train_loss.resize(nx, ny);
  g.test_error.resize(nx, ny);
  g.saturated.assign(static_cast<std::size_t>(nx) * ny, 0);
#pragma omp parallel for schedule(dynamic)
  for (long p = 0; p < static_cast<long>(nx) * ny; ++p) {
    const int i = static_cast<int>(p / ny);
    const int j = static_cast<int>(p % ny);
    const auto val = ev.eval_params(basis.point_at(xs[i], ys[j]));
    g.train_loss.at(i, j) = val.train_loss;
    g.test_error.at(i, j) = val.test_error;
    g.saturated[p] = val.saturated ? 1 : 0;
  }
  g.anchors = {{0.0, 0.0}, {basis.u_norm, 0.0}, {basis.w3_x, basis.v_norm}};
  return g;
}

namespace {

void check_ts(const std::vector<double>& ts) {
  if (ts.empty()) throw DomainError("profile: empty t grid");
  bool has_zero = false;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] == 0.0) has_zero = true;
    if (i > 0 && ts[i] <= ts[i - 1])
      throw DomainError("profile: ts must be strictly ascending");
  }
  if (!has_zero) throw DomainError("profile: ts must contain 0");
}

void fill_profile(RayProfile& prof, const PointEvaluator& ev,
                  const std::vector<ParamVector>& points) {
  const std::size_t nt = points.size();
  prof.train_loss.resize(nt);
  prof.test_error.resize(nt);
  prof.saturated.assign(nt, 0);
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < static_cast<long>(nt); ++k) {
    const auto val = ev.eval_params(points[k]);
    prof.train_loss[k] = val.train_loss;
    prof.test_error[k] = val.test_error;
    prof.saturated[k] = val.saturated ? 1 : 0;
  }
}

}  // namespace

std::vector<RayProfile> ray_profile(const ParamVector& center,
                                    const PointEvaluator& ev, int n_rays,
                                    const std::vector<double>& ts,
                                    std::uint64_t seed) {
  if (n_rays < 1) throw DomainError("ray_profile: n_rays must be >= 1");
  check_ts(ts);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<RayProfile> profiles;
  for (int r = 0; r < n_rays; ++r) {
    RayProfile prof;
    prof.ts = ts;
    prof.direction.resize(center.size());
    for (std::size_t i = 0; i < center.size(); ++i) prof.direction[i] = gauss(rng);
    const double norm = l2_norm(prof.direction.values());
    scale(prof.direction.values(), 1.0 / norm);
    std::vector<ParamVector> points;
    points.reserve(ts.size());
    for (double t : ts) {
      ParamVector w = center;
      axpy(t, prof.direction.values(), w.values());
      points.push_back(std::move(w));
    }
    fill_profile(prof, ev, points);
    profiles.push_back(std::move(prof));
  }
  return profiles;
}

RayProfile segment_profile(const ParamVector& w_a, const ParamVector& w_b,
                           const PointEvaluator& ev,
                           const std::vector<double>& ts) {
  if (!w_a.same_layout(w_b)) throw ShapeError("segment_profile: layout mismatch");
  check_ts(ts);
  RayProfile prof;
  prof.ts = ts;
  const std::size_t dim = w_a.size();
  ParamVector diff(dim);
  for (std::size_t i = 0; i < dim; ++i) diff[i] = w_b[i] - w_a[i];
  const double dist = l2_norm(diff.values());
  prof.scale = dist;
  if (dist == 0.0) {
    prof.degenerate = true;  // still evaluated below
    prof.direction = diff;
  } else {
    prof.direction = std::move(diff);
    scale(prof.direction.values(), 1.0 / dist);
  }
  std::vector<ParamVector> points;
  points.reserve(ts.size());
  for (double t : ts) {
    ParamVector w(dim);
    for (std::size_t i = 0; i < dim; ++i) w[i] = (1.0 - t) * w_a[i] + t * w_b[i];
    points.push_back(std::move(w));
  }
  fill_profile(prof, ev, points);
  return prof;
}

WidthResult width_metric(const std::vector<RayProfile>& profiles, double delta) {
  if (delta <= 0.0) throw DomainError("width_metric: delta must be > 0");
  if (profiles.empty()) throw DomainError("width_metric: no profiles");
  const std::vector<double>& ts = profiles.front().ts;
  for (const auto& p : profiles)
    if (p.ts != ts) throw DomainError("width_metric: profiles must share the t grid");
  std::size_t zero_idx = ts.size();
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (ts[i] == 0.0) zero_idx = i;
  if (zero_idx == ts.size()) throw DomainError("width_metric: t grid lacks 0");

  WidthResult res;
  double sum = 0.0;
  const double t_max = std::max(std::abs(ts.front()), std::abs(ts.back()));
  for (const auto& p : profiles) {
    const double base = p.train_loss[zero_idx];
    double best = -1.0;
    // Walk outward in +t, then -t; linear interpolation at the crossing.
    for (std::size_t k = zero_idx; k + 1 < ts.size(); ++k) {
      const double r0 = p.train_loss[k] - base, r1 = p.train_loss[k + 1] - base;
      if (r1 >= delta) {
        const double frac = (r1 == r0) ? 1.0 : (delta - r0) / (r1 - r0);
        best = ts[k] + frac * (ts[k + 1] - ts[k]);
        break;
      }
    }
    for (std::size_t k = zero_idx; k > 0; --k) {
      const double r0 = p.train_loss[k] - base, r1 = p.train_loss[k - 1] - base;
      if (r1 >= delta) {
        const double frac = (r1 == r0) ? 1.0 : (delta - r0) / (r1 - r0);
        const double t = std::abs(ts[k] + frac * (ts[k - 1] - ts[k]));
        if (best < 0.0 || t < best) best = t;
        break;
      }
    }
    if (best < 0.0) {
      best = t_max;
      ++res.capped;
    }
    sum += best;
  }
  res.width = sum / static_cast<double>(profiles.size());
  return res;
}

}  // namespace swa
