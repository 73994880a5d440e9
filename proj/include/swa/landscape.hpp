#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "swa/dataset.hpp"
#include "swa/mlp.hpp"
#include "swa/param_vector.hpp"

namespace swa {

/// Orthonormal basis of the plane through three weight vectors, anchored at
/// w1: u = w2 - w1, v = the component of w3 - w1 orthogonal to u.
/// Anchor coordinates: w1 -> (0,0), w2 -> (u_norm, 0), w3 -> (w3_x, v_norm).
struct PlaneBasis {
  ParamVector origin;
  ParamVector u_hat, v_hat;
  double u_norm = 0.0, v_norm = 0.0;
  double w3_x = 0.0;

  ParamVector point_at(double x, double y) const;
  std::pair<double, double> project(const ParamVector& w) const;
};

PlaneBasis plane_from_points(const ParamVector& w1, const ParamVector& w2,
                             const ParamVector& w3);

/// Shared evaluation protocol for every landscape probe: instantiate the
/// weights, recompute BN statistics over the train split, then record the
/// L2-regularized train loss and the test error (1 - accuracy). Nonfinite
/// evaluations saturate at `loss_cap` instead of aborting. `evals` counts
/// model evaluations (one per probed point).
class PointEvaluator {
public:
  PointEvaluator(const MlpSpec& spec, const Dataset& train, const Dataset& test,
                 double loss_cap = 1e4)
      : spec_(spec), train_(train), test_(test), loss_cap_(loss_cap) {}

  struct Value {
    double train_loss = 0.0;
    double test_error = 0.0;
    bool saturated = false;
  };

  Value eval_params(const ParamVector& w) const;

  long evals() const { return evals_.load(std::memory_order_relaxed); }
  const MlpSpec& spec() const { return spec_; }

private:
  MlpSpec spec_;
  const Dataset& train_;
  const Dataset& test_;
  double loss_cap_;
  mutable std::atomic<long> evals_{0};
};

struct GridSurface {
  std::vector<double> xs, ys;
  Matrix train_loss, test_error;       // [xs.size() x ys.size()]
  std::vector<std::uint8_t> saturated; // parallel to the value matrices
  // Projected plane coordinates of the anchors (w1, w2, w3 first).
  std::vector<std::pair<double, double>> anchors;
};

/// Evaluates P(x,y) = w1 + x*u_hat + y*v_hat over the grid; exactly
/// xs.size()*ys.size() model evaluations, row-major over x then y, gathered
/// into position-indexed slots (parallel-safe, order-independent output).
GridSurface evaluate_grid(const PlaneBasis& basis, const PointEvaluator& ev,
                          const std::vector<double>& xs,
                          const std::vector<double>& ys);

struct RayProfile {
  ParamVector direction;  // unit vector
  std::vector<double> ts;
  std::vector<double> train_loss, test_error;
  std::vector<std::uint8_t> saturated;
  double scale = 1.0;      // signed distance per unit t (= ||w_b - w_a|| for segments)
  bool degenerate = false; // identical-endpoint segment
};

/// Profiles along n_rays directions drawn uniformly on the unit sphere
/// (normalized Gaussians, seeded). ts must contain 0 and be ascending.
std::vector<RayProfile> ray_profile(const ParamVector& center,
                                    const PointEvaluator& ev, int n_rays,
                                    const std::vector<double>& ts,
                                    std::uint64_t seed);

/// Profile of w(t) = (1-t)*w_a + t*w_b; t = 0 is exactly w_a and t = 1
/// exactly w_b. Identical endpoints are flagged degenerate but evaluated.
RayProfile segment_profile(const ParamVector& w_a, const ParamVector& w_b,
                           const PointEvaluator& ev,
                           const std::vector<double>& ts);

struct WidthResult {
  double width = 0.0;  // mean over rays of the smallest |t| reaching the rise
  int capped = 0;      // rays that never rose by delta within the grid
};

/// Smallest |t| per ray at which train_loss(t) - train_loss(0) >= delta
/// (linear interpolation between grid points; never-crossing rays are capped
/// at the largest probed |t|), averaged over rays.
WidthResult width_metric(const std::vector<RayProfile>& profiles, double delta);

}  // namespace swa
