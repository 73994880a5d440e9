#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace swa {

/// Flat vector of all trainable weights of a model, in the deterministic
/// layout defined by MlpLayout (per layer: weight matrix row-major, bias,
/// then batch-norm gamma and beta when the layer has batch norm).
///
/// Heap growth is counted by a process-wide counter so tests can enforce the
/// trainer's fixed-buffer memory contract (weights, velocity, average).
class ParamVector {
public:
  ParamVector() = default;
  explicit ParamVector(std::size_t n, double fill = 0.0) : v_(n, fill) {
    note_alloc(n);
  }
  ParamVector(const ParamVector& o) : v_(o.v_) { note_alloc(v_.size()); }
  ParamVector(ParamVector&&) noexcept = default;
  ParamVector& operator=(const ParamVector& o) {
    if (this != &o) {
      if (o.v_.size() > v_.capacity()) note_alloc(o.v_.size());
      v_ = o.v_;
    }
    return *this;
  }
  ParamVector& operator=(ParamVector&&) noexcept = default;

  void resize(std::size_t n) {
    if (n > v_.capacity()) note_alloc(n);
    v_.resize(n);
  }
  void assign(std::size_t n, double fill) {
    if (n > v_.capacity()) note_alloc(n);
    v_.assign(n, fill);
  }

  std::size_t size() const noexcept { return v_.size(); }
  bool empty() const noexcept { return v_.empty(); }
  double& operator[](std::size_t i) noexcept { return v_[i]; }
  double operator[](std::size_t i) const noexcept { return v_[i]; }
  double* data() noexcept { return v_.data(); }
  const double* data() const noexcept { return v_.data(); }
  auto begin() noexcept { return v_.begin(); }
  auto end() noexcept { return v_.end(); }
  auto begin() const noexcept { return v_.begin(); }
  auto end() const noexcept { return v_.end(); }
  std::span<double> values() noexcept { return {v_.data(), v_.size()}; }
  std::span<const double> values() const noexcept { return {v_.data(), v_.size()}; }

  bool same_layout(const ParamVector& o) const noexcept { return size() == o.size(); }
  bool operator==(const ParamVector& o) const noexcept { return v_ == o.v_; }

  /// Test hook: total heap-growing allocations across all ParamVectors.
  static std::uint64_t alloc_count() {
    return allocs_.load(std::memory_order_relaxed);
  }

private:
  static void note_alloc(std::size_t n) {
    if (n) allocs_.fetch_add(1, std::memory_order_relaxed);
  }
  static std::atomic<std::uint64_t> allocs_;
  std::vector<double> v_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(std::span<double> x, double alpha) {
  for (double& v : x) v *= alpha;
}

inline bool all_finite(std::span<const double> a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace swa
