#pragma once

#include <span>
#include <vector>

namespace swa {

/// Central-difference gradient (f(w + h e_j) - f(w - h e_j)) / 2h over the
/// coordinates of w. Perturbs in place and restores each coordinate
/// bit-exactly. Exact for affine and quadratic f.
template <class F>
std::vector<double> central_diff(F&& f, std::span<double> w, double h) {
  std::vector<double> g(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double orig = w[j];
    w[j] = orig + h;
    const double fp = f();
    w[j] = orig - h;
    const double fm = f();
    w[j] = orig;
    g[j] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace swa
