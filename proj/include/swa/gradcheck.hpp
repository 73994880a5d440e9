#pragma once

#include <string>
#include <vector>

namespace swa {

struct GradCheckCase {
  std::string name;
  double max_rel_err = 0.0;  // max_j |g_j - fd_j| / (1 + |fd_j|)
};

/// Analytic gradients against the central-difference oracle over the
/// architecture matrix (relu/tanh, with/without batch norm, shallow/deep,
/// with and without L2). Each case uses a seeded init and batch.
std::vector<GradCheckCase> run_gradcheck(double h = 1e-5);

}  // namespace swa
