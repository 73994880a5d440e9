#pragma once

#include <string>
#include <vector>

#include "swa/errors.hpp"
#include "swa/mlp.hpp"

namespace swa {

// Checkpoint byte format, version 1 (all integers little-endian):
//   magic "SWAC" | u32 version | u32 layer count
//   per layer: u32 in_dim, u32 out_dim, u8 bn_flag
//   f64 parameters in ParamVector layout order
//   per BN layer: f64 running_mean[out], f64 running_var[out]
//   u32 CRC-32 of all preceding bytes
// Activation and the L2 coefficient are evaluation-context settings and are
// not part of the format; load_checkpoint takes them from the caller.

enum class CheckpointFault { bad_magic, bad_version, bad_crc, truncated, bad_layout };

class CheckpointError : public IoError {
public:
  CheckpointError(CheckpointFault fault, const std::string& msg)
      : IoError(msg), fault_(fault) {}
  CheckpointFault fault() const noexcept { return fault_; }

private:
  CheckpointFault fault_;
};

std::vector<unsigned char> encode_checkpoint(const MlpState& state);
MlpState decode_checkpoint(const std::vector<unsigned char>& bytes,
                           Activation activation = Activation::relu,
                           double l2_coeff = 0.0);

void save_checkpoint(const MlpState& state, const std::string& path);
MlpState load_checkpoint(const std::string& path,
                         Activation activation = Activation::relu,
                         double l2_coeff = 0.0);

}  // namespace swa
