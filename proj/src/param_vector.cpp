#include "swa/param_vector.hpp"

namespace swa {

std::atomic<std::uint64_t> ParamVector::allocs_{0};

}  // namespace swa
