#pragma once

#include <stdexcept>
#include <string>

namespace swa {

// Error taxonomy mirrored by the CLI exit codes:
// config/shape/domain -> 2, numeric -> 3, io -> 4.
enum class ErrorKind { config, shape, domain, numeric, io };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error(ErrorKind::config, m) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error(ErrorKind::shape, m) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& m) : Error(ErrorKind::domain, m) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& m) : Error(ErrorKind::numeric, m) {}
};
struct IoError : Error {
  explicit IoError(const std::string& m) : Error(ErrorKind::io, m) {}
};

}  // namespace swa
