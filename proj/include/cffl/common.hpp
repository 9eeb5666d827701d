#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

namespace cffl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using MaskMat = Eigen::MatrixXi;  // L x K, entries in {0,1}
using Complex = std::complex<double>;

/// Structured error with a stable machine-readable code alongside the message.
/// Codes in use: invalid-argument, unserved-ue, zero-noise, margin-violation,
/// solver-failure, internal-error, protocol-error, cannot-descale, unsupported,
/// io-error, sweep-error.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool ok, const std::string& code, const std::string& msg) {
  if (!ok) fail(code, msg);
}

}  // namespace cffl
