#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace genestim {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// A sample point. Scalars (binomial count, sample mean) are 1-vectors,
// two-sample counts are 2-vectors, raw samples are n-vectors.
using Outcome = Eigen::VectorXd;

inline constexpr const char* kVersion = "1.0.0";

enum class ErrorKind {
  InvalidArgument,  // caller supplied something outside the contract
  Domain,           // parameter outside the model's domain
  Numeric,          // a computation failed (singular matrix, no convergence, ...)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Numeric: return "numeric";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::InvalidArgument, what);
}

// Parameter point split into interest and nuisance blocks. Everything
// downstream works on the concatenated vector (interest first).
struct ParamPoint {
  Vec theta;
  Vec nuisance;

  Vec full() const {
    Vec out(theta.size() + nuisance.size());
    out << theta, nuisance;
    return out;
  }

  static ParamPoint split(const Vec& full, Eigen::Index dim_interest) {
    ParamPoint p;
    p.theta = full.head(dim_interest);
    p.nuisance = full.tail(full.size() - dim_interest);
    return p;
  }
};

inline Vec scalar_vec(double x) {
  Vec v(1);
  v(0) = x;
  return v;
}

inline Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace genestim
