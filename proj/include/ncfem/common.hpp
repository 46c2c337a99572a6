#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ncfem {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

// Flattened m-th derivative tensor: m=1 -> (d_x, d_y); m=2 -> (d_xx, d_xy, d_yx, d_yy).
// Only the first 2^m entries are meaningful.
using DerivTensor = std::array<double, 4>;

inline int tensor_size(int m) { return m == 1 ? 2 : 4; }

inline double contract(const DerivTensor& a, const DerivTensor& b, int m)
{
  double s = 0.0;
  for (int i = 0; i < tensor_size(m); ++i)
    s += a[i] * b[i];
  return s;
}

// Value, gradient and Hessian of a function at one point.
struct Jet {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();

  DerivTensor deriv(int m) const
  {
    if (m == 1)
      return {grad(0), grad(1), 0.0, 0.0};
    return {hess(0, 0), hess(0, 1), hess(1, 0), hess(1, 1)};
  }

  Jet& operator+=(const Jet& o)
  {
    value += o.value;
    grad += o.grad;
    hess += o.hess;
    return *this;
  }
  Jet& axpy(double a, const Jet& o)
  {
    value += a * o.value;
    grad += a * o.grad;
    hess += a * o.hess;
    return *this;
  }
};

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
  ParseError(const std::string& what, int line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line)
  {
  }
  int line() const { return line_; }

private:
  int line_;
};

class TopologyError : public Error {
public:
  using Error::Error;
};

class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual)
  {
  }
  double residual() const { return residual_; }

private:
  double residual_;
};

} // namespace ncfem
