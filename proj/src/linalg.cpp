#include "ncfem/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>

namespace ncfem {

namespace {

double relative_residual(const SparseMatrix& A, const Vector& x, const Vector& b)
{
  const double nb = b.norm();
  const double nr = (A * x - b).norm();
  return nb > 0.0 ? nr / nb : nr;
}

void check_square(const SparseMatrix& A, Eigen::Index n, const char* who)
{
  if (A.rows() != A.cols() || A.rows() != n)
    throw Error(std::string(who) + ": dimension mismatch");
}

} // namespace

double backward_error(const SparseMatrix& A, const Vector& x, const Vector& b)
{
  double norm_a = 0.0;
  for (Eigen::Index i = 0; i < A.outerSize(); ++i) {
    double row = 0.0;
    for (SparseMatrix::InnerIterator it(A, i); it; ++it)
      row += std::abs(it.value());
    norm_a = std::max(norm_a, row);
  }
  const double r = (A * x - b).cwiseAbs().maxCoeff();
  const double d = norm_a * x.cwiseAbs().maxCoeff() + b.cwiseAbs().maxCoeff();
  return d > 0.0 ? r / d : 0.0;
}

void normalize_sign(Vector& x)
{
  const double mx = x.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (std::abs(x(i)) > 1e-12 * mx) {
      if (x(i) < 0.0)
        x = -x;
      return;
    }
}

Vector jacobi_cg(const SparseMatrix& A, const Vector& b, double tol, int max_iterations,
                 SolveReport* report)
{
  check_square(A, b.size(), "jacobi_cg");
  const Eigen::Index n = b.size();
  const Vector dinv = A.diagonal().cwiseInverse();
  Vector x = Vector::Zero(n);
  Vector r = b;
  Vector z = dinv.cwiseProduct(r);
  Vector p = z;
  double rz = r.dot(z);
  const double nb = b.norm();
  SolveReport rep;
  rep.method = "jacobi-cg";
  if (nb == 0.0) {
    rep.converged = true;
    if (report)
      *report = rep;
    return x;
  }
  int it = 0;
  for (; it < max_iterations; ++it) {
    if (r.norm() <= tol * nb)
      break;
    const Vector Ap = A * p;
    const double alpha = rz / p.dot(Ap);
    x += alpha * p;
    r -= alpha * Ap;
    z = dinv.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  rep.iterations = it;
  rep.residual = relative_residual(A, x, b);
  rep.backward_error = backward_error(A, x, b);
  rep.converged = rep.residual <= tol;
  if (report)
    *report = rep;
  return x;
}

struct SpdSolver::Impl {
  const SparseMatrix* A = nullptr;
  SolveOptions opt;
  bool direct = true;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
};

SpdSolver::SpdSolver(const SparseMatrix& A, const SolveOptions& opt)
    : impl_(std::make_unique<Impl>())
{
  check_square(A, A.rows(), "SpdSolver");
  impl_->A = &A;
  impl_->opt = opt;
  impl_->direct = A.rows() <= opt.direct_limit;
  if (impl_->direct) {
    const Eigen::SparseMatrix<double> Ac(A);
    impl_->ldlt.compute(Ac);
    if (impl_->ldlt.info() != Eigen::Success || !(impl_->ldlt.vectorD().minCoeff() > 0.0))
      throw ConvergenceError("sparse Cholesky failed: matrix not positive definite", NAN);
  }
}

SpdSolver::~SpdSolver() = default;

Vector SpdSolver::solve(const Vector& b, SolveReport* report) const
{
  check_square(*impl_->A, b.size(), "solve_spd");
  const SparseMatrix& A = *impl_->A;
  const double tol = impl_->opt.tol;
  SolveReport rep;
  Vector x;
  if (impl_->direct) {
    rep.method = "sparse-ldlt";
    x = impl_->ldlt.solve(b);
    rep.backward_error = backward_error(A, x, b);
    // Iterative refinement for ill-conditioned fourth-order systems.
    for (int k = 0; k < 3 && rep.backward_error > tol; ++k) {
      x += impl_->ldlt.solve(b - A * x);
      rep.backward_error = backward_error(A, x, b);
      rep.iterations = k + 1;
    }
    rep.residual = relative_residual(A, x, b);
    rep.converged = rep.backward_error <= tol;
  } else {
    const int cap = impl_->opt.max_iterations > 0 ? impl_->opt.max_iterations
                                                  : 10 * static_cast<int>(b.size());
    x = jacobi_cg(A, b, tol, cap, &rep);
  }
  if (report)
    *report = rep;
  if (!rep.converged)
    throw ConvergenceError(rep.method + " did not reach tolerance", rep.residual);
  return x;
}

Vector solve_spd(const SparseMatrix& A, const Vector& b, SolveReport* report,
                 const SolveOptions& opt)
{
  if (opt.tol <= 0.0 || opt.tol >= 1.0)
    throw Error("solve_spd: tolerance must lie in (0,1)");
  SpdSolver s(A, opt);
  return s.solve(b, report);
}

//----------------------------------------------------------------------------

EigenResult max_generalized_eig_dense(const DenseMatrix& B, const DenseMatrix& A)
{
  if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
    throw Error("max_generalized_eig: dimension mismatch");
  EigenResult r;
  r.method = "dense-cholesky-reduction";
  const Eigen::Index n = A.rows();
  Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> es(B, A,
                                                           Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success)
    throw ConvergenceError("dense generalized eigensolver failed", NAN);
  r.lambda = es.eigenvalues()(n - 1);
  r.x = es.eigenvectors().col(n - 1);
  r.x /= std::sqrt(r.x.dot(A * r.x));
  normalize_sign(r.x);
  const Vector Ax = A * r.x;
  r.residual = (B * r.x - r.lambda * Ax).norm() / Ax.norm();
  r.iterations = 1;
  r.converged = true;
  return r;
}

EigenResult power_iteration(const SparseMatrix& B, const SparseMatrix& A, const EigenOptions& opt)
{
  const Eigen::Index n = A.rows();
  EigenResult r;
  r.method = "power-iteration";
  SolveOptions sopt;
  sopt.tol = 1e-13;
  SpdSolver solver(A, sopt);
  // Deterministic start with components in every direction.
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i)
    x(i) = 1.0 + 0.5 * std::sin(1.0 + 3.0 * static_cast<double>(i));
  x /= std::sqrt(x.dot(A * x));
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const Vector Bx = B * x;
    const Vector Ax = A * x;
    r.lambda = x.dot(Bx) / x.dot(Ax);
    r.rayleigh_history.push_back(r.lambda);
    r.residual = (Bx - r.lambda * Ax).norm() / Ax.norm();
    r.iterations = it;
    if (r.residual <= opt.tol) {
      r.converged = true;
      break;
    }
    SolveReport rep;
    x = solver.solve(Bx, &rep);
    x /= std::sqrt(x.dot(A * x));
  }
  normalize_sign(x);
  r.x = x;
  return r;
}

EigenResult max_generalized_eig(const SparseMatrix& B, const SparseMatrix& A, const EigenOptions& opt)
{
  if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
    throw Error("max_generalized_eig: dimension mismatch");
  if (A.rows() <= opt.dense_limit)
    return max_generalized_eig_dense(DenseMatrix(B), DenseMatrix(A));
  EigenResult r = power_iteration(B, A, opt);
  if (!r.converged)
    throw ConvergenceError("power iteration did not converge", r.residual);
  return r;
}

} // namespace ncfem
