#pragma once

#include "ncfem/common.hpp"

#include <Eigen/Sparse>

#include <memory>
#include <string>
#include <vector>

namespace ncfem {

// Compressed row storage.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;       // ||Ax - b|| / ||b||
  double backward_error = 0.0; // ||Ax - b|| / (||A|| ||x|| + ||b||), max norms
  std::string method;
  bool converged = false;
};

struct SolveOptions {
  // Direct solves are accepted on the backward error, CG on the relative residual; the
  // relative residual of a stable direct solve grows with the condition number (h^-4 for m = 2).
  double tol = 1e-12;
  // Sparse Cholesky up to this many unknowns, Jacobi-preconditioned CG beyond.
  int direct_limit = 500000;
  int max_iterations = 0; // 0: 10 * n for CG
};

// Throws ConvergenceError if the requested tolerance is not reached.
Vector solve_spd(const SparseMatrix& A, const Vector& b, SolveReport* report = nullptr,
                 const SolveOptions& opt = {});

Vector jacobi_cg(const SparseMatrix& A, const Vector& b, double tol, int max_iterations,
                 SolveReport* report = nullptr);

double backward_error(const SparseMatrix& A, const Vector& x, const Vector& b);

// Factorization reused across many right-hand sides.
class SpdSolver {
public:
  explicit SpdSolver(const SparseMatrix& A, const SolveOptions& opt = {});
  ~SpdSolver();
  SpdSolver(const SpdSolver&) = delete;
  SpdSolver& operator=(const SpdSolver&) = delete;
  Vector solve(const Vector& b, SolveReport* report = nullptr) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct EigenResult {
  double lambda = 0.0;
  Vector x;              // normalized x^T A x = 1, first nonzero component positive
  double residual = 0.0; // ||Bx - lambda Ax|| / ||Ax||
  int iterations = 0;
  std::string method;
  bool converged = false;
  std::vector<double> rayleigh_history; // power iteration only
};

struct EigenOptions {
  int dense_limit = 3000;
  double tol = 1e-9;
  int max_iterations = 20000;
};

// Largest eigenvalue of B x = lambda A x with A SPD and B symmetric positive semidefinite.
// Throws ConvergenceError (carrying the residual) if the iteration does not converge.
EigenResult max_generalized_eig(const SparseMatrix& B, const SparseMatrix& A,
                                const EigenOptions& opt = {});
EigenResult max_generalized_eig_dense(const DenseMatrix& B, const DenseMatrix& A);
// Power iteration on A^{-1} B; reports instead of throwing.
EigenResult power_iteration(const SparseMatrix& B, const SparseMatrix& A,
                            const EigenOptions& opt = {});

// Flips the sign so the first entry above 1e-12 * max|x| is positive.
void normalize_sign(Vector& x);

} // namespace ncfem
