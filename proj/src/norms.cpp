#include "ncfem/norms.hpp"

#include "ncfem/assembly.hpp"
#include "ncfem/parallel.hpp"
#include "ncfem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ncfem {

namespace {

struct Sums {
  double energy = 0.0, l2 = 0.0, h1 = 0.0, l2_inv_h = 0.0;
};

// inv_h2m = h_T^(-2m) of the triangle holding the point.
void accumulate(Sums& s, const Jet& d, double w, int m, double inv_h2m)
{
  const DerivTensor D = d.deriv(m);
  s.energy += w * contract(D, D, m);
  s.l2 += w * d.value * d.value;
  s.h1 += w * d.grad.squaredNorm();
  s.l2_inv_h += w * inv_h2m * d.value * d.value;
}

double inv_h2m(const Triangulation& M, int t, int m) { return std::pow(M.diameter(t), -2 * m); }

ErrorBundle finish(const std::vector<Sums>& parts, std::string against)
{
  Sums s;
  for (const auto& p : parts) {
    s.energy += p.energy;
    s.l2 += p.l2;
    s.h1 += p.h1;
    s.l2_inv_h += p.l2_inv_h;
  }
  return {std::sqrt(s.energy), std::sqrt(s.l2), std::sqrt(s.h1), std::sqrt(s.l2_inv_h),
          std::move(against)};
}

// Jets of f at all points of tab on triangle t.
void local_jets(const FeFunction& f, int t, const Tabulation& tab, std::vector<Jet>& basis,
                std::vector<Jet>& out)
{
  f.space->basis_jets(t, tab, basis);
  const Vector c = f.local_coeffs(t);
  const int nl = f.space->n_local();
  out.assign(tab.n_points(), Jet{});
  for (int q = 0; q < tab.n_points(); ++q)
    for (int i = 0; i < nl; ++i)
      if (c(i) != 0.0)
        out[q].axpy(c(i), basis[q * nl + i]);
}

} // namespace

ErrorBundle error_norms(const FeFunction& f, const JetField& reference, int reference_degree)
{
  const FeSpace& S = *f.space;
  const Triangulation& M = S.mesh();
  const int d = std::max(S.reference().max_degree, reference_degree);
  int degree = max_triangle_degree;
  if (reference_degree >= 0) {
    if (2 * d > max_triangle_degree)
      throw Error("error_norms: no exact rule for polynomial degree " + std::to_string(d));
    degree = 2 * d;
  }
  const Tabulation& tab = S.tabulation(degree, S.reference().split);
  std::vector<Sums> parts(worker_count());
  parallel_for(M.n_triangles(), [&](int begin, int end, int w) {
    std::vector<Jet> basis, jf;
    for (int t = begin; t < end; ++t) {
      local_jets(f, t, tab, basis, jf);
      const TriangleGeometry g(M, t);
      const double ih = inv_h2m(M, t, S.m());
      for (int q = 0; q < tab.n_points(); ++q) {
        Jet diff = jf[q];
        if (reference)
          diff.axpy(-1.0, reference(t, g.to_physical(tab.ref_points[q])));
        accumulate(parts[w], diff, tab.weights[q] * g.area, S.m(), ih);
      }
    }
  });
  return finish(parts, reference ? "reference" : "zero");
}

ErrorBundle norms(const FeFunction& f) { return error_norms(f, nullptr, 0); }

ErrorBundle difference_norms(const FeFunction& a, const FeFunction& b)
{
  const FeSpace& A = *a.space;
  const FeSpace& B = *b.space;
  if (&A.mesh() != &B.mesh())
    throw Error("difference_norms: functions live on different meshes");
  if (A.m() != B.m())
    throw Error("difference_norms: spaces of different order");
  const Triangulation& M = A.mesh();
  const int degree = std::min(max_triangle_degree,
                              2 * std::max(A.reference().max_degree, B.reference().max_degree));
  const bool split = A.reference().split || B.reference().split;
  const Tabulation& ta = A.tabulation(degree, split);
  const Tabulation& tb = B.tabulation(degree, split);
  std::vector<Sums> parts(worker_count());
  parallel_for(M.n_triangles(), [&](int begin, int end, int w) {
    std::vector<Jet> basis, ja, jb;
    for (int t = begin; t < end; ++t) {
      local_jets(a, t, ta, basis, ja);
      local_jets(b, t, tb, basis, jb);
      const double area = M.area(t);
      const double ih = inv_h2m(M, t, A.m());
      for (int q = 0; q < ta.n_points(); ++q) {
        Jet diff = ja[q];
        diff.axpy(-1.0, jb[q]);
        accumulate(parts[w], diff, ta.weights[q] * area, A.m(), ih);
      }
    }
  });
  return finish(parts, "function");
}

double energy_pw(const FeFunction& f) { return norms(f).energy_pw; }

double energy_pw_diff(const FeFunction& a, const FeFunction& b)
{
  return difference_norms(a, b).energy_pw;
}

ErrorBundle fine_grid_difference(const FeFunction& coarse, const FeFunction& fine,
                                 const std::vector<int>& ancestor)
{
  const FeSpace& F = *fine.space;
  const Triangulation& M = F.mesh();
  if (static_cast<int>(ancestor.size()) != M.n_triangles())
    throw Error("fine_grid_difference: ancestor map does not match the fine mesh");
  const FunctionEvaluator ev(coarse);
  const int degree = std::min(max_triangle_degree, 2 * std::max(F.reference().max_degree,
                                                                coarse.space->reference().max_degree));
  const Tabulation& tab = F.tabulation(degree, F.reference().split || coarse.space->reference().split);
  std::vector<Sums> parts(worker_count());
  parallel_for(M.n_triangles(), [&](int begin, int end, int w) {
    std::vector<Jet> basis, jf;
    for (int t = begin; t < end; ++t) {
      local_jets(fine, t, tab, basis, jf);
      const TriangleGeometry g(M, t);
      const double ih = inv_h2m(M, t, F.m());
      for (int q = 0; q < tab.n_points(); ++q) {
        Jet diff = ev(ancestor[t], g.to_physical(tab.ref_points[q]));
        diff.axpy(-1.0, jf[q]);
        accumulate(parts[w], diff, tab.weights[q] * g.area, F.m(), ih);
      }
    }
  });
  return finish(parts, "fine-grid");
}

RateFit convergence_rate(const std::vector<double>& h, const std::vector<double>& e, double floor)
{
  if (h.size() != e.size() || h.size() < 2)
    throw Error("convergence_rate: need at least two (h, e) pairs of equal length");
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(h[i] > 0.0))
      throw Error("convergence_rate: mesh sizes must be positive");
    if (i > 0 && !(h[i] < h[i - 1]))
      throw Error("convergence_rate: mesh sizes must decrease strictly");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  RateFit fit;
  auto ok = [&](std::size_t i) { return e[i] > floor; };
  for (std::size_t i = 0; i + 1 < h.size(); ++i)
    fit.rates.push_back(ok(i) && ok(i + 1) ? std::log(e[i] / e[i + 1]) / std::log(h[i] / h[i + 1])
                                           : nan);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!ok(i)) {
      fit.below_floor = true;
      continue;
    }
    const double x = std::log(h[i]), y = std::log(e[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  fit.ls_rate = n >= 2 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : nan;
  return fit;
}

} // namespace ncfem
