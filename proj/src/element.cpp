#include "ncfem/element.hpp"

#include <Eigen/SVD>

#include <algorithm>

namespace ncfem {

Poly::Poly(int degree) : degree_(degree), c_(size(degree), 0.0) {}

Poly Poly::constant(double c)
{
  Poly p(0);
  p.c_[0] = c;
  return p;
}

Poly Poly::barycentric(int k)
{
  Poly p(1);
  if (k == 0) {
    p.coeff(0, 0) = 1.0;
    p.coeff(1, 0) = -1.0;
    p.coeff(0, 1) = -1.0;
  } else if (k == 1) {
    p.coeff(1, 0) = 1.0;
  } else {
    p.coeff(0, 1) = 1.0;
  }
  return p;
}

Poly Poly::operator+(const Poly& o) const
{
  Poly r(std::max(degree_, o.degree_));
  for (std::size_t i = 0; i < c_.size(); ++i)
    r.c_[i] += c_[i];
  for (std::size_t i = 0; i < o.c_.size(); ++i)
    r.c_[i] += o.c_[i];
  return r;
}

Poly Poly::operator-(const Poly& o) const { return *this + o * -1.0; }

Poly Poly::operator*(double s) const
{
  Poly r = *this;
  for (double& v : r.c_)
    v *= s;
  return r;
}

Poly Poly::operator*(const Poly& o) const
{
  Poly r(degree_ + o.degree_);
  for (int d1 = 0; d1 <= degree_; ++d1)
    for (int j1 = 0; j1 <= d1; ++j1) {
      const double a = coeff(d1 - j1, j1);
      if (a == 0.0)
        continue;
      for (int d2 = 0; d2 <= o.degree_; ++d2)
        for (int j2 = 0; j2 <= d2; ++j2)
          r.coeff(d1 - j1 + d2 - j2, j1 + j2) += a * o.coeff(d2 - j2, j2);
    }
  return r;
}

Jet Poly::jet(double x, double y) const
{
  double px[24], py[24];
  px[0] = py[0] = 1.0;
  for (int k = 1; k <= degree_; ++k) {
    px[k] = px[k - 1] * x;
    py[k] = py[k - 1] * y;
  }
  Jet r;
  for (int d = 0; d <= degree_; ++d)
    for (int j = 0; j <= d; ++j) {
      const int i = d - j;
      const double c = c_[index(i, j)];
      if (c == 0.0)
        continue;
      r.value += c * px[i] * py[j];
      if (i >= 1)
        r.grad(0) += c * i * px[i - 1] * py[j];
      if (j >= 1)
        r.grad(1) += c * j * px[i] * py[j - 1];
      if (i >= 2)
        r.hess(0, 0) += c * i * (i - 1) * px[i - 2] * py[j];
      if (i >= 1 && j >= 1)
        r.hess(0, 1) += c * i * j * px[i - 1] * py[j - 1];
      if (j >= 2)
        r.hess(1, 1) += c * j * (j - 1) * px[i] * py[j - 2];
    }
  r.hess(1, 0) = r.hess(0, 1);
  return r;
}

int locate_piece(bool split, double xi, double eta)
{
  if (!split)
    return 0;
  const double l[3] = {1.0 - xi - eta, xi, eta};
  return static_cast<int>(std::min_element(l, l + 3) - l);
}

namespace {

const Vec2 ref_vertex[3] = {Vec2(0.0, 0.0), Vec2(1.0, 0.0), Vec2(0.0, 1.0)};
const Vec2 ref_centroid(1.0 / 3.0, 1.0 / 3.0);

ReferenceElement single_piece(std::vector<Poly> polys)
{
  ReferenceElement e;
  for (auto& p : polys) {
    e.max_degree = std::max(e.max_degree, p.degree());
    e.basis.push_back({std::move(p)});
  }
  return e;
}

Poly lam(int k) { return Poly::barycentric(k); }

} // namespace

Vec2 piece_point(int piece, const std::array<double, 3>& mu)
{
  return mu[0] * ref_vertex[(piece + 1) % 3] + mu[1] * ref_vertex[(piece + 2) % 3] +
         mu[2] * ref_centroid;
}

const ReferenceElement& cr_reference()
{
  static const ReferenceElement e = [] {
    std::vector<Poly> b;
    for (int k = 0; k < 3; ++k)
      b.push_back(Poly::constant(1.0) - 2.0 * lam(k));
    return single_piece(std::move(b));
  }();
  return e;
}

const ReferenceElement& morley_reference()
{
  static const ReferenceElement e = [] {
    std::vector<Poly> b;
    for (int d = 0; d <= 2; ++d)
      for (int j = 0; j <= d; ++j) {
        Poly p(2);
        p.coeff(d - j, j) = 1.0;
        b.push_back(p);
      }
    return single_piece(std::move(b));
  }();
  return e;
}

const ReferenceElement& companion_cr_reference()
{
  static const ReferenceElement e = [] {
    std::vector<Poly> b;
    for (int k = 0; k < 3; ++k)
      b.push_back(lam(k));
    // Edge bubbles with unit mean on their own edge.
    for (int k = 0; k < 3; ++k)
      b.push_back(6.0 * lam((k + 1) % 3) * lam((k + 2) % 3));
    const Poly bubble = 27.0 * lam(0) * lam(1) * lam(2);
    b.push_back(bubble);
    b.push_back(bubble * (lam(1) - lam(0)));
    b.push_back(bubble * (lam(2) - lam(0)));
    return single_piece(std::move(b));
  }();
  return e;
}

const ReferenceElement& hct_reference()
{
  static const ReferenceElement e = [] {
    // Unknowns: cubic coefficients of the three pieces. Rows: jumps of value and gradient
    // across each interior subedge (centroid -> v_k, shared by pieces k+1 and k+2) at four
    // points, which pins down C^1 continuity of cubics along a segment.
    const int nc = Poly::size(3);
    DenseMatrix M = DenseMatrix::Zero(36, 3 * nc);
    int row = 0;
    for (int k = 0; k < 3; ++k) {
      const int pa = (k + 1) % 3, pb = (k + 2) % 3;
      for (int s = 0; s < 4; ++s) {
        const Vec2 p = ref_centroid + (s / 3.0) * (ref_vertex[k] - ref_centroid);
        for (int d = 0; d <= 3; ++d)
          for (int j = 0; j <= d; ++j) {
            Poly mono(3);
            mono.coeff(d - j, j) = 1.0;
            const int col = Poly::index(d - j, j);
            const Jet q = mono.jet(p(0), p(1));
            const double vals[3] = {q.value, q.grad(0), q.grad(1)};
            for (int r = 0; r < 3; ++r) {
              M(row + r, pa * nc + col) += vals[r];
              M(row + r, pb * nc + col) -= vals[r];
            }
          }
        row += 3;
      }
    }
    Eigen::JacobiSVD<DenseMatrix> svd(M, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(17) < 1e-8 || (sv.size() > 18 && sv(18) > 1e-10))
      throw Error("HCT constraint matrix has unexpected rank");
    const DenseMatrix& V = svd.matrixV();

    ReferenceElement el;
    el.split = true;
    el.max_degree = 3;
    for (int b = 0; b < 12; ++b) {
      std::vector<Poly> pieces(3, Poly(3));
      for (int piece = 0; piece < 3; ++piece)
        for (int d = 0; d <= 3; ++d)
          for (int j = 0; j <= d; ++j)
            pieces[piece].coeff(d - j, j) = V(piece * nc + Poly::index(d - j, j), 18 + b);
      el.basis.push_back(std::move(pieces));
    }
    return el;
  }();
  return e;
}

const ReferenceElement& companion_morley_reference()
{
  static const ReferenceElement e = [] {
    ReferenceElement el = hct_reference();
    const Poly b = 27.0 * lam(0) * lam(1) * lam(2);
    const Poly b2 = b * b;
    const Poly q[6] = {lam(0) * lam(0), lam(1) * lam(1), lam(2) * lam(2),
                       lam(0) * lam(1), lam(1) * lam(2), lam(2) * lam(0)};
    for (const auto& qi : q) {
      const Poly f = b2 * qi;
      el.basis.push_back({f, f, f});
    }
    el.max_degree = 8;
    return el;
  }();
  return e;
}

} // namespace ncfem
