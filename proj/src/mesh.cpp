#include "ncfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_map>

namespace ncfem {

namespace {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c)
{
  return 0.5 * ((b(0) - a(0)) * (c(1) - a(1)) - (b(1) - a(1)) * (c(0) - a(0)));
}

std::uint64_t edge_key(int a, int b)
{
  if (a > b)
    std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

std::string tri_name(int t, const std::array<int, 3>& tri)
{
  std::ostringstream s;
  s << "triangle " << t << " (" << tri[0] << ", " << tri[1] << ", " << tri[2] << ")";
  return s.str();
}

} // namespace

Triangulation::Triangulation(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles))
{
  const int nv = n_vertices();
  const int nt = n_triangles();
  if (nv == 0 || nt == 0)
    throw TopologyError("mesh has no vertices or no triangles");

  Vec2 lo = vertices_[0], hi = vertices_[0];
  for (const auto& p : vertices_) {
    if (!std::isfinite(p(0)) || !std::isfinite(p(1)))
      throw TopologyError("non-finite vertex coordinate");
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double diag = (hi - lo).norm();

  // Duplicate vertices: sort by x and scan a tolerance window.
  {
    const double tol = 1e-12 * diag;
    std::vector<int> order(nv);
    for (int i = 0; i < nv; ++i)
      order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return vertices_[a](0) < vertices_[b](0);
    });
    for (int i = 0; i < nv; ++i)
      for (int j = i + 1; j < nv && vertices_[order[j]](0) - vertices_[order[i]](0) <= tol; ++j)
        if ((vertices_[order[j]] - vertices_[order[i]]).norm() <= tol)
          throw TopologyError("duplicate vertices " + std::to_string(order[i]) + " and " +
                              std::to_string(order[j]));
  }

  for (int t = 0; t < nt; ++t) {
    const auto& tri = triangles_[t];
    for (int k = 0; k < 3; ++k)
      if (tri[k] < 0 || tri[k] >= nv)
        throw TopologyError(tri_name(t, tri) + " has a vertex index out of range");
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw TopologyError(tri_name(t, tri) + " repeats a vertex");
    const double a = signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
    if (!(a > 1e-14 * diag * diag))
      throw TopologyError(tri_name(t, tri) + " has non-positive area");
  }

  triangle_edges_.assign(nt, {-1, -1, -1});
  edge_signs_.assign(nt, {1, 1, 1});
  std::unordered_map<std::uint64_t, int> index;
  index.reserve(3 * static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    const auto& tri = triangles_[t];
    for (int k = 0; k < 3; ++k) {
      const int a = tri[(k + 1) % 3], b = tri[(k + 2) % 3];
      auto [it, inserted] = index.try_emplace(edge_key(a, b), n_edges());
      if (inserted) {
        Edge e;
        e.v = {std::min(a, b), std::max(a, b)};
        e.tri = {t, -1};
        e.local = {k, -1};
        edges_.push_back(e);
      } else {
        Edge& e = edges_[it->second];
        if (e.tri[1] != -1)
          throw TopologyError("edge (" + std::to_string(e.v[0]) + ", " + std::to_string(e.v[1]) +
                              ") is shared by more than two triangles, including " +
                              tri_name(t, tri));
        e.tri[1] = t;
        e.local[1] = k;
      }
      triangle_edges_[t][k] = it->second;
    }
  }

  boundary_vertex_.assign(nv, false);
  std::vector<int> boundary_degree(nv, 0);
  for (auto& e : edges_) {
    e.boundary = e.tri[1] == -1;
    const Vec2& p = vertices_[e.v[0]];
    const Vec2& q = vertices_[e.v[1]];
    e.length = (q - p).norm();
    e.midpoint = 0.5 * (p + q);
    // Outward normal of tri[0]: local edge runs counterclockwise from vertex k+1 to k+2.
    const auto& tri = triangles_[e.tri[0]];
    const int k = e.local[0];
    const Vec2 d = vertices_[tri[(k + 2) % 3]] - vertices_[tri[(k + 1) % 3]];
    e.normal = Vec2(d(1), -d(0)) / e.length;
    e.tangent = Vec2(-e.normal(1), e.normal(0));
    if (e.boundary) {
      boundary_vertex_[e.v[0]] = boundary_vertex_[e.v[1]] = true;
      ++boundary_degree[e.v[0]];
      ++boundary_degree[e.v[1]];
    } else {
      edge_signs_[e.tri[1]][e.local[1]] = -1;
    }
  }
  for (int v = 0; v < nv; ++v)
    if (boundary_degree[v] % 2 != 0)
      throw TopologyError("boundary edges do not form closed loops at vertex " + std::to_string(v));

  std::vector<bool> used(nv, false);
  for (const auto& tri : triangles_)
    for (int k : tri)
      used[k] = true;
  for (int v = 0; v < nv; ++v)
    if (!used[v])
      throw TopologyError("vertex " + std::to_string(v) + " belongs to no triangle");
}

int Triangulation::n_interior_edges() const
{
  return static_cast<int>(
      std::count_if(edges_.begin(), edges_.end(), [](const Edge& e) { return !e.boundary; }));
}

int Triangulation::n_interior_vertices() const
{
  return static_cast<int>(std::count(boundary_vertex_.begin(), boundary_vertex_.end(), false));
}

double Triangulation::area(int t) const
{
  const auto& tri = triangles_[t];
  return signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
}

double Triangulation::diameter(int t) const
{
  const auto& tri = triangles_[t];
  double d = 0.0;
  for (int k = 0; k < 3; ++k)
    d = std::max(d, (vertices_[tri[(k + 1) % 3]] - vertices_[tri[k]]).norm());
  return d;
}

Vec2 Triangulation::centroid(int t) const
{
  const auto& tri = triangles_[t];
  return (vertices_[tri[0]] + vertices_[tri[1]] + vertices_[tri[2]]) / 3.0;
}

double Triangulation::min_angle() const
{
  double best = std::numbers::pi;
  for (const auto& tri : triangles_)
    for (int k = 0; k < 3; ++k) {
      const Vec2 a = vertices_[tri[(k + 1) % 3]] - vertices_[tri[k]];
      const Vec2 b = vertices_[tri[(k + 2) % 3]] - vertices_[tri[k]];
      const double c = std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0);
      best = std::min(best, std::acos(c));
    }
  return best;
}

double Triangulation::h_max(HConvention c) const
{
  const MeshSize h = mesh_size(*this, c);
  return *std::max_element(h.per_triangle_h.begin(), h.per_triangle_h.end());
}

double Triangulation::total_area() const
{
  double s = 0.0;
  for (int t = 0; t < n_triangles(); ++t)
    s += area(t);
  return s;
}

std::vector<std::vector<int>> Triangulation::vertex_triangles() const
{
  std::vector<std::vector<int>> out(n_vertices());
  for (int t = 0; t < n_triangles(); ++t)
    for (int k : triangles_[t])
      out[k].push_back(t);
  return out;
}

MeshSize mesh_size(const Triangulation& mesh, HConvention convention)
{
  MeshSize h;
  h.convention = convention;
  h.per_triangle_h.resize(mesh.n_triangles());
  for (int t = 0; t < mesh.n_triangles(); ++t)
    h.per_triangle_h[t] =
        convention == HConvention::diameter ? mesh.diameter(t) : std::sqrt(mesh.area(t));
  return h;
}

namespace {

// Structured grid of nx by ny cells of width 1/per_unit anchored at `origin`; cells for which
// keep(i, j) is false are skipped. Every cell is split along its (i,j)-(i+1,j+1) diagonal.
template <class Keep>
Triangulation grid_mesh(int nx, int ny, int per_unit, Vec2 origin, Keep keep)
{
  std::vector<int> id((nx + 1) * (ny + 1), -1);
  auto at = [&](int i, int j) -> int& { return id[j * (nx + 1) + i]; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (keep(i, j))
        at(i, j) = at(i + 1, j) = at(i, j + 1) = at(i + 1, j + 1) = 0;

  std::vector<Vec2> verts;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      if (at(i, j) == 0) {
        at(i, j) = static_cast<int>(verts.size());
        verts.emplace_back(origin(0) + static_cast<double>(i) / per_unit,
                           origin(1) + static_cast<double>(j) / per_unit);
      }

  std::vector<std::array<int, 3>> tris;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (keep(i, j)) {
        tris.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
        tris.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
      }
  return Triangulation(std::move(verts), std::move(tris));
}

} // namespace

Triangulation unit_square_mesh(int n)
{
  if (n < 1)
    throw Error("unit_square_mesh: n must be positive");
  return grid_mesh(n, n, n, Vec2(0.0, 0.0), [](int, int) { return true; });
}

Triangulation l_shape_mesh(int n)
{
  if (n < 1)
    throw Error("l_shape_mesh: n must be positive");
  // Removed quadrant [0,1) x (-1,0] corresponds to cells i >= n, j < n.
  return grid_mesh(2 * n, 2 * n, n, Vec2(-1.0, -1.0),
                   [n](int i, int j) { return !(i >= n && j < n); });
}

Triangulation red_refine(const Triangulation& mesh)
{
  const int nv = mesh.n_vertices();
  std::vector<Vec2> verts = mesh.vertices();
  verts.reserve(nv + mesh.n_edges());
  for (const auto& e : mesh.edges())
    verts.push_back(e.midpoint);

  std::vector<std::array<int, 3>> tris;
  tris.reserve(4 * static_cast<std::size_t>(mesh.n_triangles()));
  std::vector<int> parent;
  parent.reserve(4 * static_cast<std::size_t>(mesh.n_triangles()));
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& v = mesh.triangle(t);
    const int m0 = nv + mesh.triangle_edge(t, 0);
    const int m1 = nv + mesh.triangle_edge(t, 1);
    const int m2 = nv + mesh.triangle_edge(t, 2);
    tris.push_back({v[0], m2, m1});
    tris.push_back({m2, v[1], m0});
    tris.push_back({m1, m0, v[2]});
    tris.push_back({m0, m1, m2});
    for (int c = 0; c < 4; ++c)
      parent.push_back(t);
  }
  Triangulation fine(std::move(verts), std::move(tris));
  fine.parent_ = std::move(parent);
  return fine;
}

std::vector<int> ancestor_map(const std::vector<const Triangulation*>& chain)
{
  if (chain.empty())
    throw Error("ancestor_map: empty chain");
  std::vector<int> anc(chain.back()->n_triangles());
  for (int t = 0; t < static_cast<int>(anc.size()); ++t)
    anc[t] = t;
  for (std::size_t level = chain.size() - 1; level > 0; --level) {
    const auto& par = chain[level]->parents();
    if (static_cast<int>(par.size()) != chain[level]->n_triangles())
      throw Error("ancestor_map: mesh is not a red refinement of its predecessor");
    for (int& a : anc)
      a = par[a];
  }
  return anc;
}

std::array<double, 3> barycentric(const Triangulation& mesh, int t, const Vec2& p)
{
  const auto& tri = mesh.triangle(t);
  const Vec2& a = mesh.vertex(tri[0]);
  const Vec2& b = mesh.vertex(tri[1]);
  const Vec2& c = mesh.vertex(tri[2]);
  const double det = 2.0 * signed_area(a, b, c);
  const double l1 = ((p(0) - a(0)) * (c(1) - a(1)) - (p(1) - a(1)) * (c(0) - a(0))) / det;
  const double l2 = ((b(0) - a(0)) * (p(1) - a(1)) - (b(1) - a(1)) * (p(0) - a(0))) / det;
  return {1.0 - l1 - l2, l1, l2};
}

//----------------------------------------------------------------------------
// Text format

std::string mesh_to_string(const Triangulation& mesh)
{
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10);
  s << "ncfem-mesh v1\n";
  s << mesh.n_vertices() << ' ' << mesh.n_boundary_edges() << ' ' << mesh.n_triangles() << '\n';
  for (const auto& p : mesh.vertices())
    s << p(0) << ' ' << p(1) << '\n';
  for (const auto& t : mesh.triangles())
    s << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto& e : mesh.edges())
    if (e.boundary)
      s << e.v[0] << ' ' << e.v[1] << '\n';
  return s.str();
}

void save_mesh(const Triangulation& mesh, const std::string& path)
{
  std::ofstream out(path);
  if (!out)
    throw Error("cannot open " + path + " for writing");
  out << mesh_to_string(mesh);
  if (!out)
    throw Error("failed writing " + path);
}

Triangulation mesh_from_string(const std::string& text)
{
  // Logical records: (line number, tokens) with comments and blank lines dropped.
  std::vector<std::pair<int, std::vector<std::string>>> rec;
  {
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      if (auto h = line.find('#'); h != std::string::npos)
        line.erase(h);
      std::istringstream ls(line);
      std::vector<std::string> tok;
      for (std::string w; ls >> w;)
        tok.push_back(w);
      if (!tok.empty())
        rec.emplace_back(no, std::move(tok));
    }
  }
  std::size_t r = 0;
  auto need = [&](std::size_t count, const char* what) -> const std::vector<std::string>& {
    if (r >= rec.size())
      throw ParseError(std::string("unexpected end of file, expected ") + what,
                       rec.empty() ? 1 : rec.back().first + 1);
    const auto& tok = rec[r].second;
    if (tok.size() != count)
      throw ParseError(std::string("expected ") + std::to_string(count) + " fields for " + what,
                       rec[r].first);
    return tok;
  };
  auto to_int = [&](const std::string& s) {
    std::size_t pos = 0;
    long v = 0;
    try {
      v = std::stol(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || v < 0 || v > std::numeric_limits<int>::max())
      throw ParseError("invalid non-negative integer '" + s + "'", rec[r].first);
    return static_cast<int>(v);
  };
  auto to_double = [&](const std::string& s) {
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size())
      throw ParseError("invalid number '" + s + "'", rec[r].first);
    return v;
  };

  {
    const auto& h = need(2, "header");
    if (h[0] != "ncfem-mesh" || h[1] != "v1")
      throw ParseError("expected header 'ncfem-mesh v1'", rec[r].first);
    ++r;
  }
  const auto& cnt = need(3, "counts 'V E_b F'");
  const int nv = to_int(cnt[0]), nb = to_int(cnt[1]), nt = to_int(cnt[2]);
  ++r;

  std::vector<Vec2> verts(nv);
  for (int i = 0; i < nv; ++i, ++r) {
    const auto& tok = need(2, "vertex 'x y'");
    verts[i] = Vec2(to_double(tok[0]), to_double(tok[1]));
  }
  std::vector<std::array<int, 3>> tris(nt);
  for (int i = 0; i < nt; ++i, ++r) {
    const auto& tok = need(3, "triangle 'i j k'");
    for (int k = 0; k < 3; ++k) {
      tris[i][k] = to_int(tok[k]);
      if (tris[i][k] >= nv)
        throw ParseError("vertex index " + tok[k] + " out of range", rec[r].first);
    }
  }
  std::set<std::pair<int, int>> listed;
  for (int i = 0; i < nb; ++i, ++r) {
    const auto& tok = need(2, "boundary edge 'i j'");
    int a = to_int(tok[0]), b = to_int(tok[1]);
    if (a >= nv || b >= nv)
      throw ParseError("vertex index out of range", rec[r].first);
    listed.emplace(std::min(a, b), std::max(a, b));
  }
  if (r != rec.size())
    throw ParseError("trailing content", rec[r].first);

  Triangulation mesh(std::move(verts), std::move(tris));
  std::set<std::pair<int, int>> actual;
  for (const auto& e : mesh.edges())
    if (e.boundary)
      actual.emplace(e.v[0], e.v[1]);
  if (actual != listed)
    throw TopologyError("listed boundary edges do not match the boundary of the triangulation");
  return mesh;
}

Triangulation load_mesh(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return mesh_from_string(buf.str());
}

} // namespace ncfem
