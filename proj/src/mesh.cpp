#include "msa/mesh.hpp"

#include "msa/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace msa {

namespace {

std::atomic<std::uint64_t> next_mesh_id{1};

constexpr std::array<std::array<int, 2>, 1> interval_edges{{{0, 1}}};
constexpr std::array<std::array<int, 2>, 3> triangle_edges{{{1, 2}, {0, 2}, {0, 1}}};
constexpr std::array<std::array<int, 2>, 6> tet_edges{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

double factorial(int n)
{
  double f = 1.0;
  for (int k = 2; k <= n; ++k)
    f *= k;
  return f;
}

// Sorted tuples of `width` vertices, deduplicated and numbered lexicographically.
template <std::size_t W>
void number_entities(const std::vector<std::array<int, W>>& per_cell, std::vector<int>& entities,
                     std::vector<int>& cell_to_entity)
{
  std::vector<int> order(per_cell.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return per_cell[a] < per_cell[b]; });
  cell_to_entity.assign(per_cell.size(), -1);
  entities.clear();
  int count = -1;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k == 0 || per_cell[order[k]] != per_cell[order[k - 1]]) {
      ++count;
      entities.insert(entities.end(), per_cell[order[k]].begin(), per_cell[order[k]].end());
    }
    cell_to_entity[order[k]] = count;
  }
}

} // namespace

std::span<const std::array<int, 2>> Mesh::local_edges(int tdim)
{
  switch (tdim) {
  case 1: return interval_edges;
  case 2: return triangle_edges;
  case 3: return tet_edges;
  default: throw InvalidArgument("local_edges: tdim must be 1, 2 or 3");
  }
}

Mesh::Mesh(int tdim, int gdim, std::vector<Point> vertices, std::vector<int> cells,
           std::optional<ParentMap> parent)
  : tdim_(tdim), gdim_(gdim), vertices_(std::move(vertices)), cells_(std::move(cells)),
    parent_(std::move(parent)), id_(next_mesh_id++)
{
  if (tdim < 1 || tdim > 3 || gdim < tdim || gdim > 3)
    throw InvalidArgument("Mesh: need 1 <= tdim <= gdim <= 3");
  if (cells_.empty() || cells_.size() % (tdim + 1) != 0)
    throw InvalidArgument("Mesh: cell array must hold a positive multiple of tdim+1 indices");
  for (int v : cells_)
    if (v < 0 || v >= num_vertices())
      throw InvalidArgument("Mesh: cell references a missing vertex");
  for (int c = 0; c < num_cells(); ++c)
    if (!(cell_volume(c) >= 1e-14)) {
      std::ostringstream msg;
      msg << "Mesh: cell " << c << " has measure " << cell_volume(c) << " < 1e-14";
      throw InvalidArgument(msg.str());
    }
  build_entities();
}

void Mesh::build_entities()
{
  const int nc = num_cells();
  const auto local = local_edges(tdim_);

  std::vector<std::array<int, 2>> cell_edge_tuples;
  cell_edge_tuples.reserve(nc * local.size());
  for (int c = 0; c < nc; ++c) {
    auto cv = cell(c);
    for (auto [a, b] : local) {
      std::array<int, 2> e{cv[a], cv[b]};
      std::sort(e.begin(), e.end());
      cell_edge_tuples.push_back(e);
    }
  }
  number_entities(cell_edge_tuples, edges_, cell_edges_);

  // Facets: local facet i drops local vertex i.
  auto facet_tuples = [&](auto width_tag) {
    constexpr std::size_t W = decltype(width_tag)::value;
    std::vector<std::array<int, W>> tuples;
    tuples.reserve(nc * (tdim_ + 1));
    for (int c = 0; c < nc; ++c) {
      auto cv = cell(c);
      for (int i = 0; i <= tdim_; ++i) {
        std::array<int, W> f{};
        std::size_t k = 0;
        for (int j = 0; j <= tdim_; ++j)
          if (j != i)
            f[k++] = cv[j];
        std::sort(f.begin(), f.end());
        tuples.push_back(f);
      }
    }
    number_entities(tuples, facets_, cell_facets_);
  };
  switch (tdim_) {
  case 1: facet_tuples(std::integral_constant<std::size_t, 1>{}); break;
  case 2: facet_tuples(std::integral_constant<std::size_t, 2>{}); break;
  default: facet_tuples(std::integral_constant<std::size_t, 3>{}); break;
  }

  const int nf = num_facets();
  facet_cell_offsets_.assign(nf + 1, 0);
  for (int f : cell_facets_)
    ++facet_cell_offsets_[f + 1];
  for (int f = 0; f < nf; ++f)
    facet_cell_offsets_[f + 1] += facet_cell_offsets_[f];
  facet_cells_.assign(facet_cell_offsets_.back(), -1);
  std::vector<int> fill(facet_cell_offsets_.begin(), facet_cell_offsets_.end() - 1);
  // Cells visited in ascending order, so each list ends up sorted.
  for (int c = 0; c < nc; ++c)
    for (int f : cell_facets(c))
      facet_cells_[fill[f]++] = c;
}

CellGeometry Mesh::geometry(int c) const
{
  CellGeometry g;
  g.tdim = tdim_;
  g.gdim = gdim_;
  auto cv = cell(c);
  const Point& v0 = vertices_[cv[0]];
  g.jacobian.resize(gdim_, tdim_);
  for (int j = 0; j < tdim_; ++j)
    for (int i = 0; i < gdim_; ++i)
      g.jacobian(i, j) = vertices_[cv[j + 1]][i] - v0[i];

  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3> jtj = g.jacobian.transpose() * g.jacobian;
  const double gram = jtj.determinant();
  if (tdim_ == gdim_)
    g.volume = std::abs(g.jacobian.determinant()) / factorial(tdim_);
  else
    g.volume = std::sqrt(std::max(gram, 0.0)) / factorial(tdim_);

  if (gram > 0)
    g.pseudo_inverse = jtj.inverse() * g.jacobian.transpose();
  else
    g.pseudo_inverse = Eigen::MatrixXd::Zero(tdim_, gdim_);

  g.grad_lambda.resize(tdim_ + 1, gdim_);
  g.grad_lambda.bottomRows(tdim_) = g.pseudo_inverse;
  g.grad_lambda.row(0) = -g.pseudo_inverse.colwise().sum();
  return g;
}

double Mesh::cell_volume(int c) const { return geometry(c).volume; }

Point Mesh::centroid(int c) const
{
  Point x{0, 0, 0};
  auto cv = cell(c);
  for (int v : cv)
    for (int i = 0; i < 3; ++i)
      x[i] += vertices_[v][i];
  for (double& xi : x)
    xi /= static_cast<double>(cv.size());
  return x;
}

Point Mesh::facet_midpoint(int f) const
{
  Point x{0, 0, 0};
  auto fv = facet(f);
  for (int v : fv)
    for (int i = 0; i < 3; ++i)
      x[i] += vertices_[v][i];
  for (double& xi : x)
    xi /= static_cast<double>(fv.size());
  return x;
}

Point Mesh::edge_midpoint(int e) const
{
  auto ev = edge(e);
  Point x;
  for (int i = 0; i < 3; ++i)
    x[i] = 0.5 * (vertices_[ev[0]][i] + vertices_[ev[1]][i]);
  return x;
}

double Mesh::total_volume() const
{
  double v = 0.0;
  for (int c = 0; c < num_cells(); ++c)
    v += cell_volume(c);
  return v;
}

void Mesh::write_ascii(std::ostream& out) const
{
  out << tdim_ << ' ' << gdim_ << ' ' << num_vertices() << ' ' << num_cells() << '\n';
  out << std::setprecision(17);
  for (const auto& p : vertices_) {
    for (int i = 0; i < gdim_; ++i)
      out << (i ? " " : "") << p[i];
    out << '\n';
  }
  for (int c = 0; c < num_cells(); ++c) {
    auto cv = cell(c);
    for (std::size_t i = 0; i < cv.size(); ++i)
      out << (i ? " " : "") << cv[i];
    out << '\n';
  }
}

MeshPtr unit_square_mesh(int n, int m, std::array<double, 2> offset, std::array<double, 2> extent)
{
  if (n < 1 || m < 1)
    throw InvalidArgument("unit_square_mesh: cell counts must be >= 1");
  if (!(extent[0] > 0) || !(extent[1] > 0))
    throw InvalidArgument("unit_square_mesh: extents must be positive");

  std::vector<Point> vertices;
  vertices.reserve((n + 1) * (m + 1));
  for (int j = 0; j <= m; ++j)
    for (int i = 0; i <= n; ++i)
      vertices.push_back({offset[0] + extent[0] * i / n, offset[1] + extent[1] * j / m, 0.0});

  std::vector<int> cells;
  cells.reserve(6 * n * m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) {
      const int v00 = j * (n + 1) + i;
      const int v10 = v00 + 1;
      const int v01 = v00 + n + 1;
      const int v11 = v01 + 1;
      cells.insert(cells.end(), {v00, v10, v11, v00, v11, v01});
    }
  return std::make_shared<Mesh>(2, 2, std::move(vertices), std::move(cells));
}

MeshPtr unit_cube_mesh(int n)
{
  if (n < 1)
    throw InvalidArgument("unit_cube_mesh: n must be >= 1");
  const int s = n + 1;
  auto index = [s](int i, int j, int k) { return (k * s + j) * s + i; };

  std::vector<Point> vertices;
  vertices.reserve(s * s * s);
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i)
        vertices.push_back({double(i) / n, double(j) / n, double(k) / n});

  static constexpr std::array<std::array<int, 3>, 6> perms{
    {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  std::vector<int> cells;
  cells.reserve(24 * n * n * n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (const auto& p : perms) {
          std::array<int, 3> c{i, j, k};
          cells.push_back(index(c[0], c[1], c[2]));
          for (int step = 0; step < 3; ++step) {
            ++c[p[step]];
            cells.push_back(index(c[0], c[1], c[2]));
          }
        }
  return std::make_shared<Mesh>(3, 3, std::move(vertices), std::move(cells));
}

MeshPtr polyline_mesh(std::span<const Point> points, int cells_per_segment, int gdim)
{
  if (points.size() < 2)
    throw InvalidArgument("polyline_mesh: need at least two points");
  if (cells_per_segment < 1)
    throw InvalidArgument("polyline_mesh: cells_per_segment must be >= 1");
  for (std::size_t k = 1; k < points.size(); ++k) {
    double d = 0.0;
    for (int i = 0; i < 3; ++i)
      d += (points[k][i] - points[k - 1][i]) * (points[k][i] - points[k - 1][i]);
    if (std::sqrt(d) < 1e-14)
      throw InvalidArgument("polyline_mesh: repeated consecutive points");
  }

  std::vector<Point> vertices{points[0]};
  std::vector<int> cells;
  for (std::size_t k = 1; k < points.size(); ++k)
    for (int j = 1; j <= cells_per_segment; ++j) {
      const double t = double(j) / cells_per_segment;
      Point x;
      for (int i = 0; i < 3; ++i)
        x[i] = (1 - t) * points[k - 1][i] + t * points[k][i];
      if (j == cells_per_segment)
        x = points[k];
      const int v = static_cast<int>(vertices.size());
      vertices.push_back(x);
      cells.insert(cells.end(), {v - 1, v});
    }
  return std::make_shared<Mesh>(1, gdim, std::move(vertices), std::move(cells));
}

namespace {

MeshPtr submesh_from_entities(const MeshPtr& parent, int entity_dim, const std::vector<int>& entities,
                              const std::vector<int>& parent_cells,
                              const std::function<std::span<const int>(int)>& entity_vertices)
{
  std::map<int, int> renumber;
  for (int e : entities)
    for (int v : entity_vertices(e))
      renumber.emplace(v, 0);
  ParentMap map;
  map.mesh = parent;
  map.entity_dim = entity_dim;
  map.entity = entities;
  map.cell = parent_cells;
  std::vector<Point> vertices;
  for (auto& [pv, local] : renumber) {
    local = static_cast<int>(vertices.size());
    vertices.push_back(parent->vertex(pv));
    map.vertex.push_back(pv);
  }
  std::vector<int> cells;
  for (int e : entities)
    for (int v : entity_vertices(e))
      cells.push_back(renumber.at(v));
  return std::make_shared<Mesh>(entity_dim, parent->gdim(), std::move(vertices), std::move(cells),
                                std::move(map));
}

} // namespace

MeshPtr facet_submesh(const MeshPtr& parent, const PointPredicate& predicate)
{
  std::vector<int> facets;
  std::vector<int> cells;
  for (int f = 0; f < parent->num_facets(); ++f) {
    bool selected = predicate(parent->facet_midpoint(f));
    for (int v : parent->facet(f))
      selected = selected && predicate(parent->vertex(v));
    if (selected) {
      facets.push_back(f);
      cells.push_back(parent->facet_cells(f)[0]);
    }
  }
  if (facets.empty())
    throw EmptyManifold("facet_submesh: predicate selects no facets");
  return submesh_from_entities(parent, parent->tdim() - 1, facets, cells,
                               [&](int f) { return parent->facet(f); });
}

MeshPtr cell_submesh(const MeshPtr& parent, const PointPredicate& predicate)
{
  std::vector<int> cells;
  for (int c = 0; c < parent->num_cells(); ++c)
    if (predicate(parent->centroid(c)))
      cells.push_back(c);
  if (cells.empty())
    throw EmptyManifold("cell_submesh: predicate selects no cells");
  return submesh_from_entities(parent, parent->tdim(), cells, cells,
                               [&](int c) { return parent->cell(c); });
}

Point interval_tangent(const Mesh& mesh, int c)
{
  if (mesh.tdim() != 1)
    throw InvalidArgument("interval_tangent: mesh is not an interval mesh");
  auto cv = mesh.cell(c);
  Point t;
  double len = 0.0;
  for (int i = 0; i < 3; ++i) {
    t[i] = mesh.vertex(cv[1])[i] - mesh.vertex(cv[0])[i];
    len += t[i] * t[i];
  }
  len = std::sqrt(len);
  for (double& ti : t)
    ti /= len;
  return t;
}

std::array<double, 4> barycentric(const Mesh& mesh, int c, const Point& x, double* distance)
{
  const CellGeometry g = mesh.geometry(c);
  const Point& v0 = mesh.vertex(mesh.cell(c)[0]);
  Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1> dx(mesh.gdim());
  for (int i = 0; i < mesh.gdim(); ++i)
    dx[i] = x[i] - v0[i];
  Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1> xi = g.pseudo_inverse * dx;
  std::array<double, 4> lambda{};
  lambda[0] = 1.0;
  for (int j = 0; j < mesh.tdim(); ++j) {
    lambda[j + 1] = xi[j];
    lambda[0] -= xi[j];
  }
  if (distance) {
    double d = (g.jacobian * xi - dx).norm();
    // Coordinates beyond gdim must vanish for the point to lie in the embedding.
    for (int i = mesh.gdim(); i < 3; ++i)
      d = std::hypot(d, x[i]);
    *distance = d;
  }
  return lambda;
}

CellLocator::CellLocator(MeshPtr mesh, double tol) : mesh_(std::move(mesh)), tol_(tol)
{
  const Mesh& m = *mesh_;
  const int gd = m.gdim();
  std::array<double, 3> hi{};
  for (int i = 0; i < 3; ++i) {
    lo_[i] = 0.0;
    hi[i] = 0.0;
  }
  for (int i = 0; i < gd; ++i) {
    lo_[i] = std::numeric_limits<double>::max();
    hi[i] = std::numeric_limits<double>::lowest();
  }
  for (const auto& p : m.vertices())
    for (int i = 0; i < gd; ++i) {
      lo_[i] = std::min(lo_[i], p[i]);
      hi[i] = std::max(hi[i], p[i]);
    }

  const int nc = m.num_cells();
  int per_axis = static_cast<int>(std::ceil(std::pow(double(nc), 1.0 / m.tdim()) - 1e-9));
  per_axis = std::max(per_axis, 1);
  int spanning = 0;
  for (int i = 0; i < gd; ++i)
    if (hi[i] - lo_[i] > tol_)
      ++spanning;
  // Manifold meshes would otherwise get per_axis^gdim mostly empty bins.
  if (m.tdim() < gd && spanning > m.tdim())
    per_axis = std::max(1, static_cast<int>(std::pow(8.0 * nc, 1.0 / spanning)));
  for (int i = 0; i < 3; ++i) {
    const bool active = i < gd && hi[i] - lo_[i] > tol_;
    bins_[i] = active ? per_axis : 1;
    width_[i] = active ? (hi[i] - lo_[i]) / per_axis : 1.0;
  }

  const int nbins = bins_[0] * bins_[1] * bins_[2];
  std::vector<std::vector<int>> lists(nbins);
  for (int c = 0; c < nc; ++c) {
    std::array<int, 3> b0{0, 0, 0}, b1{0, 0, 0};
    for (int i = 0; i < gd; ++i) {
      if (bins_[i] == 1)
        continue;
      double cmin = std::numeric_limits<double>::max(), cmax = std::numeric_limits<double>::lowest();
      for (int v : m.cell(c)) {
        cmin = std::min(cmin, m.vertex(v)[i]);
        cmax = std::max(cmax, m.vertex(v)[i]);
      }
      b0[i] = std::clamp(static_cast<int>(std::floor((cmin - tol_ - lo_[i]) / width_[i])), 0, bins_[i] - 1);
      b1[i] = std::clamp(static_cast<int>(std::floor((cmax + tol_ - lo_[i]) / width_[i])), 0, bins_[i] - 1);
    }
    for (int k = b0[2]; k <= b1[2]; ++k)
      for (int j = b0[1]; j <= b1[1]; ++j)
        for (int i = b0[0]; i <= b1[0]; ++i)
          lists[(k * bins_[1] + j) * bins_[0] + i].push_back(c);
  }
  bin_offsets_.assign(nbins + 1, 0);
  for (int b = 0; b < nbins; ++b)
    bin_offsets_[b + 1] = bin_offsets_[b] + static_cast<int>(lists[b].size());
  bin_cells_.reserve(bin_offsets_.back());
  for (auto& l : lists)
    bin_cells_.insert(bin_cells_.end(), l.begin(), l.end());
}

int CellLocator::bin_of(const Point& x, bool& inside) const
{
  inside = true;
  std::array<int, 3> b{0, 0, 0};
  for (int i = 0; i < mesh_->gdim(); ++i) {
    const double t = (x[i] - lo_[i]) / width_[i];
    // Degenerate axes are left to the containment test.
    if (bins_[i] == 1)
      continue;
    if (x[i] < lo_[i] - tol_ || x[i] > lo_[i] + bins_[i] * width_[i] + tol_)
      inside = false;
    b[i] = std::clamp(static_cast<int>(std::floor(t)), 0, bins_[i] - 1);
  }
  return (b[2] * bins_[1] + b[1]) * bins_[0] + b[0];
}

std::optional<std::array<double, 4>> CellLocator::contains(int c, const Point& x) const
{
  double distance = 0.0;
  auto lambda = barycentric(*mesh_, c, x, &distance);
  if (mesh_->tdim() < mesh_->gdim() && distance > tol_)
    return std::nullopt;
  for (int i = 0; i <= mesh_->tdim(); ++i)
    if (lambda[i] < -tol_ || lambda[i] > 1.0 + tol_)
      return std::nullopt;
  return lambda;
}

std::optional<CellLocator::Hit> CellLocator::try_locate(const Point& x) const
{
  bool inside = true;
  const int b = bin_of(x, inside);
  if (!inside)
    return std::nullopt;
  for (int k = bin_offsets_[b]; k < bin_offsets_[b + 1]; ++k) {
    const int c = bin_cells_[k];
    if (auto lambda = contains(c, x))
      return Hit{c, *lambda};
  }
  return std::nullopt;
}

CellLocator::Hit CellLocator::locate(const Point& x) const
{
  if (auto hit = try_locate(x))
    return *hit;
  std::ostringstream msg;
  msg << std::setprecision(17) << "point (" << x[0] << ", " << x[1] << ", " << x[2]
      << ") lies outside the mesh";
  throw OutOfDomain(msg.str(), x[0], x[1], x[2]);
}

} // namespace msa
