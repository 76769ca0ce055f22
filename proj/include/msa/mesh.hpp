#pragma once

#include "msa/linalg.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace msa {

using Point = std::array<double, 3>;
using PointPredicate = std::function<bool(const Point&)>;

/// |a - b| < tol, the usual boundary-marking helper.
inline bool near(double a, double b, double tol = 1e-10) { return (a > b ? a - b : b - a) < tol; }

class Mesh;
using MeshPtr = std::shared_ptr<const Mesh>;

/// Links the cells of a derived mesh to entities of the mesh it was cut from.
struct ParentMap
{
  MeshPtr mesh;
  int entity_dim = 0;         ///< topological dimension of the parent entities
  std::vector<int> entity;    ///< child cell -> parent entity (facet or cell)
  std::vector<int> cell;      ///< child cell -> parent cell the entity belongs to
  std::vector<int> vertex;    ///< child vertex -> parent vertex
};

/// Affine data of one simplex: x = v0 + J * xi, barycentric gradients per vertex.
struct CellGeometry
{
  int tdim = 0;
  int gdim = 0;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3> jacobian;      // gdim x tdim
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3> pseudo_inverse; // tdim x gdim
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 3> grad_lambda;    // (tdim+1) x gdim
  double volume = 0.0;
};

/// Simplicial mesh of topological dimension 1, 2 or 3 embedded in gdim >= tdim.
///
/// Edges and facets are numbered by lexicographic order of their sorted vertex
/// tuples, so the numbering only depends on the cell array.
class Mesh
{
public:
  Mesh(int tdim, int gdim, std::vector<Point> vertices, std::vector<int> cells,
       std::optional<ParentMap> parent = std::nullopt);

  int tdim() const { return tdim_; }
  int gdim() const { return gdim_; }
  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()) / (tdim_ + 1); }
  int num_edges() const { return static_cast<int>(edges_.size()) / 2; }
  int num_facets() const { return static_cast<int>(facets_.size()) / tdim_; }

  const Point& vertex(int v) const { return vertices_[v]; }
  const std::vector<Point>& vertices() const { return vertices_; }
  std::span<const int> cell(int c) const
  {
    return {cells_.data() + c * (tdim_ + 1), static_cast<std::size_t>(tdim_ + 1)};
  }
  const std::vector<int>& cell_array() const { return cells_; }

  std::span<const int> edge(int e) const { return {edges_.data() + 2 * e, 2}; }
  std::span<const int> cell_edges(int c) const
  {
    return {cell_edges_.data() + c * edges_per_cell(), static_cast<std::size_t>(edges_per_cell())};
  }
  int edges_per_cell() const { return tdim_ * (tdim_ + 1) / 2; }

  std::span<const int> facet(int f) const
  {
    return {facets_.data() + f * tdim_, static_cast<std::size_t>(tdim_)};
  }
  /// Local facet i is opposite local vertex i.
  std::span<const int> cell_facets(int c) const
  {
    return {cell_facets_.data() + c * (tdim_ + 1), static_cast<std::size_t>(tdim_ + 1)};
  }
  /// Cells adjacent to a facet in ascending order (one or two entries).
  std::span<const int> facet_cells(int f) const
  {
    return {facet_cells_.data() + facet_cell_offsets_[f],
            static_cast<std::size_t>(facet_cell_offsets_[f + 1] - facet_cell_offsets_[f])};
  }

  /// Local vertex pairs of the cell edges, in cell_edges() order.
  static std::span<const std::array<int, 2>> local_edges(int tdim);

  CellGeometry geometry(int c) const;
  double cell_volume(int c) const;
  Point centroid(int c) const;
  Point facet_midpoint(int f) const;
  Point edge_midpoint(int e) const;
  double total_volume() const;

  const std::optional<ParentMap>& parent() const { return parent_; }

  /// Process-unique identifier, used as a cache key.
  std::uint64_t id() const { return id_; }

  /// "tdim gdim nv nc" header, vertex lines, cell lines; 17 significant digits.
  void write_ascii(std::ostream& out) const;

private:
  void build_entities();

  int tdim_;
  int gdim_;
  std::vector<Point> vertices_;
  std::vector<int> cells_;
  std::vector<int> edges_;
  std::vector<int> cell_edges_;
  std::vector<int> facets_;
  std::vector<int> cell_facets_;
  std::vector<int> facet_cells_;
  std::vector<int> facet_cell_offsets_;
  std::optional<ParentMap> parent_;
  std::uint64_t id_;
};

/// n x m rectangles over [offset, offset + extent], each split along the
/// diagonal from its lower-left vertex.
MeshPtr unit_square_mesh(int n, int m, std::array<double, 2> offset = {0.0, 0.0},
                         std::array<double, 2> extent = {1.0, 1.0});

/// n^3 sub-cubes of [0,1]^3, each split into 6 tetrahedra around its main diagonal.
MeshPtr unit_cube_mesh(int n);

/// Interval mesh along the polyline through `points`, embedded in gdim dimensions
/// (2d points carry z = 0).
MeshPtr polyline_mesh(std::span<const Point> points, int cells_per_segment, int gdim = 3);

/// Mesh of the parent facets whose vertices and midpoint satisfy `predicate`.
MeshPtr facet_submesh(const MeshPtr& parent, const PointPredicate& predicate);

/// Same-dimension submesh of the parent cells whose centroid satisfies `predicate`.
MeshPtr cell_submesh(const MeshPtr& parent, const PointPredicate& predicate);

/// Unit tangent of an interval cell (direction of its second vertex).
Point interval_tangent(const Mesh& mesh, int c);

/// Uniform background grid over cell bounding boxes for point location.
class CellLocator
{
public:
  explicit CellLocator(MeshPtr mesh, double tol = 1e-10);

  struct Hit
  {
    int cell = -1;
    std::array<double, 4> barycentric{};
  };

  /// Lowest-index cell containing x; throws OutOfDomain.
  Hit locate(const Point& x) const;
  std::optional<Hit> try_locate(const Point& x) const;

  /// Barycentric coordinates of x in cell c if x lies in it up to the tolerance.
  std::optional<std::array<double, 4>> contains(int c, const Point& x) const;

  const MeshPtr& mesh() const { return mesh_; }
  double tolerance() const { return tol_; }

private:
  int bin_of(const Point& x, bool& inside) const;

  MeshPtr mesh_;
  double tol_;
  std::array<double, 3> lo_{};
  std::array<double, 3> width_{};
  std::array<int, 3> bins_{1, 1, 1};
  std::vector<int> bin_offsets_;
  std::vector<int> bin_cells_;
};

/// Barycentric coordinates of x relative to cell c and distance of x from the
/// cell's affine hull.
std::array<double, 4> barycentric(const Mesh& mesh, int c, const Point& x, double* distance = nullptr);

} // namespace msa
