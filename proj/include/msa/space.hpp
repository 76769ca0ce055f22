#pragma once

#include "msa/mesh.hpp"

#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace msa {

/// Value shape of a field: scalar, vector(n) or matrix(n, m).
struct Shape
{
  int rank = 0;
  std::array<int, 2> dims{1, 1};

  static Shape scalar() { return {}; }
  static Shape vector(int n) { return {1, {n, 1}}; }
  static Shape matrix(int n, int m) { return {2, {n, m}}; }

  int size() const { return rank == 0 ? 1 : rank == 1 ? dims[0] : dims[0] * dims[1]; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// An analytic field, evaluated pointwise (row-major for matrices).
struct Field
{
  Shape shape;
  std::function<void(const Point&, std::span<double>)> eval;
  int degree = 2; ///< polynomial degree assumed by quadrature estimation
};

Field scalar_field(std::function<double(const Point&)> f, int degree = 2);
Field vector_field(int dim, std::function<std::array<double, 3>(const Point&)> f, int degree = 2);
Field constant_field(double value);

enum class Family { Lagrange, DiscontinuousLagrange, RaviartThomas };

struct Element
{
  Family family = Family::Lagrange;
  int degree = 1;
  bool vector = false;

  static Element P(int k) { return {Family::Lagrange, k, false}; }
  static Element VectorP(int k) { return {Family::Lagrange, k, true}; }
  static Element DG0() { return {Family::DiscontinuousLagrange, 0, false}; }
  static Element VectorDG0() { return {Family::DiscontinuousLagrange, 0, true}; }
  static Element RT0() { return {Family::RaviartThomas, 1, true}; }

  bool operator==(const Element&) const = default;
  std::string str() const;
};

/// Basis functions of one cell at one point: value[dof][comp], grad[dof][comp][dir].
struct BasisTable
{
  int ndofs = 0;
  int vsize = 1;
  int gdim = 2;
  std::vector<double> values;
  std::vector<double> grads;

  double value(int dof, int comp) const { return values[dof * vsize + comp]; }
  double grad(int dof, int comp, int dir) const { return grads[(dof * vsize + comp) * gdim + dir]; }
};

/// A sparse row over the global dofs of a space.
using SparseRow = std::vector<std::pair<int, double>>;

class FunctionSpace;
using SpacePtr = std::shared_ptr<const FunctionSpace>;

/// Finite element space: element + global dof numbering over a mesh.
///
/// Dofs are numbered vertices first, then edges, then cells, each in mesh
/// order; vector components of a node are adjacent.
class FunctionSpace
{
public:
  static SpacePtr build(MeshPtr mesh, Element element);

  const MeshPtr& mesh() const { return mesh_; }
  const Element& element() const { return element_; }
  int dim() const { return dim_; }
  int dofs_per_cell() const { return dofs_per_cell_; }
  std::span<const int> cell_dofs(int c) const
  {
    return {dofmap_.data() + c * dofs_per_cell_, static_cast<std::size_t>(dofs_per_cell_)};
  }
  Shape value_shape() const { return element_.vector ? Shape::vector(mesh_->gdim()) : Shape::scalar(); }
  int value_size() const { return value_shape().size(); }

  /// Point-evaluation coordinate (Lagrange), cell centroid (P0) or edge midpoint (RT0).
  const Point& dof_coordinate(int dof) const { return dof_coords_[dof]; }
  /// Vector component a Lagrange dof evaluates (0 for scalar spaces).
  int dof_component(int dof) const { return dof_component_[dof]; }
  /// Orientation of local RT0 dof k of cell c relative to the global edge normal.
  int rt_sign(int c, int k) const { return rt_signs_[c * 3 + k]; }
  /// Global unit normal of an edge: (t_y, -t_x) for t from its lower to higher vertex.
  std::array<double, 2> edge_normal(int e) const;

  void tabulate(int cell, const CellGeometry& g, std::span<const double> lambda, const Point& x,
                BasisTable& out, bool with_grads) const;

  /// Lazily built point locator for the space's mesh.
  const CellLocator& locator() const;

  std::uint64_t id() const { return id_; }

private:
  FunctionSpace(MeshPtr mesh, Element element);

  MeshPtr mesh_;
  Element element_;
  int dim_ = 0;
  int dofs_per_cell_ = 0;
  int nodes_per_cell_ = 0;
  std::vector<int> dofmap_;
  std::vector<Point> dof_coords_;
  std::vector<int> dof_component_;
  std::vector<int> rt_signs_;
  std::uint64_t id_;
  mutable std::once_flag locator_once_;
  mutable std::unique_ptr<CellLocator> locator_;
};

/// A space plus its coefficient vector.
class Function
{
public:
  explicit Function(SpacePtr space);
  Function(SpacePtr space, Vector coefficients);

  const SpacePtr& space() const { return space_; }
  const Vector& coefficients() const { return coefficients_; }
  Vector& coefficients() { return coefficients_; }

private:
  SpacePtr space_;
  Vector coefficients_;
};

Function interpolate(const SpacePtr& space, const Field& f);

/// Value at x from the located cell (or `side_cell` when given).
std::vector<double> evaluate(const Function& fn, const Point& x, int side_cell = -1);

/// Basis values at x, one sparse row per value component.
std::vector<SparseRow> basis_row(const FunctionSpace& space, const Point& x, int side_cell = -1);

/// Barycentric coordinates of x in `side_cell` if given, else in the located cell.
CellLocator::Hit locate_in(const FunctionSpace& space, const Point& x, int side_cell);

} // namespace msa
