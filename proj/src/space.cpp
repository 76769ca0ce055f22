#include "msa/space.hpp"

#include "msa/error.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

namespace msa {

namespace {

std::atomic<std::uint64_t> next_space_id{1};

} // namespace

std::string Shape::str() const
{
  std::ostringstream s;
  if (rank == 0)
    s << "scalar";
  else if (rank == 1)
    s << "vector(" << dims[0] << ")";
  else
    s << "matrix(" << dims[0] << "," << dims[1] << ")";
  return s.str();
}

Field scalar_field(std::function<double(const Point&)> f, int degree)
{
  return {Shape::scalar(), [f = std::move(f)](const Point& x, std::span<double> out) { out[0] = f(x); },
          degree};
}

Field vector_field(int dim, std::function<std::array<double, 3>(const Point&)> f, int degree)
{
  return {Shape::vector(dim),
          [dim, f = std::move(f)](const Point& x, std::span<double> out) {
            const auto v = f(x);
            for (int i = 0; i < dim; ++i)
              out[i] = v[i];
          },
          degree};
}

Field constant_field(double value)
{
  return {Shape::scalar(), [value](const Point&, std::span<double> out) { out[0] = value; }, 0};
}

std::string Element::str() const
{
  std::ostringstream s;
  switch (family) {
  case Family::Lagrange: s << (vector ? "VectorP" : "P") << degree; break;
  case Family::DiscontinuousLagrange: s << (vector ? "VectorDG" : "DG") << degree; break;
  case Family::RaviartThomas: s << "RT0"; break;
  }
  return s.str();
}

SpacePtr FunctionSpace::build(MeshPtr mesh, Element element)
{
  return SpacePtr(new FunctionSpace(std::move(mesh), element));
}

FunctionSpace::FunctionSpace(MeshPtr mesh, Element element)
  : mesh_(std::move(mesh)), element_(element), id_(next_space_id++)
{
  const Mesh& m = *mesh_;
  const int tdim = m.tdim();
  const int gdim = m.gdim();
  const int nc = m.num_cells();

  switch (element_.family) {
  case Family::RaviartThomas: {
    if (tdim != 2 || gdim != 2)
      throw UnsupportedElement("RT0 requires a triangle mesh in 2d");
    dofs_per_cell_ = 3;
    dim_ = m.num_edges();
    dofmap_.resize(3 * nc);
    rt_signs_.resize(3 * nc);
    dof_coords_.resize(dim_);
    dof_component_.assign(dim_, 0);
    for (int e = 0; e < dim_; ++e)
      dof_coords_[e] = m.edge_midpoint(e);
    for (int c = 0; c < nc; ++c) {
      auto cv = m.cell(c);
      auto ce = m.cell_edges(c);
      for (int k = 0; k < 3; ++k) {
        // Local edge k is opposite local vertex k.
        dofmap_[3 * c + k] = ce[k];
        const auto n = edge_normal(ce[k]);
        const Point mid = m.edge_midpoint(ce[k]);
        const Point& vk = m.vertex(cv[k]);
        const double outward = (mid[0] - vk[0]) * n[0] + (mid[1] - vk[1]) * n[1];
        rt_signs_[3 * c + k] = outward > 0 ? 1 : -1;
      }
    }
    return;
  }
  case Family::DiscontinuousLagrange:
    if (element_.degree != 0)
      throw UnsupportedElement("discontinuous Lagrange is available for degree 0 only");
    if (tdim == 3)
      throw UnsupportedElement("3d meshes support scalar P1 only");
    nodes_per_cell_ = 1;
    break;
  case Family::Lagrange:
    if (element_.degree < 1 || element_.degree > 2)
      throw UnsupportedElement("continuous Lagrange is available for degrees 1 and 2");
    if (tdim == 3 && (element_.degree != 1 || element_.vector))
      throw UnsupportedElement("3d meshes support scalar P1 only");
    nodes_per_cell_ = tdim + 1 + (element_.degree == 2 ? m.edges_per_cell() : 0);
    break;
  }

  const int ncomp = element_.vector ? gdim : 1;
  dofs_per_cell_ = nodes_per_cell_ * ncomp;

  int num_nodes = 0;
  std::vector<Point> node_coords;
  std::vector<int> cell_nodes(nodes_per_cell_ * nc);
  if (element_.family == Family::DiscontinuousLagrange) {
    num_nodes = nc;
    for (int c = 0; c < nc; ++c) {
      cell_nodes[c] = c;
      node_coords.push_back(m.centroid(c));
    }
  } else {
    num_nodes = m.num_vertices() + (element_.degree == 2 ? m.num_edges() : 0);
    node_coords = m.vertices();
    if (element_.degree == 2)
      for (int e = 0; e < m.num_edges(); ++e)
        node_coords.push_back(m.edge_midpoint(e));
    for (int c = 0; c < nc; ++c) {
      int k = 0;
      for (int v : m.cell(c))
        cell_nodes[c * nodes_per_cell_ + k++] = v;
      if (element_.degree == 2)
        for (int e : m.cell_edges(c))
          cell_nodes[c * nodes_per_cell_ + k++] = m.num_vertices() + e;
    }
  }

  dim_ = num_nodes * ncomp;
  dof_coords_.resize(dim_);
  dof_component_.resize(dim_);
  for (int node = 0; node < num_nodes; ++node)
    for (int comp = 0; comp < ncomp; ++comp) {
      dof_coords_[node * ncomp + comp] = node_coords[node];
      dof_component_[node * ncomp + comp] = comp;
    }
  dofmap_.resize(dofs_per_cell_ * nc);
  for (int c = 0; c < nc; ++c)
    for (int k = 0; k < nodes_per_cell_; ++k)
      for (int comp = 0; comp < ncomp; ++comp)
        dofmap_[c * dofs_per_cell_ + k * ncomp + comp] = cell_nodes[c * nodes_per_cell_ + k] * ncomp + comp;
}

std::array<double, 2> FunctionSpace::edge_normal(int e) const
{
  auto ev = mesh_->edge(e);
  const Point& a = mesh_->vertex(ev[0]);
  const Point& b = mesh_->vertex(ev[1]);
  const double tx = b[0] - a[0], ty = b[1] - a[1];
  const double len = std::hypot(tx, ty);
  return {ty / len, -tx / len};
}

void FunctionSpace::tabulate(int cell, const CellGeometry& g, std::span<const double> lambda,
                             const Point& x, BasisTable& out, bool with_grads) const
{
  const int gdim = mesh_->gdim();
  out.ndofs = dofs_per_cell_;
  out.vsize = value_size();
  out.gdim = gdim;
  out.values.assign(out.ndofs * out.vsize, 0.0);
  if (with_grads)
    out.grads.assign(out.ndofs * out.vsize * gdim, 0.0);

  if (element_.family == Family::RaviartThomas) {
    const double area = g.volume;
    auto cv = mesh_->cell(cell);
    for (int k = 0; k < 3; ++k) {
      const double s = rt_sign(cell, k) / (2.0 * area);
      const Point& vk = mesh_->vertex(cv[k]);
      for (int i = 0; i < 2; ++i) {
        out.values[k * 2 + i] = s * (x[i] - vk[i]);
        if (with_grads)
          out.grads[(k * 2 + i) * gdim + i] = s;
      }
    }
    return;
  }

  // Scalar nodal basis and its gradient.
  const int tdim = mesh_->tdim();
  std::array<double, 10> phi{};
  std::array<std::array<double, 3>, 10> dphi{};
  if (element_.family == Family::DiscontinuousLagrange) {
    phi[0] = 1.0;
  } else if (element_.degree == 1) {
    for (int i = 0; i <= tdim; ++i) {
      phi[i] = lambda[i];
      for (int d = 0; d < gdim; ++d)
        dphi[i][d] = g.grad_lambda(i, d);
    }
  } else {
    for (int i = 0; i <= tdim; ++i) {
      phi[i] = lambda[i] * (2.0 * lambda[i] - 1.0);
      for (int d = 0; d < gdim; ++d)
        dphi[i][d] = (4.0 * lambda[i] - 1.0) * g.grad_lambda(i, d);
    }
    int k = tdim + 1;
    for (auto [a, b] : Mesh::local_edges(tdim)) {
      phi[k] = 4.0 * lambda[a] * lambda[b];
      for (int d = 0; d < gdim; ++d)
        dphi[k][d] = 4.0 * (lambda[a] * g.grad_lambda(b, d) + lambda[b] * g.grad_lambda(a, d));
      ++k;
    }
  }

  const int ncomp = out.vsize;
  for (int node = 0; node < nodes_per_cell_; ++node)
    for (int comp = 0; comp < ncomp; ++comp) {
      const int dof = node * ncomp + comp;
      out.values[dof * ncomp + comp] = phi[node];
      if (with_grads)
        for (int d = 0; d < gdim; ++d)
          out.grads[(dof * ncomp + comp) * gdim + d] = dphi[node][d];
    }
}

const CellLocator& FunctionSpace::locator() const
{
  std::call_once(locator_once_, [this] { locator_ = std::make_unique<CellLocator>(mesh_); });
  return *locator_;
}

Function::Function(SpacePtr space) : space_(std::move(space)), coefficients_(Vector::Zero(space_->dim())) {}

Function::Function(SpacePtr space, Vector coefficients)
  : space_(std::move(space)), coefficients_(std::move(coefficients))
{
  if (coefficients_.size() != space_->dim())
    throw InvalidArgument("Function: coefficient length does not match the space dimension");
}

Function interpolate(const SpacePtr& space, const Field& f)
{
  Function fn(space);
  Vector& c = fn.coefficients();
  std::vector<double> value(std::max(f.shape.size(), 3));

  if (space->element().family == Family::RaviartThomas) {
    if (f.shape != Shape::vector(2))
      throw InvalidArgument("interpolate: RT0 needs a 2-vector field");
    const Mesh& m = *space->mesh();
    const double gp = 0.5 / std::sqrt(3.0);
    for (int e = 0; e < m.num_edges(); ++e) {
      auto ev = m.edge(e);
      const Point& a = m.vertex(ev[0]);
      const Point& b = m.vertex(ev[1]);
      const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
      const auto n = space->edge_normal(e);
      double flux = 0.0;
      for (double t : {0.5 - gp, 0.5 + gp}) {
        const Point x{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), 0.0};
        f.eval(x, value);
        flux += 0.5 * len * (value[0] * n[0] + value[1] * n[1]);
      }
      c[e] = flux;
    }
    return fn;
  }

  if (f.shape != space->value_shape())
    throw InvalidArgument("interpolate: field shape " + f.shape.str() + " does not match space shape " +
                          space->value_shape().str());
  for (int dof = 0; dof < space->dim(); ++dof) {
    f.eval(space->dof_coordinate(dof), value);
    c[dof] = value[space->dof_component(dof)];
  }
  return fn;
}

CellLocator::Hit locate_in(const FunctionSpace& space, const Point& x, int side_cell)
{
  if (side_cell < 0)
    return space.locator().locate(x);
  auto lambda = space.locator().contains(side_cell, x);
  if (!lambda) {
    std::ostringstream msg;
    msg << "point (" << x[0] << ", " << x[1] << ", " << x[2] << ") is not in side cell " << side_cell;
    throw OutOfDomain(msg.str(), x[0], x[1], x[2]);
  }
  return {side_cell, *lambda};
}

std::vector<SparseRow> basis_row(const FunctionSpace& space, const Point& x, int side_cell)
{
  const auto hit = locate_in(space, x, side_cell);
  const CellGeometry g = space.mesh()->geometry(hit.cell);
  BasisTable table;
  space.tabulate(hit.cell, g, hit.barycentric, x, table, false);
  auto dofs = space.cell_dofs(hit.cell);
  std::vector<SparseRow> rows(table.vsize);
  for (int comp = 0; comp < table.vsize; ++comp)
    for (int k = 0; k < table.ndofs; ++k) {
      const double v = table.value(k, comp);
      if (v != 0.0)
        rows[comp].emplace_back(dofs[k], v);
    }
  return rows;
}

std::vector<double> evaluate(const Function& fn, const Point& x, int side_cell)
{
  const auto rows = basis_row(*fn.space(), x, side_cell);
  std::vector<double> value(rows.size(), 0.0);
  for (std::size_t comp = 0; comp < rows.size(); ++comp)
    for (auto [dof, v] : rows[comp])
      value[comp] += v * fn.coefficients()[dof];
  return value;
}

} // namespace msa
