#include "msa/assemble.hpp"

#include "msa/error.hpp"
#include "msa/quadrature.hpp"

#include <algorithm>
#include <deque>
#include <cmath>
#include <numeric>

namespace msa {

namespace {

/// Integrand value at one quadrature point, linear in the test (i) and trial (j)
/// basis functions it depends on.
struct QVal
{
  bool test = false;
  bool trial = false;
  int ni = 1;
  int nj = 1;
  int size = 1;
  std::vector<double> a;

  void resize() { a.assign(static_cast<std::size_t>(ni) * nj * size, 0.0); }
  double* at(int i, int j) { return a.data() + (static_cast<std::size_t>(i) * nj + j) * size; }
  const double* at(int i, int j) const { return a.data() + (static_cast<std::size_t>(i) * nj + j) * size; }
};

QVal constant_value(std::span<const double> values)
{
  QVal v;
  v.size = static_cast<int>(values.size());
  v.a.assign(values.begin(), values.end());
  return v;
}

template <class Kernel>
QVal combine(const QVal& x, const QVal& y, int out_size, Kernel kernel)
{
  if (x.test && y.test)
    throw FormError("product of two test-function factors");
  if (x.trial && y.trial)
    throw FormError("product of two trial-function factors");
  QVal r;
  r.test = x.test || y.test;
  r.trial = x.trial || y.trial;
  r.ni = x.test ? x.ni : y.ni;
  r.nj = x.trial ? x.nj : y.nj;
  r.size = out_size;
  r.resize();
  for (int i = 0; i < r.ni; ++i)
    for (int j = 0; j < r.nj; ++j)
      kernel(x.at(x.test ? i : 0, x.trial ? j : 0), y.at(y.test ? i : 0, y.trial ? j : 0), r.at(i, j));
  return r;
}

class PointEvaluator
{
public:
  void set_point(int cell, const CellGeometry* g, const std::array<double, 4>& lambda, const Point& x)
  {
    cell_ = cell;
    geometry_ = g;
    lambda_ = lambda;
    x_ = x;
    tables_.clear();
  }

  QVal eval(const Expr& e)
  {
    const ExprNode& n = e.node();
    switch (n.kind) {
    case NodeKind::Argument: return argument(n, Derivative::None);
    case NodeKind::Coefficient: return coefficient(n, Derivative::None);
    case NodeKind::Constant: return constant_value(n.values);
    case NodeKind::Analytic: {
      std::array<double, 9> buf{};
      n.field->eval(x_, std::span<double>(buf.data(), n.shape.size()));
      return constant_value(std::span<const double>(buf.data(), n.shape.size()));
    }
    case NodeKind::Zero: {
      QVal v;
      v.size = n.shape.size();
      v.resize();
      return v;
    }
    case NodeKind::Reduced:
      throw FormError("not a singlescale form, reduced terminal remains: " + to_string(e));
    case NodeKind::Grad:
    case NodeKind::Div: {
      const Derivative d = n.kind == NodeKind::Grad ? Derivative::Grad : Derivative::Div;
      const ExprNode& op = n.operands[0].node();
      if (op.kind == NodeKind::Argument)
        return argument(op, d);
      if (op.kind == NodeKind::Coefficient)
        return coefficient(op, d);
      throw FormError("cannot differentiate " + to_string(n.operands[0]));
    }
    case NodeKind::Sym: {
      QVal v = eval(n.operands[0]);
      const int m = n.shape.dims[0];
      for (int i = 0; i < v.ni; ++i)
        for (int j = 0; j < v.nj; ++j) {
          double* p = v.at(i, j);
          for (int r = 0; r < m; ++r)
            for (int c = r + 1; c < m; ++c) {
              const double s = 0.5 * (p[r * m + c] + p[c * m + r]);
              p[r * m + c] = p[c * m + r] = s;
            }
        }
      return v;
    }
    case NodeKind::Inner: {
      const QVal x = eval(n.operands[0]);
      const QVal y = eval(n.operands[1]);
      const int s = x.size;
      return combine(x, y, 1, [s](const double* a, const double* b, double* out) {
        double acc = 0.0;
        for (int k = 0; k < s; ++k)
          acc += a[k] * b[k];
        out[0] = acc;
      });
    }
    case NodeKind::Dot: return dot(n);
    case NodeKind::Add: {
      QVal x = eval(n.operands[0]);
      const QVal y = eval(n.operands[1]);
      if (x.test != y.test || x.trial != y.trial)
        throw FormError("sum of terms with different arguments: " + to_string(e));
      for (std::size_t k = 0; k < x.a.size(); ++k)
        x.a[k] += y.a[k];
      return x;
    }
    case NodeKind::Neg:
    case NodeKind::Scale: {
      QVal v = eval(n.operands[0]);
      const double s = n.kind == NodeKind::Neg ? -1.0 : n.factor;
      for (double& a : v.a)
        a *= s;
      return v;
    }
    }
    throw FormError("unknown node");
  }

private:
  enum class Derivative { None, Grad, Div };

  const BasisTable& table(const FunctionSpace& space, bool grads)
  {
    for (auto& [s, t, has_grads] : tables_)
      if (s == &space && (has_grads || !grads))
        return t;
    if (space.mesh()->id() != geometry_mesh_id())
      throw FormError("a terminal lives on a mesh other than the measure mesh (space " + space.element().str() +
                      ")");
    tables_.emplace_back(&space, BasisTable{}, grads);
    auto& entry = tables_.back();
    space.tabulate(cell_, *geometry_, lambda_, x_, std::get<1>(entry), grads);
    return std::get<1>(entry);
  }

  std::uint64_t geometry_mesh_id() const { return mesh_id_; }

public:
  void set_mesh(const Mesh& mesh) { mesh_id_ = mesh.id(); }

private:
  QVal argument(const ExprNode& n, Derivative d)
  {
    const BasisTable& t = table(*n.space, d != Derivative::None);
    QVal v;
    (n.role == Role::Test ? v.test : v.trial) = true;
    (n.role == Role::Test ? v.ni : v.nj) = t.ndofs;
    v.size = d == Derivative::None ? t.vsize : d == Derivative::Grad ? t.vsize * t.gdim : 1;
    v.resize();
    for (int k = 0; k < t.ndofs; ++k) {
      double* p = n.role == Role::Test ? v.at(k, 0) : v.at(0, k);
      fill(t, k, d, p);
    }
    return v;
  }

  QVal coefficient(const ExprNode& n, Derivative d)
  {
    const FunctionSpace& space = *n.function->space();
    const BasisTable& t = table(space, d != Derivative::None);
    QVal v;
    v.size = d == Derivative::None ? t.vsize : d == Derivative::Grad ? t.vsize * t.gdim : 1;
    v.resize();
    std::array<double, 27> local{};
    auto dofs = space.cell_dofs(cell_);
    const Vector& c = n.function->coefficients();
    for (int k = 0; k < t.ndofs; ++k) {
      fill(t, k, d, local.data());
      for (int s = 0; s < v.size; ++s)
        v.a[s] += c[dofs[k]] * local[s];
    }
    return v;
  }

  static void fill(const BasisTable& t, int k, Derivative d, double* out)
  {
    switch (d) {
    case Derivative::None:
      for (int c = 0; c < t.vsize; ++c)
        out[c] = t.value(k, c);
      break;
    case Derivative::Grad:
      for (int c = 0; c < t.vsize; ++c)
        for (int g = 0; g < t.gdim; ++g)
          out[c * t.gdim + g] = t.grad(k, c, g);
      break;
    case Derivative::Div: {
      double acc = 0.0;
      for (int c = 0; c < std::min(t.vsize, t.gdim); ++c)
        acc += t.grad(k, c, c);
      out[0] = acc;
      break;
    }
    }
  }

  QVal dot(const ExprNode& n)
  {
    const QVal x = eval(n.operands[0]);
    const QVal y = eval(n.operands[1]);
    const Shape& a = n.operands[0].shape();
    const Shape& b = n.operands[1].shape();
    const int out = n.shape.size();
    if (a.rank == 0)
      return combine(x, y, out, [out](const double* p, const double* q, double* r) {
        for (int k = 0; k < out; ++k)
          r[k] = p[0] * q[k];
      });
    if (b.rank == 0)
      return combine(x, y, out, [out](const double* p, const double* q, double* r) {
        for (int k = 0; k < out; ++k)
          r[k] = p[k] * q[0];
      });
    // General contraction of the last axis of a with the first of b.
    const int inner_dim = a.rank == 1 ? a.dims[0] : a.dims[1];
    const int rows = a.rank == 1 ? 1 : a.dims[0];
    const int cols = b.rank == 1 ? 1 : b.dims[1];
    return combine(x, y, out, [=](const double* p, const double* q, double* r) {
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
          double acc = 0.0;
          for (int k = 0; k < inner_dim; ++k)
            acc += p[i * inner_dim + k] * q[k * cols + j];
          r[i * cols + j] = acc;
        }
    });
  }

  int cell_ = 0;
  const CellGeometry* geometry_ = nullptr;
  std::array<double, 4> lambda_{};
  Point x_{};
  std::uint64_t mesh_id_ = 0;
  std::deque<std::tuple<const FunctionSpace*, BasisTable, bool>> tables_;
};

Point physical_point(const Mesh& mesh, int cell, const std::array<double, 4>& lambda)
{
  Point x{0, 0, 0};
  auto cv = mesh.cell(cell);
  for (std::size_t i = 0; i < cv.size(); ++i)
    for (int d = 0; d < 3; ++d)
      x[d] += lambda[i] * mesh.vertex(cv[i])[d];
  return x;
}

struct IntegralArguments
{
  const ExprNode* test = nullptr;
  const ExprNode* trial = nullptr;
};

IntegralArguments check_integral(const Integral& integral)
{
  if (!reduced_terminals(integral.integrand).empty())
    throw FormError("not a singlescale form, reduced terminal remains: " + to_string(integral.integrand));
  IntegralArguments out;
  for (const Expr& a : arguments(integral.integrand)) {
    const ExprNode*& slot = a->role == Role::Test ? out.test : out.trial;
    if (slot)
      throw FormError("integral with two " + std::string(a->role == Role::Test ? "test" : "trial") +
                      " functions: " + to_string(integral.integrand));
    slot = a.get();
    if (a->space->mesh().get() != integral.mesh.get())
      throw FormError("argument " + to_string(a) + " does not live on the measure mesh");
  }
  return out;
}

int quadrature_degree(const Integral& integral)
{
  const int top = max_quadrature_degree(integral.mesh->tdim());
  if (integral.degree >= 0)
    return integral.degree;
  return std::min(estimate_degree(integral.integrand), top);
}

/// Calls sink(cell, i, j, value) with every local contribution of `integral`.
template <class Sink>
void integrate(const Integral& integral, const std::vector<int>* cell_order, Sink&& sink)
{
  const Mesh& mesh = *integral.mesh;
  const QuadratureRule& rule = quadrature(mesh.tdim(), quadrature_degree(integral));
  const double ref = reference_measure(mesh.tdim());
  PointEvaluator eval;
  eval.set_mesh(mesh);
  const int nc = mesh.num_cells();
  std::vector<double> local;
  for (int k = 0; k < nc; ++k) {
    const int c = cell_order ? (*cell_order)[k] : k;
    const CellGeometry g = mesh.geometry(c);
    local.clear();
    int ni = 0, nj = 0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Point x = physical_point(mesh, c, rule.points[q]);
      eval.set_point(c, &g, rule.points[q], x);
      const QVal v = eval.eval(integral.integrand);
      if (v.size != 1)
        throw FormError("integrand is not scalar: " + to_string(integral.integrand));
      if (local.empty()) {
        ni = v.ni;
        nj = v.nj;
        local.assign(static_cast<std::size_t>(ni) * nj, 0.0);
      }
      const double w = rule.weights[q] * g.volume / ref;
      for (std::size_t m = 0; m < local.size(); ++m)
        local[m] += w * v.a[m];
    }
    for (int i = 0; i < ni; ++i)
      for (int j = 0; j < nj; ++j)
        sink(c, i, j, local[static_cast<std::size_t>(i) * nj + j]);
  }
}

} // namespace

std::pair<SpacePtr, SpacePtr> form_spaces(const Form& form)
{
  SpacePtr test, trial;
  std::optional<ArgumentKey> test_key, trial_key;
  for (const Expr& a : arguments(form)) {
    auto& key = a->role == Role::Test ? test_key : trial_key;
    if (key && !(*key == key_of(a)))
      throw FormError("form mixes several " + std::string(a->role == Role::Test ? "test" : "trial") +
                      " functions; split it into blocks");
    key = key_of(a);
    (a->role == Role::Test ? test : trial) = a->space;
  }
  return {test, trial};
}

SparseMatrix assemble_matrix(const Form& form, const std::vector<int>* cell_order)
{
  auto [test, trial] = form_spaces(form);
  if (!test || !trial)
    throw FormError("assemble_matrix: form is not bilinear");
  TripletBuilder builder(test->dim(), trial->dim());
  for (const Integral& integral : form.integrals()) {
    const auto args = check_integral(integral);
    if (!args.test || !args.trial)
      throw FormError("assemble_matrix: integral is not bilinear: " + to_string(integral.integrand));
    integrate(integral, cell_order, [&](int c, int i, int j, double v) {
      builder.add(test->cell_dofs(c)[i], trial->cell_dofs(c)[j], v);
    });
  }
  return builder.finalize();
}

Vector assemble_vector(const Form& form)
{
  auto [test, trial] = form_spaces(form);
  if (!test || trial)
    throw FormError("assemble_vector: form is not linear");
  Vector b = Vector::Zero(test->dim());
  for (const Integral& integral : form.integrals()) {
    const auto args = check_integral(integral);
    if (!args.test)
      throw FormError("assemble_vector: integral without test function: " + to_string(integral.integrand));
    integrate(integral, nullptr, [&](int c, int i, int, double v) { b[test->cell_dofs(c)[i]] += v; });
  }
  return b;
}

double assemble_scalar(const Form& form)
{
  double total = 0.0;
  for (const Integral& integral : form.integrals()) {
    const auto args = check_integral(integral);
    if (args.test || args.trial)
      throw FormError("assemble_scalar: integral has arguments: " + to_string(integral.integrand));
    integrate(integral, nullptr, [&](int, int, int, double v) { total += v; });
  }
  return total;
}

Tensor assemble(const Form& form)
{
  switch (arity(form)) {
  case 2: return assemble_matrix(form);
  case 1: return assemble_vector(form);
  default: return assemble_scalar(form);
  }
}

DirichletBC::DirichletBC(SpacePtr space, Field value, const PointPredicate& where) : space_(std::move(space))
{
  const FunctionSpace& V = *space_;
  if (V.element().family == Family::RaviartThomas) {
    const Function flux = interpolate(space_, value);
    const Mesh& m = *V.mesh();
    for (int e = 0; e < m.num_edges(); ++e) {
      auto ev = m.edge(e);
      if (where(m.edge_midpoint(e)) && where(m.vertex(ev[0])) && where(m.vertex(ev[1]))) {
        dofs_.push_back(e);
        values_.push_back(flux.coefficients()[e]);
      }
    }
    return;
  }
  if (value.shape != V.value_shape())
    throw InvalidArgument("DirichletBC: value shape " + value.shape.str() + " does not match the space");
  std::array<double, 9> buf{};
  for (int dof = 0; dof < V.dim(); ++dof) {
    const Point& x = V.dof_coordinate(dof);
    if (!where(x))
      continue;
    value.eval(x, std::span<double>(buf.data(), value.shape.size()));
    const double g = buf[V.dof_component(dof)];
    if (!std::isfinite(g))
      throw InvalidArgument("DirichletBC: non-finite boundary value");
    dofs_.push_back(dof);
    values_.push_back(g);
  }
}

Vector DirichletBC::lift() const
{
  Vector g = Vector::Zero(space_->dim());
  for (std::size_t k = 0; k < dofs_.size(); ++k)
    g[dofs_[k]] = values_[k];
  return g;
}

void apply_bc(SparseMatrix& a, Vector& b, std::span<const DirichletBC> bcs, bool symmetric)
{
  if (a.rows() != a.cols() || b.size() != a.rows())
    throw InvalidArgument("apply_bc: needs a square matrix and a matching rhs");
  std::vector<char> fixed(a.rows(), 0);
  Vector g = Vector::Zero(a.rows());
  for (const DirichletBC& bc : bcs) {
    if (bc.space()->dim() != a.rows())
      throw InvalidArgument("apply_bc: boundary condition space does not match the matrix");
    for (std::size_t k = 0; k < bc.dofs().size(); ++k) {
      fixed[bc.dofs()[k]] = 1;
      g[bc.dofs()[k]] = bc.values()[k];
    }
  }
  TripletBuilder out(static_cast<int>(a.rows()), static_cast<int>(a.cols()));
  out.reserve(a.nonZeros());
  for (int r = 0; r < a.outerSize(); ++r) {
    if (fixed[r]) {
      out.add(r, r, 1.0);
      continue;
    }
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
      if (symmetric && fixed[it.col()]) {
        b[r] -= it.value() * g[it.col()];
        continue;
      }
      out.add(r, static_cast<int>(it.col()), it.value());
    }
  }
  for (int r = 0; r < a.rows(); ++r)
    if (fixed[r])
      b[r] = g[r];
  a = out.finalize();
}

namespace {

template <class PointTerm>
double integrate_function(const Function& uh, bool grads, PointTerm&& term)
{
  const FunctionSpace& V = *uh.space();
  const Mesh& mesh = *V.mesh();
  const QuadratureRule& rule = quadrature(mesh.tdim(), max_quadrature_degree(mesh.tdim()));
  const double ref = reference_measure(mesh.tdim());
  BasisTable t;
  double total = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellGeometry g = mesh.geometry(c);
    auto dofs = V.cell_dofs(c);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Point x = physical_point(mesh, c, rule.points[q]);
      V.tabulate(c, g, rule.points[q], x, t, grads);
      std::array<double, 3> value{};
      std::array<double, 9> gradient{};
      for (int k = 0; k < t.ndofs; ++k) {
        const double ck = uh.coefficients()[dofs[k]];
        for (int comp = 0; comp < t.vsize; ++comp) {
          value[comp] += ck * t.value(k, comp);
          if (grads)
            for (int d = 0; d < t.gdim; ++d)
              gradient[comp * t.gdim + d] += ck * t.grad(k, comp, d);
        }
      }
      total += rule.weights[q] * g.volume / ref * term(x, value, gradient, t);
    }
  }
  return total;
}

} // namespace

double l2_error(const Function& uh, const Field& exact)
{
  if (exact.shape.size() != uh.space()->value_size())
    throw InvalidArgument("l2_error: shape mismatch");
  std::array<double, 9> e{};
  const int n = exact.shape.size();
  return std::sqrt(integrate_function(uh, false, [&](const Point& x, const auto& value, const auto&, const auto&) {
    exact.eval(x, std::span<double>(e.data(), n));
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      s += (value[i] - e[i]) * (value[i] - e[i]);
    return s;
  }));
}

double l2_norm(const Function& uh)
{
  const int n = uh.space()->value_size();
  return std::sqrt(integrate_function(uh, false, [&](const Point&, const auto& value, const auto&, const auto&) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      s += value[i] * value[i];
    return s;
  }));
}

double h1_seminorm_error(const Function& uh, const Field& exact_grad)
{
  const int n = uh.space()->value_size() * uh.space()->mesh()->gdim();
  if (exact_grad.shape.size() != n)
    throw InvalidArgument("h1_seminorm_error: gradient shape mismatch");
  std::array<double, 9> e{};
  return std::sqrt(integrate_function(uh, true, [&](const Point& x, const auto&, const auto& gradient, const auto&) {
    exact_grad.eval(x, std::span<double>(e.data(), n));
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      s += (gradient[i] - e[i]) * (gradient[i] - e[i]);
    return s;
  }));
}

double hdiv_error(const Function& uh, const Field& exact, const Field& exact_div)
{
  const double l2 = l2_error(uh, exact);
  const int gd = uh.space()->mesh()->gdim();
  std::array<double, 1> e{};
  const double div2 = integrate_function(uh, true, [&](const Point& x, const auto&, const auto& gradient, const auto&) {
    exact_div.eval(x, e);
    double d = 0.0;
    for (int i = 0; i < gd; ++i)
      d += gradient[i * gd + i];
    return (d - e[0]) * (d - e[0]);
  });
  return std::sqrt(l2 * l2 + div2);
}

} // namespace msa
