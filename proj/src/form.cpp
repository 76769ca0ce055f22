#include "msa/form.hpp"

#include "msa/error.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace msa {

namespace {

Expr make(ExprNode node) { return Expr(std::make_shared<const ExprNode>(std::move(node))); }

Expr make_op(NodeKind kind, Shape shape, std::vector<Expr> operands, double factor = 1.0)
{
  ExprNode n;
  n.kind = kind;
  n.shape = shape;
  n.operands = std::move(operands);
  n.factor = factor;
  return make(std::move(n));
}

[[noreturn]] void fail(const std::string& what, const Expr& offending)
{
  throw FormError(what + ": " + to_string(offending));
}

bool is_terminal_with_space(const Expr& e)
{
  return e.kind() == NodeKind::Argument || e.kind() == NodeKind::Coefficient || e.kind() == NodeKind::Reduced;
}

MeshPtr terminal_mesh(const Expr& e)
{
  switch (e.kind()) {
  case NodeKind::Argument: return e->space->mesh();
  case NodeKind::Coefficient: return e->function->space()->mesh();
  case NodeKind::Reduced: return e->reduction.target;
  default: return nullptr;
  }
}

int terminal_degree(const FunctionSpace& space)
{
  const Element& el = space.element();
  return el.family == Family::RaviartThomas ? 1 : el.degree;
}

Shape dot_shape(const Shape& a, const Shape& b, const Expr& where)
{
  if (a.rank == 0)
    return b;
  if (b.rank == 0)
    return a;
  if (a.rank == 1 && b.rank == 1 && a.dims[0] == b.dims[0])
    return Shape::scalar();
  if (a.rank == 2 && b.rank == 1 && a.dims[1] == b.dims[0])
    return Shape::vector(a.dims[0]);
  if (a.rank == 1 && b.rank == 2 && a.dims[0] == b.dims[0])
    return Shape::vector(b.dims[1]);
  if (a.rank == 2 && b.rank == 2 && a.dims[1] == b.dims[0])
    return Shape::matrix(a.dims[0], b.dims[1]);
  fail("dot: incompatible shapes " + a.str() + " and " + b.str(), where);
}

void write(std::ostream& out, const Expr& e)
{
  const ExprNode& n = e.node();
  auto args = [&](const char* name) {
    out << name << '(';
    for (std::size_t i = 0; i < n.operands.size(); ++i) {
      if (i)
        out << ", ";
      write(out, n.operands[i]);
    }
    out << ')';
  };
  switch (n.kind) {
  case NodeKind::Argument:
    out << (n.role == Role::Test ? "v" : "u") << n.block << '[' << n.space->element().str() << '@' << n.space->id()
        << ']';
    break;
  case NodeKind::Coefficient: out << "f[" << n.function->space()->element().str() << ']'; break;
  case NodeKind::Constant:
    if (n.values.size() == 1)
      out << n.values[0];
    else {
      out << '(';
      for (std::size_t i = 0; i < n.values.size(); ++i)
        out << (i ? ", " : "") << n.values[i];
      out << ')';
    }
    break;
  case NodeKind::Analytic: out << "analytic<" << n.shape.str() << '>'; break;
  case NodeKind::Zero: out << "0<" << n.shape.str() << '>'; break;
  case NodeKind::Reduced:
    out << to_string(n.reduction.kind) << '(';
    write(out, n.operands[0]);
    out << ')';
    break;
  case NodeKind::Grad: args("grad"); break;
  case NodeKind::Div: args("div"); break;
  case NodeKind::Sym: args("sym"); break;
  case NodeKind::Inner: args("inner"); break;
  case NodeKind::Dot: args("dot"); break;
  case NodeKind::Add: args("add"); break;
  case NodeKind::Neg: args("neg"); break;
  case NodeKind::Scale:
    out << n.factor << '*';
    write(out, n.operands[0]);
    break;
  }
}

bool same_terminal(const Expr& a, const Expr& b)
{
  if (a.kind() != b.kind())
    return false;
  if (a.kind() == NodeKind::Argument)
    return key_of(a) == key_of(b);
  if (a.kind() == NodeKind::Coefficient)
    return a->function == b->function;
  return a.get() == b.get();
}

void preorder(const Expr& e, const std::function<void(const Expr&)>& visit)
{
  visit(e);
  for (const Expr& op : e->operands)
    preorder(op, visit);
}

// Rebuild `e` over new operands through the simplifying constructors.
Expr rebuild(const Expr& e, const std::vector<Expr>& ops)
{
  switch (e.kind()) {
  case NodeKind::Grad: return ops[0].is_zero() ? zero(e.shape()) : grad(ops[0]);
  case NodeKind::Div: return div(ops[0]);
  case NodeKind::Sym: return sym(ops[0]);
  case NodeKind::Inner: return inner(ops[0], ops[1]);
  case NodeKind::Dot: return dot(ops[0], ops[1]);
  case NodeKind::Add: return ops[0] + ops[1];
  case NodeKind::Neg: return -ops[0];
  case NodeKind::Scale: return e->factor * ops[0];
  case NodeKind::Reduced: return reduce(ops[0], e->reduction);
  default: return e;
  }
}

Expr transform(const Expr& e, const std::function<std::optional<Expr>(const Expr&)>& f)
{
  if (auto r = f(e))
    return *r;
  if (e->operands.empty())
    return e;
  std::vector<Expr> ops;
  bool changed = false;
  for (const Expr& op : e->operands) {
    ops.push_back(transform(op, f));
    changed = changed || ops.back().get() != op.get();
  }
  return changed ? rebuild(e, ops) : e;
}

} // namespace

std::string to_string(ReductionKind kind)
{
  switch (kind) {
  case ReductionKind::Trace: return "trace";
  case ReductionKind::Average: return "average";
  case ReductionKind::Restrict: return "restrict";
  }
  return "?";
}

bool Reduction::operator==(const Reduction& other) const
{
  if (kind != other.kind || target.get() != other.target.get())
    return false;
  return kind != ReductionKind::Average || (radius == other.radius && n_quad == other.n_quad);
}

ArgumentKey key_of(const Expr& argument)
{
  if (argument.kind() != NodeKind::Argument)
    throw FormError("key_of: not an argument: " + to_string(argument));
  return {argument->space->id(), argument->role, argument->block};
}

Expr argument(SpacePtr space, Role role, int block)
{
  if (!space)
    throw InvalidArgument("argument: null space");
  ExprNode n;
  n.kind = NodeKind::Argument;
  n.shape = space->value_shape();
  n.space = std::move(space);
  n.role = role;
  n.block = block;
  return make(std::move(n));
}

Expr trial_function(SpacePtr space, int block) { return argument(std::move(space), Role::Trial, block); }
Expr test_function(SpacePtr space, int block) { return argument(std::move(space), Role::Test, block); }

Expr coefficient(std::shared_ptr<const Function> fn)
{
  ExprNode n;
  n.kind = NodeKind::Coefficient;
  n.shape = fn->space()->value_shape();
  n.function = std::move(fn);
  return make(std::move(n));
}

Expr constant(double value)
{
  ExprNode n;
  n.kind = NodeKind::Constant;
  n.values = {value};
  return make(std::move(n));
}

Expr constant(std::vector<double> vector_value)
{
  ExprNode n;
  n.kind = NodeKind::Constant;
  n.shape = Shape::vector(static_cast<int>(vector_value.size()));
  n.values = std::move(vector_value);
  return make(std::move(n));
}

Expr analytic(Field field)
{
  ExprNode n;
  n.kind = NodeKind::Analytic;
  n.shape = field.shape;
  n.field = std::make_shared<const Field>(std::move(field));
  return make(std::move(n));
}

Expr zero(Shape shape)
{
  ExprNode n;
  n.kind = NodeKind::Zero;
  n.shape = shape;
  return make(std::move(n));
}

Expr reduce(const Expr& operand, const Reduction& reduction)
{
  if (operand.is_zero()) {
    Shape s = reduction.kind == ReductionKind::Average ? Shape::scalar() : operand.shape();
    return zero(s);
  }
  if (operand.kind() == NodeKind::Reduced)
    fail("reductions cannot be nested", operand);
  if (operand.kind() != NodeKind::Argument && operand.kind() != NodeKind::Coefficient)
    fail("reductions apply to arguments and coefficients only", operand);
  if (!reduction.target)
    fail("reduction without a target mesh", operand);

  const MeshPtr& source = terminal_mesh(operand);
  const Mesh& target = *reduction.target;
  Shape shape = operand.shape();
  switch (reduction.kind) {
  case ReductionKind::Trace:
    if (target.tdim() >= source->tdim())
      fail("trace needs a target of lower topological dimension", operand);
    break;
  case ReductionKind::Restrict:
    if (target.tdim() != source->tdim())
      fail("restriction needs a target of equal topological dimension", operand);
    break;
  case ReductionKind::Average:
    if (source->gdim() != 3 || target.tdim() != 1)
      fail("circle average maps a 3d field onto a curve", operand);
    if (!(reduction.radius > 0))
      fail("circle average needs a positive radius", operand);
    if (reduction.n_quad < 1)
      fail("circle average needs at least one quadrature point", operand);
    if (operand.shape().rank != 0)
      fail("circle average applies to scalar fields", operand);
    shape = Shape::scalar();
    break;
  }
  if (target.gdim() != source->gdim())
    fail("reduction target must share the geometric dimension", operand);

  ExprNode n;
  n.kind = NodeKind::Reduced;
  n.shape = shape;
  n.operands = {operand};
  n.reduction = reduction;
  return make(std::move(n));
}

Expr trace(const Expr& operand, MeshPtr target)
{
  return reduce(operand, {ReductionKind::Trace, std::move(target)});
}

Expr average(const Expr& operand, MeshPtr curve, double radius, int n_quad)
{
  return reduce(operand, {ReductionKind::Average, std::move(curve), radius, n_quad});
}

Expr restrict_to(const Expr& operand, MeshPtr subdomain)
{
  return reduce(operand, {ReductionKind::Restrict, std::move(subdomain)});
}

Expr grad(const Expr& e)
{
  const Shape& s = e.shape();
  if (s.rank > 1)
    fail("grad of a rank-2 expression", e);
  if (!is_terminal_with_space(e))
    fail("grad applies to arguments, coefficients and reduced terminals", e);
  const int gdim = terminal_mesh(e)->gdim();
  const Shape out = s.rank == 0 ? Shape::vector(gdim) : Shape::matrix(s.dims[0], gdim);
  return make_op(NodeKind::Grad, out, {e});
}

Expr div(const Expr& e)
{
  if (e.shape().rank != 1)
    fail("div of a non-vector expression", e);
  if (e.is_zero())
    return zero(Shape::scalar());
  if (!is_terminal_with_space(e))
    fail("div applies to arguments, coefficients and reduced terminals", e);
  if (e.shape().dims[0] != terminal_mesh(e)->gdim())
    fail("div needs a vector of the geometric dimension", e);
  return make_op(NodeKind::Div, Shape::scalar(), {e});
}

Expr sym(const Expr& e)
{
  const Shape& s = e.shape();
  if (s.rank != 2 || s.dims[0] != s.dims[1])
    fail("sym of a non-square expression", e);
  if (e.is_zero())
    return e;
  return make_op(NodeKind::Sym, s, {e});
}

Expr inner(const Expr& a, const Expr& b)
{
  if (!(a.shape() == b.shape()))
    fail("inner: shapes " + a.shape().str() + " and " + b.shape().str() + " differ", make_op(NodeKind::Inner, Shape{}, {a, b}));
  if (a.is_zero() || b.is_zero())
    return zero(Shape::scalar());
  return make_op(NodeKind::Inner, Shape::scalar(), {a, b});
}

Expr dot(const Expr& a, const Expr& b)
{
  const Shape s = dot_shape(a.shape(), b.shape(), make_op(NodeKind::Dot, Shape{}, {a, b}));
  if (a.is_zero() || b.is_zero())
    return zero(s);
  return make_op(NodeKind::Dot, s, {a, b});
}

Expr operator+(const Expr& a, const Expr& b)
{
  if (!(a.shape() == b.shape()))
    fail("add: shapes " + a.shape().str() + " and " + b.shape().str() + " differ", make_op(NodeKind::Add, Shape{}, {a, b}));
  if (a.is_zero())
    return b;
  if (b.is_zero())
    return a;
  return make_op(NodeKind::Add, a.shape(), {a, b});
}

Expr operator-(const Expr& e)
{
  if (e.is_zero())
    return e;
  return make_op(NodeKind::Neg, e.shape(), {e});
}

Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

Expr operator*(double s, const Expr& e)
{
  if (e.is_zero())
    return e;
  return make_op(NodeKind::Scale, e.shape(), {e}, s);
}

Expr operator*(const Expr& a, const Expr& b)
{
  if (a.shape().rank == 0 && b.shape().rank == 0)
    return inner(a, b);
  if (a.shape().rank == 0 || b.shape().rank == 0)
    return dot(a, b);
  fail("product of two non-scalar expressions; use inner or dot", make_op(NodeKind::Dot, Shape{}, {a, b}));
}

std::string to_string(const Expr& e)
{
  if (!e)
    return "<null>";
  std::ostringstream out;
  write(out, e);
  return out.str();
}

bool same_expr(const Expr& a, const Expr& b)
{
  if (a.get() == b.get())
    return true;
  if (a.kind() != b.kind() || !(a.shape() == b.shape()) || a->operands.size() != b->operands.size())
    return false;
  switch (a.kind()) {
  case NodeKind::Argument:
  case NodeKind::Coefficient: return same_terminal(a, b);
  case NodeKind::Constant: return a->values == b->values;
  case NodeKind::Analytic: return a->field == b->field;
  case NodeKind::Zero: return true;
  case NodeKind::Reduced:
    if (!(a->reduction == b->reduction))
      return false;
    break;
  case NodeKind::Scale:
    if (a->factor != b->factor)
      return false;
    break;
  default: break;
  }
  for (std::size_t i = 0; i < a->operands.size(); ++i)
    if (!same_expr(a->operands[i], b->operands[i]))
      return false;
  return true;
}

Form& Form::operator+=(const Form& other)
{
  integrals_.insert(integrals_.end(), other.integrals_.begin(), other.integrals_.end());
  return *this;
}

Form operator+(Form a, const Form& b) { return a += b; }

Form operator-(Form a, const Form& b) { return a += -1.0 * b; }

Form operator*(double s, const Form& f)
{
  std::vector<Integral> out;
  for (const Integral& i : f.integrals())
    out.push_back({s * i.integrand, i.mesh, i.degree});
  return Form(std::move(out));
}

Form operator*(const Expr& integrand, const Measure& measure)
{
  if (integrand.shape().rank != 0)
    throw FormError("integrand must be scalar: " + to_string(integrand));
  if (!measure.mesh)
    throw FormError("measure without a mesh");
  return Form({Integral{integrand, measure.mesh, measure.degree}});
}

std::vector<Expr> arguments(const Expr& e)
{
  std::vector<Expr> out;
  preorder(e, [&](const Expr& n) {
    if (n.kind() != NodeKind::Argument)
      return;
    for (const Expr& seen : out)
      if (key_of(seen) == key_of(n))
        return;
    out.push_back(n);
  });
  return out;
}

std::vector<Expr> arguments(const Form& form)
{
  std::vector<Expr> out;
  for (const Integral& i : form.integrals())
    for (const Expr& a : arguments(i.integrand))
      if (std::none_of(out.begin(), out.end(), [&](const Expr& s) { return key_of(s) == key_of(a); }))
        out.push_back(a);
  return out;
}

int arity(const Form& form)
{
  bool test = false, trial = false;
  for (const Expr& a : arguments(form))
    (a->role == Role::Test ? test : trial) = true;
  return int(test) + int(trial);
}

std::vector<Expr> reduced_terminals(const Expr& integrand)
{
  std::vector<Expr> out;
  preorder(integrand, [&](const Expr& n) {
    if (n.kind() != NodeKind::Reduced)
      return;
    for (const Expr& seen : out)
      if (same_expr(seen, n))
        return;
    out.push_back(n);
  });
  return out;
}

std::vector<Expr> reduced_terminals(const Expr& integrand, ReductionKind kind)
{
  std::vector<Expr> out;
  for (const Expr& r : reduced_terminals(integrand))
    if (r->reduction.kind == kind)
      out.push_back(r);
  return out;
}

Expr replace(const Expr& integrand, const Expr& old_reduced, const Expr& new_terminal)
{
  if (old_reduced.kind() != NodeKind::Reduced)
    throw FormError("replace: target is not a reduced terminal: " + to_string(old_reduced));
  if (!(old_reduced.shape() == new_terminal.shape()))
    throw FormError("replace: shape " + new_terminal.shape().str() + " of " + to_string(new_terminal) +
                    " does not match " + old_reduced.shape().str() + " of " + to_string(old_reduced));
  return transform(integrand, [&](const Expr& e) -> std::optional<Expr> {
    if (e.kind() == NodeKind::Reduced && same_expr(e, old_reduced))
      return new_terminal;
    return std::nullopt;
  });
}

Integral reconstruct(const Integral& integral, const Expr& new_integrand)
{
  for (const Expr& a : arguments(new_integrand)) {
    // Arguments still under a reduction live on their source mesh.
    bool reduced = false;
    preorder(new_integrand, [&](const Expr& n) {
      if (n.kind() == NodeKind::Reduced && same_terminal(n->operands[0], a))
        reduced = true;
    });
    if (!reduced && a->space->mesh().get() != integral.mesh.get())
      throw FormError("reconstruct: argument " + to_string(a) + " does not live on the measure mesh");
  }
  return {new_integrand, integral.mesh, integral.degree};
}

Expr prune_arguments(const Expr& e, const std::vector<ArgumentKey>& keep)
{
  return transform(e, [&](const Expr& n) -> std::optional<Expr> {
    if (n.kind() != NodeKind::Argument)
      return std::nullopt;
    if (std::find(keep.begin(), keep.end(), key_of(n)) != keep.end())
      return n;
    return zero(n.shape());
  });
}

int estimate_degree(const Expr& e)
{
  const ExprNode& n = e.node();
  switch (n.kind) {
  case NodeKind::Argument: return terminal_degree(*n.space);
  case NodeKind::Coefficient: return terminal_degree(*n.function->space());
  case NodeKind::Constant:
  case NodeKind::Zero: return 0;
  case NodeKind::Analytic: return n.field->degree;
  case NodeKind::Reduced:
    return n.reduction.kind == ReductionKind::Average ? 1 : estimate_degree(n.operands[0]);
  case NodeKind::Grad:
  case NodeKind::Div: return std::max(estimate_degree(n.operands[0]) - 1, 0);
  case NodeKind::Sym:
  case NodeKind::Neg:
  case NodeKind::Scale: return estimate_degree(n.operands[0]);
  case NodeKind::Inner:
  case NodeKind::Dot: return estimate_degree(n.operands[0]) + estimate_degree(n.operands[1]);
  case NodeKind::Add: return std::max(estimate_degree(n.operands[0]), estimate_degree(n.operands[1]));
  }
  return 0;
}

BlockForm::BlockForm(std::vector<SpacePtr> spaces, int arity) : spaces_(std::move(spaces)), arity_(arity)
{
  if (arity != 1 && arity != 2)
    throw InvalidArgument("BlockForm: arity must be 1 or 2");
  if (spaces_.empty())
    throw InvalidArgument("BlockForm: no spaces");
}

void BlockForm::add(const Form& form)
{
  for (const Integral& integral : form.integrals()) {
    std::vector<Expr> tests, trials;
    for (const Expr& a : arguments(integral.integrand)) {
      if (a->block < 0 || a->block >= num_blocks() || a->space.get() != spaces_[a->block].get())
        throw FormError("BlockForm::add: argument " + to_string(a) + " does not match its block space");
      (a->role == Role::Test ? tests : trials).push_back(a);
    }
    if (tests.empty())
      throw FormError("BlockForm::add: integral without a test function: " + to_string(integral.integrand));
    if (arity_ == 1 && !trials.empty())
      throw FormError("BlockForm::add: trial function in a linear block form: " + to_string(integral.integrand));
    if (arity_ == 2 && trials.empty())
      throw FormError("BlockForm::add: bilinear block form needs trial functions: " + to_string(integral.integrand));

    for (const Expr& t : tests) {
      if (arity_ == 1) {
        Expr term = prune_arguments(integral.integrand, {key_of(t)});
        if (!term.is_zero())
          linear_[t->block] += Form({Integral{term, integral.mesh, integral.degree}});
        continue;
      }
      if (!prune_arguments(integral.integrand, {key_of(t)}).is_zero())
        throw FormError("BlockForm::add: integrand is affine in its trial functions: " +
                        to_string(integral.integrand));
      for (const Expr& s : trials) {
        Expr term = prune_arguments(integral.integrand, {key_of(t), key_of(s)});
        if (!term.is_zero())
          bilinear_[{t->block, s->block}] += Form({Integral{term, integral.mesh, integral.degree}});
      }
    }
  }
}

const Form* BlockForm::entry(int i, int j) const
{
  auto it = bilinear_.find({i, j});
  return it == bilinear_.end() ? nullptr : &it->second;
}

const Form* BlockForm::entry(int i) const
{
  auto it = linear_.find(i);
  return it == linear_.end() ? nullptr : &it->second;
}

} // namespace msa
