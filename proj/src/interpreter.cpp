#include "msa/interpreter.hpp"

#include "msa/assemble.hpp"
#include "msa/error.hpp"

namespace msa {

AssemblyContext::AssemblyContext() : assemblers(default_assemblers()) {}

AssemblyContext::AssemblyContext(ReductionCache& c) : cache(&c), assemblers(default_assemblers()) {}

ReductionCache& AssemblyContext::reductions() const { return cache ? *cache : ReductionCache::global(); }

std::vector<ReducedAssembler> default_assemblers()
{
  return {{"trace", trace_assemble}, {"average", average_assemble}, {"restrict", restrict_assemble}};
}

Op as_operator(const Assembled& a)
{
  if (const Op* op = std::get_if<Op>(&a))
    return *op;
  throw FormError("expected a bilinear form");
}

Vector as_vector(const Assembled& a)
{
  if (const Vector* v = std::get_if<Vector>(&a))
    return *v;
  throw FormError("expected a linear form");
}

namespace {

Assembled add(const Assembled& a, const Assembled& b)
{
  if (a.index() != b.index())
    throw FormError("sum of forms of different arity");
  if (const Op* op = std::get_if<Op>(&a))
    return sum({*op, std::get<Op>(b)});
  if (const Vector* v = std::get_if<Vector>(&a))
    return Vector(*v + std::get<Vector>(b));
  return std::get<double>(a) + std::get<double>(b);
}

Assembled assemble_base(const Form& form)
{
  for (const Integral& i : form.integrals())
    if (auto r = reduced_terminals(i.integrand); !r.empty())
      throw UnsupportedReduction("no assembler handles the reduction in " + to_string(r.front()));
  Tensor t = assemble(form);
  if (auto* m = std::get_if<SparseMatrix>(&t))
    return matrix_op(std::move(*m));
  if (auto* v = std::get_if<Vector>(&t))
    return std::move(*v);
  return std::get<double>(t);
}

Assembled lower_integral(const Integral& integral, const Expr& r, AssemblyContext& ctx)
{
  const Expr& operand = r->operands[0];
  if (operand.kind() == NodeKind::Coefficient) {
    // Reduce the coefficient vector and keep assembling on the reduced space.
    const Function& f = *operand->function;
    ReductionPtr red = ctx.reductions().get_or_build(f.space(), r->reduction);
    auto fn = std::make_shared<Function>(red->target, Vector(red->matrix * f.coefficients()));
    const Integral next = reconstruct(integral, replace(integral.integrand, r, coefficient(fn)));
    return multi_assemble(Form({next}), ctx);
  }

  ReductionPtr red = ctx.reductions().get_or_build(operand->space, r->reduction);
  const Expr fresh = argument(red->target, operand->role, operand->block);
  const Integral next = reconstruct(integral, replace(integral.integrand, r, fresh));
  const Assembled inner = multi_assemble(Form({next}), ctx);
  const Op t = matrix_op(std::shared_ptr<const SparseMatrix>(red, &red->matrix), to_string(r->reduction.kind));

  if (operand->role == Role::Trial)
    return product({as_operator(inner), t});
  if (const Vector* v = std::get_if<Vector>(&inner))
    return Vector(red->matrix.transpose() * *v);
  return product({transpose(t), as_operator(inner)});
}

} // namespace

std::optional<Assembled> reduced_assemble(const Form& form, ReductionKind kind, AssemblyContext& ctx)
{
  bool applies = false;
  for (const Integral& i : form.integrals())
    applies = applies || !reduced_terminals(i.integrand, kind).empty();
  if (!applies)
    return std::nullopt;

  std::optional<Assembled> total;
  for (const Integral& integral : form.integrals()) {
    const auto terms = reduced_terminals(integral.integrand, kind);
    Assembled part =
      terms.empty() ? multi_assemble(Form({integral}), ctx) : lower_integral(integral, terms.front(), ctx);
    total = total ? add(*total, part) : std::move(part);
  }
  return total;
}

std::optional<Assembled> trace_assemble(const Form& form, AssemblyContext& ctx)
{
  return reduced_assemble(form, ReductionKind::Trace, ctx);
}

std::optional<Assembled> average_assemble(const Form& form, AssemblyContext& ctx)
{
  return reduced_assemble(form, ReductionKind::Average, ctx);
}

std::optional<Assembled> restrict_assemble(const Form& form, AssemblyContext& ctx)
{
  return reduced_assemble(form, ReductionKind::Restrict, ctx);
}

double multi_assemble(double value) { return value; }

Assembled multi_assemble(const Form& form, AssemblyContext& ctx)
{
  if (form.empty())
    throw FormError("multi_assemble: empty form");
  for (const ReducedAssembler& a : ctx.assemblers)
    if (auto out = a.assemble(form, ctx))
      return std::move(*out);
  return assemble_base(form);
}

Assembled multi_assemble(const Form& form)
{
  AssemblyContext ctx;
  return multi_assemble(form, ctx);
}

Op multi_assemble_bilinear(const BlockForm& form, AssemblyContext& ctx)
{
  if (form.arity() != 2)
    throw FormError("multi_assemble_bilinear: block form is not bilinear");
  const int n = form.num_blocks();
  std::vector<std::vector<Op>> table(n, std::vector<Op>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Form* f = form.entry(i, j);
      table[i][j] = f && !f->empty() ? as_operator(multi_assemble(*f, ctx))
                                     : zero_op(form.space(i)->dim(), form.space(j)->dim());
    }
  return block_mat(std::move(table));
}

Op multi_assemble_bilinear(const BlockForm& form)
{
  AssemblyContext ctx;
  return multi_assemble_bilinear(form, ctx);
}

BlockVector multi_assemble_linear(const BlockForm& form, AssemblyContext& ctx)
{
  if (form.arity() != 1)
    throw FormError("multi_assemble_linear: block form is not linear");
  BlockVector b;
  for (int i = 0; i < form.num_blocks(); ++i) {
    const Form* f = form.entry(i);
    b.blocks.push_back(f && !f->empty() ? as_vector(multi_assemble(*f, ctx))
                                        : Vector(Vector::Zero(form.space(i)->dim())));
  }
  return b;
}

BlockVector multi_assemble_linear(const BlockForm& form)
{
  AssemblyContext ctx;
  return multi_assemble_linear(form, ctx);
}

} // namespace msa
