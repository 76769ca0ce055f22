#pragma once

#include "msa/form.hpp"
#include "msa/opexpr.hpp"
#include "msa/reduction.hpp"

#include <functional>
#include <optional>
#include <string>
#include <variant>

namespace msa {

/// Lowered form: an operator (bilinear), a vector (linear) or a number.
using Assembled = std::variant<Op, Vector, double>;

struct AssemblyContext;

/// A reduced assembler either lowers a form or declines with nullopt.
struct ReducedAssembler
{
  std::string name;
  std::function<std::optional<Assembled>(const Form&, AssemblyContext&)> assemble;
};

struct AssemblyContext
{
  /// Defaults to ReductionCache::global().
  ReductionCache* cache = nullptr;
  /// Tried in order before the singlescale fallback.
  std::vector<ReducedAssembler> assemblers;

  AssemblyContext();
  explicit AssemblyContext(ReductionCache& cache);
  ReductionCache& reductions() const;
};

/// The registered trace, average and restrict assemblers in dispatch order.
std::vector<ReducedAssembler> default_assemblers();

/// Lowering for one reduction kind; declines when no integral carries it.
std::optional<Assembled> reduced_assemble(const Form& form, ReductionKind kind, AssemblyContext& ctx);
std::optional<Assembled> trace_assemble(const Form& form, AssemblyContext& ctx);
std::optional<Assembled> average_assemble(const Form& form, AssemblyContext& ctx);
std::optional<Assembled> restrict_assemble(const Form& form, AssemblyContext& ctx);

double multi_assemble(double value);
Assembled multi_assemble(const Form& form, AssemblyContext& ctx);
Assembled multi_assemble(const Form& form);

/// Bilinear block forms become block operators; absent blocks are symbolic zeros.
Op multi_assemble_bilinear(const BlockForm& form, AssemblyContext& ctx);
Op multi_assemble_bilinear(const BlockForm& form);
/// Linear block forms become block vectors; absent blocks are zero vectors.
BlockVector multi_assemble_linear(const BlockForm& form, AssemblyContext& ctx);
BlockVector multi_assemble_linear(const BlockForm& form);

/// Convenience accessors that check the variant alternative.
Op as_operator(const Assembled& a);
Vector as_vector(const Assembled& a);

} // namespace msa
