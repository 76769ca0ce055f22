#pragma once

#include "msa/form.hpp"
#include "msa/linalg.hpp"

#include <span>
#include <variant>
#include <vector>

namespace msa {

/// Result of assembling a form of arity 2, 1 or 0.
using Tensor = std::variant<SparseMatrix, Vector, double>;

/// Element-loop quadrature assembly of a reduction-free form.
///
/// Every argument must live on the measure mesh of its integral. A form that
/// still contains Reduced nodes is rejected with FormError.
Tensor assemble(const Form& form);
SparseMatrix assemble_matrix(const Form& form, const std::vector<int>* cell_order = nullptr);
Vector assemble_vector(const Form& form);
double assemble_scalar(const Form& form);

/// Test and trial spaces of a bilinear form (trial is null for linear forms).
std::pair<SpacePtr, SpacePtr> form_spaces(const Form& form);

/// Essential boundary condition on the dofs of a space.
class DirichletBC
{
public:
  /// Lagrange: dofs whose coordinate satisfies the predicate. RT0: edges whose
  /// midpoint and both endpoints satisfy it, valued by the edge flux of `value`.
  DirichletBC(SpacePtr space, Field value, const PointPredicate& where);

  const SpacePtr& space() const { return space_; }
  const std::vector<int>& dofs() const { return dofs_; }
  const std::vector<double>& values() const { return values_; }

  /// Full-length vector carrying the boundary values (zero elsewhere).
  Vector lift() const;

private:
  SpacePtr space_;
  std::vector<int> dofs_;
  std::vector<double> values_;
};

/// Zero the constrained rows with a unit diagonal and set rhs to the boundary
/// values; with `symmetric` the columns are eliminated too, lifting the rhs.
void apply_bc(SparseMatrix& a, Vector& b, std::span<const DirichletBC> bcs, bool symmetric);

// Error norms against analytic fields, integrated with the highest available rule.
double l2_error(const Function& uh, const Field& exact);
/// `exact_grad` has shape vector(gdim) for scalar and matrix(n, gdim) for vector functions.
double h1_seminorm_error(const Function& uh, const Field& exact_grad);
double hdiv_error(const Function& uh, const Field& exact, const Field& exact_div);
double l2_norm(const Function& uh);

} // namespace msa
