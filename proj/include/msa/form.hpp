#pragma once

#include "msa/space.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace msa {

enum class Role { Test, Trial };

enum class ReductionKind { Trace, Average, Restrict };

std::string to_string(ReductionKind kind);

/// Reduction of a bulk terminal onto a target mesh.
struct Reduction
{
  ReductionKind kind = ReductionKind::Trace;
  MeshPtr target;
  double radius = 0.0; ///< Average only
  int n_quad = 16;     ///< Average only

  bool operator==(const Reduction& other) const;
};

enum class NodeKind { Argument, Coefficient, Constant, Analytic, Reduced, Zero, Grad, Div, Sym, Inner, Dot, Add, Neg, Scale };

struct ExprNode;

/// Immutable handle to a symbolic expression tree.
class Expr
{
public:
  Expr() = default;
  explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}

  const ExprNode& node() const { return *node_; }
  const ExprNode* operator->() const { return node_.get(); }
  const ExprNode* get() const { return node_.get(); }
  explicit operator bool() const { return static_cast<bool>(node_); }

  NodeKind kind() const;
  const Shape& shape() const;
  bool is_zero() const;

private:
  std::shared_ptr<const ExprNode> node_;
};

struct ExprNode
{
  NodeKind kind = NodeKind::Zero;
  Shape shape;
  std::vector<Expr> operands;

  // Argument
  SpacePtr space;
  Role role = Role::Test;
  int block = 0;
  // Coefficient
  std::shared_ptr<const Function> function;
  // Constant (row-major values)
  std::vector<double> values;
  // Analytic
  std::shared_ptr<const Field> field;
  // Reduced
  Reduction reduction;
  // Scale
  double factor = 1.0;
};

inline NodeKind Expr::kind() const { return node_->kind; }
inline const Shape& Expr::shape() const { return node_->shape; }
inline bool Expr::is_zero() const { return node_->kind == NodeKind::Zero; }

/// Identity of an argument: space, role and block index.
struct ArgumentKey
{
  std::uint64_t space = 0;
  Role role = Role::Test;
  int block = 0;

  auto operator<=>(const ArgumentKey&) const = default;
};

ArgumentKey key_of(const Expr& argument);

// Terminals
Expr trial_function(SpacePtr space, int block = 0);
Expr test_function(SpacePtr space, int block = 0);
Expr argument(SpacePtr space, Role role, int block);
Expr coefficient(std::shared_ptr<const Function> fn);
Expr constant(double value);
Expr constant(std::vector<double> vector_value);
Expr analytic(Field field);
Expr zero(Shape shape);

// Reductions; the operand must be an Argument or Coefficient.
Expr trace(const Expr& operand, MeshPtr target);
Expr average(const Expr& operand, MeshPtr curve, double radius, int n_quad = 16);
Expr restrict_to(const Expr& operand, MeshPtr subdomain);
Expr reduce(const Expr& operand, const Reduction& reduction);

// Differential operators and algebra
Expr grad(const Expr& e);
Expr div(const Expr& e);
Expr sym(const Expr& e);
Expr inner(const Expr& a, const Expr& b);
Expr dot(const Expr& a, const Expr& b);
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator-(const Expr& e);
Expr operator*(double s, const Expr& e);
/// Product of two expressions, one of which is scalar (inner product when both are).
Expr operator*(const Expr& a, const Expr& b);

std::string to_string(const Expr& e);

/// Structural equality; terminals compare by identity.
bool same_expr(const Expr& a, const Expr& b);

struct Integral
{
  Expr integrand;
  MeshPtr mesh;
  int degree = -1; ///< quadrature degree override, -1 = estimate
};

class Form
{
public:
  Form() = default;
  explicit Form(std::vector<Integral> integrals) : integrals_(std::move(integrals)) {}

  const std::vector<Integral>& integrals() const { return integrals_; }
  bool empty() const { return integrals_.empty(); }

  Form& operator+=(const Form& other);

private:
  std::vector<Integral> integrals_;
};

Form operator+(Form a, const Form& b);
Form operator-(Form a, const Form& b);
Form operator*(double s, const Form& f);

/// Integration measure over the cells of a mesh.
struct Measure
{
  MeshPtr mesh;
  int degree = -1;
};

inline Measure dx(MeshPtr mesh, int degree = -1) { return {std::move(mesh), degree}; }
Form operator*(const Expr& integrand, const Measure& measure);

/// Distinct arguments in first-appearance (pre-order) order.
std::vector<Expr> arguments(const Expr& e);
std::vector<Expr> arguments(const Form& form);

/// Number of distinct argument roles (0, 1 or 2).
int arity(const Form& form);

/// Distinct Reduced nodes in pre-order.
std::vector<Expr> reduced_terminals(const Expr& integrand);
std::vector<Expr> reduced_terminals(const Expr& integrand, ReductionKind kind);

/// Replace every occurrence of the Reduced node `old_reduced` by `new_terminal`.
Expr replace(const Expr& integrand, const Expr& old_reduced, const Expr& new_terminal);

Integral reconstruct(const Integral& integral, const Expr& new_integrand);

/// Replace every argument not listed in `keep` by a zero and simplify.
Expr prune_arguments(const Expr& e, const std::vector<ArgumentKey>& keep);

/// Estimated polynomial degree of an integrand.
int estimate_degree(const Expr& e);

/// Table of forms indexed by the block indices of their arguments.
class BlockForm
{
public:
  BlockForm(std::vector<SpacePtr> spaces, int arity);

  int num_blocks() const { return static_cast<int>(spaces_.size()); }
  int arity() const { return arity_; }
  const SpacePtr& space(int i) const { return spaces_[i]; }
  const std::vector<SpacePtr>& spaces() const { return spaces_; }

  /// Split `form` by argument blocks and append each piece to its entry.
  void add(const Form& form);

  const Form* entry(int i, int j) const;
  const Form* entry(int i) const;
  const std::map<std::pair<int, int>, Form>& bilinear_entries() const { return bilinear_; }
  const std::map<int, Form>& linear_entries() const { return linear_; }

private:
  std::vector<SpacePtr> spaces_;
  int arity_;
  std::map<std::pair<int, int>, Form> bilinear_;
  std::map<int, Form> linear_;
};

} // namespace msa
