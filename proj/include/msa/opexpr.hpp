#pragma once

#include "msa/linalg.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace msa {

enum class OpKind { Matrix, Dense, Identity, Zero, Sum, Product, Transpose, Scaled, Inverse, Block };

std::string to_string(OpKind kind);

class LinearOperator;
/// Immutable, shareable lazy operator expression.
using Op = std::shared_ptr<const LinearOperator>;

/// Entries above which collapse refuses to materialize unless forced.
inline constexpr long collapse_limit = 5'000'000;

class LinearOperator
{
public:
  LinearOperator(OpKind kind, int rows, int cols) : kind_(kind), rows_(rows), cols_(cols) {}
  virtual ~LinearOperator() = default;

  OpKind kind() const { return kind_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }

  /// y = A x, or y = A^T x with `transpose`.
  Vector apply(const Vector& x, bool transpose = false) const;

  /// Explicit sparse form; throws NotCollapsible for inverse handles or oversize results.
  SparseMatrix collapse(bool force = false) const;

  virtual std::vector<Op> children() const { return {}; }
  virtual std::string describe() const;

protected:
  void set_shape(int rows, int cols)
  {
    rows_ = rows;
    cols_ = cols;
  }
  virtual Vector apply_impl(const Vector& x, bool transpose) const = 0;
  virtual SparseMatrix collapse_impl(bool force) const = 0;

private:
  OpKind kind_;
  int rows_;
  int cols_;
};

class MatrixOp : public LinearOperator
{
public:
  explicit MatrixOp(std::shared_ptr<const SparseMatrix> m, std::string label = {});
  const SparseMatrix& matrix() const { return *m_; }
  const std::string& label() const { return label_; }
  std::string describe() const override;

protected:
  Vector apply_impl(const Vector& x, bool transpose) const override;
  SparseMatrix collapse_impl(bool force) const override;

private:
  std::shared_ptr<const SparseMatrix> m_;
  std::string label_;
};

class DenseOp : public LinearOperator
{
public:
  explicit DenseOp(std::shared_ptr<const DenseMatrix> m);
  const DenseMatrix& matrix() const { return *m_; }

protected:
  Vector apply_impl(const Vector& x, bool transpose) const override;
  SparseMatrix collapse_impl(bool force) const override;

private:
  std::shared_ptr<const DenseMatrix> m_;
};

class IdentityOp : public LinearOperator
{
public:
  explicit IdentityOp(int n) : LinearOperator(OpKind::Identity, n, n) {}

protected:
  Vector apply_impl(const Vector& x, bool) const override { return x; }
  SparseMatrix collapse_impl(bool) const override { return identity_matrix(rows()); }
};

class ZeroOp : public LinearOperator
{
public:
  ZeroOp(int rows, int cols) : LinearOperator(OpKind::Zero, rows, cols) {}

protected:
  Vector apply_impl(const Vector&, bool transpose) const override
  {
    return Vector::Zero(transpose ? cols() : rows());
  }
  SparseMatrix collapse_impl(bool) const override { return SparseMatrix(rows(), cols()); }
};

class SumOp : public LinearOperator
{
public:
  explicit SumOp(std::vector<Op> terms);
  std::vector<Op> children() const override { return terms_; }

protected:
  Vector apply_impl(const Vector& x, bool transpose) const override;
  SparseMatrix collapse_impl(bool force) const override;

private:
  std::vector<Op> terms_;
};

/// Product f_0 * f_1 * ... * f_k, applied right to left.
class ProductOp : public LinearOperator
{
public:
  explicit ProductOp(std::vector<Op> factors);
  std::vector<Op> children() const override { return factors_; }

protected:
  Vector apply_impl(const Vector& x, bool transpose) const override;
  SparseMatrix collapse_impl(bool force) const override;

private:
  std::vector<Op> factors_;
};

class TransposeOp : public LinearOperator
{
public:
  explicit TransposeOp(Op inner);
  const Op& inner() const { return inner_; }
  std::vector<Op> children() const override { return {inner_}; }

protected:
  Vector apply_impl(const Vector& x, bool transpose) const override { return inner_->apply(x, !transpose); }
  SparseMatrix collapse_impl(bool force) const override;

private:
  Op inner_;
};

class ScaledOp : public LinearOperator
{
public:
  ScaledOp(double alpha, Op inner);
  double alpha() const { return alpha_; }
  std::vector<Op> children() const override { return {inner_}; }

protected:
  Vector apply_impl(const Vector& x, bool transpose) const override { return alpha_ * inner_->apply(x, transpose); }
  SparseMatrix collapse_impl(bool force) const override { return alpha_ * inner_->collapse(force); }

private:
  double alpha_;
  Op inner_;
};

/// Action of a solver-backed inverse; never collapsible.
class InverseOp : public LinearOperator
{
public:
  using Apply = std::function<Vector(const Vector&)>;

  /// `apply_transpose` may be empty for self-adjoint inverses.
  InverseOp(int n, Apply apply, Apply apply_transpose, std::string label);
  std::string describe() const override { return "Inverse(" + label_ + ")"; }

protected:
  Vector apply_impl(const Vector& x, bool transpose) const override;
  SparseMatrix collapse_impl(bool force) const override;

private:
  Apply apply_;
  Apply apply_transpose_;
  std::string label_;
};

/// Table of operators; absent entries are symbolic zeros.
class BlockOp : public LinearOperator
{
public:
  BlockOp(std::vector<std::vector<Op>> blocks, bool diagonal = false);

  int block_rows() const { return static_cast<int>(row_sizes_.size()); }
  int block_cols() const { return static_cast<int>(col_sizes_.size()); }
  const Op& block(int i, int j) const { return blocks_[i][j]; }
  const std::vector<int>& row_sizes() const { return row_sizes_; }
  const std::vector<int>& col_sizes() const { return col_sizes_; }
  bool diagonal() const { return diagonal_; }
  std::vector<Op> children() const override;
  std::string describe() const override;

protected:
  Vector apply_impl(const Vector& x, bool transpose) const override;
  SparseMatrix collapse_impl(bool force) const override;

private:
  std::vector<std::vector<Op>> blocks_;
  std::vector<int> row_sizes_;
  std::vector<int> col_sizes_;
  std::vector<int> row_offsets_;
  std::vector<int> col_offsets_;
  bool diagonal_;
};

// Constructors
Op matrix_op(SparseMatrix m, std::string label = {});
Op matrix_op(std::shared_ptr<const SparseMatrix> m, std::string label = {});
Op dense_op(DenseMatrix m);
Op identity_op(int n);
Op zero_op(int rows, int cols);
Op sum(std::vector<Op> terms);
Op product(std::vector<Op> factors);
/// Transpose(Transpose(e)) returns e.
Op transpose(const Op& e);
Op scaled(double alpha, const Op& e);
Op inverse_op(int n, InverseOp::Apply apply, InverseOp::Apply apply_transpose, std::string label);
Op block_mat(std::vector<std::vector<Op>> blocks);
Op block_diag_mat(std::vector<Op> diagonal);

Op operator*(const Op& a, const Op& b);
Op operator+(const Op& a, const Op& b);
Op operator-(const Op& a, const Op& b);
Op operator*(double alpha, const Op& e);

inline Vector matvec(const Op& e, const Vector& x) { return e->apply(x); }
inline SparseMatrix collapse(const Op& e, bool force = false) { return e->collapse(force); }

/// One vector per block; flattened in block order for Krylov methods.
struct BlockVector
{
  std::vector<Vector> blocks;

  BlockVector() = default;
  explicit BlockVector(std::vector<Vector> b) : blocks(std::move(b)) {}
  static BlockVector zeros(const std::vector<int>& sizes);
  static BlockVector split(const Vector& flat, const std::vector<int>& sizes);

  int size() const { return static_cast<int>(blocks.size()); }
  std::vector<int> sizes() const;
  Vector flatten() const;
  Vector& operator[](int i) { return blocks[i]; }
  const Vector& operator[](int i) const { return blocks[i]; }
};

BlockVector matvec(const Op& e, const BlockVector& x);

/// Block i of a block operator, or e itself for (0, 0) of a non-block operator.
Op block_of(const Op& e, int i, int j);

/// Essential conditions on the block unknowns, given by dof lists and values per block.
struct BlockConstraint
{
  std::vector<int> dofs;
  std::vector<double> values;
};

/// Symmetric lazy elimination: block (i,j) becomes P_i A_ij P_j with P the
/// free-dof mask, diagonal blocks gain (I - P_i), and b is lifted accordingly.
Op constrain_block_system(const Op& a, BlockVector& b, const std::vector<BlockConstraint>& constraints);

/// Matrix Market export of a collapsed expression.
void write_matrix_market(const Op& e, const std::string& path, bool force = false);

} // namespace msa
