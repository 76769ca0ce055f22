#include "msa/opexpr.hpp"

#include "msa/error.hpp"

#include <sstream>

namespace msa {

namespace {

std::string shape_str(int r, int c) { return "(" + std::to_string(r) + " x " + std::to_string(c) + ")"; }

SparseMatrix checked(SparseMatrix m, bool force)
{
  if (!force && m.nonZeros() > collapse_limit)
    throw NotCollapsible("collapse result has " + std::to_string(m.nonZeros()) +
                         " stored entries, above the limit (pass force to override)");
  return m;
}

} // namespace

std::string to_string(OpKind kind)
{
  switch (kind) {
  case OpKind::Matrix: return "Matrix";
  case OpKind::Dense: return "Dense";
  case OpKind::Identity: return "Identity";
  case OpKind::Zero: return "Zero";
  case OpKind::Sum: return "Sum";
  case OpKind::Product: return "Product";
  case OpKind::Transpose: return "Transpose";
  case OpKind::Scaled: return "Scaled";
  case OpKind::Inverse: return "Inverse";
  case OpKind::Block: return "Block";
  }
  return "?";
}

Vector LinearOperator::apply(const Vector& x, bool transpose) const
{
  const int expected = transpose ? rows_ : cols_;
  if (x.size() != expected)
    throw InvalidArgument("matvec: operator " + shape_str(rows_, cols_) + (transpose ? " transposed" : "") +
                          " applied to a vector of length " + std::to_string(x.size()));
  return apply_impl(x, transpose);
}

SparseMatrix LinearOperator::collapse(bool force) const { return checked(collapse_impl(force), force); }

std::string LinearOperator::describe() const
{
  std::string s = to_string(kind_) + shape_str(rows_, cols_);
  const auto ch = children();
  if (!ch.empty()) {
    s += "[";
    for (std::size_t i = 0; i < ch.size(); ++i)
      s += (i ? ", " : "") + ch[i]->describe();
    s += "]";
  }
  return s;
}

MatrixOp::MatrixOp(std::shared_ptr<const SparseMatrix> m, std::string label)
  : LinearOperator(OpKind::Matrix, static_cast<int>(m->rows()), static_cast<int>(m->cols())), m_(std::move(m)),
    label_(std::move(label))
{}

std::string MatrixOp::describe() const
{
  return "Matrix" + shape_str(rows(), cols()) + (label_.empty() ? "" : "{" + label_ + "}");
}

Vector MatrixOp::apply_impl(const Vector& x, bool transpose) const
{
  if (transpose)
    return m_->transpose() * x;
  return *m_ * x;
}

SparseMatrix MatrixOp::collapse_impl(bool) const { return *m_; }

DenseOp::DenseOp(std::shared_ptr<const DenseMatrix> m)
  : LinearOperator(OpKind::Dense, static_cast<int>(m->rows()), static_cast<int>(m->cols())), m_(std::move(m))
{}

Vector DenseOp::apply_impl(const Vector& x, bool transpose) const
{
  if (transpose)
    return m_->transpose() * x;
  return *m_ * x;
}

SparseMatrix DenseOp::collapse_impl(bool) const { return m_->sparseView(0.0, 0.0); }

SumOp::SumOp(std::vector<Op> terms)
  : LinearOperator(OpKind::Sum, terms.empty() ? 0 : terms[0]->rows(), terms.empty() ? 0 : terms[0]->cols()),
    terms_(std::move(terms))
{
  if (terms_.empty())
    throw InvalidArgument("sum of no operators");
  for (const Op& t : terms_)
    if (t->rows() != rows() || t->cols() != cols())
      throw InvalidArgument("sum: operand " + shape_str(t->rows(), t->cols()) + " does not match " +
                            shape_str(rows(), cols()));
}

Vector SumOp::apply_impl(const Vector& x, bool transpose) const
{
  Vector y = terms_[0]->apply(x, transpose);
  for (std::size_t k = 1; k < terms_.size(); ++k)
    y += terms_[k]->apply(x, transpose);
  return y;
}

SparseMatrix SumOp::collapse_impl(bool force) const
{
  SparseMatrix s = terms_[0]->collapse(force);
  for (std::size_t k = 1; k < terms_.size(); ++k)
    s = checked(s + terms_[k]->collapse(force), force);
  return s;
}

ProductOp::ProductOp(std::vector<Op> factors)
  : LinearOperator(OpKind::Product, factors.empty() ? 0 : factors.front()->rows(),
                   factors.empty() ? 0 : factors.back()->cols()),
    factors_(std::move(factors))
{
  if (factors_.empty())
    throw InvalidArgument("product of no operators");
  for (std::size_t k = 0; k + 1 < factors_.size(); ++k)
    if (factors_[k]->cols() != factors_[k + 1]->rows())
      throw InvalidArgument("product: inner dimensions of " + shape_str(factors_[k]->rows(), factors_[k]->cols()) +
                            " and " + shape_str(factors_[k + 1]->rows(), factors_[k + 1]->cols()) + " differ");
}

Vector ProductOp::apply_impl(const Vector& x, bool transpose) const
{
  Vector y = x;
  if (transpose)
    for (const Op& f : factors_)
      y = f->apply(y, true);
  else
    for (auto it = factors_.rbegin(); it != factors_.rend(); ++it)
      y = (*it)->apply(y, false);
  return y;
}

SparseMatrix ProductOp::collapse_impl(bool force) const
{
  SparseMatrix p = factors_.back()->collapse(force);
  for (auto it = factors_.rbegin() + 1; it != factors_.rend(); ++it)
    p = checked(SparseMatrix((*it)->collapse(force) * p), force);
  return p;
}

TransposeOp::TransposeOp(Op inner)
  : LinearOperator(OpKind::Transpose, inner->cols(), inner->rows()), inner_(std::move(inner))
{}

SparseMatrix TransposeOp::collapse_impl(bool force) const { return SparseMatrix(inner_->collapse(force).transpose()); }

ScaledOp::ScaledOp(double alpha, Op inner)
  : LinearOperator(OpKind::Scaled, inner->rows(), inner->cols()), alpha_(alpha), inner_(std::move(inner))
{}

InverseOp::InverseOp(int n, Apply apply, Apply apply_transpose, std::string label)
  : LinearOperator(OpKind::Inverse, n, n), apply_(std::move(apply)), apply_transpose_(std::move(apply_transpose)),
    label_(std::move(label))
{}

Vector InverseOp::apply_impl(const Vector& x, bool transpose) const
{
  if (transpose && apply_transpose_)
    return apply_transpose_(x);
  return apply_(x);
}

SparseMatrix InverseOp::collapse_impl(bool) const
{
  throw NotCollapsible("cannot collapse an inverse handle (" + label_ + ")");
}

BlockOp::BlockOp(std::vector<std::vector<Op>> blocks, bool diagonal)
  : LinearOperator(OpKind::Block, 0, 0), blocks_(std::move(blocks)), diagonal_(diagonal)
{
  const int nr = static_cast<int>(blocks_.size());
  if (nr == 0)
    throw InvalidArgument("block_mat: empty table");
  const int nc = static_cast<int>(blocks_[0].size());
  row_sizes_.assign(nr, -1);
  col_sizes_.assign(nc, -1);
  for (int i = 0; i < nr; ++i) {
    if (static_cast<int>(blocks_[i].size()) != nc)
      throw InvalidArgument("block_mat: ragged block rows");
    for (int j = 0; j < nc; ++j) {
      const Op& b = blocks_[i][j];
      if (!b)
        continue;
      auto fix = [&](int& slot, int v, const char* what) {
        if (slot >= 0 && slot != v)
          throw InvalidArgument(std::string("block_mat: inconsistent ") + what + " in block (" + std::to_string(i) +
                                ", " + std::to_string(j) + ")");
        slot = v;
      };
      fix(row_sizes_[i], b->rows(), "rows");
      fix(col_sizes_[j], b->cols(), "cols");
    }
  }
  for (int s : row_sizes_)
    if (s < 0)
      throw InvalidArgument("block_mat: a block row has no sized entry");
  for (int s : col_sizes_)
    if (s < 0)
      throw InvalidArgument("block_mat: a block column has no sized entry");
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nc; ++j)
      if (!blocks_[i][j])
        blocks_[i][j] = zero_op(row_sizes_[i], col_sizes_[j]);
  row_offsets_.assign(nr + 1, 0);
  col_offsets_.assign(nc + 1, 0);
  for (int i = 0; i < nr; ++i)
    row_offsets_[i + 1] = row_offsets_[i] + row_sizes_[i];
  for (int j = 0; j < nc; ++j)
    col_offsets_[j + 1] = col_offsets_[j] + col_sizes_[j];
  set_shape(row_offsets_[nr], col_offsets_[nc]);
}

std::vector<Op> BlockOp::children() const
{
  std::vector<Op> out;
  for (const auto& row : blocks_)
    out.insert(out.end(), row.begin(), row.end());
  return out;
}

std::string BlockOp::describe() const
{
  std::ostringstream s;
  s << (diagonal_ ? "BlockDiag" : "Block") << shape_str(rows(), cols()) << "[";
  for (int i = 0; i < block_rows(); ++i) {
    s << (i ? "; " : "");
    for (int j = 0; j < block_cols(); ++j)
      s << (j ? ", " : "") << blocks_[i][j]->describe();
  }
  s << "]";
  return s.str();
}

Vector BlockOp::apply_impl(const Vector& x, bool transpose) const
{
  const auto& in_off = transpose ? row_offsets_ : col_offsets_;
  const auto& out_off = transpose ? col_offsets_ : row_offsets_;
  Vector y = Vector::Zero(out_off.back());
  for (int i = 0; i < block_rows(); ++i)
    for (int j = 0; j < block_cols(); ++j) {
      const Op& b = blocks_[i][j];
      if (b->kind() == OpKind::Zero)
        continue;
      const int in = transpose ? i : j;
      const int out = transpose ? j : i;
      y.segment(out_off[out], out_off[out + 1] - out_off[out]) +=
        b->apply(x.segment(in_off[in], in_off[in + 1] - in_off[in]), transpose);
    }
  return y;
}

SparseMatrix BlockOp::collapse_impl(bool force) const
{
  TripletBuilder t(rows(), cols());
  for (int i = 0; i < block_rows(); ++i)
    for (int j = 0; j < block_cols(); ++j) {
      if (blocks_[i][j]->kind() == OpKind::Zero)
        continue;
      const SparseMatrix b = blocks_[i][j]->collapse(force);
      for (int r = 0; r < b.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(b, r); it; ++it)
          t.add(row_offsets_[i] + r, col_offsets_[j] + static_cast<int>(it.col()), it.value());
    }
  return t.finalize();
}

Op matrix_op(SparseMatrix m, std::string label)
{
  return std::make_shared<MatrixOp>(std::make_shared<const SparseMatrix>(std::move(m)), std::move(label));
}

Op matrix_op(std::shared_ptr<const SparseMatrix> m, std::string label)
{
  return std::make_shared<MatrixOp>(std::move(m), std::move(label));
}

Op dense_op(DenseMatrix m) { return std::make_shared<DenseOp>(std::make_shared<const DenseMatrix>(std::move(m))); }
Op identity_op(int n) { return std::make_shared<IdentityOp>(n); }
Op zero_op(int rows, int cols) { return std::make_shared<ZeroOp>(rows, cols); }
Op sum(std::vector<Op> terms)
{
  if (terms.size() == 1)
    return terms[0];
  return std::make_shared<SumOp>(std::move(terms));
}
Op product(std::vector<Op> factors)
{
  if (factors.size() == 1)
    return factors[0];
  return std::make_shared<ProductOp>(std::move(factors));
}

Op transpose(const Op& e)
{
  if (e->kind() == OpKind::Transpose)
    return static_cast<const TransposeOp&>(*e).inner();
  return std::make_shared<TransposeOp>(e);
}

Op scaled(double alpha, const Op& e) { return std::make_shared<ScaledOp>(alpha, e); }

Op inverse_op(int n, InverseOp::Apply apply, InverseOp::Apply apply_transpose, std::string label)
{
  return std::make_shared<InverseOp>(n, std::move(apply), std::move(apply_transpose), std::move(label));
}

Op block_mat(std::vector<std::vector<Op>> blocks) { return std::make_shared<BlockOp>(std::move(blocks)); }

Op block_diag_mat(std::vector<Op> diagonal)
{
  const std::size_t n = diagonal.size();
  std::vector<std::vector<Op>> table(n, std::vector<Op>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (diagonal[i]->rows() != diagonal[i]->cols())
      throw InvalidArgument("block_diag_mat: entry " + std::to_string(i) + " is not square " +
                            shape_str(diagonal[i]->rows(), diagonal[i]->cols()));
    table[i][i] = diagonal[i];
  }
  return std::make_shared<BlockOp>(std::move(table), true);
}

Op operator*(const Op& a, const Op& b) { return product({a, b}); }
Op operator+(const Op& a, const Op& b) { return sum({a, b}); }
Op operator-(const Op& a, const Op& b) { return sum({a, scaled(-1.0, b)}); }
Op operator*(double alpha, const Op& e) { return scaled(alpha, e); }

BlockVector BlockVector::zeros(const std::vector<int>& sizes)
{
  BlockVector v;
  for (int s : sizes)
    v.blocks.push_back(Vector::Zero(s));
  return v;
}

BlockVector BlockVector::split(const Vector& flat, const std::vector<int>& sizes)
{
  BlockVector v;
  int off = 0;
  for (int s : sizes) {
    if (off + s > flat.size())
      throw InvalidArgument("BlockVector::split: vector too short");
    v.blocks.push_back(flat.segment(off, s));
    off += s;
  }
  if (off != flat.size())
    throw InvalidArgument("BlockVector::split: vector too long");
  return v;
}

std::vector<int> BlockVector::sizes() const
{
  std::vector<int> s;
  for (const Vector& b : blocks)
    s.push_back(static_cast<int>(b.size()));
  return s;
}

Vector BlockVector::flatten() const
{
  int n = 0;
  for (const Vector& b : blocks)
    n += static_cast<int>(b.size());
  Vector out(n);
  int off = 0;
  for (const Vector& b : blocks) {
    out.segment(off, b.size()) = b;
    off += static_cast<int>(b.size());
  }
  return out;
}

BlockVector matvec(const Op& e, const BlockVector& x)
{
  const Vector y = e->apply(x.flatten());
  if (e->kind() == OpKind::Block)
    return BlockVector::split(y, static_cast<const BlockOp&>(*e).row_sizes());
  return BlockVector({y});
}

Op block_of(const Op& e, int i, int j)
{
  if (e->kind() == OpKind::Block)
    return static_cast<const BlockOp&>(*e).block(i, j);
  if (i == 0 && j == 0)
    return e;
  throw InvalidArgument("block_of: not a block operator");
}

Op constrain_block_system(const Op& a, BlockVector& b, const std::vector<BlockConstraint>& constraints)
{
  if (a->kind() != OpKind::Block)
    throw InvalidArgument("constrain_block_system: needs a block operator");
  const auto& blk = static_cast<const BlockOp&>(*a);
  const int n = blk.block_rows();
  if (blk.block_cols() != n || static_cast<int>(constraints.size()) != n || b.size() != n)
    throw InvalidArgument("constrain_block_system: block counts differ");

  std::vector<Op> masks(n), complements(n);
  BlockVector g = BlockVector::zeros(blk.row_sizes());
  std::vector<bool> constrained(n, false);
  for (int i = 0; i < n; ++i) {
    Vector keep = Vector::Ones(blk.row_sizes()[i]);
    for (std::size_t k = 0; k < constraints[i].dofs.size(); ++k) {
      keep[constraints[i].dofs[k]] = 0.0;
      g[i][constraints[i].dofs[k]] = constraints[i].values[k];
    }
    constrained[i] = !constraints[i].dofs.empty();
    masks[i] = matrix_op(diagonal_matrix(keep), "mask");
    complements[i] = matrix_op(diagonal_matrix(Vector::Ones(keep.size()) - keep), "bc-diagonal");
  }

  // Lift: b_i <- P_i (b_i - sum_j A_ij g_j) + (I - P_i) g_i.
  const Vector ag = a->apply(g.flatten());
  const BlockVector agb = BlockVector::split(ag, blk.row_sizes());
  for (int i = 0; i < n; ++i) {
    if (!constrained[i] && agb[i].isZero(0.0))
      continue;
    Vector r = b[i] - agb[i];
    for (std::size_t k = 0; k < constraints[i].dofs.size(); ++k)
      r[constraints[i].dofs[k]] = constraints[i].values[k];
    b[i] = r;
  }

  std::vector<std::vector<Op>> table(n, std::vector<Op>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Op aij = blk.block(i, j);
      if (aij->kind() != OpKind::Zero && (constrained[i] || constrained[j])) {
        std::vector<Op> f;
        if (constrained[i])
          f.push_back(masks[i]);
        f.push_back(aij);
        if (constrained[j])
          f.push_back(masks[j]);
        aij = product(std::move(f));
      }
      if (i == j && constrained[i])
        aij = aij->kind() == OpKind::Zero ? complements[i] : sum({aij, complements[i]});
      table[i][j] = aij;
    }
  return block_mat(std::move(table));
}

void write_matrix_market(const Op& e, const std::string& path, bool force)
{
  write_matrix_market(e->collapse(force), std::filesystem::path(path));
}

} // namespace msa
