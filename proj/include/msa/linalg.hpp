#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <filesystem>
#include <string>
#include <vector>

namespace msa {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

/// Compressed row storage; finalized matrices have sorted, unique columns per row.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

/// Accumulates (row, col, value) contributions; duplicates are summed by finalize().
class TripletBuilder
{
public:
  TripletBuilder(int rows, int cols) : rows_(rows), cols_(cols) {}

  void add(int row, int col, double value) { triplets_.emplace_back(row, col, value); }
  void reserve(std::size_t n) { triplets_.reserve(n); }
  void append(const TripletBuilder& other);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return triplets_.size(); }

  SparseMatrix finalize() const;

private:
  int rows_;
  int cols_;
  std::vector<Eigen::Triplet<double>> triplets_;
};

SparseMatrix identity_matrix(int n);
SparseMatrix diagonal_matrix(const Vector& d);

/// Largest absolute entry of A - B relative to the largest absolute entry of B.
double max_relative_difference(const DenseMatrix& a, const DenseMatrix& b);

/// Matrix Market coordinate/real/general, 17 significant digits.
void write_matrix_market(const SparseMatrix& a, const std::filesystem::path& path);
SparseMatrix read_matrix_market(const std::filesystem::path& path);

/// Matrix Market array/real/general for a dense column vector.
void write_matrix_market(const Vector& v, const std::filesystem::path& path);

} // namespace msa
