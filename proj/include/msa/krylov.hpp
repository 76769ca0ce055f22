#pragma once

#include "msa/opexpr.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace msa {

struct KrylovOptions
{
  double tol = 1e-10;
  int max_iter = 500;
  std::uint64_t seed = 1234;
  /// Initial guess; random uniform in [-1, 1] from `seed` when absent.
  std::optional<Vector> x0;
  /// Probe the operator for symmetry before MinRes.
  bool check_symmetry = true;
};

struct KrylovReport
{
  std::string method;
  bool converged = false;
  int iterations = 0;
  /// Relative preconditioned residual norms, starting with 1 at iteration 0.
  std::vector<double> history;
  double final_relative_residual = 1.0;
  std::uint64_t seed = 0;
  bool random_start = false;
};

struct KrylovResult
{
  Vector x;
  KrylovReport report;
};

/// Uniform entries in [-1, 1] from a 64-bit Mersenne twister.
Vector random_vector(int n, std::uint64_t seed);

/// Preconditioned MinRes; B must be symmetric positive definite. Stops on ||r||_B / ||r0||_B <= tol.
KrylovResult minres(const Op& a, const Op& b_inv, const Vector& rhs, const KrylovOptions& opts = {});

/// Full left-preconditioned GMRES with modified Gram-Schmidt. Stops on ||B r|| / ||B r0|| <= tol.
KrylovResult gmres(const Op& a, const Op& b_inv, const Vector& rhs, const KrylovOptions& opts = {});

/// Preconditioned conjugate gradients (b_inv may be null). Starts from zero unless x0 is given.
KrylovResult cg(const Op& a, const Op& b_inv, const Vector& rhs, const KrylovOptions& opts = {});

void write_history_csv(const KrylovReport& report, const std::string& path);

/// Fractional power of the pencil S u = lambda M u, with S the shifted stiffness.
class HsNorm
{
public:
  static constexpr int max_dimension = 5000;

  HsNorm(const SparseMatrix& mass, const SparseMatrix& shifted_stiffness, double s);

  double exponent() const { return s_; }
  int dim() const { return static_cast<int>(eigenvalues_.size()); }
  const Vector& eigenvalues() const { return eigenvalues_; }
  /// M-orthonormal eigenvectors (U^T M U = I).
  const DenseMatrix& eigenvectors() const { return u_; }

  /// M U diag(lambda^s) U^T M.
  Op forward() const { return forward_; }
  /// U diag(lambda^-s) U^T.
  Op inverse() const { return inverse_; }

private:
  double s_;
  Vector eigenvalues_;
  DenseMatrix u_;
  Op forward_;
  Op inverse_;
};

enum class InverseMode { Auto, Direct, InnerCG };

/// Dofs below which Auto picks a direct factorization.
inline constexpr int direct_inverse_limit = 50'000;

/// Action of the inverse of a square block: a factorization of its collapsed
/// matrix, or an inner CG solve (tol 1e-12, 2000 iterations) for SPD blocks.
Op inverse_handle(const Op& block, InverseMode mode = InverseMode::Auto, const std::string& label = "block");

} // namespace msa
