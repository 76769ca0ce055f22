#pragma once

#include "msa/linalg.hpp"
#include "msa/mesh.hpp"

#include <cmath>
#include <random>

namespace test {

inline msa::Point random_point_in_square(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0)
{
  std::uniform_real_distribution<double> d(lo, hi);
  return {d(rng), d(rng), 0.0};
}

inline double max_abs(const msa::DenseMatrix& a) { return a.cwiseAbs().maxCoeff(); }

inline msa::DenseMatrix dense(const msa::SparseMatrix& a) { return msa::DenseMatrix(a); }

} // namespace test
