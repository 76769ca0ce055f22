#pragma once

#include <array>
#include <vector>

namespace msa {

/// Quadrature on the reference simplex; points in barycentric coordinates,
/// weights summing to the reference measure (1, 1/2, 1/6).
struct QuadratureRule
{
  int degree = 0;
  std::vector<std::array<double, 4>> points;
  std::vector<double> weights;
};

/// Highest exact degree available: interval 9, triangle 5, tetrahedron 2.
int max_quadrature_degree(int tdim);

double reference_measure(int tdim);

/// Rule exact to `degree`; higher requests are clamped with a one-time warning.
const QuadratureRule& quadrature(int tdim, int degree);

} // namespace msa
