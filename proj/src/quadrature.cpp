#include "msa/quadrature.hpp"

#include "msa/error.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>

namespace msa {

namespace {

void add_orbit3(QuadratureRule& r, double a, double w)
{
  // (a, a, 1-2a) and permutations
  const double b = 1.0 - 2.0 * a;
  r.points.push_back({a, a, b, 0});
  r.points.push_back({a, b, a, 0});
  r.points.push_back({b, a, a, 0});
  r.weights.insert(r.weights.end(), 3, w);
}

QuadratureRule gauss_legendre(int npoints)
{
  // Nodes and weights on [-1, 1].
  static const std::vector<std::vector<std::pair<double, double>>> table{
    {{0.0, 2.0}},
    {{-0.57735026918962576, 1.0}, {0.57735026918962576, 1.0}},
    {{-0.77459666924148338, 5.0 / 9.0}, {0.0, 8.0 / 9.0}, {0.77459666924148338, 5.0 / 9.0}},
    {{-0.86113631159405258, 0.34785484513745386},
     {-0.33998104358485626, 0.65214515486254614},
     {0.33998104358485626, 0.65214515486254614},
     {0.86113631159405258, 0.34785484513745386}},
    {{-0.90617984593866399, 0.23692688505618909},
     {-0.53846931010568309, 0.47862867049936647},
     {0.0, 0.56888888888888889},
     {0.53846931010568309, 0.47862867049936647},
     {0.90617984593866399, 0.23692688505618909}},
  };
  QuadratureRule r;
  r.degree = 2 * npoints - 1;
  for (auto [x, w] : table[npoints - 1]) {
    const double t = 0.5 * (x + 1.0);
    r.points.push_back({1.0 - t, t, 0, 0});
    r.weights.push_back(0.5 * w);
  }
  return r;
}

QuadratureRule triangle_rule(int degree)
{
  QuadratureRule r;
  if (degree <= 1) {
    r.degree = 1;
    r.points.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3, 0});
    r.weights.push_back(0.5);
  } else if (degree == 2) {
    r.degree = 2;
    add_orbit3(r, 1.0 / 6, 1.0 / 6);
  } else if (degree <= 4) {
    r.degree = 4;
    add_orbit3(r, 0.445948490915965, 0.5 * 0.223381589678011);
    add_orbit3(r, 0.091576213509771, 0.5 * 0.109951743655322);
  } else {
    r.degree = 5;
    r.points.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3, 0});
    r.weights.push_back(0.5 * 0.225);
    add_orbit3(r, 0.470142064105115, 0.5 * 0.132394152788506);
    add_orbit3(r, 0.101286507323456, 0.5 * 0.125939180544827);
  }
  return r;
}

QuadratureRule tet_rule(int degree)
{
  QuadratureRule r;
  if (degree <= 1) {
    r.degree = 1;
    r.points.push_back({0.25, 0.25, 0.25, 0.25});
    r.weights.push_back(1.0 / 6);
  } else {
    r.degree = 2;
    const double a = 0.58541019662496852, b = 0.13819660112501051;
    for (int k = 0; k < 4; ++k) {
      std::array<double, 4> p{b, b, b, b};
      p[k] = a;
      r.points.push_back(p);
      r.weights.push_back(1.0 / 24);
    }
  }
  return r;
}

} // namespace

int max_quadrature_degree(int tdim)
{
  switch (tdim) {
  case 1: return 9;
  case 2: return 5;
  case 3: return 2;
  default: throw InvalidArgument("max_quadrature_degree: tdim must be 1, 2 or 3");
  }
}

double reference_measure(int tdim) { return tdim == 1 ? 1.0 : tdim == 2 ? 0.5 : 1.0 / 6.0; }

const QuadratureRule& quadrature(int tdim, int degree)
{
  static std::once_flag once;
  static std::array<std::vector<QuadratureRule>, 4> rules;
  std::call_once(once, [] {
    for (int d = 0; d <= 9; ++d)
      rules[1].push_back(gauss_legendre(std::max(1, (d + 2) / 2)));
    for (int d = 0; d <= 5; ++d)
      rules[2].push_back(triangle_rule(d));
    for (int d = 0; d <= 2; ++d)
      rules[3].push_back(tet_rule(d));
  });
  const int top = max_quadrature_degree(tdim);
  if (degree > top) {
    static std::once_flag warned[4];
    std::call_once(warned[tdim], [&] {
      std::clog << "warning: quadrature degree " << degree << " clamped to " << top << " on tdim " << tdim
                << " cells\n";
    });
    degree = top;
  }
  return rules[tdim][std::max(degree, 0)];
}

} // namespace msa
