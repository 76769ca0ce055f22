#pragma once

#include "msa/mesh.hpp"

#include <array>

// Manufactured solutions and derived data for the demos, generated by
// tools/manufactured.py. Matrices are row-major; gradients of vector fields
// hold the gradient of component i in row i.
namespace msa::manufactured {

// -lap u + u = f on the unit square
double babuska_u(const Point& x);
double babuska_f(const Point& x);
std::array<double, 2> babuska_grad_u(const Point& x);

// Stokes on [0, 0.5] x [0, 1]
std::array<double, 2> stokes_u(const Point& x);
double stokes_p(const Point& x);
std::array<double, 2> stokes_f(const Point& x);
std::array<double, 4> stokes_grad_u(const Point& x);
std::array<double, 4> stokes_sigma(const Point& x);
double stokes_div(const Point& x);

// Darcy on [0.5, 1] x [0, 1]
std::array<double, 2> darcy_u(const Point& x);
double darcy_p(const Point& x);
std::array<double, 2> darcy_grad_p(const Point& x);
double darcy_f(const Point& x);

// Residuals of the interface conditions on x = 0.5 with n = (1, 0), tau = (0, 1):
// (u1 - u2).n, n.sigma.n + p2 and tau.sigma.n + u1.tau.
double interface_mass(const Point& x);
double interface_stress(const Point& x);
double interface_bjs(const Point& x);

} // namespace msa::manufactured
