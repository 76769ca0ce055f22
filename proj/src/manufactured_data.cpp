// Generated by tools/manufactured.py; do not edit.
#include "msa/manufactured.hpp"

#include <cmath>
#include <numbers>

namespace msa::manufactured {

using std::cos;
using std::sin;
using std::pow;

double babuska_u([[maybe_unused]] const Point& x)
{
  return cos(std::numbers::pi*x[0])*cos(std::numbers::pi*x[1]);
}

double babuska_f([[maybe_unused]] const Point& x)
{
  return (1 + 2*pow(std::numbers::pi, 2))*cos(std::numbers::pi*x[0])*cos(std::numbers::pi*x[1]);
}

double stokes_p([[maybe_unused]] const Point& x)
{
  return sin(std::numbers::pi*x[1])*cos(std::numbers::pi*x[0]);
}

double darcy_p([[maybe_unused]] const Point& x)
{
  return x[0]*x[1] + sin(std::numbers::pi*x[0])*cos(std::numbers::pi*x[1]);
}

double darcy_f([[maybe_unused]] const Point& x)
{
  return 2*pow(std::numbers::pi, 2)*sin(std::numbers::pi*x[0])*cos(std::numbers::pi*x[1]);
}

double interface_mass([[maybe_unused]] const Point& x)
{
  return std::numbers::pi*pow(x[0], 2)*cos(std::numbers::pi*x[1]) + x[1] + std::numbers::pi*cos(std::numbers::pi*x[0])*cos(std::numbers::pi*x[1]);
}

double interface_stress([[maybe_unused]] const Point& x)
{
  return x[0]*x[1] + 2*std::numbers::pi*x[0]*cos(std::numbers::pi*x[1]) + sin(std::numbers::pi*(x[0] - x[1]));
}

double interface_bjs([[maybe_unused]] const Point& x)
{
  return (-1.0/2.0*pow(std::numbers::pi, 2)*pow(x[0], 2) - 2*x[0] - 1)*sin(std::numbers::pi*x[1]);
}

double stokes_div([[maybe_unused]] const Point& x)
{
  return 0;
}

std::array<double, 2> babuska_grad_u([[maybe_unused]] const Point& x)
{
  return {-std::numbers::pi*sin(std::numbers::pi*x[0])*cos(std::numbers::pi*x[1]), -std::numbers::pi*sin(std::numbers::pi*x[1])*cos(std::numbers::pi*x[0])};
}

std::array<double, 2> stokes_u([[maybe_unused]] const Point& x)
{
  return {std::numbers::pi*pow(x[0], 2)*cos(std::numbers::pi*x[1]), -2*x[0]*sin(std::numbers::pi*x[1])};
}

std::array<double, 2> stokes_f([[maybe_unused]] const Point& x)
{
  return {std::numbers::pi*((1.0/2.0)*pow(std::numbers::pi, 2)*pow(x[0], 2)*cos(std::numbers::pi*x[1]) - sin(std::numbers::pi*x[0])*sin(std::numbers::pi*x[1]) - cos(std::numbers::pi*x[1])), std::numbers::pi*(-std::numbers::pi*x[0]*sin(std::numbers::pi*x[1]) + cos(std::numbers::pi*x[0])*cos(std::numbers::pi*x[1]))};
}

std::array<double, 2> darcy_u([[maybe_unused]] const Point& x)
{
  return {-x[1] - std::numbers::pi*cos(std::numbers::pi*x[0])*cos(std::numbers::pi*x[1]), -x[0] + std::numbers::pi*sin(std::numbers::pi*x[0])*sin(std::numbers::pi*x[1])};
}

std::array<double, 2> darcy_grad_p([[maybe_unused]] const Point& x)
{
  return {x[1] + std::numbers::pi*cos(std::numbers::pi*x[0])*cos(std::numbers::pi*x[1]), x[0] - std::numbers::pi*sin(std::numbers::pi*x[0])*sin(std::numbers::pi*x[1])};
}

std::array<double, 4> stokes_grad_u([[maybe_unused]] const Point& x)
{
  return {2*std::numbers::pi*x[0]*cos(std::numbers::pi*x[1]), -pow(std::numbers::pi, 2)*pow(x[0], 2)*sin(std::numbers::pi*x[1]), -2*sin(std::numbers::pi*x[1]), -2*std::numbers::pi*x[0]*cos(std::numbers::pi*x[1])};
}

std::array<double, 4> stokes_sigma([[maybe_unused]] const Point& x)
{
  return {2*std::numbers::pi*x[0]*cos(std::numbers::pi*x[1]) - sin(std::numbers::pi*x[1])*cos(std::numbers::pi*x[0]), (-1.0/2.0*pow(std::numbers::pi, 2)*pow(x[0], 2) - 1)*sin(std::numbers::pi*x[1]), (-1.0/2.0*pow(std::numbers::pi, 2)*pow(x[0], 2) - 1)*sin(std::numbers::pi*x[1]), -2*std::numbers::pi*x[0]*cos(std::numbers::pi*x[1]) - sin(std::numbers::pi*x[1])*cos(std::numbers::pi*x[0])};
}

} // namespace msa::manufactured
