#include "helpers.hpp"

#include "msa/assemble.hpp"
#include "msa/error.hpp"
#include "msa/manufactured.hpp"
#include "msa/quadrature.hpp"

#include <doctest.h>

#include <Eigen/SparseLU>

#include <algorithm>
#include <numeric>

using namespace msa;

namespace {

MeshPtr reference_triangle()
{
  return std::make_shared<Mesh>(2, 2, std::vector<Point>{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, std::vector<int>{0, 1, 2});
}

Vector solve(const SparseMatrix& a, const Vector& b)
{
  Eigen::SparseMatrix<double> ac(a);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(ac);
  return lu.solve(b);
}

} // namespace

TEST_SUITE("assemble")
{
  TEST_CASE("P1 mass and stiffness on the reference triangle")
  {
    auto V = FunctionSpace::build(reference_triangle(), Element::P(1));
    const Expr u = trial_function(V), v = test_function(V);
    const DenseMatrix M = test::dense(assemble_matrix(u * v * dx(V->mesh())));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(M(i, j) == doctest::Approx(i == j ? 1.0 / 12 : 1.0 / 24).epsilon(1e-14));

    const DenseMatrix K = test::dense(assemble_matrix(inner(grad(u), grad(v)) * dx(V->mesh())));
    DenseMatrix expected(3, 3);
    expected << 1, -0.5, -0.5, -0.5, 0.5, 0, -0.5, 0, 0.5;
    CHECK(test::max_abs(K - expected) < 1e-14);
  }

  TEST_CASE("functionals")
  {
    CHECK(assemble_scalar(constant(1.0) * dx(unit_square_mesh(5, 3))) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(assemble_scalar(constant(1.0) * dx(unit_cube_mesh(2))) == doctest::Approx(1.0).epsilon(1e-12));
    const std::vector<Point> pts{{0, 0, 0}, {0.6, 0.8, 0}};
    CHECK(assemble_scalar(constant(1.0) * dx(polyline_mesh(pts, 3))) == doctest::Approx(1.0).epsilon(1e-12));
    const Expr xy = analytic(scalar_field([](const Point& x) { return x[0] * x[1]; }));
    CHECK(assemble_scalar(xy * dx(unit_square_mesh(4, 4))) == doctest::Approx(0.25).epsilon(1e-12));
  }

  TEST_CASE("quadrature rules")
  {
    for (int tdim = 1; tdim <= 3; ++tdim)
      for (int d = 0; d <= max_quadrature_degree(tdim); ++d) {
        const QuadratureRule& q = quadrature(tdim, d);
        CHECK(q.degree >= d);
        CHECK(std::accumulate(q.weights.begin(), q.weights.end(), 0.0) ==
              doctest::Approx(reference_measure(tdim)).epsilon(1e-14));
      }
    const QuadratureRule& t2 = quadrature(2, 2);
    double s = 0.0;
    for (std::size_t k = 0; k < t2.weights.size(); ++k) {
      const double x = t2.points[k][1], y = t2.points[k][2];
      s += t2.weights[k] * (x * x + y * y);
    }
    CHECK(std::abs(s - 1.0 / 6) < 1e-14);

    const QuadratureRule& g2 = quadrature(1, 3);
    CHECK(g2.weights.size() == 2);
    double c = 0.0;
    for (std::size_t k = 0; k < g2.weights.size(); ++k) {
      const double x = g2.points[k][1];
      c += g2.weights[k] * (4 * x * x * x - x * x + 2);
    }
    CHECK(std::abs(c - (1.0 - 1.0 / 3 + 2.0)) < 1e-14);
    CHECK(quadrature(3, 7).degree == max_quadrature_degree(3));
  }

  TEST_CASE("boundary conditions")
  {
    auto m = unit_square_mesh(6, 6);
    auto V = FunctionSpace::build(m, Element::P(1));
    const Expr u = trial_function(V), v = test_function(V);
    const SparseMatrix A = assemble_matrix((inner(grad(u), grad(v)) + u * v) * dx(m));
    const Vector b = assemble_vector(v * dx(m));
    auto boundary = [](const Point& x) { return near(x[0], 0.0) || near(x[1], 1.0); };
    const std::vector<DirichletBC> bcs{DirichletBC(V, scalar_field([](const Point& x) { return 1 + x[0] * x[1]; }), boundary)};
    CHECK(bcs[0].dofs().size() == 13);

    SparseMatrix As = A, An = A;
    Vector bs = b, bn = b;
    apply_bc(As, bs, bcs, true);
    apply_bc(An, bn, bcs, false);
    CHECK(test::max_abs(test::dense(As) - test::dense(As).transpose()) <= 1e-14);
    const Vector xs = solve(As, bs), xn = solve(An, bn);
    for (std::size_t k = 0; k < bcs[0].dofs().size(); ++k) {
      CHECK(xs[bcs[0].dofs()[k]] == bcs[0].values()[k]);
      CHECK(xn[bcs[0].dofs()[k]] == doctest::Approx(bcs[0].values()[k]).epsilon(1e-14));
    }
    CHECK((xs - xn).lpNorm<Eigen::Infinity>() < 1e-12);

    const std::vector<DirichletBC> zero{DirichletBC(V, constant_field(0.0), boundary)};
    As = A, An = A, bs = b, bn = b;
    apply_bc(As, bs, zero, true);
    apply_bc(An, bn, zero, false);
    CHECK((solve(As, bs) - solve(An, bn)).lpNorm<Eigen::Infinity>() < 1e-13);

    auto W = FunctionSpace::build(m, Element::DG0());
    const std::vector<DirichletBC> wrong{DirichletBC(W, constant_field(0.0), boundary)};
    Vector bb = b;
    SparseMatrix AA = A;
    CHECK_THROWS_AS(apply_bc(AA, bb, wrong, true), InvalidArgument);
  }

  TEST_CASE("RT0 boundary dofs need the whole edge on the boundary")
  {
    auto m = unit_square_mesh(3, 3);
    auto RT = FunctionSpace::build(m, Element::RT0());
    DirichletBC bc(RT, vector_field(2, [](const Point&) { return std::array<double, 3>{0, 1, 0}; }, 0),
                   [](const Point& x) { return near(x[1] * (1 - x[1]), 0.0); });
    CHECK(bc.dofs().size() == 6);
    for (double val : bc.values())
      CHECK(std::abs(std::abs(val) - 1.0 / 3) < 1e-14);
  }

  TEST_CASE("Galerkin consistency of the base assembler")
  {
    // -lap u + u = f with natural conditions: the manufactured u has zero normal flux.
    std::vector<double> errors;
    for (int n : {8, 16, 32}) {
      auto m = unit_square_mesh(n, n);
      auto V = FunctionSpace::build(m, Element::P(1));
      const Expr u = trial_function(V), v = test_function(V);
      const SparseMatrix A = assemble_matrix((inner(grad(u), grad(v)) + u * v) * dx(m));
      const Vector b = assemble_vector(analytic(scalar_field(manufactured::babuska_f)) * v * dx(m));
      errors.push_back(l2_error(Function(V, solve(A, b)), scalar_field(manufactured::babuska_u)));
    }
    CHECK(std::log2(errors[0] / errors[1]) >= 1.9);
    CHECK(std::log2(errors[1] / errors[2]) >= 1.9);
  }

  TEST_CASE("cell order independence")
  {
    auto m = unit_square_mesh(5, 4);
    auto V = FunctionSpace::build(m, Element::VectorP(2));
    const Expr u = trial_function(V), v = test_function(V);
    const Form f = (inner(sym(grad(u)), sym(grad(v))) + div(u) * div(v)) * dx(m);
    std::vector<int> order(m->num_cells());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(2);
    std::shuffle(order.begin(), order.end(), rng);
    const DenseMatrix a = test::dense(assemble_matrix(f)), b = test::dense(assemble_matrix(f, &order));
    CHECK(test::max_abs(a - b) <= 1e-13 * test::max_abs(a));
  }

  TEST_CASE("mass matrices are SPD")
  {
    auto m = unit_square_mesh(3, 3);
    for (Element e : {Element::P(1), Element::P(2), Element::DG0(), Element::RT0(), Element::VectorP(2)}) {
      auto V = FunctionSpace::build(m, e);
      const DenseMatrix M = test::dense(assemble_matrix(inner(trial_function(V), test_function(V)) * dx(m)));
      Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(M);
      CHECK(eig.eigenvalues().minCoeff() > 0.0);
    }
  }

  TEST_CASE("reduced forms are rejected")
  {
    auto m = unit_square_mesh(2, 2);
    auto g = facet_submesh(m, [](const Point& x) { return near(x[1], 0.0); });
    auto V = FunctionSpace::build(m, Element::P(1));
    auto Q = FunctionSpace::build(g, Element::P(1));
    CHECK_THROWS_AS(assemble(trace(trial_function(V), g) * test_function(Q) * dx(g)), FormError);
  }

  TEST_CASE("error norms")
  {
    auto m = unit_square_mesh(4, 4);
    auto V = FunctionSpace::build(m, Element::P(2));
    const Field q = scalar_field([](const Point& x) { return x[0] * x[0] + x[1]; });
    const Function f = interpolate(V, q);
    CHECK(l2_error(f, q) < 1e-13);
    CHECK(h1_seminorm_error(f, vector_field(2, [](const Point& x) { return std::array<double, 3>{2 * x[0], 1, 0}; }, 1)) <
          1e-12);
    CHECK(l2_norm(interpolate(V, constant_field(2.0))) == doctest::Approx(2.0).epsilon(1e-13));

    auto RT = FunctionSpace::build(m, Element::RT0());
    const Field lin = vector_field(2, [](const Point& x) { return std::array<double, 3>{x[0], x[1], 0}; }, 1);
    CHECK(hdiv_error(interpolate(RT, lin), lin, constant_field(2.0)) < 1e-12);
  }
}
