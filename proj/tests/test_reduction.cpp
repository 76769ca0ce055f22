#include "helpers.hpp"

#include "msa/error.hpp"
#include "msa/reduction.hpp"

#include <doctest.h>

#include <numbers>

using namespace msa;

namespace {

bool on_boundary(const Point& x)
{
  return near(x[0], 0.0) || near(x[0], 1.0) || near(x[1], 0.0) || near(x[1], 1.0);
}

double reproduction_error(const SparseMatrix& R, const SpacePtr& source, const SpacePtr& target, const Field& f)
{
  return (R * interpolate(source, f).coefficients() - interpolate(target, f).coefficients()).lpNorm<Eigen::Infinity>();
}

MeshPtr vertical_line(double x, double y, int cells)
{
  const std::vector<Point> pts{{x, y, 0.1}, {x, y, 0.9}};
  return polyline_mesh(pts, cells);
}

} // namespace

TEST_SUITE("reduction")
{
  TEST_CASE("reduced spaces")
  {
    auto m1 = unit_square_mesh(4, 4, {0, 0}, {0.5, 1});
    auto m2 = unit_square_mesh(4, 8, {0.5, 0}, {0.5, 1});
    auto gamma = facet_submesh(m2, [](const Point& x) { return near(x[0], 0.5); });
    auto V1 = FunctionSpace::build(m1, Element::VectorP(2));
    auto tr = deduce_reduced_space(V1, gamma, ReductionKind::Trace);
    CHECK(tr->element() == Element::VectorP(2));
    CHECK(tr->mesh() == gamma);
    CHECK(tr->value_shape() == Shape::vector(2));
    auto rt = deduce_reduced_space(FunctionSpace::build(m2, Element::RT0()), gamma, ReductionKind::Trace);
    CHECK(rt->element() == Element::VectorDG0());
    auto P1 = FunctionSpace::build(unit_cube_mesh(2), Element::P(1));
    CHECK(deduce_reduced_space(P1, vertical_line(0.5, 0.5, 4), ReductionKind::Average)->element() == Element::P(1));
    auto omega = cell_submesh(m1, [](const Point& x) { return x[1] < 0.5; });
    CHECK(deduce_reduced_space(V1, omega, ReductionKind::Restrict)->element() == Element::VectorP(2));
    CHECK_THROWS_AS(deduce_reduced_space(V1, vertical_line(0.5, 0.5, 2), ReductionKind::Average), UnsupportedReduction);
  }

  TEST_CASE("trace onto the boundary reproduces linears")
  {
    auto m = unit_square_mesh(5, 5);
    auto g = facet_submesh(m, on_boundary);
    auto V = FunctionSpace::build(m, Element::P(1));
    auto Q = deduce_reduced_space(V, g, ReductionKind::Trace);
    const SparseMatrix T = trace_matrix(*V, *Q);
    CHECK(T.rows() == Q->dim());
    CHECK(T.cols() == V->dim());
    CHECK(reproduction_error(T, V, Q, scalar_field([](const Point& x) { return x[0]; }, 1)) <= 1e-12);
    const Vector ones = T * Vector::Ones(V->dim());
    CHECK((ones.array() - 1.0).abs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("nonmatching interface reproduces polynomials")
  {
    for (int n : {2, 4, 8}) {
      auto m1 = unit_square_mesh(n, n, {0, 0}, {0.5, 1});
      auto m2 = unit_square_mesh(n, 2 * n, {0.5, 0}, {0.5, 1});
      auto gamma = facet_submesh(m2, [](const Point& x) { return near(x[0], 0.5); });
      CHECK(gamma->num_cells() == 2 * n);
      for (Element e : {Element::P(1), Element::P(2), Element::VectorP(2)}) {
        auto V = FunctionSpace::build(m1, e);
        auto Q = deduce_reduced_space(V, gamma, ReductionKind::Trace);
        const SparseMatrix T = trace_matrix(*V, *Q);
        const int k = e.degree;
        const Field f = vector_field(
          V->value_size(),
          [k](const Point& x) {
            const double a = k == 1 ? 1 + 2 * x[0] - x[1] : x[1] * x[1] - x[0] * x[1] + 3;
            return std::array<double, 3>{a, 2 * a - x[1], 0};
          },
          k);
        const Field scalar = scalar_field([&f](const Point& x) {
          double v[3];
          f.eval(x, v);
          return v[0];
        }, k);
        CHECK(reproduction_error(T, V, Q, V->value_size() == 1 ? scalar : f) <= 1e-10);
      }
    }
  }

  TEST_CASE("RT0 normal trace")
  {
    auto m2 = unit_square_mesh(3, 6, {0.5, 0}, {0.5, 1});
    auto gamma = facet_submesh(m2, [](const Point& x) { return near(x[0], 0.5); });
    auto RT = FunctionSpace::build(m2, Element::RT0());
    auto Q = deduce_reduced_space(RT, gamma, ReductionKind::Trace);
    const Field lin = vector_field(2, [](const Point& x) { return std::array<double, 3>{1 + x[0], 2 + x[1], 0}; }, 1);
    const Vector t = trace_matrix(*RT, *Q) * interpolate(RT, lin).coefficients();
    for (int c = 0; c < gamma->num_cells(); ++c) {
      const int d0 = Q->cell_dofs(c)[0];
      CHECK(std::abs(t[d0] - 1.5) < 1e-12);
    }
  }

  TEST_CASE("circle frame")
  {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    std::vector<Point> tangents{{0, 0, 1}, {1, 0, 0}, {0, 1, 0}};
    for (int k = 0; k < 20; ++k) {
      Point t{g(rng), g(rng), g(rng)};
      const double n = std::sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2]);
      for (double& c : t)
        c /= n;
      tangents.push_back(t);
    }
    auto dot = [](const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; };
    for (const Point& t : tangents) {
      auto [e1, e2] = circle_frame(t);
      CHECK(std::abs(dot(e1, e1) - 1) < 1e-12);
      CHECK(std::abs(dot(e2, e2) - 1) < 1e-12);
      CHECK(std::abs(dot(e1, e2)) < 1e-12);
      CHECK(std::abs(dot(e1, t)) < 1e-12);
      CHECK(std::abs(dot(e2, t)) < 1e-12);
      // (e1, e2, t) is right-handed.
      const Point c{e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2], e1[0] * e2[1] - e1[1] * e2[0]};
      CHECK(std::abs(dot(c, t) - 1) < 1e-12);
    }
  }

  TEST_CASE("circle averages")
  {
    const Point center{0.5, 0.5, 0.3}, axis{0, 0, 1};
    const Field radial = scalar_field([](const Point& x) {
      return (x[0] - 0.5) * (x[0] - 0.5) + (x[1] - 0.5) * (x[1] - 0.5);
    });
    const double sixteen = circle_average(radial, center, axis, 0.2, 16);
    const double dense = circle_average(radial, center, axis, 0.2, 10000);
    CHECK(std::abs(sixteen - 0.04) <= 1e-6);
    CHECK(std::abs(dense - 0.04) <= 1e-6);
    CHECK(std::abs(circle_average(constant_field(2.5), center, axis, 0.2) - 2.5) <= 1e-12);
    const Field odd = scalar_field([](const Point& x) { return x[0] - 0.5 + 3 * (x[1] - 0.5); }, 1);
    CHECK(std::abs(circle_average(odd, center, axis, 0.2)) <= 1e-12);

    auto pts = circle_points(center, axis, 0.2, 16);
    CHECK(pts.size() == 16);
    for (const Point& p : pts)
      CHECK(std::abs(std::hypot(p[0] - 0.5, p[1] - 0.5) - 0.2) < 1e-14);
  }

  TEST_CASE("average matrix")
  {
    auto cube = unit_cube_mesh(4);
    auto V = FunctionSpace::build(cube, Element::P(1));
    auto line = vertical_line(0.5, 0.5, 5);
    auto Q = deduce_reduced_space(V, line, ReductionKind::Average);
    for (double R : {0.05, 0.2, 0.45}) {
      const SparseMatrix P = average_matrix(*V, *Q, R);
      CHECK(((P * interpolate(V, constant_field(4.0)).coefficients()).array() - 4.0).abs().maxCoeff() <= 1e-12);
      const Vector odd = P * interpolate(V, scalar_field([](const Point& x) { return x[0] - 0.5; }, 1)).coefficients();
      CHECK(odd.lpNorm<Eigen::Infinity>() <= 1e-12);
      const Vector rows = P * Vector::Ones(V->dim());
      CHECK((rows.array() - 1.0).abs().maxCoeff() <= 1e-12);
    }
    // Averages of linear fields along the curve equal the field on the curve.
    const Field lin = scalar_field([](const Point& x) { return 1 + x[2] + 2 * x[0]; }, 1);
    CHECK(reproduction_error(average_matrix(*V, *Q, 0.1), V, Q, lin) <= 1e-10);
    CHECK_THROWS_AS(average_matrix(*V, *Q, 0.6), OutOfDomain);
  }

  TEST_CASE("dof tangents")
  {
    const std::vector<Point> pts{{0.2, 0.2, 0.2}, {0.2, 0.2, 0.6}, {0.6, 0.2, 0.6}};
    auto curve = polyline_mesh(pts, 2);
    auto Q = FunctionSpace::build(curve, Element::P(1));
    auto t = dof_tangents(*Q);
    CHECK(t.size() == 5);
    CHECK(std::abs(t[0][2] - 1) < 1e-14);
    // The joint averages both directions.
    bool found_joint = false;
    for (const Point& tt : t)
      if (std::abs(tt[0] - std::sqrt(0.5)) < 1e-12 && std::abs(tt[2] - std::sqrt(0.5)) < 1e-12)
        found_joint = true;
    CHECK(found_joint);
  }

  TEST_CASE("restriction")
  {
    auto m = unit_square_mesh(4, 4);
    auto V = FunctionSpace::build(m, Element::P(1));
    auto same = cell_submesh(m, [](const Point&) { return true; });
    auto W = deduce_reduced_space(V, same, ReductionKind::Restrict);
    const DenseMatrix R = test::dense(restriction_matrix(*V, *W));
    CHECK(test::max_abs(R - DenseMatrix::Identity(V->dim(), V->dim())) == 0.0);

    auto half = cell_submesh(m, [](const Point& x) { return x[0] <= 0.5; });
    auto H = deduce_reduced_space(V, half, ReductionKind::Restrict);
    const SparseMatrix Rh = restriction_matrix(*V, *H);
    for (int i = 0; i < Rh.rows(); ++i) {
      int entries = 0;
      for (SparseMatrix::InnerIterator it(Rh, i); it; ++it)
        if (it.value() != 0.0) {
          CHECK(it.value() == 1.0);
          ++entries;
        }
      CHECK(entries == 1);
    }
    CHECK(reproduction_error(Rh, V, H, scalar_field([](const Point& x) { return x[0] + 2 * x[1]; }, 1)) <= 1e-12);

    auto V2 = FunctionSpace::build(m, Element::P(2));
    auto H2 = deduce_reduced_space(V2, half, ReductionKind::Restrict);
    CHECK(reproduction_error(restriction_matrix(*V2, *H2), V2, H2,
                             scalar_field([](const Point& x) { return x[0] * x[1] - x[1] * x[1]; })) <= 1e-12);
  }

  TEST_CASE("independent subdomain mesh")
  {
    auto m = unit_square_mesh(4, 4);
    auto omega = unit_square_mesh(3, 5, {0.1, 0.2}, {0.5, 0.7});
    auto V = FunctionSpace::build(m, Element::P(2));
    auto W = deduce_reduced_space(V, omega, ReductionKind::Restrict);
    CHECK(reproduction_error(restriction_matrix(*V, *W), V, W,
                             scalar_field([](const Point& x) { return 1 + x[0] * x[0] - x[1]; })) <= 1e-10);
  }

  TEST_CASE("reduction cache")
  {
    ReductionCache cache;
    auto cube = unit_cube_mesh(2);
    auto V = FunctionSpace::build(cube, Element::P(1));
    auto line = vertical_line(0.5, 0.5, 3);
    auto a = cache.get_or_build(V, {ReductionKind::Average, line, 0.1, 16});
    auto b = cache.get_or_build(V, {ReductionKind::Average, line, 0.1, 16});
    CHECK(a.get() == b.get());
    CHECK(cache.build_count() == 1);
    auto c = cache.get_or_build(V, {ReductionKind::Average, line, 0.2, 16});
    CHECK(c.get() != a.get());
    CHECK(cache.build_count() == 2);
    cache.get_or_build(V, {ReductionKind::Trace, line});
    CHECK(cache.build_count() == 3);
    CHECK(cache.size() == 3);
    CHECK(cache.entries().size() == 3);
    cache.clear();
    CHECK(cache.build_count() == 0);
    CHECK(cache.size() == 0);
  }

  TEST_CASE("out-of-domain trace names the dof")
  {
    auto m = unit_square_mesh(2, 2);
    auto far = unit_square_mesh(1, 1, {2, 2}, {1, 1});
    auto line = facet_submesh(far, [](const Point& x) { return near(x[0], 2.0); });
    auto V = FunctionSpace::build(m, Element::P(1));
    auto Q = FunctionSpace::build(line, Element::P(1));
    try {
      trace_matrix(*V, *Q);
      FAIL("expected OutOfDomain");
    } catch (const OutOfDomain& e) {
      CHECK(std::string(e.what()).find("dof") != std::string::npos);
    }
  }
}
