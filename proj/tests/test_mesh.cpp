#include "helpers.hpp"

#include "msa/error.hpp"
#include "msa/mesh.hpp"

#include <doctest.h>

#include <sstream>

using namespace msa;

TEST_SUITE("mesh")
{
  TEST_CASE("unit square counts and area")
  {
    auto m = unit_square_mesh(1, 1);
    CHECK(m->num_cells() == 2);
    CHECK(m->num_vertices() == 4);
    m = unit_square_mesh(2, 2);
    CHECK(m->num_cells() == 8);
    CHECK(m->num_vertices() == 9);
    for (auto [n, k] : {std::pair{3, 5}, {7, 2}, {16, 16}}) {
      m = unit_square_mesh(n, k);
      CHECK(m->num_cells() == 2 * n * k);
      CHECK(m->total_volume() == doctest::Approx(1.0).epsilon(1e-12));
    }
    m = unit_square_mesh(4, 8, {0.5, 0.0}, {0.5, 1.0});
    CHECK(m->total_volume() == doctest::Approx(0.5).epsilon(1e-12));
    for (int c = 0; c < m->num_cells(); ++c)
      CHECK(m->cell_volume(c) >= 1e-14);
  }

  TEST_CASE("lower-left diagonal split")
  {
    auto m = unit_square_mesh(1, 1);
    // Both triangles contain the diagonal from (0,0) to (1,1).
    for (int c = 0; c < 2; ++c) {
      bool has_origin = false, has_corner = false;
      for (int v : m->cell(c)) {
        has_origin = has_origin || (m->vertex(v)[0] == 0.0 && m->vertex(v)[1] == 0.0);
        has_corner = has_corner || (m->vertex(v)[0] == 1.0 && m->vertex(v)[1] == 1.0);
      }
      CHECK(has_origin);
      CHECK(has_corner);
    }
  }

  TEST_CASE("generator arguments are validated")
  {
    CHECK_THROWS_AS(unit_square_mesh(0, 1), InvalidArgument);
    CHECK_THROWS_AS(unit_square_mesh(1, -1), InvalidArgument);
    CHECK_THROWS_AS(unit_square_mesh(1, 1, {0, 0}, {0.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(unit_cube_mesh(0), InvalidArgument);
    const std::vector<Point> repeated{{0, 0, 0}, {0, 0, 0}, {1, 0, 0}};
    CHECK_THROWS_AS(polyline_mesh(repeated, 2), InvalidArgument);
    const std::vector<Point> single{{0, 0, 0}};
    CHECK_THROWS_AS(polyline_mesh(single, 2), InvalidArgument);
  }

  TEST_CASE("unit cube Kuhn split")
  {
    auto m = unit_cube_mesh(1);
    CHECK(m->num_cells() == 6);
    CHECK(m->num_vertices() == 8);
    CHECK(unit_cube_mesh(2)->num_cells() == 48);
    m = unit_cube_mesh(3);
    CHECK(m->total_volume() == doctest::Approx(1.0).epsilon(1e-12));
    for (int c = 0; c < m->num_cells(); ++c)
      CHECK(m->cell_volume(c) == doctest::Approx(1.0 / (6 * 27)).epsilon(1e-12));
  }

  TEST_CASE("polyline segment")
  {
    const std::vector<Point> pts{{0.5, 0.5, 0.1}, {0.5, 0.5, 0.9}};
    auto m = polyline_mesh(pts, 4);
    CHECK(m->tdim() == 1);
    CHECK(m->gdim() == 3);
    CHECK(m->num_cells() == 4);
    CHECK(m->num_vertices() == 5);
    CHECK(m->total_volume() == doctest::Approx(0.8).epsilon(1e-12));
    for (int c = 0; c < m->num_cells(); ++c) {
      const Point t = interval_tangent(*m, c);
      CHECK(std::abs(t[0]) < 1e-14);
      CHECK(std::abs(t[1]) < 1e-14);
      CHECK(t[2] == doctest::Approx(1.0).epsilon(1e-14));
    }
  }

  TEST_CASE("facet submesh")
  {
    auto sq = unit_square_mesh(1, 1);
    auto left = facet_submesh(sq, [](const Point& x) { return near(x[0], 0.0); });
    CHECK(left->num_cells() == 1);
    REQUIRE(left->parent());
    const ParentMap& pm = *left->parent();
    CHECK(pm.mesh == sq);
    CHECK(pm.entity_dim == 1);
    CHECK(sq->facet_cells(pm.entity[0]).size() == 1);

    for (int n : {2, 4, 8}) {
      auto omega2 = unit_square_mesh(n, 2 * n, {0.5, 0.0}, {0.5, 1.0});
      auto pred = [](const Point& x) { return near(x[0], 0.5); };
      auto gamma = facet_submesh(omega2, pred);
      CHECK(gamma->num_cells() == 2 * n);
      int expected = 0;
      for (int f = 0; f < omega2->num_facets(); ++f) {
        bool all = pred(omega2->facet_midpoint(f));
        for (int v : omega2->facet(f))
          all = all && pred(omega2->vertex(v));
        expected += all;
      }
      CHECK(gamma->num_cells() == expected);
      for (const Point& v : gamma->vertices())
        CHECK(std::abs(v[0] - 0.5) < 1e-12);
      // Parent vertices coincide with child vertices.
      const ParentMap& p = *gamma->parent();
      for (int v = 0; v < gamma->num_vertices(); ++v)
        for (int d = 0; d < 3; ++d)
          CHECK(std::abs(gamma->vertex(v)[d] - omega2->vertex(p.vertex[v])[d]) < 1e-14);
    }
  }

  TEST_CASE("interior facets point to the lowest adjacent cell")
  {
    auto sq = unit_square_mesh(4, 4);
    auto mid = facet_submesh(sq, [](const Point& x) { return near(x[0], 0.5); });
    const ParentMap& p = *mid->parent();
    for (int c = 0; c < mid->num_cells(); ++c) {
      auto cells = sq->facet_cells(p.entity[c]);
      REQUIRE(cells.size() == 2);
      CHECK(p.cell[c] == std::min(cells[0], cells[1]));
    }
  }

  TEST_CASE("empty facet selection")
  {
    auto sq = unit_square_mesh(2, 2);
    CHECK_THROWS_AS(facet_submesh(sq, [](const Point& x) { return x[0] > 5.0; }), EmptyManifold);
  }

  TEST_CASE("locate centroids and tie-break")
  {
    auto m = unit_square_mesh(4, 4);
    CellLocator loc(m);
    auto hit = loc.locate(m->centroid(7));
    CHECK(hit.cell == 7);
    for (int k = 0; k < 3; ++k)
      CHECK(hit.barycentric[k] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    for (auto mesh : {unit_square_mesh(5, 3), unit_cube_mesh(3), unit_square_mesh(3, 6, {0.5, 0}, {0.5, 1})}) {
      CellLocator l(mesh);
      for (int c = 0; c < mesh->num_cells(); ++c)
        CHECK(l.locate(mesh->centroid(c)).cell == c);
    }

    // A vertex shared by several cells resolves to the lowest one.
    for (int v = 0; v < m->num_vertices(); ++v) {
      int lowest = m->num_cells();
      for (int c = 0; c < m->num_cells(); ++c)
        for (int w : m->cell(c))
          if (w == v)
            lowest = std::min(lowest, c);
      CHECK(loc.locate(m->vertex(v)).cell == lowest);
    }
  }

  TEST_CASE("barycentric coordinates sum to one")
  {
    auto m = unit_square_mesh(6, 6);
    CellLocator loc(m);
    std::mt19937_64 rng(3);
    for (int k = 0; k < 50; ++k) {
      auto hit = loc.locate(test::random_point_in_square(rng));
      const double s = hit.barycentric[0] + hit.barycentric[1] + hit.barycentric[2];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
      for (int i = 0; i < 3; ++i)
        CHECK(hit.barycentric[i] >= -1e-10);
    }
  }

  TEST_CASE("out of domain carries the point")
  {
    auto m = unit_square_mesh(2, 2);
    CellLocator loc(m);
    try {
      loc.locate({2.0, 2.0, 0.0});
      FAIL("expected OutOfDomain");
    } catch (const OutOfDomain& e) {
      CHECK(e.point()[0] == 2.0);
      CHECK(e.point()[1] == 2.0);
    }
    CHECK_FALSE(loc.try_locate({-0.5, 0.5, 0.0}).has_value());
  }

  TEST_CASE("generators are deterministic")
  {
    auto a = unit_cube_mesh(3), b = unit_cube_mesh(3);
    CHECK(a->vertices() == b->vertices());
    CHECK(a->cell_array() == b->cell_array());
    CHECK(a->id() != b->id());
    std::ostringstream sa, sb;
    unit_square_mesh(3, 2)->write_ascii(sa);
    unit_square_mesh(3, 2)->write_ascii(sb);
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().rfind("2 2 12 12\n", 0) == 0);
  }
}
