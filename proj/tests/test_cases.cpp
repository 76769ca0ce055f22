#include "helpers.hpp"

#include "msa/cases.hpp"
#include "msa/error.hpp"
#include "msa/manufactured.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace msa;
namespace mf = msa::manufactured;

namespace {

constexpr double fd_h = 1e-5;

template <class F>
auto partial(F f, const Point& x, int d)
{
  Point a = x, b = x;
  a[d] -= fd_h;
  b[d] += fd_h;
  const auto fa = f(a), fb = f(b);
  auto out = fa;
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = (fb[k] - fa[k]) / (2 * fd_h);
  return out;
}

std::array<double, 1> wrap(double v) { return {v}; }

std::vector<Point> samples(double x0, double x1, int count, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(x0, x1), uy(0.05, 0.95);
  std::vector<Point> pts;
  for (int k = 0; k < count; ++k)
    pts.push_back({ux(rng), uy(rng), 0});
  return pts;
}

} // namespace

TEST_SUITE("cases")
{
  TEST_CASE("manufactured Stokes data")
  {
    for (const Point& x : samples(0.05, 0.45, 25, 1)) {
      const auto ds_dx = partial(mf::stokes_sigma, x, 0), ds_dy = partial(mf::stokes_sigma, x, 1);
      const auto f = mf::stokes_f(x);
      CHECK(std::abs(-(ds_dx[0] + ds_dy[1]) - f[0]) <= 1e-5 * (1 + std::abs(f[0])));
      CHECK(std::abs(-(ds_dx[2] + ds_dy[3]) - f[1]) <= 1e-5 * (1 + std::abs(f[1])));
      const double div = partial(mf::stokes_u, x, 0)[0] + partial(mf::stokes_u, x, 1)[1];
      CHECK(std::abs(div) <= 1e-7);
      CHECK(std::abs(mf::stokes_div(x)) <= 1e-12);

      // sigma = sym grad u - p I
      const auto g = mf::stokes_grad_u(x);
      const auto s = mf::stokes_sigma(x);
      const double p = mf::stokes_p(x);
      CHECK(std::abs(s[0] - (g[0] - p)) <= 1e-12);
      CHECK(std::abs(s[1] - 0.5 * (g[1] + g[2])) <= 1e-12);
      CHECK(std::abs(s[3] - (g[3] - p)) <= 1e-12);
      CHECK(std::abs(g[1] - partial(mf::stokes_u, x, 1)[0]) <= 1e-6);
    }
  }

  TEST_CASE("manufactured Darcy data")
  {
    for (const Point& x : samples(0.55, 0.95, 25, 2)) {
      const auto u = mf::darcy_u(x), gp = mf::darcy_grad_p(x);
      CHECK(std::abs(u[0] + gp[0]) <= 1e-12);
      CHECK(std::abs(u[1] + gp[1]) <= 1e-12);
      const auto p = [](const Point& y) { return wrap(mf::darcy_p(y)); };
      CHECK(std::abs(partial(p, x, 0)[0] - gp[0]) <= 1e-6);
      const double div = partial(mf::darcy_u, x, 0)[0] + partial(mf::darcy_u, x, 1)[1];
      CHECK(std::abs(div - mf::darcy_f(x)) <= 1e-5 * (1 + std::abs(div)));
    }
  }

  TEST_CASE("interface residuals")
  {
    for (double y : {0.1, 0.37, 0.5, 0.81}) {
      const Point x{0.5, y, 0};
      const auto u1 = mf::stokes_u(x), u2 = mf::darcy_u(x);
      const auto s = mf::stokes_sigma(x);
      CHECK(std::abs(mf::interface_mass(x) - (u1[0] - u2[0])) <= 1e-12);
      CHECK(std::abs(mf::interface_stress(x) - (s[0] + mf::darcy_p(x))) <= 1e-12);
      CHECK(std::abs(mf::interface_bjs(x) - (s[2] + u1[1])) <= 1e-12);
    }
  }

  TEST_CASE("Babuska with zero data needs no iterations")
  {
    const Problem p = babuska_problem(8);
    AssemblyContext ctx;
    const LinearSystem sys = lower(p, ctx);
    const Op B = build_preconditioner(p, sys, {});
    KrylovOptions o;
    o.x0 = Vector::Zero(sys.a->rows());
    const auto r = minres(sys.a, B, Vector::Zero(sys.a->rows()), o);
    CHECK(r.report.converged);
    CHECK(r.report.iterations == 0);
    CHECK(r.x.isZero(0.0));
  }

  TEST_CASE("perfusion decouples without exchange")
  {
    PerfusionParameters prm;
    prm.beta = 0.0;
    const Problem p = perfusion_problem(4, prm);
    AssemblyContext ctx;
    const LinearSystem sys = lower(p, ctx);
    const DenseMatrix a = test::dense(collapse(sys.a));
    const Vector x = a.lu().solve(sys.b.flatten());
    const BlockVector xb = BlockVector::split(x, p.block_sizes());
    CHECK(xb[0].lpNorm<Eigen::Infinity>() <= 1e-12);
    // The vessel pressure is linear between the end values.
    const Function pf(p.spaces[1], xb[1]);
    for (double z : {0.1, 0.3, 0.5, 0.9}) {
      const Point at{0.55, 0.55, z};
      CHECK(evaluate(pf, at)[0] == doctest::Approx((0.9 - z) / 0.8).epsilon(1e-10));
    }
  }

  TEST_CASE("perfusion couples with exchange")
  {
    const Problem p = perfusion_problem(4, {});
    AssemblyContext ctx;
    const LinearSystem sys = lower(p, ctx);
    const Vector x = test::dense(collapse(sys.a)).lu().solve(sys.b.flatten());
    const BlockVector xb = BlockVector::split(x, p.block_sizes());
    CHECK(xb[0].maxCoeff() > 1e-4);
  }

  TEST_CASE("perfusion radius validation")
  {
    PerfusionParameters prm;
    prm.radius = 0.5;
    CHECK_THROWS_AS(perfusion_problem(4, prm), InvalidArgument);
    prm.radius = 0.0;
    CHECK_THROWS_AS(perfusion_problem(4, prm), InvalidArgument);
  }

  TEST_CASE("study records and csv")
  {
    CaseConfig cfg;
    cfg.name = "babuska";
    cfg.n = 4;
    cfg.levels = 2;
    cfg.verbose = false;
    const StudyRecord r = run_case(cfg);
    REQUIRE(r.levels.size() == 2);
    CHECK(std::isnan(r.rate("u_h1", 0)));
    CHECK(r.rate("u_h1", 1) == doctest::Approx(std::log2(r.error("u_h1", 0) / r.error("u_h1", 1))));
    CHECK(r.all_converged());

    const auto path = std::filesystem::temp_directory_path() / "msa_cases_test.csv";
    r.write_csv(path.string());
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    CHECK(header ==
          "level,h,dofs_total,iters,err_u_h1,err_u_l2,err_p_l2,rate_u_h1,rate_u_l2,rate_p_l2,seconds,converged,seed,"
          "hs_mode,darcy_pressure_block");
    std::getline(in, row);
    CHECK(row.rfind("0,0.25,", 0) == 0);
    std::filesystem::remove(path);

    // The same seed gives the same iteration counts.
    const StudyRecord again = run_case(cfg);
    CHECK(again.levels[0].iterations == r.levels[0].iterations);
    CHECK(again.levels[1].iterations == r.levels[1].iterations);

    cfg.levels = 0;
    CHECK_THROWS_AS(run_case(cfg), InvalidArgument);
    cfg.levels = 1;
    cfg.name = "unknown";
    CHECK_THROWS_AS(run_case(cfg), InvalidArgument);
  }

  TEST_CASE("restriction demo")
  {
    CaseConfig cfg;
    cfg.name = "restrict-demo";
    cfg.n = 4;
    cfg.levels = 2;
    cfg.verbose = false;
    const StudyRecord r = run_case(cfg);
    for (int k = 0; k < 2; ++k) {
      CHECK(r.error("reproduction", k) <= 1e-12);
      CHECK(r.error("rowsum", k) <= 1e-12);
      CHECK(r.error("lowering", k) <= 1e-12);
      CHECK(r.error("cache", k) == 0.0);
    }
  }

  TEST_CASE("matrix export")
  {
    const auto dir = std::filesystem::temp_directory_path() / "msa_export_test";
    std::filesystem::remove_all(dir);
    CaseConfig cfg;
    cfg.name = "babuska";
    const auto files = export_matrices(cfg, 4, dir.string());
    auto has = [&](const std::string& name) {
      return std::find(files.begin(), files.end(), (dir / name).string()) != files.end();
    };
    CHECK(has("block_0_0.mtx"));
    CHECK(has("block_0_1.mtx"));
    CHECK(has("block_1_0.mtx"));
    CHECK_FALSE(has("block_1_1.mtx"));
    CHECK(has("rhs_1.mtx"));
    CHECK(has("reduction_trace_0.mtx"));
    const SparseMatrix t = read_matrix_market(dir / "reduction_trace_0.mtx");
    CHECK(t.rows() == 16);
    CHECK(t.cols() == 25);
    std::filesystem::remove_all(dir);
  }
}
