#include "msa/cases.hpp"

#include "msa/error.hpp"
#include "msa/manufactured.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <cmath>
#include <map>

namespace msa {

namespace mf = manufactured;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Field vec2(std::array<double, 2> (*f)(const Point&), int degree = 2)
{
  return vector_field(
    2,
    [f](const Point& x) {
      const auto v = f(x);
      return std::array<double, 3>{v[0], v[1], 0.0};
    },
    degree);
}

Field scal(double (*f)(const Point&), int degree = 2) { return scalar_field(f, degree); }

Field mat2(std::array<double, 4> (*f)(const Point&), int degree = 2)
{
  return {Shape::matrix(2, 2),
          [f](const Point& x, std::span<double> out) {
            const auto v = f(x);
            std::copy(v.begin(), v.end(), out.begin());
          },
          degree};
}

bool on_unit_square_boundary(const Point& x)
{
  return near(x[0], 0.0) || near(x[0], 1.0) || near(x[1], 0.0) || near(x[1], 1.0);
}

bool on_top_or_bottom(const Point& x) { return near(x[1], 0.0) || near(x[1], 1.0); }

SparseMatrix mass_matrix(const SpacePtr& V)
{
  const Expr u = trial_function(V), v = test_function(V);
  return assemble_matrix(inner(u, v) * dx(V->mesh()));
}

SparseMatrix stiffness_matrix(const SpacePtr& V)
{
  const Expr u = trial_function(V), v = test_function(V);
  return assemble_matrix(inner(grad(u), grad(v)) * dx(V->mesh()));
}

std::vector<BlockConstraint> constraints_of(const Problem& p)
{
  std::vector<BlockConstraint> out(p.num_blocks());
  for (int i = 0; i < p.num_blocks(); ++i) {
    std::map<int, double> merged;
    for (const DirichletBC& bc : p.bcs[i])
      for (std::size_t k = 0; k < bc.dofs().size(); ++k)
        merged[bc.dofs()[k]] = bc.values()[k];
    for (auto [dof, value] : merged) {
      out[i].dofs.push_back(dof);
      out[i].values.push_back(value);
    }
  }
  return out;
}

} // namespace

Problem::Problem(std::string n, std::vector<std::string> names, std::vector<SpacePtr> s)
  : name(std::move(n)), block_names(std::move(names)), spaces(std::move(s)), a(spaces, 2), rhs(spaces, 1),
    bcs(spaces.size())
{}

std::vector<int> Problem::block_sizes() const
{
  std::vector<int> out;
  for (const SpacePtr& s : spaces)
    out.push_back(s->dim());
  return out;
}

LinearSystem lower(const Problem& problem, AssemblyContext& ctx)
{
  LinearSystem sys;
  const auto t0 = std::chrono::steady_clock::now();
  sys.a_raw = multi_assemble_bilinear(problem.a, ctx);
  sys.b_raw = multi_assemble_linear(problem.rhs, ctx);
  sys.assembly_seconds = seconds_since(t0);
  sys.b = sys.b_raw;
  sys.a = constrain_block_system(sys.a_raw, sys.b, constraints_of(problem));
  return sys;
}

Problem babuska_problem(int n)
{
  const MeshPtr mesh = unit_square_mesh(n, n);
  const MeshPtr gamma = facet_submesh(mesh, on_unit_square_boundary);
  const SpacePtr V = FunctionSpace::build(mesh, Element::P(1));
  const SpacePtr Q = FunctionSpace::build(gamma, Element::P(1));
  Problem p("babuska", {"u", "p"}, {V, Q});
  p.meshes = {{"omega", mesh}, {"gamma", gamma}};

  const Expr u = trial_function(V, 0), v = test_function(V, 0);
  const Expr lam = trial_function(Q, 1), q = test_function(Q, 1);
  p.a.add((inner(grad(u), grad(v)) + u * v) * dx(mesh));
  p.a.add(lam * trace(v, gamma) * dx(gamma));
  p.a.add(trace(u, gamma) * q * dx(gamma));

  p.rhs.add(analytic(scal(mf::babuska_f)) * v * dx(mesh));
  p.rhs.add(analytic(scal(mf::babuska_u)) * q * dx(gamma));
  return p;
}

Problem darcy_stokes_problem(int n, DarcyStokes formulation)
{
  const MeshPtr m1 = unit_square_mesh(n, n, {0.0, 0.0}, {0.5, 1.0});
  const MeshPtr m2 = unit_square_mesh(n, 2 * n, {0.5, 0.0}, {0.5, 1.0});
  const MeshPtr gamma = facet_submesh(m2, [](const Point& x) { return near(x[0], 0.5); });
  const MeshPtr neumann1 = facet_submesh(m1, on_top_or_bottom);
  const bool mixed = formulation == DarcyStokes::Mixed;

  const SpacePtr V1 = FunctionSpace::build(m1, Element::VectorP(2));
  const SpacePtr Q1 = FunctionSpace::build(m1, Element::P(1));
  std::vector<SpacePtr> spaces{V1, Q1};
  std::vector<std::string> names{"u1", "p1"};
  if (mixed) {
    spaces.push_back(FunctionSpace::build(m2, Element::RT0()));
    spaces.push_back(FunctionSpace::build(m2, Element::DG0()));
    spaces.push_back(FunctionSpace::build(gamma, Element::DG0()));
    names.insert(names.end(), {"u2", "p2", "p"});
  } else {
    spaces.push_back(FunctionSpace::build(m2, Element::P(2)));
    names.push_back("p2");
  }
  Problem p(mixed ? "ds-mixed" : "ds-primal", names, spaces);
  p.meshes = {{"omega1", m1}, {"omega2", m2}, {"gamma", gamma}, {"neumann1", neumann1}};

  const Expr nrm = constant(std::vector<double>{1.0, 0.0});
  const Expr tau = constant(std::vector<double>{0.0, 1.0});
  const Expr u1 = trial_function(V1, 0), v1 = test_function(V1, 0);
  const Expr p1 = trial_function(Q1, 1), q1 = test_function(Q1, 1);
  const Expr Tu1 = trace(u1, gamma), Tv1 = trace(v1, gamma);

  // Stokes with the tangential (BJS) interface term
  p.a.add(inner(sym(grad(u1)), sym(grad(v1))) * dx(m1) + inner(dot(Tu1, tau), dot(Tv1, tau)) * dx(gamma) -
          inner(q1, div(u1)) * dx(m1) - inner(p1, div(v1)) * dx(m1));

  // Traction on the top and bottom of the Stokes domain
  const Field traction = vector_field(2, [](const Point& x) {
    const auto s = mf::stokes_sigma(x);
    const double ny = x[1] < 0.5 ? -1.0 : 1.0;
    return std::array<double, 3>{s[1] * ny, s[3] * ny, 0.0};
  });
  p.rhs.add(inner(analytic(vec2(mf::stokes_f)), v1) * dx(m1) +
            analytic(scal(mf::interface_stress)) * dot(Tv1, nrm) * dx(gamma) +
            analytic(scal(mf::interface_bjs)) * dot(Tv1, tau) * dx(gamma) +
            inner(analytic(traction), trace(v1, neumann1)) * dx(neumann1));

  p.bcs[0].emplace_back(V1, vec2(mf::stokes_u), [](const Point& x) { return near(x[0], 0.0); });

  if (mixed) {
    const SpacePtr &V2 = spaces[2], &Q2 = spaces[3], &Q = spaces[4];
    const MeshPtr dirichlet2 = facet_submesh(m2, [](const Point& x) { return near(x[0], 1.0); });
    p.meshes["dirichlet2"] = dirichlet2;
    const Expr u2 = trial_function(V2, 2), v2 = test_function(V2, 2);
    const Expr p2 = trial_function(Q2, 3), q2 = test_function(Q2, 3);
    const Expr lam = trial_function(Q, 4), q = test_function(Q, 4);
    const Expr Tu2 = trace(u2, gamma), Tv2 = trace(v2, gamma);

    p.a.add(inner(u2, v2) * dx(m2) - inner(p2, div(v2)) * dx(m2) - inner(q2, div(u2)) * dx(m2));
    p.a.add(inner(lam, dot(Tv1, nrm)) * dx(gamma) - inner(lam, dot(Tv2, nrm)) * dx(gamma) +
            inner(q, dot(Tu1, nrm)) * dx(gamma) - inner(q, dot(Tu2, nrm)) * dx(gamma));

    // Darcy: the pressure on x = 1 enters naturally with n2 = (1, 0)
    p.rhs.add(-1.0 * (analytic(scal(mf::darcy_p)) * dot(trace(v2, dirichlet2), nrm)) * dx(dirichlet2));
    p.rhs.add(-1.0 * (analytic(scal(mf::darcy_f)) * q2) * dx(m2));
    p.rhs.add(analytic(scal(mf::interface_mass)) * q * dx(gamma));

    p.bcs[2].emplace_back(V2, vec2(mf::darcy_u), on_top_or_bottom);
  } else {
    const SpacePtr& P2 = spaces[2];
    const MeshPtr neumann2 = facet_submesh(m2, on_top_or_bottom);
    p.meshes["neumann2"] = neumann2;
    const Expr p2 = trial_function(P2, 2), q2 = test_function(P2, 2);
    const Expr Tq2 = trace(q2, gamma);

    p.a.add(inner(grad(p2), grad(q2)) * dx(m2));
    p.a.add(trace(p2, gamma) * dot(Tv1, nrm) * dx(gamma) - dot(Tu1, nrm) * Tq2 * dx(gamma));

    const Field flux_out = scalar_field([](const Point& x) {
      const auto u = mf::darcy_u(x);
      return x[1] < 0.5 ? -u[1] : u[1];
    });
    p.rhs.add(analytic(scal(mf::darcy_f)) * q2 * dx(m2) - analytic(scal(mf::interface_mass)) * Tq2 * dx(gamma) -
              analytic(flux_out) * trace(q2, neumann2) * dx(neumann2));

    p.bcs[2].emplace_back(P2, scal(mf::darcy_p), [](const Point& x) { return near(x[0], 1.0); });
  }
  return p;
}

std::array<Point, 2> perfusion_vessel(double offset)
{
  return {Point{0.5 + offset, 0.5 + offset, 0.1}, Point{0.5 + offset, 0.5 + offset, 0.9}};
}

Problem perfusion_problem(int n, const PerfusionParameters& prm)
{
  const MeshPtr mesh = unit_cube_mesh(n);
  const auto ends = perfusion_vessel(prm.offset);
  const MeshPtr gamma = polyline_mesh(ends, n);
  const double clearance = std::min({ends[0][0], 1.0 - ends[0][0], ends[0][1], 1.0 - ends[0][1]});
  if (prm.radius <= 0.0 || prm.radius >= clearance)
    throw InvalidArgument("perfusion: radius must lie in (0, " + std::to_string(clearance) +
                          ") so that every averaging circle stays inside the cube");

  const SpacePtr V = FunctionSpace::build(mesh, Element::P(1));
  const SpacePtr Q = FunctionSpace::build(gamma, Element::P(1));
  Problem p("perfusion", {"u", "p"}, {V, Q});
  p.meshes = {{"omega", mesh}, {"gamma", gamma}};

  const Expr u = trial_function(V, 0), v = test_function(V, 0);
  const Expr pp = trial_function(Q, 1), q = test_function(Q, 1);
  const Expr Pu = average(u, gamma, prm.radius, prm.n_quad);
  const Expr Tv = trace(v, gamma);

  p.a.add(prm.k * inner(grad(u), grad(v)) * dx(mesh));
  p.a.add(prm.beta * ((Pu - pp) * Tv) * dx(gamma));
  p.a.add(prm.k_hat * inner(grad(pp), grad(q)) * dx(gamma));
  p.a.add(-prm.beta * ((Pu - pp) * q) * dx(gamma));
  // No sources: the flow is driven by the vessel end pressures.

  p.bcs[0].emplace_back(V, constant_field(0.0), [](const Point& x) {
    for (int d = 0; d < 3; ++d)
      if (near(x[d], 0.0) || near(x[d], 1.0))
        return true;
    return false;
  });
  auto at = [](const Point& e) {
    return [e](const Point& x) { return near(x[0], e[0]) && near(x[1], e[1]) && near(x[2], e[2]); };
  };
  p.bcs[1].emplace_back(Q, constant_field(1.0), at(ends[0]));
  p.bcs[1].emplace_back(Q, constant_field(0.0), at(ends[1]));
  return p;
}

SparseMatrix dual_grid_laplacian(const FunctionSpace& space)
{
  const Mesh& m = *space.mesh();
  if (m.tdim() != 1)
    throw InvalidArgument("dual_grid_laplacian: needs an interval mesh");
  TripletBuilder t(space.dim(), space.dim());
  auto couple = [&](int a, int b, const Point& xa, const Point& xb) {
    double d = 0.0;
    for (int k = 0; k < 3; ++k)
      d += (xa[k] - xb[k]) * (xa[k] - xb[k]);
    const double w = 1.0 / std::sqrt(d);
    t.add(a, a, w);
    t.add(b, b, w);
    t.add(a, b, -w);
    t.add(b, a, -w);
  };
  const Element& e = space.element();
  if (e == Element::P(1)) {
    for (int c = 0; c < m.num_cells(); ++c) {
      auto dofs = space.cell_dofs(c);
      couple(dofs[0], dofs[1], space.dof_coordinate(dofs[0]), space.dof_coordinate(dofs[1]));
    }
  } else if (e == Element::DG0()) {
    // Neighbouring cells share a vertex; both ends of the curve stay natural.
    std::vector<std::vector<int>> cells_of(m.num_vertices());
    for (int c = 0; c < m.num_cells(); ++c)
      for (int v : m.cell(c))
        cells_of[v].push_back(c);
    for (const auto& cs : cells_of)
      for (std::size_t i = 0; i < cs.size(); ++i)
        for (std::size_t j = i + 1; j < cs.size(); ++j)
          couple(cs[i], cs[j], m.centroid(cs[i]), m.centroid(cs[j]));
  } else {
    throw UnsupportedElement("dual_grid_laplacian: needs P1 or DG0, got " + e.str());
  }
  return t.finalize();
}

namespace {

Op fractional_inverse(const SpacePtr& Q, double s, const std::string& mode)
{
  const SparseMatrix M = mass_matrix(Q);
  const bool fe = mode == "eig" && Q->element() == Element::P(1);
  if (mode != "eig" && mode != "fd-surrogate")
    throw InvalidArgument("unknown hs-mode '" + mode + "' (expected eig or fd-surrogate)");
  const SparseMatrix L = fe ? stiffness_matrix(Q) : dual_grid_laplacian(*Q);
  return HsNorm(M, L + M, s).inverse();
}

SparseMatrix with_bcs(SparseMatrix a, const std::vector<DirichletBC>& bcs)
{
  Vector dummy = Vector::Zero(a.rows());
  apply_bc(a, dummy, bcs, true);
  return a;
}

} // namespace

Op build_preconditioner(const Problem& p, const LinearSystem& sys, const PreconditionerOptions& o)
{
  auto inv = [&](const Op& block, const std::string& label) { return inverse_handle(block, o.inverse_mode, label); };
  if (p.name == "babuska")
    return block_diag_mat({inv(block_of(sys.a, 0, 0), "H1"), fractional_inverse(p.spaces[1], -0.5, o.hs_mode)});

  if (p.name != "ds-mixed" && p.name != "ds-primal")
    throw InvalidArgument("build_preconditioner: no preconditioner for case '" + p.name + "'");
  std::vector<Op> diag{inv(block_of(sys.a, 0, 0), "stokes velocity"),
                       inv(matrix_op(mass_matrix(p.spaces[1])), "stokes pressure mass")};
  if (p.name == "ds-mixed") {
    const SpacePtr& V2 = p.spaces[2];
    const Expr u = trial_function(V2), v = test_function(V2);
    SparseMatrix hdiv = assemble_matrix((inner(u, v) + inner(div(u), div(v))) * dx(V2->mesh()));
    diag.push_back(inv(matrix_op(with_bcs(std::move(hdiv), p.bcs[2])), "darcy velocity Hdiv"));
    diag.push_back(inv(matrix_op(mass_matrix(p.spaces[3])), "darcy pressure mass"));
    diag.push_back(fractional_inverse(p.spaces[4], 0.5, o.hs_mode));
    return block_diag_mat(std::move(diag));
  }
  const SpacePtr& P2 = p.spaces[2];
  const std::string& mode = o.darcy_pressure_block;
  if (mode == "mass" || mode == "neg-mass") {
    Op m = inv(matrix_op(with_bcs(mass_matrix(P2), p.bcs[2])), "darcy pressure mass");
    diag.push_back(mode == "mass" ? m : scaled(-1.0, m));
  } else if (mode == "stiffness") {
    diag.push_back(inv(matrix_op(with_bcs(stiffness_matrix(P2) + mass_matrix(P2), p.bcs[2])), "darcy pressure H1"));
  } else {
    throw InvalidArgument("unknown darcy-pressure-block '" + mode + "' (expected mass, neg-mass or stiffness)");
  }
  return block_diag_mat(std::move(diag));
}

// Studies

std::vector<double> StudyRecord::rates(int level) const
{
  std::vector<double> out(error_names.size(), std::nan(""));
  if (level <= 0)
    return out;
  for (std::size_t k = 0; k < error_names.size(); ++k) {
    const double prev = levels[level - 1].errors[k];
    const double cur = levels[level].errors[k];
    const double hr = levels[level - 1].h / levels[level].h;
    out[k] = std::log(prev / cur) / std::log(hr);
  }
  return out;
}

namespace {

int error_index(const StudyRecord& r, const std::string& name)
{
  for (std::size_t k = 0; k < r.error_names.size(); ++k)
    if (r.error_names[k] == name)
      return static_cast<int>(k);
  throw InvalidArgument("study has no error column '" + name + "'");
}

} // namespace

double StudyRecord::rate(const std::string& name, int level) const { return rates(level)[error_index(*this, name)]; }

double StudyRecord::error(const std::string& name, int level) const
{
  return levels.at(level).errors[error_index(*this, name)];
}

bool StudyRecord::all_converged() const
{
  for (const LevelRecord& l : levels)
    if (!l.converged)
      return false;
  return true;
}


// Level solves and studies

namespace {

Problem build_problem(const CaseConfig& cfg, int n)
{
  if (cfg.name == "babuska")
    return babuska_problem(n);
  if (cfg.name == "ds-primal")
    return darcy_stokes_problem(n, DarcyStokes::Primal);
  if (cfg.name == "ds-mixed")
    return darcy_stokes_problem(n, DarcyStokes::Mixed);
  if (cfg.name == "perfusion") {
    PerfusionParameters prm;
    prm.radius = cfg.radius;
    prm.n_quad = cfg.n_quad;
    return perfusion_problem(n, prm);
  }
  throw InvalidArgument("unknown case '" + cfg.name + "' (expected babuska, ds-primal, ds-mixed, perfusion or restrict-demo)");
}

Vector direct_solve(const Op& a, const Vector& b)
{
  const SparseMatrix A = a->collapse(true);
  Eigen::SparseMatrix<double, Eigen::ColMajor, int> Ac(A);
  Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor, int>> lu;
  lu.compute(Ac);
  if (lu.info() != Eigen::Success)
    throw SolverError("direct solve: factorization failed (" + lu.lastErrorMessage() + ")");
  return lu.solve(b);
}

void print_level(const StudyRecord& r, const LevelRecord& l)
{
  std::cout << r.case_name << " n=" << l.n << " dofs=" << l.dofs_total << " iters=" << l.iterations
            << (l.converged ? "" : " (not converged)");
  for (std::size_t k = 0; k < r.error_names.size(); ++k)
    std::cout << ' ' << r.error_names[k] << '=' << std::setprecision(4) << l.errors[k];
  std::cout << " time=" << std::setprecision(3) << l.seconds << "s\n";
}

LevelRecord level_record(const Problem& p, int n)
{
  LevelRecord l;
  l.n = n;
  l.h = 1.0 / n;
  l.block_dofs = p.block_sizes();
  for (int d : l.block_dofs)
    l.dofs_total += d;
  return l;
}

Function block_function(const LevelSolution& s, int i) { return Function(s.problem.spaces[i], s.x[i]); }

double h1_error(const Function& f, const Field& exact, const Field& grad)
{
  return std::hypot(l2_error(f, exact), h1_seminorm_error(f, grad));
}

template <class ErrorFn>
StudyRecord krylov_study(const CaseConfig& cfg, std::vector<std::string> names, ErrorFn errors)
{
  StudyRecord r;
  r.case_name = cfg.name;
  r.error_names = std::move(names);
  r.config = cfg;
  for (int k = 0, n = cfg.n; k < cfg.levels; ++k, n *= 2) {
    const auto t0 = std::chrono::steady_clock::now();
    LevelSolution s = solve_level(cfg, n);
    LevelRecord l = level_record(s.problem, n);
    l.iterations = s.report.iterations;
    l.converged = s.report.converged;
    l.assembly_seconds = s.system.assembly_seconds;
    l.errors = errors(s);
    l.seconds = seconds_since(t0);
    r.levels.push_back(std::move(l));
    if (cfg.verbose)
      print_level(r, r.levels.back());
  }
  return r;
}

} // namespace

LevelSolution solve_level(const CaseConfig& cfg, int n)
{
  Problem p = build_problem(cfg, n);
  AssemblyContext ctx;
  LinearSystem sys = lower(p, ctx);
  const Vector b = sys.b.flatten();
  KrylovReport report;
  Vector x;
  if (cfg.name == "perfusion") {
    x = direct_solve(sys.a, b);
    report.method = "direct";
    report.converged = true;
    report.final_relative_residual = (b - sys.a->apply(x)).norm() / std::max(b.norm(), 1e-300);
  } else {
    const Op B = build_preconditioner(p, sys, cfg.preconditioner);
    KrylovOptions opts;
    opts.tol = cfg.tol;
    opts.seed = cfg.seed;
    KrylovResult res = cfg.name == "ds-primal" ? gmres(sys.a, B, b, opts) : minres(sys.a, B, b, opts);
    x = std::move(res.x);
    report = std::move(res.report);
  }
  BlockVector xb = BlockVector::split(x, p.block_sizes());
  return {std::move(p), std::move(sys), std::move(xb), std::move(report)};
}

StudyRecord run_babuska(const CaseConfig& cfg)
{
  return krylov_study(cfg, {"u_h1", "u_l2", "p_l2"}, [](const LevelSolution& s) {
    const Function u = block_function(s, 0), p = block_function(s, 1);
    return std::vector<double>{h1_error(u, scal(mf::babuska_u), vec2(mf::babuska_grad_u)),
                               l2_error(u, scal(mf::babuska_u)), l2_norm(p)};
  });
}

StudyRecord run_darcy_stokes(const CaseConfig& cfg, DarcyStokes formulation)
{
  CaseConfig c = cfg;
  c.name = formulation == DarcyStokes::Mixed ? "ds-mixed" : "ds-primal";
  if (formulation == DarcyStokes::Mixed)
    return krylov_study(c, {"u1_h1", "p1_l2", "u2_hdiv", "p2_l2", "lambda_l2", "composite"},
                        [](const LevelSolution& s) {
                          std::vector<double> e{
                            h1_error(block_function(s, 0), vec2(mf::stokes_u), mat2(mf::stokes_grad_u)),
                            l2_error(block_function(s, 1), scal(mf::stokes_p)),
                            hdiv_error(block_function(s, 2), vec2(mf::darcy_u), scal(mf::darcy_f)),
                            l2_error(block_function(s, 3), scal(mf::darcy_p)),
                            l2_error(block_function(s, 4), scal(mf::darcy_p))};
                          double sq = 0.0;
                          for (double v : e)
                            sq += v * v;
                          e.push_back(std::sqrt(sq));
                          return e;
                        });
  return krylov_study(c, {"u1_h1", "p1_l2", "p2_l2", "p2_h1"}, [](const LevelSolution& s) {
    const Function p2 = block_function(s, 2);
    return std::vector<double>{h1_error(block_function(s, 0), vec2(mf::stokes_u), mat2(mf::stokes_grad_u)),
                               l2_error(block_function(s, 1), scal(mf::stokes_p)),
                               l2_error(p2, scal(mf::darcy_p)),
                               h1_error(p2, scal(mf::darcy_p), vec2(mf::darcy_grad_p))};
  });
}

namespace {

/// The coarse function as an analytic field, for differences on a finer mesh.
Field as_field(const Function& coarse)
{
  auto f = std::make_shared<Function>(coarse);
  return scalar_field([f](const Point& x) { return evaluate(*f, x)[0]; }, 1);
}

} // namespace

StudyRecord run_perfusion(const CaseConfig& cfg)
{
  StudyRecord r;
  r.case_name = "perfusion";
  r.error_names = {"diff"};
  r.config = cfg;
  CaseConfig c = cfg;
  c.name = "perfusion";
  auto t0 = std::chrono::steady_clock::now();
  LevelSolution coarse = solve_level(c, cfg.n);
  for (int k = 0, n = cfg.n; k < cfg.levels; ++k, n *= 2) {
    LevelSolution fine = solve_level(c, 2 * n);
    const Function uf = block_function(fine, 0), pf = block_function(fine, 1);
    const double du = l2_error(uf, as_field(block_function(coarse, 0)));
    const double dp = l2_error(pf, as_field(block_function(coarse, 1)));
    const double norm = std::hypot(l2_norm(uf), l2_norm(pf));

    LevelRecord l = level_record(coarse.problem, n);
    l.errors = {std::hypot(du, dp) / norm};
    l.assembly_seconds = coarse.system.assembly_seconds;
    l.seconds = seconds_since(t0);
    r.levels.push_back(std::move(l));
    if (cfg.verbose)
      print_level(r, r.levels.back());
    t0 = std::chrono::steady_clock::now();
    coarse = std::move(fine);
  }
  return r;
}

StudyRecord run_restrict_demo(const CaseConfig& cfg)
{
  StudyRecord r;
  r.case_name = "restrict-demo";
  r.error_names = {"reproduction", "rowsum", "lowering", "cache"};
  r.config = cfg;
  for (int k = 0, n = cfg.n; k < cfg.levels; ++k, n *= 2) {
    const auto t0 = std::chrono::steady_clock::now();
    const MeshPtr mesh = unit_square_mesh(n, n);
    const MeshPtr omega = cell_submesh(mesh, [](const Point& x) { return x[0] <= 0.5 + 1e-12; });
    const SpacePtr V = FunctionSpace::build(mesh, Element::P(1));
    const SpacePtr W = FunctionSpace::build(omega, Element::P(1));
    ReductionCache cache;
    AssemblyContext ctx(cache);

    const Expr u = trial_function(V), v = test_function(V);
    const Form mass_on_omega = restrict_to(u, omega) * restrict_to(v, omega) * dx(omega);
    const SparseMatrix lowered = as_operator(multi_assemble(mass_on_omega, ctx))->collapse();
    as_operator(multi_assemble(mass_on_omega, ctx));

    const SparseMatrix& R = cache.get_or_build(V, {ReductionKind::Restrict, omega})->matrix;
    const Field linear = scalar_field([](const Point& x) { return x[0] + 2.0 * x[1]; }, 1);
    const double reproduction =
      (R * interpolate(V, linear).coefficients() - interpolate(W, linear).coefficients()).lpNorm<Eigen::Infinity>();

    const Expr uw = trial_function(W), vw = test_function(W);
    const SparseMatrix Mw = assemble_matrix(uw * vw * dx(omega));
    const SparseMatrix MwR = Mw * R;
    const double rowsum =
      (MwR * Vector::Ones(V->dim()) - Mw * Vector::Ones(W->dim())).lpNorm<Eigen::Infinity>();
    const DenseMatrix oracle = DenseMatrix(R).transpose() * DenseMatrix(Mw) * DenseMatrix(R);
    const double lowering = max_relative_difference(DenseMatrix(lowered), oracle);

    LevelRecord l;
    l.n = n;
    l.h = 1.0 / n;
    l.block_dofs = {V->dim(), W->dim()};
    l.dofs_total = V->dim() + W->dim();
    l.errors = {reproduction, rowsum, lowering, static_cast<double>(cache.build_count() - 1)};
    l.seconds = seconds_since(t0);
    r.levels.push_back(std::move(l));
    if (cfg.verbose)
      print_level(r, r.levels.back());
  }
  return r;
}

StudyRecord run_case(const CaseConfig& cfg)
{
  if (cfg.n < 2 || cfg.levels < 1)
    throw InvalidArgument("run_case: need n >= 2 and at least one level");
  if (!(cfg.tol > 0.0 && cfg.tol < 1.0))
    throw InvalidArgument("run_case: tol must lie in (0, 1)");
  if (cfg.name == "babuska")
    return run_babuska(cfg);
  if (cfg.name == "ds-primal")
    return run_darcy_stokes(cfg, DarcyStokes::Primal);
  if (cfg.name == "ds-mixed")
    return run_darcy_stokes(cfg, DarcyStokes::Mixed);
  if (cfg.name == "perfusion")
    return run_perfusion(cfg);
  if (cfg.name == "restrict-demo")
    return run_restrict_demo(cfg);
  throw InvalidArgument("unknown case '" + cfg.name + "'");
}

void StudyRecord::write_csv(const std::string& path) const
{
  std::ofstream out(path);
  if (!out)
    throw InvalidArgument("cannot write " + path);
  out << "level,h,dofs_total,iters";
  for (const std::string& e : error_names)
    out << ",err_" << e;
  for (const std::string& e : error_names)
    out << ",rate_" << e;
  out << ",seconds,converged,seed,hs_mode,darcy_pressure_block\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const LevelRecord& l = levels[k];
    out << k << ',' << l.h << ',' << l.dofs_total << ',' << l.iterations;
    for (double e : l.errors)
      out << ',' << e;
    for (double rate : rates(static_cast<int>(k)))
      out << ',' << rate;
    out << ',' << l.seconds << ',' << (l.converged ? 1 : 0) << ',' << config.seed << ','
        << config.preconditioner.hs_mode << ',' << config.preconditioner.darcy_pressure_block << '\n';
  }
}

std::vector<std::string> export_matrices(const CaseConfig& cfg, int n, const std::string& dir)
{
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  auto path = [&](const std::string& name) {
    written.push_back((fs::path(dir) / name).string());
    return written.back();
  };

  if (cfg.name == "restrict-demo") {
    const MeshPtr mesh = unit_square_mesh(n, n);
    const MeshPtr omega = cell_submesh(mesh, [](const Point& x) { return x[0] <= 0.5 + 1e-12; });
    const SpacePtr V = FunctionSpace::build(mesh, Element::P(1));
    ReductionCache cache;
    write_matrix_market(cache.get_or_build(V, {ReductionKind::Restrict, omega})->matrix, path("reduction_restrict_0.mtx"));
    return written;
  }

  const Problem p = build_problem(cfg, n);
  ReductionCache cache;
  AssemblyContext ctx(cache);
  const LinearSystem sys = lower(p, ctx);
  for (int i = 0; i < p.num_blocks(); ++i) {
    for (int j = 0; j < p.num_blocks(); ++j) {
      const Op block = block_of(sys.a_raw, i, j);
      if (block->kind() != OpKind::Zero)
        write_matrix_market(block, path("block_" + std::to_string(i) + "_" + std::to_string(j) + ".mtx"));
    }
    write_matrix_market(sys.b_raw[i], path("rhs_" + std::to_string(i) + ".mtx"));
  }
  std::map<ReductionKind, int> counter;
  for (const ReductionPtr& red : cache.entries())
    write_matrix_market(red->matrix, path("reduction_" + to_string(red->kind) + "_" +
                                          std::to_string(counter[red->kind]++) + ".mtx"));
  return written;
}

} // namespace msa
