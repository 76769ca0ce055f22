#pragma once

#include "msa/assemble.hpp"
#include "msa/interpreter.hpp"
#include "msa/krylov.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace msa {

/// A multiscale block problem: spaces, block forms and essential conditions per block.
struct Problem
{
  std::string name;
  std::vector<std::string> block_names;
  std::vector<SpacePtr> spaces;
  BlockForm a;
  BlockForm rhs;
  std::vector<std::vector<DirichletBC>> bcs;
  std::map<std::string, MeshPtr> meshes;

  Problem(std::string name, std::vector<std::string> block_names, std::vector<SpacePtr> spaces);
  int num_blocks() const { return static_cast<int>(spaces.size()); }
  std::vector<int> block_sizes() const;
};

/// Lowered problem before and after eliminating the essential conditions.
struct LinearSystem
{
  Op a_raw;
  BlockVector b_raw;
  Op a;
  BlockVector b;
  double assembly_seconds = 0.0;
};

/// Lowers both block forms through the interpreter and constrains the result.
LinearSystem lower(const Problem& problem, AssemblyContext& ctx);

// Problem builders

/// -lap u + u = f in the unit square with u = g on the boundary imposed by a
/// multiplier; (n x n) mesh, P1-P1.
Problem babuska_problem(int n);

enum class DarcyStokes { Primal, Mixed };

/// Stokes on [0, 0.5] x [0, 1] (n x n) coupled to Darcy on [0.5, 1] x [0, 1]
/// (n x 2n) across x = 0.5, with the interface mesh cut from the Darcy side.
Problem darcy_stokes_problem(int n, DarcyStokes formulation);

struct PerfusionParameters
{
  double radius = 0.1;
  int n_quad = 16;
  double k = 1.0;
  double k_hat = 1.0;
  double beta = 1.0;
  double offset = 0.05;
};

/// 3d-1d perfusion in the unit cube around a straight vessel not aligned with mesh edges.
Problem perfusion_problem(int n, const PerfusionParameters& params);

/// The vessel end points for the given offset.
std::array<Point, 2> perfusion_vessel(double offset);

// Preconditioners

struct PreconditionerOptions
{
  /// "eig": FE stiffness in the fractional pencil where one exists; "fd-surrogate": dual-grid
  /// finite differences for every multiplier space.
  std::string hs_mode = "eig";
  /// Darcy pressure block of the primal preconditioner: "stiffness" (Laplacian plus mass, the
  /// Riesz map of the H1 pressure), "mass" or "neg-mass".
  std::string darcy_pressure_block = "stiffness";
  InverseMode inverse_mode = InverseMode::Auto;
};

/// Two-point Laplacian on the dofs of a P1 or P0 space over an interval mesh,
/// weighted by inverse dof distances.
SparseMatrix dual_grid_laplacian(const FunctionSpace& space);

/// Block diagonal Riesz-map preconditioner for babuska, ds-primal or ds-mixed.
Op build_preconditioner(const Problem& problem, const LinearSystem& system, const PreconditionerOptions& options);

// Studies

struct CaseConfig
{
  std::string name = "babuska";
  int n = 8;
  int levels = 4;
  double tol = 1e-10;
  std::uint64_t seed = 1234;
  PreconditionerOptions preconditioner;
  double radius = 0.1;
  int n_quad = 16;
  std::string out_dir = ".";
  /// Print one line per level to stdout.
  bool verbose = true;
};

struct LevelRecord
{
  int n = 0;
  double h = 0.0;
  std::vector<int> block_dofs;
  int dofs_total = 0;
  int iterations = 0;
  bool converged = true;
  std::vector<double> errors;
  double assembly_seconds = 0.0;
  double seconds = 0.0;
};

struct StudyRecord
{
  std::string case_name;
  std::vector<std::string> error_names;
  std::vector<LevelRecord> levels;
  CaseConfig config;

  /// log2(e_{k-1} / e_k) per error name, NaN on the first level.
  std::vector<double> rates(int level) const;
  double rate(const std::string& error_name, int level) const;
  double error(const std::string& error_name, int level) const;
  bool all_converged() const;

  /// level,h,dofs_total,iters,err_*,rate_*,seconds plus the run options.
  void write_csv(const std::string& path) const;
};

StudyRecord run_babuska(const CaseConfig& cfg);
StudyRecord run_darcy_stokes(const CaseConfig& cfg, DarcyStokes formulation);
StudyRecord run_perfusion(const CaseConfig& cfg);
StudyRecord run_restrict_demo(const CaseConfig& cfg);
StudyRecord run_case(const CaseConfig& cfg);

/// Solution of one refinement level, split per block.
struct LevelSolution
{
  Problem problem;
  LinearSystem system;
  BlockVector x;
  KrylovReport report;
};

/// Solve one level (Krylov for babuska and Darcy-Stokes, direct otherwise).
LevelSolution solve_level(const CaseConfig& cfg, int n);

/// Writes every block, right-hand side and reduction matrix of one level as Matrix Market.
std::vector<std::string> export_matrices(const CaseConfig& cfg, int n, const std::string& dir);

} // namespace msa
