#include "msa/cases.hpp"
#include "msa/error.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

int main(int argc, char** argv)
{
  CLI::App app{"Multiscale block assembly demos and convergence studies"};
  app.require_subcommand(1);

  msa::CaseConfig cfg;
  const std::vector<std::string> cases{"babuska", "ds-primal", "ds-mixed", "perfusion", "restrict-demo"};

  CLI::App* run = app.add_subcommand("run", "Run a refinement study and write <out>/<case>.csv");
  run->add_option("--case", cfg.name, "Demo case")->required()->check(CLI::IsMember(cases));
  run->add_option("--n", cfg.n, "Coarsest resolution")->check(CLI::PositiveNumber);
  run->add_option("--levels", cfg.levels, "Number of refinement levels")->check(CLI::PositiveNumber);
  run->add_option("--tol", cfg.tol, "Relative Krylov tolerance")->check(CLI::PositiveNumber);
  run->add_option("--seed", cfg.seed, "Seed of the random initial guess");
  run->add_option("--hs-mode", cfg.preconditioner.hs_mode, "Fractional pencil")
    ->check(CLI::IsMember({"eig", "fd-surrogate"}));
  run->add_option("--darcy-pressure-block", cfg.preconditioner.darcy_pressure_block,
                  "Darcy pressure block of the primal preconditioner")
    ->check(CLI::IsMember({"mass", "neg-mass", "stiffness"}));
  run->add_option("--radius", cfg.radius, "Averaging radius (perfusion)")->check(CLI::PositiveNumber);
  run->add_option("--nquad", cfg.n_quad, "Points per averaging circle (perfusion)")->check(CLI::PositiveNumber);
  run->add_option("--out", cfg.out_dir, "Output directory");
  bool quiet = false;
  run->add_flag("--quiet", quiet, "Do not print per-level lines");

  std::string what = "matrices";
  CLI::App* exp = app.add_subcommand("export", "Write every block and reduction matrix of one level");
  exp->add_option("--case", cfg.name, "Demo case")->required()->check(CLI::IsMember(cases));
  exp->add_option("--n", cfg.n, "Resolution")->check(CLI::PositiveNumber);
  exp->add_option("--what", what, "What to export")->check(CLI::IsMember({"matrices"}));
  exp->add_option("--radius", cfg.radius, "Averaging radius (perfusion)")->check(CLI::PositiveNumber);
  exp->add_option("--nquad", cfg.n_quad, "Points per averaging circle (perfusion)")->check(CLI::PositiveNumber);
  exp->add_option("--out", cfg.out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      cfg.verbose = !quiet;
      const msa::StudyRecord study = msa::run_case(cfg);
      std::filesystem::create_directories(cfg.out_dir);
      const auto csv = std::filesystem::path(cfg.out_dir) / (cfg.name + ".csv");
      study.write_csv(csv.string());
      std::cout << "wrote " << csv.string() << '\n';
      if (!study.all_converged()) {
        std::cerr << "error: the Krylov solve did not converge on every level\n";
        return 2;
      }
    } else {
      for (const std::string& f : msa::export_matrices(cfg, cfg.n, cfg.out_dir))
        std::cout << "wrote " << f << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
