#include "msa/krylov.hpp"

#include "msa/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>

namespace msa {

Vector random_vector(int n, std::uint64_t seed)
{
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i)
    v[i] = dist(gen);
  return v;
}

namespace {

void check_square(const Op& a, const Op& b, const Vector& rhs, const char* who)
{
  if (a->rows() != a->cols() || rhs.size() != a->rows())
    throw InvalidArgument(std::string(who) + ": operator and right-hand side shapes differ");
  if (b && (b->rows() != a->rows() || b->cols() != a->cols()))
    throw InvalidArgument(std::string(who) + ": preconditioner shape differs from the operator");
}

Vector initial_guess(int n, const KrylovOptions& opts, KrylovReport& report)
{
  report.seed = opts.seed;
  if (opts.x0) {
    if (opts.x0->size() != n)
      throw InvalidArgument("initial guess has the wrong length");
    return *opts.x0;
  }
  report.random_start = true;
  return random_vector(n, opts.seed);
}

void probe_symmetry(const Op& a, std::uint64_t seed, const char* what)
{
  for (int k = 0; k < 5; ++k) {
    const Vector x = random_vector(a->rows(), seed + 2 * k + 101);
    const Vector y = random_vector(a->rows(), seed + 2 * k + 102);
    const double l = a->apply(x).dot(y);
    const double r = x.dot(a->apply(y));
    if (std::abs(l - r) > 1e-10 * std::max(1.0, std::max(std::abs(l), std::abs(r))))
      throw SolverError(std::string("minres: ") + what + " is not symmetric (<Ax,y> - <x,Ay> = " +
                        std::to_string(l - r) + ")");
  }
}

Vector precondition(const Op& b, const Vector& r) { return b ? b->apply(r) : r; }

} // namespace

KrylovResult minres(const Op& a, const Op& b_inv, const Vector& rhs, const KrylovOptions& opts)
{
  check_square(a, b_inv, rhs, "minres");
  KrylovResult out;
  KrylovReport& rep = out.report;
  rep.method = "minres";
  if (opts.check_symmetry) {
    probe_symmetry(a, opts.seed, "operator");
    if (b_inv)
      probe_symmetry(b_inv, opts.seed + 17, "preconditioner");
  }
  const int n = a->rows();
  Vector x = initial_guess(n, opts, rep);

  Vector v_old = Vector::Zero(n);
  Vector v = rhs - a->apply(x);
  Vector z = precondition(b_inv, v);
  double gamma = std::sqrt(std::max(z.dot(v), 0.0));
  const double gamma0 = gamma;
  double gamma_old = 1.0;
  double eta = gamma;
  double s_old = 0.0, s = 0.0, c_old = 1.0, c = 1.0;
  Vector w_old = Vector::Zero(n), w = Vector::Zero(n);

  rep.history.push_back(1.0);
  if (gamma0 == 0.0) {
    rep.converged = true;
    rep.final_relative_residual = 0.0;
    out.x = x;
    return out;
  }
  for (int it = 1; it <= opts.max_iter; ++it) {
    z /= gamma;
    const Vector az = a->apply(z);
    const double delta = az.dot(z);
    Vector v_new = az - (delta / gamma) * v - (gamma / gamma_old) * v_old;
    Vector z_new = precondition(b_inv, v_new);
    const double zv = z_new.dot(v_new);
    if (zv < -1e-14 * std::max(1.0, v_new.squaredNorm()))
      throw SolverError("minres: preconditioner is not positive definite");
    const double gamma_new = std::sqrt(std::max(zv, 0.0));

    const double alpha0 = c * delta - c_old * s * gamma;
    const double alpha1 = std::sqrt(alpha0 * alpha0 + gamma_new * gamma_new);
    const double alpha2 = s * delta + c_old * c * gamma;
    const double alpha3 = s_old * gamma;
    if (alpha1 == 0.0)
      break;
    const double c_new = alpha0 / alpha1;
    const double s_new = gamma_new / alpha1;

    Vector w_new = (z - alpha3 * w_old - alpha2 * w) / alpha1;
    x += c_new * eta * w_new;
    eta = -s_new * eta;

    rep.iterations = it;
    const double rel = std::abs(eta) / gamma0;
    rep.history.push_back(rel);
    rep.final_relative_residual = rel;
    if (rel <= opts.tol) {
      rep.converged = true;
      break;
    }
    if (gamma_new == 0.0)
      break;

    v_old = std::move(v);
    v = std::move(v_new);
    z = std::move(z_new);
    w_old = std::move(w);
    w = std::move(w_new);
    gamma_old = gamma;
    gamma = gamma_new;
    c_old = c;
    c = c_new;
    s_old = s;
    s = s_new;
  }
  out.x = std::move(x);
  return out;
}

KrylovResult gmres(const Op& a, const Op& b_inv, const Vector& rhs, const KrylovOptions& opts)
{
  check_square(a, b_inv, rhs, "gmres");
  KrylovResult out;
  KrylovReport& rep = out.report;
  rep.method = "gmres";
  const int n = a->rows();
  Vector x = initial_guess(n, opts, rep);

  const Vector r0 = precondition(b_inv, Vector(rhs - a->apply(x)));
  const double beta = r0.norm();
  rep.history.push_back(1.0);
  if (beta == 0.0) {
    rep.converged = true;
    rep.final_relative_residual = 0.0;
    out.x = x;
    return out;
  }
  const int m = std::min(opts.max_iter, n);
  std::vector<Vector> basis;
  basis.push_back(r0 / beta);
  DenseMatrix h = DenseMatrix::Zero(m + 1, m);
  Vector cs = Vector::Zero(m), sn = Vector::Zero(m);
  Vector g = Vector::Zero(m + 1);
  g[0] = beta;
  int k = 0;
  for (; k < m; ++k) {
    Vector w = precondition(b_inv, a->apply(basis[k]));
    for (int i = 0; i <= k; ++i) {
      h(i, k) = w.dot(basis[i]);
      w -= h(i, k) * basis[i];
    }
    h(k + 1, k) = w.norm();
    const bool breakdown = h(k + 1, k) <= 1e-14 * beta;
    if (!breakdown)
      basis.push_back(w / h(k + 1, k));
    for (int i = 0; i < k; ++i) {
      const double t = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
      h(i + 1, k) = -sn[i] * h(i, k) + cs[i] * h(i + 1, k);
      h(i, k) = t;
    }
    const double den = std::hypot(h(k, k), h(k + 1, k));
    cs[k] = h(k, k) / den;
    sn[k] = h(k + 1, k) / den;
    h(k, k) = den;
    h(k + 1, k) = 0.0;
    g[k + 1] = -sn[k] * g[k];
    g[k] = cs[k] * g[k];

    const double rel = std::abs(g[k + 1]) / beta;
    rep.iterations = k + 1;
    rep.history.push_back(rel);
    rep.final_relative_residual = rel;
    if (rel <= opts.tol) {
      rep.converged = true;
      ++k;
      break;
    }
    if (breakdown) {
      ++k;
      break;
    }
  }
  if (k > 0) {
    const Vector y = h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    for (int i = 0; i < k; ++i)
      x += y[i] * basis[i];
  }
  out.x = std::move(x);
  return out;
}

KrylovResult cg(const Op& a, const Op& b_inv, const Vector& rhs, const KrylovOptions& opts)
{
  check_square(a, b_inv, rhs, "cg");
  KrylovResult out;
  KrylovReport& rep = out.report;
  rep.method = "cg";
  rep.seed = opts.seed;
  const int n = a->rows();
  Vector x = opts.x0 ? *opts.x0 : Vector(Vector::Zero(n));
  Vector r = rhs - a->apply(x);
  Vector z = precondition(b_inv, r);
  Vector p = z;
  double rz = r.dot(z);
  const double r0 = std::sqrt(std::abs(rz));
  rep.history.push_back(1.0);
  if (r0 == 0.0) {
    rep.converged = true;
    rep.final_relative_residual = 0.0;
    out.x = x;
    return out;
  }
  for (int it = 1; it <= opts.max_iter; ++it) {
    const Vector ap = a->apply(p);
    const double pap = p.dot(ap);
    if (pap <= 0.0)
      throw SolverError("cg: operator is not positive definite");
    const double alpha = rz / pap;
    x += alpha * p;
    r -= alpha * ap;
    z = precondition(b_inv, r);
    const double rz_new = r.dot(z);
    const double rel = std::sqrt(std::abs(rz_new)) / r0;
    rep.iterations = it;
    rep.history.push_back(rel);
    rep.final_relative_residual = rel;
    if (rel <= opts.tol) {
      rep.converged = true;
      break;
    }
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  out.x = std::move(x);
  return out;
}

void write_history_csv(const KrylovReport& report, const std::string& path)
{
  std::ofstream f(path);
  if (!f)
    throw InvalidArgument("cannot open " + path);
  f << "iteration,residual\n" << std::setprecision(17);
  for (std::size_t i = 0; i < report.history.size(); ++i)
    f << i << ',' << report.history[i] << '\n';
}

HsNorm::HsNorm(const SparseMatrix& mass, const SparseMatrix& stiffness, double s) : s_(s)
{
  const int n = static_cast<int>(mass.rows());
  if (mass.cols() != n || stiffness.rows() != n || stiffness.cols() != n)
    throw InvalidArgument("HsNorm: matrices must be square of equal size");
  if (n > max_dimension)
    throw InvalidArgument("HsNorm: dimension " + std::to_string(n) + " exceeds the dense eigensolver bound " +
                          std::to_string(max_dimension));
  const DenseMatrix m = DenseMatrix(mass);
  const DenseMatrix a = DenseMatrix(stiffness);
  Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> eig(a, m, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (eig.info() != Eigen::Success)
    throw SolverError("HsNorm: generalized eigensolver failed (is the mass matrix SPD?)");
  eigenvalues_ = eig.eigenvalues();
  u_ = eig.eigenvectors();
  if (eigenvalues_.minCoeff() <= 0.0)
    throw SolverError("HsNorm: pencil has a non-positive eigenvalue; use the shifted stiffness");

  const Vector pos = eigenvalues_.array().pow(s).matrix();
  const Vector neg = eigenvalues_.array().pow(-s).matrix();
  const DenseMatrix mu = m * u_;
  forward_ = dense_op(mu * pos.asDiagonal() * mu.transpose());
  inverse_ = dense_op(u_ * neg.asDiagonal() * u_.transpose());
}

namespace {

template <class Solver>
Op factorized(const SparseMatrix& m, const std::string& label, bool& ok)
{
  auto solver = std::make_shared<Solver>();
  Eigen::SparseMatrix<double, Eigen::ColMajor, int> cm(m);
  solver->compute(cm);
  ok = solver->info() == Eigen::Success;
  if constexpr (requires { solver->vectorD(); })
    ok = ok && solver->vectorD().cwiseAbs().minCoeff() > 1e-14 * solver->vectorD().cwiseAbs().maxCoeff();
  if (!ok)
    return nullptr;
  const int n = static_cast<int>(m.rows());
  return inverse_op(
    n, [solver](const Vector& x) -> Vector { return solver->solve(x); }, nullptr, "direct " + label);
}

} // namespace

Op inverse_handle(const Op& block, InverseMode mode, const std::string& label)
{
  if (block->rows() != block->cols())
    throw InvalidArgument("inverse_handle: block '" + label + "' is not square");
  const int n = block->rows();
  if (block->kind() == OpKind::Identity)
    return identity_op(n);
  if (mode == InverseMode::Auto)
    mode = n < direct_inverse_limit ? InverseMode::Direct : InverseMode::InnerCG;

  if (mode == InverseMode::Direct) {
    const SparseMatrix m = block->collapse();
    bool ok = false;
    const SparseMatrix diff = m - SparseMatrix(m.transpose());
    const double scale = m.nonZeros() ? Eigen::Map<const Vector>(m.valuePtr(), m.nonZeros()).cwiseAbs().maxCoeff() : 0.0;
    double asym = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(diff, k); it; ++it)
        asym = std::max(asym, std::abs(it.value()));
    if (asym <= 1e-12 * scale) {
      Op op = factorized<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double, Eigen::ColMajor, int>>>(m, label, ok);
      if (ok)
        return op;
    }
    Op op = factorized<Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor, int>>>(m, label, ok);
    if (!ok)
      throw SolverError("inverse_handle: factorization of block '" + label + "' failed (singular?)");
    return op;
  }

  Op a = block;
  return inverse_op(
    n,
    [a, label](const Vector& x) -> Vector {
      KrylovOptions o;
      o.tol = 1e-12;
      o.max_iter = 2000;
      KrylovResult r = cg(a, nullptr, x, o);
      if (!r.report.converged)
        throw SolverError("inverse_handle: inner CG did not converge on block '" + label + "'");
      return r.x;
    },
    nullptr, "cg " + label);
}

} // namespace msa
