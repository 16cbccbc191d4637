#pragma once

#include <Eigen/Eigenvalues>

#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "plurigreen/apps/ray.hpp"
#include "plurigreen/apps/torus.hpp"
#include "plurigreen/blowup/blowup.hpp"
#include "plurigreen/hcma/uniqueness.hpp"
#include "plurigreen/io/config.hpp"

namespace plurigreen {

struct CheckRow {
  std::string name;
  double measured = 0.0;
  std::string expected;  ///< relation and bound, e.g. "<= 0.2"
  double tolerance = 0.0;
  bool pass = false;
};

inline std::string format_bound(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

inline CheckRow check_at_most(std::string name, double measured, double bound)
{
  return {std::move(name), measured, "<= " + format_bound(bound), bound, measured <= bound};
}

inline CheckRow check_at_least(std::string name, double measured, double bound)
{
  return {std::move(name), measured, ">= " + format_bound(bound), bound, measured >= bound};
}

inline CheckRow check_near(std::string name, double measured, double target, double tol)
{
  return {std::move(name), measured, format_bound(target) + " +- " + format_bound(tol), tol, std::abs(measured - target) <= tol};
}

inline std::string format_table(const std::vector<CheckRow>& rows)
{
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-44s %14s  %-18s %s\n", "check", "measured", "expected", "result");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-44s %14.6g  %-18s %s\n", r.name.c_str(), r.measured, r.expected.c_str(), r.pass ? "PASS" : "FAIL");
    out += buf;
  }
  return out;
}

/// Sup-norm oracle tolerance at `res` points per axis, scaled linearly in h from the
/// pinned tolerance `tol_ref` at `res_ref` (first-order convergence in the refinement study).
inline double scaled_tolerance(double tol_ref, int res_ref, int res) { return tol_ref * static_cast<double>(res_ref) / res; }

namespace detail {

template <int N>
double green_sup_error(const SolveReport<N>& r, const std::function<double(const CVector<N>&)>& exact,
                       const std::function<bool(const CVector<N>&)>& keep)
{
  double e = 0.0;
  for (std::size_t i = 0; i < r.green.size(); ++i) {
    if (r.green.mask[i] != NodeTag::interior) continue;
    const auto z = r.green.z(i);
    if (keep(z)) e = std::max(e, std::abs(r.green.values[i] - exact(z)));
  }
  return e;
}

inline GreenProblem<1> disk_problem(int res, const std::vector<double>& centers, double eps)
{
  GreenProblem<1> P;
  P.domain = {DomainKind::disk, 1, {1.0}, {}, res};
  P.background.base = BaseForm::zero;
  for (double a : centers) {
    Pole<1> p;
    p.center(0) = cplx(a, 0.0);
    p.epsilon = eps;
    p.f = {Polynomial<1>::parse("z")};
    p.cutoff = {0.1, 0.2};
    P.singularities.poles.push_back(p);
  }
  P.background.augmentation = auto_augmentation<1>(P.singularities, P.background, eps);
  P.excision_radius = 0.04;
  return P;
}

inline GreenProblem<2> ball_problem(int res, double eps, double excision)
{
  GreenProblem<2> P;
  P.domain = {DomainKind::ball, 2, {1.0}, {}, res};
  P.background.base = BaseForm::zero;
  Pole<2> p;
  p.epsilon = eps;
  p.f = {Polynomial<2>::parse("z1"), Polynomial<2>::parse("z2")};
  p.cutoff = {0.6, 0.9};
  P.singularities.poles = {p};
  P.background.augmentation = auto_augmentation<2>(P.singularities, P.background, eps);
  P.excision_radius = excision;
  return P;
}

inline std::vector<CheckRow> suite_oracles_1d()
{
  const int res = 64;
  const double tol = scaled_tolerance(5e-2, 256, res);
  std::vector<CheckRow> rows;
  auto mobius = [](const std::vector<double>& cs, double eps) {
    return [cs, eps](const CVector<1>& z) {
      double s = 0.0;
      for (double a : cs) s += eps * std::log(std::norm((z(0) - a) / (1.0 - a * z(0))));
      return s;
    };
  };
  auto away = [](const std::vector<double>& cs) {
    return [cs](const CVector<1>& z) {
      for (double a : cs)
        if (std::abs(z(0) - a) < 0.05) return false;
      return true;
    };
  };
  {
    const std::vector<double> cs{0.3};
    const auto P = disk_problem(res, cs, 0.5);
    const auto env = solve_envelope<1>(P);
    const auto reg = solve_regularized<1>(P);
    rows.push_back(check_at_most("disk 1 pole sup error (envelope, 64)", green_sup_error<1>(env, mobius(cs, 0.5), away(cs)), tol));
    rows.push_back(check_at_most("disk 1 pole sup error (regularized, 64)", green_sup_error<1>(reg, mobius(cs, 0.5), away(cs)), 2 * tol));
    rows.push_back(check_at_most("disk backend discrepancy", green_discrepancy<1>(env, reg), 2 * tol));
  }
  {
    const std::vector<double> cs{-0.4, 0.4};
    const auto env = solve_envelope<1>(disk_problem(res, cs, 0.5));
    rows.push_back(check_at_most("disk 2 pole additivity error (64)", green_sup_error<1>(env, mobius(cs, 0.5), away(cs)), tol));
  }
  {
    GreenProblem<1> P;
    P.domain = {DomainKind::disk, 1, {1.0}, {}, res};
    P.background.base = BaseForm::zero;
    const auto env = solve_envelope<1>(P);
    double m = 0.0;
    for (std::size_t i = 0; i < env.green.size(); ++i) m = std::max(m, std::abs(env.green.values[i]));
    rows.push_back(check_at_most("disk without poles: G = 0", m, 1e-8));
  }
  return rows;
}

inline std::vector<CheckRow> suite_oracles_2d()
{
  const int res = 16;
  const double tol = scaled_tolerance(2e-1, 32, res);
  const auto P = ball_problem(res, 0.25, 0.25);
  const auto env = solve_envelope<2>(P);
  const auto reg = solve_regularized<2>(P);
  auto exact = [](const CVector<2>& z) { return 0.25 * std::log(z.squaredNorm()); };
  auto keep = [](const CVector<2>& z) { return z.norm() >= 0.2; };
  std::vector<CheckRow> rows;
  rows.push_back(check_at_most("ball radial sup error (envelope, 16)", green_sup_error<2>(env, exact, keep), tol));
  rows.push_back(check_at_most("ball radial maximality residual", env.residual_max, 1e-1));
  rows.push_back(check_at_most("ball radial sup error (regularized, 16)", green_sup_error<2>(reg, exact, keep), 2 * tol));
  rows.push_back(check_at_most("ball backend discrepancy", green_discrepancy<2>(env, reg), 2 * tol));
  return rows;
}

/// Threshold by a two-level scan with Eigen's Hermitian eigensolver: 1000 steps up to the
/// first positive bracket end, then 1000 steps inside the bracket.
inline double lambda_scan(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& X, const Eigen::MatrixXcd& D, const Eigen::MatrixXcd& Y,
                          double& resolution)
{
  const auto a = A.rows(), b = D.rows();
  auto pd = [&](double lam) {
    Eigen::MatrixXcd m(a + b, a + b);
    m << lam * A + X, Y, Y.adjoint(), D;
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(m, Eigen::EigenvaluesOnly).eigenvalues()(0) > 0.0;
  };
  double hi = 1.0;
  while (!pd(hi)) hi *= 2.0;
  double lo = 0.0;
  for (int level = 0; level < 2; ++level) {
    const double step = (hi - lo) / 1000.0;
    double first = hi;
    for (int k = 0; k <= 1000; ++k)
      if (pd(lo + k * step)) {
        first = lo + k * step;
        break;
      }
    hi = first;
    lo = std::max(0.0, first - step);
    resolution = step;
  }
  return hi;
}

struct LemmaInstance {
  Eigen::MatrixXcd A, X, D, Y;
};

inline LemmaInstance random_lemma_instance(std::mt19937_64& rng)
{
  std::uniform_int_distribution<int> size(1, 4);
  std::normal_distribution<double> g(0.0, 1.0);
  auto mat = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXcd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = cplx(g(rng), g(rng));
    return m;
  };
  const int a = size(rng), b = size(rng);
  LemmaInstance I;
  const Eigen::MatrixXcd ba = mat(a, a), bd = mat(b, b), x = mat(a, a);
  I.A = ba * ba.adjoint() + 0.1 * Eigen::MatrixXcd::Identity(a, a);
  I.D = bd * bd.adjoint() + 0.1 * Eigen::MatrixXcd::Identity(b, b);
  I.X = 0.5 * (x + x.adjoint());
  I.Y = mat(a, b);
  return I;
}

inline std::vector<CheckRow> suite_lemmas(std::uint64_t seed)
{
  std::vector<CheckRow> rows;
  std::mt19937_64 rng(seed);
  const int count = 100;
  int matched = 0, positive = 0;
  double worst = 0.0;
  for (int n = 0; n < count; ++n) {
    const auto I = random_lemma_instance(rng);
    const double lam = lambda_threshold(I.A, I.X, I.D, I.Y);
    double res = 0.0;
    const double scan = lambda_scan(I.A, I.X, I.D, I.Y, res);
    const double bisection_step = 1e-6 * std::max(lam, 1e-12);
    const double gap = std::abs(lam - scan);
    worst = std::max(worst, gap / (res + bisection_step));
    if (gap <= res + bisection_step) ++matched;
    Eigen::MatrixXcd m(I.A.rows() + I.D.rows(), I.A.rows() + I.D.rows());
    m << (lam + 1.0) * I.A + I.X, I.Y, I.Y.adjoint(), I.D;
    if (is_positive(m)) ++positive;
  }
  rows.push_back(check_at_least("lambda_threshold matches scan (of 100)", matched, count));
  rows.push_back(check_at_most("worst gap in scan+bisection steps", worst, 1.0));
  rows.push_back(check_at_least("M(lambda*+1) positive-definite (of 100)", positive, count));

  ExceptionalMetric<2> g;
  const auto T = positivity_threshold<2>(g, flat_form<2>(), SampleBox{1.0, 2.0, 9});
  rows.push_back(check_at_least("point blow-up epsilon_K", T.epsilon_K, 1e-6));
  rows.push_back(check_at_least("witness min at epsilon_K/2", T.witness_min, 1e-12));
  const BlowupChart<2> ch = g.chart(0);
  const auto H = exceptional_curvature<2>(g, ch, CVector<2>::Zero());
  rows.push_back(check_near("on-E D-block at theta = 0", H(1, 1).real(), 1.0, 1e-8));
  return rows;
}

inline std::vector<CheckRow> suite_torus()
{
  std::vector<CheckRow> rows;
  TorusProblem<1> P;
  P.domain.resolution = 256;
  P.epsilon = 0.3;
  P.pole(0) = cplx(0.5, 0.5);
  const auto R = solve_torus<1>(P);
  rows.push_back(check_near("torus total mass", R.ledger.total_mass, 1.0, 1e-2));
  rows.push_back(check_near("torus pole mass (sigma = 4h)", R.ledger.pole_masses.front().second, 0.3, 1e-2));
  const double h = P.h();
  rows.push_back(check_near("torus pole mass (sigma -> 0)", torus_pole_mass_limit<1>(P, {4 * h, 8 * h, 16 * h}), 0.3, 1e-2));
  rows.push_back(check_near("torus Lelong number", R.lelong_normalized, 0.3, 1e-2));
  // lattice shift by 32 nodes along the real axis translates φ
  TorusProblem<1> Q = P;
  Q.pole(0) += cplx(32 * h, 0.0);
  const auto S = solve_torus<1>(Q);
  const auto& lat = R.phi.lattice;
  double gap = 0.0;
  for (std::size_t i = 0; i < R.phi.size(); ++i) {
    auto idx = lat.unravel(i);
    idx[0] = (idx[0] + 32) % lat.count[0];
    gap = std::max(gap, std::abs(S.phi.values[lat.ravel(idx)] - R.phi.values[i]));
  }
  rows.push_back(check_at_most("torus translation invariance", gap, 1e-8));
  return rows;
}

inline std::vector<CheckRow> suite_ray()
{
  std::vector<CheckRow> rows;
  RayProblem Z;
  Z.resolution = 4;
  Z.width = 2;
  const auto z = solve_ray(Z);
  double m = 0.0;
  for (double v : z.u) m = std::max(m, std::abs(v));
  rows.push_back(check_at_most("zero-data ray sup |Phi|", m, 1e-8));

  RayProblem P = Z;
  RayPole p;
  p.f = {Polynomial<2>::parse("z"), Polynomial<2>::parse("w")};
  p.epsilon = 0.2;
  P.poles = {p};
  const auto R = solve_ray(P);
  rows.push_back(check_at_least("pole ray nontriviality", ray_nontriviality(R.slices), 1e-2));
  rows.push_back(check_at_most("reduced convexity defect", midpoint_convexity_defect(R), 1e-8));
  const auto g = geodesic_residual(R, {-4.0, -0.5}, {-2.0, -0.5});
  rows.push_back(check_at_most("geodesic residual (mean / scale)", g.mean_abs / g.scale, 1e-1));
  return rows;
}

}  // namespace detail

/// Runs a built-in suite; throws UnknownSuite for other names.
inline std::vector<CheckRow> run_suite(const std::string& name, std::uint64_t seed = 0)
{
  if (name == "oracles-1d") return detail::suite_oracles_1d();
  if (name == "oracles-2d") return detail::suite_oracles_2d();
  if (name == "lemmas") return detail::suite_lemmas(seed);
  if (name == "torus") return detail::suite_torus();
  if (name == "ray") return detail::suite_ray();
  throw UnknownSuite(name);
}

}  // namespace plurigreen
