#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <fftw3.h>

#include <Eigen/Sparse>
#include <Eigen/IterativeLinearSolvers>

#include "plurigreen/core/errors.hpp"
#include "plurigreen/core/grid.hpp"
#include "plurigreen/core/hessian.hpp"
#include "plurigreen/hcma/problem.hpp"
#include "plurigreen/measure/ma_measure.hpp"

namespace plurigreen {

/// Flat torus problem (ω + (i/2)∂∂̄φ)^n = (1-ε) f ω^n + ε δ_p with δ_p mollified
/// by a Gaussian of width σ. Densities are det-densities against Lebesgue
/// measure; ω = c·I with c^n·vol = 1.
template <int N>
struct TorusProblem {
  DomainSpec domain{DomainKind::torus, N, {}, {1.0}, 64};
  std::function<double(const CVector<N>&)> density = [](const CVector<N>&) { return 1.0; };
  CVector<N> pole = CVector<N>::Zero();
  double epsilon = 0.3;
  double sigma = -1.0;  ///< negative: 4h
  SolverOptions solver;

  double h() const { return Lattice<N>::from_domain(domain).h(); }
  double effective_sigma() const { return sigma > 0.0 ? sigma : 4.0 * h(); }
  double volume() const
  {
    double v = 1.0;
    for (int a = 0; a < 2 * N; ++a) v *= domain.period(a);
    return v;
  }
  double omega_scale() const { return std::pow(volume(), -1.0 / N); }

  std::vector<std::string> violations() const
  {
    auto out = domain.violations();
    if (!out.empty()) return out;
    if (domain.kind != DomainKind::torus) out.push_back("torus problem needs a torus domain");
    if (domain.dim != N) out.push_back("domain dimension mismatch");
    if (!(epsilon > 0.0 && epsilon < 1.0)) out.push_back("epsilon must lie in (0, 1)");
    if (!(effective_sigma() > 0.0)) out.push_back("sigma must be > 0");
    return out;
  }
};

template <int N>
struct TorusReport {
  ComplexGrid<N> phi;
  ComplexGrid<N> rhs;           ///< right-hand side density
  MassLedger ledger;
  LelongEstimate lelong;        ///< slope of max φ against log r²
  double lelong_normalized = 0.0;  ///< slope·c_n: the pole weight in mass units
  double compatibility = 0.0;   ///< ∫(rhs - ω^n)
  double gauge_shift = 0.0;     ///< n = 2: log-scale λ of the bordered system
  int iterations = 0;
};

/// Minimal-image displacement z - p on the torus.
template <int N>
CVector<N> torus_displacement(const DomainSpec& d, const CVector<N>& z, const CVector<N>& p)
{
  auto x = Lattice<N>::to_real(z);
  const auto q = Lattice<N>::to_real(p);
  for (int a = 0; a < 2 * N; ++a) {
    const double L = d.period(a);
    x[a] -= q[a];
    x[a] -= L * std::round(x[a] / L);
  }
  return Lattice<N>::to_complex(x);
}

/// ∫_{B(p,r)} g by midpoint shells times the sphere quadrature.
template <int N>
double ball_integral(const std::function<double(const CVector<N>&)>& g, const CVector<N>& p, double r, int shells = 64)
{
  const auto [pts, wts] = sphere_quadrature<N>(N == 1 ? 64 : 16);
  double s = 0.0;
  for (int k = 0; k < shells; ++k) {
    const double rho = r * (k + 0.5) / shells;
    const double jac = std::pow(rho, 2 * N - 1) * r / shells;
    for (std::size_t i = 0; i < pts.size(); ++i) s += g(CVector<N>(p + rho * pts[i])) * wts[i] * jac;
  }
  return s;
}

namespace detail {

template <int N>
ComplexGrid<N> torus_rhs(const TorusProblem<N>& P, double& compatibility)
{
  ComplexGrid<N> rhs(P.domain);
  const double c = std::pow(P.omega_scale(), N);
  const double sigma = P.effective_sigma();
  const double vol = rhs.lattice.cell_volume();
  std::vector<double> dirac(rhs.size());
  double fsum = 0.0, dsum = 0.0;
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    const auto z = rhs.z(i);
    const double f = P.density(z);
    if (!(f > 0.0) || !std::isfinite(f)) throw InvalidInput("torus density must be positive and finite");
    rhs.values[i] = f;
    fsum += f * c * vol;
    const double d2 = torus_displacement<N>(P.domain, z, P.pole).squaredNorm();
    dirac[i] = std::exp(-0.5 * d2 / (sigma * sigma));
    dsum += dirac[i] * vol;
  }
  if (std::abs(fsum - 1.0) > 1e-6) throw InvalidInput("density must integrate to 1 against ω^n, got " + std::to_string(fsum));
  double total = 0.0;
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    // the discrete Dirac carries unit mass exactly
    rhs.values[i] = (1.0 - P.epsilon) * rhs.values[i] * c + P.epsilon * dirac[i] / dsum;
    total += rhs.values[i] * vol;
  }
  compatibility = total - 1.0;
  if (std::abs(compatibility) > 1e-5) throw GaugeFailure("∫(rhs - ω^n) = " + std::to_string(compatibility));
  return rhs;
}

/// Spectral solve of Δφ/4 = g on a 2-torus with zero mean.
inline std::vector<double> spectral_poisson(const Lattice<1>& lat, const std::vector<double>& g)
{
  const int n0 = lat.count[0], n1 = lat.count[1];
  const int m1 = n1 / 2 + 1;
  std::vector<double> in(g);
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n0) * m1);
  auto* fo = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan fwd = fftw_plan_dft_r2c_2d(n0, n1, in.data(), fo, FFTW_ESTIMATE);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);
  const double L0 = lat.spacing[0] * n0, L1 = lat.spacing[1] * n1;
  for (int i = 0; i < n0; ++i) {
    const int mi = i <= n0 / 2 ? i : i - n0;
    const double k0 = 2.0 * std::numbers::pi * mi / L0;
    for (int j = 0; j < m1; ++j) {
      const double k1 = 2.0 * std::numbers::pi * j / L1;
      const double k2 = k0 * k0 + k1 * k1;
      auto& v = out[static_cast<std::size_t>(i) * m1 + j];
      v = k2 > 0.0 ? -4.0 * v / k2 : 0.0;
    }
  }
  std::vector<double> phi(g.size());
  fftw_plan inv = fftw_plan_dft_c2r_2d(n0, n1, fo, phi.data(), FFTW_ESTIMATE);
  fftw_execute(inv);
  fftw_destroy_plan(inv);
  const double norm = 1.0 / (static_cast<double>(n0) * n1);
  for (double& v : phi) v *= norm;
  return phi;
}

/// Periodic monotone frame scheme for n = 2 with a bordered gauge:
/// min_frames Π_k (4c + L_k φ) = 16 e^λ rhs, mean φ = 0.
inline std::pair<std::vector<double>, double> torus_newton(const Lattice<2>& lat, const std::vector<double>& rhs,
                                                           double c, const SolverOptions& opt, int& iterations)
{
  const auto stencils = lattice_direction_stencils<2>(lat, opt.lattice_width);
  std::vector<std::array<std::size_t, 2>> frames;
  for (std::size_t a = 0; a < stencils.size(); ++a)
    for (std::size_t b = a + 1; b < stencils.size(); ++b)
      if (std::abs(stencils[a].direction.dot(stencils[b].direction)) <=
          1e-12 * stencils[a].direction.norm() * stencils[b].direction.norm())
        frames.push_back({a, b});
  const std::size_t n = lat.size;
  // neighbour tables per stencil sample
  std::vector<std::vector<std::size_t>> nbr(stencils.size());
  for (std::size_t k = 0; k < stencils.size(); ++k) {
    const auto& st = stencils[k];
    nbr[k].resize(n * st.offsets.size());
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < st.offsets.size(); ++q) nbr[k][p * st.offsets.size() + q] = *lat.neighbor(p, st.offsets[q]);
  }
  auto L = [&](const std::vector<double>& phi, std::size_t k, std::size_t p) {
    const auto& st = stencils[k];
    double s = 0.0;
    const std::size_t m = st.offsets.size();
    for (std::size_t q = 0; q < m; ++q) s += st.weights[q] * phi[nbr[k][p * m + q]];
    return 4.0 * c + st.scale * (s - (1.0 - st.center) * phi[p]);
  };
  std::vector<double> phi(n, 0.0);
  double lambda = 0.0;
  std::vector<std::uint8_t> active(n, 0);
  auto residual = [&](const std::vector<double>& ph, double lam, Eigen::VectorXd& F) {
    F.resize(static_cast<Eigen::Index>(n + 1));
    bool pd = true;
    double mean = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t f = 0; f < frames.size(); ++f) {
        const double a = L(ph, frames[f][0], p), b = L(ph, frames[f][1], p);
        pd = pd && a > 0.0 && b > 0.0;
        if (a * b < best) {
          best = a * b;
          active[p] = static_cast<std::uint8_t>(f);
        }
      }
      F[static_cast<Eigen::Index>(p)] = best - 16.0 * std::exp(lam) * rhs[p];
      mean += ph[p];
    }
    F[static_cast<Eigen::Index>(n)] = mean / static_cast<double>(n);
    return pd;
  };
  Eigen::VectorXd F, Ft;
  residual(phi, lambda, F);
  iterations = 0;
  while (F.lpNorm<Eigen::Infinity>() > opt.newton_tol) {
    if (iterations >= opt.newton_max_iterations) throw NewtonDivergence(1.0, "torus Newton iteration limit");
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t p = 0; p < n; ++p) {
      const auto& fr = frames[active[p]];
      const double La = L(phi, fr[0], p), Lb = L(phi, fr[1], p);
      for (int i = 0; i < 2; ++i) {
        const double other = i == 0 ? Lb : La;
        const auto k = fr[static_cast<std::size_t>(i)];
        const auto& st = stencils[k];
        const std::size_t m = st.offsets.size();
        trip.emplace_back(static_cast<int>(p), static_cast<int>(p), -other * st.scale * (1.0 - st.center));
        for (std::size_t q = 0; q < m; ++q)
          trip.emplace_back(static_cast<int>(p), static_cast<int>(nbr[k][p * m + q]), other * st.scale * st.weights[q]);
      }
      trip.emplace_back(static_cast<int>(p), static_cast<int>(n), -16.0 * std::exp(lambda) * rhs[p]);
      trip.emplace_back(static_cast<int>(n), static_cast<int>(p), 1.0 / static_cast<double>(n));
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> J(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n + 1));
    J.setFromTriplets(trip.begin(), trip.end());
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>, Eigen::DiagonalPreconditioner<double>> solver;
    solver.setTolerance(1e-11);
    solver.setMaxIterations(20000);
    solver.compute(J);
    const Eigen::VectorXd dx = solver.solve(Eigen::VectorXd(-F));
    if (!dx.allFinite()) throw NewtonDivergence(1.0, "torus linear solve diverged");
    double alpha = 1.0;
    bool ok = false;
    std::vector<double> trial(n);
    for (int k = 0; k <= opt.max_halvings; ++k, alpha *= 0.5) {
      for (std::size_t p = 0; p < n; ++p) trial[p] = phi[p] + alpha * dx[static_cast<Eigen::Index>(p)];
      const double lt = lambda + alpha * dx[static_cast<Eigen::Index>(n)];
      if (residual(trial, lt, Ft) && Ft.allFinite() && Ft.norm() <= (1.0 - 1e-4 * alpha) * F.norm()) {
        phi = trial;
        lambda = lt;
        ok = true;
        break;
      }
    }
    if (!ok) throw PositivityLoss("torus step halving exhausted");
    residual(phi, lambda, F);
    ++iterations;
  }
  return {phi, lambda};
}

}  // namespace detail

/// Solves the torus problem: spectral Laplace for n = 1, Newton for n = 2.
template <int N>
TorusReport<N> solve_torus(const TorusProblem<N>& P)
{
  const auto v = P.violations();
  if (!v.empty()) throw InvalidInput(v.front());
  TorusReport<N> R;
  R.rhs = detail::torus_rhs<N>(P, R.compatibility);
  R.phi = ComplexGrid<N>(P.domain);
  const auto& lat = R.phi.lattice;
  const double c = P.omega_scale();
  const double cn = std::pow(c, N);
  if constexpr (N == 1) {
    std::vector<double> g(R.rhs.values.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = R.rhs.values[i] - cn;
    R.phi.values = detail::spectral_poisson(lat, g);
  } else {
    auto [phi, lambda] = detail::torus_newton(lat, R.rhs.values, c, P.solver, R.iterations);
    R.phi.values = std::move(phi);
    R.gauge_shift = lambda;
  }

  // ledger: total mass of ω_φ by the finite-difference density; pole mass by
  // the flux through |z - p| = r minus the absolutely continuous share inside
  const HermitianField<N> base = HermitianField<N>::constant(P.domain, c * CMatrix<N>::Identity());
  const auto rho = ma_density<N>(R.phi, base);
  const double total = integrate_density<N>(rho);
  double min_period = P.domain.period(0);
  for (int a = 1; a < 2 * N; ++a) min_period = std::min(min_period, P.domain.period(a));
  const double r = 0.25 * min_period;
  const double inside = ball_integral<N>(
      [&](const CVector<N>& z) { return cn - (1.0 - P.epsilon) * cn * P.density(z); }, P.pole, r);
  const double pole = sphere_flux_mass<N>(R.phi, P.pole, r) + inside;
  R.ledger.total_mass = total;
  R.ledger.pole_masses = {{0, pole}};
  R.ledger.ac_mass = total - pole;
  R.ledger.normalization_constant = measure_normalization<N>();

  // Lelong slope on a √2-geometric ladder from r down to 4σ; the r² term takes
  // up the smooth part of φ
  std::vector<double> radii;
  for (double s = r; s >= 4.0 * P.effective_sigma() * (1.0 - 1e-12); s /= std::sqrt(2.0)) radii.push_back(s);
  if (radii.size() >= 4) {
    R.lelong = lelong_fit<N>([&](const CVector<N>& z) { return interpolate<N>(R.phi, z); }, P.pole, radii,
                             N == 1 ? 64 : 24, true);
    R.lelong_normalized = R.lelong.slope * R.ledger.normalization_constant;
  }
  return R;
}

/// Pole mass extrapolated linearly in σ to σ = 0 from solves at each σ.
template <int N>
double torus_pole_mass_limit(TorusProblem<N> P, const std::vector<double>& sigmas)
{
  if (sigmas.size() < 2) throw InsufficientRadii("σ extrapolation needs at least two widths");
  std::vector<double> m;
  for (double s : sigmas) {
    P.sigma = s;
    m.push_back(solve_torus<N>(P).ledger.pole_masses.front().second);
  }
  return std::get<0>(linear_fit(sigmas, m));
}

}  // namespace plurigreen
