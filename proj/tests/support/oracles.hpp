#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "plurigreen/apps/ray.hpp"

/// Independent reference computations. None of these call into the solvers they check.
namespace plurigreen::oracle {

/// Σ ε log|(z - a)/(1 - ā z)|²: Green function of the unit disk with poles a.
inline double mobius_green(const std::vector<cplx>& poles, double eps, cplx z)
{
  double s = 0.0;
  for (const cplx& a : poles) s += eps * std::log(std::norm((z - a) / (1.0 - std::conj(a) * z)));
  return s;
}

/// Quintic smoothstep cutoff written out in monomial form: 1 - (10s³ - 15s⁴ + 6s⁵).
inline double quintic_cutoff(double r, double r_in, double r_out)
{
  if (r <= r_in) return 1.0;
  if (r >= r_out) return 0.0;
  const double s = (r - r_in) / (r_out - r_in);
  return 1.0 - (10.0 * std::pow(s, 3) - 15.0 * std::pow(s, 4) + 6.0 * std::pow(s, 5));
}

/// Smallest eigenvalue by Eigen's Hermitian solver.
inline double eigen_min(const Eigen::MatrixXcd& m)
{
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(m, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

/// λ* = inf{λ >= 0 : M(λ) > 0} by a scan of `steps` points refined once inside the
/// first positive bracket; `resolution` receives the final scan step.
inline double lambda_scan(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& X, const Eigen::MatrixXcd& D,
                          const Eigen::MatrixXcd& Y, double& resolution, int steps = 2000)
{
  const auto a = A.rows(), b = D.rows();
  auto pd = [&](double lam) {
    Eigen::MatrixXcd m(a + b, a + b);
    m << lam * A + X, Y, Y.adjoint(), D;
    return eigen_min(m) > 0.0;
  };
  if (pd(0.0)) {
    resolution = 0.0;
    return 0.0;
  }
  double hi = 1.0;
  while (!pd(hi)) hi *= 2.0;
  double lo = 0.0;
  for (int level = 0; level < 2; ++level) {
    const double step = (hi - lo) / steps;
    double first = hi;
    for (int k = 1; k <= steps; ++k)
      if (pd(lo + k * step)) {
        first = lo + k * step;
        break;
      }
    lo = first - step;
    hi = first;
    resolution = step;
  }
  return hi;
}

/// Determinant of the real 2N×2N Jacobian of a map C^N → C^N by centred differences.
template <int N, class F>
double fd_real_jacobian_det(F&& f, const CVector<N>& c, double step = 1e-6)
{
  Eigen::Matrix<double, 2 * N, 2 * N> J;
  for (int a = 0; a < 2 * N; ++a) {
    CVector<N> d = CVector<N>::Zero();
    d(a / 2) = a % 2 == 0 ? cplx(step, 0.0) : cplx(0.0, step);
    const CVector<N> diff = (f(CVector<N>(c + d)) - f(CVector<N>(c - d))) / (2.0 * step);
    for (int k = 0; k < N; ++k) {
      J(2 * k, a) = diff(k).real();
      J(2 * k + 1, a) = diff(k).imag();
    }
  }
  return J.determinant();
}

/// Flat-torus n = 1 potential with Gaussian pole of width σ and uniform density: the
/// Fourier series -4ε/|k|² e^{-σ²|k|²/2} e^{ik·(x-p)}/V summed directly over |m| <= modes.
inline double torus_fourier_potential(double L0, double L1, cplx pole, double eps, double sigma, cplx z, int modes)
{
  const double V = L0 * L1;
  double s = 0.0;
  for (int m0 = -modes; m0 <= modes; ++m0)
    for (int m1 = -modes; m1 <= modes; ++m1) {
      if (m0 == 0 && m1 == 0) continue;
      const double k0 = 2.0 * std::numbers::pi * m0 / L0, k1 = 2.0 * std::numbers::pi * m1 / L1;
      const double k2 = k0 * k0 + k1 * k1;
      const double phase = k0 * (z.real() - pole.real()) + k1 * (z.imag() - pole.imag());
      s += -4.0 * eps / k2 * std::exp(-0.5 * sigma * sigma * k2) * std::cos(phase);
    }
  return s / V;
}

/// Two-point chord envelope: min over lines through (s, t) of the exact boundary data
/// interpolated along the chord, with `directions` angles and golden-section refinement.
/// An upper bound for the convex envelope, equal to it wherever the envelope is ruled.
inline double chord_envelope(const RayProblem& P, double s, double t, int directions = 2000)
{
  const double S = P.s_extent, T = P.depth;
  auto data = [&](double sb, double tb) { return fs_potential(sb) + (tb >= 0.0 ? 0.0 : ray_pole_data(P, sb, tb)); };
  auto reach = [&](double c, double d) {
    double r = std::numeric_limits<double>::infinity();
    if (c > 1e-15) r = std::min(r, (S - s) / c);
    if (c < -1e-15) r = std::min(r, (-S - s) / c);
    if (d > 1e-15) r = std::min(r, -t / d);
    if (d < -1e-15) r = std::min(r, (-T - t) / d);
    return r;
  };
  auto chord = [&](double th) {
    const double c = std::cos(th), d = std::sin(th);
    const double rp = reach(c, d), rm = reach(-c, -d);
    return (rm * data(s + rp * c, t + rp * d) + rp * data(s - rm * c, t - rm * d)) / (rp + rm);
  };
  double best = std::numeric_limits<double>::infinity();
  int arg = 0;
  for (int k = 0; k < directions; ++k) {
    const double v = chord(std::numbers::pi * k / directions);
    if (v < best) best = v, arg = k;
  }
  double a = std::numbers::pi * (arg - 1) / directions, b = std::numbers::pi * (arg + 1) / directions;
  for (int it = 0; it < 60; ++it) {
    const double m1 = a + 0.381966 * (b - a), m2 = a + 0.618034 * (b - a);
    if (chord(m1) < chord(m2))
      b = m2;
    else
      a = m1;
  }
  return std::min(best, chord(0.5 * (a + b)));
}

}  // namespace plurigreen::oracle
