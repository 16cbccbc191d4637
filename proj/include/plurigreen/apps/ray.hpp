#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "plurigreen/core/errors.hpp"
#include "plurigreen/core/hermitian.hpp"
#include "plurigreen/singularity/cutoff.hpp"
#include "plurigreen/singularity/polynomial.hpp"

namespace plurigreen {

/// Pole of a ray on the central fibre: (0, 0), or (∞, 0) in the chart z' = 1/z.
struct RayPole {
  bool at_infinity = false;
  std::vector<Polynomial<2>> f;  ///< monomials in (z, w) (or (z', w))
  double epsilon = 0.2;
  CutoffProfile cutoff{0.5, 0.9};
};

/// Geodesic ray on P¹ × {e^{-T} < |w| < 1} with Fubini–Study base, reduced by
/// S¹×S¹ symmetry to (s, t) = (log|z|², log|w|) ∈ [-S, S] × [-T, 0].
struct RayProblem {
  double depth = 4.0;      ///< T
  double s_extent = 8.0;   ///< S
  int resolution = 8;      ///< nodes per unit length in s and t
  int width = 3;           ///< direction stencil half-width (primitive (a, b), |a|, |b| <= width)
  std::vector<RayPole> poles;
  int slices = 5;          ///< reported slices evenly spaced on [-T/2, 0]
  double tol = 1e-11;
  int max_sweeps = 200000;

  std::vector<std::string> violations() const
  {
    std::vector<std::string> out;
    if (!(depth > 0.0)) out.push_back("depth must be > 0");
    if (!(s_extent > 0.0)) out.push_back("s_extent must be > 0");
    if (resolution < 2) out.push_back("resolution must be >= 2");
    if (width < 1) out.push_back("width must be >= 1");
    if (slices < 3) out.push_back("at least 3 slices");
    for (const auto& p : poles) {
      if (!(p.epsilon > 0.0 && p.epsilon < 1.0)) out.push_back("pole epsilon must lie in (0, 1)");
      if (p.f.empty()) out.push_back("pole needs at least one function");
      if (!(p.cutoff.r_in > 0.0 && p.cutoff.r_in < p.cutoff.r_out && p.cutoff.r_out < 1.0))
        out.push_back("pole radii need 0 < r_in < r_out < 1");
    }
    return out;
  }
};

/// Σ|f_j|² must depend on (|z|, |w|) only; checked on seeded random samples.
inline void check_ray_symmetry(const RayProblem& P, unsigned seed = 7)
{
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> rad(0.05, 1.5), ang(0.0, 2.0 * std::numbers::pi);
  for (const auto& pole : P.poles)
    for (int k = 0; k < 64; ++k) {
      CVector<2> a, b;
      const double rz = rad(rng), rw = rad(rng);
      a << std::polar(rz, ang(rng)), std::polar(rw, ang(rng));
      b << std::polar(rz, ang(rng)), std::polar(rw, ang(rng));
      double sa = 0.0, sb = 0.0;
      for (const auto& f : pole.f) {
        sa += std::norm(f(a));
        sb += std::norm(f(b));
      }
      if (std::abs(sa - sb) > 1e-10 * std::max(1.0, std::abs(sa)))
        throw SymmetryViolation("Σ|f|² is not invariant under (z, w) -> (e^{ia} z, e^{ib} w)");
    }
}

/// Glued pole data ε[ψ log Σ|f|² + (1-ψ)] - ε summed over poles, at (s, t).
inline double ray_pole_data(const RayProblem& P, double s, double t)
{
  double v = 0.0;
  for (const auto& pole : P.poles) {
    const double sz = pole.at_infinity ? -s : s;
    CVector<2> z;
    z << std::exp(0.5 * sz), std::exp(t);
    const double r = z.norm();
    const double psi = r <= pole.cutoff.r_in ? 1.0 : pole.cutoff.q(r);
    double sum = 0.0;
    for (const auto& f : pole.f) sum += std::norm(f(z));
    const double logs = psi > 0.0 ? std::log(sum) : 0.0;
    v += pole.epsilon * (psi * logs + (1.0 - psi)) - pole.epsilon;
  }
  return v;
}

/// Fubini–Study potential log(1 + |z|²) in s = log|z|².
inline double fs_potential(double s) { return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

struct RaySolution {
  double h = 0.0;
  int ns = 0, nt = 0;          ///< nodes along s and t (including boundary)
  double s0 = 0.0, t0 = 0.0;   ///< coordinates of node (0, 0)
  std::vector<double> u;       ///< Φ(s, t) row-major, t fastest
  std::vector<double> slice_times;
  std::vector<std::vector<double>> slices;  ///< Φ(·, t_k) along the s nodes
  int sweeps = 0;
  bool converged = false;

  double s(int i) const { return s0 + i * h; }
  double t(int j) const { return t0 + j * h; }
  double at(int i, int j) const { return u[static_cast<std::size_t>(i) * nt + j]; }
  double total(int i, int j) const { return at(i, j) + fs_potential(s(i)); }

  /// Bilinear Φ(s, t).
  double value(double s_, double t_) const
  {
    const double gi = std::clamp((s_ - s0) / h, 0.0, ns - 1.0), gj = std::clamp((t_ - t0) / h, 0.0, nt - 1.0);
    const int i = std::min(static_cast<int>(gi), ns - 2), j = std::min(static_cast<int>(gj), nt - 2);
    const double a = gi - i, b = gj - j;
    return (1 - a) * (1 - b) * at(i, j) + a * (1 - b) * at(i + 1, j) + (1 - a) * b * at(i, j + 1) + a * b * at(i + 1, j + 1);
  }

  /// Slice φ_t(z) = Φ(log|z|², t); depends on |z| only.
  double slice_value(const cplx& z, double t_) const { return value(std::log(std::norm(z)), t_); }
};

/// Primitive lattice directions (a, b) with |a|, |b| <= w, one per ± pair.
inline std::vector<std::pair<int, int>> primitive_directions(int w)
{
  std::vector<std::pair<int, int>> out;
  for (int a = -w; a <= w; ++a)
    for (int b = 0; b <= w; ++b) {
      if (b == 0 && a <= 0) continue;
      if (std::gcd(std::abs(a), b) != 1) continue;
      out.emplace_back(a, b);
    }
  std::stable_sort(out.begin(), out.end(), [](auto x, auto y) { return x.first * x.first + x.second * x.second < y.first * y.first + y.second * y.second; });
  return out;
}

namespace detail {

/// Red-black Gauss–Seidel on the midpoint-convexity scheme; returns sweeps used
/// (negative when the cap is hit).
inline int ray_sweeps(std::vector<double>& F, int ns, int nt, const std::vector<std::pair<int, int>>& dirs, double tol,
                      int max_sweeps)
{
  auto id = [nt](int i, int j) { return static_cast<std::size_t>(i) * nt + j; };
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    double upd = 0.0;
    for (int colour = 0; colour < 2; ++colour)
      for (int i = 1; i < ns - 1; ++i)
        for (int j = 1 + (i + colour) % 2; j < nt - 1; j += 2) {
          double m = std::numeric_limits<double>::infinity();
          for (const auto& [a, b] : dirs) {
            if (i - std::abs(a) < 0 || i + std::abs(a) >= ns || j - b < 0 || j + b >= nt) continue;
            m = std::min(m, 0.5 * (F[id(i + a, j + b)] + F[id(i - a, j - b)]));
          }
          upd = std::max(upd, std::abs(m - F[id(i, j)]));
          F[id(i, j)] = m;
        }
    if (upd < tol) return sweep;
  }
  return -max_sweeps;
}

/// Node layout of the reduced grid at `resolution` nodes per unit.
inline RaySolution ray_layout(const RayProblem& P, int resolution)
{
  RaySolution R;
  R.h = 1.0 / resolution;
  R.ns = static_cast<int>(std::lround(2.0 * P.s_extent * resolution)) + 1;
  R.nt = static_cast<int>(std::lround(P.depth * resolution)) + 1;
  R.s0 = -P.s_extent;
  R.t0 = -P.depth;
  R.u.assign(static_cast<std::size_t>(R.ns) * R.nt, 0.0);
  return R;
}

/// One envelope solve; interior nodes start from `start` (bilinear in Φ) when given.
inline void ray_level(const RayProblem& P, RaySolution& R, int width, const RaySolution* start, int& sweeps_left)
{
  const int ns = R.ns, nt = R.nt;
  std::vector<double> F(R.u.size());
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nt; ++j) {
      const bool edge = i == 0 || i == ns - 1 || j == 0 || j == nt - 1;
      double u = 0.0;
      if (edge && j != nt - 1)
        u = ray_pole_data(P, R.s(i), R.t(j));
      else if (!edge && start)
        u = start->value(R.s(i), R.t(j));
      F[static_cast<std::size_t>(i) * nt + j] = fs_potential(R.s(i)) + u;
    }
  const int used = ray_sweeps(F, ns, nt, primitive_directions(width), P.tol * std::max(1.0, P.s_extent), sweeps_left);
  R.converged = used > 0;
  R.sweeps += std::abs(used);
  sweeps_left -= std::abs(used);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nt; ++j) {
      const auto k = static_cast<std::size_t>(i) * nt + j;
      R.u[k] = F[k] - fs_potential(R.s(i));
    }
}

}  // namespace detail

/// Reduced convex-envelope scheme F(p) <- min_v (F(p+v) + F(p-v))/2 for the total
/// potential F = log(1 + e^s) + Φ: torus-invariant HCMA is det D²F = 0 with F convex.
/// Dirichlet data: Φ = 0 at t = 0, glued pole data on the other three sides.
/// Coarser levels (half resolution, half width) supply the starting guess.
inline RaySolution solve_ray(const RayProblem& P)
{
  const auto v = P.violations();
  if (!v.empty()) throw InvalidInput(v.front());
  check_ray_symmetry(P);
  std::vector<std::pair<int, int>> levels{{P.resolution, P.width}};
  while (levels.back().first % 2 == 0 && levels.back().first / 2 >= 2 && levels.size() < 6)
    levels.emplace_back(levels.back().first / 2, std::max(1, levels.back().second / 2));
  int sweeps_left = P.max_sweeps, total = 0;
  RaySolution R, coarse;
  for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
    R = detail::ray_layout(P, it->first);
    detail::ray_level(P, R, it->second, it == levels.rbegin() ? nullptr : &coarse, sweeps_left);
    total += R.sweeps;
    if (!R.converged) break;
    coarse = R;
  }
  R.sweeps = total;
  if (!R.converged) throw ConvergenceFailure("reduced ray envelope did not converge in " + std::to_string(P.max_sweeps) + " sweeps");
  const int ns = R.ns;

  for (int k = 0; k < P.slices; ++k) {
    const double tk = -0.5 * P.depth * (1.0 - static_cast<double>(k) / (P.slices - 1));
    R.slice_times.push_back(tk);
    std::vector<double> row(static_cast<std::size_t>(ns));
    for (int i = 0; i < ns; ++i) row[static_cast<std::size_t>(i)] = R.value(R.s(i), tk);
    R.slices.push_back(std::move(row));
  }
  return R;
}

/// min over consecutive slice pairs of the sup-norm difference.
inline double ray_nontriviality(const std::vector<std::vector<double>>& slices)
{
  if (slices.size() < 3) throw InvalidInput("ray_nontriviality needs at least 3 slices");
  double out = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < slices.size(); ++k) {
    double d = 0.0;
    for (std::size_t i = 0; i < slices[k].size(); ++i) d = std::max(d, std::abs(slices[k + 1][i] - slices[k][i]));
    out = std::min(out, d);
  }
  return out;
}

struct GeodesicResidual {
  double mean_abs = 0.0;  ///< mean |F_tt - F_st²/F_ss| over smooth samples
  double max_abs = 0.0;   ///< sup over the same samples (ridges of the envelope keep this O(1))
  double scale = 0.0;     ///< sup |F_tt| + F_ss over the samples
  std::size_t samples = 0;
};

/// Geodesic equation φ̈ - g^{zz̄} |∂_z φ̇|² = F_tt - F_st²/F_ss on the reduced grid with
/// centred differences of step `k` nodes. Samples lie in s_range × t_range and have a
/// nondegenerate slice metric, F_ss >= metric_floor · (log(1 + e^s))''.
inline GeodesicResidual geodesic_residual(const RaySolution& R, std::pair<double, double> s_range,
                                          std::pair<double, double> t_range, int k = 1, double metric_floor = 0.5)
{
  GeodesicResidual g;
  const double H = k * R.h;
  double sum = 0.0;
  for (int i = k; i < R.ns - k; ++i) {
    if (R.s(i) < s_range.first || R.s(i) > s_range.second) continue;
    const double e = std::exp(-std::abs(R.s(i)));
    const double fs2 = e / ((1.0 + e) * (1.0 + e));
    for (int j = k; j < R.nt - k; ++j) {
      if (R.t(j) < t_range.first || R.t(j) > t_range.second) continue;
      const double c = R.total(i, j);
      const double fss = (R.total(i + k, j) - 2 * c + R.total(i - k, j)) / (H * H);
      const double ftt = (R.total(i, j + k) - 2 * c + R.total(i, j - k)) / (H * H);
      const double fst = (R.total(i + k, j + k) - R.total(i + k, j - k) - R.total(i - k, j + k) + R.total(i - k, j - k)) /
                         (4 * H * H);
      if (!(fss >= metric_floor * fs2)) continue;
      const double r = std::abs(ftt - fst * fst / fss);
      sum += r;
      g.max_abs = std::max(g.max_abs, r);
      g.scale = std::max(g.scale, std::abs(ftt) + fss);
      ++g.samples;
    }
  }
  if (g.samples > 0) g.mean_abs = sum / static_cast<double>(g.samples);
  return g;
}

/// Midpoint convexity of F = log(1 + e^s) + Φ at interior nodes along every lattice segment of half-length
/// (a, b) with |a|, |b| <= w; returns the worst violation max(0, F(p) - (F(p+v) + F(p-v))/2).
inline double midpoint_convexity_defect(const RaySolution& R, int w = 2)
{
  double worst = 0.0;
  const auto dirs = primitive_directions(w);
  for (int i = 1; i + 1 < R.ns; ++i)
    for (int j = 1; j + 1 < R.nt; ++j)
      for (const auto& [a, b] : dirs) {
        if (i - std::abs(a) < 0 || i + std::abs(a) >= R.ns || j - b < 0 || j + b >= R.nt) continue;
        worst = std::max(worst, R.total(i, j) - 0.5 * (R.total(i + a, j + b) + R.total(i - a, j - b)));
      }
  return worst;
}

}  // namespace plurigreen
