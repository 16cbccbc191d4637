#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "plurigreen/core/errors.hpp"
#include "plurigreen/core/grid.hpp"
#include "plurigreen/core/hessian.hpp"
#include "plurigreen/core/hermitian.hpp"

namespace plurigreen {

/// Densities above -density_clip are treated as round-off on the psd boundary.
inline constexpr double density_clip = 1e-8;

/// det(base + complex_hessian(u)) per node. Values in [-density_clip, 0) are
/// clipped to 0; genuinely negative values are kept (see density_negativity).
/// Nodes without a full stencil (boundary, excised, or next to a core) hold NaN.
template <int N>
ComplexGrid<N> ma_density(const ComplexGrid<N>& u, const HermitianField<N>* base = nullptr)
{
  if (base && base->matrices.size() != u.size()) throw InvalidInput("base field does not match the grid");
  ComplexGrid<N> rho = u;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < u.size(); ++i) {
    rho.values[i] = nan;
    if (u.mask[i] != NodeTag::interior) continue;
    CMatrix<N> h;
    try {
      h = complex_hessian<N>(u, i);
    } catch (const StencilOutOfDomain&) {
      continue;
    }
    if (base) h += base->matrices[i];
    if (!h.allFinite()) continue;
    double d = h.determinant().real();
    if (d < 0.0 && d >= -density_clip) d = 0.0;
    rho.values[i] = d;
  }
  return rho;
}

template <int N>
ComplexGrid<N> ma_density(const ComplexGrid<N>& u, const HermitianField<N>& base)
{
  return ma_density<N>(u, &base);
}

struct DensityNegativity {
  std::size_t nodes = 0;
  double most_negative = 0.0;
};

template <int N>
DensityNegativity density_negativity(const ComplexGrid<N>& rho)
{
  DensityNegativity out;
  for (double v : rho.values)
    if (std::isfinite(v) && v < 0.0) {
      ++out.nodes;
      out.most_negative = std::min(out.most_negative, v);
    }
  return out;
}

/// Σ ρ·cell volume over finite nodes accepted by `keep`.
template <int N>
double integrate_density(const ComplexGrid<N>& rho, const std::function<bool(const CVector<N>&)>& keep = {})
{
  const double vol = rho.lattice.cell_volume();
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double v = rho.values[i];
    if (!std::isfinite(v)) continue;
    if (keep && !keep(rho.z(i))) continue;
    s += v * vol;
  }
  return s;
}

/// Quadrature on the unit sphere of C^N: points and weights summing to its area.
template <int N>
std::pair<std::vector<CVector<N>>, std::vector<double>> sphere_quadrature(int resolution)
{
  std::vector<CVector<N>> pts;
  std::vector<double> w;
  const double two_pi = 2.0 * std::numbers::pi;
  if constexpr (N == 1) {
    for (int k = 0; k < resolution; ++k) {
      pts.push_back(CVector<1>::Constant(std::polar(1.0, two_pi * (k + 0.5) / resolution)));
      w.push_back(two_pi / resolution);
    }
  } else {
    // Hopf coordinates (cos η e^{iξ1}, sin η e^{iξ2}), dS = sin η cos η dη dξ1 dξ2
    const int ne = std::max(2, resolution / 4);
    for (int ie = 0; ie < ne; ++ie) {
      const double eta = 0.5 * std::numbers::pi * (ie + 0.5) / ne;
      const double weta = std::sin(eta) * std::cos(eta) * 0.5 * std::numbers::pi / ne;
      for (int a = 0; a < resolution; ++a)
        for (int b = 0; b < resolution; ++b) {
          CVector<2> v;
          v(0) = std::polar(std::cos(eta), two_pi * (a + 0.5) / resolution);
          v(1) = std::polar(std::sin(eta), two_pi * (b + 0.25) / resolution);
          pts.push_back(v);
          w.push_back(weta * (two_pi / resolution) * (two_pi / resolution));
        }
    }
  }
  return {pts, w};
}

namespace detail {

/// Centered ∂u/∂z̄_k at node p.
template <int N>
CVector<N> dbar_gradient(const ComplexGrid<N>& u, std::size_t p)
{
  CVector<N> g;
  for (int k = 0; k < N; ++k) {
    double d[2];
    for (int r = 0; r < 2; ++r) {
      const int a = 2 * k + r;
      typename Lattice<N>::Index plus{}, minus{};
      plus[a] = 1;
      minus[a] = -1;
      const double up = detail::stencil_value<N>(u.lattice, u.values, u.mask, p, plus);
      const double um = detail::stencil_value<N>(u.lattice, u.values, u.mask, p, minus);
      d[r] = (up - um) / (2.0 * u.lattice.spacing[a]);
    }
    g(k) = 0.5 * cplx(d[0], d[1]);
  }
  return g;
}

/// Cofactor matrix C with Σ_k H_jk C_jk = det H.
template <int N>
CMatrix<N> cofactor(const CMatrix<N>& h)
{
  CMatrix<N> c;
  if constexpr (N == 1) {
    c(0, 0) = 1.0;
  } else {
    c(0, 0) = h(1, 1);
    c(1, 1) = h(0, 0);
    c(0, 1) = -h(1, 0);
    c(1, 0) = -h(0, 1);
  }
  return c;
}

}  // namespace detail

/// Monge–Ampère mass of u inside the sphere |z - c| = ρ from the divergence form
/// det H = (1/n) Σ_j ∂_j X^j, X^j = Σ_k C_jk ∂u/∂z̄_k (C the cofactor matrix, whose
/// rows are divergence free). Gradient and Hessian are interpolated from nodes.
template <int N>
double sphere_flux_mass(const ComplexGrid<N>& u, const CVector<N>& c, double radius, int resolution = 0)
{
  const double h = u.lattice.h();
  if (resolution <= 0) resolution = std::max(16, static_cast<int>(std::ceil(8.0 * radius / h)));
  const auto [pts, wts] = sphere_quadrature<N>(resolution);
  std::vector<std::optional<std::pair<CVector<N>, CMatrix<N>>>> cache(u.size());
  auto node_data = [&](std::size_t q) -> const std::pair<CVector<N>, CMatrix<N>>& {
    if (!cache[q]) cache[q] = std::make_pair(detail::dbar_gradient<N>(u, q), complex_hessian<N>(u, q));
    return *cache[q];
  };
  cplx total = 0.0;
  for (std::size_t s = 0; s < pts.size(); ++s) {
    const CVector<N> z = c + radius * pts[s];
    const auto cell = interpolation_cell(u.lattice, Lattice<N>::to_real(z));
    if (!cell) throw StencilOutOfDomain("flux sphere leaves the lattice");
    CVector<N> g = CVector<N>::Zero();
    CMatrix<N> H = CMatrix<N>::Zero();
    for (std::size_t k = 0; k < cell->weights.size(); ++k) {
      const double w = cell->weights[k];
      if (w == 0.0) continue;
      const auto& [gq, hq] = node_data(cell->nodes[k]);
      g += w * gq;
      H += w * hq;
    }
    const CVector<N> X = detail::cofactor<N>(H) * g;
    cplx dot = 0.0;
    for (int j = 0; j < N; ++j) dot += X(j) * std::conj(pts[s](j));
    total += dot * wts[s] * std::pow(radius, 2 * N - 1);
  }
  return 0.5 / N * total.real();
}

struct AnnulusOptions {
  double inner = -1.0;  ///< flux sphere radius; negative: clear of NaN nodes by a stencil width
  int sphere_resolution = 0;
};

/// Radius clearing every non-finite node near `c` by a full interpolation-plus-stencil width.
template <int N>
double flux_clearance(const ComplexGrid<N>& u, const CVector<N>& c, double r)
{
  const double h = u.lattice.h();
  double core = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u.mask[i] != NodeTag::excised && std::isfinite(u.values[i])) continue;
    const double d = (u.z(i) - c).norm();
    if (d < r) core = std::max(core, d);
  }
  const double width = (std::sqrt(2.0 * N) + std::sqrt(2.0) + 0.1) * h;
  return core > 0.0 ? core + width : 4.0 * h;
}

/// Monge–Ampère mass of u in B(c, r): flux through the inner sphere plus the
/// integrated density over the shell inner <= |z - c| < r.
template <int N>
double annulus_mass(const ComplexGrid<N>& u, const CVector<N>& c, double r, const AnnulusOptions& opt = {})
{
  const double inner = opt.inner > 0.0 ? opt.inner : flux_clearance<N>(u, c, r);
  if (!(r > inner)) throw RadiusOutOfRange("annulus radius must exceed the inner flux radius " + std::to_string(inner));
  const auto rho = ma_density<N>(u);
  const double shell = integrate_density<N>(rho, [&](const CVector<N>& z) {
    const double d = (z - c).norm();
    return d >= inner && d < r;
  });
  return sphere_flux_mass<N>(u, c, inner, opt.sphere_resolution) + shell;
}

/// Least-squares line y = a + b x; returns (a, b, rms residual).
inline std::tuple<double, double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y)
{
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) throw InvalidInput("degenerate fit abscissae");
  const double b = (n * sxy - sx * sy) / den;
  const double a = (sy - b * sx) / n;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) rss += std::pow(y[i] - a - b * x[i], 2);
  return {a, b, std::sqrt(rss / n)};
}

/// Pole mass: mass(r) over `radii`, extrapolated linearly in r to r = 0.
template <int N>
double pole_mass(const ComplexGrid<N>& u, const CVector<N>& c, const std::vector<double>& radii,
                 const AnnulusOptions& opt = {})
{
  if (radii.size() < 2) throw InsufficientRadii("pole mass needs at least two radii");
  std::vector<double> m;
  for (double r : radii) m.push_back(annulus_mass<N>(u, c, r, opt));
  return std::get<0>(linear_fit(radii, m));
}

struct MassLedger {
  double total_mass = 0.0;
  std::vector<std::pair<int, double>> pole_masses;
  double ac_mass = 0.0;
  double normalization_constant = 0.0;
  std::string normalization_tag = "[DERIVED] measured by radial quadrature of log|z|^2";

  double pole_total() const
  {
    double s = 0.0;
    for (const auto& [i, m] : pole_masses) s += m;
    return s;
  }
};

/// Dirac normalization c_n: mass of log|z|² measured on a ball grid with `res`
/// points per axis (flux at radius 1/2 plus the shell to 3/5).
template <int N>
double measure_normalization(int res = N == 1 ? 256 : 32)
{
  ComplexGrid<N> u(DomainSpec{N == 1 ? DomainKind::disk : DomainKind::ball, N, {1.0}, {}, res});
  u.fill([](const CVector<N>& z) { return std::log(z.squaredNorm()); });
  AnnulusOptions o;
  o.inner = 0.5;
  return annulus_mass<N>(u, CVector<N>::Zero(), 0.6, o);
}

/// Ledger of u: absolutely continuous mass off the pole balls B(c_m, r_m), pole
/// masses extrapolated from the ladder r_m·{1, 3/4, 1/2}.
template <int N>
MassLedger mass_ledger(const ComplexGrid<N>& u, const std::vector<CVector<N>>& poles, const std::vector<double>& ball_radii,
                       const AnnulusOptions& opt = {}, const HermitianField<N>* base = nullptr)
{
  if (poles.size() != ball_radii.size()) throw InvalidInput("one ball radius per pole");
  MassLedger L;
  const auto rho = ma_density<N>(u, base);
  L.ac_mass = integrate_density<N>(rho, [&](const CVector<N>& z) {
    for (std::size_t m = 0; m < poles.size(); ++m)
      if ((z - poles[m]).norm() < ball_radii[m]) return false;
    return true;
  });
  for (std::size_t m = 0; m < poles.size(); ++m) {
    const double r = ball_radii[m];
    L.pole_masses.emplace_back(static_cast<int>(m), pole_mass<N>(u, poles[m], {r, 0.75 * r, 0.5 * r}, opt));
  }
  L.total_mass = L.ac_mass + L.pole_total();
  L.normalization_constant = measure_normalization<N>();
  return L;
}

struct LelongEstimate {
  int pole = 0;
  std::vector<double> radii;
  std::vector<double> maxima;  ///< max of u on each sphere
  double slope = 0.0;          ///< ν, against log r²
  double intercept = 0.0;
  double fit_residual = 0.0;
};

/// Dyadic radii r_in, r_in/2, ... down to r_min (inclusive).
inline std::vector<double> dyadic_ladder(double r_in, double r_min)
{
  std::vector<double> out;
  for (double r = r_in; r >= r_min * (1.0 - 1e-12); r *= 0.5) out.push_back(r);
  return out;
}

/// Fits max_{|z-c|=r} u against log r² over the given radii. With
/// `quadratic_term` the model gains a b·r² term absorbing a smooth background.
template <int N>
LelongEstimate lelong_fit(const std::function<double(const CVector<N>&)>& u, const CVector<N>& c,
                          const std::vector<double>& radii, int angular = N == 1 ? 64 : 24, bool quadratic_term = false)
{
  if (radii.size() < 4) throw InsufficientRadii("Lelong fit needs at least 4 radii, got " + std::to_string(radii.size()));
  LelongEstimate e;
  e.radii = radii;
  const auto dirs = sphere_quadrature<N>(angular).first;
  std::vector<double> x;
  for (double r : radii) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& v : dirs) m = std::max(m, u(CVector<N>(c + r * v)));
    e.maxima.push_back(m);
    x.push_back(std::log(r * r));
  }
  if (!quadratic_term) {
    std::tie(e.intercept, e.slope, e.fit_residual) = linear_fit(x, e.maxima);
  } else {
    const auto k = static_cast<Eigen::Index>(radii.size());
    Eigen::MatrixXd A(k, 3);
    Eigen::VectorXd y(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto j = static_cast<std::size_t>(i);
      A(i, 0) = 1.0;
      A(i, 1) = x[j];
      A(i, 2) = radii[j] * radii[j];
      y(i) = e.maxima[j];
    }
    const Eigen::Vector3d coef = A.colPivHouseholderQr().solve(y);
    e.intercept = coef(0);
    e.slope = coef(1);
    e.fit_residual = std::sqrt((A * coef - y).squaredNorm() / static_cast<double>(k));
  }
  if (!std::isfinite(e.slope)) throw InvalidInput("Lelong slope not finite");
  return e;
}

/// ν on the dyadic ladder from r_in down to 4·excision_radius, u interpolated from the grid.
template <int N>
LelongEstimate lelong_number(const ComplexGrid<N>& u, const CVector<N>& c, double r_in, double excision_radius)
{
  const auto radii = dyadic_ladder(r_in, 4.0 * excision_radius);
  return lelong_fit<N>([&](const CVector<N>& z) { return interpolate<N>(u, z); }, c, radii);
}

/// ν of the restriction of u to the complex line c + ζ v.
template <int N>
LelongEstimate slice_lelong_number(const std::function<double(const CVector<N>&)>& u, const CVector<N>& c,
                                   const CVector<N>& v, const std::vector<double>& radii)
{
  const CVector<N> dir = v / v.norm();
  return lelong_fit<1>(
      [&](const CVector<1>& zeta) { return u(CVector<N>(c + zeta(0) * dir)); }, CVector<1>::Zero(), radii);
}

/// A Green's-function slice carries at most the unit mass of its line: ν <= 1 + tol.
inline bool mass_obstruction_check(int k, double nu, double tol = 0.05)
{
  if (k < 1) throw InvalidInput("k must be >= 1");
  if (!(nu >= -tol)) throw InvalidInput("Lelong estimate must be >= 0");
  return nu <= 1.0 + tol;
}

}  // namespace plurigreen
