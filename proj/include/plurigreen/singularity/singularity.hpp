#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "plurigreen/core/domain.hpp"
#include "plurigreen/core/errors.hpp"
#include "plurigreen/core/hermitian.hpp"
#include "plurigreen/singularity/cutoff.hpp"
#include "plurigreen/singularity/polynomial.hpp"

namespace plurigreen {

/// One pole: center p, weight ε, holomorphic tuple f in the local coordinate w = z - p.
template <int N>
struct Pole {
  CVector<N> center = CVector<N>::Zero();
  double epsilon = 0.5;
  std::vector<Polynomial<N>> f;
  CutoffProfile cutoff;

  bool operator==(const Pole&) const = default;
};

template <int N>
struct SingularityData {
  std::vector<Pole<N>> poles;

  std::vector<CVector<N>> centers() const
  {
    std::vector<CVector<N>> out;
    for (const auto& p : poles) out.push_back(p.center);
    return out;
  }
  double max_epsilon() const
  {
    double e = 0.0;
    for (const auto& p : poles) e = std::max(e, p.epsilon);
    return e;
  }
  double total_epsilon() const
  {
    double e = 0.0;
    for (const auto& p : poles) e += p.epsilon;
    return e;
  }

  std::vector<std::string> violations(const DomainSpec& domain) const;
  void validate(const DomainSpec& domain) const
  {
    const auto v = violations(domain);
    if (!v.empty()) throw InvalidInput(v.front());
  }

  bool operator==(const SingularityData&) const = default;
};

namespace detail {

/// Unit sample directions in C^N used for annulus scans.
template <int N>
std::vector<CVector<N>> sphere_samples(int angular)
{
  std::vector<CVector<N>> out;
  if constexpr (N == 1) {
    for (int k = 0; k < angular; ++k) out.push_back(CVector<1>::Constant(std::polar(1.0, 2.0 * std::numbers::pi * k / angular)));
  } else {
    // Hopf coordinates (cos a e^{ib}, sin a e^{ic}) on a tensor grid
    const int na = std::max(2, angular / 4 + 1);
    const int nb = std::max(2, angular / 4);
    for (int ia = 0; ia < na; ++ia) {
      const double a = 0.5 * std::numbers::pi * ia / (na - 1);
      // exact endpoints so that the coordinate axes are sampled without round-off
      const double ca = ia == na - 1 ? 0.0 : std::cos(a), sa = ia == 0 ? 0.0 : std::sin(a);
      for (int ib = 0; ib < nb; ++ib)
        for (int ic = 0; ic < nb; ++ic) {
          CVector<2> v;
          v(0) = std::polar(ca, 2.0 * std::numbers::pi * ib / nb);
          v(1) = std::polar(sa, 2.0 * std::numbers::pi * (ic + 0.5) / nb);
          out.push_back(v);
        }
    }
  }
  return out;
}

}  // namespace detail

template <int N>
std::vector<std::string> SingularityData<N>::violations(const DomainSpec& domain) const
{
  std::vector<std::string> out;
  for (std::size_t m = 0; m < poles.size(); ++m) {
    const auto& p = poles[m];
    const std::string tag = "pole " + std::to_string(m) + ": ";
    if (!(p.epsilon > 0.0) || !std::isfinite(p.epsilon)) out.push_back(tag + "epsilon must be > 0");
    if (!(p.cutoff.r_in > 0.0) || !(p.cutoff.r_out > p.cutoff.r_in)) out.push_back(tag + "need 0 < r_in < r_out");
    if (static_cast<int>(p.f.size()) != N) out.push_back(tag + "f needs " + std::to_string(N) + " polynomials");
    if (!domain.boundaryless() && domain.signed_distance(p.center) < p.cutoff.r_out)
      out.push_back(tag + "ball B(p, r_out) must lie in the domain interior");
    for (std::size_t k = m + 1; k < poles.size(); ++k) {
      const auto& q = poles[k];
      if ((p.center - q.center).norm() < p.cutoff.r_out + q.cutoff.r_out)
        out.push_back(tag + "ball B(p, r_out) overlaps pole " + std::to_string(k) + " (pole balls must be disjoint)");
    }
    if (static_cast<int>(p.f.size()) != N || !(p.cutoff.r_out > p.cutoff.r_in) || !(p.cutoff.r_in > 0.0)) continue;
    double at_center = 0.0;
    for (const auto& fj : p.f) at_center += std::norm(fj(CVector<N>::Zero()));
    if (at_center != 0.0) out.push_back(tag + "f must vanish at the pole");
    // common-zero certificate on a geometric radial ladder through the annulus
    double smallest = std::numeric_limits<double>::infinity();
    const auto dirs = detail::sphere_samples<N>(N == 1 ? 64 : 16);
    const double lo = 1e-3 * p.cutoff.r_in, hi = p.cutoff.r_out;
    for (int i = 0; i <= 24; ++i) {
      const double r = lo * std::pow(hi / lo, i / 24.0);
      for (const auto& u : dirs) {
        double s = 0.0;
        for (const auto& fj : p.f) s += std::norm(fj(CVector<N>(r * u)));
        smallest = std::min(smallest, s);
      }
    }
    if (!(smallest > 0.0)) out.push_back(tag + "f has a common zero other than the pole");
  }
  return out;
}

/// Value and ∂∂̄ of one glued term g = ψ log Σ|f_j|² + 1 - ψ.
template <int N>
struct GluedJet {
  double value = 1.0;
  CMatrix<N> ddbar = CMatrix<N>::Zero();
};

template <int N>
GluedJet<N> glued_jet(const Pole<N>& pole, const CVector<N>& z, bool with_derivatives = true)
{
  GluedJet<N> out;
  const CVector<N> w = z - pole.center;
  const double r = w.norm();
  if (r >= pole.cutoff.r_out) return out;

  double S = 0.0;
  CVector<N> dS = CVector<N>::Zero();  // ∂_j S = Σ_a ∂_j f_a conj(f_a)
  CMatrix<N> ddS = CMatrix<N>::Zero();  // ∂_j∂̄_k S = Σ_a ∂_j f_a conj(∂_k f_a)
  for (const auto& fa : pole.f) {
    const cplx v = fa(w);
    S += std::norm(v);
    if (!with_derivatives) continue;
    CVector<N> g;
    for (int j = 0; j < N; ++j) g(j) = fa.derivative(j)(w);
    dS += g * std::conj(v);
    ddS += g * g.adjoint();
  }
  if (!(S > 0.0)) throw EvaluationAtPole("sum |f_j|^2 vanishes");
  const double L = std::log(S);
  const auto psi = cutoff_jet<N>(pole.cutoff, w);
  out.value = psi.value * L + 1.0 - psi.value;
  if (!with_derivatives) return out;

  const CVector<N> dL = dS / S;
  const CMatrix<N> ddL = ddS / S - (dS * dS.adjoint()) / (S * S);
  // ∂_j∂̄_k(ψL) - ∂_j∂̄_kψ = ψ L_jk̄ + ψ_j L_k̄ + L_j ψ_k̄ + (L - 1) ψ_jk̄
  out.ddbar = psi.value * ddL + psi.d * dL.adjoint() + dL * psi.d.adjoint() + (L - 1.0) * psi.ddbar;
  out.ddbar = 0.5 * (out.ddbar + out.ddbar.adjoint()).eval();
  return out;
}

/// Σ_m ε_m [ψ_m log Σ_j |f_jm|² + (1 - ψ_m)] at z.
template <int N>
double glued_potential(const SingularityData<N>& s, const CVector<N>& z)
{
  double v = 0.0;
  for (const auto& p : s.poles) {
    if ((z - p.center).norm() == 0.0) throw EvaluationAtPole("z coincides with a pole");
    v += p.epsilon * glued_jet<N>(p, z, false).value;
  }
  return v;
}

/// Σ_m ε_m ∂∂̄ g_m(z).
template <int N>
CMatrix<N> glued_ddbar(const SingularityData<N>& s, const CVector<N>& z)
{
  CMatrix<N> h = CMatrix<N>::Zero();
  for (const auto& p : s.poles) {
    if ((z - p.center).norm() == 0.0) throw EvaluationAtPole("z coincides with a pole");
    h += p.epsilon * glued_jet<N>(p, z).ddbar;
  }
  return h;
}

enum class BaseForm { flat, zero, fubini_study };

inline std::string to_string(BaseForm b)
{
  switch (b) {
    case BaseForm::flat: return "flat";
    case BaseForm::zero: return "zero";
    case BaseForm::fubini_study: return "fubini-study";
  }
  return "?";
}

inline std::optional<BaseForm> base_form_from_string(const std::string& s)
{
  if (s == "flat") return BaseForm::flat;
  if (s == "zero") return BaseForm::zero;
  if (s == "fubini-study") return BaseForm::fubini_study;
  return std::nullopt;
}

/// Background Kähler form ω, optionally augmented by A ∂∂̄ρ with ρ = |z|² - R².
struct BackgroundSpec {
  BaseForm base = BaseForm::flat;
  double augmentation = 0.0;  ///< A
  double rho_radius = 1.0;    ///< R

  template <int N>
  double potential(const CVector<N>& z) const
  {
    const double r2 = z.squaredNorm();
    switch (base) {
      case BaseForm::flat: return r2;
      case BaseForm::zero: return 0.0;
      case BaseForm::fubini_study: return std::log1p(r2);
    }
    return 0.0;
  }

  /// Coefficient matrix of ω (without augmentation).
  template <int N>
  CMatrix<N> base_form(const CVector<N>& z) const
  {
    switch (base) {
      case BaseForm::flat: return CMatrix<N>::Identity();
      case BaseForm::zero: return CMatrix<N>::Zero();
      case BaseForm::fubini_study: {
        const double a = 1.0 + z.squaredNorm();
        return CMatrix<N>::Identity() / a - (z.conjugate() * z.transpose()) / (a * a);
      }
    }
    return CMatrix<N>::Zero();
  }

  template <int N>
  CMatrix<N> form(const CVector<N>& z) const
  {
    return base_form<N>(z) + augmentation * CMatrix<N>::Identity();
  }

  double rho(double r2) const { return r2 - rho_radius * rho_radius; }

  bool operator==(const BackgroundSpec&) const = default;
};

/// ω + A∂∂̄ρ + δ Σ_m ∂∂̄ g_m at z (each pole at unit weight).
template <int N>
CMatrix<N> omega_delta(const SingularityData<N>& s, const BackgroundSpec& b, double delta, const CVector<N>& z)
{
  CMatrix<N> h = b.form<N>(z);
  for (const auto& p : s.poles) {
    if ((z - p.center).norm() == 0.0) throw EvaluationAtPole("z coincides with a pole");
    h += delta * glued_jet<N>(p, z).ddbar;
  }
  return h;
}

struct FeasibilityOptions {
  double delta_hi = 1.0;
  double margin = -1.0;  ///< negative: 1e-6 times the trace scale of ω
  int radial = 16;
  int angular = 32;
  int bisection_steps = 20;
};

namespace detail {

template <int N>
std::vector<CVector<N>> transition_samples(const SingularityData<N>& s, const FeasibilityOptions& opt)
{
  std::vector<CVector<N>> pts;
  const auto dirs = sphere_samples<N>(opt.angular);
  for (const auto& p : s.poles) {
    for (int i = 0; i < opt.radial; ++i) {
      const double r = p.cutoff.r_in + (p.cutoff.r_out - p.cutoff.r_in) * i / (opt.radial - 1);
      for (const auto& u : dirs) pts.push_back(p.center + r * u);
    }
  }
  return pts;
}

}  // namespace detail

/// True iff ω_δ exceeds `margin` in λ_min at every transition-annulus sample.
template <int N>
bool epsilon_feasible(const SingularityData<N>& s, const BackgroundSpec& b, double delta, double margin,
                      const std::vector<CVector<N>>& samples)
{
  for (const auto& z : samples)
    if (!(min_eigenvalue(omega_delta<N>(s, b, delta, z)) > margin)) return false;
  return true;
}

template <int N>
double default_margin(const BackgroundSpec& b)
{
  const double tr = std::abs(b.form<N>(CVector<N>::Zero()).trace().real());
  return 1e-6 * std::max(1.0, tr);
}

/// Largest δ in [0, δ_hi] (20 bisection steps) keeping ω_δ positive on the
/// transition annuli; +∞ when an augmented background passes at δ_hi.
template <int N>
double max_feasible_epsilon(const SingularityData<N>& s, const BackgroundSpec& b, const FeasibilityOptions& opt = {})
{
  const double margin = opt.margin >= 0.0 ? opt.margin : default_margin<N>(b);
  if (!(opt.delta_hi > 0.0)) throw InvalidInput("delta_hi must be > 0");
  const auto samples = detail::transition_samples<N>(s, opt);
  if (!epsilon_feasible<N>(s, b, 0.0, margin, samples))
    throw InfeasibleBackground("background form is not positive on the pole annuli");
  if (epsilon_feasible<N>(s, b, opt.delta_hi, margin, samples))
    return b.augmentation > 0.0 ? std::numeric_limits<double>::infinity() : opt.delta_hi;
  double lo = 0.0, hi = opt.delta_hi;
  for (int i = 0; i < opt.bisection_steps; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (epsilon_feasible<N>(s, b, mid, margin, samples)) lo = mid;
    else hi = mid;
  }
  return lo;
}

/// Least A = 2^k (k >= -10) for which ω + A∂∂̄ρ + δ∂∂̄(glued) is positive on the annuli.
template <int N>
double auto_augmentation(const SingularityData<N>& s, BackgroundSpec b, double delta,
                         const FeasibilityOptions& opt = {})
{
  const double margin = opt.margin >= 0.0 ? opt.margin : 1e-6;
  const auto samples = detail::transition_samples<N>(s, opt);
  for (int k = -10; k <= 40; ++k) {
    b.augmentation = std::ldexp(1.0, k);
    if (epsilon_feasible<N>(s, b, delta, margin, samples)) return b.augmentation;
  }
  throw InfeasibleBackground("no augmentation up to 2^40 makes the form positive");
}

}  // namespace plurigreen
