#pragma once

#include <cmath>

#include "plurigreen/core/errors.hpp"
#include "plurigreen/core/hermitian.hpp"

namespace plurigreen {

/// Radial C² bump: q = 1 on [0, r_in], q = 0 on [r_out, ∞), quintic smoothstep between.
struct CutoffProfile {
  double r_in = 0.1;
  double r_out = 0.2;

  CutoffProfile() = default;
  CutoffProfile(double rin, double rout) : r_in(rin), r_out(rout)
  {
    if (!(rin > 0.0) || !(rout > rin)) throw InvalidInput("cutoff needs 0 < r_in < r_out");
  }

  double width() const { return r_out - r_in; }

  double q(double t) const
  {
    if (t <= r_in) return 1.0;
    if (t >= r_out) return 0.0;
    const double s = (t - r_in) / width();
    return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
  }

  double dq(double t) const
  {
    if (t <= r_in || t >= r_out) return 0.0;
    const double s = (t - r_in) / width();
    return -30.0 * s * s * (1.0 - s) * (1.0 - s) / width();
  }

  double d2q(double t) const
  {
    if (t <= r_in || t >= r_out) return 0.0;
    const double s = (t - r_in) / width();
    return -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / (width() * width());
  }

  bool transition(double t) const { return t > r_in && t < r_out; }

  bool operator==(const CutoffProfile&) const = default;
};

/// ψ(w) = q(|w|) with its first and second complex derivatives, w the local coordinate.
template <int N>
struct CutoffJet {
  double value = 0.0;
  CVector<N> d;      ///< ∂_j ψ
  CMatrix<N> ddbar;  ///< ∂_j ∂̄_k ψ
};

template <int N>
CutoffJet<N> cutoff_jet(const CutoffProfile& c, const CVector<N>& w)
{
  CutoffJet<N> jet;
  const double r = w.norm();
  jet.value = c.q(r);
  jet.d.setZero();
  jet.ddbar.setZero();
  if (!c.transition(r)) return jet;
  // ψ = Q(ρ) with ρ = |w|²: ∂_jψ = Q' w̄_j and ∂_j∂̄_kψ = Q'' w̄_j w_k + Q' δ_jk
  const double q1 = c.dq(r), q2 = c.d2q(r);
  const double Q1 = q1 / (2.0 * r);
  const double Q2 = (q2 - q1 / r) / (4.0 * r * r);
  jet.d = Q1 * w.conjugate();
  jet.ddbar = Q2 * (w.conjugate() * w.transpose()) + Q1 * CMatrix<N>::Identity();
  return jet;
}

}  // namespace plurigreen
