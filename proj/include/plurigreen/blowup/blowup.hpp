#pragma once

#include <Eigen/Core>
#include <unsupported/Eigen/AutoDiff>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "plurigreen/core/errors.hpp"
#include "plurigreen/core/hermitian.hpp"
#include "plurigreen/singularity/cutoff.hpp"

namespace plurigreen {

/// Minimal complex type over an arbitrary real scalar (used with nested autodiff).
template <class T>
struct Cx {
  T re{}, im{};
  Cx() = default;
  Cx(T r, T i) : re(std::move(r)), im(std::move(i)) {}
  friend Cx operator+(const Cx& a, const Cx& b) { return {a.re + b.re, a.im + b.im}; }
  friend Cx operator-(const Cx& a, const Cx& b) { return {a.re - b.re, a.im - b.im}; }
  friend Cx operator*(const Cx& a, const Cx& b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }
  T norm() const { return re * re + im * im; }
};

/// Chart of the blow-up of C^N along Z = {z_0 = ... = z_{m-1} = a}, m = N - d.
/// Coordinates (ζ0, ζ1..ζd, θ1..θ_{m-1}): z_pivot = a_pivot + ζ0, tangential z_{m+i-1} = ζi,
/// remaining normal z_k = a_k + ζ0 θ_k. E ∩ chart = {ζ0 = 0}.
template <int N>
struct BlowupChart {
  int center_dim = 0;  ///< d
  int pivot = 0;       ///< j0 ∈ [0, N - d)
  CVector<N> center = CVector<N>::Zero();

  BlowupChart() = default;
  BlowupChart(int d, int j0, CVector<N> a = CVector<N>::Zero()) : center_dim(d), pivot(j0), center(std::move(a))
  {
    if (d < 0 || d >= N) throw InvalidInput("center dimension must lie in [0, N)");
    if (j0 < 0 || j0 >= N - d) throw InvalidInput("chart pivot must be a normal coordinate");
  }

  int codim() const { return N - center_dim; }

  /// Normal coordinate carried by θ_i (i = 1..m-1).
  int theta_target(int i) const { return i - 1 < pivot ? i - 1 : i; }

  /// Closed-form projection π; generic in the complex type.
  template <class C>
  std::array<C, N> project(const std::array<C, N>& c, const std::array<C, N>& a) const
  {
    std::array<C, N> z;
    const int m = codim();
    z[static_cast<std::size_t>(pivot)] = a[static_cast<std::size_t>(pivot)] + c[0];
    for (int i = 1; i <= center_dim; ++i) z[static_cast<std::size_t>(m + i - 1)] = c[static_cast<std::size_t>(i)];
    for (int i = 1; i < m; ++i) {
      const auto k = static_cast<std::size_t>(theta_target(i));
      z[k] = a[k] + c[0] * c[static_cast<std::size_t>(center_dim + i)];
    }
    return z;
  }

  CVector<N> project(const CVector<N>& c) const
  {
    std::array<cplx, N> cc, aa;
    for (int k = 0; k < N; ++k) cc[static_cast<std::size_t>(k)] = c(k), aa[static_cast<std::size_t>(k)] = center(k);
    const auto z = project(cc, aa);
    CVector<N> out;
    for (int k = 0; k < N; ++k) out(k) = z[static_cast<std::size_t>(k)];
    return out;
  }

  /// Holomorphic Jacobian ∂z/∂c.
  CMatrix<N> jacobian(const CVector<N>& c) const
  {
    CMatrix<N> J = CMatrix<N>::Zero();
    const int m = codim();
    J(pivot, 0) = 1.0;
    for (int i = 1; i <= center_dim; ++i) J(m + i - 1, i) = 1.0;
    for (int i = 1; i < m; ++i) {
      const int k = theta_target(i);
      J(k, 0) = c(center_dim + i);
      J(k, center_dim + i) = c(0);
    }
    return J;
  }

  /// Normal direction ν = y/ζ0 (ν_pivot = 1, ν_k = θ_k).
  CVector<N> normal_direction(const CVector<N>& c) const
  {
    CVector<N> nu = CVector<N>::Zero();
    nu(pivot) = 1.0;
    for (int i = 1; i < codim(); ++i) nu(theta_target(i)) = c(center_dim + i);
    return nu;
  }

  bool on_exceptional(const CVector<N>& c, double tol = 0.0) const { return std::abs(c(0)) <= tol; }
};

/// Max over outputs and inputs of |∂F/∂c̄_j| by centred differences; zero for holomorphic F.
template <int N, class F>
double cauchy_riemann_residual(F&& f, const CVector<N>& c, double step = 1e-5)
{
  double worst = 0.0;
  for (int j = 0; j < N; ++j) {
    CVector<N> dx = CVector<N>::Zero(), dy = CVector<N>::Zero();
    dx(j) = step;
    dy(j) = cplx(0.0, step);
    const CVector<N> fx = (f(c + dx) - f(c - dx)) / (2.0 * step);
    const CVector<N> fy = (f(c + dy) - f(c - dy)) / (2.0 * step);
    const CVector<N> dbar = 0.5 * (fx + cplx(0.0, 1.0) * fy);
    worst = std::max(worst, dbar.cwiseAbs().maxCoeff());
  }
  return worst;
}

namespace detail {

template <int N>
CVector<N> transition_map(const BlowupChart<N>& src, const BlowupChart<N>& dst, const CVector<N>& c)
{
  const int d = src.center_dim;
  const CVector<N> nu = src.normal_direction(c);
  const cplx den = nu(dst.pivot);
  if (std::abs(den) <= 1e-14 * nu.norm()) throw PivotDegenerate("destination pivot vanishes at this point");
  CVector<N> out;
  out(0) = c(0) * den;
  for (int i = 1; i <= d; ++i) out(i) = c(i);
  for (int i = 1; i < dst.codim(); ++i) out(d + i) = nu(dst.theta_target(i)) / den;
  return out;
}

}  // namespace detail

/// Coordinates of the src-chart point c in the dst chart (same center). Valid on E as well.
template <int N>
CVector<N> chart_transition(const BlowupChart<N>& src, const BlowupChart<N>& dst, const CVector<N>& c)
{
  if (src.center_dim != dst.center_dim || src.center != dst.center) throw InvalidInput("charts of different blow-ups");
  const CVector<N> out = detail::transition_map(src, dst, c);
  const double cr = cauchy_riemann_residual<N>([&](const CVector<N>& x) { return detail::transition_map(src, dst, x); }, c);
  if (!(cr < 1e-6)) throw Error("transition is not holomorphic at the point, CR residual " + std::to_string(cr));
  return out;
}

/// Metric h_E on O(-E) through the denominator D = (1 - ψ) + ψ y*Qy, y = z_normal - a,
/// ψ = ψ(|y|) from the quintic cutoff family.
template <int N>
struct ExceptionalMetric {
  int center_dim = 0;
  CVector<N> center = CVector<N>::Zero();
  CutoffProfile cutoff{0.5, 1.0};
  Eigen::MatrixXcd Q;  ///< m × m Hermitian positive-definite; identity when empty

  int codim() const { return N - center_dim; }

  Eigen::MatrixXcd weight() const
  {
    if (Q.size() == 0) return Eigen::MatrixXcd::Identity(codim(), codim());
    if (Q.rows() != codim() || Q.cols() != codim()) throw InvalidInput("Q must be codim × codim");
    return Q;
  }

  double denominator(const CVector<N>& z) const
  {
    const Eigen::VectorXcd y = (z - center).head(codim());
    const double psi = cutoff.q(y.norm());
    return (1.0 - psi) + psi * (y.adjoint() * weight() * y)(0, 0).real();
  }

  BlowupChart<N> chart(int pivot) const { return BlowupChart<N>(center_dim, pivot, center); }
};

namespace detail {

using Jet1 = Eigen::AutoDiffScalar<Eigen::VectorXd>;
using Jet2 = Eigen::AutoDiffScalar<Eigen::Matrix<Jet1, Eigen::Dynamic, 1>>;

inline std::vector<Jet2> seed_jets(const Eigen::VectorXd& x)
{
  const auto n = x.size();
  std::vector<Jet2> v(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& vi = v[static_cast<std::size_t>(i)];
    vi.value() = Jet1(x(i), n, i);
    vi.derivatives().resize(n);
    for (Eigen::Index k = 0; k < n; ++k) vi.derivatives()(k) = Jet1(k == i ? 1.0 : 0.0, Eigen::VectorXd::Zero(n));
  }
  return v;
}

/// Complex Hessian ∂_j∂̄_k from the real Hessian in (Re c0, Im c0, Re c1, ...).
template <int N>
CMatrix<N> complex_from_real(const Eigen::MatrixXd& R)
{
  CMatrix<N> H;
  for (int j = 0; j < N; ++j)
    for (int k = 0; k < N; ++k) {
      const double xx = R(2 * j, 2 * k), yy = R(2 * j + 1, 2 * k + 1);
      const double xy = R(2 * j, 2 * k + 1), yx = R(2 * j + 1, 2 * k);
      H(j, k) = 0.25 * cplx(xx + yy, xy - yx);
    }
  return 0.5 * (H + H.adjoint());
}

template <int N>
Eigen::MatrixXd real_hessian(const Jet2& f)
{
  Eigen::MatrixXd R(2 * N, 2 * N);
  for (int i = 0; i < 2 * N; ++i) R.row(i) = f.derivatives()(i).derivatives().transpose();
  return R;
}

/// L = log(D∘π / |ζ0|²) = -log h_E in chart coordinates, on jets of the chart point.
template <int N>
Jet2 potential_jet(const ExceptionalMetric<N>& g, const BlowupChart<N>& ch, const std::array<Cx<Jet2>, N>& c)
{
  const int m = g.codim();
  const Eigen::MatrixXcd Q = g.weight();
  std::array<Cx<Jet2>, N> a;
  for (int k = 0; k < N; ++k) a[static_cast<std::size_t>(k)] = {Jet2(g.center(k).real()), Jet2(g.center(k).imag())};
  // ν = y/ζ0 and y, as jets
  std::vector<Cx<Jet2>> nu(static_cast<std::size_t>(m)), y(static_cast<std::size_t>(m));
  nu[static_cast<std::size_t>(ch.pivot)] = {Jet2(1.0), Jet2(0.0)};
  for (int i = 1; i < m; ++i) nu[static_cast<std::size_t>(ch.theta_target(i))] = c[static_cast<std::size_t>(g.center_dim + i)];
  for (int k = 0; k < m; ++k) y[static_cast<std::size_t>(k)] = c[0] * nu[static_cast<std::size_t>(k)];
  auto quad = [&](const std::vector<Cx<Jet2>>& v) {
    Jet2 s(0.0);
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q) {
        const Cx<Jet2>& vp = v[static_cast<std::size_t>(p)];
        const Cx<Jet2>& vq = v[static_cast<std::size_t>(q)];
        // Re(conj(v_p) Q_pq v_q)
        const Jet2 rr = vp.re * vq.re + vp.im * vq.im, ri = vp.re * vq.im - vp.im * vq.re;
        s += Q(p, q).real() * rr - Q(p, q).imag() * ri;
      }
    return s;
  };
  Jet2 r2(0.0);
  for (const auto& v : y) r2 += v.norm();
  const double r = std::sqrt(r2.value().value());
  if (r <= g.cutoff.r_in) return log(quad(nu));
  // ψ(|y|) as a jet through the quintic profile in s = (|y| - r_in)/width
  const Jet2 rj = sqrt(r2);
  Jet2 psi(0.0);
  if (r < g.cutoff.r_out) {
    const Jet2 s = (rj - g.cutoff.r_in) / g.cutoff.width();
    psi = 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
  }
  const Jet2 D = (1.0 - psi) + psi * quad(y);
  return log(D) - log(c[0].norm());
}

template <int N>
std::array<Cx<Jet2>, N> chart_jets(const CVector<N>& c)
{
  Eigen::VectorXd x(2 * N);
  for (int k = 0; k < N; ++k) x(2 * k) = c(k).real(), x(2 * k + 1) = c(k).imag();
  const auto v = seed_jets(x);
  std::array<Cx<Jet2>, N> out;
  for (int k = 0; k < N; ++k) out[static_cast<std::size_t>(k)] = {v[static_cast<std::size_t>(2 * k)], v[static_cast<std::size_t>(2 * k + 1)]};
  return out;
}

}  // namespace detail

/// -log h_E at a chart point (smooth across E).
template <int N>
double exceptional_potential(const ExceptionalMetric<N>& g, const BlowupChart<N>& ch, const CVector<N>& c)
{
  return detail::potential_jet<N>(g, ch, detail::chart_jets<N>(c)).value().value();
}

/// Complex Hessian of -log h_E in chart coordinates, differentiated exactly (nested autodiff).
template <int N>
CMatrix<N> exceptional_curvature(const ExceptionalMetric<N>& g, const BlowupChart<N>& ch, const CVector<N>& c)
{
  return detail::complex_from_real<N>(detail::real_hessian<N>(detail::potential_jet<N>(g, ch, detail::chart_jets<N>(c))));
}

/// |f|²_{h_E} = |f|²/D∘π for a section f of O(-E) given in chart coordinates.
/// f must vanish on E: checked at ζ0 = 0 and by convergence of f/ζ0 along the ζ0-ray.
template <int N>
double h_E_norm(const ExceptionalMetric<N>& g, const BlowupChart<N>& ch, const std::function<cplx(const CVector<N>&)>& f,
                const CVector<N>& c)
{
  const double scale = std::max({1.0, std::abs(f(c))});
  CVector<N> e = c;
  e(0) = 0.0;
  if (std::abs(f(e)) > 1e-10 * scale) throw NotASection("f does not vanish on E");
  const cplx dir = std::abs(c(0)) > 0.0 ? c(0) / std::abs(c(0)) : cplx(1.0);
  std::vector<cplx> quot;
  for (double s : {1e-2, 1e-3, 1e-4}) {
    CVector<N> p = c;
    p(0) = s * dir;
    quot.push_back(f(p) / p(0));
  }
  if (std::abs(quot[2] - quot[1]) > 0.2 * std::abs(quot[1] - quot[0]) + 1e-9 * scale)
    throw NotASection("f/ζ0 does not converge on the ζ0-ray");
  if (std::abs(c(0)) == 0.0) {
    // on E: |f|²/D = |g|² / (D/|ζ0|²), with g = lim f/ζ0
    return std::norm(quot[2]) / std::exp(exceptional_potential<N>(g, ch, c));
  }
  return std::norm(f(c)) / g.denominator(ch.project(c));
}

/// Least λ ≥ 0 (bisection, 1e-6 relative) with M(λ) = λ diag(A, 0) + [[X, Y], [Y*, D]] > 0.
inline double lambda_threshold(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& X, const Eigen::MatrixXcd& D,
                               const Eigen::MatrixXcd& Y)
{
  const auto a = A.rows(), b = D.rows();
  if (A.cols() != a || X.rows() != a || X.cols() != a || D.cols() != b || Y.rows() != a || Y.cols() != b)
    throw InvalidInput("inconsistent block sizes");
  if (!is_positive(A)) throw HypothesisViolated("A is not positive-definite");
  if (!is_positive(D)) throw HypothesisViolated("D is not positive-definite");
  auto M = [&](double lam) {
    Eigen::MatrixXcd m(a + b, a + b);
    m << lam * A + X, Y, Y.adjoint(), D;
    return m;
  };
  auto pd = [&](double lam) { return is_positive(M(lam)); };
  const double scale = std::max({1.0, X.norm(), Y.norm(), D.norm()});
  if (pd(0.0)) {
    // M(0) > 0; the threshold is 0 unless an exactly-zero A block is present (excluded above)
    return 0.0;
  }
  double lo = 0.0, hi = 1.0;
  while (!pd(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw Error("lambda_threshold: no positive-definite λ found");
  }
  while (hi - lo > 1e-6 * std::max(hi, 1e-12 * scale)) {
    const double mid = 0.5 * (lo + hi);
    (pd(mid) ? hi : lo) = mid;
  }
  return hi;
}

/// Sample box in chart coordinates: |ζ0| ≤ zeta_radius, other coordinates ≤ theta_radius,
/// `per_axis` points per real axis clipped to the discs.
struct SampleBox {
  double zeta_radius = 1.0;
  double theta_radius = 2.0;
  int per_axis = 33;
};

template <int N>
std::vector<CVector<N>> box_samples(const SampleBox& K)
{
  if (K.per_axis < 2) throw InvalidInput("per_axis must be >= 2");
  std::vector<std::vector<cplx>> axis(N);
  for (int k = 0; k < N; ++k) {
    const double r = k == 0 ? K.zeta_radius : K.theta_radius;
    for (int i = 0; i < K.per_axis; ++i)
      for (int j = 0; j < K.per_axis; ++j) {
        const cplx z(-r + 2.0 * r * i / (K.per_axis - 1), -r + 2.0 * r * j / (K.per_axis - 1));
        if (std::abs(z) <= r * (1.0 + 1e-12)) axis[static_cast<std::size_t>(k)].push_back(z);
      }
  }
  std::vector<CVector<N>> out{CVector<N>::Zero()};
  for (int k = 0; k < N; ++k) {
    std::vector<CVector<N>> next;
    for (const auto& p : out)
      for (const cplx& z : axis[static_cast<std::size_t>(k)]) {
        CVector<N> q = p;
        q(k) = z;
        next.push_back(q);
      }
    out = std::move(next);
  }
  return out;
}

template <int N>
using KahlerForm = std::function<CMatrix<N>(const CVector<N>&)>;

template <int N>
KahlerForm<N> flat_form()
{
  return [](const CVector<N>&) { return CMatrix<N>::Identity().eval(); };
}

/// Pullback J^T ω(z) conj(J) of a (1,1)-form.
template <int N>
CMatrix<N> pullback(const CMatrix<N>& omega, const CMatrix<N>& J)
{
  const CMatrix<N> G = J.transpose() * omega * J.conjugate();
  return 0.5 * (G + G.adjoint());
}

/// Per-sample form data G (π*ω) and H (complex Hessian of -log h) with the largest-ε search.
template <int N>
struct FormSamples {
  std::vector<CMatrix<N>> G, H;

  bool positive(double eps) const
  {
    for (std::size_t s = 0; s < G.size(); ++s)
      if (!(min_eigenvalue(G[s] + eps * H[s]) > 0.0)) return false;
    return true;
  }

  double min_eigen(double eps) const
  {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < G.size(); ++s) m = std::min(m, min_eigenvalue(G[s] + eps * H[s]));
    return m;
  }

  /// Largest ε (bisection, 60 halvings, capped at 1e6) with positivity at all samples.
  double largest_epsilon() const
  {
    double hi = 1.0;
    while (positive(hi) && hi < 1e6) hi *= 2.0;
    if (positive(hi)) return hi;
    double lo = 0.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (positive(mid) ? lo : hi) = mid;
    }
    return lo;
  }
};

struct ThresholdReport {
  double epsilon_K = 0.0;
  std::vector<double> witness;   ///< λ_min at ε_K/2 per sample
  double witness_min = 0.0;
  std::size_t samples = 0;
  std::size_t on_E_samples = 0;
  double d_block_min = 0.0;       ///< min eigenvalue of the θθ-block of -i∂∂̄ log h_E on E
  double d_block_deviation = 0.0; ///< sup |D-block - Fubini–Study closed form| on E
  double pullback_min_on_E = 0.0; ///< λ_min(π*ω) on E (0: the pullback is degenerate there)
  bool sample_based = true;
};

/// Fubini–Study form ∂θ∂̄θ log(ν*Qν) in closed form, ν = y/ζ0 in the given chart.
template <int N>
Eigen::MatrixXcd fubini_study_block(const ExceptionalMetric<N>& g, const BlowupChart<N>& ch, const CVector<N>& c)
{
  const int m = g.codim();
  const Eigen::MatrixXcd Q = g.weight();
  const Eigen::VectorXcd nu = ch.normal_direction(c).head(m);
  const double q = (nu.adjoint() * Q * nu)(0, 0).real();
  const Eigen::VectorXcd row = (nu.adjoint() * Q).transpose();  // ∂θ_i q = (ν*Q)_{k_i}
  Eigen::MatrixXcd B(m - 1, m - 1);
  for (int i = 1; i < m; ++i)
    for (int j = 1; j < m; ++j) {
      const int ki = ch.theta_target(i), kj = ch.theta_target(j);
      B(i - 1, j - 1) = Q(kj, ki) / q - row(ki) * std::conj(row(kj)) / (q * q);
    }
  return B;
}

template <int N>
FormSamples<N> form_samples(const ExceptionalMetric<N>& g, const KahlerForm<N>& omega, const std::vector<BlowupChart<N>>& charts,
                            const SampleBox& K, std::vector<CVector<N>>* points = nullptr, std::vector<int>* chart_of = nullptr)
{
  FormSamples<N> out;
  const auto box = box_samples<N>(K);
  for (std::size_t ci = 0; ci < charts.size(); ++ci)
    for (const auto& c : box) {
      const CVector<N> z = charts[ci].project(c);
      const CMatrix<N> w = omega(z);
      if (!(min_eigenvalue(w) > 0.0)) throw NotPositive("ω is not positive at a sample of π(K)");
      out.G.push_back(pullback<N>(w, charts[ci].jacobian(c)));
      out.H.push_back(exceptional_curvature<N>(g, charts[ci], c));
      if (points) points->push_back(c);
      if (chart_of) chart_of->push_back(static_cast<int>(ci));
    }
  return out;
}

/// Largest uniform ε with π*ω - ε(i/2)∂∂̄ log h_E > 0 on the samples of K in every chart
/// of the metric's blow-up, plus the on-E block checks.
template <int N>
ThresholdReport positivity_threshold(const ExceptionalMetric<N>& g, const KahlerForm<N>& omega, const SampleBox& K)
{
  std::vector<BlowupChart<N>> charts;
  for (int p = 0; p < g.codim(); ++p) charts.push_back(g.chart(p));
  std::vector<CVector<N>> pts;
  std::vector<int> owner;
  const auto S = form_samples<N>(g, omega, charts, K, &pts, &owner);
  ThresholdReport R;
  R.samples = S.G.size();
  R.epsilon_K = S.largest_epsilon();
  R.witness.reserve(R.samples);
  for (std::size_t s = 0; s < R.samples; ++s) R.witness.push_back(min_eigenvalue(S.G[s] + 0.5 * R.epsilon_K * S.H[s]));
  R.witness_min = *std::min_element(R.witness.begin(), R.witness.end());
  R.d_block_min = std::numeric_limits<double>::infinity();
  R.pullback_min_on_E = std::numeric_limits<double>::infinity();
  const int m = g.codim();
  for (std::size_t s = 0; s < R.samples; ++s) {
    const auto& ch = charts[static_cast<std::size_t>(owner[s])];
    if (!ch.on_exceptional(pts[s]) || m < 2) continue;
    ++R.on_E_samples;
    const Eigen::MatrixXcd block = S.H[s].bottomRightCorner(m - 1, m - 1);
    R.d_block_min = std::min(R.d_block_min, jacobi_eigenvalues(block).eigenvalues.front());
    R.d_block_deviation = std::max(R.d_block_deviation, (block - fubini_study_block<N>(g, ch, pts[s])).cwiseAbs().maxCoeff());
    R.pullback_min_on_E = std::min(R.pullback_min_on_E, min_eigenvalue(S.G[s]));
  }
  return R;
}

/// Second blow-up data: a point of E₁, given in chart-0 coordinates of the first blow-up,
/// with its own cutoff. An empty optional is the trivial (empty-center) second stage.
struct SecondStage {
  CVector<2> center = CVector<2>::Zero();
  CutoffProfile cutoff{0.25, 0.5};
  SampleBox samples{0.5, 2.0, 17};
};

struct IteratedReport {
  int n1 = 0, n2 = 0;
  double epsilon1 = 0.0, epsilon2 = 0.0;   ///< 1/n1 and 1/(n1 n2)
  double stage1_min = 0.0, combined_min = 0.0;
  std::size_t stage1_samples = 0, combined_samples = 0;
  ThresholdReport stage1;
};

/// Iterated point blow-up of C²: first at the origin (metric h₁), then at a point of E₁
/// (metric h₂). Certifies π*ω - (1/(n₁n₂))(i/2)∂∂̄ log h_{E'} > 0, h_{E'} = (h₁∘π₂)^{n₂} h₂,
/// with n₁, n₂ the least powers of two passing on the samples.
class IteratedBlowup {
 public:
  IteratedBlowup(ExceptionalMetric<2> first, SampleBox first_samples, std::optional<SecondStage> second,
                 KahlerForm<2> omega = flat_form<2>())
      : g1_(std::move(first)), K1_(first_samples), second_(std::move(second)), omega_(std::move(omega))
  {
    if (g1_.center_dim != 0) throw InvalidInput("iterated blow-up is instantiated for point centers");
    chart1_ = g1_.chart(0);
    if (second_) {
      g2_.center = second_->center;
      g2_.cutoff = second_->cutoff;
      if (std::abs(second_->center(0)) != 0.0) throw InvalidInput("second center must lie on E₁ (ζ0 = 0)");
    }
  }

  /// -log h₁ ∘ π₂ at a stage-2 chart point, and its complex Hessian.
  double stage1_potential(const BlowupChart<2>& ch2, const CVector<2>& u) const
  {
    return exceptional_potential<2>(g1_, chart1_, ch2.project(u));
  }

  /// log h_{E'} = n₂ log h₁∘π₂ + log h₂, computed as the log of the product.
  double log_product_metric(const BlowupChart<2>& ch2, const CVector<2>& u, int n2) const
  {
    const double h1 = std::exp(-stage1_potential(ch2, u));
    const double h2 = std::exp(-exceptional_potential<2>(g2_, ch2, u));
    return std::log(std::pow(h1, n2) * h2);
  }

  double log_sum_metric(const BlowupChart<2>& ch2, const CVector<2>& u, int n2) const
  {
    return -n2 * stage1_potential(ch2, u) - exceptional_potential<2>(g2_, ch2, u);
  }

  IteratedReport certify(int max_power = 20) const
  {
    IteratedReport R;
    R.stage1 = positivity_threshold<2>(g1_, omega_, K1_);
    std::vector<BlowupChart<2>> charts1{g1_.chart(0), g1_.chart(1)};
    const auto S1 = form_samples<2>(g1_, omega_, charts1, K1_);
    R.stage1_samples = S1.G.size();
    for (int p = 0; p <= max_power && R.n1 == 0; ++p)
      if (S1.positive(1.0 / std::ldexp(1.0, p))) R.n1 = 1 << p;
    if (R.n1 == 0) throw StageFailure(1, "no power of two n₁ <= 2^" + std::to_string(max_power) + " gives positivity");
    R.epsilon1 = 1.0 / R.n1;
    R.stage1_min = S1.min_eigen(R.epsilon1);
    if (!second_) {
      R.n2 = 1;
      R.epsilon2 = R.epsilon1;
      R.combined_min = R.stage1_min;
      R.combined_samples = R.stage1_samples;
      return R;
    }
    // stage-2 samples: G = π*ω + ε₁ H₁∘π₂ pulled back, H = curvature of h₂
    std::vector<CMatrix<2>> base, curv;
    for (int p = 0; p < 2; ++p) {
      const BlowupChart<2> ch2 = g2_.chart(p);
      for (const auto& u : box_samples<2>(second_->samples)) {
        const CVector<2> c1 = ch2.project(u);
        const CVector<2> z = chart1_.project(c1);
        const CMatrix<2> w = omega_(z);
        if (!(min_eigenvalue(w) > 0.0)) throw NotPositive("ω is not positive at a stage-2 sample");
        const CMatrix<2> J = chart1_.jacobian(c1) * ch2.jacobian(u);
        base.push_back(pullback<2>(w, J) + R.epsilon1 * composed_curvature(ch2, u));
        curv.push_back(exceptional_curvature<2>(g2_, ch2, u));
      }
    }
    FormSamples<2> S2{base, curv};
    R.combined_samples = base.size();
    for (int p = 0; p <= max_power && R.n2 == 0; ++p)
      if (S2.positive(R.epsilon1 / std::ldexp(1.0, p))) R.n2 = 1 << p;
    if (R.n2 == 0) throw StageFailure(2, "no power of two n₂ <= 2^" + std::to_string(max_power) + " gives positivity");
    R.epsilon2 = R.epsilon1 / R.n2;
    R.combined_min = S2.min_eigen(R.epsilon2);
    return R;
  }

  const ExceptionalMetric<2>& first() const { return g1_; }
  const ExceptionalMetric<2>& second() const { return g2_; }
  const BlowupChart<2>& first_chart() const { return chart1_; }

 private:
  /// Complex Hessian in stage-2 coordinates of -log h₁ ∘ π₂ (autodiff through π₂).
  CMatrix<2> composed_curvature(const BlowupChart<2>& ch2, const CVector<2>& u) const
  {
    const auto uj = detail::chart_jets<2>(u);
    std::array<Cx<detail::Jet2>, 2> a;
    for (int k = 0; k < 2; ++k) a[static_cast<std::size_t>(k)] = {detail::Jet2(ch2.center(k).real()), detail::Jet2(ch2.center(k).imag())};
    const auto c1 = ch2.project(uj, a);
    const auto L = detail::potential_jet<2>(g1_, chart1_, c1);
    return detail::complex_from_real<2>(detail::real_hessian<2>(L));
  }

  ExceptionalMetric<2> g1_;
  SampleBox K1_;
  std::optional<SecondStage> second_;
  KahlerForm<2> omega_;
  ExceptionalMetric<2> g2_;
  BlowupChart<2> chart1_{0, 0};
};

}  // namespace plurigreen
