#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "plurigreen/core/hessian.hpp"
#include "plurigreen/hcma/assemble.hpp"
#include "plurigreen/hcma/envelope.hpp"
#include "plurigreen/hcma/problem.hpp"

namespace plurigreen {

/// Geometric continuation schedule t0, t0·r, ... with t_min appended as the last entry.
inline std::vector<double> t_schedule(const SolverOptions& opt)
{
  if (!(opt.t0 <= 1.0) || !(opt.t_min >= 1e-4) || !(opt.t_min <= opt.t0))
    throw InvalidInput("t schedule needs 1e-4 <= t_min <= t0 <= 1");
  if (!(opt.t_ratio > 0.0 && opt.t_ratio < 1.0)) throw InvalidInput("t_ratio must lie in (0, 1)");
  std::vector<double> out;
  for (double t = opt.t0; t > opt.t_min * (1.0 + 1e-12); t *= opt.t_ratio) out.push_back(t);
  out.push_back(opt.t_min);
  return out;
}

namespace detail {

/// Pairs of mutually orthogonal complex lines among the stencils; in C¹ every line alone.
template <int N>
std::vector<std::array<std::size_t, N>> orthogonal_frames(const std::vector<DirectionStencil<N>>& st)
{
  std::vector<std::array<std::size_t, N>> out;
  for (std::size_t a = 0; a < st.size(); ++a) {
    if constexpr (N == 1) {
      out.push_back({a});
    } else {
      for (std::size_t b = a + 1; b < st.size(); ++b) {
        const auto& u = st[a].direction;
        const auto& v = st[b].direction;
        if (std::abs(u.dot(v)) <= 1e-12 * u.norm() * v.norm()) out.push_back({a, b});
      }
    }
  }
  return out;
}

/// Newton state for the monotone regularized scheme
///   min over frames of Π_k L_{v_k} W = 4^n t,   W = V + Φ,
/// on the unknown set interior ∪ cores. Each L_v is a lattice direction second
/// difference, so Π_k L_{v_k} over an eigenframe is 4^n det(H_W).
template <int N>
struct RegularizedState {
  const Discretization<N>* d = nullptr;
  std::vector<DirectionStencil<N>> stencils;
  std::vector<std::array<std::size_t, N>> frames;
  std::vector<std::ptrdiff_t> axis;
  std::vector<std::size_t> unknowns;   ///< interior nodes first, then cores
  std::vector<std::ptrdiff_t> column;  ///< node -> unknown index, -1 if fixed
  std::vector<double> Phi;
  std::vector<std::uint8_t> active;    ///< minimising frame per interior unknown

  double W(std::size_t q) const { return d->V[q] + Phi[q]; }

  double directional(std::size_t k, std::size_t p) const
  {
    const auto& st = stencils[k];
    double s = 0.0;
    for (std::size_t q = 0; q < st.linear.size(); ++q)
      s += st.weights[q] * W(static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + st.linear[q]));
    return st.scale * (s - (1.0 - st.center) * W(p));
  }

  double core_residual(std::size_t p) const
  {
    double s = 0.0;
    for (auto off : axis) s += Phi[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + off)];
    return Phi[p] - s / static_cast<double>(axis.size());
  }

  /// Residual vector; returns false when some directional difference at an
  /// interior node is not positive (the discrete positivity constraint).
  bool residual(double t, Eigen::VectorXd& F)
  {
    const std::size_t ni = d->interior.size();
    const double rhs = std::pow(4.0, N) * t;
    F.resize(static_cast<Eigen::Index>(unknowns.size()));
    active.resize(ni);
    bool pd = true;
    std::vector<double> L(stencils.size());
    for (std::size_t k = 0; k < unknowns.size(); ++k) {
      const std::size_t p = unknowns[k];
      if (k < ni) {
        for (std::size_t j = 0; j < stencils.size(); ++j) {
          L[j] = directional(j, p);
          pd = pd && L[j] > 0.0;
        }
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < frames.size(); ++f) {
          double prod = 1.0;
          for (std::size_t j : frames[f]) prod *= L[j];
          if (prod < best) {  // strict: first minimal frame wins
            best = prod;
            active[k] = static_cast<std::uint8_t>(f);
          }
        }
        F[static_cast<Eigen::Index>(k)] = best - rhs;
      } else {
        F[static_cast<Eigen::Index>(k)] = core_residual(p);
      }
    }
    return pd;
  }

  /// Jacobian of the active-frame branch (call after residual()).
  Eigen::SparseMatrix<double> jacobian() const
  {
    const std::size_t ni = d->interior.size();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(unknowns.size() * (1 + 4 * N));
    for (std::size_t k = 0; k < unknowns.size(); ++k) {
      const std::size_t p = unknowns[k];
      const int row = static_cast<int>(k);
      auto add = [&](std::size_t q, double w) {
        if (column[q] >= 0) trip.emplace_back(row, static_cast<int>(column[q]), w);
      };
      if (k < ni) {
        const auto& fr = frames[active[k]];
        std::array<double, N> L;
        for (int i = 0; i < N; ++i) L[i] = directional(fr[i], p);
        for (int i = 0; i < N; ++i) {
          double others = 1.0;
          for (int j = 0; j < N; ++j)
            if (j != i) others *= L[j];
          const auto& st = stencils[fr[i]];
          add(p, -others * st.scale * (1.0 - st.center));
          for (std::size_t q = 0; q < st.linear.size(); ++q)
            add(static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + st.linear[q]), others * st.scale * st.weights[q]);
        }
      } else {
        trip.emplace_back(row, row, 1.0);
        for (auto off : axis) add(static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + off), -1.0 / static_cast<double>(axis.size()));
      }
    }
    Eigen::SparseMatrix<double> J(static_cast<Eigen::Index>(unknowns.size()),
                                  static_cast<Eigen::Index>(unknowns.size()));
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
  }

  void apply_step(const std::vector<double>& base, const Eigen::VectorXd& dx, double alpha)
  {
    Phi = base;
    for (std::size_t k = 0; k < unknowns.size(); ++k) Phi[unknowns[k]] += alpha * dx[static_cast<Eigen::Index>(k)];
  }

  /// Damped Newton from the current Φ; returns the iteration count.
  int newton(double t, const SolverOptions& opt);

  /// sup over interior nodes of |∇Φ| exp(-c2 Φ), centered differences.
  double c1_value(double c2) const
  {
    const auto& lat = d->grid.lattice;
    double best = 0.0;
    for (std::size_t p : d->interior) {
      double g2 = 0.0;
      for (int a = 0; a < 2 * N; ++a) {
        const auto s = lat.stride[a];
        const double g = (Phi[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + s)] -
                          Phi[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) - s)]) /
                         (2.0 * lat.spacing[a]);
        g2 += g * g;
      }
      best = std::max(best, std::sqrt(g2) * std::exp(-c2 * Phi[p]));
    }
    return best;
  }
};

/// Sparse solve of J x = b: direct LU in C¹, Jacobi-preconditioned BiCGSTAB in C².
template <int N>
Eigen::VectorXd newton_direction(const Eigen::SparseMatrix<double>& J, const Eigen::VectorXd& b, double t)
{
  if constexpr (N == 1) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success) throw NewtonDivergence(t, "singular Jacobian");
    return lu.solve(b);
  } else {
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>, Eigen::DiagonalPreconditioner<double>> it;
    it.setTolerance(1e-11);
    it.setMaxIterations(5000);
    const Eigen::SparseMatrix<double, Eigen::RowMajor> A = J;
    it.compute(A);
    if (it.info() != Eigen::Success) throw NewtonDivergence(t, "preconditioner failed");
    Eigen::VectorXd x = it.solve(b);
    if (!x.allFinite()) throw NewtonDivergence(t, "linear solve diverged");
    return x;
  }
}

template <int N>
int RegularizedState<N>::newton(double t, const SolverOptions& opt)
{
  Eigen::VectorXd F, Ft;
  if (!residual(t, F)) throw PositivityLoss("iterate is not plurisubharmonic at t=" + std::to_string(t));
  int it = 0;
  double fnorm = F.lpNorm<Eigen::Infinity>();
  while (fnorm > opt.newton_tol) {
    if (it >= opt.newton_max_iterations) throw NewtonDivergence(t, "iteration limit, residual " + std::to_string(fnorm));
    const Eigen::VectorXd dx = newton_direction<N>(jacobian(), -F, t);
    const std::vector<double> base = Phi;
    const double f2 = F.norm();
    double alpha = 1.0;
    bool accepted = false, any_pd = false;
    for (int k = 0; k <= opt.max_halvings; ++k, alpha *= 0.5) {
      apply_step(base, dx, alpha);
      const bool pd = residual(t, Ft);
      any_pd = any_pd || pd;
      if (pd && Ft.allFinite() && Ft.norm() <= (1.0 - 1e-4 * alpha) * f2) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      Phi = base;
      if (!any_pd) throw PositivityLoss("step halving exhausted at t=" + std::to_string(t));
      throw NewtonDivergence(t, "no decrease along the Newton direction");
    }
    F = Ft;
    fnorm = F.lpNorm<Eigen::Infinity>();
    ++it;
  }
  return it;
}

}  // namespace detail

/// Regularized Dirichlet problems det(H_V + H_Φ) = t det(H_ref) along the geometric
/// t schedule, by damped Newton with positivity-preserving step halving.
///
/// With `extrapolate` set the reported Φ is the Richardson limit Φ_0 ≈ Φ_t - c t^{1/n}
/// built from the last two steps; otherwise it is the t_min solution.
template <int N>
SolveReport<N> solve_regularized(const GreenProblem<N>& P)
{
  P.validate();
  if (P.domain.boundaryless()) throw InvalidInput("regularized Dirichlet backend needs a domain with boundary");
  const SolverOptions& opt = P.solver;
  const auto ts = t_schedule(opt);
  const auto d = Discretization<N>::make(P);
  const auto& lat = d.grid.lattice;
  const std::size_t n = d.grid.size();

  detail::RegularizedState<N> S;
  S.d = &d;
  S.stencils = lattice_direction_stencils<N>(lat, opt.lattice_width);
  S.frames = detail::orthogonal_frames<N>(S.stencils);
  if (S.frames.empty() || S.frames.size() > 255) throw InvalidInput("lattice stencils give no usable orthogonal frames");
  for (int a = 0; a < 2 * N; ++a) {
    S.axis.push_back(lat.stride[a]);
    S.axis.push_back(-lat.stride[a]);
  }
  detail::check_stencil_reach<N>(lat, d.interior, S.stencils);
  detail::check_stencil_reach<N>(lat, d.excised, S.stencils);
  S.unknowns = d.interior;
  S.unknowns.insert(S.unknowns.end(), d.excised.begin(), d.excised.end());
  S.column.assign(n, -1);
  for (std::size_t k = 0; k < S.unknowns.size(); ++k) S.column[S.unknowns[k]] = static_cast<std::ptrdiff_t>(k);

  // Convex start φ_b + A(|z|² - R²), R the largest radius among boundary nodes
  // reached from the interior: boundary values then lie above the quadratic and,
  // the scheme being monotone, every L_v W >= L_v(V + φ_b) + 4A.
  double R2 = 0.0;
  for (std::size_t p : d.interior)
    for (const auto& st : S.stencils)
      for (auto off : st.linear) {
        const auto q = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + off);
        if (d.grid.mask[q] == NodeTag::boundary) R2 = std::max(R2, d.grid.z(q).squaredNorm());
      }
  S.Phi.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    S.Phi[i] = d.grid.mask[i] == NodeTag::boundary ? d.phi_b[i] : P.boundary_data(d.grid.z(i));
  double lam = std::numeric_limits<double>::infinity();
  for (std::size_t p : d.interior)
    for (std::size_t j = 0; j < S.stencils.size(); ++j) lam = std::min(lam, S.directional(j, p));
  const double A = std::max(0.0, -lam) / 4.0 * 2.0 + 1.0;
  for (std::size_t p : S.unknowns) S.Phi[p] += A * (d.grid.z(p).squaredNorm() - R2);

  SolveReport<N> rep;
  rep.backend = Backend::regularized;
  Eigen::VectorXd F;
  int total = 0;
  std::vector<double> prev_phi, prev2_phi;
  double prev_t = 0.0, prev2_t = 0.0;
  for (double t : ts) {
    const int it = S.newton(t, opt);
    total += it;
    rep.newton_iterations.push_back(it);
    prev2_phi = std::move(prev_phi);
    prev2_t = prev_t;
    prev_phi = S.Phi;
    prev_t = t;
    if (rep.c1_trace.empty()) {
      // C2: least power of two in [2^-10, 2^10] with t0 value <= 1, else the minimiser
      double best_c2 = 1.0 / 1024.0, best_v = std::numeric_limits<double>::infinity();
      rep.c2 = -1.0;
      for (double c2 = 1.0 / 1024.0; c2 <= 1024.0; c2 *= 2.0) {
        const double v = S.c1_value(c2);
        if (v <= 1.0) {
          rep.c2 = c2;
          break;
        }
        if (v < best_v) {
          best_v = v;
          best_c2 = c2;
        }
      }
      if (rep.c2 < 0.0) rep.c2 = best_c2;
    }
    rep.c1_trace.emplace_back(t, S.c1_value(rep.c2));
  }
  rep.iterations = total;
  rep.converged = true;
  S.residual(prev_t, F);
  rep.last_update = F.lpNorm<Eigen::Infinity>();
  rep.t_final = prev_t;

  std::vector<double> Phi = prev_phi;
  if (opt.extrapolate && !prev2_phi.empty()) {
    const double sa = std::pow(prev2_t, 1.0 / N), sb = std::pow(prev_t, 1.0 / N);
    for (std::size_t p : S.unknowns) Phi[p] = (prev_phi[p] * sa - prev2_phi[p] * sb) / (sa - sb);
  }
  std::vector<double> W(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < n; ++i)
    if (d.grid.mask[i] != NodeTag::excised) W[i] = d.V[i] + Phi[i];
  rep.phi = phi_from_working<N>(d, W);
  rep.phi_extended = Phi;
  rep.green = assemble_green<N>(P, rep.phi);

  // maximality defect of the reported field; positivity of the last Newton iterate
  detail::EnvelopeState<N> E;
  E.stencils = S.stencils;
  E.V = d.V;
  E.Phi = Phi;
  for (std::size_t p : d.interior) rep.residual_max = std::max(rep.residual_max, std::max(E.defect(p), 0.0));
  E.Phi = prev_phi;
  for (std::size_t p : d.interior) rep.psh_defect = std::max(rep.psh_defect, std::max(-E.defect(p), 0.0));
  return rep;
}

}  // namespace plurigreen
