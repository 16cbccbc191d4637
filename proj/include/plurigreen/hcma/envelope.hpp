#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "plurigreen/core/hessian.hpp"
#include "plurigreen/hcma/assemble.hpp"
#include "plurigreen/hcma/problem.hpp"

namespace plurigreen {

namespace detail {

template <int N>
std::vector<std::vector<std::size_t>> color_classes(const Lattice<N>& lat, const std::vector<std::size_t>& nodes)
{
  // parity per axis: nodes of one class never share a {-1,0,1}^{2N} stencil
  std::vector<std::vector<std::size_t>> out(1u << (2 * N));
  for (std::size_t p : nodes) {
    const auto idx = lat.unravel(p);
    unsigned c = 0;
    for (int a = 0; a < 2 * N; ++a) c |= static_cast<unsigned>(idx[a] & 1) << a;
    out[c].push_back(p);
  }
  return out;
}

template <int N>
void check_stencil_reach(const Lattice<N>& lat, const std::vector<std::size_t>& nodes,
                         const std::vector<DirectionStencil<N>>& stencils)
{
  int reach = 1;
  for (const auto& st : stencils)
    for (const auto& off : st.offsets)
      for (int o : off) reach = std::max(reach, std::abs(o));
  for (std::size_t p : nodes) {
    const auto idx = lat.unravel(p);
    for (int a = 0; a < 2 * N; ++a)
      if (idx[a] - reach < 0 || idx[a] + reach >= lat.count[a])
        throw StencilOutOfDomain("interior node too close to the lattice edge");
  }
}

template <int N>
struct EnvelopeState {
  std::vector<DirectionStencil<N>> stencils;
  std::vector<double> V;             ///< nodal local potential
  std::vector<double> Phi;
  std::vector<std::uint8_t> argmin;
  std::vector<std::ptrdiff_t> axis;  ///< linear offsets of the 2·2N axis neighbours

  /// Stencil applied to nodal V: the discretisation acts on the sum W = V + Φ.
  double background_term(const DirectionStencil<N>& st, std::size_t p) const
  {
    double s = 0.0;
    for (std::size_t q = 0; q < st.linear.size(); ++q)
      s += st.weights[q] * V[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + st.linear[q])];
    return s - (1.0 - st.center) * V[p];
  }

  double directional(std::size_t k, std::size_t p) const
  {
    const auto& st = stencils[k];
    double s = 0.0;
    for (std::size_t q = 0; q < st.linear.size(); ++q)
      s += st.weights[q] * Phi[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + st.linear[q])];
    return (s + background_term(st, p)) / (1.0 - st.center);
  }

  double candidate(std::size_t p, bool full)
  {
    if (!full) return directional(argmin[p], p);
    double best = std::numeric_limits<double>::infinity();
    std::uint8_t arg = 0;
    for (std::size_t k = 0; k < stencils.size(); ++k) {
      const double v = directional(k, p);
      if (v < best) {  // strict: first minimal direction wins
        best = v;
        arg = static_cast<std::uint8_t>(k);
      }
    }
    argmin[p] = arg;
    return best;
  }

  double core_candidate(std::size_t p) const
  {
    double s = 0.0;
    for (auto off : axis) s += Phi[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + off)];
    return s / static_cast<double>(axis.size());
  }

  /// Scheme defect min_v [4 v*∂∂̄V v + L_v Φ] at node p.
  double defect(std::size_t p) const
  {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& st : stencils) best = std::min(best, st.scale * background_term(st, p) + st.apply(Phi, p));
    return best;
  }
};

}  // namespace detail

/// Direction stencils selected by the solver options.
template <int N>
std::vector<DirectionStencil<N>> envelope_stencils(const Lattice<N>& lat, const SolverOptions& opt)
{
  if (opt.stencil == StencilKind::lattice) return lattice_direction_stencils<N>(lat, opt.lattice_width);
  const int ndir = opt.directions > 0 ? opt.directions : (N == 1 ? 1 : 32);
  const auto dirs = default_directions<N>(ndir);
  return make_direction_stencils<N>(lat, dirs, {opt.circle_samples, false});
}

/// Relaxation factor used when SolverOptions::relaxation is 0.
template <int N>
double auto_relaxation(const Lattice<N>& lat)
{
  double extent = 0.0;
  for (int a = 0; a < 2 * N; ++a) extent = std::max(extent, lat.count[a] * lat.spacing[a]);
  return 2.0 / (1.0 + std::sin(std::numbers::pi * lat.h() / extent));
}

/// Discrete maximal ω_δ-psh remainder by Gauss–Seidel on the monotone
/// direction-envelope update W(p) <- min_v (circle mean of W in direction v).
///
/// `initial_phi`, when given, seeds Φ on every node (values on boundary nodes are ignored).
template <int N>
SolveReport<N> solve_envelope(const GreenProblem<N>& P, const std::vector<double>* initial_phi = nullptr)
{
  P.validate();
  if (P.domain.boundaryless()) throw InvalidInput("envelope backend needs a domain with boundary");
  const auto d = Discretization<N>::make(P);
  const auto& lat = d.grid.lattice;
  const SolverOptions& opt = P.solver;
  const int threads = resolve_threads(opt.threads);

  detail::EnvelopeState<N> S;
  S.stencils = envelope_stencils<N>(lat, opt);
  if (S.stencils.size() > 255) throw InvalidInput("at most 255 directions");
  detail::check_stencil_reach<N>(lat, d.interior, S.stencils);
  detail::check_stencil_reach<N>(lat, d.excised, S.stencils);
  for (int a = 0; a < 2 * N; ++a) {
    S.axis.push_back(lat.stride[a]);
    S.axis.push_back(-lat.stride[a]);
  }

  const std::size_t n = d.grid.size();
  S.V = d.V;
  S.Phi.assign(n, 0.0);
  S.argmin.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (d.grid.mask[i] == NodeTag::boundary) S.Phi[i] = d.phi_b[i];
    else S.Phi[i] = initial_phi ? (*initial_phi)[i] : P.boundary_data(d.grid.z(i));
  }

  double omega = opt.relaxation > 0.0 ? opt.relaxation : auto_relaxation<N>(lat);
  const double tol = opt.tol_fix * P.domain.scale();
  const auto colors_int = detail::color_classes<N>(lat, d.interior);
  const auto colors_core = detail::color_classes<N>(lat, d.excised);

  SolveReport<N> rep;
  rep.backend = Backend::envelope;
  const int rescan = std::max(1, opt.rescan_interval);
  double update = std::numeric_limits<double>::infinity();
  double best_full = std::numeric_limits<double>::infinity();
  std::vector<double> best_phi;
  int sweep = 0;
  for (; sweep < opt.max_sweeps; ++sweep) {
    const bool full = sweep % rescan == 0;
    double upd = 0.0;
    for (std::size_t c = 0; c < colors_int.size(); ++c) {
      const auto& nodes = colors_int[c];
      const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(nodes.size());
#pragma omp parallel for num_threads(threads) reduction(max : upd) schedule(static) if (threads > 1)
      for (std::ptrdiff_t k = 0; k < m; ++k) {
        const std::size_t p = nodes[static_cast<std::size_t>(k)];
        const double diff = S.candidate(p, full) - S.Phi[p];
        upd = std::max(upd, std::abs(diff));
        S.Phi[p] += omega * diff;
      }
      const auto& core = colors_core[c];
      const std::ptrdiff_t mc = static_cast<std::ptrdiff_t>(core.size());
#pragma omp parallel for num_threads(threads) reduction(max : upd) schedule(static) if (threads > 1)
      for (std::ptrdiff_t k = 0; k < mc; ++k) {
        const std::size_t p = core[static_cast<std::size_t>(k)];
        const double diff = S.core_candidate(p) - S.Phi[p];
        upd = std::max(upd, std::abs(diff));
        S.Phi[p] += omega * diff;
      }
    }
    update = upd;
    if (full) {
      if (update < tol) {
        ++sweep;
        rep.converged = true;
        break;
      }
      // growth well past the best full-scan update means over-relaxation is
      // fighting direction switches: restore the best iterate and back off
      // towards plain Gauss–Seidel, which is monotone and always converges
      const bool grew = !std::isfinite(update) || update > 4.0 * best_full;
      if (grew && omega <= 1.0 && !std::isfinite(update)) break;
      if (grew && omega > 1.0 && !best_phi.empty()) {
        S.Phi = best_phi;
        omega = omega > 1.05 ? 1.0 + 0.5 * (omega - 1.0) : 1.0;
      } else if (update < best_full) {
        best_full = update;
        if (omega > 1.0) best_phi = S.Phi;
      }
    }
  }

  rep.iterations = sweep;
  rep.last_update = update;
  std::vector<double> W(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < n; ++i)
    if (d.grid.mask[i] != NodeTag::excised) W[i] = d.V[i] + S.Phi[i];
  rep.phi = phi_from_working<N>(d, W);
  rep.phi_extended = S.Phi;
  rep.green = assemble_green<N>(P, rep.phi);
  for (std::size_t p : d.interior) {
    const double m = S.defect(p);
    rep.residual_max = std::max(rep.residual_max, std::max(m, 0.0));
    rep.psh_defect = std::max(rep.psh_defect, std::max(-m, 0.0));
  }
  if (!rep.converged)
    throw NonConvergence<N>("envelope sweeps exhausted (max_sweeps=" + std::to_string(opt.max_sweeps) + ")", rep);
  return rep;
}

}  // namespace plurigreen
