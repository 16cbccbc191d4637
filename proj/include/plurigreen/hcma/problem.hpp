#pragma once

#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "plurigreen/core/domain.hpp"
#include "plurigreen/core/errors.hpp"
#include "plurigreen/core/grid.hpp"
#include "plurigreen/singularity/singularity.hpp"

namespace plurigreen {

enum class Backend { envelope, regularized };

inline std::string to_string(Backend b) { return b == Backend::envelope ? "envelope" : "regularized"; }

/// Envelope stencil family: lattice-aligned Gaussian-integer directions, or
/// K-point circles of radius h with multilinear interpolation.
enum class StencilKind { lattice, interpolated };

inline std::string to_string(StencilKind k) { return k == StencilKind::lattice ? "lattice" : "interpolated"; }

struct SolverOptions {
  // envelope backend
  StencilKind stencil = StencilKind::lattice;
  int lattice_width = 1;
  double tol_fix = 1e-8;        ///< sup-norm update tolerance, relative to the domain scale
  int max_sweeps = 100000;
  int directions = 0;           ///< interpolated stencils: 0 means 1 in C¹, 32 in C²
  int circle_samples = 8;
  double relaxation = 0.0;      ///< SOR factor; 0 picks 2/(1 + sin(π h / extent))
  int rescan_interval = 8;      ///< full direction scans every this many sweeps
  // regularized backend
  double t0 = 1.0;
  double t_ratio = 0.5;
  double t_min = 1e-3;
  int newton_max_iterations = 40;
  double newton_tol = 1e-9;     ///< sup-norm residual of det(H) - t det(H_ref), relative
  int max_halvings = 30;
  bool extrapolate = true;      ///< report the Richardson t -> 0 limit of the last two steps
  int threads = 0;              ///< 0: PLURIGREEN_THREADS or 1

  bool operator==(const SolverOptions&) const = default;
};

inline int resolve_threads(int requested)
{
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PLURIGREEN_THREADS")) {
    const int t = std::atoi(env);
    if (t >= 1) return t;
  }
  return 1;
}

template <int N>
struct GreenProblem {
  DomainSpec domain;
  BackgroundSpec background;
  SingularityData<N> singularities;
  std::function<double(const CVector<N>&)> boundary_data = [](const CVector<N>&) { return 0.0; };
  double delta = -1.0;            ///< weight in ω_δ; negative: max pole weight
  double excision_radius = -1.0;  ///< negative: 4h
  SolverOptions solver;

  double h() const { return Lattice<N>::from_domain(domain).h(); }
  double effective_delta() const { return delta >= 0.0 ? delta : singularities.max_epsilon(); }
  double effective_excision() const { return excision_radius >= 0.0 ? excision_radius : 4.0 * h(); }

  /// Local potential of the background plus the weighted glued singular terms.
  double local_potential(const CVector<N>& z) const
  {
    double v = background.potential<N>(z);
    for (const auto& p : singularities.poles) v += p.epsilon * glued_jet<N>(p, z, false).value;
    return v;
  }

  /// Coefficient matrix of ∂∂̄ of the local potential, by symbolic differentiation.
  CMatrix<N> local_form(const CVector<N>& z) const
  {
    CMatrix<N> h = background.base_form<N>(z);
    for (const auto& p : singularities.poles) h += p.epsilon * glued_jet<N>(p, z).ddbar;
    return h;
  }

  std::vector<std::string> violations() const
  {
    auto out = domain.violations();
    if (!out.empty()) return out;
    if (domain.dim != N) out.push_back("domain dimension mismatch");
    auto sv = singularities.violations(domain);
    out.insert(out.end(), sv.begin(), sv.end());
    const double ex = effective_excision();
    for (const auto& p : singularities.poles)
      if (!(ex < 0.5 * p.cutoff.r_in)) out.push_back("excision_radius must be < r_in/2");
    return out;
  }

  /// Checks the data invariants and δ against the feasibility search.
  void validate() const
  {
    const auto v = violations();
    if (!v.empty()) throw InfeasibleProblem(v.front());
    if (singularities.poles.empty()) return;
    const double d = effective_delta();
    if (!(d > 0.0)) throw InfeasibleProblem("delta must be > 0");
    FeasibilityOptions fo;
    fo.delta_hi = d;
    try {
      const double best = max_feasible_epsilon<N>(singularities, background, fo);
      if (best < d) throw InfeasibleProblem("delta exceeds the feasible range " + std::to_string(best));
    } catch (const InfeasibleBackground& e) {
      throw InfeasibleProblem(e.what());
    }
  }
};

template <int N>
struct SolveReport {
  Backend backend = Backend::envelope;
  ComplexGrid<N> phi;
  ComplexGrid<N> green;
  std::vector<double> phi_extended;  ///< Φ including the harmonic extension across pole cores
  double residual_max = 0.0;         ///< max of the positive part of the scheme's maximality defect
  double psh_defect = 0.0;           ///< max of the negative part (plurisubharmonicity violation)
                                     ///< of the final iterate
  int iterations = 0;
  bool converged = false;
  double last_update = 0.0;
  std::vector<std::pair<double, double>> c1_trace;
  double c2 = 0.0;
  std::vector<int> newton_iterations;  ///< per continuation step (regularized backend)
  double t_final = 0.0;
};

template <int N>
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, SolveReport<N> partial)
      : Error("no convergence: " + what), partial_(std::move(partial))
  {}
  const SolveReport<N>& partial() const { return partial_; }

 private:
  SolveReport<N> partial_;
};

class NewtonDivergence : public Error {
 public:
  NewtonDivergence(double t, const std::string& what)
      : Error("Newton divergence at t=" + std::to_string(t) + ": " + what), t_(t)
  {}
  double t() const { return t_; }

 private:
  double t_;
};

class PositivityLoss : public Error {
 public:
  explicit PositivityLoss(const std::string& what) : Error("positivity loss: " + what) {}
};

}  // namespace plurigreen
