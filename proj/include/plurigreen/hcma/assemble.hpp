#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "plurigreen/core/grid.hpp"
#include "plurigreen/hcma/problem.hpp"

namespace plurigreen {

/// Node classification and analytic data shared by both backends.
template <int N>
struct Discretization {
  ComplexGrid<N> grid;             ///< mask with pole cores excised; values unused
  std::vector<double> V;           ///< local potential (NaN where it is singular)
  std::vector<double> phi_b;       ///< boundary data on boundary nodes (0 elsewhere)
  std::vector<std::size_t> interior, excised, boundary;

  static Discretization make(const GreenProblem<N>& P)
  {
    Discretization d;
    d.grid = ComplexGrid<N>(P.domain);
    const auto centers = P.singularities.centers();
    d.grid.excise(centers, P.effective_excision());
    const std::size_t n = d.grid.size();
    d.V.assign(n, std::numeric_limits<double>::quiet_NaN());
    d.phi_b.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto z = d.grid.z(i);
      bool at_pole = false;
      for (const auto& c : centers) at_pole = at_pole || (z - c).norm() == 0.0;
      if (!at_pole) d.V[i] = P.local_potential(z);
      switch (d.grid.mask[i]) {
        case NodeTag::interior: d.interior.push_back(i); break;
        case NodeTag::excised: d.excised.push_back(i); break;
        case NodeTag::boundary:
          d.boundary.push_back(i);
          d.phi_b[i] = P.boundary_data(z);
          if (!std::isfinite(d.phi_b[i])) throw InfeasibleProblem("boundary data not finite");
          break;
      }
    }
    return d;
  }
};

/// G = s + Φ - Σε_m off the excised cores; boundary nodes receive φ_b by assignment.
template <int N>
ComplexGrid<N> assemble_green(const GreenProblem<N>& P, const ComplexGrid<N>& phi)
{
  ComplexGrid<N> g = phi;
  const double total = P.singularities.total_epsilon();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto z = g.z(i);
    switch (g.mask[i]) {
      case NodeTag::excised: g.values[i] = std::numeric_limits<double>::quiet_NaN(); break;
      case NodeTag::boundary: g.values[i] = P.boundary_data(z); break;
      case NodeTag::interior: g.values[i] = glued_potential<N>(P.singularities, z) + phi.values[i] - total; break;
    }
  }
  return g;
}

/// Φ grid from the working field W = V + Φ: NaN on cores, φ_b on the boundary.
template <int N>
ComplexGrid<N> phi_from_working(const Discretization<N>& d, const std::vector<double>& W)
{
  ComplexGrid<N> phi = d.grid;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    switch (phi.mask[i]) {
      case NodeTag::excised: phi.values[i] = std::numeric_limits<double>::quiet_NaN(); break;
      case NodeTag::boundary: phi.values[i] = d.phi_b[i]; break;
      case NodeTag::interior: phi.values[i] = W[i] - d.V[i]; break;
    }
  }
  return phi;
}

}  // namespace plurigreen
