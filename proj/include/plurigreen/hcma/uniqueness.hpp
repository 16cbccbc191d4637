#pragma once

#include <algorithm>
#include <cmath>

#include "plurigreen/hcma/envelope.hpp"
#include "plurigreen/hcma/regularized.hpp"

namespace plurigreen {

/// Sup-norm gap between two assembled Green grids on the nodes both leave finite.
template <int N>
double green_discrepancy(const SolveReport<N>& a, const SolveReport<N>& b)
{
  if (a.green.size() != b.green.size()) throw InvalidInput("reports live on different grids");
  double gap = 0.0;
  for (std::size_t i = 0; i < a.green.size(); ++i) {
    if (a.green.mask[i] == NodeTag::excised || b.green.mask[i] == NodeTag::excised) continue;
    gap = std::max(gap, std::abs(a.green.values[i] - b.green.values[i]));
  }
  return gap;
}

/// Solves P with both backends and returns the sup-norm discrepancy of G.
template <int N>
double uniqueness_check(const GreenProblem<N>& P)
{
  const auto env = solve_envelope<N>(P);
  const auto reg = solve_regularized<N>(P);
  return green_discrepancy<N>(env, reg);
}

}  // namespace plurigreen
