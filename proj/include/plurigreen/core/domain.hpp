#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "plurigreen/core/errors.hpp"
#include "plurigreen/core/hermitian.hpp"

namespace plurigreen {

enum class DomainKind { disk, annulus, ball, polydisk, torus };

inline std::string to_string(DomainKind k)
{
  switch (k) {
    case DomainKind::disk: return "disk";
    case DomainKind::annulus: return "annulus";
    case DomainKind::ball: return "ball";
    case DomainKind::polydisk: return "polydisk";
    case DomainKind::torus: return "torus";
  }
  return "?";
}

inline std::optional<DomainKind> domain_kind_from_string(const std::string& s)
{
  if (s == "disk") return DomainKind::disk;
  if (s == "annulus") return DomainKind::annulus;
  if (s == "ball") return DomainKind::ball;
  if (s == "polydisk") return DomainKind::polydisk;
  if (s == "torus") return DomainKind::torus;
  return std::nullopt;
}

/// Geometry of a computational domain in C^1 or C^2, centered at the origin.
///
/// disk/ball: radii = {R}; annulus: radii = {r_inner, r_outer};
/// polydisk: radii = {R1, R2}; torus: periods per real axis (one value is
/// broadcast to every axis), fundamental cell [0, L).
struct DomainSpec {
  DomainKind kind = DomainKind::disk;
  int dim = 1;
  std::vector<double> radii{1.0};
  std::vector<double> periods{};
  int resolution = 64;

  bool strongly_pseudoconvex() const { return kind == DomainKind::disk || kind == DomainKind::ball; }
  bool boundaryless() const { return kind == DomainKind::torus; }

  double period(int axis) const { return periods.size() == 1 ? periods[0] : periods.at(static_cast<std::size_t>(axis)); }

  /// Half-width of the bounding box (bounded kinds) or largest period (torus).
  double scale() const
  {
    if (kind == DomainKind::torus) return *std::max_element(periods.begin(), periods.end());
    return *std::max_element(radii.begin(), radii.end());
  }

  /// Collects every violated constraint; empty when valid.
  std::vector<std::string> violations() const
  {
    std::vector<std::string> out;
    const bool c1_kind = kind == DomainKind::disk || kind == DomainKind::annulus;
    const bool c2_kind = kind == DomainKind::ball || kind == DomainKind::polydisk;
    if (dim != 1 && dim != 2) out.push_back("dim must be 1 or 2");
    if (c1_kind && dim != 1) out.push_back(to_string(kind) + " requires dim 1");
    if (c2_kind && dim != 2) out.push_back(to_string(kind) + " requires dim 2");
    if (resolution < 16) out.push_back("resolution must be >= 16");
    auto need_radii = [&](std::size_t n) {
      if (radii.size() != n) out.push_back(to_string(kind) + " needs " + std::to_string(n) + " radii");
      for (double r : radii)
        if (!(r > 0) || !std::isfinite(r)) out.push_back("radii must be positive");
    };
    switch (kind) {
      case DomainKind::disk:
      case DomainKind::ball: need_radii(1); break;
      case DomainKind::annulus:
        need_radii(2);
        if (radii.size() == 2 && !(radii[0] < radii[1])) out.push_back("annulus needs r_inner < r_outer");
        break;
      case DomainKind::polydisk: need_radii(2); break;
      case DomainKind::torus:
        if (periods.size() != 1 && periods.size() != static_cast<std::size_t>(2 * dim))
          out.push_back("torus needs 1 or 2*dim periods");
        for (double p : periods)
          if (!(p > 0) || !std::isfinite(p)) out.push_back("periods must be positive");
        break;
    }
    return out;
  }

  void validate() const
  {
    const auto v = violations();
    if (!v.empty()) throw InvalidInput("domain: " + v.front());
  }

  /// Distance from a point to the boundary (positive inside, negative outside).
  template <int N>
  double signed_distance(const CVector<N>& z) const
  {
    switch (kind) {
      case DomainKind::disk:
      case DomainKind::ball: return radii[0] - z.norm();
      case DomainKind::annulus: {
        const double r = z.norm();
        return std::min(r - radii[0], radii[1] - r);
      }
      case DomainKind::polydisk: {
        double d = std::numeric_limits<double>::infinity();
        for (int j = 0; j < N; ++j) d = std::min(d, radii[static_cast<std::size_t>(j)] - std::abs(z(j)));
        return d;
      }
      case DomainKind::torus: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
  }

  bool operator==(const DomainSpec&) const = default;
};

}  // namespace plurigreen
