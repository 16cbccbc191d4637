#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "plurigreen/core/domain.hpp"
#include "plurigreen/core/errors.hpp"
#include "plurigreen/core/hermitian.hpp"

namespace plurigreen {

enum class NodeTag : std::uint8_t { interior, boundary, excised };

/// Uniform tensor lattice over R^{2N}; real axes ordered (x1, y1, x2, y2).
/// Bounded domains use cell-centred nodes in [-R, R]; tori use nodes at i*L/n.
template <int N>
struct Lattice {
  static constexpr int axes = 2 * N;
  using Point = std::array<double, axes>;
  using Index = std::array<int, axes>;

  std::array<int, axes> count{};
  std::array<double, axes> origin{};
  std::array<double, axes> spacing{};
  std::array<bool, axes> periodic{};
  std::array<std::ptrdiff_t, axes> stride{};
  std::size_t size = 0;

  static Lattice from_domain(const DomainSpec& d)
  {
    d.validate();
    if (d.dim != N) throw InvalidInput("domain dimension does not match lattice dimension");
    Lattice lat;
    for (int a = 0; a < axes; ++a) {
      lat.count[a] = d.resolution;
      if (d.kind == DomainKind::torus) {
        lat.spacing[a] = d.period(a) / d.resolution;
        lat.origin[a] = 0.0;
        lat.periodic[a] = true;
      } else {
        const double half = d.scale();
        lat.spacing[a] = 2.0 * half / d.resolution;
        lat.origin[a] = -half + 0.5 * lat.spacing[a];
        lat.periodic[a] = false;
      }
    }
    lat.finish();
    return lat;
  }

  void finish()
  {
    std::ptrdiff_t s = 1;
    for (int a = axes - 1; a >= 0; --a) {
      stride[a] = s;
      s *= count[a];
    }
    size = static_cast<std::size_t>(s);
  }

  /// Largest spacing across axes; the "h" of the discretisation.
  double h() const { return *std::max_element(spacing.begin(), spacing.end()); }
  double cell_volume() const
  {
    double v = 1.0;
    for (double s : spacing) v *= s;
    return v;
  }

  Index unravel(std::size_t i) const
  {
    Index idx{};
    for (int a = 0; a < axes; ++a) {
      idx[a] = static_cast<int>(static_cast<std::ptrdiff_t>(i) / stride[a] % count[a]);
    }
    return idx;
  }

  std::size_t ravel(const Index& idx) const
  {
    std::ptrdiff_t i = 0;
    for (int a = 0; a < axes; ++a) i += idx[a] * stride[a];
    return static_cast<std::size_t>(i);
  }

  Point point(const Index& idx) const
  {
    Point p{};
    for (int a = 0; a < axes; ++a) p[a] = origin[a] + idx[a] * spacing[a];
    return p;
  }
  Point point(std::size_t i) const { return point(unravel(i)); }

  static CVector<N> to_complex(const Point& p)
  {
    CVector<N> z;
    for (int j = 0; j < N; ++j) z(j) = cplx(p[2 * j], p[2 * j + 1]);
    return z;
  }
  static Point to_real(const CVector<N>& z)
  {
    Point p{};
    for (int j = 0; j < N; ++j) {
      p[2 * j] = z(j).real();
      p[2 * j + 1] = z(j).imag();
    }
    return p;
  }
  CVector<N> z(std::size_t i) const { return to_complex(point(i)); }

  /// Node reached from `i` by an integer offset; wraps periodic axes, nullopt if off-lattice.
  std::optional<std::size_t> neighbor(std::size_t i, const Index& offset) const
  {
    Index idx = unravel(i);
    for (int a = 0; a < axes; ++a) {
      int k = idx[a] + offset[a];
      if (periodic[a]) {
        k %= count[a];
        if (k < 0) k += count[a];
      } else if (k < 0 || k >= count[a]) {
        return std::nullopt;
      }
      idx[a] = k;
    }
    return ravel(idx);
  }

  bool operator==(const Lattice&) const = default;
};

/// Scalar field sampled on a domain lattice with per-node tags.
template <int N>
struct ComplexGrid {
  DomainSpec domain;
  Lattice<N> lattice;
  std::vector<double> values;
  std::vector<NodeTag> mask;

  ComplexGrid() = default;

  /// Nodes at distance >= h from the boundary are interior; the rest carry Dirichlet data.
  explicit ComplexGrid(const DomainSpec& d) : domain(d), lattice(Lattice<N>::from_domain(d))
  {
    values.assign(lattice.size, 0.0);
    mask.assign(lattice.size, NodeTag::interior);
    const double h = lattice.h();
    for (std::size_t i = 0; i < lattice.size; ++i) {
      if (d.signed_distance(lattice.z(i)) < h) mask[i] = NodeTag::boundary;
    }
  }

  std::size_t size() const { return lattice.size; }
  CVector<N> z(std::size_t i) const { return lattice.z(i); }
  bool interior(std::size_t i) const { return mask[i] == NodeTag::interior; }

  /// Marks interior nodes within `radius` of any listed point as excised (value NaN).
  void excise(std::span<const CVector<N>> centers, double radius)
  {
    for (std::size_t i = 0; i < size(); ++i) {
      if (mask[i] != NodeTag::interior) continue;
      const auto zi = z(i);
      for (const auto& c : centers) {
        if ((zi - c).norm() < radius) {
          mask[i] = NodeTag::excised;
          values[i] = std::numeric_limits<double>::quiet_NaN();
          break;
        }
      }
    }
  }

  void fill(const std::function<double(const CVector<N>&)>& f)
  {
    for (std::size_t i = 0; i < size(); ++i)
      values[i] = mask[i] == NodeTag::excised ? std::numeric_limits<double>::quiet_NaN() : f(z(i));
  }

  template <class Pred>
  std::size_t count_if(Pred pred) const
  {
    std::size_t n = 0;
    for (std::size_t i = 0; i < size(); ++i)
      if (pred(mask[i])) ++n;
    return n;
  }
};

/// Per-node Hermitian coefficient matrices of a (1,1)-form.
template <int N>
struct HermitianField {
  DomainSpec domain;
  Lattice<N> lattice;
  std::vector<CMatrix<N>> matrices;

  HermitianField() = default;
  explicit HermitianField(const DomainSpec& d) : domain(d), lattice(Lattice<N>::from_domain(d))
  {
    matrices.assign(lattice.size, CMatrix<N>::Zero());
  }
  static HermitianField constant(const DomainSpec& d, const CMatrix<N>& m)
  {
    HermitianField f(d);
    std::fill(f.matrices.begin(), f.matrices.end(), m);
    return f;
  }
  void fill(const std::function<CMatrix<N>(const CVector<N>&)>& f)
  {
    for (std::size_t i = 0; i < lattice.size; ++i) matrices[i] = f(lattice.z(i));
  }
};

/// Multilinear interpolation weights of a point in lattice coordinates.
template <int N>
struct CellWeights {
  std::array<std::size_t, (1 << (2 * N))> nodes{};
  std::array<double, (1 << (2 * N))> weights{};
};

/// Multilinear interpolation cell containing `p`; nullopt if the cell leaves a non-periodic lattice.
template <int N>
std::optional<CellWeights<N>> interpolation_cell(const Lattice<N>& lat, const typename Lattice<N>::Point& p)
{
  constexpr int axes = 2 * N;
  std::array<int, axes> base{};
  std::array<double, axes> frac{};
  for (int a = 0; a < axes; ++a) {
    const double g = (p[a] - lat.origin[a]) / lat.spacing[a];
    double fl = std::floor(g);
    double t = g - fl;
    // snap values within round-off of a node so that on-node samples use a single corner
    if (t > 1.0 - 1e-12) {
      fl += 1.0;
      t = 0.0;
    } else if (t < 1e-12) {
      t = 0.0;
    }
    base[a] = static_cast<int>(fl);
    frac[a] = t;
    if (!lat.periodic[a]) {
      if (base[a] < 0 || base[a] >= lat.count[a]) return std::nullopt;
      if (t > 0.0 && base[a] + 1 >= lat.count[a]) return std::nullopt;
    }
  }
  CellWeights<N> cw;
  for (int corner = 0; corner < (1 << axes); ++corner) {
    typename Lattice<N>::Index idx{};
    double w = 1.0;
    for (int a = 0; a < axes; ++a) {
      const int bit = (corner >> a) & 1;
      w *= bit ? frac[a] : 1.0 - frac[a];
      int k = base[a] + bit;
      if (lat.periodic[a]) {
        k %= lat.count[a];
        if (k < 0) k += lat.count[a];
      }
      idx[a] = k;
    }
    cw.weights[corner] = w;
    cw.nodes[corner] = (w == 0.0) ? lat.ravel(std::array<int, axes>{}) : lat.ravel(idx);
  }
  return cw;
}

/// Interpolated value of a lattice field; throws StencilOutOfDomain when a
/// contributing node is outside the lattice or excised.
template <int N>
double interpolate(const Lattice<N>& lat, std::span<const double> values, std::span<const NodeTag> mask,
                   const typename Lattice<N>::Point& p)
{
  const auto cell = interpolation_cell(lat, p);
  if (!cell) throw StencilOutOfDomain("interpolation point outside lattice");
  double v = 0.0;
  for (std::size_t c = 0; c < cell->weights.size(); ++c) {
    const double w = cell->weights[c];
    if (w == 0.0) continue;
    if (!mask.empty() && mask[cell->nodes[c]] == NodeTag::excised)
      throw StencilOutOfDomain("interpolation touches an excised node");
    v += w * values[cell->nodes[c]];
  }
  return v;
}

template <int N>
double interpolate(const ComplexGrid<N>& g, const CVector<N>& z)
{
  return interpolate<N>(g.lattice, g.values, g.mask, Lattice<N>::to_real(z));
}

}  // namespace plurigreen
