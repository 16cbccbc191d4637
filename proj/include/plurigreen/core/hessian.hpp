#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "plurigreen/core/errors.hpp"
#include "plurigreen/core/grid.hpp"
#include "plurigreen/core/hermitian.hpp"

namespace plurigreen {

/// Coefficient matrix of ∂∂̄ from a real Hessian in coordinates (x1, y1, ..., xN, yN).
template <int N>
CMatrix<N> complex_from_real_hessian(const std::array<std::array<double, 2 * N>, 2 * N>& d)
{
  CMatrix<N> h;
  for (int j = 0; j < N; ++j) {
    for (int k = 0; k < N; ++k) {
      const int xj = 2 * j, yj = 2 * j + 1, xk = 2 * k, yk = 2 * k + 1;
      h(j, k) = 0.25 * cplx(d[xj][xk] + d[yj][yk], d[xj][yk] - d[yj][xk]);
    }
  }
  return h;
}

/// Centered-difference complex Hessian of a callable at `z` with step `h`.
template <int N, class F>
CMatrix<N> fd_complex_hessian(F&& f, const CVector<N>& z, double h)
{
  constexpr int axes = 2 * N;
  auto at = [&](int a, int sa, int b, int sb) {
    auto p = Lattice<N>::to_real(z);
    if (a >= 0) p[a] += sa * h;
    if (b >= 0) p[b] += sb * h;
    return f(Lattice<N>::to_complex(p));
  };
  std::array<std::array<double, axes>, axes> d{};
  const double f0 = at(-1, 0, -1, 0);
  for (int a = 0; a < axes; ++a) {
    d[a][a] = (at(a, 1, -1, 0) - 2.0 * f0 + at(a, -1, -1, 0)) / (h * h);
    for (int b = a + 1; b < axes; ++b) {
      d[a][b] = d[b][a] =
          (at(a, 1, b, 1) - at(a, 1, b, -1) - at(a, -1, b, 1) + at(a, -1, b, -1)) / (4.0 * h * h);
    }
  }
  return complex_from_real_hessian<N>(d);
}

namespace detail {

template <int N>
double stencil_value(const Lattice<N>& lat, std::span<const double> values, std::span<const NodeTag> mask,
                     std::size_t p, const typename Lattice<N>::Index& off)
{
  const auto q = lat.neighbor(p, off);
  if (!q) throw StencilOutOfDomain("stencil leaves the lattice");
  if (!mask.empty() && mask[*q] == NodeTag::excised) throw StencilOutOfDomain("stencil touches an excised node");
  return values[*q];
}

}  // namespace detail

/// Second-order centered-difference ∂²u/∂z_j∂z̄_k at node `p`; exact on quadratics.
template <int N>
CMatrix<N> complex_hessian(const Lattice<N>& lat, std::span<const double> values, std::span<const NodeTag> mask,
                           std::size_t p)
{
  constexpr int axes = 2 * N;
  using Index = typename Lattice<N>::Index;
  auto at = [&](int a, int sa, int b, int sb) {
    Index off{};
    if (a >= 0) off[a] += sa;
    if (b >= 0) off[b] += sb;
    return detail::stencil_value(lat, values, mask, p, off);
  };
  std::array<std::array<double, axes>, axes> d{};
  const double f0 = values[p];
  if (!std::isfinite(f0)) throw StencilOutOfDomain("center value not finite");
  for (int a = 0; a < axes; ++a) {
    const double ha = lat.spacing[a];
    d[a][a] = (at(a, 1, -1, 0) - 2.0 * f0 + at(a, -1, -1, 0)) / (ha * ha);
    for (int b = a + 1; b < axes; ++b) {
      const double hb = lat.spacing[b];
      d[a][b] = d[b][a] =
          (at(a, 1, b, 1) - at(a, 1, b, -1) - at(a, -1, b, 1) + at(a, -1, b, -1)) / (4.0 * ha * hb);
    }
  }
  return complex_from_real_hessian<N>(d);
}

template <int N>
CMatrix<N> complex_hessian(const ComplexGrid<N>& u, std::size_t p)
{
  return complex_hessian<N>(u.lattice, u.values, u.mask, p);
}

/// Default complex direction set: {1} in C¹; in C² a Fibonacci point set on the
/// sphere pulled back to unit vectors by the Hopf map (one vector per complex line).
template <int N>
std::vector<CVector<N>> default_directions(int count = N == 1 ? 1 : 32)
{
  std::vector<CVector<N>> out;
  if constexpr (N == 1) {
    out.push_back(CVector<1>::Constant(cplx(1.0, 0.0)));
  } else {
    if (count < 1) throw InvalidInput("direction count must be >= 1");
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double zc = count == 1 ? 1.0 : 1.0 - 2.0 * (i + 0.5) / count;
      const double alpha = std::acos(std::clamp(zc, -1.0, 1.0));
      const double beta = golden * i;
      CVector<2> v;
      v(0) = std::cos(0.5 * alpha);
      v(1) = std::sin(0.5 * alpha) * std::polar(1.0, beta);
      out.push_back(v);
    }
  }
  return out;
}

/// Merged lattice stencil of the circle-mean operator in one complex direction.
///
/// L_v u(p) = scale * (sum_q w_q u(p + o_q) - (1 - w_c) u(p)), with the
/// off-center weights w_q and the center weight w_c summing to one.
template <int N>
struct DirectionStencil {
  CVector<N> direction;
  std::vector<typename Lattice<N>::Index> offsets;
  std::vector<std::ptrdiff_t> linear;  // offsets flattened for non-periodic lattices
  std::vector<double> weights;
  double center = 0.0;
  double scale = 0.0;
  bool monotone = true;

  double apply(std::span<const double> values, std::size_t p) const
  {
    double s = 0.0;
    for (std::size_t q = 0; q < linear.size(); ++q)
      s += weights[q] * values[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + linear[q])];
    return scale * (s - (1.0 - center) * values[p]);
  }
};

struct DirectionOptions {
  int samples = 8;               ///< circle quadrature points K
  bool quadratic_correction = true;  ///< remove the multilinear-interpolation bias on quadratics
};

/// Builds the stencil for direction `v` with sample radius h = lattice.h().
template <int N>
DirectionStencil<N> make_direction_stencil(const Lattice<N>& lat, const CVector<N>& v_in,
                                           const DirectionOptions& opt = {})
{
  constexpr int axes = 2 * N;
  using Index = typename Lattice<N>::Index;
  if (opt.samples < 3) throw InvalidInput("circle quadrature needs at least 3 samples");
  const double vn = v_in.norm();
  if (!(vn > 0)) throw InvalidInput("zero direction");
  const CVector<N> v = v_in / vn;
  const double h = lat.h();

  std::map<Index, double> acc;
  std::array<double, axes> m{};
  const double wk = 1.0 / opt.samples;
  for (int k = 0; k < opt.samples; ++k) {
    const cplx e = std::polar(h, 2.0 * std::numbers::pi * k / opt.samples);
    std::array<double, axes> g{};
    for (int j = 0; j < N; ++j) {
      const cplx c = e * v(j);
      g[2 * j] = c.real() / lat.spacing[2 * j];
      g[2 * j + 1] = c.imag() / lat.spacing[2 * j + 1];
    }
    std::array<int, axes> base{};
    std::array<double, axes> frac{};
    for (int a = 0; a < axes; ++a) {
      double fl = std::floor(g[a]);
      double t = g[a] - fl;
      if (t > 1.0 - 1e-12) {
        fl += 1.0;
        t = 0.0;
      } else if (t < 1e-12) {
        t = 0.0;
      }
      base[a] = static_cast<int>(fl);
      frac[a] = t;
      m[a] += wk * t * (1.0 - t);
    }
    for (int corner = 0; corner < (1 << axes); ++corner) {
      Index off{};
      double w = wk;
      for (int a = 0; a < axes; ++a) {
        const int bit = (corner >> a) & 1;
        w *= bit ? frac[a] : 1.0 - frac[a];
        off[a] = base[a] + bit;
      }
      if (w != 0.0) acc[off] += w;
    }
  }
  if (opt.quadratic_correction) {
    // multilinear interpolation of x_a^2 overshoots by h_a^2 t(1-t); subtract the
    // matching multiple of the axis second difference
    for (int a = 0; a < axes; ++a) {
      if (m[a] == 0.0) continue;
      Index plus{}, minus{};
      plus[a] = 1;
      minus[a] = -1;
      acc[plus] -= 0.5 * m[a];
      acc[minus] -= 0.5 * m[a];
      acc[Index{}] += m[a];
    }
  }

  DirectionStencil<N> st;
  st.direction = v;
  st.scale = 4.0 / (h * h);
  for (const auto& [off, w] : acc) {
    if (off == Index{}) {
      st.center = w;
      continue;
    }
    if (std::abs(w) < 1e-15) continue;
    if (w < 0.0) st.monotone = false;
    st.offsets.push_back(off);
    std::ptrdiff_t lin = 0;
    for (int a = 0; a < axes; ++a) lin += off[a] * lat.stride[a];
    st.linear.push_back(lin);
    st.weights.push_back(w);
  }
  return st;
}

template <int N>
std::vector<DirectionStencil<N>> make_direction_stencils(const Lattice<N>& lat, std::span<const CVector<N>> dirs,
                                                         const DirectionOptions& opt = {})
{
  if (dirs.empty()) throw InvalidInput("direction list is empty");
  std::vector<DirectionStencil<N>> out;
  out.reserve(dirs.size());
  for (const auto& v : dirs) out.push_back(make_direction_stencil<N>(lat, v, opt));
  return out;
}

/// Lattice-aligned direction stencils: one per complex line spanned by a
/// Gaussian-integer vector with real and imaginary parts in [-width, width].
/// Samples p ± r v and p ± i r v land on nodes, so no interpolation is needed;
/// the four-point circle mean is exact on quadratics.
template <int N>
std::vector<DirectionStencil<N>> lattice_direction_stencils(const Lattice<N>& lat, int width = 1)
{
  constexpr int axes = 2 * N;
  using Index = typename Lattice<N>::Index;
  if (width < 1) throw InvalidInput("lattice stencil width must be >= 1");
  for (int a = 1; a < axes; ++a)
    if (std::abs(lat.spacing[a] - lat.spacing[0]) > 1e-12 * lat.spacing[0])
      throw InvalidInput("lattice direction stencils need equal spacing on all axes");
  const double h = lat.spacing[0];
  std::vector<Index> vecs;
  // enumerate integer offsets (real coordinates) and keep one shortest vector per complex line
  Index cur{};
  const int side = 2 * width + 1;
  int total = 1;
  for (int a = 0; a < axes; ++a) total *= side;
  std::vector<std::pair<double, Index>> cand;
  for (int code = 0; code < total; ++code) {
    int c = code;
    double norm2 = 0.0;
    for (int a = 0; a < axes; ++a) {
      cur[a] = c % side - width;
      c /= side;
      norm2 += cur[a] * cur[a];
    }
    if (norm2 == 0.0) continue;
    cand.emplace_back(norm2, cur);
  }
  std::stable_sort(cand.begin(), cand.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  auto to_c = [](const Index& o) {
    CVector<N> v;
    for (int j = 0; j < N; ++j) v(j) = cplx(o[2 * j], o[2 * j + 1]);
    return v;
  };
  std::vector<CVector<N>> lines;
  std::vector<DirectionStencil<N>> out;
  for (const auto& [n2, off] : cand) {
    const CVector<N> v = to_c(off);
    bool seen = false;
    for (const auto& w : lines) {
      // same complex line iff |<w, v>| = |w||v|
      if (std::abs(std::abs(w.dot(v)) - w.norm() * v.norm()) < 1e-9 * n2) {
        seen = true;
        break;
      }
    }
    if (seen) continue;
    lines.push_back(v);
    DirectionStencil<N> st;
    st.direction = v / v.norm();
    st.scale = 4.0 / (n2 * h * h);
    const CVector<N> iv = cplx(0.0, 1.0) * v;
    Index o1{}, o2{};
    for (int j = 0; j < N; ++j) {
      o1[2 * j] = off[2 * j];
      o1[2 * j + 1] = off[2 * j + 1];
      o2[2 * j] = static_cast<int>(std::lround(iv(j).real()));
      o2[2 * j + 1] = static_cast<int>(std::lround(iv(j).imag()));
    }
    for (const Index& o : {o1, o2}) {
      Index m{};
      for (int a = 0; a < axes; ++a) m[a] = -o[a];
      for (const Index& q : {o, m}) {
        st.offsets.push_back(q);
        std::ptrdiff_t lin = 0;
        for (int a = 0; a < axes; ++a) lin += q[a] * lat.stride[a];
        st.linear.push_back(lin);
        st.weights.push_back(0.25);
      }
    }
    out.push_back(std::move(st));
  }
  return out;
}

/// Value of one direction stencil at node `p`, resolving offsets with wrap/mask checks.
template <int N>
double apply_checked(const DirectionStencil<N>& st, const Lattice<N>& lat, std::span<const double> values,
                     std::span<const NodeTag> mask, std::size_t p)
{
  double s = 0.0;
  for (std::size_t q = 0; q < st.offsets.size(); ++q)
    s += st.weights[q] * detail::stencil_value(lat, values, mask, p, st.offsets[q]);
  return st.scale * (s - (1.0 - st.center) * values[p]);
}

/// min over directions of the scaled circle-mean defect; approximates 4 min_v v*(∂∂̄u)v.
template <int N>
double min_direction_laplacian(const ComplexGrid<N>& u, std::size_t p, std::span<const CVector<N>> dirs,
                               const DirectionOptions& opt = {})
{
  const auto stencils = make_direction_stencils<N>(u.lattice, dirs, opt);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& st : stencils) best = std::min(best, apply_checked(st, u.lattice, u.values, u.mask, p));
  return best;
}

template <int N>
double min_direction_laplacian(const ComplexGrid<N>& u, std::size_t p,
                               std::span<const DirectionStencil<N>> stencils)
{
  double best = std::numeric_limits<double>::infinity();
  for (const auto& st : stencils) best = std::min(best, apply_checked(st, u.lattice, u.values, u.mask, p));
  return best;
}

}  // namespace plurigreen
