#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace plurigreen {

using cplx = std::complex<double>;

template <int N>
using CVector = Eigen::Matrix<cplx, N, 1>;

template <int N>
using CMatrix = Eigen::Matrix<cplx, N, N>;

using CMatrixX = Eigen::MatrixXcd;

/// Frobenius norm of H - H^*, used to check Hermitian symmetry.
template <class Derived>
double hermitian_defect(const Eigen::MatrixBase<Derived>& h)
{
  return (h - h.adjoint()).norm();
}

/// Result of a cyclic Jacobi sweep on a Hermitian matrix.
struct JacobiResult {
  std::vector<double> eigenvalues;  // ascending
  int sweeps = 0;
  bool converged = false;
};

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Each rotation first removes the phase of the pivot entry with a diagonal
/// unitary, then applies the real symmetric Jacobi rotation. Sweeps stop once
/// the off-diagonal Frobenius norm is below `rel_tol` times the Frobenius norm
/// of the input.
template <class Derived>
JacobiResult jacobi_eigenvalues(const Eigen::MatrixBase<Derived>& h_in, double rel_tol = 1e-12,
                                int max_sweeps = 60)
{
  CMatrixX a = h_in;
  const auto n = a.rows();
  JacobiResult out;
  // symmetrize away round-off so the rotations see an exactly Hermitian matrix
  a = 0.5 * (a + a.adjoint()).eval();
  const double scale = a.norm();

  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
  };

  if (scale == 0.0) {
    out.eigenvalues.assign(static_cast<std::size_t>(n), 0.0);
    out.converged = true;
    return out;
  }

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (off_norm() <= rel_tol * scale) {
      out.converged = true;
      break;
    }
    ++out.sweeps;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double b = std::abs(a(p, q));
        if (b <= std::numeric_limits<double>::min()) continue;
        const cplx phase = a(p, q) / b;  // e^{i phi}
        const double alpha = a(p, p).real();
        const double beta = a(q, q).real();
        const double theta = (beta - alpha) / (2.0 * b);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // U = diag(1, conj(phase)) * [[c, s], [-s, c]]
        const cplx upp = c, upq = s;
        const cplx uqp = -s * std::conj(phase), uqq = c * std::conj(phase);
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * upp + akq * uqp;
          a(k, q) = akp * upq + akq * uqq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(upp) * apk + std::conj(uqp) * aqk;
          a(q, k) = std::conj(upq) * apk + std::conj(uqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
      }
    }
  }
  if (!out.converged) out.converged = off_norm() <= rel_tol * scale;

  out.eigenvalues.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) out.eigenvalues[static_cast<std::size_t>(i)] = a(i, i).real();
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end());
  return out;
}

template <class Derived>
double min_eigenvalue(const Eigen::MatrixBase<Derived>& h)
{
  if (h.rows() == 1) return h(0, 0).real();
  if (h.rows() == 2) {
    // closed form agrees with one Jacobi rotation; kept for the hot loops
    const double a = h(0, 0).real(), d = h(1, 1).real();
    const double b = std::abs(h(0, 1));
    const double mean = 0.5 * (a + d);
    const double rad = std::hypot(0.5 * (a - d), b);
    return mean - rad;
  }
  return jacobi_eigenvalues(h).eigenvalues.front();
}

/// True iff the smallest eigenvalue of the Hermitian matrix exceeds `margin`.
template <class Derived>
bool is_positive(const Eigen::MatrixBase<Derived>& h, double margin = 0.0)
{
  return jacobi_eigenvalues(h).eigenvalues.front() > margin;
}

}  // namespace plurigreen
