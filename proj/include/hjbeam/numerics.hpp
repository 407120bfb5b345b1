#pragma once

// Dense complex linear-algebra kernel shared by every optimization module:
// row-major vectorization, Kronecker products, Hermitian eigendecomposition,
// the complex-to-real PSD embedding used by the SDP layer, and tolerance-based
// rank. All functions are pure; matrices are plain Eigen values.

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace hjbeam {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const CMatrix& m, double rel_tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  const double scale = max_abs(m);
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * std::max(scale, 1e-300);
}

inline CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

// vec stacks the rows of M on top of one another (row-major). With this
// convention vec(A X B) = (A kron B^T) vec(X) and vec(a b^T) = a kron b.
inline CVector vec(const CMatrix& m) {
  CVector v(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  return v;
}

inline CMatrix unvec(const CVector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols)
    throw std::invalid_argument("unvec: length does not match rows*cols");
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v(i * cols + j);
  return m;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// [[Re H, -Im H],[Im H, Re H]]; H >= 0 iff the embedding is, each eigenvalue
// shows up twice and traces double (callers own the 1/2 factor).
inline RMatrix real_embed(const CMatrix& h, double herm_tol = 1e-12) {
  if (!is_hermitian(h, herm_tol))
    throw std::invalid_argument("real_embed: input is not Hermitian");
  const Eigen::Index d = h.rows();
  RMatrix s(2 * d, 2 * d);
  s.topLeftCorner(d, d) = h.real();
  s.bottomRightCorner(d, d) = h.real();
  s.topRightCorner(d, d) = -h.imag();
  s.bottomLeftCorner(d, d) = h.imag();
  return s;
}

// Averaged inverse of real_embed; exact on structured inputs, projects
// otherwise (used to read Hermitian duals back out of the real cone).
inline CMatrix complex_from_embed(const RMatrix& s) {
  const Eigen::Index d = s.rows() / 2;
  if (s.rows() != 2 * d || s.cols() != 2 * d)
    throw std::invalid_argument("complex_from_embed: odd dimension");
  RMatrix re = 0.5 * (s.topLeftCorner(d, d) + s.bottomRightCorner(d, d));
  RMatrix im = 0.5 * (s.bottomLeftCorner(d, d) - s.topRightCorner(d, d));
  CMatrix h = re.cast<cd>() + cd(0, 1) * im.cast<cd>();
  return hermitian_part(h);
}

struct Eigh {
  RVector values;   // ascending
  CMatrix vectors;  // columns, orthonormal
};

inline Eigh eigh(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigh: failed to converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

// Number of eigenvalues above tol * lambda_max; intended for PSD inputs.
inline int rank_eps(const CMatrix& h, double tol = 1e-6) {
  if (h.size() == 0) return 0;
  const RVector ev = eigh(h).values;
  const double lmax = ev.cwiseAbs().maxCoeff();
  if (lmax <= 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > tol * lmax) ++r;
  return r;
}

// Magnitude-based rank for possibly indefinite Hermitian matrices.
inline int rank_abs(const CMatrix& h, double tol = 1e-6) {
  if (h.size() == 0) return 0;
  const RVector ev = eigh(h).values;
  const double lmax = ev.cwiseAbs().maxCoeff();
  if (lmax == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (std::abs(ev(i)) > tol * lmax) ++r;
  return r;
}

// Orthonormal basis of the numerical null space (|lambda| <= tol*|lambda|max).
inline CMatrix nullspace_basis(const CMatrix& h, double tol = 1e-6) {
  const Eigh e = eigh(h);
  const double lmax = e.values.size() ? e.values.cwiseAbs().maxCoeff() : 0.0;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < e.values.size(); ++i)
    if (std::abs(e.values(i)) <= tol * std::max(lmax, 1e-300)) keep.push_back(i);
  CMatrix basis(h.rows(), static_cast<Eigen::Index>(keep.size()));
  for (size_t c = 0; c < keep.size(); ++c) basis.col(c) = e.vectors.col(keep[c]);
  return basis;
}

// Orthonormal basis of the null space of span{v}^T, i.e. columns V with
// v^T V = 0, from the Hermitian projector I - v* v^T / ||v||^2.
inline CMatrix nullspace_of_row(const CVector& v, double tol = 1e-9) {
  const Eigen::Index n = v.size();
  const double nrm2 = v.squaredNorm();
  if (nrm2 == 0.0) return CMatrix::Identity(n, n);
  CMatrix proj = CMatrix::Identity(n, n) - v.conjugate() * v.transpose() / nrm2;
  const Eigh e = eigh(proj);
  CMatrix basis(n, n - 1);
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < n && c < n - 1; ++i)
    if (e.values(i) > 1.0 - 1e-6) basis.col(c++) = e.vectors.col(i);
  if (c != n - 1) throw std::runtime_error("nullspace_of_row: projector rank unexpected");
  (void)tol;
  return basis;
}

}  // namespace hjbeam
