#pragma once

// Primal-dual interior-point method for the problems built by SdpProblem.
// Internal form after lowering (max sense):
//
//   max g'u   s.t.  M_j(u) = C_j0 + sum_i u_i A_ji  PSD for every block j,
//                   E u = f
//
// where u collects every scalar parameter (matrix-variable entries, scalars,
// and nothing else: LMI slack blocks are eliminated structurally). HKM
// direction with Mehrotra predictor-corrector; the Schur system is over the
// parameters, so chain LMIs stay cheap. Ruiz-style equilibration handles the
// wide dynamic range of the physical data. Infeasible/unbounded statuses are
// only reported together with a Farkas/ray certificate within feas_tol.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <vector>

#include "hjbeam/numerics.hpp"

namespace hjbeam {

class SdpProblem;
struct SdpSolution;
struct SdpSettings;

namespace ipm {

struct Triplet {
  int r = 0, c = 0;
  double v = 0.0;
};

using Triplets = std::vector<Triplet>;

inline void add_scaled(RMatrix& m, const Triplets& t, double s) {
  for (const auto& e : t) m(e.r, e.c) += s * e.v;
}
inline double dot(const Triplets& t, const RMatrix& m) {
  double acc = 0.0;
  for (const auto& e : t) acc += e.v * m(e.r, e.c);
  return acc;
}
inline double max_abs(const Triplets& t) {
  double m = 0.0;
  for (const auto& e : t) m = std::max(m, std::abs(e.v));
  return m;
}

inline Triplets dense_to_triplets(const RMatrix& m) {
  Triplets t;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) t.push_back({static_cast<int>(i), static_cast<int>(j), m(i, j)});
  return t;
}

// real_embed without the Hermitian check (inputs already symmetrized).
inline RMatrix embed(const CMatrix& h) {
  const Eigen::Index d = h.rows();
  RMatrix s(2 * d, 2 * d);
  s.topLeftCorner(d, d) = h.real();
  s.bottomRightCorner(d, d) = h.real();
  s.topRightCorner(d, d) = -h.imag();
  s.bottomLeftCorner(d, d) = h.imag();
  return s;
}

struct LBlock {
  int dim = 0;
  RMatrix C0;
  std::vector<int> params;
  std::vector<Triplets> A;
};

using LdMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

inline LdMatrix to_ld(const RMatrix& m) { return m.cast<long double>(); }
inline RMatrix to_d(const LdMatrix& m) { return m.cast<double>(); }

// Inverse of an SPD matrix computed in long double (conditioning near the
// central-path tail exceeds double's range).
inline bool spd_inverse_ld(const RMatrix& z, LdMatrix& zinv) {
  const int n = static_cast<int>(z.rows());
  LdMatrix a = to_ld(z);
  Eigen::LLT<LdMatrix> llt(a);
  if (llt.info() != Eigen::Success) return false;
  zinv = llt.solve(LdMatrix::Identity(n, n));
  return true;
}

// Dense Cholesky in long double; the Schur system's conditioning grows like
// 1/mu^2 near the solution, so the extra mantissa bits directly lower the
// attainable residual floor.
class LdChol {
 public:
  bool compute(const RMatrix& m, double ridge) {
    n_ = static_cast<int>(m.rows());
    a_.assign(static_cast<size_t>(n_) * n_, 0.0L);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) a_[i * n_ + j] = m(i, j);
    // the ridge only stabilizes the factorization; refinement in solve()
    // targets the unridged system so no bias is injected
    l_ = a_;
    for (int i = 0; i < n_; ++i) l_[i * n_ + i] += ridge;
    for (int c = 0; c < n_; ++c) {
      long double d = l_[c * n_ + c];
      for (int k = 0; k < c; ++k) d -= l_[c * n_ + k] * l_[c * n_ + k];

      if (d <= 0.0L) return false;
      const long double s = sqrtl(d);
      l_[c * n_ + c] = s;
      for (int r = c + 1; r < n_; ++r) {
        long double v = l_[r * n_ + c];
        for (int k = 0; k < c; ++k) v -= l_[r * n_ + k] * l_[c * n_ + k];
        l_[r * n_ + c] = v / s;
      }
    }
    return true;
  }

  RVector solve(const RVector& b) const {
    std::vector<long double> x(b.size());
    for (int i = 0; i < n_; ++i) x[i] = b(i);
    solve_ld(x);
    std::vector<long double> r(n_), best = x;
    long double best_rn = residual_norm(b, x, r);
    for (int round = 0; round < 3; ++round) {
      std::vector<long double> c = r;
      solve_ld(c);
      for (int i = 0; i < n_; ++i) x[i] += c[i];
      const long double rn = residual_norm(b, x, r);
      if (rn >= best_rn) break;  // ridge/lambda_min > 1: refinement diverges
      best_rn = rn;
      best = x;
    }
    RVector out(n_);
    for (int i = 0; i < n_; ++i) out(i) = static_cast<double>(best[i]);
    return out;
  }

 private:
  long double residual_norm(const RVector& b, const std::vector<long double>& x,
                            std::vector<long double>& r) const {
    long double nrm = 0.0L;
    for (int i = 0; i < n_; ++i) {
      long double acc = b(i);
      for (int j = 0; j < n_; ++j) acc -= a_[i * n_ + j] * x[j];
      r[i] = acc;
      nrm = std::max(nrm, fabsl(acc));
    }
    return nrm;
  }

  void solve_ld(std::vector<long double>& x) const {
    for (int i = 0; i < n_; ++i) {
      long double v = x[i];
      for (int k = 0; k < i; ++k) v -= l_[i * n_ + k] * x[k];
      x[i] = v / l_[i * n_ + i];
    }
    for (int i = n_ - 1; i >= 0; --i) {
      long double v = x[i];
      for (int k = i + 1; k < n_; ++k) v -= l_[k * n_ + i] * x[k];
      x[i] = v / l_[i * n_ + i];
    }
  }

  int n_ = 0;
  std::vector<long double> a_, l_;
};

struct Lowered {
  int n = 0;
  std::vector<LBlock> blocks;
  RMatrix E;  // p x n
  RVector f;
  RVector g;
  double g0 = 0.0;
  double sign = 1.0;  // +1 original maximize, -1 original minimize
};

struct IpmResult {
  int status = 3;  // 0 optimal, 1 infeasible, 2 unbounded, 3 numerical failure
  RVector u;
  RVector y;
  std::vector<RMatrix> X;  // cone multipliers per block
  std::vector<RMatrix> Z;
  double pobj = 0.0, dobj = 0.0;
  double pinf = 0.0, dinf = 0.0, relgap = 0.0;
  int iterations = 0;
};

class Core {
 public:
  Core(Lowered l, double feas_tol, double gap_tol, int max_iter)
      : L_(std::move(l)), feas_tol_(feas_tol), gap_tol_(gap_tol), max_iter_(max_iter) {
    equilibrate();
  }

  IpmResult run() {
    const int n = L_.n;
    const int p = static_cast<int>(L_.f.size());
    const int nb = static_cast<int>(L_.blocks.size());
    double sumdim = 0.0;
    for (const auto& b : L_.blocks) sumdim += b.dim;

    RVector u = RVector::Zero(n);
    if (p > 0) u = L_.E.transpose() * (L_.E * L_.E.transpose())
                                          .ldlt()
                                          .solve(L_.f);  // min-norm equality start
    RVector y = RVector::Zero(p);
    std::vector<RMatrix> X(nb), Z(nb);
    for (int j = 0; j < nb; ++j) {
      RMatrix m0 = eval_block(j, u);
      const double s = std::max(1.0, 1.2 * m0.cwiseAbs().maxCoeff());
      Z[j] = s * RMatrix::Identity(L_.blocks[j].dim, L_.blocks[j].dim);
      X[j] = RMatrix::Identity(L_.blocks[j].dim, L_.blocks[j].dim);
    }

    IpmResult res;
    std::vector<RMatrix> Zinv(nb), rz(nb), Vtmp;
    std::vector<RMatrix> dXa(nb), dZa(nb), dX(nb), dZ(nb);
    // a primal-degenerate tail can freeze the attainable dual residual well
    // above feas_tol while the gap and primal residual converge fully; the
    // optimality contract binds those two, the true dual residual is reported
    const double dual_tol = std::max(feas_tol_, 1e-4);
    struct Snapshot {
      RVector u, y;
      std::vector<RMatrix> X, Z;
      double score = std::numeric_limits<double>::infinity();
      double pinf = 0, dinf = 0, relgap = 0;
      int iter = 0;
    } best;
    int since_best = 0;

    for (int iter = 0; iter < max_iter_; ++iter) {
      // residuals
      double gap = 0.0;
      for (int j = 0; j < nb; ++j) {
        rz[j] = eval_block(j, u) - Z[j];
        gap += X[j].cwiseProduct(Z[j]).sum();
      }
      const double mu = gap / std::max(sumdim, 1.0);
      RVector rd = L_.g;
      for (int j = 0; j < nb; ++j) {
        const auto& b = L_.blocks[j];
        for (size_t k = 0; k < b.params.size(); ++k) rd(b.params[k]) += dot(b.A[k], X[j]);
      }
      if (p > 0) rd -= L_.E.transpose() * y;
      RVector re = p > 0 ? RVector(L_.f - L_.E * u) : RVector();

      const double pobj = L_.g.dot(u);
      double dobj = p > 0 ? L_.f.dot(y) : 0.0;
      for (int j = 0; j < nb; ++j) dobj += L_.blocks[j].C0.cwiseProduct(X[j]).sum();
      if (!std::isfinite(gap) || !std::isfinite(pobj) || !std::isfinite(dobj) || gap > 1e24) {
        res.status = 3;
        if (trace_) std::fprintf(stderr, "exit: divergent or nonfinite\n");
        break;
      }

      double pinf = 0.0;
      for (int j = 0; j < nb; ++j)
        pinf = std::max(pinf, rz[j].cwiseAbs().maxCoeff() / (1.0 + cnorm_[j]));
      if (p > 0) pinf = std::max(pinf, re.cwiseAbs().maxCoeff() / (1.0 + fnorm_));
      const double dinf = rd.cwiseAbs().maxCoeff() / (1.0 + gnorm_);
      const double relgap = gap / (1.0 + std::abs(pobj) + std::abs(dobj));

      res.iterations = iter;
      res.pinf = pinf;
      res.dinf = dinf;
      res.relgap = relgap;
      if (trace_)
        std::fprintf(stderr, "ipm %3d mu=%.3e pinf=%.2e dinf=%.2e gap=%.2e pobj=%.6e\n", iter,
                     mu, pinf, dinf, relgap, pobj);
      const double score = std::max({pinf / feas_tol_, dinf / dual_tol, relgap / gap_tol_});
      if (score < best.score) {
        best.score = score;
        best.u = u;
        best.y = y;
        best.X = X;
        best.Z = Z;
        best.pinf = pinf;
        best.dinf = dinf;
        best.relgap = relgap;
        best.iter = iter;
        since_best = 0;
      } else {
        ++since_best;
      }
      if (score <= 1.0) {
        res.status = 0;
        if (trace_) std::fprintf(stderr, "exit: converged score=%.3g pinf=%.3g dinf=%.3g relgap=%.3g\n", score, pinf, dinf, relgap);
        break;
      }
      if (iter >= 5) {
        if (check_infeasible(X, y, res)) break;
        if (check_unbounded(u, pobj, res)) break;
      }
      // stalled in numerical-noise territory: fall back to the best iterate.
      // Divergent (infeasible/unbounded) runs keep going so certificates can
      // mature.
      if ((since_best >= 16 && best.score < 1e5) || iter == max_iter_ - 1) {
        res.status = best.score <= 1.0 ? 0 : 3;
        break;
      }

      // factor cones, build Schur complement
      bool fail = false;
      std::vector<Eigen::LLT<RMatrix>> lltZ(nb), lltX(nb);
      std::vector<LdMatrix> Zinv_ld(nb), X_ld(nb);
      for (int j = 0; j < nb && !fail; ++j) {
        lltZ[j].compute(Z[j]);
        lltX[j].compute(X[j]);
        if (lltZ[j].info() != Eigen::Success || lltX[j].info() != Eigen::Success) fail = true;
        if (!fail && !spd_inverse_ld(Z[j], Zinv_ld[j])) fail = true;
        if (!fail) {
          Zinv[j] = to_d(Zinv_ld[j]);
          X_ld[j] = to_ld(X[j]);
        }
      }
      if (fail) {
        res.status = 3;
        break;
      }

      // Schur complement. Once mu is small the X/Zinv dynamic range makes
      // double-precision accumulation inject O(1e-5) into the dual residual,
      // so the tail iterations assemble in long double.
      const bool ld_tail = mu < 1e-3;
      RMatrix S = RMatrix::Zero(n, n);
      if (!ld_tail) {
        std::vector<RMatrix> V;
        for (int j = 0; j < nb; ++j) {
          const auto& b = L_.blocks[j];
          const int m = static_cast<int>(b.params.size());
          V.assign(m, RMatrix());
          for (int k = 0; k < m; ++k) {
            RMatrix v = RMatrix::Zero(b.dim, b.dim);
            for (const auto& t : b.A[k])
              v.noalias() += t.v * X[j].col(t.r) * Zinv[j].row(t.c);
            V[k] = std::move(v);
          }
          for (int i = 0; i < m; ++i)
            for (int k = 0; k < m; ++k) {
              double acc = 0.0;
              for (const auto& t : b.A[i]) acc += t.v * V[k](t.c, t.r);
              S(b.params[i], b.params[k]) += acc;
            }
        }
      } else {
        std::vector<LdMatrix> V;
        LdMatrix Sld = LdMatrix::Zero(n, n);
        for (int j = 0; j < nb; ++j) {
          const auto& b = L_.blocks[j];
          const int m = static_cast<int>(b.params.size());
          V.assign(m, LdMatrix());
          for (int k = 0; k < m; ++k) {
            LdMatrix v = LdMatrix::Zero(b.dim, b.dim);
            for (const auto& t : b.A[k])
              v.noalias() += static_cast<long double>(t.v) * X_ld[j].col(t.r) * Zinv_ld[j].row(t.c);
            V[k] = std::move(v);
          }
          for (int i = 0; i < m; ++i)
            for (int k = 0; k < m; ++k) {
              long double acc = 0.0L;
              for (const auto& t : b.A[i]) acc += t.v * V[k](t.c, t.r);
              Sld(b.params[i], b.params[k]) += acc;
            }
        }
        S = to_d(LdMatrix(0.5L * (Sld + Sld.transpose())));
      }
      RMatrix M = ld_tail ? S : RMatrix(0.5 * (S + S.transpose()));
      const double ridge = 1e-14 * (1.0 + M.diagonal().cwiseAbs().maxCoeff());

      LdChol lltM;
      bool mok = lltM.compute(M, 0.0);
      for (int tries = 0; !mok && tries < 8; ++tries)
        mok = lltM.compute(M, ridge * std::pow(10.0, tries));
      if (!mok) {
        res.status = 3;
        break;
      }
      RMatrix EMiET;
      RMatrix W;
      Eigen::LDLT<RMatrix> lltEE;
      if (p > 0) {
        W.resize(n, p);
        for (int c = 0; c < p; ++c) W.col(c) = lltM.solve(L_.E.row(c).transpose());
        EMiET = L_.E * W;
        lltEE.compute(EMiET);
      }

      auto solve_kkt = [&](const RVector& r1, const RVector& rE, RVector& du, RVector& dy) {
        auto once = [&](const RVector& b1, const RVector& b2, RVector& ou, RVector& oy) {
          RVector h = lltM.solve(b1);
          if (p > 0) {
            oy = lltEE.solve(L_.E * h - b2);
            ou = h - W * oy;
          } else {
            oy.resize(0);
            ou = h;
          }
        };
        once(r1, rE, du, dy);
      };

      auto sym_xmz = [&](int j, const RMatrix& mid) {
        // Sym(X * mid * Zinv) accumulated in long double: the product mixes
        // magnitudes spanning the full conditioning range and cancels badly
        // in double near the tail.
        LdMatrix t = X_ld[j] * to_ld(mid) * Zinv_ld[j];
        return to_d(LdMatrix(0.5L * (t + t.transpose())));
      };

      auto assemble_r1 = [&](double sigma_mu, const std::vector<RMatrix>* corr, RVector& r1,
                             std::vector<RMatrix>& Rj) {
        r1 = rd;
        for (int j = 0; j < nb; ++j) {
          const auto& b = L_.blocks[j];
          RMatrix R = -X[j] - sym_xmz(j, rz[j]);
          if (sigma_mu > 0.0) R += sigma_mu * Zinv[j];
          if (corr) R -= (*corr)[j];
          Rj[j] = R;
          for (size_t k = 0; k < b.params.size(); ++k) r1(b.params[k]) += dot(b.A[k], R);
        }
      };

      auto directions = [&](const RVector& du, const std::vector<RMatrix>& Rj,
                            std::vector<RMatrix>& dZo, std::vector<RMatrix>& dXo) {
        for (int j = 0; j < nb; ++j) {
          const auto& b = L_.blocks[j];
          RMatrix az = rz[j];
          for (size_t k = 0; k < b.params.size(); ++k) add_scaled(az, b.A[k], du(b.params[k]));
          dZo[j] = az;
          // dX = R - Sym(X (dZ - rz) Zinv); R already holds -Sym(X rz Zinv)
          dXo[j] = Rj[j] - sym_xmz(j, RMatrix(az - rz[j]));
        }
      };

      // predictor
      RVector r1, du_a, dy_a;
      std::vector<RMatrix> Rj(nb);
      assemble_r1(0.0, nullptr, r1, Rj);
      solve_kkt(r1, p > 0 ? re : RVector(), du_a, dy_a);
      directions(du_a, Rj, dZa, dXa);
      double ap_a = 1.0, ad_a = 1.0;
      for (int j = 0; j < nb; ++j) {
        ap_a = std::min(ap_a, max_step(lltX[j], dXa[j]));
        ad_a = std::min(ad_a, max_step(lltZ[j], dZa[j]));
      }
      double gap_aff = 0.0;
      for (int j = 0; j < nb; ++j)
        gap_aff += (X[j] + ap_a * dXa[j]).cwiseProduct(Z[j] + ad_a * dZa[j]).sum();
      double sigma = std::pow(std::max(gap_aff, 0.0) / std::max(gap, 1e-300), 3.0);
      sigma = std::clamp(sigma, 1e-8, 1.0);
      // keep the barrier from outrunning infeasibility reduction (converging
      // regime only; divergent runs must track their certificate ray)
      if (pinf < 1e-2 && dinf < 1e-2 && (dinf > 10.0 * relgap || pinf > 10.0 * relgap))
        sigma = std::max(sigma, 0.5);

      // corrector
      std::vector<RMatrix> corr(nb);
      for (int j = 0; j < nb; ++j) {
        RMatrix c = dXa[j] * dZa[j] * Zinv[j];
        corr[j] = 0.5 * (c + c.transpose());
      }
      RVector du, dy;
      assemble_r1(sigma * mu, &corr, r1, Rj);
      solve_kkt(r1, p > 0 ? re : RVector(), du, dy);
      directions(du, Rj, dZ, dX);

      double ap = 1.0, ad = 1.0;
      for (int j = 0; j < nb; ++j) {
        ap = std::min(ap, max_step(lltX[j], dX[j]));
        ad = std::min(ad, max_step(lltZ[j], dZ[j]));
      }
      const double eta = 0.98;
      ap = std::min(1.0, eta * ap);
      ad = std::min(1.0, eta * ad);
      if (trace_) std::fprintf(stderr, "      sigma=%.2e ap=%.3f ad=%.3f rd=%.3e\n", sigma, ap, ad, rd.cwiseAbs().maxCoeff());
      for (int j = 0; j < nb; ++j) {
        X[j] += ap * dX[j];
        X[j] = 0.5 * (X[j] + X[j].transpose());
        Z[j] += ad * dZ[j];
        Z[j] = 0.5 * (Z[j] + Z[j].transpose());
      }
      u += ad * du;
      if (p > 0) y += ad * dy;
    }

    if (best.score < std::numeric_limits<double>::infinity() && res.status != 1 &&
        res.status != 2) {
      u = best.u;
      y = best.y;
      X = best.X;
      Z = best.Z;
      res.pinf = best.pinf;
      res.dinf = best.dinf;
      res.relgap = best.relgap;
    }
    res.u = unscale_u(u);
    res.y = unscale_y(y);
    res.X.resize(nb);
    res.Z.resize(nb);
    for (int j = 0; j < nb; ++j) {
      res.X[j] = unscale_dual_block(j, X[j]);
      res.Z[j] = unscale_slack_block(j, Z[j]);
    }
    res.pobj = L_.g0 + orig_g_.dot(res.u);
    res.dobj = L_.g0;
    for (int j = 0; j < nb; ++j) res.dobj += orig_C0_[j].cwiseProduct(res.X[j]).sum();
    if (orig_f_.size() > 0) res.dobj += orig_f_.dot(res.y);
    return res;
  }

 private:
  RMatrix eval_block(int j, const RVector& u) const {
    const auto& b = L_.blocks[j];
    RMatrix m = b.C0;
    for (size_t k = 0; k < b.params.size(); ++k) add_scaled(m, b.A[k], u(b.params[k]));
    return m;
  }

  static double max_step(const Eigen::LLT<RMatrix>& lltP, const RMatrix& dP) {
    // largest alpha with P + alpha dP PSD
    const auto& Lm = lltP.matrixL();
    RMatrix W = Lm.solve(dP);
    RMatrix Y = Lm.solve(W.transpose()).transpose();
    Y = 0.5 * (Y + Y.transpose());
    Eigen::SelfAdjointEigenSolver<RMatrix> es(Y, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin >= -1e-14) return std::numeric_limits<double>::infinity();
    return -1.0 / lmin;
  }

  // Farkas certificate: X >= 0, y with sum_j A_j^*(X_j) = E^T y and
  // <C, X> + f'y < 0. Declared only when the normalized residual is tiny.
  bool check_infeasible(const std::vector<RMatrix>& X, const RVector& y, IpmResult& res) const {
    double nrm = y.squaredNorm();
    for (const auto& x : X) nrm += x.squaredNorm();
    nrm = std::sqrt(nrm);
    if (nrm < 1e4 || !std::isfinite(nrm)) return false;
    double val = orig_scaled_f_dot(y);
    for (size_t j = 0; j < X.size(); ++j) val += L_.blocks[j].C0.cwiseProduct(X[j]).sum();
    val /= nrm;
    RVector pres = RVector::Zero(L_.n);
    for (size_t j = 0; j < X.size(); ++j) {
      const auto& b = L_.blocks[j];
      for (size_t k = 0; k < b.params.size(); ++k) pres(b.params[k]) += dot(b.A[k], X[j]);
    }
    if (L_.f.size() > 0) pres -= L_.E.transpose() * y;
    const double pr = pres.cwiseAbs().maxCoeff() / nrm;
    if (trace_) std::fprintf(stderr, "  farkas: nrm=%.3g val=%.3g pres=%.3g\n", nrm, val, pr);
    if (val >= -1e-7) return false;
    if (pr > 1e-9) return false;
    if (pr > 0.01 * std::abs(val)) return false;
    res.status = 1;
    return true;
  }

  double orig_scaled_f_dot(const RVector& y) const {
    return L_.f.size() > 0 ? L_.f.dot(y) : 0.0;
  }

  // Improving-ray certificate for unboundedness (strict tolerances: a true
  // ray validates to near machine precision once the iterate is dominated by
  // the ray direction).
  bool check_unbounded(const RVector& u, double pobj, IpmResult& res) const {
    if (pobj < 1e8) return false;
    const double nu = u.norm();
    if (nu < 1e6) return false;
    if (L_.g.dot(u) / nu < 1e-6) return false;
    if (L_.f.size() > 0 && (L_.E * u).cwiseAbs().maxCoeff() / nu > 1e-10) return false;
    for (const auto& b : L_.blocks) {
      RMatrix m = RMatrix::Zero(b.dim, b.dim);
      for (size_t k = 0; k < b.params.size(); ++k) add_scaled(m, b.A[k], u(b.params[k]) / nu);
      Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (m + m.transpose()),
                                                Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-10) return false;
    }
    res.status = 2;
    return true;
  }

  // ---- equilibration ----
  void equilibrate() {
    const int n = L_.n;
    const int nb = static_cast<int>(L_.blocks.size());
    const int p = static_cast<int>(L_.f.size());
    orig_g_ = L_.g;
    orig_f_ = L_.f;
    orig_C0_.resize(nb);
    for (int j = 0; j < nb; ++j) orig_C0_[j] = L_.blocks[j].C0;

    s_ = RVector::Ones(n);
    d_.resize(nb);
    for (int j = 0; j < nb; ++j) d_[j] = RVector::Ones(L_.blocks[j].dim);
    e_ = RVector::Ones(std::max(p, 0));

    auto clamps = [](double v) { return std::clamp(v, 1e-10, 1e10); };

    for (int round = 0; round < 6; ++round) {
      // block row norms
      for (int j = 0; j < nb; ++j) {
        auto& b = L_.blocks[j];
        RVector rn = RVector::Zero(b.dim);
        for (Eigen::Index r = 0; r < b.dim; ++r)
          rn(r) = b.C0.row(r).cwiseAbs().maxCoeff();
        for (const auto& A : b.A)
          for (const auto& t : A) rn(t.r) = std::max(rn(t.r), std::abs(t.v));
        for (Eigen::Index r = 0; r < b.dim; ++r) {
          const double sc = rn(r) > 0 ? clamps(1.0 / std::sqrt(rn(r))) : 1.0;
          d_[j](r) *= sc;
        }
        apply_block_scale(j, rn);
      }
      // param norms
      RVector pn = RVector::Zero(n);
      for (int j = 0; j < nb; ++j) {
        auto& b = L_.blocks[j];
        for (size_t k = 0; k < b.params.size(); ++k)
          pn(b.params[k]) = std::max(pn(b.params[k]), max_abs(b.A[k]));
      }
      for (int r = 0; r < p; ++r)
        for (int i = 0; i < n; ++i) pn(i) = std::max(pn(i), std::abs(L_.E(r, i)));
      for (int i = 0; i < n; ++i) {
        if (pn(i) <= 0) continue;
        const double sc = clamps(1.0 / std::sqrt(pn(i)));
        s_(i) *= sc;
        scale_param(i, sc);
      }
    }
    // equality rows to unit norm
    for (int r = 0; r < p; ++r) {
      const double m = std::max(L_.E.row(r).cwiseAbs().maxCoeff(), std::abs(L_.f(r)));
      if (m > 0) {
        const double sc = clamps(1.0 / m);
        e_(r) *= sc;
        L_.E.row(r) *= sc;
        L_.f(r) *= sc;
      }
    }
    // objective normalization
    const double gm = L_.g.size() ? L_.g.cwiseAbs().maxCoeff() : 0.0;
    cg_ = gm > 0 ? 1.0 / gm : 1.0;
    L_.g *= cg_;

    cnorm_.resize(nb);
    for (int j = 0; j < nb; ++j) cnorm_[j] = L_.blocks[j].C0.cwiseAbs().maxCoeff();
    fnorm_ = p > 0 ? L_.f.cwiseAbs().maxCoeff() : 0.0;
    gnorm_ = L_.g.size() ? L_.g.cwiseAbs().maxCoeff() : 0.0;
  }

  void apply_block_scale(int j, const RVector& rn) {
    auto& b = L_.blocks[j];
    RVector sc(b.dim);
    for (Eigen::Index r = 0; r < b.dim; ++r)
      sc(r) = rn(r) > 0 ? std::clamp(1.0 / std::sqrt(rn(r)), 1e-10, 1e10) : 1.0;
    for (Eigen::Index r = 0; r < b.dim; ++r) b.C0.row(r) *= sc(r);
    for (Eigen::Index c = 0; c < b.dim; ++c) b.C0.col(c) *= sc(c);
    for (auto& A : b.A)
      for (auto& t : A) t.v *= sc(t.r) * sc(t.c);
  }

  void scale_param(int i, double sc) {
    for (auto& b : L_.blocks)
      for (size_t k = 0; k < b.params.size(); ++k)
        if (b.params[k] == i)
          for (auto& t : b.A[k]) t.v *= sc;
    for (Eigen::Index r = 0; r < L_.E.rows(); ++r) L_.E(r, i) *= sc;
    L_.g(i) *= sc;
  }

  RVector unscale_u(const RVector& u) const {
    RVector out = u;
    for (int i = 0; i < L_.n; ++i) out(i) *= s_(i);
    return out;
  }
  RVector unscale_y(const RVector& y) const {
    RVector out = y;
    for (Eigen::Index r = 0; r < out.size(); ++r) out(r) *= e_(r) / cg_;
    return out;
  }
  RMatrix unscale_dual_block(int j, const RMatrix& x) const {
    RMatrix out = x;
    for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) *= d_[j](r);
    for (Eigen::Index c = 0; c < out.cols(); ++c) out.col(c) *= d_[j](c);
    return out / cg_;
  }
  RMatrix unscale_slack_block(int j, const RMatrix& z) const {
    RMatrix out = z;
    for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) /= d_[j](r);
    for (Eigen::Index c = 0; c < out.cols(); ++c) out.col(c) /= d_[j](c);
    return out;
  }

  Lowered L_;
  bool trace_ = std::getenv("HJBEAM_IPM_TRACE") != nullptr;
  double feas_tol_, gap_tol_;
  int max_iter_;
  RVector s_, e_;
  std::vector<RVector> d_;
  double cg_ = 1.0;
  std::vector<double> cnorm_;
  double fnorm_ = 0.0, gnorm_ = 0.0;
  RVector orig_g_, orig_f_;
  std::vector<RMatrix> orig_C0_;
};

}  // namespace ipm
}  // namespace hjbeam

#include "hjbeam/sdp.hpp"

namespace hjbeam {

// Lowers an SdpProblem to the internal LMI form and maps IPM output back to
// named values/duals in the original (unscaled) space.
struct LoweredProblem {
  ipm::Lowered data;
  const SdpProblem* src = nullptr;
  std::vector<int> var_block_idx;   // per variable block
  std::vector<int> lmi_block_idx;   // per LMI
  std::vector<int> ineq_block_idx;  // per constraint, -1 for equalities
  std::vector<int> eq_row_idx;      // per constraint, -1 for inequalities
  std::vector<int> nonneg_block_idx;  // per scalar var, -1 if free
  bool margin_mode = false;

  static std::vector<std::pair<int, double>> merged(const LinExpr& e) {
    std::map<int, double> acc;
    for (const auto& [p, c] : e.terms) acc[p] += c;
    std::vector<std::pair<int, double>> out(acc.begin(), acc.end());
    return out;
  }

  static LoweredProblem build(const SdpProblem& p) {
    LoweredProblem lp;
    lp.src = &p;
    ipm::Lowered& L = lp.data;
    L.n = p.n_params_;
    L.sign = p.sense_ == Sense::maximize ? 1.0 : -1.0;

    // variable blocks
    for (const auto& b : p.blocks_) {
      ipm::LBlock lb;
      if (b.kind == SdpProblem::Block::real_sym) {
        const int d = b.cdim;
        lb.dim = d;
        lb.C0 = RMatrix::Zero(d, d);
        int param = b.param_base;
        for (int i = 0; i < d; ++i)
          for (int j = i; j < d; ++j, ++param) {
            ipm::Triplets t;
            if (i == j)
              t.push_back({i, i, 1.0});
            else {
              t.push_back({i, j, 1.0});
              t.push_back({j, i, 1.0});
            }
            lb.params.push_back(param);
            lb.A.push_back(std::move(t));
          }
      } else {
        const int d = b.cdim;
        lb.dim = 2 * d;
        lb.C0 = RMatrix::Zero(2 * d, 2 * d);
        for (int i = 0; i < d; ++i) {
          lb.params.push_back(b.param_base + i);
          lb.A.push_back({{i, i, 1.0}, {d + i, d + i, 1.0}});
        }
        int param = b.param_base + d;
        for (int i = 0; i < d; ++i)
          for (int j = i + 1; j < d; ++j) {
            lb.params.push_back(param++);
            lb.A.push_back({{i, j, 1.0}, {j, i, 1.0}, {d + i, d + j, 1.0}, {d + j, d + i, 1.0}});
            lb.params.push_back(param++);
            lb.A.push_back({{i, d + j, -1.0}, {j, d + i, 1.0}, {d + i, j, 1.0}, {d + j, i, -1.0}});
          }
      }
      lp.var_block_idx.push_back(static_cast<int>(L.blocks.size()));
      L.blocks.push_back(std::move(lb));
    }

    // nonneg scalars
    for (const auto& s : p.scalars_) {
      if (s.sign != VarSign::nonneg) {
        lp.nonneg_block_idx.push_back(-1);
        continue;
      }
      ipm::LBlock lb;
      lb.dim = 1;
      lb.C0 = RMatrix::Zero(1, 1);
      lb.params.push_back(s.param);
      lb.A.push_back({{0, 0, 1.0}});
      lp.nonneg_block_idx.push_back(static_cast<int>(L.blocks.size()));
      L.blocks.push_back(std::move(lb));
    }

    // scalar constraints
    int n_eq = 0;
    for (const auto& c : p.constraints_)
      if (c.rel == Rel::eq) ++n_eq;
    L.E = RMatrix::Zero(n_eq, L.n);
    L.f = RVector::Zero(n_eq);
    int eq_row = 0;
    for (const auto& c : p.constraints_) {
      if (c.rel == Rel::eq) {
        for (const auto& [param, coef] : merged(c.expr)) L.E(eq_row, param) = coef;
        L.f(eq_row) = c.rhs - c.expr.constant;
        lp.eq_row_idx.push_back(eq_row++);
        lp.ineq_block_idx.push_back(-1);
      } else {
        ipm::LBlock lb;
        lb.dim = 1;
        lb.C0 = RMatrix::Constant(1, 1, c.rhs - c.expr.constant);
        for (const auto& [param, coef] : merged(c.expr)) {
          lb.params.push_back(param);
          lb.A.push_back({{0, 0, -coef}});
        }
        lp.eq_row_idx.push_back(-1);
        lp.ineq_block_idx.push_back(static_cast<int>(L.blocks.size()));
        L.blocks.push_back(std::move(lb));
      }
    }

    // LMIs (complex Hermitian-valued, lowered through the real embedding)
    for (const auto& l : p.lmis_) {
      ipm::LBlock lb;
      lb.dim = static_cast<int>(2 * l.expr.dim);
      lb.C0 = ipm::embed(l.expr.c0);
      for (const auto& [param, m] : l.expr.coef) {
        ipm::Triplets t = ipm::dense_to_triplets(ipm::embed(m));
        if (t.empty()) continue;
        lb.params.push_back(param);
        lb.A.push_back(std::move(t));
      }
      lp.lmi_block_idx.push_back(static_cast<int>(L.blocks.size()));
      L.blocks.push_back(std::move(lb));
    }

    // objective (internal sense: maximize)
    L.g = RVector::Zero(L.n);
    for (const auto& [param, coef] : merged(p.objective_)) L.g(param) = L.sign * coef;
    L.g0 = L.sign * p.objective_.constant;
    return lp;
  }

  void append_margin() {
    margin_mode = true;
    ipm::Lowered& L = data;
    const int t_param = L.n;
    L.n += 1;
    for (auto& b : L.blocks) {
      ipm::Triplets t;
      for (int i = 0; i < b.dim; ++i) t.push_back({i, i, -1.0});
      b.params.push_back(t_param);
      b.A.push_back(std::move(t));
    }
    ipm::LBlock cap;
    cap.dim = 1;
    cap.C0 = RMatrix::Constant(1, 1, 1.0);
    cap.params.push_back(t_param);
    cap.A.push_back({{0, 0, -1.0}});
    L.blocks.push_back(std::move(cap));
    if (L.E.rows() > 0) {
      RMatrix e2 = RMatrix::Zero(L.E.rows(), L.n);
      e2.leftCols(L.n - 1) = L.E;
      L.E = e2;
    } else {
      L.E = RMatrix::Zero(0, L.n);
    }
    RVector g = RVector::Zero(L.n);
    g(t_param) = 1.0;
    L.g = g;
    L.g0 = 0.0;
    L.sign = 1.0;
  }

  SdpSolution recover(const ipm::IpmResult& r) const {
    const SdpProblem& p = *src;
    SdpSolution sol;
    sol.iterations = r.iterations;
    switch (r.status) {
      case 0: sol.status = SolveStatus::optimal; break;
      case 1: sol.status = SolveStatus::infeasible; break;
      case 2: sol.status = SolveStatus::unbounded; break;
      default: sol.status = SolveStatus::numerical_failure; break;
    }
    const RVector& u = r.u;

    for (const auto& b : p.blocks_) {
      if (b.kind == SdpProblem::Block::real_sym) {
        const int d = b.cdim;
        RMatrix m(d, d);
        int param = b.param_base;
        for (int i = 0; i < d; ++i)
          for (int j = i; j < d; ++j, ++param) m(i, j) = m(j, i) = b.unit_scale * u(param);
        sol.psd_values[b.name] = std::move(m);
      } else {
        const int d = b.cdim;
        CMatrix m = CMatrix::Zero(d, d);
        for (int i = 0; i < d; ++i) m(i, i) = b.unit_scale * u(b.param_base + i);
        int param = b.param_base + d;
        for (int i = 0; i < d; ++i)
          for (int j = i + 1; j < d; ++j) {
            const cd v(b.unit_scale * u(param), b.unit_scale * u(param + 1));
            param += 2;
            m(i, j) = v;
            m(j, i) = std::conj(v);
          }
        sol.herm_values[b.name] = std::move(m);
      }
    }
    for (const auto& s : p.scalars_) sol.scalar_values[s.name] = s.unit_scale * u(s.param);
    for (size_t si = 0; si < p.scalars_.size(); ++si)
      if (nonneg_block_idx[si] >= 0)
        sol.nonneg_duals[p.scalars_[si].name] =
            r.X[nonneg_block_idx[si]](0, 0) / p.scalars_[si].unit_scale;

    // duals
    for (size_t bi = 0; bi < p.blocks_.size(); ++bi) {
      const auto& b = p.blocks_[bi];
      const RMatrix& x = r.X[var_block_idx[bi]];
      if (b.kind == SdpProblem::Block::real_sym)
        sol.psd_block_duals[b.name] = 0.5 / b.unit_scale * (x + x.transpose());
      else
        sol.herm_block_duals[b.name] = 2.0 / b.unit_scale * complex_from_embed(x);
    }
    for (size_t ci = 0; ci < p.constraints_.size(); ++ci) {
      const auto& c = p.constraints_[ci];
      if (c.rel == Rel::eq)
        sol.constraint_duals[c.name] = r.y(eq_row_idx[ci]);
      else
        sol.constraint_duals[c.name] = r.X[ineq_block_idx[ci]](0, 0);
    }
    for (size_t li = 0; li < p.lmis_.size(); ++li) {
      sol.lmi_duals[p.lmis_[li].name] = 2.0 * complex_from_embed(r.X[lmi_block_idx[li]]);
      // slack value from original data at the recovered point
      const auto& expr = p.lmis_[li].expr;
      CMatrix v = expr.c0;
      for (const auto& [param, m] : expr.coef) v += u(param) * m;
      sol.lmi_values[p.lmis_[li].name] = hermitian_part(v);
    }

    sol.objective = data.sign * (margin_mode ? r.pobj : r.pobj);
    if (margin_mode) {
      sol.margin = r.pobj;
      sol.objective = r.pobj;
    }
    sol.dual_objective = data.sign * r.dobj;
    sol.residuals = original_residuals(r);
    return sol;
  }

  SdpResiduals original_residuals(const ipm::IpmResult& r) const {
    SdpResiduals res;
    const RVector& u = r.u;
    double pinf = 0.0;
    for (const auto& b : data.blocks) {
      RMatrix m = b.C0;
      for (size_t k = 0; k < b.params.size(); ++k) {
        const int param = b.params[k];
        const double val = param < u.size() ? u(param) : 0.0;
        ipm::add_scaled(m, b.A[k], val);
      }
      m = 0.5 * (m + m.transpose());
      Eigen::SelfAdjointEigenSolver<RMatrix> es(m, Eigen::EigenvaluesOnly);
      const double lmin = es.eigenvalues().minCoeff();
      const double scale = 1.0 + m.cwiseAbs().maxCoeff();
      pinf = std::max(pinf, std::max(0.0, -lmin) / scale);
    }
    if (data.f.size() > 0 && u.size() >= data.E.cols()) {
      RVector re = data.f - data.E * u.head(data.E.cols());
      pinf = std::max(pinf, re.cwiseAbs().maxCoeff() / (1.0 + data.f.cwiseAbs().maxCoeff()));
    }
    res.primal = pinf;

    RVector rd = data.g;
    if (margin_mode) rd = RVector::Zero(data.n);
    for (size_t j = 0; j < data.blocks.size(); ++j) {
      const auto& b = data.blocks[j];
      if (j >= r.X.size()) break;
      for (size_t k = 0; k < b.params.size(); ++k)
        if (b.params[k] < rd.size()) rd(b.params[k]) += ipm::dot(b.A[k], r.X[j]);
    }
    if (data.f.size() > 0 && r.y.size() == data.E.rows())
      rd -= data.E.transpose() * r.y;
    const double gn = 1.0 + (data.g.size() ? data.g.cwiseAbs().maxCoeff() : 0.0);
    res.dual = margin_mode ? 0.0 : rd.cwiseAbs().maxCoeff() / gn;
    res.gap = std::abs(r.pobj - r.dobj) / (1.0 + std::abs(r.pobj) + std::abs(r.dobj));
    return res;
  }
};

inline SdpSolution solve(const SdpProblem& p, const SdpSettings& settings = {}) {
  LoweredProblem lp = LoweredProblem::build(p);
  ipm::Core core(lp.data, settings.feas_tol, settings.gap_tol, settings.max_iter);
  const ipm::IpmResult r = core.run();
  SdpSolution sol = lp.recover(r);
  if (sol.status == SolveStatus::numerical_failure) {
    // Adjudicate via the always-solvable margin program: a certified negative
    // margin implies infeasibility (its dual is a Farkas certificate).
    LoweredProblem mp = LoweredProblem::build(p);
    mp.append_margin();
    ipm::Core mcore(mp.data, settings.feas_tol, settings.gap_tol, settings.max_iter);
    const ipm::IpmResult mr = mcore.run();
    if (mr.status == 0 && mr.pobj < -1e3 * settings.feas_tol &&
        mr.dobj < -1e3 * settings.feas_tol)
      sol.status = SolveStatus::infeasible;
  }
  return sol;
}

// Phase-I style query: maximize t with every block shifted to M_j(u) - t*I
// (t capped at 1). margin > 0 certifies strict feasibility; margin < 0
// certifies infeasibility via weak duality of the margin program.
inline SdpSolution solve_feasibility_margin(const SdpProblem& p, const SdpSettings& settings = {}) {
  LoweredProblem lp = LoweredProblem::build(p);
  lp.append_margin();
  ipm::Core core(lp.data, settings.feas_tol, settings.gap_tol, settings.max_iter);
  const ipm::IpmResult r = core.run();
  return lp.recover(r);
}

}  // namespace hjbeam
