#pragma once

// Perfect-CSI pipeline: the two-stage secrecy-rate maximization. Stage one
// solves the Charnes-Cooper SDR of the Eve-SINR-constrained problem for a
// grid of targets; stage two picks the best target, reconstructs a rank-one
// relay matrix (EVD / sufficient-condition shift / rank reduction), and
// recovers W. Also the three reduced-complexity schemes: the optimal-structure
// restriction, null-space ZF jamming with a semi-closed-form relay matrix,
// and isotropic null-space jamming.

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjbeam/numerics.hpp"
#include "hjbeam/rates.hpp"
#include "hjbeam/scenario.hpp"
#include "hjbeam/sdp.hpp"

namespace hjbeam {

inline double retr(const CMatrix& a, const CMatrix& b) { return std::real((a * b).trace()); }

// Quadratic-form data shared by every relaxation built from one channel set.
struct PerfectData {
  int nt = 0, k = 0;
  CVector f1, f2;
  CMatrix F1, F2, Y1b, Y2b, Phib;  // nt^2 x nt^2
  std::vector<CMatrix> hq, gq;     // per helper: ht_k^* ht_k^T and g_k^* g_k^T
  std::vector<double> hk_norm2;

  static PerfectData build(const ChannelSet& cs, const SystemParams& p) {
    PerfectData d;
    d.nt = cs.nt();
    d.k = cs.k();
    const CMatrix eye = CMatrix::Identity(d.nt, d.nt);
    d.f1 = vec(CMatrix(cs.ht0 * cs.h0.transpose()));
    d.f2 = vec(CMatrix(cs.g0 * cs.h0.transpose()));
    d.F1 = d.f1.conjugate() * d.f1.transpose();
    d.F2 = d.f2.conjugate() * d.f2.transpose();
    d.Y1b = kron(CMatrix(cs.ht0.conjugate() * cs.ht0.transpose()), eye);
    d.Y2b = kron(CMatrix(cs.g0.conjugate() * cs.g0.transpose()), eye);
    const CMatrix theta = p.ps_w * cs.h0 * cs.h0.adjoint() + p.sigma_r2 * eye;
    d.Phib = kron(eye, theta.transpose());
    for (int i = 0; i < d.k; ++i) {
      d.hq.push_back(cs.ht_k[i].conjugate() * cs.ht_k[i].transpose());
      d.gq.push_back(cs.g_k[i].conjugate() * cs.g_k[i].transpose());
      d.hk_norm2.push_back(cs.h_k[i].squaredNorm());
    }
    return d;
  }
};

struct SdrCertificate {
  CMatrix X;
  std::vector<CMatrix> Q;
  double tau = 0.0;
  double lambda = 0.0, alpha = 0.0, beta0 = 0.0, zeta = 0.0;
  std::vector<double> beta_k;
  double objective = 0.0;
  CMatrix A_star;  // dual slack of the X block, Lagrangian gradient w.r.t. X
  SdpResiduals residuals;
};

struct GammaGrid {
  std::vector<double> values;
  double gamma_max = 0.0;
};

// Log-spaced Eve-SINR targets up to an upper bound on the jamming-free Eve
// SINR admitted by the relay power budget.
inline GammaGrid gamma_grid(const ChannelSet& cs, const SystemParams& p, int n_points = 50) {
  if (n_points < 1) throw std::invalid_argument("gamma_grid: n_points >= 1");
  GammaGrid g;
  const double snr = p.pr_w / p.sigma_r2;
  g.gamma_max =
      p.ps_w * cs.g0.squaredNorm() * cs.h0.squaredNorm() / p.sigma_e2 * (snr / (1.0 + snr));
  if (n_points == 1) {
    g.values = {g.gamma_max};
    return g;
  }
  for (int i = 0; i < n_points; ++i) {
    const double t = static_cast<double>(i) / (n_points - 1);
    g.values.push_back(g.gamma_max * std::pow(10.0, -5.0 * (1.0 - t)));
  }
  return g;
}

inline SdpProblem build_p11_sdr(const ChannelSet& cs, const SystemParams& p, double gamma_e) {
  if (gamma_e <= 0) throw std::invalid_argument("build_p11_sdr: gamma_e > 0");
  const PerfectData d = PerfectData::build(cs, p);
  SdpProblem prob;
  // normalized units: tau ~ 1/sigma_b2, X ~ tau * Pr / lmax(Theta), Q ~ budget
  const double st = 1.0 / p.sigma_b2;
  const double sx = st * p.pr_w / (p.ps_w * cs.h0.squaredNorm() + p.sigma_r2);
  BlockId x = prob.add_hermitian_block("X", d.nt * d.nt, sx);
  std::vector<BlockId> q;
  for (int i = 0; i < d.k; ++i)
    q.push_back(prob.add_hermitian_block("Q" + std::to_string(i + 1), d.nt,
                                         std::max(st * p.eta * p.ps_w * d.hk_norm2[i], 1e-300)));
  const int tau = prob.add_scalar("tau", VarSign::nonneg, st);

  prob.set_objective(Sense::maximize, p.ps_w * prob.tr_herm(x, d.F1));

  LinExpr norm = p.sigma_r2 * prob.tr_herm(x, d.Y1b);
  for (int i = 0; i < d.k; ++i) norm += prob.tr_herm(q[i], d.hq[i]);
  norm += prob.scalar_expr(tau, p.sigma_b2);
  prob.add_constraint("norm", norm, Rel::le, 1.0);

  LinExpr eve = p.ps_w * prob.tr_herm(x, d.F2) +
                (-gamma_e * p.sigma_r2) * prob.tr_herm(x, d.Y2b);
  for (int i = 0; i < d.k; ++i) eve += (-gamma_e) * prob.tr_herm(q[i], d.gq[i]);
  eve += prob.scalar_expr(tau, -gamma_e * p.sigma_e2);
  prob.add_constraint("eve", eve, Rel::le, 0.0);

  LinExpr power = prob.tr_herm(x, d.Phib);
  power += prob.scalar_expr(tau, -p.pr_w);
  prob.add_constraint("power", power, Rel::le, 0.0);

  for (int i = 0; i < d.k; ++i) {
    LinExpr he = prob.trace_of(q[i]);
    he += prob.scalar_expr(tau, -p.eta * p.ps_w * d.hk_norm2[i]);
    prob.add_constraint("helper" + std::to_string(i + 1), he, Rel::le, 0.0);
  }
  return prob;
}

struct HResult {
  double h = -std::numeric_limits<double>::infinity();
  SolveStatus status = SolveStatus::numerical_failure;
  SdrCertificate cert;
};

inline HResult solve_H(const ChannelSet& cs, const SystemParams& p, double gamma_e,
                       const SdpSettings& settings = {}) {
  SdpProblem prob = build_p11_sdr(cs, p, gamma_e);
  SdpSolution sol = solve(prob, settings);
  HResult r;
  r.status = sol.status;
  if (sol.status != SolveStatus::optimal) return r;
  r.h = sol.objective;
  SdrCertificate& c = r.cert;
  c.X = sol.herm_values.at("X");
  for (int i = 0; i < cs.k(); ++i) c.Q.push_back(sol.herm_values.at("Q" + std::to_string(i + 1)));
  c.tau = sol.scalar_values.at("tau");
  c.lambda = sol.constraint_duals.at("norm");
  c.alpha = sol.constraint_duals.at("eve");
  c.beta0 = sol.constraint_duals.at("power");
  for (int i = 0; i < cs.k(); ++i)
    c.beta_k.push_back(sol.constraint_duals.at("helper" + std::to_string(i + 1)));
  c.zeta = sol.nonneg_duals.at("tau");
  c.objective = sol.objective;
  c.A_star = -sol.herm_block_duals.at("X");
  c.residuals = sol.residuals;
  return r;
}

// ---- rank-one reconstruction engine ----

// Trace-form view of one solved relaxation: the X-like block plus fixed-role
// side blocks (AN covariances, and the rank-relaxed V of the structure-based
// scheme). All values are in Charnes-Cooper units.
struct ReconShape {
  double ps, gamma_e, sigma_r2, sigma_b2, sigma_e2, pr;
  CMatrix F1, F2, Y1b, Y2b, Phib;
  std::vector<CMatrix> norm_q;     // norm-row matrices per side block
  std::vector<CMatrix> eve_q;      // matrices inside the gamma_e(...) bracket
  std::vector<double> power_q;     // power-row coefficient of tr(B_j)
  std::vector<double> helper_rhs;  // tr(B_j) <= tau * helper_rhs[j]; negative = no row
};

struct ReconOutcome {
  CMatrix X;
  std::vector<CMatrix> q;
  double tau = 0.0;
  Reconstruction how = Reconstruction::none;
  int rank_before = 0;
};

namespace detail {

inline double recon_violation(const ReconShape& s, const CMatrix& x,
                              const std::vector<CMatrix>& q, double tau, double obj_expect) {
  double worst = 0.0;
  auto upd = [&](double lhs, double rhs, double scale) {
    worst = std::max(worst, (lhs - rhs) / (1.0 + std::abs(scale)));
  };
  double norm = s.sigma_r2 * retr(s.Y1b, x) + tau * s.sigma_b2;
  for (size_t j = 0; j < q.size(); ++j) norm += retr(s.norm_q[j], q[j]);
  upd(norm, 1.0, 1.0);
  double eve_rhs = s.sigma_r2 * retr(s.Y2b, x) + tau * s.sigma_e2;
  for (size_t j = 0; j < q.size(); ++j) eve_rhs += retr(s.eve_q[j], q[j]);
  upd(s.ps * retr(s.F2, x), s.gamma_e * eve_rhs, s.gamma_e * eve_rhs);
  double pw = retr(s.Phib, x);
  for (size_t j = 0; j < q.size(); ++j) pw += s.power_q[j] * std::real(q[j].trace());
  upd(pw, tau * s.pr, tau * s.pr);
  for (size_t j = 0; j < q.size(); ++j)
    if (s.helper_rhs[j] >= 0)
      upd(std::real(q[j].trace()), tau * s.helper_rhs[j], tau * s.helper_rhs[j]);
  const double lmin_x = eigh(x).values.minCoeff();
  upd(-lmin_x, 0.0, max_abs(x));
  for (const auto& b : q)
    if (b.size() > 0) upd(-eigh(b).values.minCoeff(), 0.0, max_abs(b));
  upd(-tau, 0.0, tau);
  upd(std::abs(s.ps * retr(s.F1, x) - obj_expect), 0.0, obj_expect);
  return worst;
}

// One joint rank-reduction pass over (X, side blocks, tau): finds a direction
// in the null space of the active-constraint value map and steps until an
// eigenvalue hits zero. Returns false when no progress is possible.
inline bool rank_reduce_step(const ReconShape& s, CMatrix& x, std::vector<CMatrix>& q,
                             double& tau, double obj_expect) {
  struct Fac {
    CMatrix v;  // d x r
    int r = 0;
  };
  auto factor = [](const CMatrix& m) {
    Fac f;
    if (m.size() == 0) return f;
    Eigh e = eigh(m);
    const double lmax = e.values.cwiseAbs().maxCoeff();
    std::vector<int> keep;
    for (Eigen::Index i = 0; i < e.values.size(); ++i)
      if (e.values(i) > 1e-9 * std::max(lmax, 1e-300)) keep.push_back(static_cast<int>(i));
    f.r = static_cast<int>(keep.size());
    f.v.resize(m.rows(), f.r);
    for (int c = 0; c < f.r; ++c)
      f.v.col(c) = e.vectors.col(keep[c]) * std::sqrt(e.values(keep[c]));
    return f;
  };

  Fac fx = factor(x);
  if (fx.r <= 1) return false;
  std::vector<Fac> fq;
  for (const auto& b : q) fq.push_back(factor(b));

  // unknowns: Hermitian delta per factored block + delta tau
  std::vector<int> offs;
  int nun = 0;
  offs.push_back(nun);
  nun += fx.r * fx.r;
  for (const auto& f : fq) {
    offs.push_back(nun);
    nun += f.r * f.r;
  }
  const int tau_idx = nun++;

  // active rows (plus objective) as real-linear functionals of the deltas
  std::vector<RVector> rows;
  auto herm_row = [&](RVector& row, int off, const Fac& f, const CMatrix& a) {
    if (f.r == 0 || a.size() == 0) return;
    const CMatrix g = f.v.adjoint() * a * f.v;
    int idx = off;
    for (int i = 0; i < f.r; ++i) row(idx++) += g(i, i).real();
    for (int i = 0; i < f.r; ++i)
      for (int j = i + 1; j < f.r; ++j) {
        row(idx++) += 2.0 * g(i, j).real();
        row(idx++) += 2.0 * g(i, j).imag();
      }
  };
  auto add_row = [&](const CMatrix& ax, const std::vector<CMatrix>& aq,
                     const std::vector<double>& aq_tr, double ctau) {
    RVector row = RVector::Zero(nun);
    herm_row(row, offs[0], fx, ax);
    for (size_t j = 0; j < fq.size(); ++j) {
      if (aq.size() > j && aq[j].size() > 0) herm_row(row, offs[j + 1], fq[j], aq[j]);
      if (aq_tr.size() > j && aq_tr[j] != 0.0)
        herm_row(row, offs[j + 1], fq[j], aq_tr[j] * CMatrix::Identity(q[j].rows(), q[j].cols()));
    }
    row(tau_idx) = ctau;
    rows.push_back(std::move(row));
  };

  const double tolact = 1e-7;
  // objective always preserved
  add_row(s.ps * s.F1, {}, {}, 0.0);
  {  // norm row if active
    double lhs = s.sigma_r2 * retr(s.Y1b, x) + tau * s.sigma_b2;
    for (size_t j = 0; j < q.size(); ++j) lhs += retr(s.norm_q[j], q[j]);
    if (std::abs(lhs - 1.0) <= tolact * 2.0)
      add_row(s.sigma_r2 * s.Y1b, s.norm_q, {}, s.sigma_b2);
  }
  {  // eve row
    double rhs = s.sigma_r2 * retr(s.Y2b, x) + tau * s.sigma_e2;
    for (size_t j = 0; j < q.size(); ++j) rhs += retr(s.eve_q[j], q[j]);
    const double lhs = s.ps * retr(s.F2, x);
    if (std::abs(lhs - s.gamma_e * rhs) <= tolact * (1.0 + std::abs(s.gamma_e * rhs))) {
      std::vector<CMatrix> aq;
      for (const auto& m : s.eve_q) aq.push_back(-s.gamma_e * m);
      add_row(s.ps * s.F2 - s.gamma_e * s.sigma_r2 * s.Y2b, aq, {}, -s.gamma_e * s.sigma_e2);
    }
  }
  {  // power row
    double lhs = retr(s.Phib, x);
    for (size_t j = 0; j < q.size(); ++j) lhs += s.power_q[j] * std::real(q[j].trace());
    if (std::abs(lhs - tau * s.pr) <= tolact * (1.0 + tau * s.pr))
      add_row(s.Phib, {}, s.power_q, -s.pr);
  }
  for (size_t j = 0; j < q.size(); ++j) {  // helper rows
    if (s.helper_rhs[j] < 0) continue;
    const double lhs = std::real(q[j].trace());
    if (std::abs(lhs - tau * s.helper_rhs[j]) <= tolact * (1.0 + tau * s.helper_rhs[j])) {
      std::vector<double> aq_tr(q.size(), 0.0);
      aq_tr[j] = 1.0;
      add_row(CMatrix::Zero(x.rows(), x.cols()), {}, aq_tr, -s.helper_rhs[j]);
    }
  }

  const int nrows = static_cast<int>(rows.size());
  if (nun <= nrows) return false;
  RMatrix m(nrows, nun);
  for (int i = 0; i < nrows; ++i) m.row(i) = rows[i];
  Eigen::JacobiSVD<RMatrix> svd(m, Eigen::ComputeFullV);
  const RVector dir = svd.matrixV().col(nun - 1);
  const double smin = svd.singularValues().size() >= nun
                          ? svd.singularValues()(nun - 1)
                          : 0.0;
  if (svd.singularValues().size() > 0 && smin > 1e-7 * svd.singularValues()(0)) return false;

  auto unpack = [&](int off, int r) {
    CMatrix d = CMatrix::Zero(r, r);
    int idx = off;
    for (int i = 0; i < r; ++i) d(i, i) = dir(idx++);
    for (int i = 0; i < r; ++i)
      for (int j = i + 1; j < r; ++j) {
        d(i, j) = cd(dir(idx), dir(idx + 1));
        d(j, i) = std::conj(d(i, j));
        idx += 2;
      }
    return d;
  };
  const CMatrix dx = unpack(offs[0], fx.r);
  std::vector<CMatrix> dq;
  for (size_t j = 0; j < fq.size(); ++j) dq.push_back(unpack(offs[j + 1], fq[j].r));
  const double dtau = dir(tau_idx);

  auto step_limit = [&](double sign) {
    double t = std::numeric_limits<double>::infinity();
    auto lim = [&](const CMatrix& delta) {
      if (delta.size() == 0) return;
      const double lmax = eigh(CMatrix(sign * delta)).values.maxCoeff();
      if (lmax > 1e-12) t = std::min(t, 1.0 / lmax);
    };
    lim(dx);
    for (const auto& d : dq) lim(d);
    if (sign * dtau > 1e-300) t = std::min(t, tau / (sign * dtau));
    return t;
  };
  // prefer the sign whose binding block is X
  double sign = 1.0;
  {
    const double tp = step_limit(1.0), tm = step_limit(-1.0);
    auto binds_x = [&](double sg, double t) {
      if (!std::isfinite(t)) return false;
      const double lx = eigh(CMatrix(sg * dx)).values.maxCoeff();
      return lx > 1e-12 && std::abs(t - 1.0 / lx) <= 1e-9 * t;
    };
    if (binds_x(1.0, tp))
      sign = 1.0;
    else if (binds_x(-1.0, tm))
      sign = -1.0;
    else
      sign = std::isfinite(tp) ? 1.0 : -1.0;
  }
  double t = step_limit(sign);
  if (!std::isfinite(t) || t <= 0.0) return false;

  auto apply = [&](double tt) {
    CMatrix xn = fx.v * (CMatrix::Identity(fx.r, fx.r) - tt * sign * dx) * fx.v.adjoint();
    std::vector<CMatrix> qn = q;
    for (size_t j = 0; j < fq.size(); ++j)
      if (fq[j].r > 0)
        qn[j] = fq[j].v * (CMatrix::Identity(fq[j].r, fq[j].r) - tt * sign * dq[j]) *
                fq[j].v.adjoint();
    const double taun = tau - tt * sign * dtau;
    return std::make_tuple(hermitian_part(xn), qn, taun);
  };
  for (int back = 0; back < 12; ++back) {
    auto [xn, qn, taun] = apply(t);
    if (recon_violation(s, xn, qn, taun, obj_expect) <= 2e-6) {
      if (rank_eps(xn, 1e-9) >= fx.r && back == 11) return false;
      x = xn;
      q = qn;
      tau = taun;
      return true;
    }
    t *= 0.5;
  }
  return false;
}

}  // namespace detail

// Proposition-style reconstruction: EVD when already rank one; otherwise the
// sufficient-condition shift X_hat = b xi xi^H with tau compensated inside the
// admissible interval (midpoint); otherwise joint rank reduction. Every path
// is verified against the original constraints and objective before being
// accepted.
inline ReconOutcome reconstruct_core(const ReconShape& shape, const CMatrix& x_in,
                                     const std::vector<CMatrix>& q_in, double tau_in,
                                     const CMatrix& a_star, double objective) {
  ReconOutcome out;
  out.X = x_in;
  out.q = q_in;
  out.tau = tau_in;
  out.rank_before = rank_eps(x_in, 1e-6);
  if (out.rank_before <= 1) {
    out.how = Reconstruction::none;
    return out;
  }

  // C* = A* - Ps F1; xi spans the extra null direction of A* beyond null(C*).
  const CMatrix cstar = a_star - shape.ps * shape.F1;
  const CMatrix xi_basis = nullspace_basis(cstar, 1e-6);
  CMatrix proj = CMatrix::Identity(x_in.rows(), x_in.cols());
  if (xi_basis.cols() > 0) proj -= xi_basis * xi_basis.adjoint();
  const CMatrix m = proj * x_in * proj;
  const Eigh em = eigh(m);
  const double b = em.values.maxCoeff();
  if (b > 1e-10 * max_abs(x_in)) {
    const CVector xi = em.vectors.col(em.values.size() - 1);
    const double bval = std::real((xi.adjoint() * x_in * xi).value());
    const CMatrix xres = x_in - bval * xi * xi.adjoint();
    const double lo =
        std::max(0.0, retr(shape.sigma_r2 / shape.sigma_e2 * shape.Y2b -
                               shape.ps / (shape.gamma_e * shape.sigma_e2) * shape.F2,
                           xres));
    const double hi = std::max(0.0, shape.sigma_r2 / shape.sigma_b2 * retr(shape.Y1b, xres));
    // midpoint when the interval is nonempty; otherwise the endpoints still
    // frequently verify (the interval bound is sufficient, not necessary)
    std::vector<double> candidates;
    if (lo <= hi * (1.0 + 1e-9) + 1e-15) candidates.push_back(0.5 * (lo + hi));
    candidates.push_back(hi);
    candidates.push_back(std::min(lo, 10.0 * hi + tau_in));
    candidates.push_back(0.0);
    CMatrix xhat = bval * xi * xi.adjoint();
    for (double dtau : candidates) {
      if (!(dtau >= 0.0) || tau_in + dtau < 0.0) continue;
      if (detail::recon_violation(shape, xhat, q_in, tau_in + dtau, objective) <= 2e-6) {
        out.X = std::move(xhat);
        out.tau = tau_in + dtau;
        out.how = Reconstruction::sufficient_condition;
        return out;
      }
    }
  }

  // fall back to rank reduction
  CMatrix x = x_in;
  std::vector<CMatrix> q = q_in;
  double tau = tau_in;
  for (int it = 0; it < 30 && rank_eps(x, 1e-6) > 1; ++it)
    if (!detail::rank_reduce_step(shape, x, q, tau, objective)) break;
  if (rank_eps(x, 1e-6) > 1)
    throw std::runtime_error("reconstruct_core: rank reduction stalled at rank " +
                             std::to_string(rank_eps(x, 1e-6)));
  if (detail::recon_violation(shape, x, q, tau, objective) > 2e-6)
    throw std::runtime_error("reconstruct_core: reduced point fails feasibility check");
  out.X = std::move(x);
  out.q = std::move(q);
  out.tau = tau;
  out.how = Reconstruction::rank_reduction;
  return out;
}

inline CVector normalize_phase(CVector v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  const cd ph = v(imax) / std::abs(v(imax));
  return v * std::conj(ph);
}

inline ReconShape perfect_shape(const PerfectData& d, const SystemParams& p, double gamma_e) {
  ReconShape s;
  s.ps = p.ps_w;
  s.gamma_e = gamma_e;
  s.sigma_r2 = p.sigma_r2;
  s.sigma_b2 = p.sigma_b2;
  s.sigma_e2 = p.sigma_e2;
  s.pr = p.pr_w;
  s.F1 = d.F1;
  s.F2 = d.F2;
  s.Y1b = d.Y1b;
  s.Y2b = d.Y2b;
  s.Phib = d.Phib;
  s.norm_q = d.hq;
  s.eve_q = d.gq;
  s.power_q.assign(d.k, 0.0);
  for (int i = 0; i < d.k; ++i) s.helper_rhs.push_back(p.eta * p.ps_w * d.hk_norm2[i]);
  return s;
}

inline BeamformingSolution reconstruct_rank_one(const SdrCertificate& cert, const ChannelSet& cs,
                                                const SystemParams& p, double gamma_e) {
  const PerfectData d = PerfectData::build(cs, p);
  const ReconShape shape = perfect_shape(d, p, gamma_e);
  ReconOutcome rec =
      reconstruct_core(shape, cert.X, cert.Q, cert.tau, cert.A_star, cert.objective);

  BeamformingSolution sol;
  const Eigh ex = eigh(rec.X);
  const double lmax = ex.values.maxCoeff();
  const CVector w = normalize_phase(ex.vectors.col(ex.values.size() - 1)) *
                    std::sqrt(std::max(lmax, 0.0) / rec.tau);
  sol.W = unvec(w, d.nt, d.nt);
  for (const auto& qb : rec.q) sol.Q_k.push_back(hermitian_part(qb) / rec.tau);
  sol.gamma_bar_e = gamma_e;
  sol.achieved_rate = achieved_secrecy_rate(sol, cs, p);
  sol.diagnostics.rank_x = rank_eps(rec.X, 1e-6);
  sol.diagnostics.reconstruction = rec.how;
  sol.diagnostics.relaxed_objective = cert.objective;
  sol.diagnostics.tau = rec.tau;
  sol.diagnostics.solver_primal_residual = cert.residuals.primal;
  sol.diagnostics.solver_gap = cert.residuals.gap;
  return sol;
}

inline BeamformingSolution solve_algorithm1(const ChannelSet& cs, const SystemParams& p,
                                            const GammaGrid& grid,
                                            const SdpSettings& settings = {}) {
  if (grid.values.empty()) throw std::invalid_argument("solve_algorithm1: empty grid");
  double best_val = -std::numeric_limits<double>::infinity();
  double best_gamma = 0.0;
  int skipped = 0;
  std::optional<SdrCertificate> best;
  for (double ge : grid.values) {
    HResult r = solve_H(cs, p, ge, settings);
    if (r.status != SolveStatus::optimal) {
      ++skipped;  // infeasible or unconverged grid point, surfaced below
      continue;
    }
    const double val = (1.0 + r.h) / (1.0 + ge);
    if (val > best_val) {
      best_val = val;
      best_gamma = ge;
      best = std::move(r.cert);
    }
  }
  if (!best) throw std::runtime_error("solve_algorithm1: no feasible grid point");
  BeamformingSolution sol = reconstruct_rank_one(*best, cs, p, best_gamma);
  if (skipped > 0)
    sol.diagnostics.note = "grid points skipped (infeasible/unconverged): " +
                           std::to_string(skipped) + "/" + std::to_string(grid.values.size());
  return sol;
}

// ---- suboptimal scheme 1: optimal-structure restriction ----

inline BeamformingSolution suboptimal1(const ChannelSet& cs, const SystemParams& p,
                                       const GammaGrid& grid, const SdpSettings& settings = {}) {
  const int nt = cs.nt();
  if (nt < 3) throw std::invalid_argument("suboptimal1: requires Nt >= 3");
  const int k = cs.k();
  const int nv = nt - 2;

  CMatrix h1(nt, 2), h2(nt, 2);
  h1.col(0) = cs.ht0;
  h1.col(1) = cs.g0;
  h2.col(0) = cs.h0;
  h2.col(1) = cs.g0;
  Eigen::JacobiSVD<CMatrix> svd1(h1, Eigen::ComputeThinU), svd2(h2, Eigen::ComputeThinU);
  const CMatrix u1 = svd1.matrixU().leftCols(2), u2 = svd2.matrixU().leftCols(2);

  const CVector htb = u1.adjoint() * cs.ht0;  // 2-dim reduced channels
  const CVector h0b = u2.adjoint() * cs.h0;
  const CVector g0b = u1.adjoint() * cs.g0;
  CVector uprime = htb.conjugate() / htb.norm();
  CVector uperp(2);
  uperp << -std::conj(uprime(1)), std::conj(uprime(0));
  const double cgain = std::norm((g0b.transpose() * uperp).value());

  const CVector f1b = vec(CMatrix(htb * h0b.transpose()));
  const CVector f2b = vec(CMatrix(g0b * h0b.transpose()));
  const CMatrix eye2 = CMatrix::Identity(2, 2);
  const CMatrix F1b = f1b.conjugate() * f1b.transpose();
  const CMatrix F2b = f2b.conjugate() * f2b.transpose();
  const CMatrix Y1p = kron(CMatrix(htb.conjugate() * htb.transpose()), eye2);
  const CMatrix Y2p = kron(CMatrix(g0b.conjugate() * g0b.transpose()), eye2);
  const CMatrix thetab = p.ps_w * h0b * h0b.adjoint() + p.sigma_r2 * eye2;
  const CMatrix Phibp = kron(eye2, thetab.transpose());
  const PerfectData d = PerfectData::build(cs, p);

  const double st = 1.0 / p.sigma_b2;
  const double sz = st * p.pr_w / (p.ps_w * h0b.squaredNorm() + p.sigma_r2);
  const double sv = st * p.pr_w / p.sigma_r2;
  auto build = [&](double ge) {
    SdpProblem prob;
    BlockId z = prob.add_hermitian_block("Z", 4, sz);
    BlockId v = prob.add_hermitian_block("V", nv, sv);
    std::vector<BlockId> q;
    for (int i = 0; i < k; ++i)
      q.push_back(prob.add_hermitian_block("Q" + std::to_string(i + 1), nt,
                                           std::max(st * p.eta * p.ps_w * d.hk_norm2[i], 1e-300)));
    const int tau = prob.add_scalar("tau", VarSign::nonneg, st);
    prob.set_objective(Sense::maximize, p.ps_w * prob.tr_herm(z, F1b));
    LinExpr norm = p.sigma_r2 * prob.tr_herm(z, Y1p);
    for (int i = 0; i < k; ++i) norm += prob.tr_herm(q[i], d.hq[i]);
    norm += prob.scalar_expr(tau, p.sigma_b2);
    prob.add_constraint("norm", norm, Rel::le, 1.0);
    LinExpr eve = p.ps_w * prob.tr_herm(z, F2b) + (-ge * p.sigma_r2) * prob.tr_herm(z, Y2p) +
                  (-ge * p.sigma_r2 * cgain) * prob.trace_of(v);
    for (int i = 0; i < k; ++i) eve += (-ge) * prob.tr_herm(q[i], d.gq[i]);
    eve += prob.scalar_expr(tau, -ge * p.sigma_e2);
    prob.add_constraint("eve", eve, Rel::le, 0.0);
    LinExpr power = prob.tr_herm(z, Phibp) + p.sigma_r2 * prob.trace_of(v);
    power += prob.scalar_expr(tau, -p.pr_w);
    prob.add_constraint("power", power, Rel::le, 0.0);
    for (int i = 0; i < k; ++i) {
      LinExpr he = prob.trace_of(q[i]);
      he += prob.scalar_expr(tau, -p.eta * p.ps_w * d.hk_norm2[i]);
      prob.add_constraint("helper" + std::to_string(i + 1), he, Rel::le, 0.0);
    }
    return prob;
  };

  double best_val = -std::numeric_limits<double>::infinity();
  double best_gamma = 0.0;
  std::optional<SdpSolution> best;
  for (double ge : grid.values) {
    SdpSolution sol = solve(build(ge), settings);
    if (sol.status != SolveStatus::optimal) continue;
    const double val = (1.0 + sol.objective) / (1.0 + ge);
    if (val > best_val) {
      best_val = val;
      best_gamma = ge;
      best = std::move(sol);
    }
  }
  if (!best) throw std::runtime_error("suboptimal1: no feasible grid point");

  // reconstruct rank-one Z with V and Q held fixed (V enters like an AN block)
  ReconShape shape;
  shape.ps = p.ps_w;
  shape.gamma_e = best_gamma;
  shape.sigma_r2 = p.sigma_r2;
  shape.sigma_b2 = p.sigma_b2;
  shape.sigma_e2 = p.sigma_e2;
  shape.pr = p.pr_w;
  shape.F1 = F1b;
  shape.F2 = F2b;
  shape.Y1b = Y1p;
  shape.Y2b = Y2p;
  shape.Phib = Phibp;
  for (int i = 0; i < k; ++i) {
    shape.norm_q.push_back(d.hq[i]);
    shape.eve_q.push_back(d.gq[i]);
    shape.power_q.push_back(0.0);
    shape.helper_rhs.push_back(p.eta * p.ps_w * d.hk_norm2[i]);
  }
  shape.norm_q.push_back(CMatrix::Zero(nv, nv));
  shape.eve_q.push_back(p.sigma_r2 * cgain * CMatrix::Identity(nv, nv));
  shape.power_q.push_back(p.sigma_r2);
  shape.helper_rhs.push_back(-1.0);

  std::vector<CMatrix> side;
  for (int i = 0; i < k; ++i) side.push_back(best->herm_values.at("Q" + std::to_string(i + 1)));
  side.push_back(best->herm_values.at("V"));
  const CMatrix a_star = -best->herm_block_duals.at("Z");
  ReconOutcome rec = reconstruct_core(shape, best->herm_values.at("Z"), side,
                                      best->scalar_values.at("tau"), a_star, best->objective);

  const Eigh ez = eigh(rec.X);
  const CVector bvec = normalize_phase(ez.vectors.col(3)) *
                       std::sqrt(std::max(ez.values(3), 0.0) / rec.tau);
  const CMatrix bmat = unvec(bvec, 2, 2);
  const double trv = std::real(rec.q[k].trace());
  CMatrix cmat = CMatrix::Zero(2, nv);
  if (trv > 0.0) {
    CVector v0 = CVector::Zero(nv);
    v0(0) = 1.0;  // deterministic unit direction for the rank-one V factor
    cmat = uperp * std::sqrt(trv / rec.tau) * v0.transpose();
  }
  const CMatrix u2perp_proj = CMatrix::Identity(nt, nt) - u2 * u2.adjoint();
  Eigh e2 = eigh(u2perp_proj);
  CMatrix u2perp(nt, nv);
  int cidx = 0;
  for (Eigen::Index i = 0; i < e2.values.size() && cidx < nv; ++i)
    if (e2.values(i) > 0.5) u2perp.col(cidx++) = e2.vectors.col(i);

  BeamformingSolution sol;
  sol.W = u1.conjugate() * bmat * u2.adjoint() + u1.conjugate() * cmat * u2perp.adjoint();
  for (int i = 0; i < k; ++i) sol.Q_k.push_back(hermitian_part(rec.q[i]) / rec.tau);
  sol.gamma_bar_e = best_gamma;
  sol.achieved_rate = achieved_secrecy_rate(sol, cs, p);
  sol.diagnostics.rank_x = rank_eps(rec.X, 1e-6);
  sol.diagnostics.reconstruction = rec.how;
  sol.diagnostics.relaxed_objective = best->objective;
  sol.diagnostics.tau = rec.tau;
  return sol;
}

// ---- suboptimal schemes 2 and 3: null-space jamming with fixed covariances ----

namespace detail {

struct FixedJamming {
  std::vector<CMatrix> q;  // actual-unit AN covariances
  double eve_interference = 0.0;
};

// Aligned ZF: each helper beams its full harvested power onto the projection
// of Eve's channel into Bob's null space.
inline FixedJamming zf_jamming(const ChannelSet& cs, const SystemParams& p) {
  FixedJamming f;
  for (int i = 0; i < cs.k(); ++i) {
    const CMatrix vk = nullspace_of_row(cs.ht_k[i]);
    const CVector gk = vk.transpose() * cs.g_k[i];
    const double budget = p.eta * p.ps_w * cs.h_k[i].squaredNorm();
    if (gk.norm() <= 1e-12 * cs.g_k[i].norm()) {
      // Eve's channel lies entirely along Bob's: helper stays silent
      f.q.push_back(CMatrix::Zero(cs.nt(), cs.nt()));
      continue;
    }
    const double zeta2 = budget / gk.squaredNorm();
    const CMatrix qt = zeta2 * gk.conjugate() * gk.transpose();
    f.q.push_back(vk * qt * vk.adjoint());
    f.eve_interference += budget * gk.squaredNorm();
  }
  return f;
}

inline FixedJamming isotropic_jamming(const ChannelSet& cs, const SystemParams& p) {
  FixedJamming f;
  const int nt = cs.nt();
  for (int i = 0; i < cs.k(); ++i) {
    const CMatrix vk = nullspace_of_row(cs.ht_k[i]);
    const double budget = p.eta * p.ps_w * cs.h_k[i].squaredNorm();
    const CMatrix qk = budget / (nt - 1) * vk * vk.adjoint();
    f.eve_interference +=
        std::real((cs.g_k[i].transpose() * qk * cs.g_k[i].conjugate()).value());
    f.q.push_back(qk);
  }
  return f;
}

struct FixedJamSolveResult {
  BeamformingSolution sol;
  double lambda = 0.0, alpha = 0.0, beta0 = 0.0;
  double primal_h = 0.0;  // H value from the SDR
};

inline FixedJamSolveResult solve_fixed_jamming(const ChannelSet& cs, const SystemParams& p,
                                               const GammaGrid& grid, const FixedJamming& jam,
                                               const SdpSettings& settings) {
  const PerfectData d = PerfectData::build(cs, p);
  const double qe = jam.eve_interference;
  const double st = 1.0 / p.sigma_b2;
  const double sx = st * p.pr_w / (p.ps_w * cs.h0.squaredNorm() + p.sigma_r2);
  auto build = [&](double ge) {
    SdpProblem prob;
    BlockId x = prob.add_hermitian_block("X", d.nt * d.nt, sx);
    const int tau = prob.add_scalar("tau", VarSign::nonneg, st);
    prob.set_objective(Sense::maximize, p.ps_w * prob.tr_herm(x, d.F1));
    LinExpr norm = p.sigma_r2 * prob.tr_herm(x, d.Y1b);
    norm += prob.scalar_expr(tau, p.sigma_b2);
    prob.add_constraint("norm", norm, Rel::le, 1.0);
    LinExpr eve =
        p.ps_w * prob.tr_herm(x, d.F2) + (-ge * p.sigma_r2) * prob.tr_herm(x, d.Y2b);
    eve += prob.scalar_expr(tau, -ge * (qe + p.sigma_e2));
    prob.add_constraint("eve", eve, Rel::le, 0.0);
    LinExpr power = prob.tr_herm(x, d.Phib);
    power += prob.scalar_expr(tau, -p.pr_w);
    prob.add_constraint("power", power, Rel::le, 0.0);
    return prob;
  };

  double best_val = -std::numeric_limits<double>::infinity();
  double best_gamma = 0.0;
  std::optional<SdpSolution> best;
  for (double ge : grid.values) {
    SdpSolution sol = solve(build(ge), settings);
    if (sol.status != SolveStatus::optimal) continue;
    const double val = (1.0 + sol.objective) / (1.0 + ge);
    if (val > best_val) {
      best_val = val;
      best_gamma = ge;
      best = std::move(sol);
    }
  }
  if (!best) throw std::runtime_error("fixed-jamming scheme: no feasible grid point");

  ReconShape shape;
  shape.ps = p.ps_w;
  shape.gamma_e = best_gamma;
  shape.sigma_r2 = p.sigma_r2;
  shape.sigma_b2 = p.sigma_b2;
  shape.sigma_e2 = qe + p.sigma_e2;  // fixed jamming folds into Eve's noise
  shape.pr = p.pr_w;
  shape.F1 = d.F1;
  shape.F2 = d.F2;
  shape.Y1b = d.Y1b;
  shape.Y2b = d.Y2b;
  shape.Phib = d.Phib;
  const CMatrix a_star = -best->herm_block_duals.at("X");
  ReconOutcome rec = reconstruct_core(shape, best->herm_values.at("X"), {},
                                      best->scalar_values.at("tau"), a_star, best->objective);

  FixedJamSolveResult out;
  const Eigh ex = eigh(rec.X);
  const CVector w = normalize_phase(ex.vectors.col(ex.values.size() - 1)) *
                    std::sqrt(std::max(ex.values.maxCoeff(), 0.0) / rec.tau);
  out.sol.W = unvec(w, d.nt, d.nt);
  out.sol.Q_k = jam.q;
  out.sol.gamma_bar_e = best_gamma;
  out.sol.achieved_rate = achieved_secrecy_rate(out.sol, cs, p);
  out.sol.diagnostics.rank_x = rank_eps(rec.X, 1e-6);
  out.sol.diagnostics.reconstruction = rec.how;
  out.sol.diagnostics.relaxed_objective = best->objective;
  out.sol.diagnostics.tau = rec.tau;
  out.lambda = best->constraint_duals.at("norm");
  out.alpha = best->constraint_duals.at("eve");
  out.beta0 = best->constraint_duals.at("power");
  out.primal_h = best->objective;
  return out;
}

}  // namespace detail

// Semi-closed-form dual reconstruction for the ZF scheme: w = mu * top
// eigenvector of the dual matrix Z*, with mu fixed by the relay power budget.
struct ZfDualCheck {
  CVector w_dual;
  double primal_h = 0.0;
  double dual_h = 0.0;
};

inline BeamformingSolution suboptimal2_zf(const ChannelSet& cs, const SystemParams& p,
                                          const GammaGrid& grid,
                                          const SdpSettings& settings = {},
                                          ZfDualCheck* check = nullptr) {
  const detail::FixedJamming jam = detail::zf_jamming(cs, p);
  detail::FixedJamSolveResult r = detail::solve_fixed_jamming(cs, p, grid, jam, settings);
  if (check) {
    const PerfectData d = PerfectData::build(cs, p);
    const double ge = r.sol.gamma_bar_e;
    const CMatrix z = p.ps_w * d.F1 - r.lambda * p.sigma_r2 * d.Y1b - r.alpha * p.ps_w * d.F2 +
                      r.alpha * ge * p.sigma_r2 * d.Y2b - r.beta0 * d.Phib;
    const Eigh ez = eigh(z);
    const CVector nu = ez.vectors.col(ez.values.size() - 1);
    const double mu = std::sqrt(p.pr_w / std::real((nu.adjoint() * d.Phib * nu).value()));
    check->w_dual = mu * nu;
    const CMatrix wd = unvec(check->w_dual, cs.nt(), cs.nt());
    BeamformingSolution tmp;
    tmp.W = wd;
    tmp.Q_k = jam.q;
    check->dual_h = sinr_bob(wd, jam.q, cs, p);
    check->primal_h = r.primal_h;
  }
  return r.sol;
}

inline BeamformingSolution suboptimal3_isotropic(const ChannelSet& cs, const SystemParams& p,
                                                 const GammaGrid& grid,
                                                 const SdpSettings& settings = {}) {
  const detail::FixedJamming jam = detail::isotropic_jamming(cs, p);
  return detail::solve_fixed_jamming(cs, p, grid, jam, settings).sol;
}

}  // namespace hjbeam
