#pragma once

// Physical quantities for a candidate relay matrix W and AN covariances Q_k:
// harvested energy, relay transmit power, both SINRs, the two-slot secrecy
// rate, and Monte-Carlo worst-case validation of robust certificates.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "hjbeam/numerics.hpp"
#include "hjbeam/scenario.hpp"

namespace hjbeam {

enum class Reconstruction { none, sufficient_condition, rank_reduction, feasibility_repair };

inline const char* to_string(Reconstruction r) {
  switch (r) {
    case Reconstruction::none: return "none";
    case Reconstruction::sufficient_condition: return "sufficient_condition";
    case Reconstruction::rank_reduction: return "rank_reduction";
    case Reconstruction::feasibility_repair: return "feasibility_repair";
  }
  return "?";
}

struct SolutionDiagnostics {
  int rank_x = 0;
  Reconstruction reconstruction = Reconstruction::none;
  double solver_primal_residual = 0.0;
  double solver_gap = 0.0;
  double relaxed_objective = 0.0;   // SDR optimum the reconstruction must preserve
  double delta = 0.0;               // robust: certified worst-case Bob numerator bound
  double gamma_e0 = 0.0;            // robust: certified worst-case Eve SINR after repair
  double tau = 0.0;
  std::string note;
};

struct BeamformingSolution {
  CMatrix W;                 // nt x nt relay matrix
  std::vector<CMatrix> Q_k;  // helper AN covariances (actual units)
  double gamma_bar_e = 0.0;  // chosen Eve SINR target
  double achieved_rate = 0.0;
  SolutionDiagnostics diagnostics;
};

inline double harvested_energy(const CVector& h_k, double ps, double eta) {
  return eta * ps * h_k.squaredNorm();
}

inline double relay_tx_power(const CMatrix& w, const CVector& h0, double ps, double sigma_r2) {
  const CMatrix theta =
      ps * h0 * h0.adjoint() + sigma_r2 * CMatrix::Identity(h0.size(), h0.size());
  return std::real((w * theta * w.adjoint()).trace());
}

inline double sinr_bob(const CMatrix& w, const std::vector<CMatrix>& q, const ChannelSet& cs,
                       const SystemParams& p) {
  const cd num = (cs.ht0.transpose() * w * cs.h0).value();
  double den = p.sigma_r2 * std::real((cs.ht0.transpose() * w * w.adjoint() * cs.ht0.conjugate()).value());
  for (size_t i = 0; i < q.size(); ++i)
    den += std::real((cs.ht_k[i].transpose() * q[i] * cs.ht_k[i].conjugate()).value());
  den += p.sigma_b2;
  const double g = p.ps_w * std::norm(num) / den;
  return g < 1e-15 ? 0.0 : g;
}

inline double sinr_eve(const CMatrix& w, const std::vector<CMatrix>& q, const ChannelSet& cs,
                       const SystemParams& p) {
  const cd num = (cs.g0.transpose() * w * cs.h0).value();
  double den = p.sigma_r2 * std::real((cs.g0.transpose() * w * w.adjoint() * cs.g0.conjugate()).value());
  for (size_t i = 0; i < q.size(); ++i)
    den += std::real((cs.g_k[i].transpose() * q[i] * cs.g_k[i].conjugate()).value());
  den += p.sigma_e2;
  const double g = p.ps_w * std::norm(num) / den;
  return g < 1e-15 ? 0.0 : g;
}

// 0.5*[log2(1+gb) - log2(1+ge)]^+ ; the 1/2 is the two-slot protocol factor.
inline double secrecy_rate(double gamma_b, double gamma_e) {
  const double r = 0.5 * (std::log2(1.0 + gamma_b) - std::log2(1.0 + gamma_e));
  return std::max(r, 0.0);
}

inline double achieved_secrecy_rate(const BeamformingSolution& s, const ChannelSet& cs,
                                    const SystemParams& p) {
  return secrecy_rate(sinr_bob(s.W, s.Q_k, cs, p), sinr_eve(s.W, s.Q_k, cs, p));
}

struct WorstCaseReport {
  double min_rate = 0.0;
  double max_gamma_e = 0.0;
  double min_gamma_b = 0.0;
  int violations = 0;
  int samples = 0;
};

// Samples all uncertainty balls and checks the Charnes-Cooper-level claims
// gamma_b >= delta - tol and gamma_e <= gamma_e0 + tol, plus per-sample
// energy causality tr(Q_k) <= eta*Ps*||h_k||^2.
inline WorstCaseReport worst_case_validate(const BeamformingSolution& sol,
                                           const UncertaintySpec& u, const SystemParams& p,
                                           double claimed_delta, double claimed_gamma_e,
                                           int n_samples, Rng& rng, double tol = 1e-6) {
  WorstCaseReport rep;
  rep.samples = n_samples;
  rep.min_rate = std::numeric_limits<double>::infinity();
  rep.min_gamma_b = std::numeric_limits<double>::infinity();
  rep.max_gamma_e = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const ChannelSet cs = sample_uncertain(u, rng);
    const double gb = sinr_bob(sol.W, sol.Q_k, cs, p);
    const double ge = sinr_eve(sol.W, sol.Q_k, cs, p);
    rep.min_gamma_b = std::min(rep.min_gamma_b, gb);
    rep.max_gamma_e = std::max(rep.max_gamma_e, ge);
    rep.min_rate = std::min(rep.min_rate, secrecy_rate(gb, ge));
    bool bad = gb < claimed_delta - tol * (1.0 + claimed_delta) ||
               ge > claimed_gamma_e + tol * (1.0 + claimed_gamma_e);
    for (size_t i = 0; i < sol.Q_k.size() && !bad; ++i) {
      const double budget = harvested_energy(cs.h_k[i], p.ps_w, p.eta);
      if (std::real(sol.Q_k[i].trace()) > budget * (1.0 + tol)) bad = true;
    }
    if (bad) ++rep.violations;
  }
  return rep;
}

inline nlohmann::json solution_to_json(const BeamformingSolution& s) {
  nlohmann::json j;
  j["W"] = cmatrix_to_json(s.W);
  j["Q_k"] = nlohmann::json::array();
  for (const auto& q : s.Q_k) j["Q_k"].push_back(cmatrix_to_json(q));
  j["gamma_bar_e"] = s.gamma_bar_e;
  j["achieved_rate"] = s.achieved_rate;
  j["diagnostics"] = {{"rank_x", s.diagnostics.rank_x},
                      {"reconstruction", to_string(s.diagnostics.reconstruction)},
                      {"solver_primal_residual", s.diagnostics.solver_primal_residual},
                      {"solver_gap", s.diagnostics.solver_gap},
                      {"relaxed_objective", s.diagnostics.relaxed_objective},
                      {"delta", s.diagnostics.delta},
                      {"gamma_e0", s.diagnostics.gamma_e0},
                      {"tau", s.diagnostics.tau},
                      {"note", s.diagnostics.note}};
  return j;
}

inline BeamformingSolution solution_from_json(const nlohmann::json& j) {
  BeamformingSolution s;
  s.W = cmatrix_from_json(j.at("W"));
  for (const auto& q : j.at("Q_k")) s.Q_k.push_back(cmatrix_from_json(q));
  s.gamma_bar_e = j.at("gamma_bar_e").get<double>();
  s.achieved_rate = j.at("achieved_rate").get<double>();
  if (j.contains("diagnostics")) {
    const auto& d = j["diagnostics"];
    s.diagnostics.rank_x = d.value("rank_x", 0);
    s.diagnostics.delta = d.value("delta", 0.0);
    s.diagnostics.gamma_e0 = d.value("gamma_e0", 0.0);
    s.diagnostics.tau = d.value("tau", 0.0);
    s.diagnostics.relaxed_objective = d.value("relaxed_objective", 0.0);
    s.diagnostics.note = d.value("note", "");
  }
  return s;
}

}  // namespace hjbeam
