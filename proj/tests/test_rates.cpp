#include <catch2/catch_amalgamated.hpp>

#include "hjbeam/rates.hpp"

using namespace hjbeam;

namespace {

ChannelSet scalar_channels(double h0, double ht0, double g0, double ht1, double g1, double h1) {
  ChannelSet cs;
  cs.h0 = CVector::Constant(1, cd(h0, 0));
  cs.ht0 = CVector::Constant(1, cd(ht0, 0));
  cs.g0 = CVector::Constant(1, cd(g0, 0));
  cs.h_k = {CVector::Constant(1, cd(h1, 0))};
  cs.ht_k = {CVector::Constant(1, cd(ht1, 0))};
  cs.g_k = {CVector::Constant(1, cd(g1, 0))};
  return cs;
}

}  // namespace

TEST_CASE("harvested energy") {
  CVector h(2);
  h << cd(1, 0), cd(1, 0);
  REQUIRE(harvested_energy(h, 0.0, 0.5) == 0.0);
  REQUIRE(harvested_energy(h, 1.0, 0.5) == Catch::Approx(1.0));  // eta Ps ||h||^2 = 0.5*1*2
}

TEST_CASE("harvested energy Monte Carlo with section V defaults") {
  SystemParams p;
  p.nt = 3;
  p.k = 1;
  p.ps_w = 1.0;
  p.eta = 0.5;
  Geometry g = Geometry::defaults(p.k);
  g.shadow_sigma = 0.0;
  Rng rng(5);
  double acc = 0.0;
  const int n = 10000;
  for (int t = 0; t < n; ++t) {
    ChannelSet cs = draw_channels(p, g, rng);
    acc += harvested_energy(cs.h_k[0], p.ps_w, p.eta);
  }
  // d = 2 m, z = 1, Nt = 3: E[E_k] ~ 0.5 * 1 * 3 * 2.5e-4
  REQUIRE(acc / n == Catch::Approx(3.75e-4).epsilon(0.03));
}

TEST_CASE("relay transmit power") {
  const int nt = 3;
  CVector h0(nt);
  h0 << cd(1, 0), cd(0, 0), cd(0, 0);
  REQUIRE(relay_tx_power(CMatrix::Zero(nt, nt), h0, 1.0, 0.1) == 0.0);
  // W = I, Ps = 1, ||h0||^2 = 1, sigma_r2 = 0.1, Nt = 3 -> 1 + 0.3
  REQUIRE(relay_tx_power(CMatrix::Identity(nt, nt), h0, 1.0, 0.1) == Catch::Approx(1.3));

  // identity vs the vectorized quadratic form
  Rng rng(3);
  CMatrix w(nt, nt);
  CVector h(nt);
  for (int i = 0; i < nt; ++i) {
    h(i) = cd(rng.normal(), rng.normal());
    for (int j = 0; j < nt; ++j) w(i, j) = cd(rng.normal(), rng.normal());
  }
  const double ps = 0.7, sr2 = 0.05;
  const CMatrix theta = ps * h * h.adjoint() + sr2 * CMatrix::Identity(nt, nt);
  const CMatrix phib = kron(CMatrix::Identity(nt, nt), theta.transpose());
  const CVector wv = vec(w);
  const double lhs = relay_tx_power(w, h, ps, sr2);
  const double rhs = std::real((wv.adjoint() * phib * wv).value());
  REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("SINRs against the scalar oracle") {
  SystemParams p;
  p.nt = 2;  // params validate() wants nt >= 2; channels below are 1-dim
  const double ps = 2.0, sr2 = 0.3, sb2 = 0.2, se2 = 0.4;
  SystemParams sp;
  sp.ps_w = ps;
  sp.sigma_r2 = sr2;
  sp.sigma_b2 = sb2;
  sp.sigma_e2 = se2;
  const double wv = 0.8, q = 0.15;
  ChannelSet cs = scalar_channels(1.0, 1.0, 0.6, 1.0, 0.9, 1.0);
  CMatrix w = CMatrix::Constant(1, 1, cd(wv, 0));
  std::vector<CMatrix> qs = {CMatrix::Constant(1, 1, cd(q, 0))};

  const double gb = sinr_bob(w, qs, cs, sp);
  REQUIRE(gb == Catch::Approx(ps * wv * wv / (sr2 * wv * wv + q + sb2)).epsilon(1e-12));
  const double ge = sinr_eve(w, qs, cs, sp);
  const double num_e = ps * std::pow(0.6 * wv * 1.0, 2);
  const double den_e = sr2 * 0.36 * wv * wv + 0.81 * q + se2;
  REQUIRE(ge == Catch::Approx(num_e / den_e).epsilon(1e-12));

  REQUIRE(sinr_bob(CMatrix::Zero(1, 1), qs, cs, sp) == 0.0);
  REQUIRE(sinr_eve(CMatrix::Zero(1, 1), qs, cs, sp) == 0.0);
}

TEST_CASE("increasing any Q_k never raises Bob's SINR") {
  SystemParams p;
  p.nt = 3;
  p.k = 2;
  Geometry g = Geometry::defaults(p.k);
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    ChannelSet cs = draw_channels(p, g, rng);
    CMatrix w(p.nt, p.nt);
    for (int i = 0; i < p.nt; ++i)
      for (int j = 0; j < p.nt; ++j) w(i, j) = cd(rng.normal(), rng.normal());
    std::vector<CMatrix> q(p.k, CMatrix::Zero(p.nt, p.nt));
    const double g0v = sinr_bob(w, q, cs, p);
    CVector v(p.nt);
    for (int i = 0; i < p.nt; ++i) v(i) = cd(rng.normal(), rng.normal());
    q[t % p.k] = 1e-4 * v * v.adjoint();
    REQUIRE(sinr_bob(w, q, cs, p) <= g0v * (1.0 + 1e-12));
  }
}

TEST_CASE("heavy aligned jamming drives Eve's SINR to zero") {
  SystemParams p;
  p.nt = 3;
  p.k = 1;
  Geometry g = Geometry::defaults(p.k);
  Rng rng(13);
  ChannelSet cs = draw_channels(p, g, rng);
  CMatrix w = CMatrix::Identity(p.nt, p.nt);
  const double base = sinr_eve(w, {CMatrix::Zero(p.nt, p.nt)}, cs, p);
  const CVector dir = cs.g_k[0].conjugate();
  std::vector<CMatrix> q = {CMatrix(1e6 * dir * dir.adjoint())};
  const double jammed = sinr_eve(w, q, cs, p);
  REQUIRE(jammed < 1e-6 * base);
}

TEST_CASE("secrecy rate") {
  REQUIRE(secrecy_rate(1.0, 1.0) == 0.0);
  REQUIRE(secrecy_rate(3.0, 1.0) == Catch::Approx(0.5));
  REQUIRE(secrecy_rate(0.0, 5.0) == 0.0);
}

TEST_CASE("worst_case_validate with zero radii reproduces the nominal point") {
  SystemParams p;
  p.nt = 3;
  p.k = 2;
  Geometry g = Geometry::defaults(p.k);
  Rng rng(17);
  ChannelSet cs = draw_channels(p, g, rng);
  UncertaintySpec u;
  u.estimates = cs;
  u.eps_k = {0, 0};
  u.eps_kp = {0, 0};
  u.eps_kpp = {0, 0};

  BeamformingSolution sol;
  sol.W = CMatrix::Identity(p.nt, p.nt);
  sol.Q_k = {CMatrix::Zero(p.nt, p.nt), CMatrix::Zero(p.nt, p.nt)};
  const double gb = sinr_bob(sol.W, sol.Q_k, cs, p);
  const double ge = sinr_eve(sol.W, sol.Q_k, cs, p);
  Rng vr(1);
  WorstCaseReport rep = worst_case_validate(sol, u, p, gb, ge, 100, vr);
  REQUIRE(rep.min_gamma_b == Catch::Approx(gb));
  REQUIRE(rep.max_gamma_e == Catch::Approx(ge));
  REQUIRE(rep.violations == 0);
}

TEST_CASE("solution JSON round trip") {
  BeamformingSolution s;
  s.W = CMatrix::Identity(2, 2) * cd(0.5, 0.25);
  s.Q_k = {CMatrix::Identity(2, 2)};
  s.gamma_bar_e = 1.5;
  s.achieved_rate = 2.25;
  s.diagnostics.rank_x = 1;
  s.diagnostics.delta = 0.1;
  BeamformingSolution back = solution_from_json(solution_to_json(s));
  REQUIRE((back.W - s.W).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(back.achieved_rate == s.achieved_rate);
  REQUIRE(back.diagnostics.rank_x == 1);
}
