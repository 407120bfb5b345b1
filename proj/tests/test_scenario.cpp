#include <catch2/catch_amalgamated.hpp>

#include "hjbeam/scenario.hpp"

using namespace hjbeam;

TEST_CASE("pathloss with fixed shadowing") {
  Geometry g = Geometry::defaults(1);
  g.shadow_sigma = 0.0;  // z = 1
  Rng rng(1);
  REQUIRE(pathloss_shadowing(1.0, g, rng) == Catch::Approx(1e-3).epsilon(1e-12));
  REQUIRE(pathloss_shadowing(2.0, g, rng) == Catch::Approx(2.5e-4).epsilon(1e-12));
  REQUIRE_THROWS_AS(pathloss_shadowing(0.5, g, rng), std::invalid_argument);
}

TEST_CASE("shadowing statistics: log10(z) mean 0, std 0.4") {
  Geometry g = Geometry::defaults(1);
  Rng rng(42);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double gain = pathloss_shadowing(1.0, g, rng);
    const double l = std::log10(gain / 1e-3);
    sum += l;
    sumsq += l * l;
  }
  const double mean = sum / n;
  const double stddev = std::sqrt(sumsq / n - mean * mean);
  REQUIRE(std::abs(mean) < 0.01);
  REQUIRE(stddev == Catch::Approx(0.4).margin(0.01));
}

TEST_CASE("channel moments") {
  SystemParams p;
  p.nt = 3;
  p.k = 2;

  SECTION("pure LOS limit: ||h_k||^2 / D -> Nt") {
    Geometry g = Geometry::defaults(p.k);
    g.shadow_sigma = 0.0;
    g.rician_k = 1e12;
    Rng rng(5);
    ChannelSet cs = draw_channels(p, g, rng);
    const double d = g.a0 * std::pow(g.helper_radius / g.d0, -g.pathloss_exp);
    REQUIRE(cs.h_k[0].squaredNorm() / d == Catch::Approx(3.0).epsilon(1e-5));
  }

  SECTION("Rician K=3 mean power and Rayleigh per-entry variance") {
    Geometry g = Geometry::defaults(p.k);
    g.shadow_sigma = 0.0;
    Rng rng(7);
    const int trials = 10000;
    double acc = 0.0, acc_ray = 0.0;
    for (int t = 0; t < trials; ++t) {
      ChannelSet cs = draw_channels(p, g, rng);
      acc += cs.h_k[0].squaredNorm();
      acc_ray += cs.ht_k[0].cwiseAbs2().mean();
    }
    const double d_alice_helper = g.a0 * std::pow(g.helper_radius / g.d0, -g.pathloss_exp);
    REQUIRE(acc / trials == Catch::Approx(p.nt * d_alice_helper).epsilon(0.03));
    const double hx = g.helper_radius, hy = 0.0;
    const double bx = g.relay_distance + g.bob_distance * std::cos(g.bob_angle);
    const double by = g.bob_distance * std::sin(g.bob_angle);
    const double dhb = std::hypot(bx - hx, by - hy);
    const double d_hb = g.a0 * std::pow(dhb / g.d0, -g.pathloss_exp);
    REQUIRE(acc_ray / trials == Catch::Approx(d_hb).epsilon(0.03));
  }
}

TEST_CASE("same seed gives bit-identical channels") {
  SystemParams p;
  Rng a(99), b(99);
  Geometry g = Geometry::defaults(p.k);
  ChannelSet c1 = draw_channels(p, g, a);
  ChannelSet c2 = draw_channels(p, g, b);
  REQUIRE((c1.h0 - c2.h0).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((c1.g_k[4] - c2.g_k[4]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uncertainty radii from ratios") {
  SystemParams p;
  p.nt = 3;
  p.k = 1;
  Geometry g = Geometry::defaults(p.k);
  Rng rng(3);
  ChannelSet est = draw_channels(p, g, rng);

  UncertaintyRatios zero{0, 0, 0, 0, 0};
  UncertaintySpec u0 = radii_from_ratios(est, zero, p, g);
  REQUIRE(u0.all_zero());

  // alpha0^2 = 0.10, Nt = 3, relay->Eve distance 5 -> D = 4e-5, eps0 = 1.2e-5
  UncertaintyRatios r{0.10, 0.0, 0.0, 0.0, 0.0};
  UncertaintySpec u = radii_from_ratios(est, r, p, g);
  REQUIRE(u.eps0 == Catch::Approx(0.10 * 3 * 4e-5).epsilon(1e-12));

  UncertaintyRatios r2{0.20, 0.0, 0.0, 0.0, 0.0};
  UncertaintySpec u2 = radii_from_ratios(est, r2, p, g);
  REQUIRE(u2.eps0 == Catch::Approx(2.0 * u.eps0).epsilon(1e-12));
}

TEST_CASE("ball sampling: containment, boundary coverage, mean") {
  Rng rng(11);
  const int nt = 3;
  CVector center = CVector::Zero(nt);
  const double eps = 2.5e-4;
  REQUIRE((sample_in_ball(center, 0.0, rng) - center).cwiseAbs().maxCoeff() == 0.0);

  const int n = 100000;
  double maxsq = 0.0, sumsq = 0.0;
  int near_boundary = 0;
  for (int i = 0; i < n; ++i) {
    const CVector d = sample_in_ball(center, eps, rng);
    const double sq = d.squaredNorm();
    maxsq = std::max(maxsq, sq);
    sumsq += sq;
    if (sq > 0.9 * eps) ++near_boundary;
  }
  REQUIRE(maxsq <= eps * (1.0 + 1e-12));
  REQUIRE(near_boundary > 0);
  // E||delta||^2 = eps * n/(n+1) for complex dimension n
  REQUIRE(sumsq / n == Catch::Approx(eps * nt / (nt + 1.0)).epsilon(0.01));
}

TEST_CASE("lifted uncertainty radius identity") {
  // ||vec(dh^T kron I)||^2 = Nt * ||dh||^2 exactly
  Rng rng(13);
  const int nt = 3;
  for (int t = 0; t < 10; ++t) {
    CVector dh(nt);
    for (int i = 0; i < nt; ++i) dh(i) = cd(rng.normal(), rng.normal());
    const CVector lifted = vec(kron(dh.transpose(), CMatrix::Identity(nt, nt)));
    REQUIRE(lifted.squaredNorm() == Catch::Approx(nt * dh.squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("sampled channels stay inside their declared sets") {
  SystemParams p;
  p.nt = 3;
  p.k = 2;
  Geometry g = Geometry::defaults(p.k);
  Rng rng(17);
  ChannelSet est = draw_channels(p, g, rng);
  UncertaintyRatios r;  // defaults 10% / 1%
  UncertaintySpec u = radii_from_ratios(est, r, p, g);
  for (int t = 0; t < 200; ++t) {
    ChannelSet s = sample_uncertain(u, rng);
    REQUIRE((s.h0 - est.h0).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((s.g0 - est.g0).squaredNorm() <= u.eps0 * (1 + 1e-12));
    REQUIRE((s.ht0 - est.ht0).squaredNorm() <= u.eps0p * (1 + 1e-12));
    for (int i = 0; i < p.k; ++i) {
      REQUIRE((s.g_k[i] - est.g_k[i]).squaredNorm() <= u.eps_k[i] * (1 + 1e-12));
      REQUIRE((s.h_k[i] - est.h_k[i]).squaredNorm() <= u.eps_kp[i] * (1 + 1e-12));
      REQUIRE((s.ht_k[i] - est.ht_k[i]).squaredNorm() <= u.eps_kpp[i] * (1 + 1e-12));
    }
  }
}

TEST_CASE("channel set JSON round trip") {
  SystemParams p;
  Geometry g = Geometry::defaults(p.k);
  Rng rng(23);
  ChannelSet cs = draw_channels(p, g, rng);
  ChannelSet back = channelset_from_json(channelset_to_json(cs));
  REQUIRE((cs.h0 - back.h0).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((cs.ht_k[2] - back.ht_k[2]).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((cs.g0 - back.g0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dbm conversion") {
  REQUIRE(dbm_to_watt(30.0) == Catch::Approx(1.0));
  REQUIRE(dbm_to_watt(-50.0) == Catch::Approx(1e-8));
  REQUIRE(watt_to_dbm(dbm_to_watt(17.3)) == Catch::Approx(17.3));
}
