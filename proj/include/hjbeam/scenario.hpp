#pragma once

// Network geometry, fading channel generation (Rician/Rayleigh with path loss
// and log-normal shadowing), bounded spherical uncertainty sets, and JSON
// (de)serialization of channel realizations for exact replay.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hjbeam/numerics.hpp"
#include "hjbeam/rng.hpp"

namespace hjbeam {

struct SystemParams {
  double ps_w = 1.0;       // transmit power at Alice [W]
  double pr_w = 0.01;      // relay power budget [W]
  int nt = 3;              // antennas at relay and each helper
  int k = 5;               // number of helpers
  double eta = 0.5;        // energy-harvesting efficiency
  double sigma_r2 = 1e-8;  // relay noise variance [W]
  double sigma_b2 = 1e-8;  // receiver noise variance [W]
  double sigma_e2 = 1e-8;  // eavesdropper noise variance [W]
  double sigma_h2 = 1e-8;  // helper receive noise (kept for model completeness)

  void validate() const {
    if (ps_w <= 0 || pr_w <= 0 || sigma_r2 <= 0 || sigma_b2 <= 0 || sigma_e2 <= 0)
      throw std::invalid_argument("SystemParams: powers and noise variances must be > 0");
    if (eta <= 0 || eta > 1) throw std::invalid_argument("SystemParams: eta in (0,1]");
    if (nt < 2) throw std::invalid_argument("SystemParams: nt >= 2");
    if (k < 1) throw std::invalid_argument("SystemParams: k >= 1");
  }
};

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

struct Geometry {
  double helper_radius = 2.0;         // helpers around Alice [m]
  std::vector<double> helper_angles;  // radians; default 2*pi*(k-1)/K
  double relay_distance = 5.0;        // Alice -> relay [m]
  double bob_distance = 5.0;          // relay -> Bob [m]
  double eve_distance = 5.0;          // relay -> Eve [m]
  double bob_angle = std::numbers::pi / 6.0;
  double eve_angle = 11.0 * std::numbers::pi / 6.0;
  double pathloss_exp = 2.0;
  double a0 = 1e-3;            // reference gain at d0
  double d0 = 1.0;             // reference distance [m]
  double shadow_sigma = 4.0;   // [dB]
  double rician_k = 3.0;

  static Geometry defaults(int k) {
    Geometry g;
    g.helper_angles.resize(k);
    for (int i = 0; i < k; ++i)
      g.helper_angles[i] = 2.0 * std::numbers::pi * i / k;
    return g;
  }
};

struct ChannelSet {
  CVector h0;                // Alice -> relay
  std::vector<CVector> h_k;  // Alice -> helper k
  CVector ht0;               // relay -> Bob (transposed channel convention)
  std::vector<CVector> ht_k; // helper k -> Bob
  CVector g0;                // relay -> Eve
  std::vector<CVector> g_k;  // helper k -> Eve

  int nt() const { return static_cast<int>(h0.size()); }
  int k() const { return static_cast<int>(h_k.size()); }
};

struct UncertaintyRatios {
  double a0_sq = 0.10;    // relay->Eve
  double a0p_sq = 0.01;   // relay->Bob
  double ak_sq = 0.10;    // helper->Eve
  double akp_sq = 0.01;   // Alice->helper
  double akpp_sq = 0.01;  // helper->Bob
};

// Center estimates plus squared-norm ball radii; h0 carries no uncertainty.
struct UncertaintySpec {
  ChannelSet estimates;
  double eps0 = 0.0;            // ||dg0||^2 <= eps0
  double eps0p = 0.0;           // ||dht0||^2 <= eps0p
  std::vector<double> eps_k;    // ||dg_k||^2
  std::vector<double> eps_kp;   // ||dh_k||^2
  std::vector<double> eps_kpp;  // ||dht_k||^2

  bool all_zero() const {
    auto z = [](const std::vector<double>& v) {
      for (double x : v)
        if (x != 0.0) return false;
      return true;
    };
    return eps0 == 0.0 && eps0p == 0.0 && z(eps_k) && z(eps_kp) && z(eps_kpp);
  }
};

// z * A0 * (d/d0)^-alpha with 10*log10(z) ~ N(0, shadow_sigma^2).
inline double pathloss_shadowing(double d, const Geometry& g, Rng& rng) {
  if (d < g.d0) throw std::invalid_argument("pathloss_shadowing: d < d0");
  const double z = std::pow(10.0, g.shadow_sigma * rng.normal() / 10.0);
  return z * g.a0 * std::pow(d / g.d0, -g.pathloss_exp);
}

namespace detail {

inline CVector cn_vector(int n, double var_per_entry, Rng& rng) {
  CVector v(n);
  const double s = std::sqrt(var_per_entry / 2.0);
  for (int i = 0; i < n; ++i) v(i) = cd(s * rng.normal(), s * rng.normal());
  return v;
}

// Half-wavelength ULA steering vector for departure/arrival angle theta.
inline CVector ula_steering(int n, double theta) {
  CVector a(n);
  for (int i = 0; i < n; ++i) {
    const double ph = std::numbers::pi * i * std::sin(theta);
    a(i) = cd(std::cos(ph), std::sin(ph));
  }
  return a;
}

// Rician vector with total mean gain nt*D: LOS scaled to ||los||^2 = nt*D.
inline CVector rician(int n, double d_gain, double kr, double theta, Rng& rng) {
  const CVector los = std::sqrt(d_gain) * ula_steering(n, theta);
  const CVector nlos = cn_vector(n, d_gain, rng);
  return std::sqrt(kr / (kr + 1.0)) * los + std::sqrt(1.0 / (kr + 1.0)) * nlos;
}

struct Point {
  double x, y;
};
inline double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }
inline double angle(Point from, Point to) { return std::atan2(to.y - from.y, to.x - from.x); }

}  // namespace detail

inline ChannelSet draw_channels(const SystemParams& p, const Geometry& g, Rng& rng) {
  p.validate();
  if (static_cast<int>(g.helper_angles.size()) != p.k)
    throw std::invalid_argument("draw_channels: helper_angles size != K");
  using detail::Point;
  const Point alice{0.0, 0.0};
  const Point relay{g.relay_distance, 0.0};
  const Point bob{relay.x + g.bob_distance * std::cos(g.bob_angle),
                  relay.y + g.bob_distance * std::sin(g.bob_angle)};
  const Point eve{relay.x + g.eve_distance * std::cos(g.eve_angle),
                  relay.y + g.eve_distance * std::sin(g.eve_angle)};
  std::vector<Point> helpers(p.k);
  for (int i = 0; i < p.k; ++i)
    helpers[i] = {alice.x + g.helper_radius * std::cos(g.helper_angles[i]),
                  alice.y + g.helper_radius * std::sin(g.helper_angles[i])};

  ChannelSet cs;
  auto rice = [&](Point a, Point b) {
    const double d = pathloss_shadowing(std::max(detail::dist(a, b), g.d0), g, rng);
    return detail::rician(p.nt, d, g.rician_k, detail::angle(a, b), rng);
  };
  auto rayleigh = [&](Point a, Point b) {
    const double d = pathloss_shadowing(std::max(detail::dist(a, b), g.d0), g, rng);
    return detail::cn_vector(p.nt, d, rng);
  };

  cs.h0 = rice(alice, relay);
  cs.h_k.resize(p.k);
  for (int i = 0; i < p.k; ++i) cs.h_k[i] = rice(alice, helpers[i]);
  cs.ht0 = rice(relay, bob);
  cs.g0 = rice(relay, eve);
  cs.ht_k.resize(p.k);
  cs.g_k.resize(p.k);
  for (int i = 0; i < p.k; ++i) {
    cs.ht_k[i] = rayleigh(helpers[i], bob);
    cs.g_k[i] = rayleigh(helpers[i], eve);
  }
  return cs;
}

// Nominal (shadowing-free) large-scale gain of each link; used to convert
// uncertainty ratios into deterministic radii: eps = ratio * nt * D_link.
inline UncertaintySpec radii_from_ratios(const ChannelSet& estimates, const UncertaintyRatios& r,
                                         const SystemParams& p, const Geometry& g) {
  using detail::Point;
  const Point alice{0.0, 0.0};
  const Point relay{g.relay_distance, 0.0};
  const Point bob{relay.x + g.bob_distance * std::cos(g.bob_angle),
                  relay.y + g.bob_distance * std::sin(g.bob_angle)};
  const Point eve{relay.x + g.eve_distance * std::cos(g.eve_angle),
                  relay.y + g.eve_distance * std::sin(g.eve_angle)};
  auto nominal = [&](Point a, Point b) {
    return g.a0 * std::pow(std::max(detail::dist(a, b), g.d0) / g.d0, -g.pathloss_exp);
  };

  UncertaintySpec u;
  u.estimates = estimates;
  u.eps0 = r.a0_sq * p.nt * nominal(relay, eve);
  u.eps0p = r.a0p_sq * p.nt * nominal(relay, bob);
  u.eps_k.resize(p.k);
  u.eps_kp.resize(p.k);
  u.eps_kpp.resize(p.k);
  for (int i = 0; i < p.k; ++i) {
    const Point hp{alice.x + g.helper_radius * std::cos(g.helper_angles[i]),
                   alice.y + g.helper_radius * std::sin(g.helper_angles[i])};
    u.eps_k[i] = r.ak_sq * p.nt * nominal(hp, eve);
    u.eps_kp[i] = r.akp_sq * p.nt * nominal(alice, hp);
    u.eps_kpp[i] = r.akpp_sq * p.nt * nominal(hp, bob);
  }
  return u;
}

// Uniform draw from the complex ball ||delta||^2 <= eps around center.
inline CVector sample_in_ball(const CVector& center, double eps, Rng& rng) {
  if (eps < 0) throw std::invalid_argument("sample_in_ball: eps < 0");
  if (eps == 0.0) return center;
  const int n = static_cast<int>(center.size());
  CVector dir = detail::cn_vector(n, 1.0, rng);
  const double nrm = dir.norm();
  if (nrm == 0.0) return center;
  const double radius = std::sqrt(eps) * std::pow(rng.uniform(), 1.0 / (2.0 * n));
  return center + (radius / nrm) * dir;
}

// One joint draw of all uncertain channels (h0 is known exactly).
inline ChannelSet sample_uncertain(const UncertaintySpec& u, Rng& rng) {
  ChannelSet cs = u.estimates;
  cs.g0 = sample_in_ball(u.estimates.g0, u.eps0, rng);
  cs.ht0 = sample_in_ball(u.estimates.ht0, u.eps0p, rng);
  for (size_t i = 0; i < cs.h_k.size(); ++i) {
    cs.g_k[i] = sample_in_ball(u.estimates.g_k[i], u.eps_k[i], rng);
    cs.h_k[i] = sample_in_ball(u.estimates.h_k[i], u.eps_kp[i], rng);
    cs.ht_k[i] = sample_in_ball(u.estimates.ht_k[i], u.eps_kpp[i], rng);
  }
  return cs;
}

// ---- JSON (arrays of [re, im] pairs) ----

inline nlohmann::json cvector_to_json(const CVector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v(i).real(), v(i).imag()});
  return a;
}

inline CVector cvector_from_json(const nlohmann::json& a) {
  CVector v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v(i) = cd(a[i][0].get<double>(), a[i][1].get<double>());
  return v;
}

inline nlohmann::json cmatrix_to_json(const CMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

inline CMatrix cmatrix_from_json(const nlohmann::json& rows) {
  const Eigen::Index r = rows.size();
  const Eigen::Index c = r ? rows[0].size() : 0;
  CMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      m(i, j) = cd(rows[i][j][0].get<double>(), rows[i][j][1].get<double>());
  return m;
}

inline nlohmann::json channelset_to_json(const ChannelSet& cs) {
  nlohmann::json j;
  j["h0"] = cvector_to_json(cs.h0);
  j["ht0"] = cvector_to_json(cs.ht0);
  j["g0"] = cvector_to_json(cs.g0);
  j["h_k"] = nlohmann::json::array();
  j["ht_k"] = nlohmann::json::array();
  j["g_k"] = nlohmann::json::array();
  for (const auto& v : cs.h_k) j["h_k"].push_back(cvector_to_json(v));
  for (const auto& v : cs.ht_k) j["ht_k"].push_back(cvector_to_json(v));
  for (const auto& v : cs.g_k) j["g_k"].push_back(cvector_to_json(v));
  return j;
}

inline ChannelSet channelset_from_json(const nlohmann::json& j) {
  ChannelSet cs;
  cs.h0 = cvector_from_json(j.at("h0"));
  cs.ht0 = cvector_from_json(j.at("ht0"));
  cs.g0 = cvector_from_json(j.at("g0"));
  for (const auto& v : j.at("h_k")) cs.h_k.push_back(cvector_from_json(v));
  for (const auto& v : j.at("ht_k")) cs.ht_k.push_back(cvector_from_json(v));
  for (const auto& v : j.at("g_k")) cs.g_k.push_back(cvector_from_json(v));
  return cs;
}

}  // namespace hjbeam
