#include <catch2/catch_amalgamated.hpp>

#include "hjbeam/rng.hpp"
#include "hjbeam/sdp.hpp"

using namespace hjbeam;

namespace {

RMatrix random_sym(int n, Rng& rng) {
  RMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
  return RMatrix(0.5 * (m + m.transpose()));
}

CMatrix random_herm(int n, Rng& rng) {
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cd(rng.normal(), rng.normal());
  return hermitian_part(m);
}

}  // namespace

TEST_CASE("smallest-eigenvalue program") {
  SdpProblem p;
  BlockId x = p.add_psd_block("X", 2);
  RMatrix c(2, 2);
  c << 1, 0, 0, 2;
  p.set_objective(Sense::minimize, p.tr_psd(x, c));
  p.add_constraint("trace", p.trace_of(x), Rel::eq, 1.0);
  SdpSolution s = solve(p);
  REQUIRE(s.status == SolveStatus::optimal);
  REQUIRE(std::abs(s.objective - 1.0) < 1e-6);
  const RMatrix& xv = s.psd_values.at("X");
  REQUIRE(std::abs(xv(0, 0) - 1.0) < 1e-5);
  REQUIRE(std::abs(xv(1, 1)) < 1e-5);
}

TEST_CASE("infeasible trace constraint is certified") {
  SdpProblem p;
  BlockId x = p.add_psd_block("X", 3);
  p.set_objective(Sense::minimize, p.trace_of(x));
  p.add_constraint("trace", p.trace_of(x), Rel::eq, -1.0);
  SdpSolution s = solve(p);
  REQUIRE(s.status == SolveStatus::infeasible);
}

TEST_CASE("KKT-constructed rank-one oracle instance") {
  Rng rng(101);
  for (int inst = 0; inst < 5; ++inst) {
    const int n = 4, m = 3;
    RVector w(n);
    for (int i = 0; i < n; ++i) w(i) = rng.normal();
    w.normalize();
    RMatrix xstar = w * w.transpose();

    std::vector<RMatrix> a(m);
    RVector b(m), y(m);
    for (int i = 0; i < m; ++i) {
      a[i] = random_sym(n, rng);
      b(i) = (a[i] * xstar).trace();
      y(i) = rng.normal();
    }
    RMatrix proj = RMatrix::Identity(n, n) - w * w.transpose();
    RMatrix mrand = random_sym(n, rng);
    RMatrix slack = proj * (mrand * mrand.transpose() + RMatrix::Identity(n, n)) * proj;
    RMatrix c = slack;
    for (int i = 0; i < m; ++i) c += y(i) * a[i];

    SdpProblem p;
    BlockId x = p.add_psd_block("X", n);
    p.set_objective(Sense::minimize, p.tr_psd(x, c));
    for (int i = 0; i < m; ++i)
      p.add_constraint("c" + std::to_string(i), p.tr_psd(x, a[i]), Rel::eq, b(i));
    SdpSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::optimal);
    const double expect = (c * xstar).trace();
    REQUIRE(std::abs(s.objective - expect) <= 1e-7 * (1.0 + std::abs(expect)));
  }
}

TEST_CASE("hermitian block lowering and census") {
  SdpProblem p;
  BlockId x = p.add_hermitian_block("X", 3);
  p.set_objective(Sense::maximize, p.tr_herm(x, CMatrix::Identity(3, 3)));
  p.add_constraint("tr", p.trace_of(x), Rel::le, 1.0);
  REQUIRE(p.hermitian_structure_constraints(x) == 9);
  LoweredProblem lp = LoweredProblem::build(p);
  REQUIRE(lp.data.blocks[0].dim == 6);  // real block dim = 2 * complex dim
}

TEST_CASE("complex SDP: largest eigenvalue via trace cap") {
  Rng rng(7);
  CMatrix a = random_herm(3, rng);
  SdpProblem p;
  BlockId x = p.add_hermitian_block("X", 3);
  p.set_objective(Sense::maximize, p.tr_herm(x, a));
  p.add_constraint("tr", p.trace_of(x), Rel::le, 1.0);
  SdpSolution s = solve(p);
  REQUIRE(s.status == SolveStatus::optimal);
  const double lmax = eigh(a).values.maxCoeff();
  REQUIRE(std::abs(s.objective - lmax) <= 1e-6 * (1.0 + std::abs(lmax)));
  const CMatrix& xv = s.herm_values.at("X");
  REQUIRE((xv - xv.adjoint()).cwiseAbs().maxCoeff() <= 1e-8);
  // weak duality, maximize sense: dual >= primal - gap
  REQUIRE(s.dual_objective >= s.objective - 1e-6 * (1.0 + std::abs(s.objective)));
}

TEST_CASE("LMI constraint with matrix dual") {
  // max x + y subject to [[1, x+iy],[x-iy, 1]] >= 0  ->  x = y = 1/sqrt(2)
  SdpProblem p;
  int x = p.add_scalar("x", VarSign::free_var);
  int y = p.add_scalar("y", VarSign::free_var);
  AffineCMatrix m(2);
  m.add_const(0, 0, 1.0);
  m.add_const(1, 1, 1.0);
  AffineC off;
  off.add(x, 1.0).add(y, cd(0, 1));
  m.add_entry(0, 1, off);
  p.add_lmi("ball", std::move(m));
  LinExpr obj;
  obj.add(x, 1.0).add(y, 1.0);
  p.set_objective(Sense::maximize, obj);
  SdpSolution s = solve(p);
  REQUIRE(s.status == SolveStatus::optimal);
  REQUIRE(std::abs(s.objective - std::sqrt(2.0)) < 1e-6);
  REQUIRE(std::abs(s.scalar_values.at("x") - 1.0 / std::sqrt(2.0)) < 1e-5);
  REQUIRE(s.lmi_duals.at("ball").rows() == 2);
  // slack value is the LMI evaluated at the solution
  const CMatrix mv = s.lmi_values.at("ball");
  REQUIRE(std::abs(mv(0, 0).real() - 1.0) < 1e-9);
  const double lmin = eigh(mv).values.minCoeff();
  REQUIRE(lmin >= -1e-7);
}

TEST_CASE("scaling invariance of the argmax") {
  Rng rng(19);
  CMatrix a = random_herm(3, rng);
  auto build = [&](double c) {
    SdpProblem p;
    BlockId x = p.add_hermitian_block("X", 3);
    p.set_objective(Sense::maximize, c * p.tr_herm(x, a));
    p.add_constraint("tr", p.trace_of(x), Rel::le, 1.0);
    return p;
  };
  SdpSolution s1 = solve(build(1.0));
  SdpSolution s5 = solve(build(5.0));
  REQUIRE(std::abs(s5.objective - 5.0 * s1.objective) <= 1e-5 * (1.0 + std::abs(s5.objective)));
  REQUIRE((s1.herm_values.at("X") - s5.herm_values.at("X")).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("re-solve determinism") {
  Rng rng(23);
  CMatrix a = random_herm(4, rng);
  SdpProblem p;
  BlockId x = p.add_hermitian_block("X", 4);
  p.set_objective(Sense::maximize, p.tr_herm(x, a));
  p.add_constraint("tr", p.trace_of(x), Rel::le, 2.0);
  SdpSolution s1 = solve(p);
  SdpSolution s2 = solve(p);
  REQUIRE(s1.objective == s2.objective);
  REQUIRE((s1.herm_values.at("X") - s2.herm_values.at("X")).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("feasibility margin") {
  SdpProblem feas;
  BlockId x = feas.add_psd_block("X", 2);
  feas.add_constraint("tr", feas.trace_of(x), Rel::le, 1.0);
  feas.set_objective(Sense::maximize, LinExpr{});
  SdpSolution sf = solve_feasibility_margin(feas);
  REQUIRE(sf.status == SolveStatus::optimal);
  REQUIRE(sf.margin > 1e-6);

  SdpProblem infeas;
  BlockId z = infeas.add_psd_block("X", 2);
  infeas.add_constraint("tr", infeas.trace_of(z), Rel::le, -1.0);
  infeas.set_objective(Sense::maximize, LinExpr{});
  SdpSolution si = solve_feasibility_margin(infeas);
  REQUIRE(si.status == SolveStatus::optimal);
  REQUIRE(si.margin < -1e-6);
}

TEST_CASE("duplicate names rejected, JSON dump well formed") {
  SdpProblem p;
  p.add_psd_block("X", 2);
  REQUIRE_THROWS_AS(p.add_psd_block("X", 2), std::invalid_argument);
  p.add_scalar("t", VarSign::nonneg);
  p.add_constraint("c", p.scalar_expr(0, 1.0), Rel::le, 1.0);
  auto j = p.dump_json();
  REQUIRE(j["blocks"].size() == 1);
  REQUIRE(j["scalars"].size() == 1);
  REQUIRE(j["constraints"].size() == 1);
  const std::string text = j.dump();
  auto round = nlohmann::json::parse(text);
  REQUIRE(round["num_params"] == p.num_params());
}
