#include <catch2/catch_amalgamated.hpp>

#include "hjbeam/numerics.hpp"
#include "hjbeam/rng.hpp"

using namespace hjbeam;

namespace {

CMatrix random_cmatrix(int r, int c, Rng& rng) {
  CMatrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = cd(rng.normal(), rng.normal());
  return m;
}

CVector random_cvector(int n, Rng& rng) {
  CVector v(n);
  for (int i = 0; i < n; ++i) v(i) = cd(rng.normal(), rng.normal());
  return v;
}

CMatrix random_hermitian(int n, Rng& rng) {
  CMatrix m = random_cmatrix(n, n, rng);
  return hermitian_part(m);
}

}  // namespace

TEST_CASE("vec stacks rows") {
  CMatrix m(2, 2);
  m << cd(1, 0), cd(2, 0), cd(3, 0), cd(4, 0);
  CVector v = vec(m);
  REQUIRE(v(0) == cd(1, 0));
  REQUIRE(v(1) == cd(2, 0));
  REQUIRE(v(2) == cd(3, 0));
  REQUIRE(v(3) == cd(4, 0));
}

TEST_CASE("unvec inverts vec") {
  Rng rng(7);
  CMatrix a = random_cmatrix(3, 3, rng);
  REQUIRE((unvec(vec(a), 3, 3) - a).cwiseAbs().maxCoeff() == 0.0);

  CVector v(4);
  v << cd(1, 0), cd(2, 0), cd(3, 0), cd(4, 0);
  CMatrix m = unvec(v, 2, 2);
  REQUIRE(m(0, 1) == cd(2, 0));
  REQUIRE(m(1, 0) == cd(3, 0));
  REQUIRE((vec(unvec(v, 2, 2)) - v).cwiseAbs().maxCoeff() == 0.0);

  CMatrix empty(0, 0);
  REQUIRE(unvec(vec(empty), 0, 0).size() == 0);
  REQUIRE_THROWS_AS(unvec(v, 3, 3), std::invalid_argument);
}

TEST_CASE("trace identity tr(A B^T) = vec(A)^T vec(B)") {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    CMatrix a = random_cmatrix(3, 3, rng), b = random_cmatrix(3, 3, rng);
    const cd lhs = (a * b.transpose()).trace();
    const cd rhs = (vec(a).transpose() * vec(b)).value();
    REQUIRE(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("kron basics and transpose rule") {
  REQUIRE((kron(CMatrix::Identity(2, 2), CMatrix::Identity(2, 2)) - CMatrix::Identity(4, 4))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  Rng rng(3);
  CMatrix a = random_cmatrix(2, 2, rng), b = random_cmatrix(2, 2, rng);
  REQUIRE((kron(a, b).transpose() - kron(a.transpose(), b.transpose())).cwiseAbs().maxCoeff() <=
          1e-14);
}

TEST_CASE("vec/kron identities used by the relaxations") {
  Rng rng(23);
  const int nt = 3;
  for (int t = 0; t < 100; ++t) {
    CMatrix w = random_cmatrix(nt, nt, rng);
    CVector ht0 = random_cvector(nt, rng), h0 = random_cvector(nt, rng);
    const CVector wv = vec(w);

    // |ht0^T W h0|^2 = |vec^T(ht0 h0^T) vec(W)|^2
    const cd direct = (ht0.transpose() * w * h0).value();
    const cd lifted = (vec(CMatrix(ht0 * h0.transpose())).transpose() * wv).value();
    REQUIRE(std::abs(std::norm(direct) - std::norm(lifted)) <=
            1e-10 * (1.0 + std::norm(direct)));

    // ht0^T W W^H ht0^* = ||(ht0^T kron I) vec(W)||^2
    const double q = std::real((ht0.transpose() * w * w.adjoint() * ht0.conjugate()).value());
    const CMatrix y1 = kron(ht0.transpose(), CMatrix::Identity(nt, nt));
    const double qk = (y1 * wv).squaredNorm();
    REQUIRE(std::abs(q - qk) <= 1e-10 * (1.0 + std::abs(q)));

    // vec(A X B) = (A kron B^T) vec(X)
    CMatrix A = random_cmatrix(nt, nt, rng), B = random_cmatrix(nt, nt, rng);
    const CVector lhs = vec(CMatrix(A * w * B));
    const CVector rhs = kron(A, B.transpose()) * wv;
    REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + lhs.cwiseAbs().maxCoeff()));

    // tr(W Theta W^H) = vec(W)^H (I kron Theta^T) vec(W)
    CMatrix theta = random_hermitian(nt, rng);
    theta = theta * theta.adjoint() + CMatrix::Identity(nt, nt);
    const double pw = std::real((w * theta * w.adjoint()).trace());
    const CMatrix phib = kron(CMatrix::Identity(nt, nt), theta.transpose());
    const double pk = std::real((wv.adjoint() * phib * wv).value());
    REQUIRE(std::abs(pw - pk) <= 1e-10 * (1.0 + std::abs(pw)));
  }
}

TEST_CASE("real_embed basics") {
  REQUIRE((real_embed(CMatrix::Identity(2, 2)) - RMatrix::Identity(4, 4)).cwiseAbs().maxCoeff() ==
          0.0);

  CMatrix h(2, 2);
  h << cd(0, 0), cd(0, -1), cd(0, 1), cd(0, 0);
  const RMatrix s = real_embed(h);
  Eigen::SelfAdjointEigenSolver<RMatrix> es(s);
  RVector ev = es.eigenvalues();
  REQUIRE(std::abs(ev(0) + 1.0) < 1e-12);
  REQUIRE(std::abs(ev(1) + 1.0) < 1e-12);
  REQUIRE(std::abs(ev(2) - 1.0) < 1e-12);
  REQUIRE(std::abs(ev(3) - 1.0) < 1e-12);

  CMatrix notherm(2, 2);
  notherm << cd(1, 0), cd(2, 0), cd(3, 0), cd(4, 0);
  REQUIRE_THROWS_AS(real_embed(notherm), std::invalid_argument);
}

TEST_CASE("real_embed trace doubling and PSD preservation") {
  Rng rng(31);
  for (int t = 0; t < 20; ++t) {
    CMatrix a = random_hermitian(3, rng), x = random_hermitian(3, rng);
    const double lhs = (real_embed(a) * real_embed(x)).trace();
    const double rhs = 2.0 * std::real((a * x).trace());
    REQUIRE(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(rhs)));

    const double me_c = eigh(a).values.minCoeff();
    Eigen::SelfAdjointEigenSolver<RMatrix> es(real_embed(a));
    const double me_r = es.eigenvalues().minCoeff();
    REQUIRE(std::abs(me_c - me_r) <= 1e-10 * (1.0 + std::abs(me_c)));
  }
  Rng rng2(5);
  CMatrix h = random_hermitian(4, rng2);
  REQUIRE((complex_from_embed(real_embed(h)) - h).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("eigh") {
  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = 1.0;
  Eigh e = eigh(d);
  REQUIRE(std::abs(e.values(0) - 1.0) < 1e-14);
  REQUIRE(std::abs(e.values(1) - 3.0) < 1e-14);

  Rng rng(13);
  CVector w = random_cvector(4, rng);
  Eigh r1 = eigh(CMatrix(w * w.adjoint()));
  REQUIRE(std::abs(r1.values(3) - w.squaredNorm()) <= 1e-12 * w.squaredNorm());
  REQUIRE(r1.values.head(3).cwiseAbs().maxCoeff() <= 1e-12 * w.squaredNorm());

  CMatrix h = random_hermitian(9, rng);
  Eigh e9 = eigh(h);
  const CMatrix rec =
      e9.vectors * e9.values.asDiagonal().toDenseMatrix().cast<cd>() * e9.vectors.adjoint();
  REQUIRE((rec - h).cwiseAbs().maxCoeff() <= 1e-10 * max_abs(h));
  REQUIRE((e9.vectors.adjoint() * e9.vectors - CMatrix::Identity(9, 9)).cwiseAbs().maxCoeff() <=
          1e-10);
}

TEST_CASE("rank_eps") {
  Rng rng(17);
  CVector w = random_cvector(3, rng);
  REQUIRE(rank_eps(CMatrix(w * w.adjoint()), 1e-6) == 1);
  REQUIRE(rank_eps(CMatrix::Identity(3, 3), 1e-6) == 3);
  REQUIRE(rank_eps(CMatrix::Zero(3, 3), 1e-6) == 0);
  REQUIRE(rank_eps(CMatrix(0, 0)) == 0);
}

TEST_CASE("nullspace_of_row gives orthonormal complement") {
  Rng rng(19);
  CVector h = random_cvector(4, rng);
  CMatrix v = nullspace_of_row(h);
  REQUIRE(v.cols() == 3);
  REQUIRE((h.transpose() * v).cwiseAbs().maxCoeff() <= 1e-9 * h.norm());
  REQUIRE((v.adjoint() * v - CMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-10);
}
