#include "doctest.h"

#include <random>

#include "willmore/exterior.hpp"

using namespace willmore;

namespace {

MultiVector e(int m, std::initializer_list<int> idx) { return MultiVector::basis(m, idx); }

// random h-orthonormal frame (columns), positively oriented
Mat random_orthonormal_frame(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat A(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) A(i, j) = g(rng);
  Eigen::HouseholderQR<Mat> qr(A);
  Mat Q = qr.householderQ();
  if (Q.determinant() < 0) Q.col(0) *= -1;
  return Q;
}

}  // namespace

TEST_CASE("wedge basics") {
  const int m = 3;
  auto e1 = e(m, {0}), e2 = e(m, {1});
  auto w = wedge(e1, e2);
  CHECK(w.grade == 2);
  CHECK(w.coeffs(BladeTable::get(m).rank_of_mask[0b011]) == doctest::Approx(1.0));
  CHECK(wedge(e1, e1).norm() == doctest::Approx(0.0));

  // (e1+e2) ^ e2 = e1^e2, expanded bilinearly
  MultiVector s(m, 1);
  s.coeffs << 1, 1, 0;
  auto w2 = wedge(s, e2);
  CHECK((w2 - w).norm() == doctest::Approx(0.0));

  // antisymmetry and associativity on random data
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 20; ++rep) {
    MultiVector a(m, 1), b(m, 1), c(m, 1);
    for (int i = 0; i < m; ++i) {
      a.coeffs(i) = g(rng);
      b.coeffs(i) = g(rng);
      c.coeffs(i) = g(rng);
    }
    CHECK((wedge(a, b) - wedge(b, a) * (-1.0)).norm() < 1e-14);
    CHECK((wedge(wedge(a, b), c) - wedge(a, wedge(b, c))).norm() < 1e-14);
  }

  // grade overflow yields the zero element
  auto top = wedge(wedge(e(m, {0}), e(m, {1})), e(m, {2}));
  CHECK(wedge(top, e1).coeffs.size() == 0);

  CHECK_THROWS_AS(wedge(e(3, {0}), e(4, {0})), exterior_error);
}

TEST_CASE("hodge star on basis blades") {
  const int m = 3;
  InnerProduct ip(m);
  // volume form maps to the scalar 1
  auto vol = e(m, {0, 1, 2});
  auto s = hodge_star(vol, ip);
  CHECK(s.grade == 0);
  CHECK(s.coeffs(0) == doctest::Approx(1.0));

  // with (e1, e2, n) positively oriented orthonormal: star(n ^ e1) = e2
  auto n = e(m, {2});
  auto r = hodge_star(wedge(n, e(m, {0})), ip);
  CHECK((r - e(m, {1})).norm() < 1e-14);
  auto r2 = hodge_star(wedge(n, e(m, {1})), ip);
  CHECK((r2 - e(m, {0}) * (-1.0)).norm() < 1e-14);
}

TEST_CASE("star-star sign over all basis blades, m = 3..6") {
  for (int m = 3; m <= 6; ++m) {
    InnerProduct ip(m);
    const BladeTable& t = BladeTable::get(m);
    for (int p = 0; p <= m; ++p) {
      double expected = ((p * (m - p)) % 2) ? -1.0 : 1.0;
      for (int r = 0; r < t.count(p); ++r) {
        MultiVector a(m, p);
        a.coeffs(r) = 1.0;
        auto ss = hodge_star(hodge_star(a, ip), ip);
        CHECK((ss - a * expected).norm() < 1e-14);
      }
    }
  }
}

TEST_CASE("hodge star is an isometry for euclidean products") {
  for (int m = 3; m <= 5; ++m) {
    InnerProduct ip(m);
    const BladeTable& t = BladeTable::get(m);
    for (int p = 0; p <= m; ++p)
      for (int r = 0; r < t.count(p); ++r)
        for (int s = 0; s < t.count(p); ++s) {
          MultiVector a(m, p), b(m, p);
          a.coeffs(r) = 1;
          b.coeffs(s) = 1;
          CHECK(inner(hodge_star(a, ip), hodge_star(b, ip), ip) ==
                doctest::Approx(inner(a, b, ip)).epsilon(1e-13));
        }
  }
}

TEST_CASE("hodge star with a general SPD inner product") {
  // defining identity beta ^ star(a) = <beta,a> vol for non-orthonormal gram
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  const int m = 4;
  Mat A(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) A(i, j) = g(rng);
  Mat gram = A * A.transpose() + 0.5 * Mat::Identity(m, m);
  InnerProduct ip(gram);
  const BladeTable& t = BladeTable::get(m);
  // unit positively oriented volume element
  MultiVector vol(m, m);
  vol.coeffs(0) = 1.0 / std::sqrt(ip.det());
  for (int p = 0; p <= m; ++p)
    for (int r = 0; r < t.count(p); ++r)
      for (int s = 0; s < t.count(p); ++s) {
        MultiVector a(m, p), beta(m, p);
        a.coeffs(r) = 1;
        beta.coeffs(s) = 1;
        auto lhs = wedge(beta, hodge_star(a, ip));
        auto rhs = vol * inner(beta, a, ip);
        CHECK((lhs - rhs).norm() < 1e-12);
      }
}

TEST_CASE("interior multiplication defining identity, m = 3..6") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int m = 3; m <= 6; ++m) {
    InnerProduct ip(m);
    const BladeTable& t = BladeTable::get(m);
    for (int p = 0; p <= m; ++p)
      for (int q = 0; q <= p; ++q) {
        MultiVector a(m, p), b(m, q);
        for (int i = 0; i < a.coeffs.size(); ++i) a.coeffs(i) = g(rng);
        for (int i = 0; i < b.coeffs.size(); ++i) b.coeffs(i) = g(rng);
        auto ab = interior_mult(a, b, ip);
        for (int r = 0; r < t.count(p - q); ++r) {
          MultiVector c(m, p - q);
          c.coeffs(r) = 1;
          CHECK(inner(ab, c, ip) == doctest::Approx(inner(a, wedge(b, c), ip)).epsilon(1e-12));
        }
      }
  }
}

TEST_CASE("interior multiplication examples") {
  const int m = 3;
  InnerProduct ip(m);
  // (e1^e2) ⌞ e2 = -e1 : <(e1^e2)⌞e2, e1> = <e1^e2, e2^e1> = -1
  auto r = interior_mult(wedge(e(m, {0}), e(m, {1})), e(m, {1}), ip);
  CHECK((r - e(m, {0}) * (-1.0)).norm() < 1e-14);

  // a ⌞ a = 1 for unit blades
  auto a = wedge(e(m, {0}), e(m, {2}));
  auto s = interior_mult(a, a, ip);
  CHECK(s.grade == 0);
  CHECK(s.coeffs(0) == doctest::Approx(1.0));

  // orthogonal unit vectors contract to zero
  CHECK(interior_mult(e(m, {2}), e(m, {0}), ip).norm() == doctest::Approx(0.0));

  // scalar second argument scales
  auto sc = MultiVector::scalar(m, 2.5);
  CHECK((interior_mult(a, sc, ip) - a * 2.5).norm() < 1e-14);

  CHECK_THROWS_AS(interior_mult(e(m, {0}), a, ip), exterior_error);
}

TEST_CASE("bullet contraction") {
  const int m = 3;
  InnerProduct ip(m);
  // grade-1 second argument reduces to interior multiplication
  auto a = wedge(e(m, {0}), e(m, {1}));
  CHECK((bullet(a, e(m, {1}), ip) - interior_mult(a, e(m, {1}), ip)).norm() < 1e-14);

  // recursion consistency on random data, m=4
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  const int m4 = 4;
  InnerProduct ip4(m4);
  for (int rep = 0; rep < 10; ++rep) {
    MultiVector A(m4, 2), B(m4, 1), C(m4, 2);
    for (int i = 0; i < A.coeffs.size(); ++i) A.coeffs(i) = g(rng);
    for (int i = 0; i < B.coeffs.size(); ++i) B.coeffs(i) = g(rng);
    for (int i = 0; i < C.coeffs.size(); ++i) C.coeffs(i) = g(rng);
    // A • (B ^ C) = (A•B)^C + (-1)^{1*2} (A•C)^B
    auto lhs = bullet(A, wedge(B, C), ip4);
    auto rhs = wedge(bullet(A, B, ip4), C);
    rhs.coeffs += wedge(bullet(A, C, ip4), B).coeffs;
    CHECK((lhs - rhs).norm() < 1e-12);
  }

  CHECK_THROWS_AS(bullet(e(m, {0}), MultiVector::scalar(m, 1.0), ip), exterior_error);
}

TEST_CASE("normal multivector contractions in an adapted frame") {
  // with (e1,e2,n_1..n_{m-2}) orthonormal and n = n_1^...^n_{m-2}:
  //   n ⌞ e_i = 0,   n ⌞ n_a = (-1)^{a-1} wedge of the others,
  //   pi_n(w) = (-1)^{m-1} n⌞(n⌞w)
  std::mt19937_64 rng(3);
  for (int m = 3; m <= 5; ++m) {
    InnerProduct ip(m);
    for (int rep = 0; rep < 8; ++rep) {
      Mat Q = random_orthonormal_frame(m, rng);
      std::vector<MultiVector> f;
      for (int i = 0; i < m; ++i) f.push_back(MultiVector::vector(m, Q.col(i)));
      MultiVector n = f[2];
      for (int a = 3; a < m; ++a) n = wedge(n, f[a]);

      CHECK(interior_mult(n, f[0], ip).norm() < 1e-13);
      CHECK(interior_mult(n, f[1], ip).norm() < 1e-13);
      CHECK(bullet(n, f[0], ip).norm() < 1e-13);

      for (int a = 0; a < m - 2; ++a) {
        MultiVector rest(m, 0);
        bool first = true;
        for (int b = 0; b < m - 2; ++b) {
          if (b == a) continue;
          rest = first ? f[2 + b] : wedge(rest, f[2 + b]);
          first = false;
        }
        if (m == 3) rest = MultiVector::scalar(m, 1.0);
        double sgn = (a % 2) ? -1.0 : 1.0;  // (-1)^{(a+1)-1} with 1-based a
        CHECK((interior_mult(n, f[2 + a], ip) - rest * sgn).norm() < 1e-12);
      }

      // projection identity against gram-schmidt projection
      std::normal_distribution<double> g;
      Vec w(m);
      for (int i = 0; i < m; ++i) w(i) = g(rng);
      Vec proj = w - Q.col(0) * (Q.col(0).dot(w)) - Q.col(1) * (Q.col(1).dot(w));
      auto pw = interior_mult(n, interior_mult(n, MultiVector::vector(m, w), ip), ip);
      double sgn = ((m - 1) % 2) ? -1.0 : 1.0;
      CHECK((pw * sgn - MultiVector::vector(m, proj)).norm() < 1e-12);
    }
  }
}

TEST_CASE("projection identity in m = 3 with n = e3") {
  const int m = 3;
  InnerProduct ip(m);
  auto n = e(m, {2});
  const BladeTable& t = BladeTable::get(m);
  for (int r = 0; r < t.count(1); ++r) {
    MultiVector w(m, 1);
    w.coeffs(r) = 1;
    auto pw = interior_mult(n, interior_mult(n, w, ip), ip);
    double sgn = ((m - 1) % 2) ? -1.0 : 1.0;
    Vec expect = Vec::Zero(m);
    expect(2) = w.coeffs(2);
    CHECK((pw * sgn - MultiVector::vector(m, expect)).norm() < 1e-14);
  }
}

TEST_CASE("inner product validation") {
  Mat bad(2, 2);
  bad << 1, 2, 2, 1;  // indefinite
  CHECK_THROWS_AS(InnerProduct{bad}, exterior_error);
  Mat asym(2, 2);
  asym << 1, 0.5, 0, 1;
  CHECK_THROWS_AS(InnerProduct{asym}, exterior_error);
}

TEST_CASE("complex multivectors extend bilinearly") {
  const int m = 3;
  InnerProduct ip(m);
  CMultiVector a(m, 1), b(m, 1);
  a.coeffs << cplx(1, 2), cplx(0, -1), cplx(3, 0);
  b.coeffs << cplx(0, 1), cplx(2, 0), cplx(1, 1);
  // <a,b> = sum a_i b_i without conjugation
  cplx expect = a.coeffs(0) * b.coeffs(0) + a.coeffs(1) * b.coeffs(1) + a.coeffs(2) * b.coeffs(2);
  CHECK(std::abs(inner(a, b, ip) - expect) < 1e-14);

  // wedge splits into real and imaginary parts correctly
  auto w = wedge(a, b);
  auto re_w = wedge(real(a), real(b)) - wedge(imag(a), imag(b));
  auto im_w = wedge(real(a), imag(b));
  im_w.coeffs += wedge(imag(a), real(b)).coeffs;
  CHECK((real(w) - re_w).norm() < 1e-14);
  CHECK((imag(w) - im_w).norm() < 1e-14);
}
