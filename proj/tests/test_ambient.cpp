#include "doctest.h"

#include <random>

#include "willmore/ambient.hpp"

using namespace willmore;

namespace {

Vec rand_vec(int m, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g;
  Vec v(m);
  for (int i = 0; i < m; ++i) v(i) = g(rng) * scale;
  return v;
}

}  // namespace

TEST_CASE("euclidean chart is flat") {
  auto M = make_euclidean(3);
  Vec x = Vec::Zero(3);
  x << 0.3, -0.2, 0.9;
  auto G = M->christoffel(x);
  for (double c : G.c) CHECK(c == 0.0);
  auto cp = M->curvature(x);
  for (double c : cp.riemann.c) CHECK(c == 0.0);
  Vec v(3);
  v << 0.1, 0.2, -0.05;
  CHECK((M->exp_map(x, v) - (x + v)).norm() == 0.0);
  CHECK(M->exp_map(x, Vec::Zero(3)) == x);
}

TEST_CASE("sphere chart: christoffel vanishes at the center") {
  auto M = make_sphere(3, 1.0);
  auto G = M->christoffel(Vec::Zero(3));
  for (double c : G.c) CHECK(std::abs(c) < 1e-14);
}

TEST_CASE("christoffel symmetry and fd cross-check on curved charts") {
  std::mt19937_64 rng(2);
  auto H = make_hyperbolic(3, 1.0);
  for (int rep = 0; rep < 5; ++rep) {
    Vec x = rand_vec(3, rng, 0.3);
    auto G = H->christoffel(x);
    for (int k = 0; k < 3; ++k)
      for (int mu = 0; mu < 3; ++mu)
        for (int nu = 0; nu < 3; ++nu) CHECK(G(k, mu, nu) == doctest::Approx(G(k, nu, mu)));

    // closed-form metric derivatives against the base-class FD fallback
    std::vector<Mat> dh_exact, ddh_exact;
    H->metric_d1(x, dh_exact);
    H->metric_d2(x, ddh_exact);
    std::vector<Mat> dh_fd, ddh_fd;
    H->AmbientManifold::metric_d1(x, dh_fd);
    H->AmbientManifold::metric_d2(x, ddh_fd);
    for (int k = 0; k < 3; ++k) CHECK((dh_exact[k] - dh_fd[k]).cwiseAbs().maxCoeff() < 1e-7);
    for (int k = 0; k < 9; ++k) CHECK((ddh_exact[k] - ddh_fd[k]).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("metric compatibility of the connection") {
  std::mt19937_64 rng(3);
  auto P = make_perturbed_euclidean(3, 0.05);
  for (int rep = 0; rep < 5; ++rep) {
    Vec x = rand_vec(3, rng, 0.4);
    Mat h = P->metric_at(x);
    std::vector<Mat> dh;
    P->metric_d1(x, dh);
    auto G = P->christoffel(x);
    for (int s = 0; s < 3; ++s)
      for (int mu = 0; mu < 3; ++mu)
        for (int nu = 0; nu < 3; ++nu) {
          double v = dh[s](mu, nu);
          for (int a = 0; a < 3; ++a) v -= G(a, s, mu) * h(a, nu) + G(a, s, nu) * h(mu, a);
          CHECK(std::abs(v) < 1e-12);
        }
  }
}

TEST_CASE("sectional curvature of the model spaces") {
  std::mt19937_64 rng(5);
  for (double r : {1.0, 0.5, 2.0}) {
    auto S = make_sphere(3, r);
    for (int rep = 0; rep < 6; ++rep) {
      Vec x = rand_vec(3, rng, 0.3 * r);
      Mat frame = S->orthonormalize(x, Mat::Random(3, 2));
      double K = S->sectional(x, frame.col(0), frame.col(1));
      CHECK(K == doctest::Approx(1.0 / (r * r)).epsilon(1e-8));
    }
  }
  auto Hy = make_hyperbolic(3, 1.0);
  for (int rep = 0; rep < 6; ++rep) {
    Vec x = rand_vec(3, rng, 0.3);
    Mat frame = Hy->orthonormalize(x, Mat::Random(3, 2));
    CHECK(Hy->sectional(x, frame.col(0), frame.col(1)) == doctest::Approx(-1.0).epsilon(1e-8));
  }
}

TEST_CASE("riemann symmetries and bianchi identity") {
  std::mt19937_64 rng(7);
  auto P = make_perturbed_euclidean(3, 0.1);
  for (int rep = 0; rep < 4; ++rep) {
    Vec x = rand_vec(3, rng, 0.4);
    auto cp = P->curvature(x);
    double scale = 1e-8;
    for (double c : cp.riemann.c) scale = std::max(scale, std::abs(c));
    for (int l = 0; l < 3; ++l)
      for (int k = 0; k < 3; ++k)
        for (int mu = 0; mu < 3; ++mu)
          for (int nu = 0; nu < 3; ++nu) {
            CHECK(std::abs(cp.riemann(l, k, mu, nu) + cp.riemann(l, k, nu, mu)) < 1e-10 * scale);
            // first bianchi: Riem(X,Y)Z + Riem(Y,Z)X + Riem(Z,X)Y = 0
            double b = cp.riemann(l, k, mu, nu) + cp.riemann(l, mu, nu, k) +
                       cp.riemann(l, nu, k, mu);
            CHECK(std::abs(b) < 1e-8 * scale);
          }
  }
}

TEST_CASE("constant-curvature riemann identity over random quadruples") {
  std::mt19937_64 rng(11);
  for (int m : {3, 4}) {
    auto S = make_sphere(m, 1.3);
    double K = 1.0 / (1.3 * 1.3);
    for (int rep = 0; rep < 10; ++rep) {
      Vec p = rand_vec(m, rng, 0.3);
      Mat h = S->metric_at(p);
      auto cp = S->curvature(p);
      Vec X = rand_vec(m, rng), Y = rand_vec(m, rng), W = rand_vec(m, rng), Z = rand_vec(m, rng);
      double lhs = cp.riemann.apply<double>(X, Y, W).dot(h * Z);
      double rhs = K * (X.dot(h * Z) * Y.dot(h * W) - X.dot(h * W) * Y.dot(h * Z));
      CHECK(std::abs(lhs - rhs) < 1e-7 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST_CASE("space-form curvature endomorphisms") {
  std::mt19937_64 rng(13);
  for (auto make : {+[]() { return make_sphere(4, 1.0); },
                    +[]() { return make_hyperbolic(4, 1.0); }}) {
    auto M = make();
    double worst_rt = 0, worst_rp = 0;
    for (int rep = 0; rep < 100; ++rep) {
      Vec x = rand_vec(4, rng, 0.25);
      Mat F = M->orthonormalize(x, Mat::Random(4, 4));
      Vec e1 = F.col(0), e2 = F.col(1);
      Vec H = 0.7 * F.col(2) - 0.2 * F.col(3);
      auto en = M->curvature_endomorphisms(x, e1, e2, H);
      worst_rt = std::max(worst_rt, (en.r_tilde + 2 * en.kbar * H).norm());
      worst_rp = std::max(worst_rp, en.r_perp.norm());
    }
    CHECK(worst_rt < 1e-7);
    CHECK(worst_rp < 1e-7);
  }
  // flat: both endomorphisms vanish identically
  auto E = make_euclidean(3);
  Mat F = Mat::Identity(3, 3);
  auto en = E->curvature_endomorphisms(Vec::Zero(3), F.col(0), F.col(1), 0.5 * F.col(2));
  CHECK(en.r_tilde.norm() == 0.0);
  CHECK(en.r_perp.norm() == 0.0);
  CHECK(en.kbar == 0.0);

  CHECK_THROWS_AS(E->curvature_endomorphisms(Vec::Zero(3), 2 * F.col(0), F.col(1), F.col(2)),
                  ambient_error);
  CHECK_THROWS_AS(E->curvature_endomorphisms(Vec::Zero(3), F.col(0), F.col(1), F.col(0)),
                  ambient_error);
}

TEST_CASE("frame curvature quantities") {
  std::mt19937_64 rng(17);
  // flat: everything zero
  auto E = make_euclidean(3);
  Mat F = Mat::Identity(3, 3);
  std::array<Vec, 4> sff = {0.3 * F.col(2), 0.1 * F.col(2), 0.1 * F.col(2), -0.2 * F.col(2)};
  auto fc = E->frame_curvature(Vec::Zero(3), F.col(0), F.col(1), sff);
  CHECK(fc.frak_r.norm() == 0.0);
  CHECK(fc.d_r.norm() == 0.0);

  // constant curvature: derivative of the curvature tensor vanishes
  auto S = make_sphere(3, 1.0);
  Vec x = rand_vec(3, rng, 0.2);
  Mat Fr = S->orthonormalize(x, Mat::Random(3, 3));
  std::array<Vec, 4> sff2 = {0.4 * Fr.col(2), 0.0 * Fr.col(2), 0.0 * Fr.col(2), 0.1 * Fr.col(2)};
  auto fc2 = S->frame_curvature(x, Fr.col(0), Fr.col(1), sff2);
  CHECK(fc2.d_r.norm() < 1e-6);

  // perturbed flat: (D R) against an independent parallel-transport oracle
  auto P = make_perturbed_euclidean(3, 1e-2);
  Vec y(3);
  y << 0.2, -0.1, 0.15;
  Mat Fy = P->orthonormalize(y, Mat::Identity(3, 3));
  Vec e1 = Fy.col(0), e2 = Fy.col(1);
  std::array<Vec, 4> sff3 = {Vec::Zero(3), Vec::Zero(3), Vec::Zero(3), Vec::Zero(3)};
  auto fc3 = P->frame_curvature(y, e1, e2, sff3);
  Mat h = P->metric_at(y);

  const double eta = 1e-4;
  for (int sigma = 0; sigma < 3; ++sigma) {
    // parallel-transport e1, e2 along the coordinate segment with RK4
    auto transported = [&](double t) {
      int n = 64;
      double dt = t / n;
      Vec xx = y;
      Mat e = Fy.leftCols(2);
      Vec dir = Vec::Zero(3);
      dir(sigma) = 1.0;
      for (int s = 0; s < n; ++s) {
        auto rhs = [&](const Vec& pos, const Mat& ee) {
          auto G = P->christoffel(pos);
          Mat out(3, 2);
          for (int j = 0; j < 2; ++j) out.col(j) = -G.apply<double>(dir, ee.col(j));
          return out;
        };
        Mat k1 = rhs(xx, e);
        Mat k2 = rhs(xx + 0.5 * dt * dir, e + 0.5 * dt * k1);
        Mat k3 = rhs(xx + 0.5 * dt * dir, e + 0.5 * dt * k2);
        Mat k4 = rhs(xx + dt * dir, e + dt * k3);
        e += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        xx += dt * dir;
      }
      auto cp = P->curvature(xx);
      Mat hh = P->metric_at(xx);
      return cp.riemann.apply<double>(e.col(0), e.col(1), e.col(0)).dot(hh * e.col(1));
    };
    double oracle = (transported(eta) - transported(-eta)) / (2 * eta);
    double mine = fc3.d_r.dot(h.col(sigma));  // lowered sigma-component equals s_sigma
    CHECK(mine == doctest::Approx(oracle).epsilon(1e-4));
  }
}

TEST_CASE("exp_map on the unit 3-sphere chart") {
  auto S = make_sphere(3, 1.0);
  Vec p = Vec::Zero(3);
  std::mt19937_64 rng(19);
  for (int rep = 0; rep < 5; ++rep) {
    Vec v = rand_vec(3, rng);
    v *= 0.8 / v.norm();
    Vec q = S->exp_map(p, v);
    // geodesics from the chart center are radial; arclength s maps to chart
    // radius 2 tan(s/2)
    Vec expect = 2.0 * std::tan(v.norm() / 2.0) * v / v.norm();
    CHECK((q - expect).norm() < 1e-8);
  }

  // integrator order: halving the step shrinks the endpoint error ~16x
  Vec v(3);
  v << 0.5, 0.3, -0.2;
  Vec exact = 2.0 * std::tan(v.norm() / 2.0) * v / v.norm();
  double e1 = (S->exp_map_fixed_steps(p, v, 8) - exact).norm();
  double e2 = (S->exp_map_fixed_steps(p, v, 16) - exact).norm();
  CHECK(e1 / e2 >= 14.0);
}

TEST_CASE("exp_map leaves chart") {
  auto Hy = make_hyperbolic(3, 1.0);
  Vec v(3);
  v << 9.0, 0, 0;
  CHECK_THROWS_AS(Hy->exp_map(Vec::Zero(3), v), ambient_error);
}

TEST_CASE("scalar curvature of exponentiated 3-subspaces") {
  std::mt19937_64 rng(23);
  for (int m : {3, 4, 5}) {
    auto S = make_sphere(m, 1.0);
    Vec p = rand_vec(m, rng, 0.2);
    Mat basis = S->orthonormalize(p, Mat::Random(m, 3));
    CHECK(S->r_subspace(p, basis) == doctest::Approx(6.0).epsilon(1e-9));
  }
  auto E = make_euclidean(4);
  Mat b3 = Mat::Identity(4, 3);
  CHECK(E->r_subspace(Vec::Zero(4), b3) == doctest::Approx(0.0));
  auto Hy = make_hyperbolic(3, 1.0);
  Mat b = Hy->orthonormalize(Vec::Zero(3), Mat::Identity(3, 3));
  CHECK(Hy->r_subspace(Vec::Zero(3), b) == doctest::Approx(-6.0).epsilon(1e-9));

  Mat skew = Mat::Identity(3, 3) * 2.0;
  CHECK_THROWS_AS(Hy->r_subspace(Vec::Zero(3), skew), ambient_error);
}

TEST_CASE("ambient factory") {
  CHECK(make_ambient("euclidean", 3, 0)->name() == "euclidean");
  CHECK(make_ambient("sphere", 4, 1.0)->dim() == 4);
  CHECK_THROWS_AS(make_ambient("torus", 3, 0), ambient_error);
  CHECK_THROWS_AS(make_sphere(3, -1.0), ambient_error);
}
