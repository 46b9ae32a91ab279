#include "doctest.h"

#include <fstream>

#include "willmore/immersion.hpp"

using namespace willmore;

namespace {
const double PI = 3.14159265358979323846;

Vec cross3(const Vec& a, const Vec& b) {
  Vec c(3);
  c << a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0);
  return c;
}
}  // namespace

TEST_CASE("round sphere patch geometry") {
  for (double r : {1.0, 2.0}) {
    auto imm = make_sphere_patch(make_euclidean(3), r, Vec::Zero(3), 0.8, 24);
    auto gf = geometry(imm);
    for (int s = 0; s < gf.ns; ++s) {
      Vec H = gf.Hvec.row(s);
      double ii2 = gf.dot(s, gf.sff11.row(s), gf.sff11.row(s)) +
                   2 * gf.dot(s, gf.sff12.row(s), gf.sff12.row(s)) +
                   gf.dot(s, gf.sff22.row(s), gf.sff22.row(s));
      CHECK(H.norm() == doctest::Approx(1.0 / r).epsilon(1e-8));
      CHECK(ii2 == doctest::Approx(2.0 / (r * r)).epsilon(1e-8));
      CHECK(gf.Kg(s) == doctest::Approx(1.0 / (r * r)).epsilon(1e-8));
      // umbilic: trace-free part vanishes
      CHECK(gf.H0.row(s).norm() < 1e-10);
      // H orthogonal to the frame
      CHECK(std::abs(gf.dot(s, H, gf.e1.row(s))) < 1e-8);
      CHECK(std::abs(gf.dot(s, H, gf.e2.row(s))) < 1e-8);
    }
  }
}

TEST_CASE("flat plane patch has vanishing second fundamental form") {
  auto imm = make_graph_patch(make_euclidean(3), 0.0, 16);
  auto gf = geometry(imm);
  CHECK(gf.sff11.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(gf.sff12.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(gf.sff22.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(gf.Hvec.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("gauss equation residual vanishes on built-ins") {
  auto check = [](const Immersion& imm) {
    auto gf = geometry(imm);
    for (int s = 0; s < gf.ns; ++s) {
      double ii2 = gf.dot(s, gf.sff11.row(s), gf.sff11.row(s)) +
                   2 * gf.dot(s, gf.sff12.row(s), gf.sff12.row(s)) +
                   gf.dot(s, gf.sff22.row(s), gf.sff22.row(s));
      double h2 = gf.dot(s, gf.Hvec.row(s), gf.Hvec.row(s));
      double res = 0.5 * ii2 - (2 * h2 + gf.Kbar(s) - gf.Kg(s));
      CHECK(std::abs(res) < 1e-7);
    }
  };
  check(make_catenoid_patch(make_euclidean(3), 0.8, 12));
  check(make_sphere_patch(make_sphere(3, 1.0), 0.9, Vec::Zero(3), 0.6, 12));
  check(make_flat_torus_patch(make_euclidean(4), 1.0, 0.7, 0.8, 12));
}

TEST_CASE("minimal patches have zero mean curvature") {
  for (auto imm : {make_catenoid_patch(make_euclidean(3), 0.8, 16),
                   make_enneper_patch(make_euclidean(3), 0.7, 16)}) {
    auto gf = geometry(imm);
    CHECK(gf.Hvec.cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("conformality of built-in patches") {
  CHECK(make_sphere_patch(make_euclidean(4), 1.0, Vec::Zero(4), 0.8, 12).conformality_defect() <
        1e-12);
  CHECK(make_enneper_patch(make_euclidean(3), 0.7, 12).conformality_defect() < 1e-12);
  CHECK(make_cylinder_patch(make_euclidean(3), 1.0, 0.8, 12).conformality_defect() < 1e-12);
  CHECK(make_spheroid_patch(make_euclidean(3), 1.0, 1.3, 0.5, 12).conformality_defect() < 1e-9);
  // euclidean spheres in the curved conformal chart remain conformal
  Vec c(3);
  c << 0.2, 0.0, 0.1;
  CHECK(make_sphere_patch(make_sphere(3, 1.0), 0.7, c, 0.6, 12).conformality_defect() < 1e-12);
}

TEST_CASE("spheroid patch matches the implicit surface") {
  double a = 1.0, cc = 1.3;
  auto imm = make_spheroid_patch(make_euclidean(3), a, cc, 0.5, 16);
  for (int s = 0; s < imm.samples(); ++s) {
    Vec p = imm.phi.row(s);
    double val = (p(0) * p(0) + p(1) * p(1)) / (a * a) + p(2) * p(2) / (cc * cc);
    CHECK(val == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("closed-surface energies of the unit sphere mesh") {
  auto imm = make_ellipsoid_mesh(make_euclidean(3), 1, 1, 1, 128, 256);
  auto rep = energies(imm);
  CHECK(rep.willmore == doctest::Approx(4 * PI).epsilon(0.005));
  CHECK(rep.area == doctest::Approx(4 * PI).epsilon(0.005));
  CHECK(rep.energy_f == doctest::Approx(4 * PI).epsilon(0.005));
  CHECK(rep.gauss_bonnet_defect < 0.01 * 4 * PI);
  CHECK(rep.f1 == doctest::Approx(rep.energy_f + rep.area));
}

TEST_CASE("gauss-bonnet on an ellipsoid mesh") {
  auto imm = make_ellipsoid_mesh(make_euclidean(3), 1.0, 1.0, 1.3, 128, 256);
  auto rep = energies(imm);
  CHECK(rep.gauss_bonnet_defect < 0.01 * 4 * PI);
}

TEST_CASE("lagrangian identities in flat ambients") {
  auto imm = make_ellipsoid_mesh(make_euclidean(3), 1.0, 1.0, 1.3, 64, 128);
  auto gf = geometry(imm);
  auto rep = energies(imm, gf);
  // L = W_K + A exactly (same quadrature)
  CHECK(rep.lagrangian == doctest::Approx(rep.wk + rep.area).epsilon(1e-12));
  // W_K = W - 1/2 int K^g by the Gauss equation, exact pointwise
  double int_kg = 0;
  for (int s = 0; s < gf.ns; ++s)
    int_kg += gf.Kg(s) * gf.quad_weight(s) * gf.area_element(s);
  CHECK(rep.wk == doctest::Approx(rep.willmore - 0.5 * int_kg).epsilon(1e-12));
}

TEST_CASE("complex frame identities") {
  auto imm = make_sphere_patch(make_euclidean(3), 1.0, Vec::Zero(3), 0.8, 16);
  auto gf = geometry(imm);
  auto co = complex_objects(imm, gf);
  for (int s = 0; s < gf.ns; ++s) {
    CVec ez = co.ez.row(s), ezb = co.ezbar.row(s);
    CHECK(std::abs(gf.cdot(s, ez, ez)) < 1e-12);
    CHECK(std::abs(gf.cdot(s, ez, ezb) - 0.5) < 1e-12);
    // e_z = e^{-lambda} dz_phi
    CHECK((ez - std::exp(-gf.lambda(s)) * co.dz_phi.row(s).transpose()).norm() < 1e-8);
  }
}

TEST_CASE("covariant dz reduces to partial_z on flat charts") {
  auto imm = make_catenoid_patch(make_euclidean(3), 0.8, 16);
  auto gf = geometry(imm);
  CMat field = imm.phi.cast<cplx>();
  CMat a = covariant_dz(imm, gf, field);
  CMat b = partial_z(imm.grid, field);
  CHECK((a - b).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("wp pairing") {
  auto imm = make_sphere_patch(make_euclidean(3), 1.0, Vec::Zero(3), 0.8, 12);
  auto gf = geometry(imm);
  CVec fzero = CVec::Zero(gf.ns);
  CHECK(wp_pairing(imm, gf, fzero).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  // umbilic: any f pairs to zero
  CVec f = CVec::Constant(gf.ns, cplx(0.7, -0.3));
  CHECK(wp_pairing(imm, gf, f).cwiseAbs().maxCoeff() < 1e-10);

  // cylinder sampled at parameter scale 0.8: H0 = n/(2r) in the unit frame
  // and e^lambda = 0.8, so the pairing with f = i is 0.8^{-2} Re(H0)
  double scale = 0.8;
  auto cyl = make_cylinder_patch(make_euclidean(3), 1.0, scale, 12);
  auto gcyl = geometry(cyl);
  CVec fi = CVec::Constant(gcyl.ns, cplx(0.0, 1.0));
  Mat pair = wp_pairing(cyl, gcyl, fi);
  for (int s = 0; s < gcyl.ns; ++s) {
    Vec n = cyl.phi.row(s);
    n(2) = 0;  // radial direction of the cylinder axis frame
    Vec expect = -0.5 * n / (scale * scale);
    CHECK((pair.row(s).transpose() - expect).norm() < 1e-10);
  }
}

TEST_CASE("graph patch weingarten vector at the center") {
  double eps = 0.1;
  int n = 17;  // odd: center sample on the grid
  auto imm = make_graph_patch(make_euclidean(3), eps, n);
  auto gf = geometry(imm);
  int s = imm.grid.index(n / 2, n / 2);
  CVec H0 = gf.H0.row(s);
  CVec expect(3);
  expect << 0, 0, cplx(2 * eps, 0);
  CHECK((H0 - expect).norm() < 1e-12);
}

TEST_CASE("builtin registry and spec strings") {
  auto imm = load_immersion("sphere:r=2,scale=0.5", 12, make_euclidean(3));
  CHECK(imm.conformal);
  CHECK(imm.m == 3);
  CHECK_THROWS_AS(load_immersion("moebius", 8, make_euclidean(3)), immersion_error);
  CHECK_THROWS_AS(load_immersion("sphere:r", 8, make_euclidean(3)), immersion_error);
  CHECK(builtin_is_conformal("torus"));
  CHECK(!builtin_is_conformal("graph"));
}

TEST_CASE("json immersion round trip and degeneracy error") {
  const int n = 12;
  GridLayout g = GridLayout::square(n);
  Mat phi(g.samples(), 3);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      int s = g.index(i, j);
      phi(s, 0) = g.x(i);
      phi(s, 1) = g.y(j);
      phi(s, 2) = 0.1 * g.x(i) * g.y(j);
    }
  auto dump = [&](const std::string& path, const Mat& data) {
    std::ofstream out(path);
    out.precision(17);
    out << "{\"domain\":\"disc\",\"n\":" << n << ",\"ambient_dim\":3,\"phi\":[";
    for (int s = 0; s < g.samples(); ++s)
      out << (s ? "," : "") << "[" << data(s, 0) << "," << data(s, 1) << "," << data(s, 2) << "]";
    out << "]}";
  };
  dump("imm_test.json", phi);
  auto imm = load_immersion("imm_test.json", 0, make_euclidean(3));
  CHECK(imm.samples() == g.samples());
  CHECK((imm.phi - phi).cwiseAbs().maxCoeff() < 1e-12);

  // collapsed row: immersion condition must fail
  Mat bad = phi;
  for (int i = 0; i < n; ++i) bad.row(g.index(i, 5)) = bad.row(g.index(0, 5));
  dump("imm_bad.json", bad);
  CHECK_THROWS_AS(load_immersion("imm_bad.json", 0, make_euclidean(3)), immersion_error);

  std::ofstream("imm_malformed.json") << "{\"domain\": \"disc\",";
  CHECK_THROWS_AS(load_immersion("imm_malformed.json", 0, make_euclidean(3)), immersion_error);
}

TEST_CASE("gauss map multivector agrees with the wedge dual") {
  // m = 3: gauss_n is the unit normal with (e1, e2, n) positively oriented
  auto imm = make_sphere_patch(make_euclidean(3), 1.0, Vec::Zero(3), 0.8, 10);
  auto gf = geometry(imm);
  for (int s = 0; s < gf.ns; ++s) {
    Vec n = gf.gauss_n.row(s);
    Vec cr = cross3(gf.e1.row(s), gf.e2.row(s));
    CHECK((n - cr).norm() < 1e-10);
    Vec nf = gf.normal_frame.row(s);
    CHECK((n - nf).norm() < 1e-10);
  }
}
