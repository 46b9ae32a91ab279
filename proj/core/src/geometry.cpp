#include <cmath>

#include "willmore/exterior.hpp"
#include "willmore/immersion.hpp"
#include "willmore/parallel.hpp"

namespace willmore {

double GeometryField::dot(int s, const Vec& a, const Vec& b) const {
  if (flat) return a.dot(b);
  return a.dot(hmat[s] * b);
}

cplx GeometryField::cdot(int s, const CVec& a, const CVec& b) const {
  if (flat) return a.cwiseProduct(b).sum();
  const Mat& h = hmat[s];
  cplx out = 0;
  for (int mu = 0; mu < m; ++mu)
    for (int nu = 0; nu < m; ++nu) out += h(mu, nu) * a(mu) * b(nu);
  return out;
}

Vec GeometryField::project_normal(int s, const Vec& w) const {
  Vec a = e1.row(s), b = e2.row(s);
  return w - a * dot(s, w, a) - b * dot(s, w, b);
}

CVec GeometryField::project_normal(int s, const CVec& w) const {
  CVec a = e1.row(s).cast<cplx>(), b = e2.row(s).cast<cplx>();
  return w - a * cdot(s, w, a) - b * cdot(s, w, b);
}

void Immersion::validate() const {
  const bool curved = !ambient->flat();
  const int ns = samples();
  for (int s = 0; s < ns; ++s) {
    Mat h = curved ? ambient->metric_at(phi.row(s)) : Mat();
    Vec px = d1[0].row(s), py = d1[1].row(s);
    double g11 = curved ? px.dot(h * px) : px.squaredNorm();
    double g22 = curved ? py.dot(h * py) : py.squaredNorm();
    double g12 = curved ? px.dot(h * py) : px.dot(py);
    double tr = g11 + g22;
    double det = g11 * g22 - g12 * g12;
    if (det <= 0) throw immersion_error(label + ": immersion condition fails (degenerate dPhi)");
    double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
    double smin = std::sqrt(std::max(0.0, tr / 2 - disc));
    double smax = std::sqrt(tr / 2 + disc);
    if (smin / smax <= 1e-6)
      throw immersion_error(label + ": immersion condition fails (singular value ratio)");
  }
  if (conformal) {
    double defect = conformality_defect();
    if (defect > tol_conf)
      throw immersion_error(label + ": conformality defect " + std::to_string(defect) +
                            " exceeds tolerance " + std::to_string(tol_conf));
  }
}

double Immersion::conformality_defect() const {
  const bool curved = !ambient->flat();
  double worst = 0;
  for (int s = 0; s < samples(); ++s) {
    Mat h = curved ? ambient->metric_at(phi.row(s)) : Mat();
    Vec px = d1[0].row(s), py = d1[1].row(s);
    double nx = curved ? std::sqrt(px.dot(h * px)) : px.norm();
    double ny = curved ? std::sqrt(py.dot(h * py)) : py.norm();
    double cr = curved ? px.dot(h * py) : px.dot(py);
    double scale = std::max(1e-30, nx * ny);
    worst = std::max(worst, (std::abs(cr) + std::abs(nx - ny) * std::max(nx, ny)) / scale);
  }
  return worst;
}

namespace {

// deterministic normal frame: orthonormalize coordinate axes against the
// tangent plane, keep the m-2 most independent, orient the full frame
// positively
void normal_frame_at(const Mat& h, bool flat, const Vec& e1, const Vec& e2, int m, Mat& out) {
  auto dot = [&](const Vec& a, const Vec& b) { return flat ? a.dot(b) : a.dot(h * b); };
  std::vector<Vec> frame = {e1, e2};
  for (int axis = 0; axis < m && static_cast<int>(frame.size()) < m; ++axis) {
    Vec v = Vec::Zero(m);
    v(axis) = 1.0;
    for (const Vec& f : frame) v -= f * dot(f, v);
    double nrm = std::sqrt(std::max(0.0, dot(v, v)));
    if (nrm > 0.2) frame.push_back(v / nrm);
  }
  if (static_cast<int>(frame.size()) < m) {
    // retry with a laxer threshold; the axes always span
    for (int axis = 0; axis < m && static_cast<int>(frame.size()) < m; ++axis) {
      Vec v = Vec::Zero(m);
      v(axis) = 1.0;
      for (const Vec& f : frame) v -= f * dot(f, v);
      double nrm = std::sqrt(std::max(0.0, dot(v, v)));
      if (nrm > 1e-8) frame.push_back(v / nrm);
    }
  }
  if (static_cast<int>(frame.size()) < m) throw immersion_error("normal frame construction failed");
  Mat full(m, m);
  for (int i = 0; i < m; ++i) full.col(i) = frame[i];
  if (full.determinant() < 0) full.col(m - 1) *= -1.0;  // star_h 1 = e1 ^ e2 ^ n
  out = full.rightCols(m - 2);
}

}  // namespace

GeometryField geometry(const Immersion& imm) {
  imm.validate();
  const int m = imm.m;
  const int ns = imm.samples();
  const bool flat = imm.ambient->flat();
  const BladeTable& bt = BladeTable::get(m);

  GeometryField gf;
  gf.m = m;
  gf.ns = ns;
  gf.flat = flat;
  gf.g.resize(ns, 3);
  gf.lambda.resize(ns);
  gf.e1.resize(ns, m);
  gf.e2.resize(ns, m);
  gf.frame_coeff.resize(ns, 4);
  gf.normal_frame.resize(ns, (m - 2) * m);
  gf.gauss_n.resize(ns, bt.count(m - 2));
  gf.sff11.resize(ns, m);
  gf.sff12.resize(ns, m);
  gf.sff22.resize(ns, m);
  gf.Hvec.resize(ns, m);
  gf.H0.resize(ns, m);
  gf.Kg.resize(ns);
  gf.Kbar.resize(ns);
  gf.area_element.resize(ns);
  if (!flat) {
    gf.hmat.resize(ns);
    gf.christof.resize(ns);
  }

  parallel_for(ns, [&](int lo, int hi) {
    Mat h = Mat::Identity(m, m);
    for (int s = lo; s < hi; ++s) {
      Vec x = imm.phi.row(s);
      CurvaturePack cp;
      if (!flat) {
        h = imm.ambient->metric_at(x);
        gf.hmat[s] = h;
        gf.christof[s] = imm.ambient->christoffel(x);
      }
      auto dot = [&](const Vec& a, const Vec& b) { return flat ? a.dot(b) : a.dot(h * b); };

      Vec px = imm.d1[0].row(s), py = imm.d1[1].row(s);
      double g11 = dot(px, px), g12 = dot(px, py), g22 = dot(py, py);
      gf.g.row(s) << g11, g12, g22;
      gf.area_element(s) = std::sqrt(std::max(0.0, g11 * g22 - g12 * g12));
      gf.lambda(s) = 0.5 * std::log(g11);

      Vec e1, e2;
      double c10, c11c, c20, c21;
      if (imm.conformal) {
        double el = std::exp(-gf.lambda(s));
        e1 = el * px;
        e2 = el * py;
        c10 = el, c11c = 0, c20 = 0, c21 = el;
      } else {
        double n1 = std::sqrt(g11);
        e1 = px / n1;
        Vec t = py - (g12 / g11) * px;
        double n2 = std::sqrt(std::max(1e-300, dot(t, t)));
        e2 = t / n2;
        c10 = 1 / n1, c11c = 0;
        c20 = -(g12 / g11) / n2, c21 = 1 / n2;
      }
      gf.e1.row(s) = e1;
      gf.e2.row(s) = e2;
      gf.frame_coeff.row(s) << c10, c11c, c20, c21;

      // covariant hessian D_i D_j phi
      Vec D11 = imm.d2[0].row(s), D12 = imm.d2[1].row(s), D22 = imm.d2[2].row(s);
      if (!flat) {
        const Christoffel& G = gf.christof[s];
        D11 += G.apply<double>(px, px);
        D12 += G.apply<double>(px, py);
        D22 += G.apply<double>(py, py);
      }
      auto pin = [&](const Vec& w) { return (w - e1 * dot(w, e1) - e2 * dot(w, e2)).eval(); };
      Vec I11c = pin(D11), I12c = pin(D12), I22c = pin(D22);
      // frame components II(e_a, e_b) from the coordinate ones
      auto frame_sff = [&](double a0, double a1, double b0, double b1) {
        return (a0 * b0 * I11c + (a0 * b1 + a1 * b0) * I12c + a1 * b1 * I22c).eval();
      };
      Vec II11 = frame_sff(c10, c11c, c10, c11c);
      Vec II12 = frame_sff(c10, c11c, c20, c21);
      Vec II22 = frame_sff(c20, c21, c20, c21);
      gf.sff11.row(s) = II11;
      gf.sff12.row(s) = II12;
      gf.sff22.row(s) = II22;
      Vec H = 0.5 * (II11 + II22);
      gf.Hvec.row(s) = H;
      gf.H0.row(s) = (0.5 * (II11 - II22)).cast<cplx>() - cplx(0, 1) * II12.cast<cplx>();

      if (flat) {
        gf.Kbar(s) = 0.0;
      } else {
        gf.Kbar(s) = imm.ambient->sectional(x, e1, e2);
      }
      gf.Kg(s) = gf.Kbar(s) + dot(II11, II22) - dot(II12, II12);

      Mat nframe;
      normal_frame_at(h, flat, e1, e2, m, nframe);
      for (int a = 0; a < m - 2; ++a)
        gf.normal_frame.row(s).segment(a * m, m) = nframe.col(a);

      InnerProduct ip = flat ? InnerProduct(m) : InnerProduct(h);
      MultiVector tangent2 = wedge(MultiVector::vector(m, e1), MultiVector::vector(m, e2));
      gf.gauss_n.row(s) = hodge_star(tangent2, ip).coeffs;
    }
  });

  // quadrature weights and interior norm mask
  gf.quad_weight.resize(ns);
  gf.norm_mask.resize(ns);
  const GridLayout& g = imm.grid;
  if (imm.kind == DomainKind::Disc) {
    double w0 = g.dx() * g.dy();
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        int s = g.index(i, j);
        double xx = g.x(i), yy = g.y(j);
        bool in_disc = xx * xx + yy * yy <= 1.0 + 1e-14;
        double wt = w0;
        if (i == 0 || i == g.nx - 1) wt *= 0.5;
        if (j == 0 || j == g.ny - 1) wt *= 0.5;
        gf.quad_weight(s) = in_disc ? wt : 0.0;
        bool interior = i >= 2 && i <= g.nx - 3 && j >= 2 && j <= g.ny - 3;
        gf.norm_mask(s) = (in_disc && interior) ? 1.0 : 0.0;
      }
  } else {
    double w0 = g.dx() * g.dy();
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        int s = g.index(i, j);
        gf.quad_weight(s) = w0;
        // polar rows excluded from sup-norm reports
        gf.norm_mask(s) = (i >= 2 && i <= g.nx - 3) ? 1.0 : 0.0;
      }
  }
  return gf;
}

EnergyReport energies(const Immersion& imm, const GeometryField& gf) {
  EnergyReport r;
  const int ns = gf.ns;
  double int_kg = 0;
  for (int s = 0; s < ns; ++s) {
    double w = gf.quad_weight(s) * gf.area_element(s);
    if (w == 0) continue;
    Vec II11 = gf.sff11.row(s), II12 = gf.sff12.row(s), II22 = gf.sff22.row(s), H = gf.Hvec.row(s);
    double ii2 = gf.dot(s, II11, II11) + 2 * gf.dot(s, II12, II12) + gf.dot(s, II22, II22);
    double h2 = gf.dot(s, H, H);
    r.willmore += h2 * w;
    r.energy_f += 0.5 * ii2 * w;
    r.conformal += (h2 + gf.Kbar(s)) * w;
    r.area += w;
    r.lagrangian += (0.25 * ii2 - 0.5 * gf.Kbar(s) + 1.0) * w;
    r.wk += (0.25 * ii2 - 0.5 * gf.Kbar(s)) * w;
    int_kg += gf.Kg(s) * w;
  }
  r.f1 = r.energy_f + r.area;
  if (imm.kind == DomainKind::Sphere)
    r.gauss_bonnet_defect = std::abs(int_kg - 4 * M_PI);
  return r;
}

EnergyReport energies(const Immersion& imm) { return energies(imm, geometry(imm)); }

ComplexObjects complex_objects(const Immersion& imm, const GeometryField& gf) {
  if (!imm.conformal) throw immersion_error("complex objects require a conformal immersion");
  ComplexObjects co;
  const cplx I(0, 1);
  co.ez = 0.5 * (gf.e1.cast<cplx>() - I * gf.e2.cast<cplx>());
  co.ezbar = 0.5 * (gf.e1.cast<cplx>() + I * gf.e2.cast<cplx>());
  co.dz_phi = 0.5 * (imm.d1[0].cast<cplx>() - I * imm.d1[1].cast<cplx>());
  co.dzbar_phi = 0.5 * (imm.d1[0].cast<cplx>() + I * imm.d1[1].cast<cplx>());
  return co;
}

CMat partial_z(const GridLayout& g, const CMat& f) {
  const cplx I(0, 1);
  return 0.5 * (d_x(g, f) - I * d_y(g, f));
}

CMat partial_zbar(const GridLayout& g, const CMat& f) {
  const cplx I(0, 1);
  return 0.5 * (d_x(g, f) + I * d_y(g, f));
}

namespace {

CMat covariant_d(const Immersion& imm, const GeometryField& gf, const CMat& field, bool bar) {
  CMat out = bar ? partial_zbar(imm.grid, field) : partial_z(imm.grid, field);
  if (gf.flat) return out;
  const cplx I(0, 1);
  const int ns = gf.ns;
  parallel_for(ns, [&](int lo, int hi) {
    for (int s = lo; s < hi; ++s) {
      CVec dphi = 0.5 * (imm.d1[0].row(s).transpose().cast<cplx>() +
                         (bar ? I : -I) * imm.d1[1].row(s).transpose().cast<cplx>());
      CVec v = field.row(s);
      out.row(s) += gf.christof[s].apply<cplx>(dphi, v);
    }
  });
  return out;
}

}  // namespace

CMat covariant_dz(const Immersion& imm, const GeometryField& gf, const CMat& field) {
  return covariant_d(imm, gf, field, false);
}

CMat covariant_dzbar(const Immersion& imm, const GeometryField& gf, const CMat& field) {
  return covariant_d(imm, gf, field, true);
}

CMat conservation_vector_field(const Immersion& imm, const GeometryField& gf) {
  if (!imm.conformal)
    throw immersion_error("conservation vector field requires a conformal immersion");
  auto co = complex_objects(imm, gf);
  CMat Hc = gf.Hvec.cast<cplx>();
  CMat DzH = covariant_dz(imm, gf, Hc);
  const cplx I(0, 1);
  CMat Y(gf.ns, gf.m);
  for (int s = 0; s < gf.ns; ++s) {
    cplx hh0 = gf.cdot(s, Hc.row(s), gf.H0.row(s));
    CVec pin = gf.project_normal(s, CVec(DzH.row(s)));
    Y.row(s) = -2.0 * I * hh0 * co.dzbar_phi.row(s) - 2.0 * I * pin.transpose();
  }
  return Y;
}

Mat wp_pairing(const Immersion& imm, const GeometryField& gf, const CVec& f) {
  if (!imm.conformal) throw immersion_error("wp_pairing requires a conformal immersion");
  Mat out(gf.ns, gf.m);
  for (int s = 0; s < gf.ns; ++s) {
    double e2l = std::exp(-2 * gf.lambda(s));
    CVec v = f(s) * gf.H0.row(s).conjugate().transpose();
    out.row(s) = e2l * v.imag();
  }
  return out;
}

}  // namespace willmore
