#include <cmath>
#include <fstream>

#include "json.hpp"
#include "willmore/immersion.hpp"

namespace willmore {

namespace {

using json = nlohmann::json;

struct PatchJet {
  Vec p, pu, pv, puu, puv, pvv;
  explicit PatchJet(int m)
      : p(Vec::Zero(m)), pu(Vec::Zero(m)), pv(Vec::Zero(m)), puu(Vec::Zero(m)),
        puv(Vec::Zero(m)), pvv(Vec::Zero(m)) {}
};

using PatchFn = std::function<void(double u, double v, PatchJet& jet)>;

Immersion sample_patch(std::shared_ptr<const AmbientManifold> ambient, int m, const PatchFn& fn,
                       double scale, int n, bool conformal, double tol_conf,
                       const std::string& label, double half_width = 1.0) {
  Immersion imm;
  imm.kind = DomainKind::Disc;
  imm.grid = GridLayout::square(n, half_width);
  imm.m = m;
  imm.ambient = std::move(ambient);
  imm.conformal = conformal;
  // generic curved metrics have no closed-form conformal parametrizations;
  // the built-ins are only approximately conformal there
  imm.tol_conf = imm.ambient->conformally_flat() ? tol_conf : 0.05;
  imm.label = label;
  const int ns = imm.grid.samples();
  imm.phi.resize(ns, m);
  for (auto& d : imm.d1) d.resize(ns, m);
  for (auto& d : imm.d2) d.resize(ns, m);
  PatchJet jet(m);
  for (int j = 0; j < imm.grid.ny; ++j)
    for (int i = 0; i < imm.grid.nx; ++i) {
      int s = imm.grid.index(i, j);
      fn(scale * imm.grid.x(i), scale * imm.grid.y(j), jet);
      imm.phi.row(s) = jet.p;
      imm.d1[0].row(s) = scale * jet.pu;
      imm.d1[1].row(s) = scale * jet.pv;
      imm.d2[0].row(s) = scale * scale * jet.puu;
      imm.d2[1].row(s) = scale * scale * jet.puv;
      imm.d2[2].row(s) = scale * scale * jet.pvv;
    }
  imm.validate();
  return imm;
}

// closed-form jets of the unit-sphere stereographic parametrization
void stereographic_jet(double u, double v, double radius, const Vec& center, PatchJet& jet) {
  const double D = 1 + u * u + v * v;
  const double A = 1 / D;
  const double Au = -2 * u * A * A, Av = -2 * v * A * A;
  const double Auu = -2 * A * A + 8 * u * u * A * A * A;
  const double Avv = -2 * A * A + 8 * v * v * A * A * A;
  const double Auv = 8 * u * v * A * A * A;

  auto set3 = [&](Vec& out, double a, double b, double c) {
    out.setZero();
    out(0) = a;
    out(1) = b;
    out(2) = c;
  };
  set3(jet.p, 2 * u * A, 2 * v * A, 1 - 2 * A);
  jet.p *= radius;
  jet.p += center;
  set3(jet.pu, 2 * A + 2 * u * Au, 2 * v * Au, -2 * Au);
  set3(jet.pv, 2 * u * Av, 2 * A + 2 * v * Av, -2 * Av);
  set3(jet.puu, 4 * Au + 2 * u * Auu, 2 * v * Auu, -2 * Auu);
  set3(jet.puv, 2 * Av + 2 * u * Auv, 2 * Au + 2 * v * Auv, -2 * Auv);
  set3(jet.pvv, 2 * u * Avv, 4 * Av + 2 * v * Avv, -2 * Avv);
  jet.pu *= radius;
  jet.pv *= radius;
  jet.puu *= radius;
  jet.puv *= radius;
  jet.pvv *= radius;
}

double gauss_legendre_u(double theta, double a, double c) {
  // u(theta) = int_0^theta sqrt(a^2 sin^2 + c^2 cos^2) / (a cos) dt
  static const double gx[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                               -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                               0.7966664774136267,  0.9602898564975363};
  static const double gw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                               0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                               0.2223810344533745, 0.1012285362903763};
  // composite over 8 panels for near machine accuracy on the band
  double total = 0;
  const int panels = 8;
  for (int p = 0; p < panels; ++p) {
    double lo = theta * p / panels, hi = theta * (p + 1) / panels;
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (int k = 0; k < 8; ++k) {
      double t = mid + half * gx[k];
      double w = std::sqrt(a * a * std::sin(t) * std::sin(t) + c * c * std::cos(t) * std::cos(t));
      total += half * gw[k] * w / (a * std::cos(t));
    }
  }
  return total;
}

}  // namespace

Immersion make_sphere_patch(std::shared_ptr<const AmbientManifold> ambient, double radius,
                            const Vec& center, double scale, int n, double half_width) {
  const int m = ambient->dim();
  if (m < 3) throw immersion_error("sphere patch needs ambient dimension >= 3");
  Vec c = Vec::Zero(m);
  c.head(center.size()) = center;
  auto fn = [radius, c](double u, double v, PatchJet& jet) {
    stereographic_jet(u, v, radius, c, jet);
  };
  return sample_patch(std::move(ambient), m, fn, scale, n, true, 1e-8, "sphere-patch",
                      half_width);
}

Immersion make_cylinder_patch(std::shared_ptr<const AmbientManifold> ambient, double r,
                              double scale, int n) {
  const int m = ambient->dim();
  if (m < 3) throw immersion_error("cylinder patch needs ambient dimension >= 3");
  auto fn = [r, m](double u, double v, PatchJet& jet) {
    double cu = std::cos(u / r), su = std::sin(u / r);
    jet.p.setZero();
    jet.pu.setZero();
    jet.pv.setZero();
    jet.puu.setZero();
    jet.puv.setZero();
    jet.pvv.setZero();
    jet.p(0) = r * cu, jet.p(1) = r * su, jet.p(2) = v;
    jet.pu(0) = -su, jet.pu(1) = cu;
    jet.pv(2) = 1;
    jet.puu(0) = -cu / r, jet.puu(1) = -su / r;
  };
  return sample_patch(std::move(ambient), m, fn, scale, n, true, 1e-8, "cylinder-patch");
}

Immersion make_catenoid_patch(std::shared_ptr<const AmbientManifold> ambient, double scale,
                              int n, double half_width) {
  const int m = ambient->dim();
  auto fn = [](double u, double v, PatchJet& jet) {
    double ch = std::cosh(u), sh = std::sinh(u), cv = std::cos(v), sv = std::sin(v);
    jet.p.setZero();
    jet.pu.setZero();
    jet.pv.setZero();
    jet.puu.setZero();
    jet.puv.setZero();
    jet.pvv.setZero();
    jet.p(0) = ch * cv, jet.p(1) = ch * sv, jet.p(2) = u;
    jet.pu(0) = sh * cv, jet.pu(1) = sh * sv, jet.pu(2) = 1;
    jet.pv(0) = -ch * sv, jet.pv(1) = ch * cv;
    jet.puu(0) = ch * cv, jet.puu(1) = ch * sv;
    jet.puv(0) = -sh * sv, jet.puv(1) = sh * cv;
    jet.pvv(0) = -ch * cv, jet.pvv(1) = -ch * sv;
  };
  return sample_patch(std::move(ambient), m, fn, scale, n, true, 1e-8, "catenoid-patch",
                      half_width);
}

Immersion make_enneper_patch(std::shared_ptr<const AmbientManifold> ambient, double scale, int n) {
  const int m = ambient->dim();
  auto fn = [](double u, double v, PatchJet& jet) {
    jet.p.setZero();
    jet.pu.setZero();
    jet.pv.setZero();
    jet.puu.setZero();
    jet.puv.setZero();
    jet.pvv.setZero();
    jet.p(0) = u - u * u * u / 3 + u * v * v;
    jet.p(1) = -v + v * v * v / 3 - u * u * v;
    jet.p(2) = u * u - v * v;
    jet.pu(0) = 1 - u * u + v * v, jet.pu(1) = -2 * u * v, jet.pu(2) = 2 * u;
    jet.pv(0) = 2 * u * v, jet.pv(1) = -1 + v * v - u * u, jet.pv(2) = -2 * v;
    jet.puu(0) = -2 * u, jet.puu(1) = -2 * v, jet.puu(2) = 2;
    jet.puv(0) = 2 * v, jet.puv(1) = -2 * u;
    jet.pvv(0) = 2 * u, jet.pvv(1) = 2 * v, jet.pvv(2) = -2;
  };
  return sample_patch(std::move(ambient), m, fn, scale, n, true, 1e-8, "enneper-patch");
}

Immersion make_flat_torus_patch(std::shared_ptr<const AmbientManifold> ambient, double a, double b,
                                double scale, int n) {
  const int m = ambient->dim();
  if (m < 4) throw immersion_error("flat torus patch needs ambient dimension >= 4");
  auto fn = [a, b](double u, double v, PatchJet& jet) {
    jet.p.setZero();
    jet.pu.setZero();
    jet.pv.setZero();
    jet.puu.setZero();
    jet.puv.setZero();
    jet.pvv.setZero();
    double cu = std::cos(u / a), su = std::sin(u / a);
    double cv = std::cos(v / b), sv = std::sin(v / b);
    jet.p(0) = a * cu, jet.p(1) = a * su, jet.p(2) = b * cv, jet.p(3) = b * sv;
    jet.pu(0) = -su, jet.pu(1) = cu;
    jet.pv(2) = -sv, jet.pv(3) = cv;
    jet.puu(0) = -cu / a, jet.puu(1) = -su / a;
    jet.pvv(2) = -cv / b, jet.pvv(3) = -sv / b;
  };
  return sample_patch(std::move(ambient), m, fn, scale, n, true, 1e-8, "flat-torus-patch");
}

Immersion make_spheroid_patch(std::shared_ptr<const AmbientManifold> ambient, double a, double c,
                              double scale, int n) {
  const int m = ambient->dim();
  if (m < 3) throw immersion_error("spheroid patch needs ambient dimension >= 3");
  auto q = [a, c](double th) {
    double w = std::sqrt(a * a * std::sin(th) * std::sin(th) + c * c * std::cos(th) * std::cos(th));
    return w / (a * std::cos(th));
  };
  auto fn = [a, c, q](double u, double v, PatchJet& jet) {
    // invert the isothermal latitude u(theta) by Newton iteration
    double th = u / q(0.0);
    for (int it = 0; it < 60; ++it) {
      double f = gauss_legendre_u(th, a, c) - u;
      double step = f / q(th);
      th -= step;
      if (std::abs(step) < 1e-15) break;
    }
    double sn = std::sin(th), cs = std::cos(th), cv = std::cos(v), sv = std::sin(v);
    double w = std::sqrt(a * a * sn * sn + c * c * cs * cs);
    double wp = (a * a - c * c) * sn * cs / w;
    double qq = w / (a * cs);
    double qp = (wp * cs + w * sn) / (a * cs * cs);
    double tp = 1 / qq;            // theta'(u)
    double tpp = -qp / (qq * qq * qq);  // theta''(u)

    Vec P(3), Pt(3), Pv(3), Ptt(3), Ptv(3), Pvv(3);
    P << a * cs * cv, a * cs * sv, c * sn;
    Pt << -a * sn * cv, -a * sn * sv, c * cs;
    Pv << -a * cs * sv, a * cs * cv, 0;
    Ptt << -a * cs * cv, -a * cs * sv, -c * sn;
    Ptv << a * sn * sv, -a * sn * cv, 0;
    Pvv << -a * cs * cv, -a * cs * sv, 0;

    jet.p.setZero();
    jet.pu.setZero();
    jet.pv.setZero();
    jet.puu.setZero();
    jet.puv.setZero();
    jet.pvv.setZero();
    jet.p.head(3) = P;
    jet.pu.head(3) = Pt * tp;
    jet.pv.head(3) = Pv;
    jet.puu.head(3) = Ptt * tp * tp + Pt * tpp;
    jet.puv.head(3) = Ptv * tp;
    jet.pvv.head(3) = Pvv;
  };
  return sample_patch(std::move(ambient), m, fn, scale, n, true, 1e-7, "spheroid-patch");
}

Immersion make_graph_patch(std::shared_ptr<const AmbientManifold> ambient, double eps, int n) {
  const int m = ambient->dim();
  auto fn = [eps](double u, double v, PatchJet& jet) {
    jet.p.setZero();
    jet.pu.setZero();
    jet.pv.setZero();
    jet.puu.setZero();
    jet.puv.setZero();
    jet.pvv.setZero();
    jet.p(0) = u, jet.p(1) = v, jet.p(2) = eps * (u * u - v * v);
    jet.pu(0) = 1, jet.pu(2) = 2 * eps * u;
    jet.pv(1) = 1, jet.pv(2) = -2 * eps * v;
    jet.puu(2) = 2 * eps;
    jet.pvv(2) = -2 * eps;
  };
  return sample_patch(std::move(ambient), m, fn, 1.0, n, false, 0, "graph-patch");
}

Immersion make_ellipsoid_mesh(std::shared_ptr<const AmbientManifold> ambient, double a, double b,
                              double c, int n_theta, int n_phi) {
  const int m = ambient->dim();
  if (m < 3) throw immersion_error("ellipsoid mesh needs ambient dimension >= 3");
  Immersion imm;
  imm.kind = DomainKind::Sphere;
  imm.grid = GridLayout::sphere(n_theta, n_phi);
  imm.m = m;
  imm.ambient = std::move(ambient);
  imm.conformal = false;
  imm.label = "ellipsoid-mesh";
  const int ns = imm.grid.samples();
  imm.phi.resize(ns, m);
  for (auto& d : imm.d1) d.resize(ns, m);
  for (auto& d : imm.d2) d.resize(ns, m);
  for (int j = 0; j < imm.grid.ny; ++j)
    for (int i = 0; i < imm.grid.nx; ++i) {
      int s = imm.grid.index(i, j);
      double th = imm.grid.x(i), ph = imm.grid.y(j);
      double st = std::sin(th), ct = std::cos(th), cp = std::cos(ph), sp = std::sin(ph);
      auto row = [&](Mat& M, double x, double y, double z) {
        M.row(s).setZero();
        M(s, 0) = x;
        M(s, 1) = y;
        M(s, 2) = z;
      };
      row(imm.phi, a * st * cp, b * st * sp, c * ct);
      row(imm.d1[0], a * ct * cp, b * ct * sp, -c * st);
      row(imm.d1[1], -a * st * sp, b * st * cp, 0);
      row(imm.d2[0], -a * st * cp, -b * st * sp, -c * ct);
      row(imm.d2[1], -a * ct * sp, b * ct * cp, 0);
      row(imm.d2[2], -a * st * cp, -b * st * sp, 0);
    }
  imm.validate();
  return imm;
}

Immersion make_from_samples(DomainKind kind, const GridLayout& grid,
                            std::shared_ptr<const AmbientManifold> ambient, Mat phi,
                            bool conformal, double tol_conf) {
  Immersion imm;
  imm.kind = kind;
  imm.grid = grid;
  imm.m = static_cast<int>(phi.cols());
  imm.ambient = std::move(ambient);
  imm.phi = std::move(phi);
  imm.conformal = conformal;
  imm.tol_conf = tol_conf;
  imm.label = "sampled";
  if (imm.m != imm.ambient->dim()) throw immersion_error("sample width != ambient dimension");
  if (imm.phi.rows() != grid.samples()) throw immersion_error("sample count != grid size");
  const int order2 = kind == DomainKind::Sphere ? 4 : 2;
  imm.d1[0] = d_x(grid, imm.phi);
  imm.d1[1] = d_y(grid, imm.phi);
  imm.d2[0] = d_xx(grid, imm.phi, order2);
  imm.d2[1] = d_xy(grid, imm.phi);
  imm.d2[2] = d_yy(grid, imm.phi, order2);
  imm.validate();
  return imm;
}

Immersion make_geodesic_sphere_mesh(std::shared_ptr<const AmbientManifold> ambient, const Vec& p,
                                    const Mat& basis3, double rho, int n_theta, int n_phi) {
  Mat B = ambient->orthonormalize(p, basis3);
  GridLayout grid = GridLayout::sphere(n_theta, n_phi);
  Mat phi(grid.samples(), ambient->dim());
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      double th = grid.x(i), ph = grid.y(j);
      Vec dir = std::sin(th) * std::cos(ph) * B.col(0) + std::sin(th) * std::sin(ph) * B.col(1) +
                std::cos(th) * B.col(2);
      phi.row(grid.index(i, j)) = ambient->exp_map(p, rho * dir);
    }
  Immersion imm = make_from_samples(DomainKind::Sphere, grid, std::move(ambient), std::move(phi),
                                    false, 0);
  imm.label = "geodesic-sphere";
  return imm;
}

Immersion with_positions(const Immersion& base, const Mat& new_phi) {
  Immersion imm = make_from_samples(base.kind, base.grid, base.ambient, new_phi, false, 0);
  imm.label = base.label;
  return imm;
}

namespace {

std::map<std::string, double> parse_params(const std::string& s) {
  std::map<std::string, double> out;
  size_t pos = 0;
  while (pos < s.size()) {
    size_t eq = s.find('=', pos);
    if (eq == std::string::npos) throw immersion_error("bad immersion parameter: " + s);
    size_t end = s.find(',', eq);
    if (end == std::string::npos) end = s.size();
    std::string key = s.substr(pos, eq - pos);
    out[key] = std::stod(s.substr(eq + 1, end - eq - 1));
    pos = end + (end < s.size() ? 1 : 0);
  }
  return out;
}

double get(const std::map<std::string, double>& p, const std::string& k, double dflt) {
  auto it = p.find(k);
  return it == p.end() ? dflt : it->second;
}

}  // namespace

bool builtin_is_conformal(const std::string& name) {
  return name == "sphere" || name == "cylinder" || name == "catenoid" || name == "enneper" ||
         name == "torus" || name == "spheroid";
}

Immersion load_immersion(const std::string& spec, int n,
                         std::shared_ptr<const AmbientManifold> ambient) {
  if (spec.size() > 5 && spec.substr(spec.size() - 5) == ".json")
    return load_immersion_json(spec, std::move(ambient));
  std::string name = spec;
  std::map<std::string, double> p;
  if (size_t colon = spec.find(':'); colon != std::string::npos) {
    name = spec.substr(0, colon);
    p = parse_params(spec.substr(colon + 1));
  }
  if (name == "sphere") {
    Vec c(3);
    c << get(p, "cx", 0), get(p, "cy", 0), get(p, "cz", 0);
    return make_sphere_patch(std::move(ambient), get(p, "r", 1.0), c, get(p, "scale", 0.8), n);
  }
  if (name == "cylinder")
    return make_cylinder_patch(std::move(ambient), get(p, "r", 1.0), get(p, "scale", 0.8), n);
  if (name == "catenoid") return make_catenoid_patch(std::move(ambient), get(p, "scale", 0.8), n);
  if (name == "enneper") return make_enneper_patch(std::move(ambient), get(p, "scale", 0.7), n);
  if (name == "torus")
    return make_flat_torus_patch(std::move(ambient), get(p, "a", 1.0), get(p, "b", 0.7),
                                 get(p, "scale", 0.8), n);
  if (name == "spheroid")
    return make_spheroid_patch(std::move(ambient), get(p, "a", 1.0), get(p, "c", 1.3),
                               get(p, "scale", 0.5), n);
  if (name == "graph") return make_graph_patch(std::move(ambient), get(p, "eps", 0.1), n);
  if (name == "ellipsoid")
    return make_ellipsoid_mesh(std::move(ambient), get(p, "a", 1.0), get(p, "b", 1.0),
                               get(p, "c", 1.3), n, 2 * n);
  if (name == "sphere-mesh") {
    double r = get(p, "r", 1.0);
    return make_ellipsoid_mesh(std::move(ambient), r, r, r, n, 2 * n);
  }
  if (name == "geodesic-sphere") {
    int m = ambient->dim();
    Vec origin = Vec::Zero(m);
    Mat basis = Mat::Identity(m, 3);
    return make_geodesic_sphere_mesh(std::move(ambient), origin, basis, get(p, "rho", 0.1), n,
                                     2 * n);
  }
  throw immersion_error("unknown immersion builtin: " + name);
}

Immersion load_immersion_json(const std::string& path,
                              std::shared_ptr<const AmbientManifold> ambient) {
  std::ifstream in(path);
  if (!in) throw immersion_error("cannot open immersion file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw immersion_error("immersion file parse error: " + std::string(e.what()));
  }
  for (const auto& key : {"domain", "n", "ambient_dim", "phi"})
    if (!j.contains(key)) throw immersion_error(std::string("immersion file missing key: ") + key);

  const std::string domain = j["domain"];
  const int m = j["ambient_dim"];
  if (m != ambient->dim()) throw immersion_error("immersion file dimension != ambient dimension");

  GridLayout grid;
  DomainKind kind;
  if (domain == "disc") {
    kind = DomainKind::Disc;
    grid = GridLayout::square(j["n"].get<int>());
  } else if (domain == "sphere") {
    kind = DomainKind::Sphere;
    int n = j["n"].get<int>();
    grid = GridLayout::sphere(n, 2 * n);
  } else {
    throw immersion_error("immersion file domain must be disc or sphere");
  }
  const auto& rows = j["phi"];
  if (static_cast<int>(rows.size()) != grid.samples())
    throw immersion_error("immersion file phi count != n^2 grid samples");
  Mat phi(grid.samples(), m);
  for (int s = 0; s < grid.samples(); ++s) {
    if (static_cast<int>(rows[s].size()) != m)
      throw immersion_error("immersion file phi row width != ambient_dim");
    for (int k = 0; k < m; ++k) phi(s, k) = rows[s][k].get<double>();
  }
  bool conformal = j.value("conformal", false);
  double tol = j.value("tol_conf", 1e-3);
  return make_from_samples(kind, grid, std::move(ambient), std::move(phi), conformal, tol);
}

}  // namespace willmore
