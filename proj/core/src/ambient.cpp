#include "willmore/ambient.hpp"

#include <cmath>

namespace willmore {

void AmbientManifold::check_inside(const Vec& x) const {
  if (x.norm() > chart_radius()) throw ambient_error("point outside chart of " + name());
}

Mat AmbientManifold::metric_at(const Vec& x) const {
  Mat h(dim(), dim());
  metric(x, h);
  return h;
}

void AmbientManifold::metric_d1(const Vec& x, std::vector<Mat>& dh) const {
  const int m = dim();
  const double eta = fd_step();
  dh.assign(m, Mat(m, m));
  Mat hp(m, m), hm(m, m);
  for (int k = 0; k < m; ++k) {
    Vec xp = x, xm = x;
    xp(k) += eta;
    xm(k) -= eta;
    metric(xp, hp);
    metric(xm, hm);
    dh[k] = (hp - hm) / (2 * eta);
  }
}

void AmbientManifold::metric_d2(const Vec& x, std::vector<Mat>& ddh) const {
  const int m = dim();
  const double eta = fd_step();
  ddh.assign(m * m, Mat(m, m));
  Mat h0(m, m), ha(m, m), hb(m, m), hc(m, m), hd(m, m);
  metric(x, h0);
  for (int k = 0; k < m; ++k)
    for (int l = k; l < m; ++l) {
      if (k == l) {
        Vec xp = x, xm = x;
        xp(k) += eta;
        xm(k) -= eta;
        metric(xp, ha);
        metric(xm, hb);
        ddh[k * m + k] = (ha - 2 * h0 + hb) / (eta * eta);
      } else {
        Vec xa = x, xb = x, xc = x, xd = x;
        xa(k) += eta, xa(l) += eta;
        xb(k) += eta, xb(l) -= eta;
        xc(k) -= eta, xc(l) += eta;
        xd(k) -= eta, xd(l) -= eta;
        metric(xa, ha);
        metric(xb, hb);
        metric(xc, hc);
        metric(xd, hd);
        ddh[k * m + l] = (ha - hb - hc + hd) / (4 * eta * eta);
        ddh[l * m + k] = ddh[k * m + l];
      }
    }
}

Christoffel AmbientManifold::christoffel(const Vec& x) const {
  const int m = dim();
  Mat h(m, m);
  metric(x, h);
  Eigen::LLT<Mat> llt(h);
  if (llt.info() != Eigen::Success) throw ambient_error("metric not positive definite at point");
  Mat hinv = llt.solve(Mat::Identity(m, m));
  std::vector<Mat> dh;
  metric_d1(x, dh);
  Christoffel G(m);
  for (int k = 0; k < m; ++k)
    for (int mu = 0; mu < m; ++mu)
      for (int nu = mu; nu < m; ++nu) {
        double s = 0;
        for (int l = 0; l < m; ++l)
          s += 0.5 * hinv(k, l) * (dh[mu](nu, l) + dh[nu](mu, l) - dh[l](mu, nu));
        G(k, mu, nu) = s;
        G(k, nu, mu) = s;
      }
  return G;
}

void AmbientManifold::christoffel_d1(const Vec& x, std::vector<Christoffel>& dG) const {
  const int m = dim();
  Mat h(m, m);
  metric(x, h);
  Mat hinv = h.llt().solve(Mat::Identity(m, m));
  std::vector<Mat> dh;
  std::vector<Mat> ddh;
  metric_d1(x, dh);
  metric_d2(x, ddh);
  std::vector<Mat> dhinv(m);
  for (int s = 0; s < m; ++s) dhinv[s] = -hinv * dh[s] * hinv;
  dG.assign(m, Christoffel(m));
  for (int s = 0; s < m; ++s)
    for (int k = 0; k < m; ++k)
      for (int mu = 0; mu < m; ++mu)
        for (int nu = mu; nu < m; ++nu) {
          double acc = 0;
          for (int l = 0; l < m; ++l) {
            acc += 0.5 * dhinv[s](k, l) * (dh[mu](nu, l) + dh[nu](mu, l) - dh[l](mu, nu));
            acc += 0.5 * hinv(k, l) *
                   (ddh[s * m + mu](nu, l) + ddh[s * m + nu](mu, l) - ddh[s * m + l](mu, nu));
          }
          dG[s](k, mu, nu) = acc;
          dG[s](k, nu, mu) = acc;
        }
}

CurvaturePack AmbientManifold::curvature(const Vec& x) const {
  const int m = dim();
  CurvaturePack cp;
  cp.point = x;
  cp.christoffel = christoffel(x);
  std::vector<Christoffel> dG;
  christoffel_d1(x, dG);
  cp.riemann = RiemannTensor(m);
  const Christoffel& G = cp.christoffel;
  for (int l = 0; l < m; ++l)
    for (int k = 0; k < m; ++k)
      for (int mu = 0; mu < m; ++mu)
        for (int nu = 0; nu < m; ++nu) {
          double r = dG[mu](l, nu, k) - dG[nu](l, mu, k);
          for (int s = 0; s < m; ++s) r += G(l, mu, s) * G(s, nu, k) - G(l, nu, s) * G(s, mu, k);
          cp.riemann(l, k, mu, nu) = r;
        }
  cp.ricci = Mat::Zero(m, m);
  for (int k = 0; k < m; ++k)
    for (int nu = 0; nu < m; ++nu) {
      double s = 0;
      for (int l = 0; l < m; ++l) s += cp.riemann(l, k, l, nu);
      cp.ricci(k, nu) = s;
    }
  Mat h(m, m);
  metric(x, h);
  Mat hinv = h.llt().solve(Mat::Identity(m, m));
  cp.scalar = (hinv * cp.ricci).trace();
  return cp;
}

double AmbientManifold::sectional(const CurvaturePack& cp, const Mat& h, const Vec& u,
                                  const Vec& v) const {
  Vec rv = cp.riemann.apply<double>(u, v, v);
  double num = rv.dot(h * u);
  double uu = u.dot(h * u), vv = v.dot(h * v), uv = u.dot(h * v);
  double den = uu * vv - uv * uv;
  if (den <= 0) throw ambient_error("sectional curvature of a degenerate 2-plane");
  return num / den;
}

double AmbientManifold::sectional(const Vec& x, const Vec& u, const Vec& v) const {
  return sectional(curvature(x), metric_at(x), u, v);
}

AmbientManifold::Endomorphisms AmbientManifold::curvature_endomorphisms(
    const Vec& x, const Vec& e1, const Vec& e2, const Vec& H, double frame_tol) const {
  const int m = dim();
  Mat h(m, m);
  metric(x, h);
  auto dot = [&](const Vec& a, const Vec& b) { return a.dot(h * b); };
  if (std::abs(dot(e1, e1) - 1) > frame_tol || std::abs(dot(e2, e2) - 1) > frame_tol ||
      std::abs(dot(e1, e2)) > frame_tol)
    throw ambient_error("tangent frame not orthonormal");
  if (std::abs(dot(H, e1)) > frame_tol * (1 + H.norm()) ||
      std::abs(dot(H, e2)) > frame_tol * (1 + H.norm()))
    throw ambient_error("H not normal to the frame");

  CurvaturePack cp = curvature(x);
  Endomorphisms out;
  Vec sum = cp.riemann.apply<double>(H, e1, e1) + cp.riemann.apply<double>(H, e2, e2);
  Vec pi_n = sum - e1 * dot(sum, e1) - e2 * dot(sum, e2);
  out.r_tilde = -pi_n;
  Vec y = cp.riemann.apply<double>(e1, e2, H);
  double a = dot(y, e1), b = dot(y, e2);
  out.r_perp = a * e2 - b * e1;  // +pi/2 rotation from e1 towards e2
  out.kbar = sectional(cp, h, e1, e2);
  return out;
}

void AmbientManifold::riemann_d1(const Vec& x, std::vector<RiemannTensor>& dR) const {
  const int m = dim();
  const double eta = fd_step();
  const Christoffel G = christoffel(x);
  dR.assign(m, RiemannTensor(m));
  RiemannTensor R0 = curvature(x).riemann;
  for (int s = 0; s < m; ++s) {
    Vec xp = x, xm = x;
    xp(s) += eta;
    xm(s) -= eta;
    RiemannTensor Rp = curvature(xp).riemann;
    RiemannTensor Rm = curvature(xm).riemann;
    RiemannTensor& D = dR[s];
    for (int l = 0; l < m; ++l)
      for (int k = 0; k < m; ++k)
        for (int mu = 0; mu < m; ++mu)
          for (int nu = 0; nu < m; ++nu) {
            double v = (Rp(l, k, mu, nu) - Rm(l, k, mu, nu)) / (2 * eta);
            for (int a = 0; a < m; ++a) {
              v += G(l, s, a) * R0(a, k, mu, nu);
              v -= G(a, s, k) * R0(l, a, mu, nu);
              v -= G(a, s, mu) * R0(l, k, a, nu);
              v -= G(a, s, nu) * R0(l, k, mu, a);
            }
            D(l, k, mu, nu) = v;
          }
  }
}

AmbientManifold::FrameCurvature AmbientManifold::frame_curvature(
    const Vec& x, const Vec& e1, const Vec& e2, const std::array<Vec, 4>& sff) const {
  const int m = dim();
  Mat h(m, m);
  metric(x, h);
  CurvaturePack cp = curvature(x);
  auto dot = [&](const Vec& a, const Vec& b) { return a.dot(h * b); };

  FrameCurvature out;
  out.frak_r = Vec::Zero(m);
  const Vec* e[2] = {&e1, &e2};
  for (int j = 0; j < 2; ++j) {
    const Vec& II1j = sff[0 * 2 + j];
    const Vec& II2j = sff[1 * 2 + j];
    double c1 = dot(cp.riemann.apply<double>(II1j, e2, e1), e2);
    double c2 = dot(cp.riemann.apply<double>(e1, II2j, e1), e2);
    out.frak_r += (c1 + c2) * (*e[j]);
  }

  std::vector<RiemannTensor> dR;
  riemann_d1(x, dR);
  Mat hinv = h.llt().solve(Mat::Identity(m, m));
  Vec s(m);
  for (int sigma = 0; sigma < m; ++sigma)
    s(sigma) = dot(dR[sigma].apply<double>(e1, e2, e1), e2);
  out.d_r = hinv * s;  // frame-free form of sum_i <...> E_i
  return out;
}

Vec AmbientManifold::exp_map_fixed_steps(const Vec& p, const Vec& v, int steps) const {
  Vec x = p, u = v;
  const double dt = 1.0 / steps;
  auto acc = [&](const Vec& xx, const Vec& uu) -> Vec {
    Christoffel G = christoffel(xx);
    return -G.apply<double>(uu, uu);
  };
  for (int s = 0; s < steps; ++s) {
    Vec k1x = u, k1u = acc(x, u);
    Vec k2x = u + 0.5 * dt * k1u, k2u = acc(x + 0.5 * dt * k1x, u + 0.5 * dt * k1u);
    Vec k3x = u + 0.5 * dt * k2u, k3u = acc(x + 0.5 * dt * k2x, u + 0.5 * dt * k2u);
    Vec k4x = u + dt * k3u, k4u = acc(x + dt * k3x, u + dt * k3u);
    x += dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    u += dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
    if (x.norm() > chart_radius()) throw ambient_error("geodesic exits chart of " + name());
  }
  return x;
}

Vec AmbientManifold::exp_map(const Vec& p, const Vec& v, double tol) const {
  if (v.norm() == 0) return p;
  if (flat()) return p + v;
  int steps = 8;
  Vec prev = exp_map_fixed_steps(p, v, steps);
  for (int it = 0; it < 16; ++it) {
    steps *= 2;
    Vec next = exp_map_fixed_steps(p, v, steps);
    if ((next - prev).norm() < tol * std::max(1.0, p.norm() + v.norm())) return next;
    prev = next;
  }
  throw ambient_error("exp_map step-size underflow");
}

Mat AmbientManifold::orthonormalize(const Vec& p, const Mat& span) const {
  const int m = dim();
  Mat h(m, m);
  metric(p, h);
  Mat out = span;
  for (int j = 0; j < out.cols(); ++j) {
    for (int k = 0; k < j; ++k) out.col(j) -= out.col(k) * (out.col(k).dot(h * out.col(j)));
    double nrm = std::sqrt(out.col(j).dot(h * out.col(j)));
    if (nrm < 1e-12) throw ambient_error("degenerate spanning set");
    out.col(j) /= nrm;
  }
  return out;
}

double AmbientManifold::r_subspace(const Vec& p, const Mat& basis3, double frame_tol) const {
  if (basis3.cols() != 3) throw ambient_error("r_subspace needs a 3-frame");
  Mat h = metric_at(p);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double want = i == j ? 1.0 : 0.0;
      if (std::abs(basis3.col(i).dot(h * basis3.col(j)) - want) > frame_tol)
        throw ambient_error("r_subspace frame not orthonormal");
    }
  CurvaturePack cp = curvature(p);
  double sum = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) sum += sectional(cp, h, basis3.col(i), basis3.col(j));
  return sum;
}

namespace {

class Euclidean final : public AmbientManifold {
 public:
  explicit Euclidean(int m) : m_(m) {}
  int dim() const override { return m_; }
  double chart_radius() const override { return 1e6; }
  std::string name() const override { return "euclidean"; }
  bool flat() const override { return true; }
  void metric(const Vec&, Mat& h) const override { h = Mat::Identity(m_, m_); }
  void metric_d1(const Vec&, std::vector<Mat>& dh) const override {
    dh.assign(m_, Mat::Zero(m_, m_));
  }
  void metric_d2(const Vec&, std::vector<Mat>& ddh) const override {
    ddh.assign(m_ * m_, Mat::Zero(m_, m_));
  }

 private:
  int m_;
};

// h = phi(x)^2 delta for a closed-form conformal factor: covers the constant
// curvature model charts and a bump-factor chart with generic curvature
class ConformalChart : public AmbientManifold {
 public:
  ConformalChart(int m, double radius, std::string name)
      : m_(m), radius_(radius), name_(std::move(name)) {}
  int dim() const override { return m_; }
  double chart_radius() const override { return radius_; }
  std::string name() const override { return name_; }
  bool conformally_flat() const override { return true; }

  virtual void phi_jet(const Vec& x, double& phi, Vec& grad, Mat& hess) const = 0;

  void metric(const Vec& x, Mat& h) const override {
    double phi;
    Vec g(m_);
    Mat hs(m_, m_);
    phi_jet(x, phi, g, hs);
    h = phi * phi * Mat::Identity(m_, m_);
  }
  void metric_d1(const Vec& x, std::vector<Mat>& dh) const override {
    double phi;
    Vec g(m_);
    Mat hs(m_, m_);
    phi_jet(x, phi, g, hs);
    dh.assign(m_, Mat::Zero(m_, m_));
    for (int k = 0; k < m_; ++k) dh[k] = 2 * phi * g(k) * Mat::Identity(m_, m_);
  }
  void metric_d2(const Vec& x, std::vector<Mat>& ddh) const override {
    double phi;
    Vec g(m_);
    Mat hs(m_, m_);
    phi_jet(x, phi, g, hs);
    ddh.assign(m_ * m_, Mat::Zero(m_, m_));
    for (int k = 0; k < m_; ++k)
      for (int l = 0; l < m_; ++l)
        ddh[k * m_ + l] = 2 * (g(k) * g(l) + phi * hs(k, l)) * Mat::Identity(m_, m_);
  }

 protected:
  int m_;
  double radius_;
  std::string name_;
};

// phi = 1/(1 + K|x|^2/4): constant sectional curvature K
class ConstantCurvature final : public ConformalChart {
 public:
  ConstantCurvature(int m, double K, double radius, std::string name)
      : ConformalChart(m, radius, std::move(name)), K_(K) {}

  void phi_jet(const Vec& x, double& phi, Vec& grad, Mat& hess) const override {
    double ps = 1.0 + K_ / 4.0 * x.squaredNorm();
    if (ps <= 1e-12) throw ambient_error("point outside " + name_ + " chart");
    phi = 1.0 / ps;
    for (int k = 0; k < m_; ++k) grad(k) = -(K_ / 2) * x(k) / (ps * ps);
    for (int k = 0; k < m_; ++k)
      for (int l = 0; l < m_; ++l) {
        double pk = (K_ / 2) * x(k), pl = (K_ / 2) * x(l), pkl = k == l ? K_ / 2 : 0.0;
        hess(k, l) = 2 * pk * pl / (ps * ps * ps) - pkl / (ps * ps);
      }
  }

 private:
  double K_;
};

// phi = 1 + eps (1-|x|^2)^6 inside the unit ball: conformally flat with
// generic, non-constant curvature
class ConformalBump final : public ConformalChart {
 public:
  ConformalBump(int m, double eps) : ConformalChart(m, 10.0, "conformal-bump"), eps_(eps) {}

  void phi_jet(const Vec& x, double& phi, Vec& grad, Mat& hess) const override {
    double u = x.squaredNorm();
    if (u >= 1.0) {
      phi = 1.0;
      grad.setZero();
      hess.setZero();
      return;
    }
    double t = 1.0 - u;
    double t4 = std::pow(t, 4), t5 = t4 * t, t6 = t5 * t;
    phi = 1.0 + eps_ * t6;
    grad = -12.0 * eps_ * t5 * x;
    hess = 120.0 * eps_ * t4 * (x * x.transpose());
    hess.diagonal().array() += -12.0 * eps_ * t5;
  }

 private:
  double eps_;
};

// h = delta + eps * b(x) C(x): smooth compactly supported perturbation,
// b = (1-|x|^2)^6 inside the unit ball, C symmetric and affine in x
class PerturbedEuclidean final : public AmbientManifold {
 public:
  PerturbedEuclidean(int m, double eps) : m_(m), eps_(eps), p_(m), q_(m) {
    for (int i = 0; i < m; ++i) {
      p_(i) = 1.0 - 0.35 * i;
      q_(i) = 0.2 + 0.13 * i * (i % 2 ? -1 : 1);
    }
  }
  int dim() const override { return m_; }
  double chart_radius() const override { return 10.0; }
  std::string name() const override { return "perturbed-euclidean"; }

  void metric(const Vec& x, Mat& h) const override {
    h = Mat::Identity(m_, m_) + eps_ * bump(x) * cmat(x);
  }
  void metric_d1(const Vec& x, std::vector<Mat>& dh) const override {
    dh.assign(m_, Mat::Zero(m_, m_));
    double b = bump(x);
    Vec db = bump_d1(x);
    Mat C = cmat(x);
    for (int k = 0; k < m_; ++k) dh[k] = eps_ * (db(k) * C + b * cmat_d1(k));
  }
  void metric_d2(const Vec& x, std::vector<Mat>& ddh) const override {
    ddh.assign(m_ * m_, Mat::Zero(m_, m_));
    double b = bump(x);
    Vec db = bump_d1(x);
    Mat C = cmat(x);
    (void)b;
    for (int k = 0; k < m_; ++k)
      for (int l = 0; l < m_; ++l)
        ddh[k * m_ + l] =
            eps_ * (bump_d2(x, k, l) * C + db(k) * cmat_d1(l) + db(l) * cmat_d1(k));
  }

 private:
  double bump(const Vec& x) const {
    double u = x.squaredNorm();
    return u >= 1.0 ? 0.0 : std::pow(1.0 - u, 6);
  }
  Vec bump_d1(const Vec& x) const {
    double u = x.squaredNorm();
    if (u >= 1.0) return Vec::Zero(m_);
    return -12.0 * std::pow(1.0 - u, 5) * x;
  }
  double bump_d2(const Vec& x, int k, int l) const {
    double u = x.squaredNorm();
    if (u >= 1.0) return 0.0;
    double t = 1.0 - u;
    return -12.0 * std::pow(t, 5) * (k == l ? 1.0 : 0.0) + 120.0 * std::pow(t, 4) * x(k) * x(l);
  }
  Mat cmat(const Vec& x) const {
    Mat C = p_ * p_.transpose();
    C += q_ * x.transpose() + x * q_.transpose();
    return C;
  }
  Mat cmat_d1(int k) const {
    Mat D = Mat::Zero(m_, m_);
    D.col(k) += q_;
    D.row(k) += q_.transpose();
    return D;
  }
  int m_;
  double eps_;
  Vec p_, q_;
};

}  // namespace

std::shared_ptr<AmbientManifold> make_euclidean(int m) { return std::make_shared<Euclidean>(m); }

std::shared_ptr<AmbientManifold> make_sphere(int m, double radius) {
  if (radius <= 0) throw ambient_error("sphere radius must be positive");
  return std::make_shared<ConstantCurvature>(m, 1.0 / (radius * radius), 4 * radius, "sphere");
}

std::shared_ptr<AmbientManifold> make_hyperbolic(int m, double a) {
  if (a <= 0) throw ambient_error("hyperbolic scale must be positive");
  return std::make_shared<ConstantCurvature>(m, -1.0 / (a * a), 1.8 * a, "hyperbolic");
}

std::shared_ptr<AmbientManifold> make_perturbed_euclidean(int m, double eps) {
  return std::make_shared<PerturbedEuclidean>(m, eps);
}

std::shared_ptr<AmbientManifold> make_conformal_bump(int m, double eps) {
  return std::make_shared<ConformalBump>(m, eps);
}

std::shared_ptr<AmbientManifold> make_ambient(const std::string& kind, int dim, double param) {
  if (kind == "euclidean") return make_euclidean(dim);
  if (kind == "sphere") return make_sphere(dim, param);
  if (kind == "hyperbolic") return make_hyperbolic(dim, param);
  if (kind == "perturbed") return make_perturbed_euclidean(dim, param);
  if (kind == "conformal_bump") return make_conformal_bump(dim, param);
  throw ambient_error("unknown ambient kind: " + kind);
}

}  // namespace willmore
