#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "willmore/exterior.hpp"

namespace willmore {

struct ambient_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Rank-4 tensor of Riemann components R^l_{k,mu,nu}:
///   Riem(∂_mu, ∂_nu) ∂_k = R^l_{k,mu,nu} ∂_l
/// in the sign convention Riem(X,Y)Z = D_X D_Y Z - D_Y D_X Z - D_{[X,Y]}Z,
/// which makes sectional curvature <Riem(u,v)v,u> equal +1 on the unit sphere.
struct RiemannTensor {
  int m = 0;
  std::vector<double> c;  // index (((l*m)+k)*m+mu)*m+nu

  RiemannTensor() = default;
  explicit RiemannTensor(int dim) : m(dim), c(dim * dim * dim * dim, 0.0) {}
  double& operator()(int l, int k, int mu, int nu) { return c[((l * m + k) * m + mu) * m + nu]; }
  double operator()(int l, int k, int mu, int nu) const {
    return c[((l * m + k) * m + mu) * m + nu];
  }
  // Riem(u,v)w as a vector (components may be complex via bilinear extension)
  template <class S>
  Eigen::Matrix<S, Eigen::Dynamic, 1> apply(const Eigen::Matrix<S, Eigen::Dynamic, 1>& u,
                                            const Eigen::Matrix<S, Eigen::Dynamic, 1>& v,
                                            const Eigen::Matrix<S, Eigen::Dynamic, 1>& w) const {
    Eigen::Matrix<S, Eigen::Dynamic, 1> r = Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(m);
    for (int l = 0; l < m; ++l)
      for (int k = 0; k < m; ++k)
        for (int mu = 0; mu < m; ++mu)
          for (int nu = 0; nu < m; ++nu)
            r(l) += (*this)(l, k, mu, nu) * u(mu) * v(nu) * w(k);
    return r;
  }
};

/// Christoffel symbols Γ^k_{μν}, symmetric in the lower indices.
struct Christoffel {
  int m = 0;
  std::vector<double> c;  // index (k*m+mu)*m+nu

  Christoffel() = default;
  explicit Christoffel(int dim) : m(dim), c(dim * dim * dim, 0.0) {}
  double& operator()(int k, int mu, int nu) { return c[(k * m + mu) * m + nu]; }
  double operator()(int k, int mu, int nu) const { return c[(k * m + mu) * m + nu]; }
  // Γ(a, b)^k = Γ^k_{μν} a^μ b^ν, bilinear in possibly complex arguments
  template <class S>
  Eigen::Matrix<S, Eigen::Dynamic, 1> apply(const Eigen::Matrix<S, Eigen::Dynamic, 1>& a,
                                            const Eigen::Matrix<S, Eigen::Dynamic, 1>& b) const {
    Eigen::Matrix<S, Eigen::Dynamic, 1> r = Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(m);
    for (int k = 0; k < m; ++k)
      for (int mu = 0; mu < m; ++mu)
        for (int nu = 0; nu < m; ++nu) r(k) += (*this)(k, mu, nu) * a(mu) * b(nu);
    return r;
  }
};

struct CurvaturePack {
  Vec point;
  Christoffel christoffel;
  RiemannTensor riemann;
  Mat ricci;
  double scalar = 0;
};

/// Riemannian metric field on a single coordinate chart. Built-ins provide
/// closed-form first and second coordinate derivatives of h; the base class
/// falls back to centered finite differences with step eta.
class AmbientManifold {
 public:
  virtual ~AmbientManifold() = default;

  virtual int dim() const = 0;
  virtual double chart_radius() const = 0;
  virtual std::string name() const = 0;
  virtual void metric(const Vec& x, Mat& h) const = 0;
  virtual void metric_d1(const Vec& x, std::vector<Mat>& dh) const;   // dh[k] = ∂_k h
  virtual void metric_d2(const Vec& x, std::vector<Mat>& ddh) const;  // ddh[k*m+l] = ∂_k ∂_l h
  virtual bool flat() const { return false; }
  // charts with h = phi^2 delta preserve conformality of euclidean-conformal
  // parametrizations; others only admit approximately conformal built-ins
  virtual bool conformally_flat() const { return flat(); }

  double fd_step() const { return 1e-4 * chart_radius(); }
  void check_inside(const Vec& x) const;

  Mat metric_at(const Vec& x) const;
  Christoffel christoffel(const Vec& x) const;
  // ∂_l Γ^k_{μν}, from closed-form metric derivatives
  void christoffel_d1(const Vec& x, std::vector<Christoffel>& dG) const;
  CurvaturePack curvature(const Vec& x) const;

  double sectional(const Vec& x, const Vec& u, const Vec& v) const;
  double sectional(const CurvaturePack& cp, const Mat& h, const Vec& u, const Vec& v) const;

  /// Curvature endomorphisms for an orthonormal tangent pair (e1,e2) and a
  /// normal vector H:  R~(H) = -pi_n[sum_i Riem(H,e_i)e_i],
  /// Rperp = (pi_T[Riem(e1,e2)H])^perp,  Kbar = sectional on span(e1,e2).
  struct Endomorphisms {
    Vec r_tilde;
    Vec r_perp;
    double kbar;
  };
  Endomorphisms curvature_endomorphisms(const Vec& x, const Vec& e1, const Vec& e2,
                                        const Vec& H, double frame_tol = 1e-10) const;

  /// Curvature quantities entering the first variation of the integrated
  /// tangent sectional curvature: the frame-curvature vector built from the
  /// second fundamental form, and the covariant derivative of the Riemann
  /// tensor contracted on the tangent frame.
  struct FrameCurvature {
    Vec frak_r;  // sum_j (<Riem(II_1j,e2)e1,e2> e_j + <Riem(e1,II_2j)e1,e2> e_j)
    Vec d_r;     // sum_i <(D_{E_i}Riem)(e1,e2)e1,e2> E_i
  };
  FrameCurvature frame_curvature(const Vec& x, const Vec& e1, const Vec& e2,
                                 const std::array<Vec, 4>& sff) const;  // sff: II_11,II_12,II_21,II_22

  /// Covariant derivative of the Riemann tensor, ∇_s R^l_{k,mu,nu}; the
  /// coordinate derivative of R is taken by centered differences of the
  /// Riemann field.
  void riemann_d1(const Vec& x, std::vector<RiemannTensor>& dR) const;

  /// Geodesic shooting: integrate x'' + Γ(x)(x',x') = 0 over unit time from
  /// (p, v) with classic 4th-order steps; the step count doubles until the
  /// endpoint moves less than tol.
  Vec exp_map(const Vec& p, const Vec& v, double tol = 1e-12) const;
  Vec exp_map_fixed_steps(const Vec& p, const Vec& v, int steps) const;

  /// Sum of the six ordered-pair sectional curvatures of an orthonormal
  /// 3-frame; equals the scalar curvature of the exponentiated 3-space.
  double r_subspace(const Vec& p, const Mat& basis3, double frame_tol = 1e-8) const;

  /// Map a (possibly non-orthonormal) spanning set to an h(p)-orthonormal one.
  Mat orthonormalize(const Vec& p, const Mat& span) const;
};

std::shared_ptr<AmbientManifold> make_euclidean(int m);
// round sphere of radius r: conformal chart with h = delta / (1 + |x|^2/(4 r^2))^2
std::shared_ptr<AmbientManifold> make_sphere(int m, double radius);
// hyperbolic space of curvature -1/a^2 on the Poincare ball chart
std::shared_ptr<AmbientManifold> make_hyperbolic(int m, double a);
// h = delta + eps * s(x) with s a compactly supported smooth symmetric field
std::shared_ptr<AmbientManifold> make_perturbed_euclidean(int m, double eps);
// h = (1 + eps b(x))^2 delta, b a compactly supported bump: conformally flat,
// non-constant curvature
std::shared_ptr<AmbientManifold> make_conformal_bump(int m, double eps);

/// Ambient factory from a JSON-ish spec: kind in {euclidean, sphere,
/// hyperbolic, perturbed}; see make_* for parameters.
std::shared_ptr<AmbientManifold> make_ambient(const std::string& kind, int dim, double param);

}  // namespace willmore
