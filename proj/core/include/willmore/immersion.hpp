#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "willmore/ambient.hpp"
#include "willmore/grid.hpp"

namespace willmore {

struct immersion_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using CMat = Eigen::MatrixXcd;

enum class DomainKind { Disc, Sphere };

/// Sampled immersion of a disc patch or a closed sphere mesh into an ambient
/// chart, with per-sample first and second coordinate derivatives (closed
/// form for built-ins, finite differences otherwise).
struct Immersion {
  DomainKind kind = DomainKind::Disc;
  GridLayout grid;
  int m = 0;
  std::shared_ptr<const AmbientManifold> ambient;
  Mat phi;                  // samples x m
  std::array<Mat, 2> d1;    // phi_x, phi_y
  std::array<Mat, 3> d2;    // phi_xx, phi_xy, phi_yy
  bool conformal = false;
  double tol_conf = 1e-8;
  std::string label;

  int samples() const { return grid.samples(); }
  /// rank / conformality validation; throws immersion_error on failure
  void validate() const;
  double conformality_defect() const;  // sup over samples
};

/// Per-sample geometric bundle: first/second fundamental forms in the
/// orthonormal frame, mean curvature, trace-free complex Weingarten vector,
/// Gauss and ambient sectional curvature, Gauss map multivector, quadrature.
struct GeometryField {
  int m = 0, ns = 0;
  bool flat = true;

  Mat g;             // ns x 3 : g11, g12, g22
  Vec lambda;        // conformal factor log|phi_x|_h
  Mat e1, e2;        // orthonormal tangent frame, ns x m
  Mat frame_coeff;   // ns x 4 : e1 = c(0) phi_x + c(1) phi_y, e2 = c(2) phi_x + c(3) phi_y
  Mat normal_frame;  // ns x (m-2)m, normal vectors n_alpha flattened
  Mat gauss_n;       // ns x C(m, m-2): coefficients of star_h(e1 ^ e2)
  Mat sff11, sff12, sff22;  // II(e_a, e_b), ns x m
  Mat Hvec;                 // ns x m
  CMat H0;                  // ns x m (conformal immersions)
  Vec Kg, Kbar;
  Vec area_element;  // sqrt(det g)
  Vec quad_weight;   // quadrature weight (zero outside the disc on disc grids)
  Vec norm_mask;     // 1 on samples entering residual norms (interior ring)

  std::vector<Mat> hmat;              // ambient metric along phi (empty when flat)
  std::vector<Christoffel> christof;  // ambient connection along phi (empty when flat)

  Mat metric_at(int s) const { return flat ? Mat::Identity(m, m) : hmat[s]; }
  // h-inner product of ambient vectors at sample s (bilinear for complex)
  double dot(int s, const Vec& a, const Vec& b) const;
  cplx cdot(int s, const CVec& a, const CVec& b) const;
  // projection onto the normal space at sample s (frame-free)
  Vec project_normal(int s, const Vec& w) const;
  CVec project_normal(int s, const CVec& w) const;
};

GeometryField geometry(const Immersion& imm);

struct EnergyReport {
  double willmore = 0;       // integral of |H|^2
  double energy_f = 0;       // 1/2 integral of |II|^2
  double conformal = 0;      // integral of |H|^2 + Kbar
  double area = 0;
  double f1 = 0;             // energy_f + area
  double lagrangian = 0;     // integral of |II|^2/4 - Kbar/2 + 1
  double wk = 0;             // integral of |II|^2/4 - Kbar/2
  double gauss_bonnet_defect = -1;  // |int Kg - 4 pi|, sphere meshes only
};

EnergyReport energies(const Immersion& imm, const GeometryField& gf);
EnergyReport energies(const Immersion& imm);

/// Complex-coordinate helpers for conformal disc immersions.
struct ComplexObjects {
  CMat ez, ezbar;      // ns x m
  CMat dz_phi;         // ns x m, exact from d1
  CMat dzbar_phi;
};
ComplexObjects complex_objects(const Immersion& imm, const GeometryField& gf);

// d/dz of a sampled complex field (4th-order grid stencils)
CMat partial_z(const GridLayout& g, const CMat& f);
CMat partial_zbar(const GridLayout& g, const CMat& f);
// covariant D_z / D_zbar of an ambient complex vector field along phi
CMat covariant_dz(const Immersion& imm, const GeometryField& gf, const CMat& field);
CMat covariant_dzbar(const Immersion& imm, const GeometryField& gf, const CMat& field);

/// Weil-Petersson-type pairing: e^{-2 lambda} Im(f conj(H0)) as a real
/// normal-vector field, for holomorphic scalar samples f.
Mat wp_pairing(const Immersion& imm, const GeometryField& gf, const CVec& f);

/// Conservation-law vector field -2i <H,H0> dzbar(phi) - 2i pi_n(D_z H).
CMat conservation_vector_field(const Immersion& imm, const GeometryField& gf);

// ---- built-in immersions --------------------------------------------------

/// Stereographically parametrized round sphere of radius `radius` centered at
/// `center` (chart coordinates, first three components used), restricted to
/// the parameter square scaled by `scale`. Conformal. half_width sets the
/// parameter square [-w, w]^2 (the solver grids use w = 2).
Immersion make_sphere_patch(std::shared_ptr<const AmbientManifold> ambient, double radius,
                            const Vec& center, double scale, int n, double half_width = 1.0);
/// Round cylinder of radius r in arclength (conformal) coordinates.
Immersion make_cylinder_patch(std::shared_ptr<const AmbientManifold> ambient, double r,
                              double scale, int n);
Immersion make_catenoid_patch(std::shared_ptr<const AmbientManifold> ambient, double scale, int n,
                              double half_width = 1.0);
Immersion make_enneper_patch(std::shared_ptr<const AmbientManifold> ambient, double scale, int n);
/// Flat product torus in R^4 (arclength coordinates, conformal); the two
/// radii may differ.
Immersion make_flat_torus_patch(std::shared_ptr<const AmbientManifold> ambient, double a, double b,
                                double scale, int n);
/// Spheroid (a, a, c) in conformal coordinates; the isothermal latitude is
/// inverted per sample by Newton iteration on its closed-form quadrature.
Immersion make_spheroid_patch(std::shared_ptr<const AmbientManifold> ambient, double a, double c,
                              double scale, int n);
/// Graph patch (x, y, eps (x^2 - y^2)); not conformal.
Immersion make_graph_patch(std::shared_ptr<const AmbientManifold> ambient, double eps, int n);

/// Closed ellipsoid mesh with closed-form latitude/longitude derivatives.
Immersion make_ellipsoid_mesh(std::shared_ptr<const AmbientManifold> ambient, double a, double b,
                              double c, int n_theta, int n_phi);
/// Geodesic sphere: exponential-map image of the radius-rho sphere inside the
/// 3-subspace spanned by basis3 (orthonormalized); derivatives by finite
/// differences of the shot node positions.
Immersion make_geodesic_sphere_mesh(std::shared_ptr<const AmbientManifold> ambient, const Vec& p,
                                    const Mat& basis3, double rho, int n_theta, int n_phi);

/// Immersion with externally supplied samples; derivatives by grid stencils.
Immersion make_from_samples(DomainKind kind, const GridLayout& grid,
                            std::shared_ptr<const AmbientManifold> ambient, Mat phi,
                            bool conformal, double tol_conf);

/// Node-position update preserving derivative bookkeeping (flat ambients:
/// derivatives recomputed by grid stencils).
Immersion with_positions(const Immersion& base, const Mat& new_phi);

// name:key=val,... builtin spec (e.g. "sphere:r=1,scale=0.8") or a JSON path
Immersion load_immersion(const std::string& spec, int n,
                         std::shared_ptr<const AmbientManifold> ambient);
Immersion load_immersion_json(const std::string& path,
                              std::shared_ptr<const AmbientManifold> ambient);

/// Whether the named builtin produces a conformal parametrization.
bool builtin_is_conformal(const std::string& name);

}  // namespace willmore
