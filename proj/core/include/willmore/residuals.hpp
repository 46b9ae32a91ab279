#pragma once

#include <map>
#include <optional>

#include "willmore/immersion.hpp"

namespace willmore {

struct residual_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One verified identity at one or more grid refinements. Identity checks
/// pass on the estimated refinement order; exact-zero cases pass on the
/// absolute norm at the finest level.
struct ResidualReport {
  std::string name;
  double sup_norm = 0;
  double l2_norm = 0;
  std::vector<std::pair<int, double>> per_refinement;  // (N, sup norm)
  double estimated_order = 0;                          // mean log2 ratio, needs >= 3 levels
  bool pass = false;
  double min_order = 1.8;
  double zero_tol = 1e-9;
  std::map<std::string, double> details;

  void finalize();
};

struct CheckOptions {
  // willmore_el right-hand side selection
  enum class Mode { Free, ConformalConstrained, AreaConstrained, ConformalWillmoreConstrained };
  Mode mode = Mode::Free;
  std::optional<CVec> f;       // holomorphic density samples for constrained modes
  double multiplier = 0;       // area-constrained lagrange multiplier
  bool flip_curvature = false; // negative control: mis-signed curvature term
  double min_order = 1.8;
  double zero_tol = 1e-9;
};

using ImmersionBuilder = std::function<Immersion(int n)>;

/// Identity checks, one id per verified equation family:
///   frame_dzbar         D_zbar(e^l e_z) = e^{2l} H / 2
///   frame_dz            D_z(e^{-l} e_z) = H0 / 2
///   gauss_map_codim1    -2H grad(phi) = Dn + star(n ^ Dperp n)        (m = 3)
///   codazzi_mainardi    dbar(e^{2l}<H,H0>) balance
///   sysx                the two conservation laws of any conformal immersion
///   conservative_codim1 divergence form of the fourth-order operator  (m = 3)
///   conservative_general  divergence form, arbitrary codimension
///   willmore_el         conservative equation minus the mode's right side
///   conservation_laws   the three-equation system with Y built from H (f = 0)
///   cmc_constraint_conformal  parallel-H, holomorphy and constrained residual
///   f_el                second-fundamental-form energy criticality
///   pin_routes          projector vs contraction normal projections (pointwise)
std::vector<std::string> residual_check_ids();

/// Evaluate one check at a fixed resolution; returns one report per
/// sub-residual (no refinement data).
std::vector<ResidualReport> evaluate_check(const std::string& id, const Immersion& imm,
                                           const CheckOptions& opts = {});

/// Refinement study over the given grid sizes.
std::vector<ResidualReport> check_residuals(const std::string& id, const ImmersionBuilder& builder,
                                            const std::vector<int>& levels,
                                            const CheckOptions& opts = {});

}  // namespace willmore
