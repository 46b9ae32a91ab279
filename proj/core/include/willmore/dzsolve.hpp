#pragma once

#include <map>

#include "willmore/immersion.hpp"

namespace willmore {

struct dzsolve_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Complex per-sample data on the solver grid: M x M uniform samples of
/// [-2,2]^2; channel count 1 for scalars, m for vectors, C(m,2) for 2-vectors.
struct ComplexField {
  GridLayout grid;
  CMat values;

  cplx z(int i, int j) const { return {grid.x(i), grid.y(j)}; }
};

/// Connection coefficients gamma^j_k = Gamma^j_{kl} dz(phi)^l with compact
/// support inside B_2(0), acting on vectors (grade 1) or as a derivation on
/// higher-grade coefficients.
struct GammaField {
  GridLayout grid;
  int m = 0;
  CMat entries;  // samples x m*m, gamma^j_k at column j*m+k; empty = zero field

  bool empty() const { return entries.size() == 0; }
  double sup_norm() const;
  double op_norm() const;      // sup over samples of the induced infinity norm
  void check_support() const;  // throws if nonzero outside B_2(0)
  CVec apply(int s, const CVec& u, int grade) const;
};

struct SolveStats {
  int iterations = 0;
  double contraction_ratio = 0;  // geometric mean of successive-change ratios
  double final_change = 0;
};

struct DzSolveOptions {
  double tol_fp = 1e-10;
  int max_iter = 200;
};

/// Solver for D_z U = partial_z U + gamma U on the plane and the unit disc,
/// built on the Cauchy kernel 1/(pi zbar) discretized by exact cell averages
/// and applied by zero-padded FFT convolution.
class CauchySolver {
 public:
  explicit CauchySolver(int M);
  ~CauchySolver();
  CauchySolver(const CauchySolver&) = delete;
  CauchySolver& operator=(const CauchySolver&) = delete;

  const GridLayout& grid() const { return grid_; }
  int size() const { return M_; }
  /// Measured norm bound of convolution against B_2-supported data; the
  /// solver requires kernel_norm * grade * |gamma|_op < 1/2.
  double kernel_norm() const { return kernel_norm_; }

  /// Convolution with the Cauchy kernel: partial_z(convolve(f)) = f for
  /// compactly supported f.
  CMat convolve(const CMat& f) const;

  /// Whole-plane stage: fixed-point iteration for D_z U = Y. Throws
  /// "gamma too large" when the iteration is detected non-contractive.
  CMat solve_plane(const CMat& Y, const GammaField& gamma, int grade, SolveStats* stats = nullptr,
                   const DzSolveOptions& opts = {}, const CMat* init = nullptr) const;

  /// Disc stage: subtracts the anti-holomorphic correction matching the
  /// boundary trace (gamma = 0) or the corrected homogeneous solve
  /// (gamma != 0), returning U with D_z U = Y on the disc, Im U = 0 on its
  /// boundary. Outside the closed disc the correction is continued through
  /// the circle inversion, so downstream right-hand sides stay finite.
  CMat dirichlet_correct(const CMat& u_tilde, const GammaField& gamma, int grade,
                         SolveStats* stats = nullptr, const DzSolveOptions& opts = {}) const;

  CMat solve_disc(const CMat& Y, const GammaField& gamma, int grade, SolveStats* stats = nullptr,
                  const DzSolveOptions& opts = {}) const;

  /// Bicubic samples of one channel along the boundary circle (4M points).
  Vec boundary_trace(const Vec& channel_values) const;

  /// Smooth radial window: 1 on |z| <= r0, 0 from r1 on.
  Vec window(double r0, double r1) const;
  Vec disc_mask(double radius = 1.0) const;

 private:
  struct Fft;
  int M_;
  GridLayout grid_;
  double kernel_norm_ = 0;
  std::unique_ptr<Fft> fft_;
};

/// The chained potential construction on a conformal disc immersion sampled
/// over the solver grid, plus the residuals of the coupled systems the
/// potentials satisfy and the pointwise recovery of H from them.
struct PotentialReport {
  int grid_size = 0;
  SolveStats stats_l, stats_s, stats_r;
  double sys_rs_first = 0;    // sup residual, first coupled equation
  double sys_rs_second = 0;   // sup residual, second coupled equation
  double lap_re_r = 0;        // laplace-form residual for Re R
  double lap_re_s = 0;        // laplace-form residual for Re S
  double h_recovery_sup = 0;  // sup |recovered H - geometric H|
  double gamma_sup = 0;
};

PotentialReport build_potentials(const Immersion& imm, const CauchySolver& solver,
                                 const DzSolveOptions& opts = {});

/// gamma from the ambient connection along the immersion, windowed into B_2.
GammaField connection_gamma(const Immersion& imm, const CauchySolver& solver);

}  // namespace willmore
