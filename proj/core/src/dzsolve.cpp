#include "willmore/dzsolve.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

#include "willmore/exterior.hpp"

namespace willmore {

namespace {

const double PI = 3.14159265358979323846;

// double antiderivative of x/(x^2+y^2); cell integrals by corner evaluation
double corner_potential(double x, double y) {
  if (x == 0 && y == 0) return 0;
  double r2 = x * x + y * y;
  double at = x == 0 ? 0.0 : x * std::atan(y / x);
  return 0.5 * (y * std::log(r2) - 2 * y + 2 * at);
}

// exact integral of x/(x^2+y^2) over the cell centered at (x0, y0)
double cell_integral_x(double x0, double y0, double h) {
  if (std::abs(x0) < h / 4) return 0.0;  // odd in x across the cell
  double x1 = x0 - h / 2, x2 = x0 + h / 2, y1 = y0 - h / 2, y2 = y0 + h / 2;
  return corner_potential(x2, y2) - corner_potential(x1, y2) - corner_potential(x2, y1) +
         corner_potential(x1, y1);
}

std::mutex fftw_mutex;

}  // namespace

double GammaField::sup_norm() const {
  if (empty()) return 0;
  return entries.cwiseAbs().maxCoeff();
}

double GammaField::op_norm() const {
  if (empty()) return 0;
  double worst = 0;
  for (int s = 0; s < entries.rows(); ++s)
    for (int j = 0; j < m; ++j) {
      double row = 0;
      for (int k = 0; k < m; ++k) row += std::abs(entries(s, j * m + k));
      worst = std::max(worst, row);
    }
  return worst;
}

void GammaField::check_support() const {
  if (empty()) return;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      double r2 = grid.x(i) * grid.x(i) + grid.y(j) * grid.y(j);
      if (r2 > 4.0 + 1e-12 && entries.row(grid.index(i, j)).cwiseAbs().maxCoeff() > 0)
        throw dzsolve_error("gamma support leaves B_2(0)");
    }
}

CVec GammaField::apply(int s, const CVec& u, int grade) const {
  if (empty()) return CVec::Zero(u.size());
  Eigen::MatrixXcd A(m, m);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) A(j, k) = entries(s, j * m + k);
  if (grade == 1) return A * u;
  return derivation_apply<cplx>(A, u, grade, m);
}

struct CauchySolver::Fft {
  int P;                    // padded size
  fftw_plan fwd, bwd;
  fftw_complex* buf;
  std::vector<cplx> kernel_hat;

  explicit Fft(int M, double h) : P(2 * M) {
    std::lock_guard<std::mutex> lock(fftw_mutex);
    buf = fftw_alloc_complex(static_cast<size_t>(P) * P);
    fwd = fftw_plan_dft_2d(P, P, buf, buf, FFTW_FORWARD, FFTW_MEASURE);
    bwd = fftw_plan_dft_2d(P, P, buf, buf, FFTW_BACKWARD, FFTW_MEASURE);

    // kernel 1/(pi zbar) = (x + i y)/(pi |z|^2), sampled by exact cell
    // averages so the singular cell integrates to zero analytically
    std::vector<cplx> k(static_cast<size_t>(P) * P, cplx(0, 0));
    for (int dj = -(M - 1); dj <= M - 1; ++dj)
      for (int di = -(M - 1); di <= M - 1; ++di) {
        double x = di * h, y = dj * h;
        double ix = cell_integral_x(x, y, h);
        double iy = cell_integral_x(y, x, h);  // y-part by symmetry
        cplx avg = cplx(ix, iy) / (PI * h * h);
        int ii = (di + P) % P, jj = (dj + P) % P;
        k[static_cast<size_t>(jj) * P + ii] = avg;
      }
    for (size_t q = 0; q < k.size(); ++q) {
      buf[q][0] = k[q].real();
      buf[q][1] = k[q].imag();
    }
    fftw_execute(fwd);
    kernel_hat.resize(k.size());
    for (size_t q = 0; q < k.size(); ++q) kernel_hat[q] = cplx(buf[q][0], buf[q][1]);
  }

  ~Fft() {
    std::lock_guard<std::mutex> lock(fftw_mutex);
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(buf);
  }

  // zero-padded linear convolution of one channel with the kernel, times h^2
  void convolve_channel(const GridLayout& g, const CVec& in, CVec& out, double h) {
    const int M = g.nx;
    std::fill(&buf[0][0], &buf[0][0] + 2 * static_cast<size_t>(P) * P, 0.0);
    for (int j = 0; j < M; ++j)
      for (int i = 0; i < M; ++i) {
        cplx v = in(g.index(i, j));
        buf[static_cast<size_t>(j) * P + i][0] = v.real();
        buf[static_cast<size_t>(j) * P + i][1] = v.imag();
      }
    fftw_execute(fwd);
    const double scale = h * h / (static_cast<double>(P) * P);
    for (size_t q = 0; q < kernel_hat.size(); ++q) {
      cplx v = cplx(buf[q][0], buf[q][1]) * kernel_hat[q] * scale;
      buf[q][0] = v.real();
      buf[q][1] = v.imag();
    }
    fftw_execute(bwd);
    out.resize(in.size());
    for (int j = 0; j < M; ++j)
      for (int i = 0; i < M; ++i) {
        auto& c = buf[static_cast<size_t>(j) * P + i];
        out(g.index(i, j)) = cplx(c[0], c[1]);
      }
  }
};

CauchySolver::CauchySolver(int M) : M_(M), grid_(GridLayout::square(M, 2.0)) {
  if (M < 16) throw dzsolve_error("solver grid too small");
  const double h = grid_.dx();
  fft_ = std::make_unique<Fft>(M, h);
  // integral of |K| over B_2, the worst-case (centered) convolution bound
  double acc = 0;
  for (int dj = -(M - 1); dj <= M - 1; ++dj)
    for (int di = -(M - 1); di <= M - 1; ++di) {
      double x = di * h, y = dj * h;
      if (x * x + y * y > 4.0) continue;
      acc += std::abs(cplx(cell_integral_x(x, y, h), cell_integral_x(y, x, h)) / PI);
    }
  kernel_norm_ = acc;
}

CauchySolver::~CauchySolver() = default;

CMat CauchySolver::convolve(const CMat& f) const {
  if (f.rows() != grid_.samples()) throw dzsolve_error("field size does not match solver grid");
  CMat out(f.rows(), f.cols());
  CVec tmp;
  for (int c = 0; c < f.cols(); ++c) {
    fft_->convolve_channel(grid_, f.col(c), tmp, grid_.dx());
    out.col(c) = tmp;
  }
  return out;
}

Vec CauchySolver::window(double r0, double r1) const {
  Vec w(grid_.samples());
  for (int j = 0; j < grid_.ny; ++j)
    for (int i = 0; i < grid_.nx; ++i) {
      double r = std::hypot(grid_.x(i), grid_.y(j));
      double t = (r - r0) / (r1 - r0);
      double v = t <= 0 ? 1.0 : (t >= 1 ? 0.0 : 1.0 - t * t * t * (10 - 15 * t + 6 * t * t));
      w(grid_.index(i, j)) = v;
    }
  return w;
}

Vec CauchySolver::disc_mask(double radius) const {
  Vec w(grid_.samples());
  for (int j = 0; j < grid_.ny; ++j)
    for (int i = 0; i < grid_.nx; ++i)
      w(grid_.index(i, j)) =
          std::hypot(grid_.x(i), grid_.y(j)) <= radius ? 1.0 : 0.0;
  return w;
}

CMat CauchySolver::solve_plane(const CMat& Y, const GammaField& gamma, int grade,
                               SolveStats* stats, const DzSolveOptions& opts,
                               const CMat* init) const {
  gamma.check_support();
  CMat base = convolve(Y);
  if (gamma.empty()) {
    if (stats) *stats = {1, 0.0, 0.0};
    return base;
  }
  if (kernel_norm_ * grade * gamma.op_norm() >= 0.5)
    throw dzsolve_error("gamma too large: contraction bound exceeds 1/2");
  CMat u = init ? *init : base;
  double prev_change = -1;
  int rising = 0;
  double ratio_acc = 0;
  int ratio_cnt = 0;
  for (int it = 0; it < opts.max_iter; ++it) {
    CMat gu(u.rows(), u.cols());
    for (int s = 0; s < u.rows(); ++s) gu.row(s) = gamma.apply(s, u.row(s), grade);
    CMat next = base - convolve(gu);
    double change = (next - u).cwiseAbs().maxCoeff();
    double scale = std::max(1.0, next.cwiseAbs().maxCoeff());
    if (prev_change > 0) {
      double ratio = change / prev_change;
      ratio_acc += std::log(std::max(ratio, 1e-300));
      ++ratio_cnt;
      rising = ratio >= 1.0 ? rising + 1 : 0;
      if (rising >= 3) throw dzsolve_error("gamma too large: fixed point diverges");
    }
    prev_change = change;
    u = next;
    if (change < opts.tol_fp * scale) {
      if (stats) *stats = {it + 2, ratio_cnt ? std::exp(ratio_acc / ratio_cnt) : 0.0, change};
      return u;
    }
  }
  throw dzsolve_error("dz fixed point did not converge");
}

Vec CauchySolver::boundary_trace(const Vec& channel_values) const {
  const int nb = 4 * M_;
  Vec out(nb);
  const double h = grid_.dx();
  auto catmull = [](double t, double f0, double f1, double f2, double f3) {
    return f1 + 0.5 * t * (f2 - f0 + t * (2 * f0 - 5 * f1 + 4 * f2 - f3 +
                                          t * (3 * (f1 - f2) + f3 - f0)));
  };
  for (int k = 0; k < nb; ++k) {
    double th = 2 * PI * k / nb;
    double x = std::cos(th), y = std::sin(th);
    double fi = (x - grid_.x0) / h, fj = (y - grid_.y0) / h;
    int i0 = static_cast<int>(std::floor(fi)), j0 = static_cast<int>(std::floor(fj));
    double tx = fi - i0, ty = fj - j0;
    double col[4];
    for (int b = -1; b <= 2; ++b) {
      double row[4];
      for (int a = -1; a <= 2; ++a) row[a + 1] = channel_values(grid_.index(i0 + a, j0 + b));
      col[b + 1] = catmull(tx, row[0], row[1], row[2], row[3]);
    }
    out(k) = catmull(ty, col[0], col[1], col[2], col[3]);
  }
  return out;
}

namespace {

// anti-holomorphic power series from the nonpositive-frequency part of the
// boundary data; evaluated through the circle inversion outside the disc
CVec antiholomorphic_extension(const GridLayout& g, const Vec& boundary) {
  const int nb = static_cast<int>(boundary.size());
  // direct DFT of the real boundary sequence
  std::vector<cplx> chat(nb / 2 + 1, cplx(0, 0));
  for (int f = 0; f <= nb / 2; ++f) {
    cplx acc = 0;
    for (int k = 0; k < nb; ++k)
      acc += boundary(k) * std::exp(cplx(0, -2.0 * PI * f * k / nb));
    chat[f] = acc / double(nb);
  }
  const int nmax = nb / 2 - 1;
  std::vector<cplx> a(nmax + 1);
  a[0] = cplx(0, 1) * chat[0].real();  // real additive constant fixed to zero
  for (int n = 1; n <= nmax; ++n) a[n] = cplx(0, 2) * std::conj(chat[n]);

  CVec out(g.samples());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      cplx z(g.x(i), g.y(j));
      double r = std::abs(z);
      cplx zb = std::conj(z);
      if (r > 1.0) zb = zb / (r * r);  // inversion keeps the series summable
      cplx acc = a[nmax];
      for (int n = nmax - 1; n >= 0; --n) acc = acc * zb + a[n];
      out(g.index(i, j)) = acc;
    }
  return out;
}

}  // namespace

CMat CauchySolver::dirichlet_correct(const CMat& u_tilde, const GammaField& gamma, int grade,
                                     SolveStats* stats, const DzSolveOptions& opts) const {
  const int nch = static_cast<int>(u_tilde.cols());
  CMat V(u_tilde.rows(), nch);
  std::vector<Vec> traces(nch);
  for (int c = 0; c < nch; ++c) {
    traces[c] = boundary_trace(Vec(u_tilde.col(c).imag()));
    V.col(c) = antiholomorphic_extension(grid_, traces[c]);
  }
  if (gamma.empty()) {
    if (stats) *stats = {1, 0.0, 0.0};
    return u_tilde - V;
  }

  // homogeneous disc problem: dz V = -gamma V inside, Im V on the boundary
  // prescribed; same contraction scheme with the anti-holomorphic correction
  // re-fitted each sweep
  Vec disc = disc_mask();
  double prev_change = -1;
  int rising = 0;
  double ratio_acc = 0;
  int ratio_cnt = 0;
  for (int it = 0; it < opts.max_iter; ++it) {
    CMat gv(V.rows(), nch);
    for (int s = 0; s < V.rows(); ++s)
      gv.row(s) = disc(s) * gamma.apply(s, V.row(s), grade);
    CMat P = convolve(CMat(-gv));
    CMat next(V.rows(), nch);
    for (int c = 0; c < nch; ++c) {
      Vec trace_p = boundary_trace(Vec(P.col(c).imag()));
      next.col(c) = P.col(c) + antiholomorphic_extension(grid_, Vec(traces[c] - trace_p));
    }
    double change = (next - V).cwiseAbs().maxCoeff();
    double scale = std::max(1.0, next.cwiseAbs().maxCoeff());
    if (prev_change > 0) {
      double ratio = change / prev_change;
      ratio_acc += std::log(std::max(ratio, 1e-300));
      ++ratio_cnt;
      rising = ratio >= 1.0 ? rising + 1 : 0;
      if (rising >= 3) throw dzsolve_error("gamma too large: boundary correction diverges");
    }
    prev_change = change;
    V = next;
    if (change < opts.tol_fp * scale) {
      if (stats) *stats = {it + 2, ratio_cnt ? std::exp(ratio_acc / ratio_cnt) : 0.0, change};
      return u_tilde - V;
    }
  }
  throw dzsolve_error("dirichlet correction did not converge");
}

CMat CauchySolver::solve_disc(const CMat& Y, const GammaField& gamma, int grade,
                              SolveStats* stats, const DzSolveOptions& opts) const {
  SolveStats plane_stats;
  CMat u_tilde = solve_plane(Y, gamma, grade, &plane_stats, opts);
  SolveStats disc_stats;
  CMat u = dirichlet_correct(u_tilde, gamma, grade, &disc_stats, opts);
  if (stats) {
    stats->iterations = plane_stats.iterations + disc_stats.iterations;
    stats->contraction_ratio = std::max(plane_stats.contraction_ratio,
                                        disc_stats.contraction_ratio);
    stats->final_change = std::max(plane_stats.final_change, disc_stats.final_change);
  }
  return u;
}

GammaField connection_gamma(const Immersion& imm, const CauchySolver& solver) {
  GammaField g;
  g.grid = solver.grid();
  g.m = imm.m;
  if (imm.ambient->flat()) return g;
  const int ns = solver.grid().samples();
  Vec win = solver.window(1.3, 1.9);
  g.entries = CMat::Zero(ns, imm.m * imm.m);
  const cplx I(0, 1);
  for (int s = 0; s < ns; ++s) {
    if (win(s) == 0) continue;
    Christoffel G = imm.ambient->christoffel(imm.phi.row(s));
    CVec dzphi = 0.5 * (imm.d1[0].row(s).transpose().cast<cplx>() -
                        I * imm.d1[1].row(s).transpose().cast<cplx>());
    for (int j = 0; j < imm.m; ++j)
      for (int k = 0; k < imm.m; ++k) {
        cplx acc = 0;
        for (int l = 0; l < imm.m; ++l) acc += G(j, k, l) * dzphi(l);
        g.entries(s, j * imm.m + k) = win(s) * acc;
      }
  }
  return g;
}

namespace {

// wedge of two complex vectors as grade-2 coefficients
CVec wedge_vectors(const CVec& a, const CVec& b, const BladeTable& t) {
  const int m = t.m;
  CVec out = CVec::Zero(t.count(2));
  for (int k = 0; k < m; ++k)
    for (int l = k + 1; l < m; ++l)
      out(t.rank_of_mask[(1u << k) | (1u << l)]) = a(k) * b(l) - a(l) * b(k);
  return out;
}

// covariant coordinate derivatives of a multivector coefficient field on the
// solver grid: grid stencils plus the real connection derivation
Mat covariant_d_mv(const Immersion& imm, const GammaField&, const Mat& field, int grade,
                   int axis) {
  Mat out = axis == 0 ? d_x(imm.grid, field) : d_y(imm.grid, field);
  if (imm.ambient->flat()) return out;
  for (int s = 0; s < field.rows(); ++s) {
    Christoffel G = imm.ambient->christoffel(imm.phi.row(s));
    Mat A(imm.m, imm.m);
    for (int l = 0; l < imm.m; ++l)
      for (int k = 0; k < imm.m; ++k) {
        double acc = 0;
        for (int mu = 0; mu < imm.m; ++mu) acc += G(l, mu, k) * imm.d1[axis](s, mu);
        A(l, k) = acc;
      }
    out.row(s) += derivation_apply<double>(A, field.row(s), grade, imm.m);
  }
  return out;
}

}  // namespace

PotentialReport build_potentials(const Immersion& imm, const CauchySolver& solver,
                                 const DzSolveOptions& opts) {
  if (imm.kind != DomainKind::Disc) throw dzsolve_error("potentials need a disc immersion");
  if (!imm.conformal) throw dzsolve_error("potentials need a conformal immersion");
  if (imm.grid.nx != solver.size() || std::abs(imm.grid.x1 - 2.0) > 1e-12)
    throw dzsolve_error("immersion must be sampled on the solver grid");

  const int m = imm.m;
  const int ns = imm.samples();
  const cplx I(0, 1);
  const BladeTable& bt = BladeTable::get(m);
  GeometryField gf = geometry(imm);
  auto co = complex_objects(imm, gf);

  PotentialReport rep;
  rep.grid_size = solver.size();

  GammaField gamma = connection_gamma(imm, solver);
  rep.gamma_sup = gamma.sup_norm();
  GammaField none;
  none.grid = solver.grid();
  none.m = m;

  Vec win = solver.window(1.05, 1.6);

  // (i) D_z L = Y on the disc, Im L = 0 on its boundary
  CMat Y = conservation_vector_field(imm, gf);
  for (int s = 0; s < ns; ++s) Y.row(s) *= win(s);
  CMat L = solver.solve_disc(Y, gamma, 1, &rep.stats_l, opts);

  // (ii) partial_z S = <dz phi, conj L>
  CMat rhs_s(ns, 1);
  for (int s = 0; s < ns; ++s)
    rhs_s(s, 0) = win(s) * gf.cdot(s, co.dz_phi.row(s), L.row(s).conjugate());
  CMat S = solver.solve_disc(rhs_s, none, 1, &rep.stats_s, opts);

  // (iii) D_z R = dz phi ^ conj L - 2 i dz phi ^ H
  CMat rhs_r(ns, bt.count(2));
  for (int s = 0; s < ns; ++s) {
    CVec dz = co.dz_phi.row(s);
    CVec term = CVec(L.row(s).conjugate()) - 2.0 * I * CVec(gf.Hvec.row(s).cast<cplx>());
    rhs_r.row(s) = win(s) * wedge_vectors(dz, term, bt);
  }
  CMat R = solver.solve_disc(rhs_r, gamma, 2, &rep.stats_r, opts);

  // ---- residuals of the coupled systems -------------------------------
  Vec mask = solver.disc_mask(0.85);

  // D_z R and partial_z S from the solved fields (one more stencil level)
  CMat DzR = partial_z(imm.grid, R);
  if (!gamma.empty())
    for (int s = 0; s < ns; ++s) DzR.row(s) += gamma.apply(s, R.row(s), 2);
  CMat dzS = partial_z(imm.grid, S);

  double r1 = 0, r2 = 0, hrec = 0;
  const double sgn = ((m + 1) % 2) ? -1.0 : 1.0;  // (-1)^{m+1}
  for (int s = 0; s < ns; ++s) {
    if (mask(s) == 0) continue;
    const InnerProduct ip = gf.flat ? InnerProduct(m) : InnerProduct(gf.hmat[s]);
    CMultiVector dzr(m, 2);
    dzr.coeffs = DzR.row(s);
    MultiVector n(m, m - 2);
    n.coeffs = gf.gauss_n.row(s);
    CMultiVector nc = complexify(n, MultiVector(m, m - 2));
    CMultiVector star_n = hodge_star(nc, ip);

    // first equation: D_z R = sgn star(n • i D_z R) + (i dz S) star n
    CMultiVector bullet_term = hodge_star(bullet(nc, dzr * I, ip), ip);
    CVec rhs1 = sgn * bullet_term.coeffs + I * dzS(s, 0) * star_n.coeffs;
    r1 = std::max(r1, (CVec(DzR.row(s).transpose()) - rhs1).norm());

    // second equation: partial_z S = <-i D_z R, star n>
    cplx rhs2 = inner(dzr * (-I), star_n, ip);
    r2 = std::max(r2, std::abs(dzS(s, 0) - rhs2));

    // pointwise H recovery; the tangential Im L term carries the factor two
    // its defining substitution produces
    CMultiVector dzbar_phi_v = CMultiVector::vector(m, co.dzbar_phi.row(s));
    CVec hook = interior_mult(dzr, dzbar_phi_v, ip).coeffs;
    double e2l = std::exp(2 * gf.lambda(s));
    Vec imL = L.row(s).imag();
    cplx pl = gf.cdot(s, co.dz_phi.row(s), imL.cast<cplx>());
    CVec term3 = dzS(s, 0) * I * CVec(co.dzbar_phi.row(s));
    CVec term4 = pl * CVec(co.dzbar_phi.row(s));
    Vec recovered = (-hook.imag() - 0.5 * e2l * imL - term3.real() + 2.0 * term4.real()) / e2l;
    hrec = std::max(hrec, (recovered - Vec(gf.Hvec.row(s))).norm());
  }
  rep.sys_rs_first = r1;
  rep.sys_rs_second = r2;
  rep.h_recovery_sup = hrec;

  // ---- laplace-form residuals ------------------------------------------
  Mat ReR = R.real(), ImR = R.imag();
  Mat ReS = S.real(), ImS = S.imag();
  Mat starn(ns, bt.count(2));
  for (int s = 0; s < ns; ++s) {
    const InnerProduct ip = gf.flat ? InnerProduct(m) : InnerProduct(gf.hmat[s]);
    MultiVector n(m, m - 2);
    n.coeffs = gf.gauss_n.row(s);
    starn.row(s) = hodge_star(n, ip).coeffs;
  }

  auto Dmv = [&](const Mat& f, int grade, int axis) {
    return covariant_d_mv(imm, gamma, f, grade, axis);
  };
  Mat D1_ReR = Dmv(ReR, 2, 0), D2_ReR = Dmv(ReR, 2, 1);
  Mat D1_ImR = Dmv(ImR, 2, 0), D2_ImR = Dmv(ImR, 2, 1);
  Mat lap_ReR = Dmv(D1_ReR, 2, 0) + Dmv(D2_ReR, 2, 1);
  Mat lap_ImR = Dmv(D1_ImR, 2, 0) + Dmv(D2_ImR, 2, 1);
  Mat D1_n = Dmv(gf.gauss_n, m - 2, 0), D2_n = Dmv(gf.gauss_n, m - 2, 1);
  Mat D1_starn = Dmv(starn, 2, 0), D2_starn = Dmv(starn, 2, 1);
  Mat d1_ReS = d_x(imm.grid, ReS), d2_ReS = d_y(imm.grid, ReS);
  Mat d1_ImS = d_x(imm.grid, ImS), d2_ImS = d_y(imm.grid, ImS);
  Mat lap_S_re = d_xx(imm.grid, ReS) + d_yy(imm.grid, ReS);
  Mat lap_S_im = d_xx(imm.grid, ImS) + d_yy(imm.grid, ImS);

  // scalar products of grade-2 coefficient rows under the chart metric
  auto ip_at = [&](int s) { return gf.flat ? InnerProduct(m) : InnerProduct(gf.hmat[s]); };
  auto ip2 = [&](int s, const Vec& a, const Vec& b) {
    if (gf.flat) return a.dot(b);
    return (a.transpose() * InnerProduct(gf.hmat[s]).blade_gram(2) * b)(0);
  };
  auto bracket_matrix = [&](int s) {
    Mat B = Mat::Zero(m, m);
    if (gf.flat) return B;
    RiemannTensor rt = imm.ambient->curvature(imm.phi.row(s)).riemann;
    for (int l = 0; l < m; ++l)
      for (int k = 0; k < m; ++k) {
        double acc = 0;
        for (int mu = 0; mu < m; ++mu)
          for (int nu = 0; nu < m; ++nu)
            acc += rt(l, k, mu, nu) * imm.d1[0](s, mu) * imm.d1[1](s, nu);
        B(l, k) = acc;
      }
    return B;
  };

  // divergence fields for the second laplace equation
  Mat p1(ns, 1), p2(ns, 1);
  for (int s = 0; s < ns; ++s) {
    p1(s, 0) = ip2(s, D1_ImR.row(s), starn.row(s));
    p2(s, 0) = ip2(s, D2_ImR.row(s), starn.row(s));
  }
  Mat div_im = d_x(imm.grid, p1) + d_y(imm.grid, p2);

  // nested stencils reach farther; keep them clear of the boundary circle
  Vec lap_mask = solver.disc_mask(std::min(0.8, 1.0 - 8 * imm.grid.dx()));
  const double msgn = (m % 2) ? -1.0 : 1.0;  // (-1)^m
  double lapr = 0, laps = 0;
  for (int s = 0; s < ns; ++s) {
    if (lap_mask(s) == 0) continue;
    const InnerProduct ip = ip_at(s);
    auto mv = [&](const Mat& f, int grade) {
      MultiVector v(m, grade);
      v.coeffs = f.row(s);
      return v;
    };
    Mat B = bracket_matrix(s);
    Vec brk_ReR = derivation_apply<double>(B, Vec(ReR.row(s)), 2, m);
    Vec brk_ImR = derivation_apply<double>(B, Vec(ImR.row(s)), 2, m);

    // first equation: Delta(Re R) = jacobian structure + F~
    MultiVector jac_b = bullet(mv(D2_n, m - 2), mv(D1_ReR, 2), ip);
    jac_b.coeffs -= bullet(mv(D1_n, m - 2), mv(D2_ReR, 2), ip).coeffs;
    Vec jac = msgn * hodge_star(jac_b, ip).coeffs +
              d2_ReS(s, 0) * D1_starn.row(s).transpose() -
              d1_ReS(s, 0) * D2_starn.row(s).transpose();

    MultiVector lap_im_b(m, 2);
    lap_im_b.coeffs = lap_ImR.row(s).transpose() - brk_ReR;
    MultiVector f_b = bullet(mv(gf.gauss_n, m - 2), lap_im_b, ip);
    f_b.coeffs += bullet(mv(D1_n, m - 2), mv(D1_ImR, 2), ip).coeffs;
    f_b.coeffs += bullet(mv(D2_n, m - 2), mv(D2_ImR, 2), ip).coeffs;
    Vec f_tilde = msgn * hodge_star(f_b, ip).coeffs -
                  (lap_S_im(s, 0) * starn.row(s).transpose() +
                   d1_ImS(s, 0) * D1_starn.row(s).transpose() +
                   d2_ImS(s, 0) * D2_starn.row(s).transpose()) -
                  brk_ImR;
    Vec resR = Vec(lap_ReR.row(s)) - jac - f_tilde;
    lapr = std::max(lapr, std::sqrt(std::max(0.0, ip2(s, resR, resR))));

    // second equation: Delta(Re S) = jacobian structure + G~
    double jac2 =
        ip2(s, D1_ReR.row(s), D2_starn.row(s)) - ip2(s, D2_ReR.row(s), D1_starn.row(s));
    double g_tilde = div_im(s, 0) - ip2(s, brk_ReR, starn.row(s));
    laps = std::max(laps, std::abs(lap_S_re(s, 0) - jac2 - g_tilde));
  }
  rep.lap_re_r = lapr;
  rep.lap_re_s = laps;
  return rep;
}

}  // namespace willmore
