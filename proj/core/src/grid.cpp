#include "willmore/grid.hpp"

namespace willmore {

int GridLayout::resolve(int i, int j) const {
  if (edge == Edge::OneSided) {
    if (!in_range(i, j)) throw grid_error("sample index out of range on one-sided grid");
    return index(i, j);
  }
  // periodic azimuth
  j = ((j % ny) + ny) % ny;
  // pole reflection: rows continue through theta = 0 and theta = pi with a
  // half-turn in phi
  while (i < 0 || i >= nx) {
    if (i < 0) {
      i = -1 - i;
      j = (j + ny / 2) % ny;
    } else {
      i = 2 * nx - 1 - i;
      j = (j + ny / 2) % ny;
    }
  }
  return index(i, j);
}

namespace {

// offsets/weights tables
constexpr int C1_OFF[5] = {-2, -1, 0, 1, 2};
constexpr double C1_W[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
constexpr int F1_OFF[5] = {0, 1, 2, 3, 4};
constexpr double F1_W[5] = {-25.0 / 12, 4.0, -3.0, 4.0 / 3, -1.0 / 4};
constexpr int F1B_OFF[5] = {-1, 0, 1, 2, 3};
constexpr double F1B_W[5] = {-1.0 / 4, -5.0 / 6, 3.0 / 2, -1.0 / 2, 1.0 / 12};

constexpr int C2_OFF[3] = {-1, 0, 1};
constexpr double C2_W[3] = {1.0, -2.0, 1.0};
constexpr int C2_4_OFF[5] = {-2, -1, 0, 1, 2};
constexpr double C2_4_W[5] = {-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12};
constexpr int F2_OFF[4] = {0, 1, 2, 3};
constexpr double F2_W[4] = {2.0, -5.0, 4.0, -1.0};

template <class Scalar, int N>
void stencil_row(const GridLayout& g, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& f,
                 Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& out, int i, int j,
                 const int (&off)[N], const double (&w)[N], bool along_x, double scale,
                 bool flip = false) {
  const int row = g.index(i, j);
  for (int k = 0; k < N; ++k) {
    int o = flip ? -off[k] : off[k];
    int src = along_x ? g.resolve(i + o, j) : g.resolve(i, j + o);
    double ww = flip ? -w[k] : w[k];
    out.row(row) += (ww * scale) * f.row(src);
  }
}

template <class Scalar, int N>
void stencil_row_sym(const GridLayout& g,
                     const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& f,
                     Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& out, int i, int j,
                     const int (&off)[N], const double (&w)[N], bool along_x, double scale,
                     bool flip = false) {
  const int row = g.index(i, j);
  for (int k = 0; k < N; ++k) {
    int o = flip ? -off[k] : off[k];
    int src = along_x ? g.resolve(i + o, j) : g.resolve(i, j + o);
    out.row(row) += (w[k] * scale) * f.row(src);  // even stencil: no sign flip
  }
}

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> first_derivative(
    const GridLayout& g, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& f,
    bool along_x) {
  using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (f.rows() != g.samples()) throw grid_error("field size does not match grid");
  M out = M::Zero(f.rows(), f.cols());
  const int n = along_x ? g.nx : g.ny;
  const double s = 1.0 / (along_x ? g.dx() : g.dy());
  const bool ghosts = g.edge == GridLayout::Edge::SpherePole && (!along_x || true);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int q = along_x ? i : j;
      if (ghosts || (q >= 2 && q <= n - 3))
        stencil_row(g, f, out, i, j, C1_OFF, C1_W, along_x, s);
      else if (q == 0)
        stencil_row(g, f, out, i, j, F1_OFF, F1_W, along_x, s);
      else if (q == 1)
        stencil_row(g, f, out, i, j, F1B_OFF, F1B_W, along_x, s);
      else if (q == n - 1)
        stencil_row(g, f, out, i, j, F1_OFF, F1_W, along_x, s, true);
      else
        stencil_row(g, f, out, i, j, F1B_OFF, F1B_W, along_x, s, true);
    }
  return out;
}

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> second_derivative(
    const GridLayout& g, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& f,
    bool along_x, int order) {
  using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (f.rows() != g.samples()) throw grid_error("field size does not match grid");
  if (order != 2 && order != 4) throw grid_error("second derivative order must be 2 or 4");
  M out = M::Zero(f.rows(), f.cols());
  const int n = along_x ? g.nx : g.ny;
  const double h = along_x ? g.dx() : g.dy();
  const double s = 1.0 / (h * h);
  const bool ghosts = g.edge == GridLayout::Edge::SpherePole;
  const int reach = order == 4 ? 2 : 1;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int q = along_x ? i : j;
      if (ghosts || (q >= reach && q <= n - 1 - reach)) {
        if (order == 4)
          stencil_row_sym(g, f, out, i, j, C2_4_OFF, C2_4_W, along_x, s);
        else
          stencil_row_sym(g, f, out, i, j, C2_OFF, C2_W, along_x, s);
      } else if (q < reach) {
        stencil_row_sym(g, f, out, i, j, F2_OFF, F2_W, along_x, s);
      } else {
        stencil_row_sym(g, f, out, i, j, F2_OFF, F2_W, along_x, s, true);
      }
    }
  return out;
}

}  // namespace

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d_x(
    const GridLayout& g, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& f) {
  return first_derivative(g, f, true);
}

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d_y(
    const GridLayout& g, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& f) {
  return first_derivative(g, f, false);
}

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d_xx(
    const GridLayout& g, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& f,
    int order) {
  return second_derivative(g, f, true, order);
}

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d_yy(
    const GridLayout& g, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& f,
    int order) {
  return second_derivative(g, f, false, order);
}

template Eigen::MatrixXd d_x(const GridLayout&, const Eigen::MatrixXd&);
template Eigen::MatrixXcd d_x(const GridLayout&, const Eigen::MatrixXcd&);
template Eigen::MatrixXd d_y(const GridLayout&, const Eigen::MatrixXd&);
template Eigen::MatrixXcd d_y(const GridLayout&, const Eigen::MatrixXcd&);
template Eigen::MatrixXd d_xx(const GridLayout&, const Eigen::MatrixXd&, int);
template Eigen::MatrixXcd d_xx(const GridLayout&, const Eigen::MatrixXcd&, int);
template Eigen::MatrixXd d_yy(const GridLayout&, const Eigen::MatrixXd&, int);
template Eigen::MatrixXcd d_yy(const GridLayout&, const Eigen::MatrixXcd&, int);

}  // namespace willmore
