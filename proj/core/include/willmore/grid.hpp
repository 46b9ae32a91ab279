#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

namespace willmore {

struct grid_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Uniform tensor-product sample grid. Two edge policies:
///  - OneSided: plain rectangle (disc patches live on [-1,1]^2); stencils
///    switch to one-sided forms of matching order at the edges.
///  - SpherePole: x is the polar angle on (0,pi) with cell-centered rows and
///    ghost samples reflected through the poles, y is periodic azimuth.
///    Reflection maps f(-theta, phi) = f(theta, phi + pi).
struct GridLayout {
  enum class Edge { OneSided, SpherePole };

  int nx = 0, ny = 0;
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  Edge edge = Edge::OneSided;

  static GridLayout square(int n, double half_width = 1.0) {
    GridLayout g;
    g.nx = g.ny = n;
    g.x0 = g.y0 = -half_width;
    g.x1 = g.y1 = half_width;
    g.edge = Edge::OneSided;
    return g;
  }
  // cell-centered latitude rows, full periodic longitude
  static GridLayout sphere(int n_theta, int n_phi) {
    if (n_phi % 2) throw grid_error("sphere grid needs even n_phi for pole reflection");
    GridLayout g;
    g.nx = n_theta;
    g.ny = n_phi;
    g.x0 = 0;
    g.x1 = 3.14159265358979323846;
    g.y0 = 0;
    g.y1 = 2 * 3.14159265358979323846;
    g.edge = Edge::SpherePole;
    return g;
  }

  int samples() const { return nx * ny; }
  double dx() const {
    return edge == Edge::SpherePole ? (x1 - x0) / nx : (x1 - x0) / (nx - 1);
  }
  double dy() const {
    return edge == Edge::SpherePole ? (y1 - y0) / ny : (y1 - y0) / (ny - 1);
  }
  double x(int i) const {
    return edge == Edge::SpherePole ? x0 + (i + 0.5) * dx() : x0 + i * dx();
  }
  double y(int j) const { return y0 + j * dy(); }
  int index(int i, int j) const { return j * nx + i; }

  // resolve a possibly out-of-range sample index to a stored one
  int resolve(int i, int j) const;
  bool in_range(int i, int j) const { return i >= 0 && i < nx && j >= 0 && j < ny; }
};

using Grid = GridLayout;

/// First derivative along x of a per-sample field (rows = samples, one column
/// per channel). 4th-order centered stencils; one-sided closures of the same
/// order on OneSided grids.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d_x(
    const GridLayout& g, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& f);
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d_y(
    const GridLayout& g, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& f);

/// Pure second derivatives; order 2 (default) or 4.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d_xx(
    const GridLayout& g, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& f,
    int order = 2);
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d_yy(
    const GridLayout& g, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& f,
    int order = 2);

/// Mixed derivative as the composition of the two first-derivative stencils.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d_xy(
    const GridLayout& g, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& f) {
  return d_x(g, d_y(g, f));
}

}  // namespace willmore
