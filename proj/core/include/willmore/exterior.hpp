#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

namespace willmore {

using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using cplx = std::complex<double>;

/// Lookup tables for the basis blades of an exterior algebra over an
/// m-dimensional space: every grade-p basis blade is a strictly increasing
/// index tuple, stored as a bitmask, enumerated in lexicographic order.
struct BladeTable {
  int m = 0;
  std::vector<std::vector<unsigned>> blades;  // blades[p][rank] = bitmask
  std::vector<int> rank_of_mask;              // bitmask -> rank within its grade

  static const BladeTable& get(int m);
  int count(int p) const { return p < 0 || p > m ? 0 : static_cast<int>(blades[p].size()); }
};

int wedge_sign(unsigned a, unsigned b);  // 0 if blades overlap, else +/-1

/// Inner product on the underlying m-dimensional space, with orientation.
/// Induces the blade inner product <e_I, e_J> = det gram[I,J].
class InnerProduct {
 public:
  explicit InnerProduct(int m);  // Euclidean, positive orientation
  InnerProduct(Mat gram, int orientation = +1);

  int dim() const { return m_; }
  int orientation() const { return orientation_; }
  const Mat& gram() const { return gram_; }
  bool orthonormal() const { return orthonormal_; }
  double det() const { return det_; }

  // gram matrix of the induced inner product on grade-p blades
  const Mat& blade_gram(int p) const;
  const Eigen::LLT<Mat>& blade_llt(int p) const;

 private:
  int m_;
  int orientation_;
  Mat gram_;
  bool orthonormal_;
  double det_;
  mutable std::vector<Mat> blade_gram_;
  mutable std::vector<Eigen::LLT<Mat>> blade_llt_;
  mutable std::vector<bool> blade_ready_;
};

/// Homogeneous element of the exterior algebra: fixed grade, dense
/// coefficients over the C(m,p) basis blades. Scalar is double or
/// complex<double>; complex coefficients extend all operations bilinearly.
template <class S>
struct MultiVectorT {
  using Coeffs = Eigen::Matrix<S, Eigen::Dynamic, 1>;

  int dim = 0;
  int grade = 0;
  Coeffs coeffs;  // size C(dim, grade); empty when grade > dim (the zero element)

  MultiVectorT() = default;
  MultiVectorT(int m, int p)
      : dim(m), grade(p), coeffs(Coeffs::Zero(BladeTable::get(m).count(p))) {}

  static MultiVectorT scalar(int m, S value) {
    MultiVectorT r(m, 0);
    r.coeffs(0) = value;
    return r;
  }
  static MultiVectorT vector(int m, const Eigen::Matrix<S, Eigen::Dynamic, 1>& v) {
    MultiVectorT r(m, 1);
    r.coeffs = v;
    return r;
  }
  static MultiVectorT basis(int m, std::initializer_list<int> indices);

  bool zero_grade_range() const { return grade < 0 || grade > dim; }
  double norm() const { return coeffs.size() == 0 ? 0.0 : coeffs.norm(); }

  MultiVectorT& operator+=(const MultiVectorT& o) {
    coeffs += o.coeffs;
    return *this;
  }
  MultiVectorT operator-(const MultiVectorT& o) const {
    MultiVectorT r = *this;
    r.coeffs -= o.coeffs;
    return r;
  }
  MultiVectorT operator*(S s) const {
    MultiVectorT r = *this;
    r.coeffs *= s;
    return r;
  }
};

using MultiVector = MultiVectorT<double>;
using CMultiVector = MultiVectorT<cplx>;

template <class S>
MultiVectorT<S> wedge(const MultiVectorT<S>& a, const MultiVectorT<S>& b);

template <class S>
S inner(const MultiVectorT<S>& a, const MultiVectorT<S>& b, const InnerProduct& ip);

/// Hodge star: the (m-p)-vector with  beta ^ star(a) = <beta,a> vol  for all
/// grade-p beta, vol the unit positively oriented m-vector.
template <class S>
MultiVectorT<S> hodge_star(const MultiVectorT<S>& a, const InnerProduct& ip);

/// Interior multiplication a ⌞ b: adjoint of wedge, <a⌞b, c> = <a, b^c>.
/// Requires a.grade >= b.grade.
template <class S>
MultiVectorT<S> interior_mult(const MultiVectorT<S>& a, const MultiVectorT<S>& b,
                              const InnerProduct& ip);

/// Contraction a • b of grade p+q-2: equals a ⌞ b for grade-1 b and obeys
/// a•(b^c) = (a•b)^c + (-1)^{rs} (a•c)^b with r = grade(b), s = grade(c).
template <class S>
MultiVectorT<S> bullet(const MultiVectorT<S>& a, const MultiVectorT<S>& b,
                       const InnerProduct& ip);

/// Extension of an endomorphism A of the base space to grade-p coefficients
/// as a derivation over wedge factors: A(a ^ b) = (A a) ^ b + a ^ (A b).
/// Coefficients in, coefficients out, for the lexicographic blade basis.
template <class S>
Eigen::Matrix<S, Eigen::Dynamic, 1> derivation_apply(
    const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& A,
    const Eigen::Matrix<S, Eigen::Dynamic, 1>& coeffs, int grade, int m);

// real/imaginary parts of a complex multivector
MultiVector real(const CMultiVector& a);
MultiVector imag(const CMultiVector& a);
CMultiVector complexify(const MultiVector& re, const MultiVector& im);

struct exterior_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace willmore
