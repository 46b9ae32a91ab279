#include "willmore/exterior.hpp"

#include <bit>
#include <mutex>

namespace willmore {

namespace {

std::vector<unsigned> combinations(int m, int p) {
  std::vector<unsigned> out;
  for (unsigned mask = 0; mask < (1u << m); ++mask)
    if (std::popcount(mask) == p) out.push_back(mask);
  // masks enumerated in increasing numeric order; re-sort to lexicographic
  // order of the index tuples (lowest index most significant)
  std::sort(out.begin(), out.end(), [m](unsigned a, unsigned b) {
    for (int i = 0; i < m; ++i) {
      bool ia = a >> i & 1u, ib = b >> i & 1u;
      if (ia != ib) return ia;
    }
    return false;
  });
  return out;
}

}  // namespace

const BladeTable& BladeTable::get(int m) {
  if (m < 1 || m > 8) throw exterior_error("ambient dimension must be in 1..8");
  static std::vector<BladeTable> tables(9);
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  BladeTable& t = tables[m];
  if (t.m == 0) {
    t.m = m;
    t.blades.resize(m + 1);
    t.rank_of_mask.assign(1u << m, -1);
    for (int p = 0; p <= m; ++p) {
      t.blades[p] = combinations(m, p);
      for (int r = 0; r < static_cast<int>(t.blades[p].size()); ++r)
        t.rank_of_mask[t.blades[p][r]] = r;
    }
  }
  return t;
}

int wedge_sign(unsigned a, unsigned b) {
  if (a & b) return 0;
  // parity of the number of transpositions moving b's indices past a's
  int swaps = 0;
  for (unsigned bb = b; bb; bb &= bb - 1) {
    unsigned bit = bb & ~(bb - 1);
    swaps += std::popcount(a & ~(bit - 1) & ~bit);
  }
  return swaps % 2 ? -1 : +1;
}

InnerProduct::InnerProduct(int m)
    : m_(m), orientation_(+1), gram_(Mat::Identity(m, m)), orthonormal_(true), det_(1.0) {
  blade_gram_.resize(m + 1);
  blade_llt_.resize(m + 1);
  blade_ready_.assign(m + 1, false);
}

InnerProduct::InnerProduct(Mat gram, int orientation)
    : m_(static_cast<int>(gram.rows())), orientation_(orientation), gram_(std::move(gram)) {
  if (gram_.rows() != gram_.cols()) throw exterior_error("gram matrix must be square");
  if ((gram_ - gram_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1 + gram_.cwiseAbs().maxCoeff()))
    throw exterior_error("gram matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(gram_);
  if (es.eigenvalues().minCoeff() <= 0) throw exterior_error("gram matrix must be positive definite");
  det_ = gram_.determinant();
  orthonormal_ = (gram_ - Mat::Identity(m_, m_)).cwiseAbs().maxCoeff() < 1e-14;
  blade_gram_.resize(m_ + 1);
  blade_llt_.resize(m_ + 1);
  blade_ready_.assign(m_ + 1, false);
}

const Mat& InnerProduct::blade_gram(int p) const {
  const BladeTable& t = BladeTable::get(m_);
  if (!blade_ready_[p]) {
    int n = t.count(p);
    Mat G(n, n);
    for (int r = 0; r < n; ++r) {
      std::vector<int> I;
      for (int i = 0; i < m_; ++i)
        if (t.blades[p][r] >> i & 1u) I.push_back(i);
      for (int s = 0; s < n; ++s) {
        std::vector<int> J;
        for (int i = 0; i < m_; ++i)
          if (t.blades[p][s] >> i & 1u) J.push_back(i);
        Mat sub(p, p);
        for (int a = 0; a < p; ++a)
          for (int b = 0; b < p; ++b) sub(a, b) = gram_(I[a], J[b]);
        G(r, s) = p == 0 ? 1.0 : sub.determinant();
      }
    }
    blade_gram_[p] = G;
    blade_llt_[p] = Eigen::LLT<Mat>(G);
    blade_ready_[p] = true;
  }
  return blade_gram_[p];
}

const Eigen::LLT<Mat>& InnerProduct::blade_llt(int p) const {
  blade_gram(p);
  return blade_llt_[p];
}

template <class S>
MultiVectorT<S> MultiVectorT<S>::basis(int m, std::initializer_list<int> indices) {
  unsigned mask = 0;
  int sign = 1;
  for (int i : indices) {
    if (i < 0 || i >= m) throw exterior_error("basis index out of range");
    unsigned bit = 1u << i;
    if (mask & bit) return MultiVectorT(m, static_cast<int>(indices.size()));  // repeated index -> 0
    sign *= wedge_sign(mask, bit);
    mask |= bit;
  }
  MultiVectorT r(m, static_cast<int>(indices.size()));
  r.coeffs(BladeTable::get(m).rank_of_mask[mask]) = static_cast<S>(sign);
  return r;
}

template <class S>
MultiVectorT<S> wedge(const MultiVectorT<S>& a, const MultiVectorT<S>& b) {
  if (a.dim != b.dim) throw exterior_error("wedge: dimension mismatch");
  const BladeTable& t = BladeTable::get(a.dim);
  MultiVectorT<S> r(a.dim, a.grade + b.grade);
  if (r.zero_grade_range() || r.coeffs.size() == 0) return r;
  for (int i = 0; i < a.coeffs.size(); ++i) {
    if (a.coeffs(i) == S(0)) continue;
    unsigned ma = t.blades[a.grade][i];
    for (int j = 0; j < b.coeffs.size(); ++j) {
      if (b.coeffs(j) == S(0)) continue;
      unsigned mb = t.blades[b.grade][j];
      int s = wedge_sign(ma, mb);
      if (s) r.coeffs(t.rank_of_mask[ma | mb]) += static_cast<double>(s) * a.coeffs(i) * b.coeffs(j);
    }
  }
  return r;
}

namespace {

// bilinear (non-conjugating) application of a real symmetric matrix
template <class S>
Eigen::Matrix<S, Eigen::Dynamic, 1> apply_real(const Mat& G,
                                               const Eigen::Matrix<S, Eigen::Dynamic, 1>& v);

template <>
Eigen::Matrix<double, Eigen::Dynamic, 1> apply_real(const Mat& G, const Vec& v) {
  return G * v;
}

template <>
Eigen::Matrix<cplx, Eigen::Dynamic, 1> apply_real(const Mat& G, const CVec& v) {
  CVec r(v.size());
  r.real() = G * v.real().eval();
  r.imag() = G * v.imag().eval();
  return r;
}

template <class S>
Eigen::Matrix<S, Eigen::Dynamic, 1> solve_real(const Eigen::LLT<Mat>& llt,
                                               const Eigen::Matrix<S, Eigen::Dynamic, 1>& v);

template <>
Eigen::Matrix<double, Eigen::Dynamic, 1> solve_real(const Eigen::LLT<Mat>& llt, const Vec& v) {
  return llt.solve(v);
}

template <>
Eigen::Matrix<cplx, Eigen::Dynamic, 1> solve_real(const Eigen::LLT<Mat>& llt, const CVec& v) {
  CVec r(v.size());
  r.real() = llt.solve(v.real().eval());
  r.imag() = llt.solve(v.imag().eval());
  return r;
}

}  // namespace

template <class S>
S inner(const MultiVectorT<S>& a, const MultiVectorT<S>& b, const InnerProduct& ip) {
  if (a.dim != b.dim || a.dim != ip.dim()) throw exterior_error("inner: dimension mismatch");
  if (a.grade != b.grade) return S(0);
  if (a.coeffs.size() == 0) return S(0);
  if (ip.orthonormal()) return a.coeffs.cwiseProduct(b.coeffs).sum();  // bilinear extension
  return apply_real(ip.blade_gram(a.grade), b.coeffs).cwiseProduct(a.coeffs).sum();
}

template <class S>
MultiVectorT<S> hodge_star(const MultiVectorT<S>& a, const InnerProduct& ip) {
  if (a.dim != ip.dim()) throw exterior_error("hodge_star: dimension mismatch");
  const int m = a.dim, p = a.grade;
  const BladeTable& t = BladeTable::get(m);
  MultiVectorT<S> r(m, m - p);
  if (a.coeffs.size() == 0) return r;
  const unsigned full = (1u << m) - 1;
  const double scale = ip.orientation() / std::sqrt(ip.det());
  // <e_I, a> for all I of grade p
  typename MultiVectorT<S>::Coeffs proj;
  if (ip.orthonormal())
    proj = a.coeffs;
  else
    proj = apply_real(ip.blade_gram(p), a.coeffs);
  for (int i = 0; i < proj.size(); ++i) {
    unsigned mask = t.blades[p][i];
    unsigned comp = full & ~mask;
    int s = wedge_sign(mask, comp);
    r.coeffs(t.rank_of_mask[comp]) = static_cast<double>(s) * scale * proj(i);
  }
  return r;
}

template <class S>
MultiVectorT<S> interior_mult(const MultiVectorT<S>& a, const MultiVectorT<S>& b,
                              const InnerProduct& ip) {
  if (a.dim != b.dim || a.dim != ip.dim()) throw exterior_error("interior_mult: dimension mismatch");
  if (a.grade < b.grade) throw exterior_error("interior_mult: first grade must be >= second");
  const int m = a.dim, p = a.grade, q = b.grade, pq = p - q;
  const BladeTable& t = BladeTable::get(m);
  MultiVectorT<S> r(m, pq);
  if (a.coeffs.size() == 0 || b.coeffs.size() == 0) return r;
  // rhs_K = <a, b ^ e_K>, then solve G_{p-q} x = rhs
  typename MultiVectorT<S>::Coeffs rhs = MultiVectorT<S>::Coeffs::Zero(t.count(pq));
  typename MultiVectorT<S>::Coeffs pa;  // <e_I, a> over grade-p blades
  if (ip.orthonormal())
    pa = a.coeffs;
  else
    pa = apply_real(ip.blade_gram(p), a.coeffs);
  for (int j = 0; j < b.coeffs.size(); ++j) {
    if (b.coeffs(j) == S(0)) continue;
    unsigned mb = t.blades[q][j];
    for (int k = 0; k < rhs.size(); ++k) {
      unsigned mk = t.blades[pq][k];
      int s = wedge_sign(mb, mk);
      if (s) rhs(k) += static_cast<double>(s) * b.coeffs(j) * pa(t.rank_of_mask[mb | mk]);
    }
  }
  if (ip.orthonormal())
    r.coeffs = rhs;
  else
    r.coeffs = solve_real(ip.blade_llt(pq), rhs);
  return r;
}

namespace {

// a • e_mask via the grade recursion on the basis blade
template <class S>
MultiVectorT<S> bullet_blade(const MultiVectorT<S>& a, unsigned mask, const InnerProduct& ip) {
  int q = std::popcount(mask);
  const int m = a.dim;
  if (q == 1) {
    MultiVectorT<S> e(m, 1);
    e.coeffs(std::countr_zero(mask)) = S(1);
    return interior_mult(a, e, ip);
  }
  unsigned low = mask & ~(mask - 1);  // lowest index: e_mask = e_low ^ e_rest, sign +1
  unsigned rest = mask & ~low;
  MultiVectorT<S> e_low(m, 1);
  e_low.coeffs(std::countr_zero(low)) = S(1);
  MultiVectorT<S> e_rest(m, q - 1);
  e_rest.coeffs(BladeTable::get(m).rank_of_mask[rest]) = S(1);
  MultiVectorT<S> term1 = wedge(interior_mult(a, e_low, ip), e_rest);
  MultiVectorT<S> term2 = wedge(bullet_blade(a, rest, ip), e_low);
  double sgn = (q - 1) % 2 ? -1.0 : 1.0;  // (-1)^{grade(e_low) * grade(e_rest)}
  term1.coeffs += sgn * term2.coeffs;
  return term1;
}

}  // namespace

template <class S>
MultiVectorT<S> bullet(const MultiVectorT<S>& a, const MultiVectorT<S>& b, const InnerProduct& ip) {
  if (a.dim != b.dim || a.dim != ip.dim()) throw exterior_error("bullet: dimension mismatch");
  if (b.grade < 1 || a.grade + b.grade < 2) throw exterior_error("bullet: grade underflow");
  const BladeTable& t = BladeTable::get(a.dim);
  MultiVectorT<S> r(a.dim, a.grade + b.grade - 2);
  if (a.coeffs.size() == 0 || b.coeffs.size() == 0) return r;
  for (int j = 0; j < b.coeffs.size(); ++j) {
    if (b.coeffs(j) == S(0)) continue;
    MultiVectorT<S> part = bullet_blade(a, t.blades[b.grade][j], ip);
    r.coeffs += b.coeffs(j) * part.coeffs;
  }
  return r;
}

template <class S>
Eigen::Matrix<S, Eigen::Dynamic, 1> derivation_apply(
    const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& A,
    const Eigen::Matrix<S, Eigen::Dynamic, 1>& coeffs, int grade, int m) {
  const BladeTable& t = BladeTable::get(m);
  Eigen::Matrix<S, Eigen::Dynamic, 1> out =
      Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(t.count(grade));
  for (int r = 0; r < coeffs.size(); ++r) {
    S c = coeffs(r);
    if (c == S(0)) continue;
    unsigned K = t.blades[grade][r];
    for (int k = 0; k < m; ++k) {
      if (!(K >> k & 1u)) continue;
      unsigned rest = K & ~(1u << k);
      int s1 = wedge_sign(1u << k, rest);
      for (int l = 0; l < m; ++l) {
        if (rest >> l & 1u) continue;
        int s2 = wedge_sign(1u << l, rest);
        out(t.rank_of_mask[rest | (1u << l)]) += double(s1 * s2) * A(l, k) * c;
      }
    }
  }
  return out;
}

template Vec derivation_apply(const Mat&, const Vec&, int, int);
template CVec derivation_apply(const Eigen::MatrixXcd&, const CVec&, int, int);

MultiVector real(const CMultiVector& a) {
  MultiVector r(a.dim, a.grade);
  r.coeffs = a.coeffs.real();
  return r;
}

MultiVector imag(const CMultiVector& a) {
  MultiVector r(a.dim, a.grade);
  r.coeffs = a.coeffs.imag();
  return r;
}

CMultiVector complexify(const MultiVector& re, const MultiVector& im) {
  CMultiVector r(re.dim, re.grade);
  r.coeffs = re.coeffs + cplx(0, 1) * im.coeffs;
  return r;
}

template struct MultiVectorT<double>;
template struct MultiVectorT<cplx>;
template MultiVector wedge(const MultiVector&, const MultiVector&);
template CMultiVector wedge(const CMultiVector&, const CMultiVector&);
template double inner(const MultiVector&, const MultiVector&, const InnerProduct&);
template cplx inner(const CMultiVector&, const CMultiVector&, const InnerProduct&);
template MultiVector hodge_star(const MultiVector&, const InnerProduct&);
template CMultiVector hodge_star(const CMultiVector&, const InnerProduct&);
template MultiVector interior_mult(const MultiVector&, const MultiVector&, const InnerProduct&);
template CMultiVector interior_mult(const CMultiVector&, const CMultiVector&, const InnerProduct&);
template MultiVector bullet(const MultiVector&, const MultiVector&, const InnerProduct&);
template CMultiVector bullet(const CMultiVector&, const CMultiVector&, const InnerProduct&);

}  // namespace willmore
