#include "qhyp/qmatrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qhyp {

namespace {

void require_same_dim(const CMatrix& a, const CMatrix& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  }
}

struct JacobiResult {
  std::vector<double> values;
  CMatrix vectors;  // columns, only filled when requested
};

// Cyclic Jacobi sweeps with a fixed (p, q) visiting order.
JacobiResult jacobi(const CMatrix& input, bool want_vectors) {
  if (input.dim() == 0) throw std::invalid_argument("hermitian_eigs: empty matrix");
  if (!input.all_finite()) throw std::domain_error("not Hermitian: non-finite entries");
  if (!input.is_hermitian(tol::kHermitian)) throw std::domain_error("not Hermitian");

  const std::size_t n = input.dim();
  CMatrix h = input;
  h.symmetrize();
  for (std::size_t i = 0; i < n; ++i) h(i, i) = {h(i, i).real(), 0.0};

  CMatrix v = want_vectors ? CMatrix::identity(n) : CMatrix{};

  double total = 0.0;
  for (const auto& x : h.data()) total += std::norm(x);
  const double scale = std::sqrt(total);

  bool converged = false;
  for (int sweep = 0; sweep <= tol::kMaxJacobiSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q)
        if (p != q) off += std::norm(h(p, q));
    if (std::sqrt(off) <= tol::kJacobiOffDiag * scale || off == 0.0) {
      converged = true;
      break;
    }
    if (sweep == tol::kMaxJacobiSweeps) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx apq = h(p, q);
        const double mag = std::abs(apq);
        if (mag == 0.0) continue;
        const cplx phase = apq / mag;
        const double app = h(p, p).real();
        const double aqq = h(q, q).real();
        const double theta = (aqq - app) / (2.0 * mag);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // G = diag(1, conj(phase)) * [[c, s], [-s, c]] restricted to (p, q).
        const cplx g_pp = c;
        const cplx g_pq = s;
        const cplx g_qp = -s * std::conj(phase);
        const cplx g_qq = c * std::conj(phase);

        for (std::size_t k = 0; k < n; ++k) {
          const cplx hkp = h(k, p);
          const cplx hkq = h(k, q);
          h(k, p) = hkp * g_pp + hkq * g_qp;
          h(k, q) = hkp * g_pq + hkq * g_qq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const cplx hpk = h(p, k);
          const cplx hqk = h(q, k);
          h(p, k) = std::conj(g_pp) * hpk + std::conj(g_qp) * hqk;
          h(q, k) = std::conj(g_pq) * hpk + std::conj(g_qq) * hqk;
        }
        h(p, q) = 0.0;
        h(q, p) = 0.0;
        h(p, p) = {app - t * mag, 0.0};
        h(q, q) = {aqq + t * mag, 0.0};

        if (want_vectors) {
          for (std::size_t k = 0; k < n; ++k) {
            const cplx vkp = v(k, p);
            const cplx vkq = v(k, q);
            v(k, p) = vkp * g_pp + vkq * g_qp;
            v(k, q) = vkp * g_pq + vkq * g_qq;
          }
        }
      }
    }
  }
  if (!converged) throw std::runtime_error("eig failed");

  JacobiResult out;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = h(i, i).real();
  out.vectors = std::move(v);
  return out;
}

}  // namespace

CMatrix::CMatrix(std::initializer_list<std::initializer_list<cplx>> rows) : dim_(rows.size()) {
  a_.reserve(dim_ * dim_);
  for (const auto& r : rows) {
    if (r.size() != dim_) throw std::invalid_argument("CMatrix: rows must form a square matrix");
    a_.insert(a_.end(), r.begin(), r.end());
  }
}

CMatrix CMatrix::identity(std::size_t dim) {
  CMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

CMatrix CMatrix::diagonal(std::span<const double> d) {
  CMatrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

CMatrix CMatrix::diagonal(std::initializer_list<double> d) {
  return diagonal(std::span<const double>(d.begin(), d.size()));
}

CMatrix CMatrix::unit(std::size_t dim, std::size_t i, std::size_t j) {
  CMatrix m(dim);
  m(i, j) = 1.0;
  return m;
}

CMatrix CMatrix::outer(std::span<const cplx> v) {
  CMatrix m(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = v[i] * std::conj(v[j]);
  return m;
}

CMatrix& CMatrix::operator+=(const CMatrix& o) {
  require_same_dim(*this, o, "operator+");
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
  return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& o) {
  require_same_dim(*this, o, "operator-");
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
  return *this;
}

CMatrix& CMatrix::operator*=(cplx s) noexcept {
  for (auto& x : a_) x *= s;
  return *this;
}

CMatrix& CMatrix::operator*=(double s) noexcept {
  for (auto& x : a_) x *= s;
  return *this;
}

CMatrix CMatrix::adjoint() const {
  CMatrix m(dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) m(i, j) = std::conj((*this)(j, i));
  return m;
}

CMatrix CMatrix::transpose() const {
  CMatrix m(dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) m(i, j) = (*this)(j, i);
  return m;
}

cplx CMatrix::trace() const noexcept {
  cplx t{};
  for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
  return t;
}

double CMatrix::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& x : a_) m = std::max(m, std::abs(x));
  return m;
}

bool CMatrix::all_finite() const noexcept {
  return std::all_of(a_.begin(), a_.end(),
                     [](const cplx& x) { return std::isfinite(x.real()) && std::isfinite(x.imag()); });
}

bool CMatrix::is_hermitian(double tolerance) const noexcept {
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = i; j < dim_; ++j)
      if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > tolerance) return false;
  return true;
}

void CMatrix::symmetrize() noexcept {
  for (std::size_t i = 0; i < dim_; ++i) {
    (*this)(i, i) = {(*this)(i, i).real(), 0.0};
    for (std::size_t j = i + 1; j < dim_; ++j) {
      const cplx avg = 0.5 * ((*this)(i, j) + std::conj((*this)(j, i)));
      (*this)(i, j) = avg;
      (*this)(j, i) = std::conj(avg);
    }
  }
}

CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
CMatrix operator-(CMatrix a) { return a *= -1.0; }
CMatrix operator*(cplx s, CMatrix a) { return a *= s; }
CMatrix operator*(double s, CMatrix a) { return a *= s; }

void multiply_into(const CMatrix& a, const CMatrix& b, CMatrix& out) {
  require_same_dim(a, b, "operator*");
  const std::size_t n = a.dim();
  if (out.dim() != n) out = CMatrix(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      cplx acc{};
      for (std::size_t k = 0; k < n; ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  }
}

CMatrix operator*(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.dim());
  multiply_into(a, b, out);
  return out;
}

CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }
CMatrix anticommutator(const CMatrix& a, const CMatrix& b) { return a * b + b * a; }

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  const std::size_t na = a.dim();
  const std::size_t nb = b.dim();
  CMatrix out(na * nb);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < na; ++j)
      for (std::size_t k = 0; k < nb; ++k)
        for (std::size_t l = 0; l < nb; ++l) out(i * nb + k, j * nb + l) = a(i, j) * b(k, l);
  return out;
}

double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  require_same_dim(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

cplx expect(const CMatrix& a, const CMatrix& rho) {
  require_same_dim(a, rho, "expect");
  const std::size_t n = a.dim();
  cplx t{};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) t += a(i, k) * rho(k, i);
  return t;
}

CMatrix expm(const CMatrix& a) {
  const std::size_t n = a.dim();
  double norm1 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < n; ++i) col += std::abs(a(i, j));
    norm1 = std::max(norm1, col);
  }
  if (!std::isfinite(norm1)) throw std::domain_error("expm: non-finite input");
  int squarings = 0;
  while (norm1 > 0.5) {
    norm1 *= 0.5;
    ++squarings;
  }
  const CMatrix b = std::ldexp(1.0, -squarings) * a;

  CMatrix sum = CMatrix::identity(n);
  CMatrix term = CMatrix::identity(n);
  CMatrix next(n);
  for (int k = 1; k <= 40; ++k) {
    multiply_into(term, b, next);
    next *= 1.0 / k;
    std::swap(term, next);
    sum += term;
    if (term.max_abs() <= 1e-18 * sum.max_abs()) break;
  }
  for (int s = 0; s < squarings; ++s) {
    multiply_into(sum, sum, next);
    std::swap(sum, next);
  }
  return sum;
}

std::vector<cplx> solve(CMatrix a, std::vector<cplx> b) {
  const std::size_t n = a.dim();
  if (b.size() != n) throw std::invalid_argument("solve: dimension mismatch");
  const double scale = std::max(a.max_abs(), 1e-300);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    if (std::abs(a(piv, col)) <= 1e-14 * scale) throw std::runtime_error("solve: singular matrix");
    if (piv != col) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a(piv, k), a(col, k));
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const cplx f = a(r, col) / a(col, col);
      if (f == cplx{}) continue;
      for (std::size_t k = col; k < n; ++k) a(r, k) -= f * a(col, k);
      b[r] -= f * b[col];
    }
  }
  std::vector<cplx> x(n);
  for (std::size_t i = n; i-- > 0;) {
    cplx acc = b[i];
    for (std::size_t k = i + 1; k < n; ++k) acc -= a(i, k) * x[k];
    x[i] = acc / a(i, i);
  }
  return x;
}

CMatrix EigDecomposition::reconstruct() const {
  if (projectors.empty()) return {};
  CMatrix out(projectors.front().dim());
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) out += eigenvalues[i] * projectors[i];
  return out;
}

EigDecomposition hermitian_eigs(const CMatrix& a) {
  const std::size_t n = a.dim();
  JacobiResult jr = jacobi(a, true);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return jr.values[x] > jr.values[y]; });

  std::vector<std::vector<cplx>> vecs(n, std::vector<cplx>(n));
  EigDecomposition out;
  out.eigenvalues.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.eigenvalues[i] = jr.values[order[i]];
    for (std::size_t k = 0; k < n; ++k) vecs[i][k] = jr.vectors(k, order[i]);
  }

  double spread = 1.0;
  for (double x : out.eigenvalues) spread = std::max(spread, std::abs(x));
  const double gap = tol::kDegenerate * spread;

  for (std::size_t begin = 0; begin < n;) {
    std::size_t end = begin + 1;
    while (end < n && out.eigenvalues[end - 1] - out.eigenvalues[end] <= gap) ++end;
    const std::size_t k = end - begin;
    if (k > 1) {
      // Canonical basis of the cluster: Gram-Schmidt over columns of its projector.
      CMatrix proj(n);
      for (std::size_t m = begin; m < end; ++m) proj += CMatrix::outer(vecs[m]);
      std::vector<std::vector<cplx>> basis;
      for (std::size_t col = 0; col < n && basis.size() < k; ++col) {
        std::vector<cplx> w(n);
        for (std::size_t r = 0; r < n; ++r) w[r] = proj(r, col);
        for (int pass = 0; pass < 2; ++pass) {
          for (const auto& b : basis) {
            cplx dot{};
            for (std::size_t r = 0; r < n; ++r) dot += std::conj(b[r]) * w[r];
            for (std::size_t r = 0; r < n; ++r) w[r] -= dot * b[r];
          }
        }
        double norm = 0.0;
        for (const auto& x : w) norm += std::norm(x);
        norm = std::sqrt(norm);
        if (norm < 1e-3) continue;
        for (auto& x : w) x /= norm;
        basis.push_back(std::move(w));
      }
      if (basis.size() != k) throw std::runtime_error("eig failed");
      for (std::size_t m = 0; m < k; ++m) vecs[begin + m] = std::move(basis[m]);
    }
    begin = end;
  }

  out.projectors.reserve(n);
  for (const auto& v : vecs) out.projectors.push_back(CMatrix::outer(v));
  return out;
}

double trace_norm(const CMatrix& a) {
  const JacobiResult jr = jacobi(a, false);
  std::vector<double> mags;
  mags.reserve(jr.values.size());
  for (double x : jr.values) mags.push_back(std::abs(x));
  std::sort(mags.begin(), mags.end());
  return std::accumulate(mags.begin(), mags.end(), 0.0);
}

double min_eigenvalue(const CMatrix& a) {
  const JacobiResult jr = jacobi(a, false);
  return *std::min_element(jr.values.begin(), jr.values.end());
}

bool is_density_matrix(const CMatrix& rho, double trace_tol, double psd_tol) {
  if (rho.dim() == 0 || !rho.all_finite() || !rho.is_hermitian()) return false;
  if (std::abs(rho.trace() - 1.0) > trace_tol) return false;
  return min_eigenvalue(rho) >= psd_tol;
}

namespace qubit {

CMatrix sigma_x() { return {{0.0, 1.0}, {1.0, 0.0}}; }

CMatrix sigma_y() {
  // sigma_y = -i(|e><g| - |g><e|)
  return {{0.0, cplx{0.0, 1.0}}, {cplx{0.0, -1.0}, 0.0}};
}

CMatrix sigma_z() { return CMatrix::diagonal({-1.0, 1.0}); }

CMatrix lowering() { return CMatrix::unit(2, kGround, kExcited); }

CMatrix ground_state() { return CMatrix::unit(2, kGround, kGround); }

CMatrix excited_state() { return CMatrix::unit(2, kExcited, kExcited); }

}  // namespace qubit

}  // namespace qhyp
