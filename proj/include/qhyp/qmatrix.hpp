#pragma once

#include <boost/container/small_vector.hpp>

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace qhyp {

using cplx = std::complex<double>;

/// Numerical tolerances shared by the whole library.
namespace tol {
inline constexpr double kHermitian = 1e-10;       // ||A - A^dag||_max
inline constexpr double kProjectorSum = 1e-12;
inline constexpr double kProjectorOrtho = 1e-10;
inline constexpr double kReconstruct = 1e-10;
inline constexpr double kDegenerate = 1e-12;      // relative eigenvalue gap
inline constexpr double kJacobiOffDiag = 1e-14;   // relative off-diagonal norm
inline constexpr int kMaxJacobiSweeps = 100;
inline constexpr double kPriorSum = 1e-12;
inline constexpr double kUnitTrace = 1e-12;
inline constexpr double kPositivity = -1e-10;     // min eigenvalue of a density matrix
}  // namespace tol

/// Dense complex square matrix, row-major.
///
/// Storage is inline for up to 4x4 (two-level states, their 4x4 superoperators
/// and small Hamiltonians) so the hot trajectory loop never touches the heap.
class CMatrix {
 public:
  CMatrix() = default;
  explicit CMatrix(std::size_t dim) : dim_(dim), a_(dim * dim, cplx{}) {}
  CMatrix(std::initializer_list<std::initializer_list<cplx>> rows);

  static CMatrix zeros(std::size_t dim) { return CMatrix(dim); }
  static CMatrix identity(std::size_t dim);
  static CMatrix diagonal(std::span<const double> d);
  static CMatrix diagonal(std::initializer_list<double> d);
  /// |i><j| in a dim-dimensional space.
  static CMatrix unit(std::size_t dim, std::size_t i, std::size_t j);
  /// |v><v|
  static CMatrix outer(std::span<const cplx> v);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return a_.size(); }

  cplx& operator()(std::size_t r, std::size_t c) noexcept { return a_[r * dim_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const noexcept { return a_[r * dim_ + c]; }

  std::span<cplx> data() noexcept { return {a_.data(), a_.size()}; }
  std::span<const cplx> data() const noexcept { return {a_.data(), a_.size()}; }

  CMatrix& operator+=(const CMatrix& o);
  CMatrix& operator-=(const CMatrix& o);
  CMatrix& operator*=(cplx s) noexcept;
  CMatrix& operator*=(double s) noexcept;

  CMatrix adjoint() const;
  CMatrix transpose() const;
  cplx trace() const noexcept;
  /// Largest |A_ij|.
  double max_abs() const noexcept;
  bool all_finite() const noexcept;
  bool is_hermitian(double tolerance = tol::kHermitian) const noexcept;
  /// (A + A^dag)/2, in place.
  void symmetrize() noexcept;

 private:
  std::size_t dim_ = 0;
  boost::container::small_vector<cplx, 16> a_;
};

CMatrix operator+(CMatrix a, const CMatrix& b);
CMatrix operator-(CMatrix a, const CMatrix& b);
CMatrix operator-(CMatrix a);
CMatrix operator*(const CMatrix& a, const CMatrix& b);
CMatrix operator*(cplx s, CMatrix a);
CMatrix operator*(double s, CMatrix a);

/// out = a * b. `out` must not alias a or b.
void multiply_into(const CMatrix& a, const CMatrix& b, CMatrix& out);

CMatrix commutator(const CMatrix& a, const CMatrix& b);
CMatrix anticommutator(const CMatrix& a, const CMatrix& b);
CMatrix kron(const CMatrix& a, const CMatrix& b);
double max_abs_diff(const CMatrix& a, const CMatrix& b);

/// Tr(A rho).
cplx expect(const CMatrix& a, const CMatrix& rho);

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
CMatrix expm(const CMatrix& a);

/// Solves A x = b by Gaussian elimination with partial pivoting.
std::vector<cplx> solve(CMatrix a, std::vector<cplx> b);

struct EigDecomposition {
  std::vector<double> eigenvalues;  // descending
  std::vector<CMatrix> projectors;  // rank one, matching eigenvalues

  CMatrix reconstruct() const;
};

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.
///
/// Eigenvalues come back in descending order. Within a degenerate cluster the
/// projectors are rebuilt from a Gram-Schmidt pass over the cluster projector's
/// columns taken in index order, so the output does not depend on the rotation
/// history. Throws std::domain_error("not Hermitian") and
/// std::runtime_error("eig failed").
EigDecomposition hermitian_eigs(const CMatrix& a);

/// Sum of |eigenvalues| of a Hermitian matrix.
double trace_norm(const CMatrix& a);

/// Smallest eigenvalue of a Hermitian matrix.
double min_eigenvalue(const CMatrix& a);

/// Density-matrix check: Hermitian, unit trace, positive semidefinite.
bool is_density_matrix(const CMatrix& rho, double trace_tol = 1e-9,
                       double psd_tol = tol::kPositivity);

/// Two-level operators. Index 0 is |g>, index 1 is |e>, and sigma_z|g> = -|g>.
namespace qubit {
inline constexpr std::size_t kGround = 0;
inline constexpr std::size_t kExcited = 1;

CMatrix sigma_x();
CMatrix sigma_y();
CMatrix sigma_z();
/// |g><e|
CMatrix lowering();
CMatrix ground_state();
CMatrix excited_state();
}  // namespace qubit

}  // namespace qhyp
