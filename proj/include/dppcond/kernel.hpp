#pragma once

#include <Eigen/Dense>
#include <functional>

#include "dppcond/types.hpp"

namespace dppcond {

struct ValidationReport {
  double hermitian_defect = 0.0;
  double clip_low = 0.0;    // largest negative eigenvalue magnitude clipped to 0
  double clip_high = 0.0;   // largest excess above 1 clipped to 1
  bool reconstructed = false;
  double spectral_tol_used = 0.0;
};

// Hermitian positive contraction on a finite ground set. Construction goes
// through validate_kernel, which symmetrizes, checks the spectrum and stores
// the eigendecomposition (ascending eigenvalues, clipped into [0,1]).
class KernelMatrix {
 public:
  KernelMatrix() = default;

  int size() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXcd& entries() const { return entries_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXcd& eigenvectors() const { return eigenvectors_; }
  bool is_projection() const { return is_projection_; }
  bool is_real() const { return is_real_; }
  const Tolerances& tols() const { return tols_; }
  const ValidationReport& validation() const { return report_; }

  double trace() const { return entries_.trace().real(); }
  int rank(double rank_tol) const {
    return static_cast<int>((eigenvalues_.array() > rank_tol).count());
  }
  int rank() const { return rank(tols_.rank); }

  friend KernelMatrix validate_kernel(const Eigen::MatrixXcd&, const Tolerances&);

 private:
  Eigen::MatrixXcd entries_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXcd eigenvectors_;
  bool is_projection_ = false;
  bool is_real_ = true;
  Tolerances tols_;
  ValidationReport report_;
};

KernelMatrix validate_kernel(const Eigen::MatrixXcd& raw,
                             const Tolerances& tols = {});
KernelMatrix validate_kernel(const Eigen::MatrixXd& raw,
                             const Tolerances& tols = {});

// chi_rows * M * chi_cols, returned full-size (zero-padded).
Eigen::MatrixXcd compress(const Eigen::MatrixXcd& m, const SiteSubset& rows,
                          const SiteSubset& cols);
Eigen::MatrixXcd compress(const KernelMatrix& k, const SiteSubset& rows,
                          const SiteSubset& cols);

Eigen::VectorXcd kernel_column(const KernelMatrix& k, int x);

// 2n x 2n projection [[K, S], [S, 1-K]] with S = sqrt(K - K^2).
KernelMatrix dilate_to_projection(const KernelMatrix& k);

// Orthogonal projection onto the span of eigenvectors with eigenvalue > rank_tol.
Eigen::MatrixXcd range_projector(const KernelMatrix& k, double rank_tol);
Eigen::MatrixXcd range_projector(const KernelMatrix& k);

using KernelFn =
    std::function<cplx(const std::vector<double>&, const std::vector<double>&)>;

struct DiscretizedKernel {
  KernelMatrix kernel;
  GroundSet ground;
};

// Entries w_i^{1/2} * fn(x_i, x_j) * w_j^{1/2}, validated with clipping.
DiscretizedKernel discretize_kernel(const KernelFn& fn, const GroundSet& grid,
                                    const Tolerances& tols = {});

// Built-in kernels.
KernelMatrix uniform_rank1(int n);
KernelMatrix identity_kernel(int n);
KernelMatrix diagonal_kernel(const std::vector<double>& p);
// sin(pi(x-y))/(pi(x-y)) on a uniform n-point grid over [0, length].
DiscretizedKernel sine_kernel(int n, double length);
// 1/(pi (1 - z conj(w))^2) on a polar grid over the disk of given radius < 1,
// Gauss-Legendre radially, uniform in angle.
DiscretizedKernel bergman_kernel(int n_radial, int n_angular, double radius);

}  // namespace dppcond
