#pragma once

#include "dppcond/palm.hpp"

namespace dppcond {

enum class CondStatus { Regular, Degenerate };

// Kernel of the process conditioned on its restriction to the window B:
// chi_{B^c} K^palm (1 - chi_B K^palm)^{-1} chi_{B^c}, with the Palm kernel
// taken at X ∩ B. Degenerate when a Palm determinant vanishes or the
// resolvent is not invertible; the matrix is then zero and gap_sv certifies
// the failing singular value.
struct ConditionalKernel {
  SiteSubset window;
  Configuration trace;  // X ∩ B, the only part of X that is read
  KernelMatrix matrix;  // full-size, supported on B^c
  CondStatus status = CondStatus::Regular;
  double gap_sv = 0.0;      // smallest singular value of 1 - chi_B K^palm
  double norm_bound = 0.0;  // certified bound on |chi_B K^palm|
};

ConditionalKernel conditional_kernel(const KernelMatrix& k,
                                     const Configuration& x,
                                     const SiteSubset& b);

// Same operator through the geometric series sum_m K^palm (chi_B K^palm)^m,
// truncated when a term drops below series_tol.
ConditionalKernel conditional_kernel_neumann(const KernelMatrix& k,
                                             const Configuration& x,
                                             const SiteSubset& b,
                                             double series_tol);
ConditionalKernel conditional_kernel_neumann(const KernelMatrix& k,
                                             const Configuration& x,
                                             const SiteSubset& b);

// Kernel of the process conditioned on seeing no points in B.
ConditionalKernel induced_kernel(const KernelMatrix& k, const SiteSubset& b);

struct ConvergenceStage {
  int window_size = 0;
  double trace_dist = 0.0;  // trace norm distance to the final stage
  double op_dist = 0.0;
};

struct ConditionalLimit {
  KernelMatrix kernel;  // chi_{W^c} K^{[X,W]} chi_{W^c}
  std::vector<ConvergenceStage> stages;
};

// Conditioning on an unbounded window rendered as an increasing exhaustion
// inside W whose union is W; records distances of each stage to the last.
ConditionalLimit conditional_limit(const KernelMatrix& k, const Configuration& x,
                                   const SiteSubset& w,
                                   const std::vector<SiteSubset>& exhaustion);

// For projection kernels: the conditional kernel as the orthogonal projection
// onto chi_{B^c} {h in Ran K : h = 0 on X ∩ B}.
ConditionalKernel projection_conditional_subspace(const KernelMatrix& k,
                                                  const Configuration& x,
                                                  const SiteSubset& b);

}  // namespace dppcond
