#pragma once

#include "dppcond/conditional.hpp"
#include "dppcond/distribution.hpp"
#include "dppcond/rng.hpp"

namespace dppcond {

// Spectral sampler: Bernoulli selection of eigenvectors by eigenvalue, then
// sequential site selection by conditional intensity with re-orthogonalization
// after every step. Projection kernels yield exactly rank-many points.
Configuration sample_dpp(const KernelMatrix& k, CounterRng& rng);

struct SampleBatch {
  uint64_t seed = 0;
  std::string kernel_id;
  int n = 0;
  std::vector<Configuration> configs;
};

// Trial t draws from the stream (seed, t), so results do not depend on the
// thread count or the execution policy.
SampleBatch sample_batch(const KernelMatrix& k, int trials, uint64_t seed,
                         const std::string& kernel_id,
                         Exec exec = Exec::Parallel);

// Sample from the conditional law given X ∩ B; throws DegenerateKernel when
// the conditional kernel is degenerate.
Configuration sample_conditional(const KernelMatrix& k, const Configuration& x,
                                 const SiteSubset& b, CounterRng& rng);

}  // namespace dppcond
