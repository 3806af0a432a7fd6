#pragma once

#include "dppcond/kernel.hpp"

namespace dppcond {

inline constexpr int ENUM_DEFAULT_CAP = 14;
inline constexpr int ENUM_HARD_CAP = 20;

// Exact law of a finite DPP: probs[m] is the probability of the configuration
// whose little-endian bitmask is m (site i <-> bit i).
struct DppDistribution {
  int n = 0;
  std::vector<double> probs;

  double mass(uint32_t m) const { return probs[m]; }
  double sum() const;
  // Support atoms above the threshold, as (mask, prob), ascending mask order.
  std::vector<std::pair<uint32_t, double>> atoms(double threshold) const;
};

// Inclusion-exclusion over correlation determinants, one per subset.
DppDistribution enumerate_distribution(const KernelMatrix& k,
                                       int cap = ENUM_DEFAULT_CAP,
                                       Exec exec = Exec::Parallel);

// det of the block of K at the given points; 1 for the empty set.
double correlation(const KernelMatrix& k, const Configuration& pts);

// P(no points in B) = det(1 - K_BB).
double gap_probability(const KernelMatrix& k, const SiteSubset& b);

// Law of X ∩ W (mass lands on submasks of W).
DppDistribution marginal(const DppDistribution& d, const SiteSubset& w);

// Law of X ∩ B^c given X ∩ B = xi (mass lands on submasks of B^c).
DppDistribution conditional_slice(const DppDistribution& d, const SiteSubset& b,
                                  uint32_t xi_mask);

DppDistribution conditional_distribution_oracle(const KernelMatrix& k,
                                                const SiteSubset& b,
                                                const Configuration& xi,
                                                int cap = ENUM_DEFAULT_CAP);

// Reduced Palm law: probability proportional to probs[S ∪ points] over S
// disjoint from points.
DppDistribution palm_distribution_oracle(const KernelMatrix& k,
                                         const Configuration& pts,
                                         int cap = ENUM_DEFAULT_CAP);

double tv_distance(const DppDistribution& a, const DppDistribution& b);

}  // namespace dppcond
