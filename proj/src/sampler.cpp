#include "dppcond/sampler.hpp"

#include <omp.h>

namespace dppcond {

Configuration sample_dpp(const KernelMatrix& k, CounterRng& rng) {
  const int n = k.size();
  std::vector<int> picked_cols;
  for (int i = 0; i < n; ++i) {
    bool take = rng.bernoulli(k.eigenvalues()(i));  // one draw per eigenvalue
    if (take) picked_cols.push_back(i);
  }
  int r = static_cast<int>(picked_cols.size());
  Eigen::MatrixXcd v(n, r);
  for (int c = 0; c < r; ++c) v.col(c) = k.eigenvectors().col(picked_cols[c]);

  std::vector<int> sites;
  std::vector<char> taken(n, 0);
  for (int t = r; t >= 1; --t) {
    Eigen::VectorXd rho = v.rowwise().squaredNorm();
    for (int i = 0; i < n; ++i)
      if (taken[i]) rho(i) = 0.0;
    double total = rho.sum();
    if (!(total > 1e-12))
      throw NumericalBreakdown("conditional intensity mass vanished");
    double u = rng.uniform() * total;
    int site = -1;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += rho(i);
      if (u < acc) {
        site = i;
        break;
      }
    }
    if (site < 0) site = n - 1;
    sites.push_back(site);
    taken[site] = 1;

    // Zero the chosen row against a pivot column, drop it, re-orthonormalize.
    int piv = 0;
    double best = 0.0;
    for (int c = 0; c < t; ++c) {
      double a = std::abs(v(site, c));
      if (a > best) {
        best = a;
        piv = c;
      }
    }
    if (!(best > 1e-14))
      throw NumericalBreakdown("pivot entry vanished during elimination");
    Eigen::VectorXcd pivot = v.col(piv);
    cplx pv = v(site, piv);
    Eigen::MatrixXcd next(n, t - 1);
    int w = 0;
    for (int c = 0; c < t; ++c) {
      if (c == piv) continue;
      next.col(w++) = v.col(c) - (v(site, c) / pv) * pivot;
    }
    if (t - 1 > 0) {
      Eigen::HouseholderQR<Eigen::MatrixXcd> qr(next);
      v = qr.householderQ() * Eigen::MatrixXcd::Identity(n, t - 1);
    } else {
      v.resize(n, 0);
    }
  }
  return Configuration::from(n, sites);
}

SampleBatch sample_batch(const KernelMatrix& k, int trials, uint64_t seed,
                         const std::string& kernel_id, Exec exec) {
  SampleBatch batch;
  batch.seed = seed;
  batch.kernel_id = kernel_id;
  batch.n = k.size();
  batch.configs.resize(trials);
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (int t = 0; t < trials; ++t) {
      CounterRng rng(seed, static_cast<uint64_t>(t));
      batch.configs[t] = sample_dpp(k, rng);
    }
  } else {
    for (int t = 0; t < trials; ++t) {
      CounterRng rng(seed, static_cast<uint64_t>(t));
      batch.configs[t] = sample_dpp(k, rng);
    }
  }
  return batch;
}

Configuration sample_conditional(const KernelMatrix& k, const Configuration& x,
                                 const SiteSubset& b, CounterRng& rng) {
  ConditionalKernel ck = conditional_kernel(k, x, b);
  if (ck.status == CondStatus::Degenerate)
    throw DegenerateKernel("conditional kernel degenerate at the given trace");
  return sample_dpp(ck.matrix, rng);
}

}  // namespace dppcond
