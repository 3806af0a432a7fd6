#include "dppcond/distribution.hpp"

#include <omp.h>

namespace dppcond {

double DppDistribution::sum() const {
  double s = 0.0;
  for (double p : probs) s += p;
  return s;
}

std::vector<std::pair<uint32_t, double>> DppDistribution::atoms(
    double threshold) const {
  std::vector<std::pair<uint32_t, double>> out;
  for (uint32_t m = 0; m < probs.size(); ++m)
    if (probs[m] > threshold) out.emplace_back(m, probs[m]);
  return out;
}

namespace {

int checked_size(const KernelMatrix& k, int cap) {
  int n = k.size();
  int eff = std::min(cap, ENUM_HARD_CAP);
  if (n > eff)
    throw TooLarge("enumeration over 2^" + std::to_string(n) +
                   " subsets exceeds cap " + std::to_string(eff));
  return n;
}

double subset_det(const Eigen::MatrixXcd& m, uint32_t mask, int n) {
  std::vector<int> idx;
  for (int i = 0; i < n; ++i)
    if (mask >> i & 1u) idx.push_back(i);
  const int d = static_cast<int>(idx.size());
  if (d == 0) return 1.0;
  Eigen::MatrixXcd sub(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) sub(r, c) = m(idx[r], idx[c]);
  return Eigen::PartialPivLU<Eigen::MatrixXcd>(sub).determinant().real();
}

}  // namespace

DppDistribution enumerate_distribution(const KernelMatrix& k, int cap,
                                       Exec exec) {
  const int n = checked_size(k, cap);
  const int64_t total = int64_t(1) << n;
  const Eigen::MatrixXcd& m = k.entries();

  std::vector<double> p(total);
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (int64_t s = 0; s < total; ++s)
      p[s] = subset_det(m, static_cast<uint32_t>(s), n);
  } else {
    for (int64_t s = 0; s < total; ++s)
      p[s] = subset_det(m, static_cast<uint32_t>(s), n);
  }

  // In-place signed superset transform: one butterfly pass per site. Each
  // entry is written by exactly one iteration per pass, so the parallel
  // version is bitwise identical to the serial one.
  for (int b = 0; b < n; ++b) {
    const int64_t bit = int64_t(1) << b;
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
      for (int64_t s = 0; s < total; ++s)
        if (!(s & bit)) p[s] -= p[s | bit];
    } else {
      for (int64_t s = 0; s < total; ++s)
        if (!(s & bit)) p[s] -= p[s | bit];
    }
  }

  const double floor = k.tols().prob_floor;
  for (int64_t s = 0; s < total; ++s) {
    if (p[s] < 0.0) {
      if (p[s] < -floor)
        throw NotADistribution("probability " + std::to_string(p[s]) +
                               " below round-off floor");
      p[s] = 0.0;
    }
  }

  DppDistribution d{n, std::move(p)};
  double total_mass = d.sum();
  if (std::abs(total_mass - 1.0) > 1e-9)
    throw NotADistribution("total mass " + std::to_string(total_mass));
  return d;
}

double correlation(const KernelMatrix& k, const Configuration& pts) {
  if (pts.ground_size != k.size())
    throw DimensionMismatch("configuration ground size mismatch");
  const int d = pts.count();
  if (d == 0) return 1.0;
  Eigen::MatrixXcd sub(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) sub(r, c) = k.entries()(pts.sites[r], pts.sites[c]);
  double v = Eigen::PartialPivLU<Eigen::MatrixXcd>(sub).determinant().real();
  return std::max(0.0, v);
}

double gap_probability(const KernelMatrix& k, const SiteSubset& b) {
  if (b.ground_size() != k.size())
    throw DimensionMismatch("subset ground size mismatch");
  std::vector<int> idx = b.indices();
  const int d = static_cast<int>(idx.size());
  if (d == 0) return 1.0;
  Eigen::MatrixXcd sub(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) sub(r, c) = k.entries()(idx[r], idx[c]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sub);
  if (es.info() != Eigen::Success)
    throw NumericalBreakdown("gap probability eigensolve failed");
  double prod = 1.0;
  for (int i = 0; i < d; ++i) prod *= 1.0 - es.eigenvalues()(i);
  return std::max(0.0, prod);
}

DppDistribution marginal(const DppDistribution& d, const SiteSubset& w) {
  if (w.ground_size() != d.n)
    throw DimensionMismatch("subset ground size mismatch");
  DppDistribution out = d;
  const uint32_t wm = w.mask();
  for (int b = 0; b < d.n; ++b) {
    const uint32_t bit = uint32_t(1) << b;
    if (wm & bit) continue;
    for (uint32_t s = 0; s < out.probs.size(); ++s)
      if (!(s & bit)) out.probs[s] += out.probs[s | bit];
  }
  for (uint32_t s = 0; s < out.probs.size(); ++s)
    if (s & ~wm) out.probs[s] = 0.0;
  return out;
}

DppDistribution conditional_slice(const DppDistribution& d, const SiteSubset& b,
                                  uint32_t xi_mask) {
  if (b.ground_size() != d.n)
    throw DimensionMismatch("subset ground size mismatch");
  const uint32_t bm = b.mask();
  if (xi_mask & ~bm) throw PointOutOfRange("trace not contained in window");
  DppDistribution out{d.n, std::vector<double>(d.probs.size(), 0.0)};
  const uint32_t cm = ~bm & ((d.n == 31) ? 0x7fffffffu : ((uint32_t(1) << d.n) - 1));
  double total = 0.0;
  // Walk the submasks of B^c.
  uint32_t s = cm;
  while (true) {
    double v = d.probs[s | xi_mask];
    out.probs[s] = v;
    total += v;
    if (s == 0) break;
    s = (s - 1) & cm;
  }
  if (total <= 0.0)
    throw ZeroProbabilityCondition("trace has zero probability");
  for (double& v : out.probs) v /= total;
  return out;
}

DppDistribution conditional_distribution_oracle(const KernelMatrix& k,
                                                const SiteSubset& b,
                                                const Configuration& xi,
                                                int cap) {
  DppDistribution d = enumerate_distribution(k, cap);
  return conditional_slice(d, b, xi.to_subset().mask());
}

DppDistribution palm_distribution_oracle(const KernelMatrix& k,
                                         const Configuration& pts, int cap) {
  DppDistribution d = enumerate_distribution(k, cap);
  const uint32_t pm = pts.to_subset().mask();
  const uint32_t cm = ~pm & ((uint32_t(1) << d.n) - 1);
  DppDistribution out{d.n, std::vector<double>(d.probs.size(), 0.0)};
  double total = 0.0;
  uint32_t s = cm;
  while (true) {
    double v = d.probs[s | pm];
    out.probs[s] = v;
    total += v;
    if (s == 0) break;
    s = (s - 1) & cm;
  }
  if (total <= 0.0) throw ZeroCorrelation("conditioning points have zero correlation");
  for (double& v : out.probs) v /= total;
  return out;
}

double tv_distance(const DppDistribution& a, const DppDistribution& b) {
  if (a.n != b.n) throw DimensionMismatch("distribution sizes differ");
  double s = 0.0;
  for (size_t i = 0; i < a.probs.size(); ++i)
    s += std::abs(a.probs[i] - b.probs[i]);
  return 0.5 * s;
}

}  // namespace dppcond
