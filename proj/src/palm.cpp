#include "dppcond/palm.hpp"

namespace dppcond {

namespace {

double scale_of(const KernelMatrix& k) {
  if (k.size() == 0) return 1.0;
  return std::max(1.0, k.entries().cwiseAbs().maxCoeff());
}

KernelMatrix zero_like(const KernelMatrix& k) {
  return validate_kernel(
      Eigen::MatrixXcd(Eigen::MatrixXcd::Zero(k.size(), k.size())), k.tols());
}

void zero_row_col(Eigen::MatrixXcd& m, int p) {
  m.row(p).setZero();
  m.col(p).setZero();
}

}  // namespace

PalmKernel palm_one(const KernelMatrix& k, int p) {
  if (p < 0 || p >= k.size())
    throw PointOutOfRange("site " + std::to_string(p));
  Configuration pts = Configuration::from(k.size(), {p});
  double d = k.entries()(p, p).real();
  if (d <= k.tols().diag * scale_of(k))
    return PalmKernel{pts, zero_like(k), true};
  Eigen::MatrixXcd m =
      k.entries() - (k.entries().col(p) * k.entries().row(p)) / d;
  zero_row_col(m, p);
  m = 0.5 * (m + m.adjoint().eval());
  return PalmKernel{pts, validate_kernel(m, k.tols()), false};
}

PalmKernel palm_many(const KernelMatrix& k, const Configuration& pts,
                     PalmMethod method) {
  if (pts.ground_size != k.size())
    throw DimensionMismatch("configuration ground size mismatch");
  if (pts.count() == 0) return PalmKernel{pts, k, false};

  if (method == PalmMethod::Recursive) {
    KernelMatrix cur = k;
    for (int p : pts.sites) {
      PalmKernel step = palm_one(cur, p);
      if (step.degenerate) return PalmKernel{pts, zero_like(k), true};
      cur = step.matrix;
    }
    return PalmKernel{pts, cur, false};
  }

  const std::vector<int>& idx = pts.sites;
  const int d = pts.count();
  const int n = k.size();
  Eigen::MatrixXcd block(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) block(r, c) = k.entries()(idx[r], idx[c]);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(block);
  if (es.info() != Eigen::Success)
    throw NumericalBreakdown("palm block eigensolve failed");
  if (es.eigenvalues().minCoeff() <= k.tols().diag * scale_of(k))
    return PalmKernel{pts, zero_like(k), true};

  Eigen::MatrixXcd cols(n, d);
  for (int c = 0; c < d; ++c) cols.col(c) = k.entries().col(idx[c]);
  Eigen::LLT<Eigen::MatrixXcd> llt(block);
  if (llt.info() != Eigen::Success)
    throw NumericalBreakdown("palm block factorization failed");
  Eigen::MatrixXcd rhs = cols.adjoint();
  Eigen::MatrixXcd y = llt.solve(rhs);
  y += llt.solve(rhs - block * y);  // one refinement step
  Eigen::MatrixXcd m = k.entries() - cols * y;
  for (int p : idx) zero_row_col(m, p);
  m = 0.5 * (m + m.adjoint().eval());
  return PalmKernel{pts, validate_kernel(m, k.tols()), false};
}

}  // namespace dppcond
