#include "dppcond/conditional.hpp"

#include "dppcond/distribution.hpp"

namespace dppcond {

namespace {

constexpr double NEUMANN_GAP = 1e-6;
constexpr int64_t NEUMANN_MAX_TERMS = 2000000;

double scale_of(const KernelMatrix& k) {
  if (k.size() == 0) return 1.0;
  return std::max(1.0, k.entries().cwiseAbs().maxCoeff());
}

KernelMatrix zero_like(const KernelMatrix& k) {
  return validate_kernel(
      Eigen::MatrixXcd(Eigen::MatrixXcd::Zero(k.size(), k.size())), k.tols());
}

// Ill-conditioned resolvents push round-off into the spectrum; widen the
// acceptance window by the conditioning factor, capped well below any
// tolerance a check would accept.
Tolerances widened(const Tolerances& t, int n, double gap_sv) {
  Tolerances out = t;
  double eps_amp = 64.0 * n * 2.3e-16 / std::max(gap_sv, 1e-300);
  out.spectral = std::min(1e-6, std::max(t.spectral, eps_amp));
  return out;
}

struct ResolventParts {
  PalmKernel palm;
  double lam_max_bb = 0.0;
  double gap_sv = 1.0;
};

ResolventParts palm_and_certificate(const KernelMatrix& k,
                                    const Configuration& x,
                                    const SiteSubset& b) {
  if (b.ground_size() != k.size())
    throw DimensionMismatch("window ground size mismatch");
  if (x.ground_size != k.size())
    throw DimensionMismatch("configuration ground size mismatch");
  ResolventParts parts;
  parts.palm = palm_many(k, x.restrict_to(b));
  if (parts.palm.degenerate) return parts;

  std::vector<int> bi = b.indices();
  const int nb = static_cast<int>(bi.size());
  if (nb > 0) {
    Eigen::MatrixXcd pbb(nb, nb);
    const Eigen::MatrixXcd& p = parts.palm.matrix.entries();
    for (int r = 0; r < nb; ++r)
      for (int c = 0; c < nb; ++c) pbb(r, c) = p(bi[r], bi[c]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(pbb);
    if (es.info() != Eigen::Success)
      throw NumericalBreakdown("window block eigensolve failed");
    parts.lam_max_bb = std::max(0.0, es.eigenvalues().maxCoeff());
  }
  parts.gap_sv = 1.0 - parts.lam_max_bb;
  return parts;
}

ConditionalKernel degenerate_result(const KernelMatrix& k, const SiteSubset& b,
                                    const Configuration& trace, double gap_sv) {
  return ConditionalKernel{b, trace, zero_like(k), CondStatus::Degenerate,
                           gap_sv, 0.0};
}

ConditionalKernel assemble(const KernelMatrix& k, const SiteSubset& b,
                           const Configuration& trace,
                           const ResolventParts& parts,
                           Eigen::MatrixXcd full) {
  full = 0.5 * (full + full.adjoint().eval());
  double norm_bound =
      std::sqrt(parts.lam_max_bb *
                (parts.palm.matrix.size()
                     ? std::max(0.0, parts.palm.matrix.eigenvalues().maxCoeff())
                     : 0.0));
  KernelMatrix m =
      validate_kernel(full, widened(k.tols(), k.size(), parts.gap_sv));
  return ConditionalKernel{b,          trace,         std::move(m),
                           CondStatus::Regular, parts.gap_sv, norm_bound};
}

}  // namespace

ConditionalKernel conditional_kernel(const KernelMatrix& k,
                                     const Configuration& x,
                                     const SiteSubset& b) {
  Configuration trace = x.restrict_to(b);
  ResolventParts parts = palm_and_certificate(k, x, b);
  if (parts.palm.degenerate) return degenerate_result(k, b, trace, 0.0);
  if (parts.gap_sv <= k.tols().sv * scale_of(k))
    return degenerate_result(k, b, trace, parts.gap_sv);

  const Eigen::MatrixXcd& p = parts.palm.matrix.entries();
  std::vector<int> bi = b.indices();
  std::vector<int> ci = b.complement().indices();
  const int nb = static_cast<int>(bi.size());
  const int nc = static_cast<int>(ci.size());
  const int n = k.size();

  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  if (nc > 0) {
    Eigen::MatrixXcd pcc(nc, nc), pcb(nc, nb), pbb(nb, nb);
    for (int r = 0; r < nc; ++r)
      for (int c = 0; c < nc; ++c) pcc(r, c) = p(ci[r], ci[c]);
    for (int r = 0; r < nc; ++r)
      for (int c = 0; c < nb; ++c) pcb(r, c) = p(ci[r], bi[c]);
    for (int r = 0; r < nb; ++r)
      for (int c = 0; c < nb; ++c) pbb(r, c) = p(bi[r], bi[c]);

    Eigen::MatrixXcd block = pcc;
    if (nb > 0) {
      // Only the B-block system is ever solved.
      Eigen::MatrixXcd g =
          Eigen::MatrixXcd::Identity(nb, nb) - pbb;
      Eigen::LLT<Eigen::MatrixXcd> llt(g);
      if (llt.info() != Eigen::Success)
        return degenerate_result(k, b, trace, parts.gap_sv);
      Eigen::MatrixXcd rhs = pcb.adjoint();
      Eigen::MatrixXcd y = llt.solve(rhs);
      y += llt.solve(rhs - g * y);  // one refinement step
      block += pcb * y;
    }
    for (int r = 0; r < nc; ++r)
      for (int c = 0; c < nc; ++c) out(ci[r], ci[c]) = block(r, c);
  }
  return assemble(k, b, trace, parts, std::move(out));
}

ConditionalKernel conditional_kernel_neumann(const KernelMatrix& k,
                                             const Configuration& x,
                                             const SiteSubset& b,
                                             double series_tol) {
  Configuration trace = x.restrict_to(b);
  ResolventParts parts = palm_and_certificate(k, x, b);
  if (parts.palm.degenerate) return degenerate_result(k, b, trace, 0.0);
  if (parts.gap_sv <= NEUMANN_GAP)
    throw NotContractive("certified norm bound " +
                         std::to_string(parts.lam_max_bb) +
                         " too close to 1 for the series");

  const Eigen::MatrixXcd& p = parts.palm.matrix.entries();
  const int n = k.size();
  std::vector<int> bi = b.indices();
  const int nb = static_cast<int>(bi.size());
  SiteSubset comp = b.complement();

  // term_m = K^palm (chi_B K^palm)^m, iterated through the B-columns only.
  Eigen::MatrixXcd pb(nb, n);
  for (int r = 0; r < nb; ++r) pb.row(r) = p.row(bi[r]);
  Eigen::MatrixXcd term = p;
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);
  for (int64_t m = 0;; ++m) {
    Eigen::MatrixXcd visible = compress(term, comp, comp);
    acc += visible;
    if (visible.norm() < series_tol) break;
    if (m >= NEUMANN_MAX_TERMS)
      throw NumericalBreakdown("series failed to settle within term cap");
    Eigen::MatrixXcd tb(n, nb);
    for (int c = 0; c < nb; ++c) tb.col(c) = term.col(bi[c]);
    term = tb * pb;
  }
  return assemble(k, b, trace, parts, std::move(acc));
}

ConditionalKernel conditional_kernel_neumann(const KernelMatrix& k,
                                             const Configuration& x,
                                             const SiteSubset& b) {
  return conditional_kernel_neumann(k, x, b, k.tols().series);
}

ConditionalKernel induced_kernel(const KernelMatrix& k, const SiteSubset& b) {
  double gp = gap_probability(k, b);
  if (gp <= k.tols().det * scale_of(k))
    throw ZeroGapProbability("det(1 - K_BB) = " + std::to_string(gp));
  return conditional_kernel(k, Configuration::empty(k.size()), b);
}

ConditionalLimit conditional_limit(const KernelMatrix& k, const Configuration& x,
                                   const SiteSubset& w,
                                   const std::vector<SiteSubset>& exhaustion) {
  if (exhaustion.empty()) throw ExhaustionNotNested("empty exhaustion");
  SiteSubset acc_union(k.size());
  for (size_t i = 0; i < exhaustion.size(); ++i) {
    if (!exhaustion[i].is_subset_of(w))
      throw ExhaustionNotNested("stage escapes the window");
    if (i > 0 && !exhaustion[i - 1].is_subset_of(exhaustion[i]))
      throw ExhaustionNotNested("stages not increasing");
    acc_union = acc_union.set_union(exhaustion[i]);
  }
  if (!(acc_union == w)) throw ExhaustionNotNested("union of stages is not W");

  SiteSubset outside = w.complement();
  std::vector<Eigen::MatrixXcd> mats;
  for (const SiteSubset& stage : exhaustion) {
    ConditionalKernel ck = conditional_kernel(k, x, stage);
    mats.push_back(compress(ck.matrix, outside, outside));
  }
  const Eigen::MatrixXcd& last = mats.back();

  ConditionalLimit out;
  for (size_t i = 0; i < mats.size(); ++i) {
    Eigen::MatrixXcd diff = mats[i] - last;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(diff);
    double tn = es.eigenvalues().cwiseAbs().sum();
    double on = es.eigenvalues().cwiseAbs().maxCoeff();
    out.stages.push_back(
        ConvergenceStage{exhaustion[i].count(), tn, on});
  }
  out.kernel = validate_kernel(last, k.tols());
  return out;
}

ConditionalKernel projection_conditional_subspace(const KernelMatrix& k,
                                                  const Configuration& x,
                                                  const SiteSubset& b) {
  if (!k.is_projection())
    throw NotAProjection("subspace characterization needs a projection kernel");
  Configuration trace = x.restrict_to(b);
  const int n = k.size();

  // Basis of Ran K: eigenvectors at eigenvalue 1.
  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (k.eigenvalues()(i) > 0.5) keep.push_back(i);
  const int r = static_cast<int>(keep.size());
  Eigen::MatrixXcd vr(n, r);
  for (int c = 0; c < r; ++c) vr.col(c) = k.eigenvectors().col(keep[c]);

  // Impose vanishing at the trace points.
  Eigen::MatrixXcd u = vr;
  const int np = trace.count();
  if (np > 0) {
    Eigen::MatrixXcd e(np, r);
    for (int i = 0; i < np; ++i) e.row(i) = vr.row(trace.sites[i]);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(e, Eigen::ComputeFullV);
    double smax = svd.singularValues().size()
                      ? svd.singularValues()(0)
                      : 0.0;
    int rank_e = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > 1e-10 * std::max(1.0, smax)) ++rank_e;
    if (rank_e < np)
      return ConditionalKernel{b, trace, zero_like(k), CondStatus::Degenerate,
                               0.0, 0.0};
    u = vr * svd.matrixV().rightCols(r - rank_e);
  }
  const int m0 = static_cast<int>(u.cols());

  // Compress off the window and orthonormalize what survives.
  Eigen::MatrixXcd z = u;
  for (int i : b.indices()) z.row(i).setZero();
  int m1 = 0;
  Eigen::MatrixXcd q(n, 0);
  double smin_ratio = 1.0;
  if (m0 > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(z, Eigen::ComputeThinU);
    double smax = svd.singularValues()(0);
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > 1e-10 * std::max(1.0, smax)) ++m1;
    if (m1 < m0)
      return ConditionalKernel{b, trace, zero_like(k), CondStatus::Degenerate,
                               0.0, 0.0};
    q = svd.matrixU().leftCols(m1);
    if (smax > 0.0)
      smin_ratio = svd.singularValues()(m0 - 1) / std::max(1.0, smax);
  }
  Eigen::MatrixXcd proj = q * q.adjoint();
  proj = 0.5 * (proj + proj.adjoint().eval());
  return ConditionalKernel{b, trace, validate_kernel(proj, k.tols()),
                           CondStatus::Regular, smin_ratio, 0.0};
}

}  // namespace dppcond
