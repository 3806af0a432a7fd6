#include "dppcond/checks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace dppcond {
namespace {

constexpr int kChunk = 256;

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using nlohmann::ordered_json;

double maxnorm(const MatrixXcd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

Configuration config_from_mask(int n, uint32_t mask) {
  std::vector<int> sites;
  for (int i = 0; i < n; ++i)
    if (mask >> i & 1u) sites.push_back(i);
  return Configuration{n, std::move(sites)};
}

double tracenorm(const MatrixXcd& herm) {
  if (herm.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

MatrixXcd block_of(const MatrixXcd& m, const std::vector<int>& idx) {
  MatrixXcd out(idx.size(), idx.size());
  for (size_t i = 0; i < idx.size(); ++i)
    for (size_t j = 0; j < idx.size(); ++j) out(i, j) = m(idx[i], idx[j]);
  return out;
}

double gap_det(const MatrixXcd& m, const std::vector<int>& idx) {
  int c = static_cast<int>(idx.size());
  MatrixXcd a = MatrixXcd::Identity(c, c) - block_of(m, idx);
  return a.partialPivLu().determinant().real();
}

// Principal 2x2 minors of m over pairs drawn from idx, flattened in pair order.
Eigen::VectorXcd pair_minors(const MatrixXcd& m, const std::vector<int>& idx) {
  int c = static_cast<int>(idx.size());
  Eigen::VectorXcd out(c * (c - 1) / 2);
  int t = 0;
  for (int i = 0; i < c; ++i)
    for (int j = i + 1; j < c; ++j) {
      int a = idx[i], b = idx[j];
      out[t++] = m(a, a) * m(b, b) - m(a, b) * m(b, a);
    }
  return out;
}

// Conditional kernel entries with the conventions the checks rely on: an
// empty window returns the kernel itself, a degenerate trace the zero matrix.
struct CondEval {
  MatrixXcd m;
  bool degenerate = false;
  double gap = 1.0;
};

CondEval cond_eval(const KernelMatrix& k, const Configuration& x,
                   const SiteSubset& b) {
  if (b.empty()) return {k.entries(), false, 1.0};
  ConditionalKernel ck = conditional_kernel(k, x, b);
  if (ck.status == CondStatus::Degenerate)
    return {MatrixXcd::Zero(k.size(), k.size()), true, 1.0};
  return {ck.matrix.entries(), false, ck.gap_sv};
}

// Round-off inside a conditional kernel is amplified by the resolvent gap.
// Exact comparisons subtract this certified allowance per trace, so a
// near-singular resolvent is held to what its arithmetic supports while
// healthy traces keep the full sharpness: the allowance stays orders of
// magnitude below every exact tolerance until the gap drops under ~1e-4.
double cond_allowance(int n, double gap_sv) {
  return 256.0 * n * 2.3e-16 / std::max(gap_sv, 1e-12);
}

// Deterministic Monte Carlo accumulation: trials are cut into fixed-size
// chunks, chunk partial sums reduce in chunk order, so the total is the same
// for any thread count.
void chunked_trials(int trials, int width, Exec exec,
                    const std::function<void(int, Eigen::ArrayXd&)>& fn,
                    Eigen::ArrayXd& total) {
  int chunks = (trials + kChunk - 1) / kChunk;
  std::vector<Eigen::ArrayXd> partial(chunks);
  std::exception_ptr err = nullptr;
  bool par = exec == Exec::Parallel;
#pragma omp parallel for schedule(static) if (par)
  for (int c = 0; c < chunks; ++c) {
    try {
      Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(width);
      Eigen::ArrayXd one(width);
      int lo = c * kChunk, hi = std::min(trials, lo + kChunk);
      for (int t = lo; t < hi; ++t) {
        one.setZero();
        fn(t, one);
        acc += one;
      }
      partial[c] = std::move(acc);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  total = Eigen::ArrayXd::Zero(width);
  for (int c = 0; c < chunks; ++c) total += partial[c];
}

std::vector<std::pair<uint32_t, double>> exact_traces(
    const DppDistribution& d, const SiteSubset& b, double threshold) {
  return marginal(d, b).atoms(threshold);
}

// Distinct traces on b among sampled configurations, with multiplicities,
// keyed by sorted site lists so any ground size works.
std::map<std::vector<int>, int> sampled_traces(const KernelMatrix& k,
                                               const SiteSubset& b,
                                               const CheckOptions& opt,
                                               const char* label) {
  SampleBatch batch =
      sample_batch(k, opt.trials, opt.seed, label, opt.exec);
  std::map<std::vector<int>, int> counts;
  for (const Configuration& c : batch.configs)
    counts[c.restrict_to(b).sites]++;
  return counts;
}

void require_window(const SiteSubset& b, const char* what) {
  if (b.empty()) throw ConfigError(std::string(what) + " window is empty");
}

void require_off(const Eigen::VectorXcd& phi, const SiteSubset& w,
                 const char* what) {
  for (int i : w.indices())
    if (std::abs(phi[i]) > 1e-12)
      throw ConfigError(std::string(what) + " must vanish on the window");
}

}  // namespace

const char* check_mode_name(CheckMode m) {
  return m == CheckMode::Exact ? "exact" : "mc";
}

CheckResult make_result(std::string check_id, CheckMode mode, double statistic,
                        double tolerance, uint64_t seed,
                        ordered_json details) {
  CheckResult r;
  r.check_id = std::move(check_id);
  r.mode = mode;
  r.statistic = statistic;
  r.tolerance = tolerance;
  r.pass = statistic <= tolerance;
  r.seed = seed;
  r.details = std::move(details);
  return r;
}

CheckResult check_one_step_martingale(const KernelMatrix& k, const SiteSubset& b,
                                      const CheckOptions& opt, double tolerance) {
  int n = k.size();
  SiteSubset bc = b.complement();
  MatrixXcd target = compress(k.entries(), bc, bc);
  ordered_json details;

  if (opt.mode == CheckMode::Exact) {
    DppDistribution d = enumerate_distribution(k, opt.cap, opt.exec);
    auto atoms = exact_traces(d, b, 0.0);
    MatrixXcd acc = MatrixXcd::Zero(n, n);
    int degenerate_traces = 0, noise_failures = 0;
    double degenerate_mass = 0.0, allow = 0.0;
    for (const auto& [mask, p] : atoms) {
      try {
        CondEval ce = cond_eval(k, config_from_mask(n, mask), b);
        if (ce.degenerate) {
          ++degenerate_traces;
          degenerate_mass += p;
          continue;
        }
        acc += p * ce.m;
        allow += p * cond_allowance(n, ce.gap);
      } catch (const Error&) {
        if (p > k.tols().prob_positive) throw;
        ++noise_failures;
      }
    }
    double stat = std::max(0.0, maxnorm(acc - target) - allow);
    details["traces"] = atoms.size();
    details["degenerate_traces"] = degenerate_traces;
    details["degenerate_mass"] = degenerate_mass;
    details["noise_failures"] = noise_failures;
    return make_result("one_step_martingale", opt.mode, stat, tolerance,
                       opt.seed, details);
  }

  int nn = n * n;
  Eigen::ArrayXd total;
  chunked_trials(
      opt.trials, 3 * nn + 1, opt.exec,
      [&](int t, Eigen::ArrayXd& out) {
        CounterRng rng(opt.seed, static_cast<uint64_t>(t));
        Configuration x = sample_dpp(k, rng);
        CondEval ce = cond_eval(k, x, b);
        if (ce.degenerate) {
          out[3 * nn] = 1.0;
          return;
        }
        for (int j = 0; j < nn; ++j) {
          cplx v = ce.m(j / n, j % n);
          out[j] = v.real();
          out[nn + j] = v.imag();
          out[2 * nn + j] = std::norm(v);
        }
      },
      total);
  double inv = 1.0 / opt.trials;
  double resid = 0.0, maxvar = 0.0;
  for (int j = 0; j < nn; ++j) {
    cplx mean(total[j] * inv, total[nn + j] * inv);
    resid = std::max(resid, std::abs(mean - target(j / n, j % n)));
    maxvar = std::max(maxvar, total[2 * nn + j] * inv - std::norm(mean));
  }
  double mc_tol = 4.0 * std::sqrt(std::max(maxvar, 0.0) * inv) + 1e-12;
  details["trials"] = opt.trials;
  details["degenerate_samples"] = static_cast<int64_t>(total[3 * nn]);
  details["max_entry_variance"] = maxvar;
  return make_result("one_step_martingale", opt.mode, resid, mc_tol, opt.seed,
                     details);
}

CheckResult check_local_identities(const KernelMatrix& k, const SiteSubset& b,
                                   const MatrixXcd& q, const Configuration& pts,
                                   const CheckOptions& opt, double tolerance) {
  int n = k.size();
  require_window(b, "local");
  if (q.rows() != n || q.cols() != n)
    throw DimensionMismatch("projection size does not match kernel");
  if (maxnorm(q - q.adjoint()) > 1e-8 || maxnorm(MatrixXcd(q * q) - q) > 1e-8)
    throw InvalidProjection("q is not an orthogonal projection");
  for (int i : b.indices())
    if (q.row(i).cwiseAbs().maxCoeff() > 1e-12 ||
        q.col(i).cwiseAbs().maxCoeff() > 1e-12)
      throw RangeNotDisjoint("projection meets the window");
  for (int p : pts.sites)
    if (!b.contains(p)) throw PointOutOfRange("conditioning point off window");

  MatrixXcd t = q;
  for (int i : b.indices()) t(i, i) += 1.0;
  KernelMatrix rk = validate_kernel(MatrixXcd(t * k.entries() * t), k.tols());

  int anomalies = 0;
  double res_palm = 0.0;
  {
    PalmKernel pk = palm_many(k, pts);
    PalmKernel pr = palm_many(rk, pts);
    if (pk.degenerate != pr.degenerate)
      ++anomalies;
    else if (!pk.degenerate)
      res_palm = maxnorm(pr.matrix.entries() -
                         MatrixXcd(t * pk.matrix.entries() * t));
  }

  double res_induced = 0.0;
  bool induced_skipped = true;
  double gp = gap_probability(k, b);
  if (gp > 1e-8) {
    induced_skipped = false;
    ConditionalKernel ik = induced_kernel(k, b);
    ConditionalKernel ir = induced_kernel(rk, b);
    if ((ik.status == CondStatus::Degenerate) !=
        (ir.status == CondStatus::Degenerate))
      ++anomalies;
    else if (ik.status == CondStatus::Regular)
      res_induced = std::max(
          0.0, maxnorm(ir.matrix.entries() -
                       MatrixXcd(q * ik.matrix.entries() * q)) -
                   cond_allowance(n, ik.gap_sv) - cond_allowance(n, ir.gap_sv));
  }

  double res_cond = 0.0;
  int traces_used = 0, noise_failures = 0;
  auto probe = [&](const Configuration& xi, double p) {
    try {
      ConditionalKernel cr = conditional_kernel(rk, xi, b);
      ConditionalKernel ck = conditional_kernel(k, xi, b);
      if ((cr.status == CondStatus::Degenerate) !=
          (ck.status == CondStatus::Degenerate)) {
        ++anomalies;
        return;
      }
      if (ck.status == CondStatus::Regular)
        res_cond = std::max(
            res_cond, maxnorm(cr.matrix.entries() -
                              MatrixXcd(q * ck.matrix.entries() * q)) -
                          cond_allowance(n, ck.gap_sv) -
                          cond_allowance(n, cr.gap_sv));
      ++traces_used;
    } catch (const Error&) {
      if (p > k.tols().prob_positive) throw;
      ++noise_failures;
    }
  };
  if (opt.mode == CheckMode::Exact) {
    DppDistribution d = enumerate_distribution(k, opt.cap, opt.exec);
    for (const auto& [mask, p] : exact_traces(d, b, k.tols().prob_positive))
      probe(config_from_mask(n, mask), p);
  } else {
    for (const auto& [sites, cnt] : sampled_traces(k, b, opt, "local"))
      probe(Configuration{n, sites}, 1.0);
  }

  double stat = std::max({res_palm, res_induced, res_cond,
                          anomalies > 0 ? 1.0 : 0.0});
  ordered_json details;
  details["res_palm"] = res_palm;
  details["res_induced"] = res_induced;
  details["induced_skipped"] = induced_skipped;
  details["res_conditional"] = res_cond;
  details["traces"] = traces_used;
  details["anomalies"] = anomalies;
  details["noise_failures"] = noise_failures;
  return make_result("local_identities", opt.mode, stat, tolerance, opt.seed,
                     details);
}

CheckResult check_two_window_commutation(const KernelMatrix& k,
                                         const SiteSubset& a,
                                         const SiteSubset& b,
                                         const CheckOptions& opt,
                                         double tolerance) {
  int n = k.size();
  require_window(a, "first");
  require_window(b, "second");
  if (!a.intersect(b).empty())
    throw RangeNotDisjoint("windows overlap");
  SiteSubset u = a.set_union(b);

  int anomalies = 0, traces_used = 0, noise_failures = 0;
  double res = 0.0;
  auto probe = [&](const Configuration& xi, double p) {
    try {
      ConditionalKernel dir = conditional_kernel(k, xi, u);
      ConditionalKernel ca = conditional_kernel(k, xi, a);
      ConditionalKernel cb = conditional_kernel(k, xi, b);
      bool dd = dir.status == CondStatus::Degenerate;
      bool dab = ca.status == CondStatus::Degenerate;
      bool dba = cb.status == CondStatus::Degenerate;
      ConditionalKernel cab, cba;
      if (!dab) {
        cab = conditional_kernel(ca.matrix, xi, b);
        dab = cab.status == CondStatus::Degenerate;
      }
      if (!dba) {
        cba = conditional_kernel(cb.matrix, xi, a);
        dba = cba.status == CondStatus::Degenerate;
      }
      if (dd != dab || dd != dba) {
        ++anomalies;
        return;
      }
      if (!dd) {
        double ad = cond_allowance(n, dir.gap_sv);
        res = std::max(
            {res,
             maxnorm(cab.matrix.entries() - dir.matrix.entries()) - ad -
                 cond_allowance(n, ca.gap_sv) - cond_allowance(n, cab.gap_sv),
             maxnorm(cba.matrix.entries() - dir.matrix.entries()) - ad -
                 cond_allowance(n, cb.gap_sv) - cond_allowance(n, cba.gap_sv)});
      }
      ++traces_used;
    } catch (const Error&) {
      if (p > k.tols().prob_positive) throw;
      ++noise_failures;
    }
  };
  if (opt.mode == CheckMode::Exact) {
    DppDistribution d = enumerate_distribution(k, opt.cap, opt.exec);
    for (const auto& [mask, p] : exact_traces(d, u, k.tols().prob_positive))
      probe(config_from_mask(n, mask), p);
  } else {
    for (const auto& [sites, cnt] : sampled_traces(k, u, opt, "two_window"))
      probe(Configuration{n, sites}, 1.0);
  }

  double stat = std::max(res, anomalies > 0 ? 1.0 : 0.0);
  ordered_json details;
  details["traces"] = traces_used;
  details["anomalies"] = anomalies;
  details["noise_failures"] = noise_failures;
  return make_result("two_window_commutation", opt.mode, stat, tolerance,
                     opt.seed, details);
}

CheckResult check_martingale_sequence(const KernelMatrix& k,
                                      const std::vector<SiteSubset>& stages,
                                      const SiteSubset& w, const VectorXcd& phi,
                                      const CheckOptions& opt,
                                      double tol_order1, double tol_order2) {
  int n = k.size();
  if (stages.empty()) throw ConfigError("no stages");
  for (size_t i = 0; i < stages.size(); ++i) {
    if (!stages[i].is_subset_of(w))
      throw ExhaustionNotNested("stage leaves the window");
    if (i > 0 && !stages[i - 1].is_subset_of(stages[i]))
      throw ExhaustionNotNested("stages are not increasing");
  }
  if (phi.size() != n) throw DimensionMismatch("phi size");
  require_off(phi, w, "phi");
  VectorXcd u = phi.normalized();
  std::vector<int> wc_idx = w.complement().indices();

  // Stage 0 is the empty window; M_0 is the kernel itself.
  std::vector<SiteSubset> st;
  st.push_back(SiteSubset(n));
  for (const auto& s : stages) st.push_back(s);
  int m = static_cast<int>(st.size());

  ordered_json details;

  if (opt.mode == CheckMode::Exact) {
    DppDistribution d = enumerate_distribution(k, opt.cap, opt.exec);
    double pos = k.tols().prob_positive;

    std::vector<std::vector<std::pair<uint32_t, double>>> atoms(m);
    std::vector<std::map<uint32_t, MatrixXcd>> mats(m);
    std::vector<std::map<uint32_t, double>> allow(m);
    int degenerate_traces = 0, noise_failures = 0;
    for (int i = 0; i < m; ++i) {
      atoms[i] = exact_traces(d, st[i], 0.0);
      for (const auto& [mask, p] : atoms[i]) {
        try {
          CondEval ce = cond_eval(k, config_from_mask(n, mask), st[i]);
          if (ce.degenerate) ++degenerate_traces;
          mats[i][mask] = ce.m;
          allow[i][mask] = cond_allowance(n, ce.gap);
        } catch (const Error&) {
          if (p > pos) throw;
          ++noise_failures;
          mats[i][mask] = MatrixXcd::Zero(n, n);
          allow[i][mask] = 0.0;
        }
      }
    }

    double res_op = 0.0, res_phi = 0.0, res_pair = 0.0;
    for (int i = 0; i + 1 < m; ++i) {
      uint32_t bmask_i = st[i].mask();
      SiteSubset next_c = st[i + 1].complement();
      std::map<uint32_t, MatrixXcd> esum;
      std::map<uint32_t, double> asum;
      // The pair minors are averaged directly: minors of the averaged matrix
      // would be a different (and false) statement.
      std::map<uint32_t, Eigen::VectorXcd> msum;
      bool pairs = wc_idx.size() >= 2;
      for (const auto& [mask, p] : atoms[i + 1]) {
        uint32_t parent = mask & bmask_i;
        asum[parent] += p * allow[i + 1][mask];
        auto it = esum.find(parent);
        if (it == esum.end())
          esum.emplace(parent, (p * mats[i + 1][mask]).eval());
        else
          it->second += p * mats[i + 1][mask];
        if (pairs) {
          Eigen::VectorXcd pm = pair_minors(mats[i + 1][mask], wc_idx);
          auto mt = msum.find(parent);
          if (mt == msum.end())
            msum.emplace(parent, (p * pm).eval());
          else
            mt->second += p * pm;
        }
      }
      for (const auto& [mask, p] : atoms[i]) {
        if (p <= pos) continue;
        auto it = esum.find(mask);
        MatrixXcd expect = it == esum.end()
                               ? MatrixXcd::Zero(n, n)
                               : MatrixXcd((1.0 / p) * it->second);
        MatrixXcd base = compress(mats[i][mask], next_c, next_c);
        double a = allow[i][mask] + asum[mask] / p;
        res_op = std::max(res_op, maxnorm(expect - base) - a);
        res_phi = std::max(
            res_phi,
            std::abs((u.adjoint() * (expect - base) * u)(0, 0)) - a);
        if (pairs) {
          auto mt = msum.find(mask);
          if (mt != msum.end())
            res_pair = std::max(
                res_pair, ((1.0 / p) * mt->second -
                           pair_minors(mats[i][mask], wc_idx))
                                  .cwiseAbs()
                                  .maxCoeff() -
                              2.0 * a);
        }
      }
    }

    // Conditioned linear statistics stay L2-bounded: E[(E[S|trace])^2] <= E[S^2].
    Eigen::VectorXd g = u.cwiseAbs();
    auto stat_of = [&](uint32_t mask) {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        if (mask >> i & 1u) s += g[i];
      return s;
    };
    double es2 = 0.0;
    for (const auto& [mask, p] : d.atoms(0.0)) {
      double s = stat_of(mask);
      es2 += p * s * s;
    }
    double l2_violation = 0.0;
    for (int i = 1; i < m; ++i) {
      uint32_t bmask = st[i].mask();
      std::map<uint32_t, double> num, den;
      for (const auto& [mask, p] : d.atoms(0.0)) {
        num[mask & bmask] += p * stat_of(mask);
        den[mask & bmask] += p;
      }
      double beta = 0.0;
      for (const auto& [xi, pden] : den) {
        if (pden <= pos) continue;
        double c = num[xi] / pden;
        beta += pden * c * c;
      }
      l2_violation = std::max(l2_violation, beta - es2);
    }

    double stat = std::max({res_op, res_phi,
                            (tol_order1 / tol_order2) * res_pair,
                            l2_violation});
    details["res_operator"] = res_op;
    details["res_phi"] = res_phi;
    details["res_pair_minors"] = res_pair;
    details["l2_violation"] = l2_violation;
    details["degenerate_traces"] = degenerate_traces;
    details["noise_failures"] = noise_failures;
    return make_result("martingale_sequence", opt.mode, stat, tol_order1,
                       opt.seed, details);
  }

  // Monte Carlo: martingale increments between consecutive stages have mean
  // zero, also against the current value as a test function. Envelopes are
  // 4 sigma from the variance over all trials, so rare continuations enter
  // with their actual frequency on both sides.
  SampleBatch batch = sample_batch(k, opt.trials, opt.seed, "mart", opt.exec);
  std::vector<std::map<std::vector<int>, double>> f1(m);
  std::vector<std::vector<const double*>> val(
      m, std::vector<const double*>(batch.configs.size()));
  for (int i = 0; i < m; ++i) {
    for (size_t t = 0; t < batch.configs.size(); ++t) {
      std::vector<int> key = batch.configs[t].restrict_to(st[i]).sites;
      auto [it, fresh] = f1[i].emplace(std::move(key), 0.0);
      if (fresh) {
        CondEval ce = cond_eval(k, Configuration{n, it->first}, st[i]);
        it->second = (u.adjoint() * ce.m * u)(0, 0).real();
      }
      val[i][t] = &it->second;
    }
  }
  double excess = 0.0;
  std::vector<double> inc_mean, inc_sem, orth_mean, orth_sem;
  double inv = 1.0 / opt.trials;
  for (int i = 0; i + 1 < m; ++i) {
    double s = 0.0, s2 = 0.0, w_ = 0.0, w2_ = 0.0;
    for (size_t t = 0; t < batch.configs.size(); ++t) {
      double fi = *val[i][t];
      double du = *val[i + 1][t] - fi;
      double dw = du * fi;
      s += du;
      s2 += du * du;
      w_ += dw;
      w2_ += dw * dw;
    }
    double ms = s * inv, mw = w_ * inv;
    double sem_s = std::sqrt(std::max(0.0, s2 * inv - ms * ms) * inv);
    double sem_w = std::sqrt(std::max(0.0, w2_ * inv - mw * mw) * inv);
    inc_mean.push_back(ms);
    inc_sem.push_back(sem_s);
    orth_mean.push_back(mw);
    orth_sem.push_back(sem_w);
    excess = std::max(excess, std::abs(ms) - 4.0 * sem_s);
    excess = std::max(excess, std::abs(mw) - 4.0 * sem_w);
  }
  details["trials"] = opt.trials;
  details["increment_mean"] = inc_mean;
  details["increment_sem"] = inc_sem;
  details["orthogonality_mean"] = orth_mean;
  details["orthogonality_sem"] = orth_sem;
  details["order2"] = "exact_only";
  return make_result("martingale_sequence", opt.mode, std::max(0.0, excess),
                     tol_order1, opt.seed, details);
}

CheckResult check_variance_bound(const KernelMatrix& k, const SiteSubset& b,
                                 const VectorXcd& phi, const CheckOptions& opt,
                                 double tolerance) {
  int n = k.size();
  require_window(b, "variance");
  if (phi.size() != n) throw DimensionMismatch("phi size");
  require_off(phi, b, "phi");
  VectorXcd u = phi.normalized();
  SiteSubset bc = b.complement();

  VectorXcd ku = k.entries() * u;
  double bound = 0.0;
  for (int i : b.indices()) bound += std::norm(ku[i]);
  MatrixXcd base = compress(k.entries(), bc, bc);
  bool proj = k.is_projection();
  ordered_json details;
  details["bound"] = bound;
  details["projection_case"] = proj;

  if (opt.mode == CheckMode::Exact) {
    DppDistribution d = enumerate_distribution(k, opt.cap, opt.exec);
    double mean = 0.0, second = 0.0, dom = 0.0, allow = 0.0;
    int noise_failures = 0;
    for (const auto& [mask, p] : exact_traces(d, b, 0.0)) {
      try {
        CondEval ce = cond_eval(k, config_from_mask(n, mask), b);
        double f = (u.adjoint() * ce.m * u)(0, 0).real();
        mean += p * f;
        second += p * f * f;
        allow += p * cond_allowance(n, ce.gap);
        if (proj) dom += p * ((ce.m - base) * u).squaredNorm();
      } catch (const Error&) {
        if (p > k.tols().prob_positive) throw;
        ++noise_failures;
      }
    }
    double var = second - mean * mean;
    double res_dom = proj ? std::max(0.0, std::abs(dom - bound) - 4.0 * allow)
                          : 0.0;
    details["variance"] = var;
    details["dominating_residual"] = res_dom;
    details["noise_failures"] = noise_failures;
    double stat = std::max(var - bound - 4.0 * allow, res_dom);
    return make_result("variance_bound", opt.mode, stat, tolerance, opt.seed,
                       details);
  }

  Eigen::ArrayXd total;
  chunked_trials(
      opt.trials, 6, opt.exec,
      [&](int t, Eigen::ArrayXd& out) {
        CounterRng rng(opt.seed, static_cast<uint64_t>(t));
        Configuration x = sample_dpp(k, rng);
        CondEval ce = cond_eval(k, x, b);
        double f = (u.adjoint() * ce.m * u)(0, 0).real();
        out[0] = f;
        out[1] = f * f;
        out[2] = f * f * f;
        out[3] = f * f * f * f;
        if (proj) {
          double dv = ((ce.m - base) * u).squaredNorm();
          out[4] = dv;
          out[5] = dv * dv;
        }
      },
      total);
  double inv = 1.0 / opt.trials;
  double m1 = total[0] * inv, m2 = total[1] * inv, m3 = total[2] * inv,
         m4 = total[3] * inv;
  double var = std::max(0.0, m2 - m1 * m1);
  // central fourth moment, for the standard error of the sample variance
  double c4 = m4 - 4.0 * m3 * m1 + 6.0 * m2 * m1 * m1 - 3.0 * std::pow(m1, 4);
  double se_var = std::sqrt(std::max(0.0, c4 - var * var) * inv);
  double stat = var - bound;
  double res_dom = 0.0, se_dom = 0.0;
  if (proj) {
    double dmean = total[4] * inv;
    double dvar = std::max(0.0, total[5] * inv - dmean * dmean);
    se_dom = std::sqrt(dvar * inv);
    res_dom = std::abs(dmean - bound);
    stat = std::max(stat, res_dom);
  }
  details["variance"] = var;
  details["dominating_residual"] = res_dom;
  details["trials"] = opt.trials;
  double mc_tol = tolerance + 4.0 * std::max(se_var, se_dom);
  return make_result("variance_bound", opt.mode, stat, mc_tol, opt.seed,
                     details);
}

CheckResult check_completeness(const KernelMatrix& k, const CheckOptions& opt,
                               double fp_tolerance) {
  if (!k.is_projection())
    throw NotAProjection("completeness check needs a projection kernel");
  int n = k.size();
  int r = static_cast<int>((k.eigenvalues().array() > 0.5).count());
  MatrixXcd vr(n, r);
  {
    int c = 0;
    for (int i = 0; i < n; ++i)
      if (k.eigenvalues()[i] > 0.5) vr.col(c++) = k.eigenvectors().col(i);
  }

  int failures = 0, anomalies = 0, skipped = 0;
  double max_fp = 0.0, min_gram = 1.0, min_sv = 1.0;
  for (int t = 0; t < opt.trials; ++t) {
    CounterRng rng(opt.seed, stream_id("completeness", t));
    Configuration x = sample_dpp(k, rng);
    if (x.count() != r) {
      ++failures;
      continue;
    }
    if (r == 0) continue;

    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(block_of(k.entries(), x.sites),
                                                Eigen::EigenvaluesOnly);
    double lmin = es.eigenvalues().minCoeff();
    double lmax = es.eigenvalues().maxCoeff();
    double gram_ratio = lmin / std::max(1.0, lmax);
    min_gram = std::min(min_gram, gram_ratio);
    if (gram_ratio <= 1e-10) ++failures;

    MatrixXcd ev(r, r);
    for (int i = 0; i < r; ++i) ev.row(i) = vr.row(x.sites[i]);
    Eigen::JacobiSVD<MatrixXcd> svd(ev);
    double sv_ratio =
        svd.singularValues()(r - 1) / std::max(1.0, svd.singularValues()(0));
    min_sv = std::min(min_sv, sv_ratio);
    if (sv_ratio <= 1e-10) ++failures;

    // A range vector vanishing on all sampled points but one is fixed by the
    // kernel conditioned outside the block holding that point.
    int drop = x.sites[rng.below(r)];
    VectorXcd h;
    if (r == 1) {
      h = vr.col(0);
    } else {
      MatrixXcd rows(r - 1, r);
      int c = 0;
      for (int s : x.sites)
        if (s != drop) rows.row(c++) = vr.row(s);
      Eigen::JacobiSVD<MatrixXcd> nsvd(rows, Eigen::ComputeFullV);
      h = vr * nsvd.matrixV().col(r - 1);
    }
    SiteSubset bset(n);
    bset.add(drop);
    for (int i = 0; i < n; ++i)
      if (!x.contains(i) && rng.bernoulli(0.3)) bset.add(i);
    VectorXcd hb = VectorXcd::Zero(n);
    for (int i : bset.indices()) hb[i] = h[i];
    if (hb.norm() < 1e-10) {
      ++skipped;
      continue;
    }
    ConditionalKernel ck = conditional_kernel(k, x, bset.complement());
    if (ck.status == CondStatus::Degenerate) {
      ++anomalies;
      continue;
    }
    double res = (ck.matrix.entries() * hb - hb).norm() / hb.norm();
    max_fp = std::max(max_fp, res);
  }

  int count_failures = 0;
  bool exact_part = opt.mode == CheckMode::Exact && n <= opt.cap;
  if (exact_part) {
    DppDistribution d = enumerate_distribution(k, opt.cap, opt.exec);
    SiteSubset b0 = SiteSubset::prefix(n, std::max(1, n / 2));
    SiteSubset b0c = b0.complement();
    uint32_t bmask = b0.mask();
    for (const auto& [mask, p] : d.atoms(k.tols().prob_positive)) {
      int want = __builtin_popcount(mask & bmask);
      DppDistribution slice = conditional_slice(d, b0c, mask & b0c.mask());
      double pc = 0.0;
      for (const auto& [sm, sp] : slice.atoms(0.0))
        if (__builtin_popcount(sm & bmask) == want) pc += sp;
      if (pc <= 0.0) ++count_failures;
    }
  }

  double stat = failures + anomalies + count_failures +
                1e6 * std::max(0.0, max_fp - fp_tolerance);
  ordered_json details;
  details["rank"] = r;
  details["trials"] = opt.trials;
  details["failures"] = failures;
  details["anomalies"] = anomalies;
  details["count_failures"] = exact_part ? ordered_json(count_failures)
                                         : ordered_json("skipped");
  details["skipped_degenerate_geometry"] = skipped;
  details["max_fixed_point_residual"] = max_fp;
  details["min_gram_ratio"] = min_gram;
  details["min_evaluation_sv_ratio"] = min_sv;
  return make_result("completeness", opt.mode, stat, 0.0, opt.seed, details);
}

CheckResult check_tail_mixing(const KernelMatrix& k, const SiteSubset& d,
                              const std::vector<int>& depths,
                              const CheckOptions& opt, double event_threshold) {
  int n = k.size();
  require_window(d, "event");
  if (depths.empty()) throw ConfigError("no depths");
  for (size_t i = 0; i < depths.size(); ++i) {
    if (depths[i] < 0 || depths[i] > n) throw PointOutOfRange("depth");
    if (i > 0 && depths[i] <= depths[i - 1])
      throw ConfigError("depths must increase");
  }
  if (!d.is_subset_of(SiteSubset::prefix(n, depths.front())))
    throw RangeNotDisjoint("event sites must precede every window");
  std::vector<int> d_idx = d.indices();
  int nd = static_cast<int>(depths.size());
  MatrixXcd kd = k.entries();
  double base_gap = gap_det(kd, d_idx);
  MatrixXcd base_block = block_of(kd, d_idx);

  std::vector<double> tstat(nd, 0.0), estat(nd, 0.0), tsem(nd, 0.0),
      esem(nd, 0.0);
  std::vector<double> tdiff(nd, 0.0), ediff(nd, 0.0), tdsem(nd, 0.0),
      edsem(nd, 0.0);
  ordered_json details;
  details["depths"] = depths;

  if (opt.mode == CheckMode::Exact) {
    if (n > opt.cap) throw TooLarge("exact tail mixing needs enumeration");
    DppDistribution dist = enumerate_distribution(k, opt.cap, opt.exec);
    int noise_failures = 0;
    std::vector<double> aj(nd, 0.0);
    for (int j = 0; j < nd; ++j) {
      SiteSubset w = SiteSubset::prefix(n, depths[j]).complement();
      for (const auto& [mask, p] : exact_traces(dist, w, 0.0)) {
        try {
          CondEval ce = cond_eval(k, config_from_mask(n, mask), w);
          MatrixXcd blk = block_of(ce.m, d_idx);
          tstat[j] += p * tracenorm(blk - base_block);
          estat[j] += p * std::abs(gap_det(ce.m, d_idx) - base_gap);
          aj[j] += p * d_idx.size() * cond_allowance(n, ce.gap);
        } catch (const Error&) {
          if (p > k.tols().prob_positive) throw;
          ++noise_failures;
        }
      }
    }
    double viol = 0.0;
    for (int j = 0; j + 1 < nd; ++j) {
      double slack = 1e-12 + aj[j] + aj[j + 1];
      viol = std::max(viol, tstat[j + 1] - tstat[j] - slack);
      viol = std::max(viol, estat[j + 1] - estat[j] - slack);
    }
    double stat = std::max(estat[nd - 1] - aj[nd - 1], viol);
    details["noise_failures"] = noise_failures;
    details["trace_stat"] = tstat;
    details["event_stat"] = estat;
    details["monotonicity_violation"] = std::max(0.0, viol);
    return make_result("tail_mixing", opt.mode, stat, event_threshold,
                       opt.seed, details);
  }

  // One sample per trial evaluated at every depth, so consecutive depths are
  // compared with common random numbers.
  int width = 4 * nd;
  Eigen::ArrayXd total;
  chunked_trials(
      opt.trials, width, opt.exec,
      [&](int t, Eigen::ArrayXd& out) {
        CounterRng rng(opt.seed, static_cast<uint64_t>(t));
        Configuration x = sample_dpp(k, rng);
        std::vector<double> tv(nd), ev(nd);
        for (int j = 0; j < nd; ++j) {
          SiteSubset w = SiteSubset::prefix(n, depths[j]).complement();
          CondEval ce = cond_eval(k, x, w);
          tv[j] = tracenorm(block_of(ce.m, d_idx) - base_block);
          ev[j] = std::abs(gap_det(ce.m, d_idx) - base_gap);
        }
        for (int j = 0; j < nd; ++j) {
          out[4 * j] = tv[j];
          out[4 * j + 1] = tv[j] * tv[j];
          out[4 * j + 2] = ev[j];
          out[4 * j + 3] = ev[j] * ev[j];
        }
      },
      total);
  double inv = 1.0 / opt.trials;
  for (int j = 0; j < nd; ++j) {
    tstat[j] = total[4 * j] * inv;
    tsem[j] = std::sqrt(
        std::max(0.0, total[4 * j + 1] * inv - tstat[j] * tstat[j]) * inv);
    estat[j] = total[4 * j + 2] * inv;
    esem[j] = std::sqrt(
        std::max(0.0, total[4 * j + 3] * inv - estat[j] * estat[j]) * inv);
  }
  // paired differences for the monotonicity test
  Eigen::ArrayXd dtotal;
  chunked_trials(
      opt.trials, 4 * std::max(0, nd - 1), opt.exec,
      [&](int t, Eigen::ArrayXd& out) {
        CounterRng rng(opt.seed, static_cast<uint64_t>(t));
        Configuration x = sample_dpp(k, rng);
        double prev_t = 0.0, prev_e = 0.0;
        for (int j = 0; j < nd; ++j) {
          SiteSubset w = SiteSubset::prefix(n, depths[j]).complement();
          CondEval ce = cond_eval(k, x, w);
          double tv = tracenorm(block_of(ce.m, d_idx) - base_block);
          double ev = std::abs(gap_det(ce.m, d_idx) - base_gap);
          if (j > 0) {
            double dt = tv - prev_t, de = ev - prev_e;
            out[4 * (j - 1)] = dt;
            out[4 * (j - 1) + 1] = dt * dt;
            out[4 * (j - 1) + 2] = de;
            out[4 * (j - 1) + 3] = de * de;
          }
          prev_t = tv;
          prev_e = ev;
        }
      },
      dtotal);
  double viol = 0.0;
  for (int j = 0; j + 1 < nd; ++j) {
    tdiff[j] = dtotal[4 * j] * inv;
    tdsem[j] = std::sqrt(
        std::max(0.0, dtotal[4 * j + 1] * inv - tdiff[j] * tdiff[j]) * inv);
    ediff[j] = dtotal[4 * j + 2] * inv;
    edsem[j] = std::sqrt(
        std::max(0.0, dtotal[4 * j + 3] * inv - ediff[j] * ediff[j]) * inv);
    viol = std::max(viol, tdiff[j] - 2.0 * tdsem[j]);
    viol = std::max(viol, ediff[j] - 2.0 * edsem[j]);
  }
  double stat = std::max(estat[nd - 1], viol);
  details["trials"] = opt.trials;
  details["trace_stat"] = tstat;
  details["trace_sem"] = tsem;
  details["event_stat"] = estat;
  details["event_sem"] = esem;
  details["monotonicity_violation"] = std::max(0.0, viol);
  return make_result("tail_mixing", opt.mode, stat, event_threshold, opt.seed,
                     details);
}

CheckResult check_measure_consistency(const KernelMatrix& k, const SiteSubset& b,
                                      const SiteSubset& w1, const SiteSubset& w2,
                                      const CheckOptions& opt,
                                      double tolerance) {
  int n = k.size();
  require_window(b, "slice");
  require_window(w1, "first");
  require_window(w2, "second");
  if (!w1.intersect(w2).empty())
    throw RangeNotDisjoint("push-forward windows overlap");
  ordered_json details;

  if (opt.mode == CheckMode::MonteCarlo) {
    // Reduced form on any ground size: the empirical law of X ∩ W2 under the
    // most frequent trace is compared with samples drawn from the conditional
    // kernel at that trace.
    auto counts = sampled_traces(k, b, opt, "measure");
    const std::vector<int>* best = nullptr;
    int best_cnt = -1;
    for (const auto& [sites, cnt] : counts)
      if (cnt > best_cnt) {
        best = &sites;
        best_cnt = cnt;
      }
    Configuration xi{n, *best};
    ConditionalKernel ck = conditional_kernel(k, xi, b);
    if (ck.status == CondStatus::Degenerate)
      throw DegenerateKernel("most frequent trace is degenerate");

    // The conditional kernel describes X minus the conditioning window, so
    // the laws are compared on W2 with that window removed.
    std::vector<int> w2_idx = w2.minus(b).indices();
    int atoms = 1 << w2_idx.size();
    auto w2mask = [&](const Configuration& c) {
      uint32_t m = 0;
      for (size_t i = 0; i < w2_idx.size(); ++i)
        if (c.contains(w2_idx[i])) m |= 1u << i;
      return m;
    };
    std::vector<double> emp1(atoms, 0.0), emp2(atoms, 0.0);
    SampleBatch full = sample_batch(k, opt.trials, opt.seed, "measure", opt.exec);
    int n1 = 0;
    for (const Configuration& c : full.configs)
      if (c.restrict_to(b).sites == *best) {
        emp1[w2mask(c)] += 1.0;
        ++n1;
      }
    SampleBatch cond = sample_batch(ck.matrix, opt.trials,
                                    stream_id("measure2", opt.seed), "measure2",
                                    opt.exec);
    for (const Configuration& c : cond.configs) emp2[w2mask(c)] += 1.0;
    double tv = 0.0;
    for (int a = 0; a < atoms; ++a)
      tv += std::abs(emp1[a] / n1 - emp2[a] / opt.trials);
    tv *= 0.5;
    double mc_tol = tolerance + 2.0 * (std::sqrt(double(atoms) / n1) +
                                       std::sqrt(double(atoms) / opt.trials));
    details["trace_samples"] = n1;
    details["cond_samples"] = opt.trials;
    details["tv"] = tv;
    return make_result("measure_consistency", opt.mode, tv, mc_tol, opt.seed,
                       details);
  }

  if (n > opt.cap) throw TooLarge("exact measure consistency needs enumeration");
  DppDistribution dist = enumerate_distribution(k, opt.cap, opt.exec);
  double pos = k.tols().prob_positive;
  int anomalies = 0;

  // conditional kernel law == Bayes slice of the exact law
  double tv1 = 0.0;
  int traces1 = 0;
  for (const auto& [mask, p] : exact_traces(dist, b, pos)) {
    DppDistribution lhs = conditional_slice(dist, b, mask);
    ConditionalKernel ck = conditional_kernel(k, config_from_mask(n, mask), b);
    if (ck.status == CondStatus::Degenerate) {
      ++anomalies;
      continue;
    }
    DppDistribution rhs = enumerate_distribution(ck.matrix, opt.cap, opt.exec);
    tv1 = std::max(tv1, tv_distance(lhs, rhs) - cond_allowance(n, ck.gap_sv));
    ++traces1;
  }

  // push-forward to a disjoint window commutes with conditioning
  double tv2 = 0.0;
  for (const auto& [mask, p] : exact_traces(dist, w1, pos)) {
    DppDistribution lhs = marginal(conditional_slice(dist, w1, mask), w2);
    ConditionalKernel ck = conditional_kernel(k, config_from_mask(n, mask), w1);
    if (ck.status == CondStatus::Degenerate) {
      ++anomalies;
      continue;
    }
    DppDistribution rhs =
        marginal(enumerate_distribution(ck.matrix, opt.cap, opt.exec), w2);
    tv2 = std::max(tv2, tv_distance(lhs, rhs) - cond_allowance(n, ck.gap_sv));
  }

  // measure-valued one-step tower: mixing the refined conditional laws over
  // the coarse trace returns the coarse conditional law on the far field
  SiteSubset w = w1.set_union(w2);
  double tv3 = 0.0;
  bool part3 = w.count() <= 8 && n <= 12;
  if (part3) {
    SiteSubset wc = w.complement();
    uint32_t w1mask = w1.mask();
    auto refined = exact_traces(dist, w, 0.0);
    for (const auto& [mask, p] : exact_traces(dist, w1, pos)) {
      DppDistribution lhs = marginal(conditional_slice(dist, w1, mask), wc);
      DppDistribution mix;
      mix.n = n;
      mix.probs.assign(size_t{1} << n, 0.0);
      double allow3 = 0.0;
      for (const auto& [rmask, rp] : refined) {
        if ((rmask & w1mask) != mask || rp <= 0.0) continue;
        ConditionalKernel ck =
            conditional_kernel(k, config_from_mask(n, rmask), w);
        if (ck.status == CondStatus::Degenerate) continue;
        DppDistribution comp =
            enumerate_distribution(ck.matrix, opt.cap, opt.exec);
        double wgt = rp / p;
        allow3 += wgt * cond_allowance(n, ck.gap_sv);
        for (size_t s = 0; s < comp.probs.size(); ++s)
          mix.probs[s] += wgt * comp.probs[s];
      }
      tv3 = std::max(tv3, tv_distance(lhs, mix) - allow3);
    }
  }

  // conditional point counts keep positive probability
  int count_failures = 0;
  SiteSubset bc = b.complement();
  uint32_t bmask = b.mask();
  for (const auto& [mask, p] : dist.atoms(pos)) {
    int want = __builtin_popcount(mask & bmask);
    DppDistribution slice = conditional_slice(dist, bc, mask & bc.mask());
    double pc = 0.0;
    for (const auto& [sm, sp] : slice.atoms(0.0))
      if (__builtin_popcount(sm & bmask) == want) pc += sp;
    if (pc <= 0.0) ++count_failures;
  }

  double stat = std::max({tv1, tv2, tv3}) + count_failures + anomalies;
  details["tv_slice"] = tv1;
  details["tv_pushforward"] = tv2;
  details["tv_tower"] = part3 ? ordered_json(tv3) : ordered_json("skipped");
  details["traces"] = traces1;
  details["count_failures"] = count_failures;
  details["anomalies"] = anomalies;
  return make_result("measure_consistency", opt.mode, stat, tolerance,
                     opt.seed, details);
}

CheckInstance draw_instance(const KernelMatrix& k, uint64_t seed, uint64_t idx) {
  int n = k.size();
  if (n < 2) throw ConfigError("instance needs at least two sites");
  CounterRng rng(seed, stream_id("instance", idx));
  CheckInstance inst;

  int region_size = std::min(n, 10);
  std::vector<int> region;
  if (region_size == n) {
    region.resize(n);
    std::iota(region.begin(), region.end(), 0);
  } else {
    SiteSubset picked(n);
    while (static_cast<int>(region.size()) < region_size) {
      int s = rng.below(n);
      if (!picked.contains(s)) {
        picked.add(s);
        region.push_back(s);
      }
    }
    std::sort(region.begin(), region.end());
  }

  auto draw_subset = [&](const std::vector<int>& from, double p) {
    SiteSubset s(n);
    for (int i : from)
      if (rng.bernoulli(p)) s.add(i);
    return s;
  };
  auto force_one = [&](SiteSubset& s, const std::vector<int>& from) {
    if (s.empty() && !from.empty()) s.add(from[rng.below(from.size())]);
  };

  for (;;) {
    inst.b = draw_subset(region, 0.5);
    int c = inst.b.count();
    if (c >= 1 && c <= region_size - 1) break;
  }
  std::vector<int> rest;
  for (int i : region)
    if (!inst.b.contains(i)) rest.push_back(i);
  inst.a = draw_subset(rest, 0.5);
  force_one(inst.a, rest);

  for (;;) {
    inst.w1 = draw_subset(region, 0.4);
    int c = inst.w1.count();
    if (c >= 1 && c <= region_size - 1) break;
  }
  std::vector<int> rest2;
  for (int i : region)
    if (!inst.w1.contains(i)) rest2.push_back(i);
  inst.w2 = draw_subset(rest2, 0.5);
  force_one(inst.w2, rest2);

  std::vector<int> bsites = inst.b.indices();
  SiteSubset ptset = draw_subset(bsites, 0.4);
  force_one(ptset, bsites);
  inst.pts = Configuration::from_subset(ptset);

  for (;;) {
    inst.wseq = draw_subset(region, 0.5);
    int c = inst.wseq.count();
    if (c >= 1 && c <= region_size - 1) break;
  }
  std::vector<int> wsites = inst.wseq.indices();
  SiteSubset s1 = draw_subset(wsites, 0.4);
  force_one(s1, wsites);
  SiteSubset s2 = s1;
  for (int i : wsites)
    if (!s1.contains(i) && rng.bernoulli(0.5)) s2.add(i);
  inst.stages = {s1, s2, inst.wseq};

  bool cx = !k.is_real();
  auto gaussian_off = [&](const SiteSubset& off) {
    VectorXcd v = VectorXcd::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (off.contains(i)) continue;
      v[i] = cx ? cplx(rng.normal(), rng.normal()) : cplx(rng.normal(), 0.0);
    }
    double nm = v.norm();
    if (nm < 1e-12) v[off.complement().indices().front()] = 1.0;
    return VectorXcd(v / v.norm());
  };
  inst.phi = gaussian_off(inst.b);
  inst.phi_seq = gaussian_off(inst.wseq);

  // projection with range inside the off-window coordinates, built there and
  // embedded so the window rows stay exactly zero
  std::vector<int> off_b;
  for (int i = 0; i < n; ++i)
    if (!inst.b.contains(i)) off_b.push_back(i);
  int qr = std::min<int>(1 + rng.below(2), static_cast<int>(off_b.size()));
  MatrixXcd g(off_b.size(), qr);
  for (int i = 0; i < g.rows(); ++i)
    for (int j = 0; j < qr; ++j)
      g(i, j) = cx ? cplx(rng.normal(), rng.normal())
                   : cplx(rng.normal(), 0.0);
  Eigen::HouseholderQR<MatrixXcd> qrdec(g);
  MatrixXcd thin =
      qrdec.householderQ() * MatrixXcd::Identity(g.rows(), qr);
  MatrixXcd embed = MatrixXcd::Zero(n, qr);
  for (size_t i = 0; i < off_b.size(); ++i) embed.row(off_b[i]) = thin.row(i);
  inst.q = embed * embed.adjoint();

  return inst;
}

}  // namespace dppcond
