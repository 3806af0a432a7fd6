#pragma once

#include <json.hpp>

#include "dppcond/sampler.hpp"

namespace dppcond {

enum class CheckMode { Exact, MonteCarlo };

const char* check_mode_name(CheckMode m);

// Outcome of one verification check. pass <=> statistic <= tolerance.
// Exact-mode tolerances are fixed; Monte Carlo tolerances carry a 4-sigma
// CLT allowance computed from the empirical variance.
struct CheckResult {
  std::string check_id;
  CheckMode mode = CheckMode::Exact;
  double statistic = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  uint64_t seed = 0;
  nlohmann::ordered_json details;
};

CheckResult make_result(std::string check_id, CheckMode mode, double statistic,
                        double tolerance, uint64_t seed,
                        nlohmann::ordered_json details);

namespace check_tol {
inline constexpr double one_step = 1e-9;
inline constexpr double local = 1e-9;
inline constexpr double two_window = 1e-9;
inline constexpr double mart_order1 = 1e-9;
inline constexpr double mart_order2 = 1e-8;
inline constexpr double variance = 1e-9;
inline constexpr double fixed_point = 1e-8;
inline constexpr double tail_event = 1e-2;
inline constexpr double measure_tv = 1e-9;
}  // namespace check_tol

struct CheckOptions {
  CheckMode mode = CheckMode::Exact;
  int trials = 10000;
  uint64_t seed = 0;
  int cap = ENUM_DEFAULT_CAP;
  Exec exec = Exec::Parallel;
};

// E[K^{[X,B]}] = chi_{B^c} K chi_{B^c}.
CheckResult check_one_step_martingale(const KernelMatrix& k, const SiteSubset& b,
                                      const CheckOptions& opt,
                                      double tolerance = check_tol::one_step);

// Compression identities for R = (Q + chi_B) K (Q + chi_B): Palm kernels,
// induced kernels, and the full conditional kernel compress through Q.
CheckResult check_local_identities(const KernelMatrix& k, const SiteSubset& b,
                                   const Eigen::MatrixXcd& q,
                                   const Configuration& pts,
                                   const CheckOptions& opt,
                                   double tolerance = check_tol::local);

// Conditioning on two disjoint windows in either order equals conditioning on
// their union.
CheckResult check_two_window_commutation(const KernelMatrix& k,
                                         const SiteSubset& a,
                                         const SiteSubset& b,
                                         const CheckOptions& opt,
                                         double tolerance = check_tol::two_window);

// The compressed conditional kernels along a nested window sequence form an
// operator-valued martingale; also checked on 2x2 minors (second exterior
// power) and for L^2 boundedness of conditioned linear statistics.
CheckResult check_martingale_sequence(
    const KernelMatrix& k, const std::vector<SiteSubset>& stages,
    const SiteSubset& w, const Eigen::VectorXcd& phi, const CheckOptions& opt,
    double tol_order1 = check_tol::mart_order1,
    double tol_order2 = check_tol::mart_order2);

// Var <phi, K^{[X,B]} phi> <= |phi|^2 |chi_B K phi|^2, with the exact
// dominating identity in the projection case.
CheckResult check_variance_bound(const KernelMatrix& k, const SiteSubset& b,
                                 const Eigen::VectorXcd& phi,
                                 const CheckOptions& opt,
                                 double tolerance = check_tol::variance);

// For projection kernels: sampled configurations determine the range (full
// Gram rank, trivial evaluation null space) and conditional kernels fix
// vectors vanishing outside the window.
CheckResult check_completeness(const KernelMatrix& k, const CheckOptions& opt,
                               double fp_tolerance = check_tol::fixed_point);

// Conditioning on everything outside a growing prefix window forgets the
// far field: compressions approach the unconditioned kernel.
CheckResult check_tail_mixing(const KernelMatrix& k, const SiteSubset& d,
                              const std::vector<int>& depths,
                              const CheckOptions& opt,
                              double event_threshold = check_tol::tail_event);

// The conditional kernel's law equals the Bayes slice of the exact law;
// push-forwards and the measure-valued one-step tower agree; conditional
// point counts stay achievable.
CheckResult check_measure_consistency(const KernelMatrix& k, const SiteSubset& b,
                                      const SiteSubset& w1, const SiteSubset& w2,
                                      const CheckOptions& opt,
                                      double tolerance = check_tol::measure_tv);

// Randomized windows, projections and test vectors for a kernel, drawn
// deterministically from (seed, index).
struct CheckInstance {
  SiteSubset b;
  SiteSubset a;       // disjoint from b
  SiteSubset w1, w2;  // disjoint pair
  Eigen::MatrixXcd q;  // projection supported off b
  Configuration pts;   // inside b
  std::vector<SiteSubset> stages;  // nested, union = wseq
  SiteSubset wseq;
  Eigen::VectorXcd phi;       // unit, supported off b
  Eigen::VectorXcd phi_seq;   // unit, supported off wseq
};

CheckInstance draw_instance(const KernelMatrix& k, uint64_t seed, uint64_t idx);

}  // namespace dppcond
