#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace dppcond {

using cplx = std::complex<double>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define DPPCOND_DEFINE_ERROR(Name)                                   \
  struct Name final : Error {                                        \
    explicit Name(const std::string& m) : Error(#Name ": " + m) {}   \
  }

DPPCOND_DEFINE_ERROR(DimensionMismatch);
DPPCOND_DEFINE_ERROR(NotHermitian);
DPPCOND_DEFINE_ERROR(SpectrumOutOfRange);
DPPCOND_DEFINE_ERROR(SquareRootFailure);
DPPCOND_DEFINE_ERROR(NotAProjection);
DPPCOND_DEFINE_ERROR(InvalidProjection);
DPPCOND_DEFINE_ERROR(RangeNotDisjoint);
DPPCOND_DEFINE_ERROR(DuplicatePoint);
DPPCOND_DEFINE_ERROR(PointOutOfRange);
DPPCOND_DEFINE_ERROR(NotContractive);
DPPCOND_DEFINE_ERROR(ZeroGapProbability);
DPPCOND_DEFINE_ERROR(ZeroProbabilityCondition);
DPPCOND_DEFINE_ERROR(ZeroCorrelation);
DPPCOND_DEFINE_ERROR(ExhaustionNotNested);
DPPCOND_DEFINE_ERROR(DegenerateKernel);
DPPCOND_DEFINE_ERROR(NotADistribution);
DPPCOND_DEFINE_ERROR(NumericalBreakdown);
DPPCOND_DEFINE_ERROR(TooLarge);
DPPCOND_DEFINE_ERROR(ConfigError);
DPPCOND_DEFINE_ERROR(ParseError);
DPPCOND_DEFINE_ERROR(IoFailure);

#undef DPPCOND_DEFINE_ERROR

// Subset of a finite ground set {0, ..., n-1}.
class SiteSubset {
 public:
  SiteSubset() = default;
  explicit SiteSubset(int n) : bits_(static_cast<size_t>(check_n(n)), 0) {}

  static SiteSubset of(int n, std::initializer_list<int> idx) {
    SiteSubset s(n);
    for (int i : idx) s.add(i);
    return s;
  }
  static SiteSubset from_indices(int n, const std::vector<int>& idx) {
    SiteSubset s(n);
    for (int i : idx) s.add(i);
    return s;
  }
  static SiteSubset full(int n) {
    SiteSubset s(n);
    std::fill(s.bits_.begin(), s.bits_.end(), 1);
    return s;
  }
  // First k sites, in ground-set order.
  static SiteSubset prefix(int n, int k) {
    SiteSubset s(n);
    for (int i = 0; i < k && i < n; ++i) s.bits_[i] = 1;
    return s;
  }
  static SiteSubset from_mask(int n, uint32_t mask) {
    SiteSubset s(n);
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1u) s.bits_[i] = 1;
    return s;
  }

  int ground_size() const { return static_cast<int>(bits_.size()); }
  int count() const {
    int c = 0;
    for (uint8_t b : bits_) c += b;
    return c;
  }
  bool empty() const { return count() == 0; }
  bool contains(int i) const { return in_range(i) && bits_[i]; }
  void add(int i) {
    if (!in_range(i)) throw PointOutOfRange("site " + std::to_string(i));
    bits_[i] = 1;
  }
  void remove(int i) {
    if (in_range(i)) bits_[i] = 0;
  }

  SiteSubset complement() const {
    SiteSubset s = *this;
    for (auto& b : s.bits_) b = b ? 0 : 1;
    return s;
  }
  SiteSubset set_union(const SiteSubset& o) const {
    SiteSubset s = aligned(o);
    for (size_t i = 0; i < bits_.size(); ++i) s.bits_[i] = bits_[i] | o.bits_[i];
    return s;
  }
  SiteSubset intersect(const SiteSubset& o) const {
    SiteSubset s = aligned(o);
    for (size_t i = 0; i < bits_.size(); ++i) s.bits_[i] = bits_[i] & o.bits_[i];
    return s;
  }
  SiteSubset minus(const SiteSubset& o) const {
    SiteSubset s = aligned(o);
    for (size_t i = 0; i < bits_.size(); ++i)
      s.bits_[i] = bits_[i] & (o.bits_[i] ? 0 : 1);
    return s;
  }
  bool is_subset_of(const SiteSubset& o) const {
    aligned(o);
    for (size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i] && !o.bits_[i]) return false;
    return true;
  }
  bool operator==(const SiteSubset& o) const { return bits_ == o.bits_; }

  std::vector<int> indices() const {
    std::vector<int> v;
    for (int i = 0; i < ground_size(); ++i)
      if (bits_[i]) v.push_back(i);
    return v;
  }
  uint32_t mask() const {
    if (ground_size() > 31) throw TooLarge("bitmask limited to n <= 31");
    uint32_t m = 0;
    for (int i = 0; i < ground_size(); ++i)
      if (bits_[i]) m |= 1u << i;
    return m;
  }

 private:
  static int check_n(int n) {
    if (n < 0) throw DimensionMismatch("negative ground size");
    return n;
  }
  bool in_range(int i) const { return i >= 0 && i < ground_size(); }
  SiteSubset aligned(const SiteSubset& o) const {
    if (o.ground_size() != ground_size())
      throw DimensionMismatch("subset ground sizes differ");
    return SiteSubset(ground_size());
  }
  std::vector<uint8_t> bits_;
};

// Simple point configuration: sorted distinct site indices.
struct Configuration {
  int ground_size = 0;
  std::vector<int> sites;

  static Configuration empty(int n) { return Configuration{n, {}}; }
  static Configuration from(int n, std::vector<int> idx) {
    std::sort(idx.begin(), idx.end());
    for (size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] < 0 || idx[i] >= n)
        throw PointOutOfRange("site " + std::to_string(idx[i]));
      if (i > 0 && idx[i] == idx[i - 1])
        throw DuplicatePoint("site " + std::to_string(idx[i]));
    }
    return Configuration{n, std::move(idx)};
  }
  static Configuration from_subset(const SiteSubset& s) {
    return Configuration{s.ground_size(), s.indices()};
  }

  int count() const { return static_cast<int>(sites.size()); }
  bool contains(int i) const {
    return std::binary_search(sites.begin(), sites.end(), i);
  }
  SiteSubset to_subset() const {
    return SiteSubset::from_indices(ground_size, sites);
  }
  Configuration restrict_to(const SiteSubset& w) const {
    Configuration c{ground_size, {}};
    for (int s : sites)
      if (w.contains(s)) c.sites.push_back(s);
    return c;
  }
  bool operator==(const Configuration& o) const {
    return ground_size == o.ground_size && sites == o.sites;
  }
};

// Optional geometry carried by discretized kernels.
struct GroundSet {
  std::vector<std::vector<double>> coords;
  std::vector<double> weights;

  int size() const { return static_cast<int>(weights.size()); }
};

struct Tolerances {
  double hermitian = 1e-9;     // max-norm defect allowed before rejection
  double spectral = 1e-8;      // eigenvalue clipping window around [0,1]
  double diag = 1e-12;         // Palm denominator threshold, relative to scale
  double sv = 1e-12;           // resolvent smallest-singular-value threshold
  double det = 1e-12;          // determinant thresholds (gap, correlation)
  double series = 1e-10;       // Neumann term cutoff (operator norm)
  double rank = 1e-9;          // eigenvalue threshold for numerical rank
  double prob_floor = 1e-10;   // allowed negative round-off in enumerated laws
  double prob_positive = 1e-12;  // "positive probability" threshold
};

enum class Exec { Serial, Parallel };

}  // namespace dppcond
