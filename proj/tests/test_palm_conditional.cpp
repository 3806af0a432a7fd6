#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <dppcond/conditional.hpp>
#include <dppcond/corpus.hpp>
#include <dppcond/distribution.hpp>

using namespace dppcond;

namespace {

double maxdiff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

double rowcol_mass(const Eigen::MatrixXcd& m, const std::vector<int>& sites) {
  double v = 0.0;
  for (int p : sites)
    v = std::max({v, m.row(p).cwiseAbs().maxCoeff(),
                  m.col(p).cwiseAbs().maxCoeff()});
  return v;
}

std::vector<CorpusEntry> small_corpus() {
  CorpusSpec spec;
  spec.seed = 90210;
  spec.count = 8;
  spec.n_min = 3;
  spec.n_max = 6;
  return make_corpus(spec);
}

}  // namespace

TEST_CASE("palm at a point of the rank one projection flattens the kernel") {
  KernelMatrix k = uniform_rank1(2);
  PalmKernel p = palm_one(k, 0);
  CHECK_FALSE(p.degenerate);  // the point has positive intensity
  CHECK(p.matrix.entries().cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("palm at a zero intensity point is degenerate") {
  KernelMatrix k = diagonal_kernel({0.0, 0.5});
  PalmKernel p = palm_one(k, 0);
  CHECK(p.degenerate);
  CHECK(p.matrix.entries().cwiseAbs().maxCoeff() == 0.0);

  PalmKernel many = palm_many(k, Configuration::from(2, {0, 1}));
  CHECK(many.degenerate);
}

TEST_CASE("palm with no points returns the kernel unchanged") {
  KernelMatrix k = diagonal_kernel({0.2, 0.7});
  PalmKernel p = palm_many(k, Configuration::empty(2));
  CHECK(maxdiff(p.matrix.entries(), k.entries()) == 0.0);
}

TEST_CASE("recursive and block palm eliminations agree and annihilate") {
  for (const CorpusEntry& e : small_corpus()) {
    const KernelMatrix& k = e.kernel;
    CounterRng rng(31, std::hash<std::string>{}(e.id));
    std::vector<int> pts;
    for (int i = 0; i < k.size() && pts.size() < 2; ++i)
      if (rng.bernoulli(0.5)) pts.push_back(i);
    if (pts.empty()) pts.push_back(0);
    Configuration c = Configuration::from(k.size(), pts);
    if (correlation(k, c) <= 1e-8) continue;

    PalmKernel rec = palm_many(k, c, PalmMethod::Recursive);
    PalmKernel det = palm_many(k, c, PalmMethod::DetRatio);
    REQUIRE_FALSE(rec.degenerate);
    REQUIRE_FALSE(det.degenerate);
    CHECK(maxdiff(rec.matrix.entries(), det.matrix.entries()) <= 1e-10);
    CHECK(rowcol_mass(rec.matrix.entries(), c.sites) <= 1e-10);
    CHECK(rowcol_mass(det.matrix.entries(), c.sites) <= 1e-10);
  }
}

TEST_CASE("palm kernel generates the reduced palm law") {
  for (const CorpusEntry& e : small_corpus()) {
    const KernelMatrix& k = e.kernel;
    Configuration c = Configuration::from(k.size(), {0});
    if (correlation(k, c) <= 1e-8) continue;
    PalmKernel p = palm_many(k, c);
    DppDistribution from_kernel = enumerate_distribution(p.matrix);
    DppDistribution oracle = palm_distribution_oracle(k, c);
    CHECK(tv_distance(from_kernel, oracle) <= 1e-9);
  }
}

TEST_CASE("palm oracle rejects zero correlation points") {
  KernelMatrix k = uniform_rank1(2);
  // the rank one process never holds two points
  CHECK_THROWS_AS(palm_distribution_oracle(k, Configuration::from(2, {0, 1})),
                  ZeroCorrelation);
}

TEST_CASE("conditioning the two site projection by hand") {
  KernelMatrix k = uniform_rank1(2);
  SiteSubset b = SiteSubset::of(2, {0});

  // no point seen at site 0: the point is surely at site 1
  ConditionalKernel none = conditional_kernel(k, Configuration::empty(2), b);
  REQUIRE(none.status == CondStatus::Regular);
  CHECK(std::abs(none.matrix.entries()(1, 1) - 1.0) <= 1e-12);
  CHECK(std::abs(none.matrix.entries()(0, 0)) == 0.0);
  CHECK(std::abs(none.matrix.entries()(0, 1)) == 0.0);

  // point seen at site 0: nothing remains
  ConditionalKernel seen =
      conditional_kernel(k, Configuration::from(2, {0}), b);
  REQUIRE(seen.status == CondStatus::Regular);
  CHECK(seen.matrix.entries().cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("conditional kernel is degenerate exactly on zero probability traces") {
  for (const CorpusEntry& e : small_corpus()) {
    const KernelMatrix& k = e.kernel;
    int n = k.size();
    DppDistribution d = enumerate_distribution(k);
    SiteSubset b = SiteSubset::of(n, {0, 1});
    DppDistribution marg = marginal(d, b);
    for (uint32_t xi = 0; xi < 4; ++xi) {
      double p = marg.mass(xi);
      Configuration trace =
          Configuration::from_subset(SiteSubset::from_mask(n, xi));
      ConditionalKernel ck = conditional_kernel(k, trace, b);
      if (p > 1e-8) {
        CHECK(ck.status == CondStatus::Regular);
      } else if (p < 1e-14) {
        CHECK(ck.status == CondStatus::Degenerate);
        CHECK(ck.matrix.entries().cwiseAbs().maxCoeff() == 0.0);
      }
    }
  }
}

TEST_CASE("conditional kernel reproduces the sliced law") {
  for (const CorpusEntry& e : small_corpus()) {
    const KernelMatrix& k = e.kernel;
    int n = k.size();
    DppDistribution d = enumerate_distribution(k);
    SiteSubset b = SiteSubset::of(n, {1, 2});
    DppDistribution marg = marginal(d, b);
    int used = 0;
    for (uint32_t xi = 0; xi < 4; ++xi) {
      uint32_t xi_mask = (xi & 1u) << 1 | (xi >> 1) << 2;
      if (marg.mass(xi_mask) <= 1e-8) continue;
      Configuration trace =
          Configuration::from_subset(SiteSubset::from_mask(n, xi_mask));
      ConditionalKernel ck = conditional_kernel(k, trace, b);
      REQUIRE(ck.status == CondStatus::Regular);
      DppDistribution law = enumerate_distribution(ck.matrix);
      DppDistribution slice = conditional_slice(d, b, xi_mask);
      CHECK(tv_distance(law, slice) <= 1e-9);
      ++used;
    }
    CHECK(used >= 1);  // the empty trace always has positive probability here
  }
}

TEST_CASE("oracle slice rejects zero probability traces") {
  KernelMatrix k = uniform_rank1(2);
  CHECK_THROWS_AS(conditional_distribution_oracle(k, SiteSubset::full(2),
                                                  Configuration::from(2, {0, 1})),
                  ZeroProbabilityCondition);
}

TEST_CASE("series route matches the solve route away from norm one") {
  DiscretizedKernel sk = sine_kernel(8, 4.0);
  SiteSubset b = SiteSubset::of(8, {1});
  ConditionalKernel solve =
      conditional_kernel(sk.kernel, Configuration::empty(8), b);
  ConditionalKernel series =
      conditional_kernel_neumann(sk.kernel, Configuration::empty(8), b);
  REQUIRE(solve.status == CondStatus::Regular);
  REQUIRE(series.status == CondStatus::Regular);
  CHECK(maxdiff(solve.matrix.entries(), series.matrix.entries()) <= 1e-8);

  KernelMatrix dk = diagonal_kernel({0.9, 0.3, 0.6, 0.1});
  SiteSubset b2 = SiteSubset::of(4, {0, 3});
  ConditionalKernel s2 = conditional_kernel(dk, Configuration::from(4, {0}), b2);
  ConditionalKernel n2 =
      conditional_kernel_neumann(dk, Configuration::from(4, {0}), b2);
  CHECK(maxdiff(s2.matrix.entries(), n2.matrix.entries()) <= 1e-8);
}

TEST_CASE("series route refuses a window at norm one") {
  KernelMatrix id = identity_kernel(3);
  CHECK_THROWS_AS(
      conditional_kernel_neumann(id, Configuration::empty(3), SiteSubset::of(3, {0})),
      NotContractive);
}

TEST_CASE("induced kernel needs a positive gap probability") {
  KernelMatrix id = identity_kernel(3);
  CHECK_THROWS_AS(induced_kernel(id, SiteSubset::of(3, {0})), ZeroGapProbability);

  DiscretizedKernel sk = sine_kernel(6, 3.0);
  SiteSubset b = SiteSubset::of(6, {2, 3});
  ConditionalKernel viaempty =
      conditional_kernel(sk.kernel, Configuration::empty(6), b);
  ConditionalKernel ind = induced_kernel(sk.kernel, b);
  CHECK(maxdiff(ind.matrix.entries(), viaempty.matrix.entries()) == 0.0);
}

TEST_CASE("growing windows settle onto the limit kernel") {
  DiscretizedKernel sk = sine_kernel(8, 4.0);
  SiteSubset w = SiteSubset::prefix(8, 5);
  std::vector<SiteSubset> ex;
  for (int m = 1; m <= 5; ++m) ex.push_back(SiteSubset::prefix(8, m));
  ConditionalLimit lim =
      conditional_limit(sk.kernel, Configuration::empty(8), w, ex);
  REQUIRE(lim.stages.size() == 5);
  CHECK(lim.stages.back().trace_dist == 0.0);
  CHECK(lim.stages.front().trace_dist >= lim.stages.back().trace_dist);
  for (const ConvergenceStage& s : lim.stages)
    CHECK(s.op_dist <= s.trace_dist + 1e-15);
}

TEST_CASE("exhaustions must be nested inside the window") {
  KernelMatrix k = diagonal_kernel({0.5, 0.5, 0.5});
  SiteSubset w = SiteSubset::of(3, {0, 1});
  Configuration x = Configuration::empty(3);
  CHECK_THROWS_AS(conditional_limit(k, x, w, {}), ExhaustionNotNested);
  CHECK_THROWS_AS(conditional_limit(k, x, w, {SiteSubset::of(3, {2})}),
                  ExhaustionNotNested);
  CHECK_THROWS_AS(conditional_limit(k, x, w,
                                    {SiteSubset::of(3, {0, 1}), SiteSubset::of(3, {0})}),
                  ExhaustionNotNested);
  CHECK_THROWS_AS(conditional_limit(k, x, w, {SiteSubset::of(3, {0})}),
                  ExhaustionNotNested);  // union misses site 1
}

TEST_CASE("subspace route agrees with the solve route on projections") {
  KernelMatrix base = diagonal_kernel({0.15, 0.4, 0.75});
  KernelMatrix proj = dilate_to_projection(base);
  int n = proj.size();
  DppDistribution d = enumerate_distribution(proj);
  SiteSubset b = SiteSubset::of(n, {0, 4});
  DppDistribution marg = marginal(d, b);
  int compared = 0;
  for (uint32_t xi : {0u, 1u, 16u, 17u}) {
    Configuration trace =
        Configuration::from_subset(SiteSubset::from_mask(n, xi));
    ConditionalKernel solve = conditional_kernel(proj, trace, b);
    ConditionalKernel span = projection_conditional_subspace(proj, trace, b);
    double p = marg.mass(xi);
    if (p > 1e-8) {
      REQUIRE(solve.status == CondStatus::Regular);
      REQUIRE(span.status == CondStatus::Regular);
      CHECK(maxdiff(solve.matrix.entries(), span.matrix.entries()) <= 1e-8);
      ++compared;
    } else if (p < 1e-14) {
      CHECK(solve.status == span.status);
    }
  }
  CHECK(compared >= 2);
}

TEST_CASE("subspace route rejects non projection kernels") {
  KernelMatrix k = diagonal_kernel({0.3, 0.6});
  CHECK_THROWS_AS(projection_conditional_subspace(k, Configuration::empty(2),
                                                  SiteSubset::of(2, {0})),
                  NotAProjection);
}

TEST_CASE("conditional certificates are recorded") {
  DiscretizedKernel sk = sine_kernel(6, 3.0);
  ConditionalKernel ck =
      conditional_kernel(sk.kernel, Configuration::empty(6), SiteSubset::of(6, {0}));
  CHECK(ck.gap_sv > 0.0);
  CHECK(ck.gap_sv <= 1.0);
  CHECK(ck.norm_bound >= 0.0);
  CHECK(ck.window == SiteSubset::of(6, {0}));
}
