#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <dppcond/runner.hpp>

#include <filesystem>
#include <fstream>

using namespace dppcond;
namespace fs = std::filesystem;

namespace {

ordered_json base_config() {
  ordered_json j;
  j["schema"] = 1;
  j["seed"] = 77;
  j["trials"] = 200;
  j["instances"] = 1;
  j["mode"] = "exact";
  ordered_json kernels = ordered_json::array();
  ordered_json k1;
  k1["id"] = "d3";
  k1["factory"] = "diagonal";
  k1["params"]["p"] = {0.2, 0.5, 0.8};
  kernels.push_back(k1);
  ordered_json k2;
  k2["id"] = "ur4";
  k2["factory"] = "uniform_rank1";
  k2["params"]["n"] = 4;
  kernels.push_back(k2);
  j["kernels"] = kernels;
  j["checks"] = {"one_step_martingale", "variance_bound"};
  return j;
}

fs::path fresh_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("dppcond_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("config parsing rejects malformed input") {
  auto expect_bad = [](ordered_json j) {
    CHECK_THROWS_AS(parse_run_config(j, "."), ConfigError);
  };

  SUBCASE("missing seed") {
    ordered_json j = base_config();
    j.erase("seed");
    expect_bad(j);
  }
  SUBCASE("wrong schema") {
    ordered_json j = base_config();
    j["schema"] = 2;
    expect_bad(j);
    j.erase("schema");
    expect_bad(j);
  }
  SUBCASE("unknown top level key") {
    ordered_json j = base_config();
    j["extra"] = 1;
    expect_bad(j);
  }
  SUBCASE("bad trials") {
    ordered_json j = base_config();
    j["trials"] = 0;
    expect_bad(j);
  }
  SUBCASE("bad mode") {
    ordered_json j = base_config();
    j["mode"] = "sometimes";
    expect_bad(j);
  }
  SUBCASE("unknown check id") {
    ordered_json j = base_config();
    j["checks"].push_back("nonexistent_check");
    expect_bad(j);
  }
  SUBCASE("empty checks") {
    ordered_json j = base_config();
    j["checks"] = ordered_json::array();
    expect_bad(j);
  }
  SUBCASE("empty kernels") {
    ordered_json j = base_config();
    j["kernels"] = ordered_json::array();
    expect_bad(j);
  }
  SUBCASE("kernel with two sources") {
    ordered_json j = base_config();
    j["kernels"][0]["file"] = "x.json";
    expect_bad(j);
  }
  SUBCASE("duplicate kernel id") {
    ordered_json j = base_config();
    j["kernels"][1]["id"] = "d3";
    expect_bad(j);
  }
  SUBCASE("unknown tolerance") {
    ordered_json j = base_config();
    j["tolerances"]["fuzz"] = 1e-9;
    expect_bad(j);
  }
  SUBCASE("unknown check tolerance") {
    ordered_json j = base_config();
    j["check_tolerances"]["fuzz"] = 1e-9;
    expect_bad(j);
  }
  SUBCASE("non increasing depths") {
    ordered_json j = base_config();
    ordered_json tail;
    tail["id"] = "tail_mixing";
    tail["depths"] = {3, 3};
    j["checks"].push_back(tail);
    expect_bad(j);
  }
  SUBCASE("unknown factory") {
    ordered_json j = base_config();
    j["kernels"][0].erase("factory");
    j["kernels"][0]["factory"] = "mystery";
    expect_bad(j);
  }
}

TEST_CASE("config defaults fill in and the echo omits the output directory") {
  ordered_json j = base_config();
  j.erase("trials");
  j.erase("instances");
  j.erase("mode");
  j["out"] = "somewhere/else";
  RunConfig cfg = parse_run_config(j, ".");
  CHECK(cfg.trials == 800);
  CHECK(cfg.instances == 2);
  CHECK(cfg.mode == "both");
  CHECK(cfg.out_dir == "somewhere/else");
  CHECK(cfg.enum_cap == ENUM_DEFAULT_CAP);
  CHECK(cfg.kernels.size() == 2);
  CHECK(cfg.check_tols.at("one_step") == check_tol::one_step);
  CHECK_FALSE(cfg.echo.contains("out"));
}

TEST_CASE("executing the same config twice gives identical reports") {
  RunConfig cfg = parse_run_config(base_config(), ".");
  RunOutput a = execute_run(cfg);
  RunOutput b = execute_run(cfg);
  CHECK(a.failures == 0);
  CHECK(a.total > 0);
  CHECK(a.report.dump() == b.report.dump());
}

TEST_CASE("corpus kernel entries expand with the run seed") {
  ordered_json j = base_config();
  ordered_json ck;
  ck["id"] = "mix";
  ck["corpus"]["count"] = 3;
  ck["corpus"]["n_min"] = 3;
  ck["corpus"]["n_max"] = 4;
  j["kernels"].push_back(ck);
  RunConfig cfg = parse_run_config(j, ".");
  CHECK(cfg.kernels.size() == 5);
  int mix = 0;
  for (const auto& ke : cfg.kernels)
    if (ke.id.rfind("mix_", 0) == 0) ++mix;
  CHECK(mix == 3);
}

TEST_CASE("cli rejects bad invocations with exit code 2") {
  fs::path dir = fresh_dir("cli_bad");
  CHECK(run_cli({"no_such_subcommand"}) == 2);
  CHECK(run_cli({"run"}) == 2);

  fs::path broken = dir / "broken.json";
  spit(broken, "{ not json");
  CHECK(run_cli({"run", "--config", broken.string()}) == 2);
  CHECK(run_cli({"describe", broken.string()}) == 2);

  fs::path cfgp = dir / "cfg.json";
  spit(cfgp, base_config().dump());
  CHECK(run_cli({"run", "--config", cfgp.string(), "--tol-override",
                 "nonsense=1"}) == 2);
  CHECK(run_cli({"run", "--config", cfgp.string(), "--tol-override",
                 "one_step=abc"}) == 2);
  CHECK(run_cli({"run", "--config", cfgp.string(), "--trials", "0"}) == 2);

  ordered_json noseed = base_config();
  noseed.erase("seed");
  fs::path nsp = dir / "noseed.json";
  spit(nsp, noseed.dump());
  CHECK(run_cli({"run", "--config", nsp.string()}) == 2);
  fs::remove_all(dir);
}

TEST_CASE("cli rejects an invalid kernel file with exit code 3") {
  fs::path dir = fresh_dir("cli_badkernel");
  ordered_json bad;
  bad["n"] = 2;
  bad["complex"] = false;
  bad["entries"] = {1.5, 0.0, 0.0, 0.5};
  fs::path kp = dir / "bad_kernel.json";
  spit(kp, bad.dump());

  ordered_json j = base_config();
  j["kernels"] = ordered_json::array();
  ordered_json ke;
  ke["id"] = "bad";
  ke["file"] = kp.filename().string();
  j["kernels"].push_back(ke);
  fs::path cfgp = dir / "cfg.json";
  spit(cfgp, j.dump());
  CHECK(run_cli({"run", "--config", cfgp.string()}) == 3);
  fs::remove_all(dir);
}

TEST_CASE("a full cli run writes its outputs and reruns byte for byte") {
  fs::path dir = fresh_dir("cli_run");
  ordered_json j = base_config();
  ordered_json tail;
  tail["id"] = "tail_mixing";
  tail["depths"] = {2, 3, 4};
  j["checks"].push_back(tail);
  fs::path cfgp = dir / "cfg.json";
  spit(cfgp, j.dump(2));

  fs::path out1 = dir / "out1", out2 = dir / "out2";
  CHECK(run_cli({"run", "--config", cfgp.string(), "--out", out1.string()}) ==
        0);
  CHECK(run_cli({"run", "--config", cfgp.string(), "--out", out2.string()}) ==
        0);
  for (const char* name : {"report.json", "summary.csv"}) {
    CAPTURE(name);
    CHECK(slurp(out1 / name) == slurp(out2 / name));
  }
  CHECK(fs::exists(out1 / "run_meta.json"));
  CHECK(fs::exists(out1 / "plots"));

  ordered_json rep = ordered_json::parse(slurp(out1 / "report.json"));
  CHECK(rep["totals"]["failed"].get<int>() == 0);
  CHECK(rep["totals"]["results"].get<int>() > 0);
  CHECK(rep["config"]["seed"].get<uint64_t>() == 77);

  // an impossible tolerance turns the run red
  CHECK(run_cli({"run", "--config", cfgp.string(), "--out",
                 (dir / "out3").string(), "--tol-override",
                 "tail_event=-1"}) == 1);
  // a seed override lands in the echoed config
  CHECK(run_cli({"run", "--config", cfgp.string(), "--out",
                 (dir / "out4").string(), "--seed", "123"}) == 0);
  ordered_json rep4 = ordered_json::parse(slurp(dir / "out4" / "report.json"));
  CHECK(rep4["config"]["seed"].get<uint64_t>() == 123);
  fs::remove_all(dir);
}

TEST_CASE("corpus generation is reproducible and describe reads its files") {
  fs::path dir = fresh_dir("gen");
  fs::path c1 = dir / "c1", c2 = dir / "c2";
  CHECK(run_cli({"gen-corpus", "--seed", "99", "--count", "4", "--n-min", "3",
                 "--n-max", "5", "--out", c1.string()}) == 0);
  CHECK(run_cli({"gen-corpus", "--seed", "99", "--count", "4", "--n-min", "3",
                 "--n-max", "5", "--out", c2.string()}) == 0);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(c1)) files.push_back(e.path());
  CHECK(files.size() == 5);  // four kernels plus the manifest
  for (const auto& f : files) {
    CAPTURE(f.filename().string());
    CHECK(slurp(f) == slurp(c2 / f.filename()));
  }
  CHECK(run_cli({"describe", (c1 / "kernel_000.json").string()}) == 0);
  fs::remove_all(dir);
}
