#include "dppcond/runner.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace dppcond {
namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kCheckIds = {
    "one_step_martingale", "local_identities",   "two_window_commutation",
    "martingale_sequence", "variance_bound",     "completeness",
    "tail_mixing",         "measure_consistency"};

const std::vector<std::string> kKernelTolKeys = {
    "hermitian", "spectral",   "diag",          "sv",  "det",
    "series",    "rank",       "prob_floor",    "prob_positive"};

std::map<std::string, double> default_check_tols() {
  return {{"one_step", check_tol::one_step},
          {"local", check_tol::local},
          {"two_window", check_tol::two_window},
          {"mart_order1", check_tol::mart_order1},
          {"mart_order2", check_tol::mart_order2},
          {"variance", check_tol::variance},
          {"fixed_point", check_tol::fixed_point},
          {"tail_event", check_tol::tail_event},
          {"measure_tv", check_tol::measure_tv}};
}

double* kernel_tol_slot(Tolerances& t, const std::string& key) {
  if (key == "hermitian") return &t.hermitian;
  if (key == "spectral") return &t.spectral;
  if (key == "diag") return &t.diag;
  if (key == "sv") return &t.sv;
  if (key == "det") return &t.det;
  if (key == "series") return &t.series;
  if (key == "rank") return &t.rank;
  if (key == "prob_floor") return &t.prob_floor;
  if (key == "prob_positive") return &t.prob_positive;
  return nullptr;
}

[[noreturn]] void bad(const std::string& msg) { throw ConfigError(msg); }

const ordered_json& member(const ordered_json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) bad(std::string("missing \"") + key + "\"");
  return *it;
}

int req_int(const ordered_json& j, const char* key, long lo, long hi) {
  const auto& v = member(j, key);
  if (!v.is_number_integer()) bad(std::string("\"") + key + "\" must be an integer");
  long x = v.get<long>();
  if (x < lo || x > hi)
    bad(std::string("\"") + key + "\" out of range [" + std::to_string(lo) +
        ", " + std::to_string(hi) + "]");
  return static_cast<int>(x);
}

int opt_int(const ordered_json& j, const char* key, int dflt, long lo, long hi) {
  return j.contains(key) ? req_int(j, key, lo, hi) : dflt;
}

double req_double(const ordered_json& j, const char* key) {
  const auto& v = member(j, key);
  if (!v.is_number()) bad(std::string("\"") + key + "\" must be a number");
  return v.get<double>();
}

std::string req_string(const ordered_json& j, const char* key) {
  const auto& v = member(j, key);
  if (!v.is_string()) bad(std::string("\"") + key + "\" must be a string");
  return v.get<std::string>();
}

KernelMatrix factory_kernel(const std::string& name, const ordered_json& params,
                            const Tolerances& tols) {
  KernelMatrix k;
  if (name == "uniform_rank1") {
    k = uniform_rank1(req_int(params, "n", 1, 4096));
  } else if (name == "identity") {
    k = identity_kernel(req_int(params, "n", 1, 4096));
  } else if (name == "diagonal") {
    const auto& p = member(params, "p");
    if (!p.is_array() || p.empty()) bad("\"p\" must be a non-empty array");
    std::vector<double> v;
    for (const auto& e : p) {
      if (!e.is_number()) bad("\"p\" entries must be numbers");
      v.push_back(e.get<double>());
    }
    k = diagonal_kernel(v);
  } else if (name == "sine") {
    k = sine_kernel(req_int(params, "n", 1, 4096), req_double(params, "length"))
            .kernel;
  } else if (name == "bergman") {
    k = bergman_kernel(req_int(params, "n_radial", 1, 256),
                       req_int(params, "n_angular", 1, 256),
                       req_double(params, "radius"))
            .kernel;
  } else {
    bad("unknown factory \"" + name + "\"");
  }
  return validate_kernel(k.entries(), tols);
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s)
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return out;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

struct Dispatch {
  const RunConfig& cfg;
  double ctol(const std::string& name) const { return cfg.check_tols.at(name); }
};

}  // namespace

RunConfig parse_run_config(const ordered_json& j, const std::string& config_dir) {
  if (!j.is_object()) bad("config must be a JSON object");
  for (const auto& [key, val] : j.items()) {
    static const std::vector<std::string> known = {
        "schema", "seed",   "trials", "instances", "enum_cap", "mode",
        "out",    "tolerances", "check_tolerances", "kernels",  "checks"};
    if (std::find(known.begin(), known.end(), key) == known.end())
      bad("unknown config key \"" + key + "\"");
  }
  if (opt_int(j, "schema", -1, -1000000, 1000000) != 1)
    bad("config must declare \"schema\": 1");
  {
    const auto& s = member(j, "seed");
    if (!s.is_number_integer() || (s.is_number_integer() && s.get<long long>() < 0))
      bad("\"seed\" must be a non-negative integer");
  }

  RunConfig cfg;
  cfg.seed = j["seed"].get<uint64_t>();
  cfg.trials = opt_int(j, "trials", 800, 1, 100000000);
  cfg.instances = opt_int(j, "instances", 2, 1, 1000);
  cfg.enum_cap = opt_int(j, "enum_cap", ENUM_DEFAULT_CAP, 2, ENUM_HARD_CAP);
  if (j.contains("mode")) cfg.mode = req_string(j, "mode");
  if (cfg.mode != "exact" && cfg.mode != "mc" && cfg.mode != "both")
    bad("\"mode\" must be exact, mc or both");
  if (j.contains("out")) cfg.out_dir = req_string(j, "out");

  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    if (!t.is_object()) bad("\"tolerances\" must be an object");
    for (const auto& [key, val] : t.items()) {
      double* slot = kernel_tol_slot(cfg.tols, key);
      if (!slot) bad("unknown tolerance \"" + key + "\"");
      if (!val.is_number()) bad("tolerance \"" + key + "\" must be a number");
      *slot = val.get<double>();
    }
  }
  cfg.check_tols = default_check_tols();
  if (j.contains("check_tolerances")) {
    const auto& t = j["check_tolerances"];
    if (!t.is_object()) bad("\"check_tolerances\" must be an object");
    for (const auto& [key, val] : t.items()) {
      auto it = cfg.check_tols.find(key);
      if (it == cfg.check_tols.end())
        bad("unknown check tolerance \"" + key + "\"");
      if (!val.is_number()) bad("check tolerance \"" + key + "\" must be a number");
      it->second = val.get<double>();
    }
  }

  const auto& kernels = member(j, "kernels");
  if (!kernels.is_array() || kernels.empty())
    bad("\"kernels\" must be a non-empty array");
  for (const auto& entry : kernels) {
    if (!entry.is_object()) bad("kernel entries must be objects");
    std::string id = req_string(entry, "id");
    int sources = entry.contains("file") + entry.contains("factory") +
                  entry.contains("corpus");
    if (sources != 1)
      bad("kernel \"" + id + "\" needs exactly one of file, factory, corpus");
    if (entry.contains("file")) {
      fs::path p = entry["file"].get<std::string>();
      if (p.is_relative()) p = fs::path(config_dir) / p;
      cfg.kernels.push_back({id, read_kernel_file(p.string(), cfg.tols).kernel});
    } else if (entry.contains("factory")) {
      ordered_json params =
          entry.contains("params") ? entry["params"] : ordered_json::object();
      cfg.kernels.push_back(
          {id, factory_kernel(req_string(entry, "factory"), params, cfg.tols)});
    } else {
      const auto& c = entry["corpus"];
      if (!c.is_object()) bad("\"corpus\" must be an object");
      CorpusSpec spec;
      spec.seed = cfg.seed;
      spec.count = req_int(c, "count", 1, 10000);
      spec.n_min = opt_int(c, "n_min", 2, 2, 64);
      spec.n_max = opt_int(c, "n_max", 8, spec.n_min, 64);
      if (c.contains("classes")) {
        spec.classes.clear();
        for (const auto& s : c["classes"])
          spec.classes.push_back(kernel_class_from_name(s.get<std::string>()));
        if (spec.classes.empty()) bad("\"classes\" must be non-empty");
      }
      if (c.contains("complex")) {
        if (!c["complex"].is_boolean()) bad("\"complex\" must be a boolean");
        spec.allow_complex = c["complex"].get<bool>();
      }
      for (auto& e : make_corpus(spec))
        cfg.kernels.push_back(
            {id + "_" + e.id, validate_kernel(e.kernel.entries(), cfg.tols)});
    }
  }
  {
    std::vector<std::string> ids;
    for (const auto& k : cfg.kernels) ids.push_back(k.id);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
      bad("duplicate kernel id");
  }

  const auto& checks = member(j, "checks");
  if (!checks.is_array() || checks.empty())
    bad("\"checks\" must be a non-empty array");
  for (const auto& entry : checks) {
    CheckEntry ce;
    if (entry.is_string()) {
      ce.id = entry.get<std::string>();
    } else if (entry.is_object()) {
      ce.id = req_string(entry, "id");
      ce.trials = opt_int(entry, "trials", 0, 1, 100000000);
      ce.instances = opt_int(entry, "instances", 0, 1, 1000);
      if (entry.contains("depths")) {
        for (const auto& d : entry["depths"]) {
          if (!d.is_number_integer()) bad("\"depths\" must be integers");
          ce.depths.push_back(d.get<int>());
        }
        for (size_t i = 0; i < ce.depths.size(); ++i)
          if (ce.depths[i] < 1 || (i > 0 && ce.depths[i] <= ce.depths[i - 1]))
            bad("\"depths\" must be strictly increasing positive integers");
        if (ce.depths.empty()) bad("\"depths\" must be non-empty");
      }
      if (entry.contains("event_sites")) {
        for (const auto& s : entry["event_sites"]) {
          if (!s.is_number_integer() || s.get<int>() < 0)
            bad("\"event_sites\" must be non-negative integers");
          ce.event_sites.push_back(s.get<int>());
        }
        if (ce.event_sites.empty()) bad("\"event_sites\" must be non-empty");
      }
    } else {
      bad("check entries must be strings or objects");
    }
    if (std::find(kCheckIds.begin(), kCheckIds.end(), ce.id) == kCheckIds.end())
      bad("unknown check \"" + ce.id + "\"");
    cfg.checks.push_back(std::move(ce));
  }

  // Echo of the effective configuration; excludes the output directory so a
  // run is byte-identical wherever its files land.
  ordered_json echo;
  echo["schema"] = 1;
  echo["seed"] = cfg.seed;
  echo["trials"] = cfg.trials;
  echo["instances"] = cfg.instances;
  echo["enum_cap"] = cfg.enum_cap;
  echo["mode"] = cfg.mode;
  ordered_json tolj;
  Tolerances dflt;
  tolj["hermitian"] = cfg.tols.hermitian;
  tolj["spectral"] = cfg.tols.spectral;
  tolj["diag"] = cfg.tols.diag;
  tolj["sv"] = cfg.tols.sv;
  tolj["det"] = cfg.tols.det;
  tolj["series"] = cfg.tols.series;
  tolj["rank"] = cfg.tols.rank;
  tolj["prob_floor"] = cfg.tols.prob_floor;
  tolj["prob_positive"] = cfg.tols.prob_positive;
  echo["tolerances"] = tolj;
  ordered_json ctj;
  for (const auto& [k, v] : cfg.check_tols) ctj[k] = v;
  echo["check_tolerances"] = ctj;
  echo["kernels"] = kernels;
  echo["checks"] = checks;
  cfg.echo = echo;
  return cfg;
}

RunOutput execute_run(const RunConfig& cfg) {
  std::vector<CheckMode> modes;
  if (cfg.mode == "exact" || cfg.mode == "both") modes.push_back(CheckMode::Exact);
  if (cfg.mode == "mc" || cfg.mode == "both")
    modes.push_back(CheckMode::MonteCarlo);
  Dispatch dd{cfg};

  ordered_json results = ordered_json::array();
  RunOutput out;
  struct RowAgg {
    bool any = false;
    bool all_pass = true;
    double worst_excess = -1e300;
    double stat = 0.0, tol = 0.0;
  };
  std::map<std::pair<size_t, int>, RowAgg> rows;

  for (size_t ci = 0; ci < cfg.checks.size(); ++ci) {
    const CheckEntry& entry = cfg.checks[ci];
    bool needs_instance = entry.id != "completeness" && entry.id != "tail_mixing";
    int instances = entry.instances > 0 ? entry.instances : cfg.instances;
    for (size_t ki = 0; ki < cfg.kernels.size(); ++ki) {
      const KernelEntry& ke = cfg.kernels[ki];
      int n = ke.kernel.size();
      for (int inst = 0; inst < instances; ++inst) {
        for (size_t mi = 0; mi < modes.size(); ++mi) {
          CheckMode mode = modes[mi];
          ordered_json rec;
          rec["check_id"] = entry.id;
          rec["kernel_id"] = ke.id;
          rec["instance"] = inst;
          rec["mode"] = check_mode_name(mode);

          std::string skip;
          if (mode == CheckMode::Exact && n > cfg.enum_cap)
            skip = "ground set too large for exact enumeration";
          else if (entry.id == "completeness" && !ke.kernel.is_projection())
            skip = "projection kernels only";
          else if (needs_instance && n < 2)
            skip = "ground set too small";

          std::vector<int> depths = entry.depths;
          SiteSubset event_sites;
          if (skip.empty() && entry.id == "tail_mixing") {
            if (depths.empty()) {
              for (int q : {n / 4, n / 2, 3 * n / 4, n}) {
                int dpt = std::max(1, q);
                if (depths.empty() || dpt > depths.back()) depths.push_back(dpt);
              }
            } else {
              std::vector<int> kept;
              for (int dpt : depths)
                if (dpt <= n) kept.push_back(dpt);
              depths = kept;
            }
            if (depths.empty()) {
              skip = "no usable depth for this ground set";
            } else if (entry.event_sites.empty()) {
              event_sites = SiteSubset::prefix(n, std::min(2, depths.front()));
            } else {
              bool ok = true;
              for (int s : entry.event_sites)
                if (s >= depths.front()) ok = false;
              if (ok)
                event_sites = SiteSubset::from_indices(n, entry.event_sites);
              else
                skip = "event sites must precede the first depth";
            }
          }

          if (!skip.empty()) {
            rec["status"] = "skipped";
            rec["reason"] = skip;
            results.push_back(std::move(rec));
            ++out.skipped;
            auto& row = rows[{ci, static_cast<int>(mi)}];
            (void)row;
            continue;
          }

          CheckOptions opt;
          opt.mode = mode;
          opt.trials = entry.trials > 0 ? entry.trials : cfg.trials;
          opt.seed = stream_id(entry.id.c_str(), cfg.seed, ki, inst);
          opt.cap = cfg.enum_cap;
          opt.exec = Exec::Parallel;

          CheckResult res;
          if (entry.id == "completeness") {
            res = check_completeness(ke.kernel, opt, dd.ctol("fixed_point"));
          } else if (entry.id == "tail_mixing") {
            res = check_tail_mixing(ke.kernel, event_sites, depths, opt,
                                    dd.ctol("tail_event"));
          } else {
            CheckInstance ins =
                draw_instance(ke.kernel, cfg.seed,
                              stream_id(entry.id.c_str(), ki, inst));
            if (entry.id == "one_step_martingale")
              res = check_one_step_martingale(ke.kernel, ins.b, opt,
                                              dd.ctol("one_step"));
            else if (entry.id == "local_identities")
              res = check_local_identities(ke.kernel, ins.b, ins.q, ins.pts,
                                           opt, dd.ctol("local"));
            else if (entry.id == "two_window_commutation")
              res = check_two_window_commutation(ke.kernel, ins.a, ins.b, opt,
                                                 dd.ctol("two_window"));
            else if (entry.id == "martingale_sequence")
              res = check_martingale_sequence(ke.kernel, ins.stages, ins.wseq,
                                              ins.phi_seq, opt,
                                              dd.ctol("mart_order1"),
                                              dd.ctol("mart_order2"));
            else if (entry.id == "variance_bound")
              res = check_variance_bound(ke.kernel, ins.b, ins.phi, opt,
                                         dd.ctol("variance"));
            else
              res = check_measure_consistency(ke.kernel, ins.b, ins.w1, ins.w2,
                                              opt, dd.ctol("measure_tv"));
          }

          rec["status"] = "ok";
          rec["statistic"] = res.statistic;
          rec["tolerance"] = res.tolerance;
          rec["pass"] = res.pass;
          rec["seed"] = res.seed;
          rec["details"] = res.details;
          results.push_back(std::move(rec));
          ++out.total;
          if (!res.pass) ++out.failures;
          auto& row = rows[{ci, static_cast<int>(mi)}];
          row.any = true;
          row.all_pass = row.all_pass && res.pass;
          double excess = res.statistic - res.tolerance;
          if (excess > row.worst_excess) {
            row.worst_excess = excess;
            row.stat = res.statistic;
            row.tol = res.tolerance;
          }
        }
      }
    }
  }

  ordered_json report;
  report["schema"] = 1;
  report["config"] = cfg.echo;
  report["results"] = std::move(results);
  ordered_json totals;
  totals["results"] = out.total;
  totals["failed"] = out.failures;
  totals["skipped"] = out.skipped;
  report["totals"] = totals;

  ordered_json summary = ordered_json::array();
  for (size_t ci = 0; ci < cfg.checks.size(); ++ci)
    for (size_t mi = 0; mi < modes.size(); ++mi) {
      auto it = rows.find({ci, static_cast<int>(mi)});
      ordered_json row;
      row["check_id"] = cfg.checks[ci].id;
      row["mode"] = check_mode_name(modes[mi]);
      bool any = it != rows.end() && it->second.any;
      row["statistic"] = any ? it->second.stat : 0.0;
      row["tolerance"] = any ? it->second.tol : 0.0;
      row["pass"] = !any || it->second.all_pass;
      summary.push_back(row);
    }
  report["summary"] = summary;
  out.report = std::move(report);
  return out;
}

int run_and_write(const RunConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  RunOutput out = execute_run(cfg);

  fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::exists(dir)) throw IoFailure("cannot create " + cfg.out_dir);

  write_text_file((dir / "report.json").string(), out.report.dump(2) + "\n");

  std::ostringstream csv;
  csv << "check_id,mode,statistic,tolerance,pass\n";
  for (const auto& row : out.report["summary"])
    csv << row["check_id"].get<std::string>() << ','
        << row["mode"].get<std::string>() << ','
        << fmt(row["statistic"].get<double>()) << ','
        << fmt(row["tolerance"].get<double>()) << ','
        << (row["pass"].get<bool>() ? "true" : "false") << '\n';
  write_text_file((dir / "summary.csv").string(), csv.str());

  bool plots_made = false;
  for (const auto& rec : out.report["results"]) {
    if (rec["check_id"] != "tail_mixing" || rec["status"] != "ok") continue;
    if (!plots_made) {
      fs::create_directories(dir / "plots", ec);
      plots_made = true;
    }
    const auto& det = rec["details"];
    std::ostringstream pc;
    pc << "depth,trace_stat,trace_sem,event_stat,event_sem\n";
    const auto& depths = det["depths"];
    bool mc = rec["mode"] == "mc";
    for (size_t i = 0; i < depths.size(); ++i)
      pc << depths[i].get<int>() << ','
         << fmt(det["trace_stat"][i].get<double>()) << ','
         << fmt(mc ? det["trace_sem"][i].get<double>() : 0.0) << ','
         << fmt(det["event_stat"][i].get<double>()) << ','
         << fmt(mc ? det["event_sem"][i].get<double>() : 0.0) << '\n';
    std::string name = "tail_mixing_" +
                       sanitize(rec["kernel_id"].get<std::string>()) + "_" +
                       std::to_string(rec["instance"].get<int>()) + "_" +
                       rec["mode"].get<std::string>() + ".csv";
    write_text_file((dir / "plots" / name).string(), pc.str());
  }

  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t0)
                    .count();
  ordered_json meta;
  meta["wall_seconds"] = wall;
  meta["threads"] = omp_get_max_threads();
  meta["finished_unix"] = static_cast<int64_t>(std::time(nullptr));
  write_text_file((dir / "run_meta.json").string(), meta.dump(2) + "\n");

  return out.failures > 0 ? 1 : 0;
}

namespace {

void apply_threads_env() {
  const char* env = std::getenv("DPPCOND_THREADS");
  if (!env || !*env) return;
  std::string s(env);
  if (s.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("DPPCOND_THREADS must be a positive integer");
  long v = std::strtol(s.c_str(), nullptr, 10);
  if (v < 1 || v > 4096) throw ConfigError("DPPCOND_THREADS out of range");
  omp_set_num_threads(static_cast<int>(v));
}

int do_run(const std::string& config_path, const CLI::Option* seed_opt,
           uint64_t seed_cli, const CLI::Option* trials_opt, int trials_cli,
           const std::string& mode_cli, const std::string& out_cli,
           const std::vector<std::string>& tol_overrides) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_text_file(config_path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (seed_opt->count() > 0) j["seed"] = seed_cli;
  if (trials_opt->count() > 0) j["trials"] = trials_cli;
  if (!mode_cli.empty()) j["mode"] = mode_cli;
  for (const std::string& ov : tol_overrides) {
    auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == ov.size())
      throw ConfigError("--tol-override expects KEY=VALUE, got \"" + ov + "\"");
    std::string key = ov.substr(0, eq);
    double val;
    try {
      size_t used = 0;
      val = std::stod(ov.substr(eq + 1), &used);
      if (used != ov.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("bad numeric value in --tol-override \"" + ov + "\"");
    }
    Tolerances probe;
    if (kernel_tol_slot(probe, key)) {
      j["tolerances"][key] = val;
    } else if (default_check_tols().count(key)) {
      j["check_tolerances"][key] = val;
    } else {
      throw ConfigError("unknown --tol-override key \"" + key + "\"");
    }
  }
  std::string config_dir = fs::path(config_path).parent_path().string();
  RunConfig cfg = parse_run_config(j, config_dir.empty() ? "." : config_dir);
  if (!out_cli.empty()) cfg.out_dir = out_cli;
  return run_and_write(cfg);
}

int do_gen_corpus(uint64_t seed, int count, int n_min, int n_max, bool real,
                  const std::string& out_dir) {
  CorpusSpec spec;
  spec.seed = seed;
  spec.count = count;
  spec.n_min = n_min;
  spec.n_max = n_max;
  spec.allow_complex = !real;
  if (n_min < 2 || n_max < n_min) throw ConfigError("bad ground size range");
  auto entries = make_corpus(spec);

  fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::exists(dir)) throw IoFailure("cannot create " + out_dir);

  ordered_json manifest;
  manifest["schema"] = 1;
  manifest["seed"] = seed;
  manifest["count"] = count;
  ordered_json list = ordered_json::array();
  for (size_t i = 0; i < entries.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "kernel_%03zu.json", i);
    write_kernel_file((dir / name).string(), entries[i].kernel);
    ordered_json e;
    e["index"] = i;
    e["id"] = entries[i].id;
    e["file"] = name;
    e["n"] = entries[i].kernel.size();
    e["class"] = kernel_class_name(entries[i].cls);
    e["complex"] = entries[i].complex_entries;
    list.push_back(e);
  }
  manifest["entries"] = list;
  write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
  return 0;
}

int do_describe(const std::string& path) {
  KernelFile kf = read_kernel_file(path);
  const KernelMatrix& k = kf.kernel;
  ordered_json d;
  d["n"] = k.size();
  d["trace"] = k.trace();
  d["rank"] = k.rank();
  d["projection"] = k.is_projection();
  d["real"] = k.is_real();
  d["eigenvalue_min"] = k.size() ? k.eigenvalues().minCoeff() : 0.0;
  d["eigenvalue_max"] = k.size() ? k.eigenvalues().maxCoeff() : 0.0;
  ordered_json v;
  v["hermitian_defect"] = k.validation().hermitian_defect;
  v["clip_low"] = k.validation().clip_low;
  v["clip_high"] = k.validation().clip_high;
  v["reconstructed"] = k.validation().reconstructed;
  d["validation"] = v;
  d["ground_set"] = kf.ground.has_value();
  std::cout << d.dump(2) << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"conditional kernels for determinantal point processes"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a verification suite");
  std::string config_path;
  run->add_option("--config", config_path, "suite configuration JSON")
      ->required();
  uint64_t seed_cli = 0;
  auto* seed_opt = run->add_option("--seed", seed_cli, "override the seed");
  int trials_cli = 0;
  auto* trials_opt =
      run->add_option("--trials", trials_cli, "override the trial count")
          ->check(CLI::PositiveNumber);
  std::string mode_cli;
  run->add_option("--mode", mode_cli, "exact, mc or both")
      ->check(CLI::IsMember({"exact", "mc", "both"}));
  std::string out_cli;
  run->add_option("--out", out_cli, "output directory");
  std::vector<std::string> tol_overrides;
  run->add_option("--tol-override", tol_overrides,
                  "KEY=VALUE tolerance override, repeatable");

  auto* gen = app.add_subcommand("gen-corpus", "write a kernel corpus");
  uint64_t gseed = 0;
  gen->add_option("--seed", gseed, "corpus seed")->required();
  int gcount = 0;
  gen->add_option("--count", gcount, "number of kernels")
      ->required()
      ->check(CLI::PositiveNumber);
  int gmin = 2, gmax = 8;
  gen->add_option("--n-min", gmin, "smallest ground set");
  gen->add_option("--n-max", gmax, "largest ground set");
  bool greal = false;
  gen->add_flag("--real", greal, "real entries only");
  std::string gout = "corpus";
  gen->add_option("--out", gout, "output directory");

  auto* desc = app.add_subcommand("describe", "summarize a kernel file");
  std::string dpath;
  desc->add_option("file", dpath, "kernel JSON file")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    apply_threads_env();
    if (run->parsed())
      return do_run(config_path, seed_opt, seed_cli, trials_opt, trials_cli,
                    mode_cli, out_cli, tol_overrides);
    if (gen->parsed()) return do_gen_corpus(gseed, gcount, gmin, gmax, greal, gout);
    return do_describe(dpath);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
}

}  // namespace dppcond
