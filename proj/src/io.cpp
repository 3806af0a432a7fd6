#include "dppcond/io.hpp"

#include <fstream>
#include <sstream>

namespace dppcond {

ordered_json kernel_to_json(const KernelMatrix& k,
                            const std::optional<GroundSet>& ground) {
  ordered_json j;
  const int n = k.size();
  j["n"] = n;
  j["complex"] = !k.is_real();
  ordered_json entries = ordered_json::array();
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < n; ++c) {
      cplx v = k.entries()(i, c);
      if (k.is_real())
        entries.push_back(v.real());
      else
        entries.push_back(ordered_json::array({v.real(), v.imag()}));
    }
  j["entries"] = std::move(entries);
  if (ground) {
    ordered_json g;
    ordered_json coords = ordered_json::array();
    for (const auto& c : ground->coords) coords.push_back(c);
    g["coords"] = std::move(coords);
    g["weights"] = ground->weights;
    j["ground_set"] = std::move(g);
  }
  return j;
}

KernelFile kernel_from_json(const nlohmann::json& j, const Tolerances& tols) {
  try {
    int n = j.at("n").get<int>();
    if (n < 0) throw ParseError("negative n");
    bool is_complex = j.value("complex", false);
    const auto& entries = j.at("entries");
    if (static_cast<int>(entries.size()) != n * n)
      throw ParseError("entries length " + std::to_string(entries.size()) +
                       " does not match n=" + std::to_string(n));
    Eigen::MatrixXcd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < n; ++c) {
        const auto& e = entries[i * n + c];
        if (is_complex) {
          if (!e.is_array() || e.size() != 2)
            throw ParseError("complex entry must be a [re, im] pair");
          m(i, c) = cplx(e[0].get<double>(), e[1].get<double>());
        } else {
          m(i, c) = cplx(e.get<double>(), 0.0);
        }
      }
    KernelFile out;
    out.kernel = validate_kernel(m, tols);
    if (j.contains("ground_set")) {
      const auto& g = j.at("ground_set");
      GroundSet gs;
      for (const auto& c : g.at("coords")) {
        if (c.is_array())
          gs.coords.push_back(c.get<std::vector<double>>());
        else
          gs.coords.push_back({c.get<double>()});
      }
      gs.weights = g.at("weights").get<std::vector<double>>();
      if (gs.size() != n || static_cast<int>(gs.coords.size()) != n)
        throw ParseError("ground set size does not match n");
      out.ground = std::move(gs);
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoFailure("cannot open " + path + " for writing");
  f << text;
  if (!f) throw IoFailure("write failed for " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoFailure("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_kernel_file(const std::string& path, const KernelMatrix& k,
                       const std::optional<GroundSet>& ground) {
  write_text_file(path, kernel_to_json(k, ground).dump(2) + "\n");
}

KernelFile read_kernel_file(const std::string& path, const Tolerances& tols) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON in ") + path + ": " + e.what());
  }
  return kernel_from_json(j, tols);
}

ordered_json distribution_to_json(const DppDistribution& d) {
  ordered_json j;
  j["n"] = d.n;
  j["probs"] = d.probs;
  return j;
}

DppDistribution distribution_from_json(const nlohmann::json& j) {
  try {
    DppDistribution d;
    d.n = j.at("n").get<int>();
    d.probs = j.at("probs").get<std::vector<double>>();
    if (d.probs.size() != (size_t(1) << d.n))
      throw ParseError("probs length does not match 2^n");
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
}

std::string batch_to_jsonl(const SampleBatch& b) {
  std::ostringstream out;
  ordered_json head;
  head["seed"] = b.seed;
  head["kernel_id"] = b.kernel_id;
  head["n"] = b.n;
  out << head.dump() << "\n";
  for (const Configuration& c : b.configs)
    out << nlohmann::json(c.sites).dump() << "\n";
  return out.str();
}

SampleBatch batch_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  SampleBatch b;
  bool have_head = false;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line);
      if (!have_head) {
        b.seed = j.at("seed").get<uint64_t>();
        b.kernel_id = j.at("kernel_id").get<std::string>();
        b.n = j.at("n").get<int>();
        have_head = true;
        continue;
      }
      b.configs.push_back(
          Configuration::from(b.n, j.get<std::vector<int>>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
  if (!have_head) throw ParseError("missing batch header line");
  return b;
}

}  // namespace dppcond
