#pragma once

#include <json.hpp>
#include <optional>

#include "dppcond/distribution.hpp"
#include "dppcond/kernel.hpp"
#include "dppcond/sampler.hpp"

namespace dppcond {

using ordered_json = nlohmann::ordered_json;

struct KernelFile {
  KernelMatrix kernel;
  std::optional<GroundSet> ground;
};

ordered_json kernel_to_json(const KernelMatrix& k,
    const std::optional<GroundSet>& ground = std::nullopt);
KernelFile kernel_from_json(const nlohmann::json& j,
                            const Tolerances& tols = {});

void write_kernel_file(const std::string& path, const KernelMatrix& k,
    const std::optional<GroundSet>& ground = std::nullopt);
KernelFile read_kernel_file(const std::string& path,
                            const Tolerances& tols = {});

ordered_json distribution_to_json(const DppDistribution& d);
DppDistribution distribution_from_json(const nlohmann::json& j);

// JSON lines: one header object, then one sorted index array per sample.
std::string batch_to_jsonl(const SampleBatch& b);
SampleBatch batch_from_jsonl(const std::string& text);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace dppcond
