#pragma once

#include <string>
#include <vector>

#include "commdrop/http_backend.hpp"
#include "commdrop/pipeline.hpp"
#include "commdrop/simulated_backend.hpp"
#include "commdrop/task.hpp"

namespace commdrop {

struct BackendConfig {
    enum class Kind { Simulated, Http };
    Kind kind = Kind::Simulated;
    std::vector<SimulatedAgentSpec> sim_agents; // simulated
    HttpBackendConfig http;                     // http (api_key resolved via api_key_env)
    std::string api_key_env = "OPENAI_API_KEY";
};

struct TaskConfig {
    enum class Source { Dataset, Synthetic };
    Source source = Source::Dataset;
    std::string dataset_path;
    TaskKindSpec kind;
    int train_samples = 40;       // dataset source: size of the train split
    int synthetic_instances = 40; // synthetic source: instances per split
};

// One run's complete configuration. ${VAR} references in string values are
// interpolated from the environment at load time; credentials are referenced
// by variable name (api_key_env) and never stored, so no artifact carries a
// secret.
struct RunConfig {
    uint64_t seed = 0;
    std::string output_dir = "runs";
    int parallelism = 4;
    AggregationMode aggregation = AggregationMode::DecisionAgent;
    InterShape inter_shape = InterShape::UpperTriangular;
    TrainStrategy strategy = TrainStrategy::TwoStage;
    TeamSpec team;
    BackendConfig backend;
    TaskConfig task;
    TrainConfig train; // train.seed mirrors the top-level seed

    static RunConfig from_json_string(const std::string& text); // throws ConfigError/SchemaError
    static RunConfig load_file(const std::string& path);

    // Everything except filesystem checks; names the offending field.
    void validate_schema() const;
    // Filesystem-dependent checks (dataset existence).
    void validate_paths() const;

    // Canonical form: parsed config re-serialized with sorted keys, minus
    // output_dir (where artifacts land must not invalidate them).
    std::string canonical_json() const;
    // 16 hex chars of FNV-1a64 over canonical_json(); stamped into artifacts.
    std::string config_hash() const;
};

} // namespace commdrop
