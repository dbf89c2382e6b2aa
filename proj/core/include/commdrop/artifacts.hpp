#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "commdrop/dropout.hpp"
#include "commdrop/rollout.hpp"
#include "commdrop/train.hpp"

namespace commdrop {

inline constexpr int kSchemaVersion = 1;

// Stamped on every artifact so runs can be matched to the exact configuration
// that produced them.
struct ArtifactMeta {
    int schema_version = kSchemaVersion;
    uint64_t seed = 0;
    std::string config_hash;
};

// Checkpoint label -> file name inside the run directory.
std::string checkpoint_filename(const std::string& stage_label);

void write_adjacency_file(const std::string& path, const AdjacencySet& adj,
                          const ArtifactMeta& meta);
AdjacencySet read_adjacency_file(const std::string& path, ArtifactMeta* meta_out = nullptr);

struct PlanFile {
    ArtifactMeta meta;
    std::string strategy; // "two_stage" | "single_stage"
    DropoutPlan plan;
    std::string final_adjacency_ref; // relative to the plan's directory
};

void write_plan_file(const std::string& dir, const PlanFile& plan);
// Reads dir/plan.json and the referenced adjacency file.
PlanFile read_plan_file(const std::string& plan_path);

// Cross-checks a plan against its final adjacency: dropped nodes absent from
// the surviving rounds, dropped edges joining surviving nodes whose mask slots
// are off. Throws SchemaError naming the first offending node or edge.
void validate_plan(const PlanFile& plan);

// JSON-lines writer whose first line is a meta record.
class JsonlWriter {
  public:
    JsonlWriter(const std::string& path, const ArtifactMeta& meta, const std::string& kind);
    void write_line(const std::string& json_line);

  private:
    std::ofstream out_;
};

// trace.jsonl: one line per optimization step.
class TraceWriter {
  public:
    TraceWriter(const std::string& path, const ArtifactMeta& meta);
    void write_step(const StepStats& stats);

  private:
    JsonlWriter writer_;
};

// records.jsonl: one line per evaluated instance.
class RecordsWriter {
  public:
    RecordsWriter(const std::string& path, const ArtifactMeta& meta);
    void write_record(const RolloutRecord& record);

  private:
    JsonlWriter writer_;
};

struct EvalReport {
    ArtifactMeta meta;
    int instances = 0;
    double accuracy = 0.0;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    long long wall_time_ms = 0;
    bool usage_estimated = false;
    std::string records_ref = "records.jsonl"; // per-instance records, same dir
};

void write_report_file(const std::string& path, const EvalReport& report);
EvalReport read_report_file(const std::string& path);

} // namespace commdrop
