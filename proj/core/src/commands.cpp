#include "commdrop/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include "commdrop/artifacts.hpp"
#include "commdrop/errors.hpp"
#include "commdrop/http_backend.hpp"
#include "commdrop/pipeline.hpp"
#include "commdrop/rng.hpp"
#include "commdrop/run_config.hpp"
#include "commdrop/synthetic.hpp"
#include "parallel.hpp"

namespace commdrop {

namespace fs = std::filesystem;

namespace {

template <typename Fn> int run_guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const SchemaError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ContractError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const OversizeError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const BackendError& e) {
        err << "error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const PipelineError& e) {
        err << "error: " << e.what() << "\n";
        return kExitPipeline;
    } catch (const RolloutError& e) {
        err << "error: " << e.what() << "\n";
        return kExitPipeline;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

RunConfig load_config(const std::string& path, const std::optional<uint64_t>& seed,
                      const std::optional<std::string>& output,
                      const std::optional<int>& parallelism) {
    RunConfig cfg = RunConfig::load_file(path);
    if (seed) {
        cfg.seed = *seed;
        cfg.train.seed = *seed;
    }
    if (output) cfg.output_dir = *output;
    if (parallelism) cfg.parallelism = *parallelism;
    cfg.validate_schema();
    return cfg;
}

// If decision-agent aggregation is on and the aggregator has no scripted
// behavior, give it the standard majority-follower (a coin-flip oracle that
// weighs its inputs fully), matching the synthetic task's default.
std::vector<SimulatedAgentSpec> with_aggregator_spec(std::vector<SimulatedAgentSpec> specs,
                                                     const RunConfig& cfg) {
    if (cfg.aggregation != AggregationMode::DecisionAgent) return specs;
    const std::string agg_id = cfg.team.aggregator_profile().agent_id;
    for (const auto& s : specs)
        if (s.agent_id == agg_id) return specs;
    SimulatedAgentSpec agg;
    agg.agent_id = agg_id;
    agg.behavior = SimBehavior::Oracle;
    agg.reliability = 0.5;
    agg.influence = 1.0;
    specs.push_back(std::move(agg));
    return specs;
}

std::shared_ptr<AgentBackend> make_http_backend(const RunConfig& cfg) {
    HttpBackendConfig http = cfg.backend.http;
    const char* key = std::getenv(cfg.backend.api_key_env.c_str());
    if (key == nullptr)
        throw ConfigError("environment variable not set: " + cfg.backend.api_key_env +
                          " (backend.api_key_env)");
    http.api_key = key;
    return std::make_shared<HttpBackend>(http);
}

struct TaskSetup {
    std::vector<TaskInstance> instances;
    std::shared_ptr<AgentBackend> backend;
    TaskKindSpec kind;
};

// `eval_side` selects the instance pool: the dataset's eval split (or a fresh
// synthetic batch) instead of the training one.
TaskSetup make_task_setup(const RunConfig& cfg, bool eval_side,
                          const std::optional<std::string>& dataset_override) {
    TaskSetup setup;
    setup.kind = cfg.task.kind;
    if (cfg.task.source == TaskConfig::Source::Synthetic) {
        SyntheticTaskSpec spec;
        spec.agent_specs = with_aggregator_spec(cfg.backend.sim_agents, cfg);
        spec.letters = cfg.task.kind.letters;
        spec.instance_count = cfg.task.synthetic_instances;
        uint64_t task_seed = eval_side ? derive_seed(cfg.seed, {hash_str("eval")}) : cfg.seed;
        PlantedTask task = make_planted_task(spec, task_seed);
        setup.instances = std::move(task.instances);
        setup.backend = task.backend;
        setup.kind = task.kind;
        return setup;
    }

    if (dataset_override) {
        setup.instances = load_jsonl_dataset(*dataset_override);
    } else {
        auto all = load_jsonl_dataset(cfg.task.dataset_path);
        if (int(all.size()) < cfg.task.train_samples)
            throw ConfigError("config field 'task.train_samples': dataset has only " +
                              std::to_string(all.size()) + " instances");
        auto [train, eval] = split_train_eval(std::move(all), cfg.task.train_samples, cfg.seed);
        setup.instances = eval_side ? std::move(eval) : std::move(train);
    }
    if (setup.instances.empty())
        throw ConfigError(eval_side ? "no evaluation instances (train_samples covers the dataset)"
                                    : "no training instances");

    if (cfg.backend.kind == BackendConfig::Kind::Simulated) {
        setup.backend = std::make_shared<SimulatedBackend>(
            with_aggregator_spec(cfg.backend.sim_agents, cfg), setup.instances, setup.kind,
            derive_seed(cfg.seed, {hash_str("backend")}));
    } else {
        setup.backend = make_http_backend(cfg);
    }
    return setup;
}

std::string format_double(double v) {
    std::ostringstream out;
    out << std::setprecision(6) << v;
    return out.str();
}

// Digit grid: '.' for untrainable slots, otherwise floor(w * 10) clamped to
// [0, 9], so '4'/'5' bracket an even coin and '9' is a near-certain edge.
void print_weight_grid(std::ostream& out, const Matrix& m, const BoolMatrix& mask,
                       const std::vector<std::string>& row_ids,
                       const std::vector<std::string>& col_ids) {
    std::size_t width = 3;
    for (const auto& id : row_ids) width = std::max(width, id.size());
    out << std::setw(int(width)) << "" << "  ";
    for (std::size_t c = 0; c < col_ids.size(); ++c) out << c % 10;
    out << "\n";
    for (int r = 0; r < m.rows; ++r) {
        out << std::setw(int(width)) << row_ids[std::size_t(r)] << "  ";
        for (int c = 0; c < m.cols; ++c) {
            if (!mask(r, c)) {
                out << '.';
            } else {
                int bucket = std::min(9, std::max(0, int(m(r, c) * 10.0)));
                out << bucket;
            }
        }
        out << "\n";
    }
}

void print_matrix_summary(std::ostream& out, const std::string& name, const Matrix& m,
                          const BoolMatrix& mask) {
    double lo = 1.0, hi = 0.0, sum = 0.0;
    long n = 0;
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            if (mask(r, c)) {
                lo = std::min(lo, m(r, c));
                hi = std::max(hi, m(r, c));
                sum += m(r, c);
                ++n;
            }
    out << name << ": " << m.rows << "x" << m.cols << ", trainable " << n;
    if (n > 0)
        out << ", weight min/mean/max " << format_double(lo) << "/" << format_double(sum / n)
            << "/" << format_double(hi);
    out << "\n";
}

std::string join_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ", ";
        out += ids[i];
    }
    return out.empty() ? "(none)" : out;
}

} // namespace

int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&]() {
        RunConfig cfg = load_config(opts.config_path, opts.seed, opts.output, opts.parallelism);
        cfg.validate_paths();
        const std::string hash = cfg.config_hash();

        // --output names the run directory exactly; otherwise each run gets a
        // timestamp+hash directory under output_dir for an audit trail.
        fs::path run_dir;
        if (opts.output) {
            run_dir = fs::path(*opts.output);
        } else {
            std::time_t now = std::time(nullptr);
            std::tm tm{};
            gmtime_r(&now, &tm);
            char stamp[32];
            std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
            run_dir = fs::path(cfg.output_dir) / (std::string(stamp) + "-" + hash);
            for (int n = 2; fs::exists(run_dir); ++n)
                run_dir = fs::path(cfg.output_dir) / (std::string(stamp) + "-" + hash + "-" +
                                                      std::to_string(n));
        }
        fs::create_directories(run_dir);

        TaskSetup setup = make_task_setup(cfg, /*eval_side=*/false, std::nullopt);
        ArtifactMeta meta{kSchemaVersion, cfg.seed, hash};

        TraceWriter trace((run_dir / "trace.jsonl").string(), meta);
        PipelineHooks hooks;
        hooks.step_sink = [&](const StepStats& stats) { trace.write_step(stats); };
        hooks.checkpoint_sink = [&](const std::string& stage, const AdjacencySet& adj) {
            fs::path path = run_dir / checkpoint_filename(stage);
            write_adjacency_file(path.string(), adj, meta);
            return path.string();
        };
        hooks.stage_log = [&](const std::string& line) { out << line << "\n"; };

        DropoutPlan plan =
            run_pipeline(cfg.team, *setup.backend, setup.instances, setup.kind, cfg.aggregation,
                         cfg.train, cfg.inter_shape, cfg.strategy, cfg.parallelism, hooks);

        PlanFile file;
        file.meta = meta;
        file.strategy = cfg.strategy == TrainStrategy::TwoStage ? "two_stage" : "single_stage";
        file.plan = plan;
        file.final_adjacency_ref = "final.adj.json";
        write_plan_file(run_dir.string(), file);

        std::size_t dropped_nodes = 0;
        for (const auto& round : plan.dropped_nodes) dropped_nodes += round.size();
        out << "run directory: " << run_dir.string() << "\n";
        out << "config_hash: " << hash << "\n";
        out << "plan: " << (run_dir / "plan.json").string() << " (" << dropped_nodes
            << " nodes dropped, " << plan.dropped_edges.size() << " edges dropped)\n";
        return kExitOk;
    });
}

int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&]() {
        RunConfig cfg = load_config(opts.config_path, opts.seed, opts.output, opts.parallelism);
        if (!opts.dataset && cfg.task.source == TaskConfig::Source::Dataset)
            cfg.validate_paths();

        PlanFile plan = read_plan_file(opts.plan_path);
        validate_plan(plan);

        const std::string hash = cfg.config_hash();
        if (plan.meta.config_hash != hash && !opts.force)
            throw ConfigError("plan was produced by a different configuration (plan config_hash " +
                              plan.meta.config_hash + ", current " + hash +
                              "); pass --force to evaluate anyway");

        TaskSetup setup = make_task_setup(cfg, /*eval_side=*/true, opts.dataset);

        GraphSample sample = dag_sample(plan.plan.final_adjacency,
                                        derive_seed(cfg.seed, {hash_str("inference")}),
                                        cfg.train.likelihood);

        std::vector<RolloutRecord> records(setup.instances.size());
        parallel_for(setup.instances.size(), std::size_t(cfg.parallelism), [&](std::size_t i) {
            try {
                records[i] = run_rollout(sample, cfg.team, *setup.backend, setup.instances[i],
                                         setup.kind, cfg.aggregation);
            } catch (const EmptyFinalRoundError& e) {
                records[i] = e.partial_record;
                records[i].instance_id = setup.instances[i].id;
                records[i].utility = 0.0;
            }
        });

        fs::path out_dir =
            opts.output ? fs::path(*opts.output) : fs::path(opts.plan_path).parent_path();
        fs::create_directories(out_dir);
        ArtifactMeta meta{kSchemaVersion, cfg.seed, hash};

        EvalReport report;
        report.meta = meta;
        report.instances = int(records.size());
        RecordsWriter writer((out_dir / "records.jsonl").string(), meta);
        out << std::left << std::setw(24) << "instance" << std::setw(16) << "answer"
            << "utility\n";
        double utility_sum = 0.0;
        for (const auto& r : records) {
            writer.write_record(r);
            utility_sum += r.utility;
            report.prompt_tokens += r.prompt_tokens;
            report.completion_tokens += r.completion_tokens;
            report.wall_time_ms += static_cast<long long>(r.wall_time_ms);
            report.usage_estimated = report.usage_estimated || r.usage_estimated;
            out << std::left << std::setw(24) << r.instance_id << std::setw(16)
                << extract_answer(r.final_answer, setup.kind) << format_double(r.utility) << "\n";
        }
        report.accuracy = records.empty() ? 0.0 : utility_sum / double(records.size());
        write_report_file((out_dir / "report.json").string(), report);

        out << "instances " << report.instances << "  accuracy " << format_double(report.accuracy)
            << "\n";
        out << "prompt_tokens " << report.prompt_tokens << "  completion_tokens "
            << report.completion_tokens << "  wall_time_ms " << report.wall_time_ms << "\n";
        out << "usage estimated: " << (report.usage_estimated ? "yes" : "no") << "\n";
        out << "records: " << (out_dir / "records.jsonl").string() << "\n";
        out << "report: " << (out_dir / "report.json").string() << "\n";
        return kExitOk;
    });
}

int cmd_inspect(const InspectOptions& opts, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&]() {
        PlanFile plan = read_plan_file(opts.plan_path);
        validate_plan(plan);
        const AdjacencySet& adj = plan.plan.final_adjacency;

        out << "plan: " << opts.plan_path << "\n";
        out << "schema_version " << plan.meta.schema_version << ", seed " << plan.meta.seed
            << ", config_hash " << plan.meta.config_hash << ", strategy " << plan.strategy
            << "\n";
        out << "rounds: " << adj.rounds() << "\n";

        std::size_t dropped_nodes = 0;
        for (const auto& round : plan.plan.dropped_nodes) dropped_nodes += round.size();
        for (int r = 0; r < adj.rounds(); ++r) {
            const auto& ids = adj.round_node_ids[std::size_t(r)];
            out << "round " << (r + 1) << ": survivors (" << ids.size() << "): " << join_ids(ids);
            const auto& dropped = plan.plan.dropped_nodes[std::size_t(r)];
            if (!dropped.empty()) out << " | dropped: " << join_ids(dropped);
            out << "\n";
        }

        if (dropped_nodes == 0 && plan.plan.dropped_edges.empty()) {
            out << "no dropout applied\n";
        } else if (plan.plan.dropped_edges.empty()) {
            out << "dropped edges: none\n";
        } else {
            out << "dropped edges (" << plan.plan.dropped_edges.size() << "):\n";
            for (const auto& e : plan.plan.dropped_edges) {
                if (e.kind == DroppedEdge::Kind::Intra)
                    out << "  intra round " << e.location << ": " << e.src << "->" << e.dst
                        << "\n";
                else
                    out << "  inter boundary " << e.location << ": " << e.src << "->" << e.dst
                        << "\n";
            }
        }

        for (int r = 0; r < adj.rounds(); ++r) {
            std::string name = "intra[" + std::to_string(r + 1) + "]";
            print_matrix_summary(out, name, adj.intra[std::size_t(r)],
                                 adj.intra_mask[std::size_t(r)]);
            print_weight_grid(out, adj.intra[std::size_t(r)], adj.intra_mask[std::size_t(r)],
                              adj.round_node_ids[std::size_t(r)],
                              adj.round_node_ids[std::size_t(r)]);
        }
        for (int r = 0; r + 1 < adj.rounds(); ++r) {
            std::string name =
                "inter[" + std::to_string(r + 1) + "->" + std::to_string(r + 2) + "]";
            print_matrix_summary(out, name, adj.inter[std::size_t(r)],
                                 adj.inter_mask[std::size_t(r)]);
            print_weight_grid(out, adj.inter[std::size_t(r)], adj.inter_mask[std::size_t(r)],
                              adj.round_node_ids[std::size_t(r)],
                              adj.round_node_ids[std::size_t(r + 1)]);
        }
        return kExitOk;
    });
}

} // namespace commdrop
