#include "commdrop/run_config.hpp"

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "commdrop/errors.hpp"

namespace commdrop {

using nlohmann::json;

namespace {

// Replaces every ${NAME} in s with the environment value; unknown variables
// are an error so a missing credential fails loudly at load time.
std::string interpolate_env(const std::string& s) {
    std::string out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t open = s.find("${", pos);
        if (open == std::string::npos) {
            out.append(s, pos, std::string::npos);
            break;
        }
        std::size_t close = s.find('}', open + 2);
        if (close == std::string::npos)
            throw ConfigError("unterminated ${ in string value: " + s);
        out.append(s, pos, open - pos);
        std::string name = s.substr(open + 2, close - open - 2);
        const char* value = std::getenv(name.c_str());
        if (value == nullptr)
            throw ConfigError("environment variable not set: " + name);
        out.append(value);
        pos = close + 1;
    }
    return out;
}

void interpolate_tree(json& node) {
    if (node.is_string()) {
        std::string s = node.get<std::string>();
        if (s.find("${") != std::string::npos) node = interpolate_env(s);
    } else if (node.is_object() || node.is_array()) {
        for (auto& child : node) interpolate_tree(child);
    }
}

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
    throw ConfigError("config field '" + field + "': " + why);
}

const json& require(const json& obj, const std::string& field, const std::string& ctx) {
    auto it = obj.find(field);
    if (it == obj.end()) bad_field(ctx + field, "missing");
    return *it;
}

std::string get_string(const json& obj, const std::string& field, const std::string& ctx) {
    const json& v = require(obj, field, ctx);
    if (!v.is_string()) bad_field(ctx + field, "must be a string");
    return v.get<std::string>();
}

std::string get_string_or(const json& obj, const std::string& field, const std::string& ctx,
                          const std::string& fallback) {
    auto it = obj.find(field);
    if (it == obj.end()) return fallback;
    if (!it->is_string()) bad_field(ctx + field, "must be a string");
    return it->get<std::string>();
}

double get_number_or(const json& obj, const std::string& field, const std::string& ctx,
                     double fallback) {
    auto it = obj.find(field);
    if (it == obj.end()) return fallback;
    if (!it->is_number()) bad_field(ctx + field, "must be a number");
    return it->get<double>();
}

int get_int_or(const json& obj, const std::string& field, const std::string& ctx, int fallback) {
    auto it = obj.find(field);
    if (it == obj.end()) return fallback;
    if (!it->is_number_integer()) bad_field(ctx + field, "must be an integer");
    return it->get<int>();
}

uint64_t get_u64_or(const json& obj, const std::string& field, const std::string& ctx,
                    uint64_t fallback) {
    auto it = obj.find(field);
    if (it == obj.end()) return fallback;
    if (!it->is_number_integer() || (it->is_number_integer() && it->get<int64_t>() < 0 &&
                                     !it->is_number_unsigned()))
        bad_field(ctx + field, "must be a non-negative integer");
    return it->get<uint64_t>();
}

TopologyInit parse_topology(const json& obj) {
    TopologyInit topo;
    std::string type = get_string(obj, "type", "team.topology.");
    if (type == "fully_connected") {
        topo.kind = TopologyKind::FullyConnected;
    } else if (type == "layered") {
        topo.kind = TopologyKind::Layered;
        const json& sizes = require(obj, "layer_sizes", "team.topology.");
        if (!sizes.is_array()) bad_field("team.topology.layer_sizes", "must be an array");
        for (const auto& s : sizes) {
            if (!s.is_number_integer()) bad_field("team.topology.layer_sizes", "must hold integers");
            topo.layer_sizes.push_back(s.get<int>());
        }
    } else if (type == "random") {
        topo.kind = TopologyKind::Random;
        topo.edge_probability = get_number_or(obj, "edge_probability", "team.topology.", 0.5);
    } else {
        bad_field("team.topology.type", "unknown value '" + type + "'");
    }
    return topo;
}

AgentProfile parse_profile(const json& obj, const std::string& ctx) {
    AgentProfile p;
    p.agent_id = get_string(obj, "agent_id", ctx);
    p.role_name = get_string(obj, "role_name", ctx);
    p.prompt_template = get_string_or(obj, "prompt_template", ctx, default_prompt_template());
    p.temperature = get_number_or(obj, "temperature", ctx, 1.0);
    return p;
}

TeamSpec parse_team(const json& obj) {
    TeamSpec team;
    team.rounds = get_int_or(obj, "rounds", "team.", 1);
    team.topology = parse_topology(require(obj, "topology", "team."));
    const json& agents = require(obj, "agents", "team.");
    if (!agents.is_array() || agents.empty()) bad_field("team.agents", "must be a non-empty array");
    for (const auto& a : agents) team.agents.push_back(parse_profile(a, "team.agents[]."));
    if (auto it = obj.find("aggregator"); it != obj.end())
        team.aggregator = parse_profile(*it, "team.aggregator.");
    return team;
}

SimulatedAgentSpec parse_sim_agent(const json& obj) {
    SimulatedAgentSpec spec;
    const std::string ctx = "backend.agents[].";
    spec.agent_id = get_string(obj, "agent_id", ctx);
    std::string behavior = get_string(obj, "behavior", ctx);
    if (behavior == "oracle")
        spec.behavior = SimBehavior::Oracle;
    else if (behavior == "saboteur")
        spec.behavior = SimBehavior::Saboteur;
    else if (behavior == "echo")
        spec.behavior = SimBehavior::Echo;
    else if (behavior == "constant")
        spec.behavior = SimBehavior::Constant;
    else
        bad_field(ctx + "behavior", "unknown value '" + behavior + "'");
    spec.reliability = get_number_or(obj, "reliability", ctx, 1.0);
    spec.strength = get_number_or(obj, "strength", ctx, 1.0);
    spec.text = get_string_or(obj, "text", ctx, "");
    spec.influence = get_number_or(obj, "influence", ctx, 0.0);
    return spec;
}

BackendConfig parse_backend(const json& obj) {
    BackendConfig cfg;
    std::string type = get_string(obj, "type", "backend.");
    if (type == "simulated") {
        cfg.kind = BackendConfig::Kind::Simulated;
        const json& agents = require(obj, "agents", "backend.");
        if (!agents.is_array() || agents.empty())
            bad_field("backend.agents", "must be a non-empty array");
        for (const auto& a : agents) cfg.sim_agents.push_back(parse_sim_agent(a));
    } else if (type == "http") {
        cfg.kind = BackendConfig::Kind::Http;
        cfg.http.base_url = get_string(obj, "base_url", "backend.");
        cfg.http.model = get_string(obj, "model", "backend.");
        cfg.http.path = get_string_or(obj, "path", "backend.", cfg.http.path);
        cfg.api_key_env = get_string_or(obj, "api_key_env", "backend.", cfg.api_key_env);
        cfg.http.timeout_seconds = get_int_or(obj, "timeout_seconds", "backend.", 120);
        cfg.http.max_attempts = get_int_or(obj, "max_attempts", "backend.", 3);
        cfg.http.initial_backoff_seconds =
            get_number_or(obj, "initial_backoff_seconds", "backend.", 1.0);
        cfg.http.max_inflight = get_int_or(obj, "max_inflight", "backend.", 4);
        cfg.http.requests_per_minute = get_int_or(obj, "requests_per_minute", "backend.", 0);
        if (auto it = obj.find("extra_fields"); it != obj.end()) {
            if (!it->is_object()) bad_field("backend.extra_fields", "must be an object");
            cfg.http.extra_fields_json = it->dump();
        }
    } else {
        bad_field("backend.type", "unknown value '" + type + "'");
    }
    return cfg;
}

TaskConfig parse_task(const json& obj) {
    TaskConfig cfg;
    std::string source = get_string_or(obj, "source", "task.", "dataset");
    if (source == "dataset")
        cfg.source = TaskConfig::Source::Dataset;
    else if (source == "synthetic")
        cfg.source = TaskConfig::Source::Synthetic;
    else
        bad_field("task.source", "unknown value '" + source + "'");
    cfg.dataset_path = get_string_or(obj, "dataset", "task.", "");
    std::string kind = get_string_or(obj, "kind", "task.", "multiple_choice");
    if (kind == "multiple_choice")
        cfg.kind.kind = AnswerKind::MultipleChoice;
    else if (kind == "numeric")
        cfg.kind.kind = AnswerKind::Numeric;
    else if (kind == "exact_text")
        cfg.kind.kind = AnswerKind::ExactText;
    else
        bad_field("task.kind", "unknown value '" + kind + "'");
    cfg.kind.letters = get_string_or(obj, "letters", "task.",
                                     cfg.source == TaskConfig::Source::Synthetic ? "AB" : "ABCD");
    cfg.kind.numeric_tolerance = get_number_or(obj, "numeric_tolerance", "task.", 1e-6);
    cfg.train_samples = get_int_or(obj, "train_samples", "task.", 40);
    cfg.synthetic_instances = get_int_or(obj, "instances", "task.", 40);
    return cfg;
}

TrainConfig parse_train(const json& obj) {
    TrainConfig cfg;
    cfg.steps = get_int_or(obj, "steps", "train.", cfg.steps);
    cfg.samples_per_step = get_int_or(obj, "samples_per_step", "train.", cfg.samples_per_step);
    cfg.learning_rate = get_number_or(obj, "learning_rate", "train.", cfg.learning_rate);
    cfg.node_dropout_rate = get_number_or(obj, "node_dropout_rate", "train.", cfg.node_dropout_rate);
    cfg.edge_dropout_rate = get_number_or(obj, "edge_dropout_rate", "train.", cfg.edge_dropout_rate);
    cfg.nuclear_coefficient =
        get_number_or(obj, "nuclear_coefficient", "train.", cfg.nuclear_coefficient);
    std::string baseline = get_string_or(obj, "baseline", "train.", "none");
    if (baseline == "none")
        cfg.baseline = Baseline::None;
    else if (baseline == "batch_mean")
        cfg.baseline = Baseline::BatchMean;
    else
        bad_field("train.baseline", "unknown value '" + baseline + "'");
    std::string likelihood = get_string_or(obj, "likelihood", "train.", "paper");
    if (likelihood == "paper")
        cfg.likelihood = LikelihoodMode::Paper;
    else if (likelihood == "bernoulli")
        cfg.likelihood = LikelihoodMode::Bernoulli;
    else
        bad_field("train.likelihood", "unknown value '" + likelihood + "'");
    return cfg;
}

json topology_to_json(const TopologyInit& topo) {
    json j;
    switch (topo.kind) {
    case TopologyKind::FullyConnected: j["type"] = "fully_connected"; break;
    case TopologyKind::Layered:
        j["type"] = "layered";
        j["layer_sizes"] = topo.layer_sizes;
        break;
    case TopologyKind::Random:
        j["type"] = "random";
        j["edge_probability"] = topo.edge_probability;
        break;
    }
    return j;
}

json profile_to_json(const AgentProfile& p) {
    return json{{"agent_id", p.agent_id},
                {"role_name", p.role_name},
                {"prompt_template", p.prompt_template},
                {"temperature", p.temperature}};
}

json sim_agent_to_json(const SimulatedAgentSpec& s) {
    json j;
    j["agent_id"] = s.agent_id;
    switch (s.behavior) {
    case SimBehavior::Oracle:
        j["behavior"] = "oracle";
        j["reliability"] = s.reliability;
        break;
    case SimBehavior::Saboteur:
        j["behavior"] = "saboteur";
        j["strength"] = s.strength;
        break;
    case SimBehavior::Echo: j["behavior"] = "echo"; break;
    case SimBehavior::Constant:
        j["behavior"] = "constant";
        j["text"] = s.text;
        break;
    }
    j["influence"] = s.influence;
    return j;
}

} // namespace

RunConfig RunConfig::from_json_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    interpolate_tree(doc);

    static const char* known[] = {"seed",        "output_dir", "parallelism", "aggregation",
                                  "inter_shape", "strategy",   "team",        "backend",
                                  "task",        "train"};
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) bad_field(key, "unknown top-level field");
    }

    RunConfig cfg;
    cfg.seed = get_u64_or(doc, "seed", "", 0);
    cfg.output_dir = get_string_or(doc, "output_dir", "", "runs");
    cfg.parallelism = get_int_or(doc, "parallelism", "", 4);

    std::string agg = get_string_or(doc, "aggregation", "", "decision_agent");
    if (agg == "decision_agent")
        cfg.aggregation = AggregationMode::DecisionAgent;
    else if (agg == "majority_vote")
        cfg.aggregation = AggregationMode::MajorityVote;
    else
        bad_field("aggregation", "unknown value '" + agg + "'");

    std::string shape = get_string_or(doc, "inter_shape", "", "upper_triangular");
    if (shape == "upper_triangular")
        cfg.inter_shape = InterShape::UpperTriangular;
    else if (shape == "full")
        cfg.inter_shape = InterShape::Full;
    else
        bad_field("inter_shape", "unknown value '" + shape + "'");

    std::string strategy = get_string_or(doc, "strategy", "", "two_stage");
    if (strategy == "two_stage")
        cfg.strategy = TrainStrategy::TwoStage;
    else if (strategy == "single_stage")
        cfg.strategy = TrainStrategy::SingleStage;
    else
        bad_field("strategy", "unknown value '" + strategy + "'");

    cfg.team = parse_team(require(doc, "team", ""));
    cfg.backend = parse_backend(require(doc, "backend", ""));
    cfg.task = parse_task(require(doc, "task", ""));
    if (auto it = doc.find("train"); it != doc.end())
        cfg.train = parse_train(*it);
    cfg.train.seed = cfg.seed;
    return cfg;
}

RunConfig RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_string(buf.str());
}

void RunConfig::validate_schema() const {
    if (parallelism < 1) throw ConfigError("config field 'parallelism': must be >= 1");
    team.validate();
    train.validate();
    if (backend.kind == BackendConfig::Kind::Simulated) {
        for (const auto& spec : backend.sim_agents) spec.validate();
        // Every team agent needs a behavior; extra behaviors are allowed so one
        // backend config can serve several team variants.
        for (const auto& agent : team.agents) {
            bool found = false;
            for (const auto& spec : backend.sim_agents) found = found || spec.agent_id == agent.agent_id;
            if (!found)
                throw ConfigError("config field 'backend.agents': no behavior for team agent '" +
                                  agent.agent_id + "'");
        }
    } else {
        if (backend.http.base_url.empty())
            throw ConfigError("config field 'backend.base_url': must be non-empty");
        if (backend.http.model.empty())
            throw ConfigError("config field 'backend.model': must be non-empty");
        if (backend.api_key_env.empty())
            throw ConfigError("config field 'backend.api_key_env': must be non-empty");
    }
    if (task.source == TaskConfig::Source::Dataset) {
        if (task.dataset_path.empty())
            throw ConfigError("config field 'task.dataset': required when task.source is 'dataset'");
        if (task.train_samples < 1)
            throw ConfigError("config field 'task.train_samples': must be >= 1");
    } else {
        if (backend.kind != BackendConfig::Kind::Simulated)
            throw ConfigError("config field 'task.source': 'synthetic' requires a simulated backend");
        if (task.synthetic_instances < 1)
            throw ConfigError("config field 'task.instances': must be >= 1");
        if (task.kind.kind != AnswerKind::MultipleChoice)
            throw ConfigError("config field 'task.kind': synthetic tasks are multiple_choice");
    }
    if (task.kind.kind == AnswerKind::MultipleChoice && task.kind.letters.size() < 2)
        throw ConfigError("config field 'task.letters': need at least two option letters");
    if (task.kind.numeric_tolerance < 0)
        throw ConfigError("config field 'task.numeric_tolerance': must be >= 0");
}

void RunConfig::validate_paths() const {
    if (task.source == TaskConfig::Source::Dataset &&
        !std::filesystem::exists(task.dataset_path))
        throw ConfigError("config field 'task.dataset': file not found: " + task.dataset_path);
}

std::string RunConfig::canonical_json() const {
    // nlohmann::json objects are key-sorted maps, so dump() is canonical.
    // output_dir and parallelism are execution details, not part of the
    // configuration identity a plan is bound to.
    json doc;
    doc["seed"] = seed;
    doc["aggregation"] =
        aggregation == AggregationMode::DecisionAgent ? "decision_agent" : "majority_vote";
    doc["inter_shape"] = inter_shape == InterShape::UpperTriangular ? "upper_triangular" : "full";
    doc["strategy"] = strategy == TrainStrategy::TwoStage ? "two_stage" : "single_stage";

    json team_j;
    team_j["rounds"] = team.rounds;
    team_j["topology"] = topology_to_json(team.topology);
    team_j["agents"] = json::array();
    for (const auto& a : team.agents) team_j["agents"].push_back(profile_to_json(a));
    if (team.aggregator) team_j["aggregator"] = profile_to_json(*team.aggregator);
    doc["team"] = team_j;

    json backend_j;
    if (backend.kind == BackendConfig::Kind::Simulated) {
        backend_j["type"] = "simulated";
        backend_j["agents"] = json::array();
        for (const auto& s : backend.sim_agents) backend_j["agents"].push_back(sim_agent_to_json(s));
    } else {
        backend_j["type"] = "http";
        backend_j["base_url"] = backend.http.base_url;
        backend_j["path"] = backend.http.path;
        backend_j["model"] = backend.http.model;
        backend_j["api_key_env"] = backend.api_key_env;
        backend_j["timeout_seconds"] = backend.http.timeout_seconds;
        backend_j["max_attempts"] = backend.http.max_attempts;
        backend_j["initial_backoff_seconds"] = backend.http.initial_backoff_seconds;
        backend_j["max_inflight"] = backend.http.max_inflight;
        backend_j["requests_per_minute"] = backend.http.requests_per_minute;
        if (!backend.http.extra_fields_json.empty())
            backend_j["extra_fields"] = json::parse(backend.http.extra_fields_json);
    }
    doc["backend"] = backend_j;

    json task_j;
    task_j["source"] = task.source == TaskConfig::Source::Dataset ? "dataset" : "synthetic";
    if (!task.dataset_path.empty()) task_j["dataset"] = task.dataset_path;
    switch (task.kind.kind) {
    case AnswerKind::MultipleChoice: task_j["kind"] = "multiple_choice"; break;
    case AnswerKind::Numeric: task_j["kind"] = "numeric"; break;
    case AnswerKind::ExactText: task_j["kind"] = "exact_text"; break;
    }
    task_j["letters"] = task.kind.letters;
    task_j["numeric_tolerance"] = task.kind.numeric_tolerance;
    task_j["train_samples"] = task.train_samples;
    task_j["instances"] = task.synthetic_instances;
    doc["task"] = task_j;

    json train_j;
    train_j["steps"] = train.steps;
    train_j["samples_per_step"] = train.samples_per_step;
    train_j["learning_rate"] = train.learning_rate;
    train_j["node_dropout_rate"] = train.node_dropout_rate;
    train_j["edge_dropout_rate"] = train.edge_dropout_rate;
    train_j["nuclear_coefficient"] = train.nuclear_coefficient;
    train_j["baseline"] = train.baseline == Baseline::None ? "none" : "batch_mean";
    train_j["likelihood"] = train.likelihood == LikelihoodMode::Paper ? "paper" : "bernoulli";
    doc["train"] = train_j;

    return doc.dump();
}

std::string RunConfig::config_hash() const {
    std::string text = canonical_json();
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    static const char* digits = "0123456789abcdef";
    std::string hex(16, '0');
    for (int i = 15; i >= 0; --i) {
        hex[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return hex;
}

} // namespace commdrop
