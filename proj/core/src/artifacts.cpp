#include "commdrop/artifacts.hpp"

#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "commdrop/errors.hpp"
#include "commdrop/pipeline.hpp"

namespace commdrop {

using nlohmann::json;

namespace {

json meta_to_json(const ArtifactMeta& meta) {
    return json{{"schema_version", meta.schema_version},
                {"seed", meta.seed},
                {"config_hash", meta.config_hash}};
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open artifact file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw SchemaError("artifact is not valid JSON (" + path + "): " + e.what());
    }
}

ArtifactMeta parse_meta(const json& doc, const std::string& path) {
    ArtifactMeta meta;
    if (!doc.is_object()) throw SchemaError("artifact root must be an object: " + path, "");
    auto sv = doc.find("schema_version");
    if (sv == doc.end() || !sv->is_number_integer())
        throw SchemaError("missing or non-integer schema_version", "/schema_version");
    meta.schema_version = sv->get<int>();
    if (meta.schema_version != kSchemaVersion)
        throw SchemaError("unsupported schema_version " + std::to_string(meta.schema_version) +
                              " (expected " + std::to_string(kSchemaVersion) + ")",
                          "/schema_version");
    auto seed = doc.find("seed");
    if (seed == doc.end() || !seed->is_number())
        throw SchemaError("missing or non-numeric seed", "/seed");
    meta.seed = seed->get<uint64_t>();
    auto hash = doc.find("config_hash");
    if (hash == doc.end() || !hash->is_string())
        throw SchemaError("missing or non-string config_hash", "/config_hash");
    meta.config_hash = hash->get<std::string>();
    return meta;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write artifact file: " + path);
    out << text;
    if (!out) throw Error("short write on artifact file: " + path);
}

json dropped_edge_to_json(const DroppedEdge& e) {
    json j;
    if (e.kind == DroppedEdge::Kind::Intra) {
        j["kind"] = "intra";
        j["round"] = e.location;
    } else {
        j["kind"] = "inter";
        j["boundary"] = e.location;
    }
    j["src"] = e.src;
    j["dst"] = e.dst;
    return j;
}

std::string edge_label(const DroppedEdge& e) {
    std::string where = e.kind == DroppedEdge::Kind::Intra
                            ? "round " + std::to_string(e.location)
                            : "boundary " + std::to_string(e.location);
    return e.src + "->" + e.dst + " (" + where + ")";
}

} // namespace

std::string checkpoint_filename(const std::string& stage_label) {
    if (stage_label == stage::kInit) return "init.adj.json";
    if (stage_label == stage::kTrainIntra || stage_label == stage::kTrainSingle)
        return "stage1.adj.json";
    if (stage_label == stage::kNodeDropout) return "node_dropout.adj.json";
    if (stage_label == stage::kTrainJoint) return "stage2.adj.json";
    if (stage_label == stage::kEdgeDropout) return "final.adj.json";
    return stage_label + ".adj.json";
}

void write_adjacency_file(const std::string& path, const AdjacencySet& adj,
                          const ArtifactMeta& meta) {
    json doc = meta_to_json(meta);
    doc["adjacency"] = json::parse(adj.to_json_string());
    write_text_file(path, doc.dump(2) + "\n");
}

AdjacencySet read_adjacency_file(const std::string& path, ArtifactMeta* meta_out) {
    json doc = load_json_file(path);
    ArtifactMeta meta = parse_meta(doc, path);
    if (meta_out) *meta_out = meta;
    auto body = doc.find("adjacency");
    if (body == doc.end() || !body->is_object())
        throw SchemaError("missing adjacency body", "/adjacency");
    return AdjacencySet::from_json_string(body->dump());
}

void write_plan_file(const std::string& dir, const PlanFile& plan) {
    json doc = meta_to_json(plan.meta);
    doc["strategy"] = plan.strategy;
    json nodes = json::array();
    for (const auto& round : plan.plan.dropped_nodes) nodes.push_back(round);
    doc["dropped_nodes"] = nodes;
    json edges = json::array();
    for (const auto& e : plan.plan.dropped_edges) edges.push_back(dropped_edge_to_json(e));
    doc["dropped_edges"] = edges;
    doc["final_adjacency_ref"] = plan.final_adjacency_ref;
    write_text_file((std::filesystem::path(dir) / "plan.json").string(), doc.dump(2) + "\n");
}

PlanFile read_plan_file(const std::string& plan_path) {
    json doc = load_json_file(plan_path);
    PlanFile plan;
    plan.meta = parse_meta(doc, plan_path);

    auto strategy = doc.find("strategy");
    if (strategy == doc.end() || !strategy->is_string() ||
        (*strategy != "two_stage" && *strategy != "single_stage"))
        throw SchemaError("strategy must be 'two_stage' or 'single_stage'", "/strategy");
    plan.strategy = strategy->get<std::string>();

    auto nodes = doc.find("dropped_nodes");
    if (nodes == doc.end() || !nodes->is_array())
        throw SchemaError("dropped_nodes must be an array", "/dropped_nodes");
    for (std::size_t r = 0; r < nodes->size(); ++r) {
        const json& round = (*nodes)[r];
        std::string ptr = "/dropped_nodes/" + std::to_string(r);
        if (!round.is_array()) throw SchemaError("per-round dropped_nodes must be arrays", ptr);
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < round.size(); ++i) {
            if (!round[i].is_string())
                throw SchemaError("dropped node ids must be strings",
                                  ptr + "/" + std::to_string(i));
            ids.push_back(round[i].get<std::string>());
        }
        plan.plan.dropped_nodes.push_back(std::move(ids));
    }

    auto edges = doc.find("dropped_edges");
    if (edges == doc.end() || !edges->is_array())
        throw SchemaError("dropped_edges must be an array", "/dropped_edges");
    for (std::size_t i = 0; i < edges->size(); ++i) {
        const json& e = (*edges)[i];
        std::string ptr = "/dropped_edges/" + std::to_string(i);
        if (!e.is_object()) throw SchemaError("dropped edges must be objects", ptr);
        DroppedEdge edge;
        auto kind = e.find("kind");
        if (kind == e.end() || !kind->is_string() || (*kind != "intra" && *kind != "inter"))
            throw SchemaError("edge kind must be 'intra' or 'inter'", ptr + "/kind");
        if (*kind == "intra") {
            edge.kind = DroppedEdge::Kind::Intra;
            auto round = e.find("round");
            if (round == e.end() || !round->is_number_integer() || round->get<int>() < 1)
                throw SchemaError("intra edge needs a positive 'round'", ptr + "/round");
            edge.location = round->get<int>();
        } else {
            edge.kind = DroppedEdge::Kind::Inter;
            auto boundary = e.find("boundary");
            if (boundary == e.end() || !boundary->is_number_integer() || boundary->get<int>() < 2)
                throw SchemaError("inter edge needs a 'boundary' >= 2", ptr + "/boundary");
            edge.location = boundary->get<int>();
        }
        auto src = e.find("src");
        if (src == e.end() || !src->is_string())
            throw SchemaError("edge src must be a string", ptr + "/src");
        edge.src = src->get<std::string>();
        auto dst = e.find("dst");
        if (dst == e.end() || !dst->is_string())
            throw SchemaError("edge dst must be a string", ptr + "/dst");
        edge.dst = dst->get<std::string>();
        plan.plan.dropped_edges.push_back(std::move(edge));
    }

    auto ref = doc.find("final_adjacency_ref");
    if (ref == doc.end() || !ref->is_string())
        throw SchemaError("final_adjacency_ref must be a string", "/final_adjacency_ref");
    plan.final_adjacency_ref = ref->get<std::string>();

    std::filesystem::path adj_path =
        std::filesystem::path(plan_path).parent_path() / plan.final_adjacency_ref;
    ArtifactMeta adj_meta;
    plan.plan.final_adjacency = read_adjacency_file(adj_path.string(), &adj_meta);
    if (adj_meta.config_hash != plan.meta.config_hash)
        throw SchemaError("plan and adjacency checkpoint disagree on config_hash (" +
                          plan.meta.config_hash + " vs " + adj_meta.config_hash + ")");
    if (adj_meta.seed != plan.meta.seed)
        throw SchemaError("plan and adjacency checkpoint disagree on seed");
    return plan;
}

void validate_plan(const PlanFile& plan) {
    const AdjacencySet& adj = plan.plan.final_adjacency;
    try {
        adj.validate();
    } catch (const ContractError& e) {
        throw SchemaError(std::string("final adjacency is inconsistent: ") + e.what());
    }
    if (int(plan.plan.dropped_nodes.size()) != adj.rounds())
        throw SchemaError("dropped_nodes has " + std::to_string(plan.plan.dropped_nodes.size()) +
                              " rounds but the final adjacency has " +
                              std::to_string(adj.rounds()),
                          "/dropped_nodes");

    auto is_dropped = [&](int round_zero_based, const std::string& id) {
        const auto& ids = plan.plan.dropped_nodes[std::size_t(round_zero_based)];
        for (const auto& d : ids)
            if (d == id) return true;
        return false;
    };

    for (int r = 0; r < adj.rounds(); ++r)
        for (const auto& id : plan.plan.dropped_nodes[std::size_t(r)])
            if (adj.node_index(r, id) >= 0)
                throw SchemaError("node '" + id + "' is listed as dropped in round " +
                                      std::to_string(r + 1) +
                                      " but still present in the final adjacency",
                                  "/dropped_nodes/" + std::to_string(r));

    for (std::size_t i = 0; i < plan.plan.dropped_edges.size(); ++i) {
        const DroppedEdge& e = plan.plan.dropped_edges[i];
        std::string ptr = "/dropped_edges/" + std::to_string(i);
        int src_round, dst_round; // zero-based rounds the endpoints live in
        if (e.kind == DroppedEdge::Kind::Intra) {
            if (e.location > adj.rounds())
                throw SchemaError("dropped edge " + edge_label(e) + " names a round beyond " +
                                      std::to_string(adj.rounds()),
                                  ptr);
            src_round = dst_round = e.location - 1;
        } else {
            if (e.location > adj.rounds())
                throw SchemaError("dropped edge " + edge_label(e) + " names a boundary beyond " +
                                      std::to_string(adj.rounds()),
                                  ptr);
            src_round = e.location - 2;
            dst_round = e.location - 1;
        }
        auto check_endpoint = [&](const std::string& id, int round) {
            if (adj.node_index(round, id) >= 0) return;
            std::string why = is_dropped(round, id)
                                  ? "references dropped node '" + id + "'"
                                  : "references unknown node '" + id + "' in round " +
                                        std::to_string(round + 1);
            throw SchemaError("dropped edge " + edge_label(e) + " " + why, ptr);
        };
        check_endpoint(e.src, src_round);
        check_endpoint(e.dst, dst_round);

        int i_src = adj.node_index(src_round, e.src);
        int i_dst = adj.node_index(dst_round, e.dst);
        bool trainable = e.kind == DroppedEdge::Kind::Intra
                             ? adj.intra_mask[std::size_t(src_round)](i_src, i_dst)
                             : adj.inter_mask[std::size_t(src_round)](i_src, i_dst);
        if (trainable)
            throw SchemaError("dropped edge " + edge_label(e) +
                                  " is still trainable in the final adjacency",
                              ptr);
    }
}

JsonlWriter::JsonlWriter(const std::string& path, const ArtifactMeta& meta,
                         const std::string& kind)
    : out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot write artifact file: " + path);
    json head = meta_to_json(meta);
    head["type"] = "meta";
    head["kind"] = kind;
    write_line(head.dump());
}

void JsonlWriter::write_line(const std::string& json_line) {
    out_ << json_line << '\n';
    out_.flush();
}

TraceWriter::TraceWriter(const std::string& path, const ArtifactMeta& meta)
    : writer_(path, meta, "trace") {}

void TraceWriter::write_step(const StepStats& stats) {
    json j;
    j["type"] = "step";
    j["stage"] = stats.stage;
    j["step"] = stats.step;
    j["mean_utility"] = stats.mean_utility;
    j["nuclear_norms"] =
        json{{"intra", stats.intra_nuclear_norms}, {"inter", stats.inter_nuclear_norms}};
    j["wall_time_ms"] = stats.wall_time_ms;
    writer_.write_line(j.dump());
}

RecordsWriter::RecordsWriter(const std::string& path, const ArtifactMeta& meta)
    : writer_(path, meta, "records") {}

void RecordsWriter::write_record(const RolloutRecord& record) {
    json outputs = json::array();
    for (const auto& o : record.outputs)
        outputs.push_back(json{
            {"agent_id", o.agent_id}, {"round", o.round_index}, {"content", o.content}});
    json j;
    j["type"] = "record";
    j["instance_id"] = record.instance_id;
    j["final_answer"] = record.final_answer;
    j["utility"] = record.utility;
    j["prompt_tokens"] = record.prompt_tokens;
    j["completion_tokens"] = record.completion_tokens;
    j["wall_time_ms"] = record.wall_time_ms;
    j["usage_estimated"] = record.usage_estimated;
    j["outputs"] = outputs;
    writer_.write_line(j.dump());
}

void write_report_file(const std::string& path, const EvalReport& report) {
    json doc = meta_to_json(report.meta);
    doc["instances"] = report.instances;
    doc["accuracy"] = report.accuracy;
    doc["prompt_tokens"] = report.prompt_tokens;
    doc["completion_tokens"] = report.completion_tokens;
    doc["wall_time_ms"] = report.wall_time_ms;
    doc["usage_estimated"] = report.usage_estimated;
    doc["records_ref"] = report.records_ref;
    write_text_file(path, doc.dump(2) + "\n");
}

EvalReport read_report_file(const std::string& path) {
    json doc = load_json_file(path);
    EvalReport report;
    report.meta = parse_meta(doc, path);
    auto get = [&](const char* field) -> const json& {
        auto it = doc.find(field);
        if (it == doc.end())
            throw SchemaError(std::string("missing field ") + field,
                              std::string("/") + field);
        return *it;
    };
    report.instances = get("instances").get<int>();
    report.accuracy = get("accuracy").get<double>();
    report.prompt_tokens = get("prompt_tokens").get<long long>();
    report.completion_tokens = get("completion_tokens").get<long long>();
    report.wall_time_ms = get("wall_time_ms").get<long long>();
    report.usage_estimated = get("usage_estimated").get<bool>();
    report.records_ref = get("records_ref").get<std::string>();
    return report;
}

} // namespace commdrop
