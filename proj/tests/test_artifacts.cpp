#include <doctest.h>

#include "commdrop/artifacts.hpp"
#include "commdrop/pipeline.hpp"

#include "support/temp_dir.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

using namespace commdrop;
using nlohmann::json;

namespace {

TeamSpec team_of(int n, int rounds) {
    TeamSpec team;
    const char* ids = "abcdefgh";
    for (int i = 0; i < n; ++i)
        team.agents.push_back(make_profile(std::string(1, ids[i]), "Role " + std::to_string(i)));
    team.rounds = rounds;
    return team;
}

bool same_adj(const AdjacencySet& x, const AdjacencySet& y) {
    if (x.round_node_ids != y.round_node_ids) return false;
    for (size_t t = 0; t < x.intra.size(); ++t)
        if (x.intra[t].data != y.intra[t].data || x.intra_mask[t].data != y.intra_mask[t].data)
            return false;
    for (size_t t = 0; t < x.inter.size(); ++t)
        if (x.inter[t].data != y.inter[t].data || x.inter_mask[t].data != y.inter_mask[t].data)
            return false;
    return true;
}

ArtifactMeta meta_of(uint64_t seed, const std::string& hash) {
    ArtifactMeta meta;
    meta.seed = seed;
    meta.config_hash = hash;
    return meta;
}

// A small plan with real drops, produced by the actual pipeline.
DropoutPlan make_plan() {
    TrainConfig cfg;
    cfg.steps = 1;
    cfg.samples_per_step = 4;
    cfg.node_dropout_rate = 0.25;
    cfg.edge_dropout_rate = 0.25;
    cfg.seed = 11;
    auto evaluate = [](const GraphSample& s, int, int) {
        double e = 0.0;
        for (const auto& round : s.intra_edges) e += double(round.size());
        return SampleScore{e / 30.0, 0.0};
    };
    return run_pipeline(team_of(4, 2), evaluate, cfg);
}

// Writes the plan's files into dir and returns the plan.json path.
std::string write_plan_dir(const commdrop::test::TempDir& dir, const PlanFile& pf) {
    write_plan_file(dir.path.string(), pf);
    write_adjacency_file(dir.file(pf.final_adjacency_ref), pf.plan.final_adjacency, pf.meta);
    return dir.file("plan.json");
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

} // namespace

TEST_CASE("adjacency files round-trip weights, masks, and meta exactly") {
    commdrop::test::TempDir dir;
    AdjacencySet adj = init_adjacency(team_of(3, 2), InterShape::UpperTriangular, 3);
    adj.intra[0](0, 1) = 0.123;
    adj.inter[0](1, 2) = 0.987; // within the clip range, survives validation

    std::string path = dir.file("snapshot.adj.json");
    write_adjacency_file(path, adj, meta_of(9, "00ff00ff00ff00ff"));

    ArtifactMeta meta;
    AdjacencySet back = read_adjacency_file(path, &meta);
    CHECK(same_adj(adj, back));
    CHECK(back.intra[0](0, 1) == 0.123); // exact doubles, not rounded
    CHECK(meta.seed == 9);
    CHECK(meta.config_hash == "00ff00ff00ff00ff");
    CHECK(meta.schema_version == kSchemaVersion);
    back.validate();
}

TEST_CASE("checkpoint labels map to fixed file names") {
    CHECK(checkpoint_filename(stage::kInit) == "init.adj.json");
    CHECK(checkpoint_filename(stage::kTrainIntra) == "stage1.adj.json");
    CHECK(checkpoint_filename(stage::kTrainSingle) == "stage1.adj.json");
    CHECK(checkpoint_filename(stage::kNodeDropout) == "node_dropout.adj.json");
    CHECK(checkpoint_filename(stage::kTrainJoint) == "stage2.adj.json");
    CHECK(checkpoint_filename(stage::kEdgeDropout) == "final.adj.json");
    CHECK(checkpoint_filename("other") == "other.adj.json");
}

TEST_CASE("plan files round-trip and validate") {
    commdrop::test::TempDir dir;
    PlanFile pf;
    pf.meta = meta_of(11, "1111222233334444");
    pf.strategy = "two_stage";
    pf.plan = make_plan();
    pf.final_adjacency_ref = "final.adj.json";
    std::string plan_path = write_plan_dir(dir, pf);

    PlanFile back = read_plan_file(plan_path);
    CHECK(back.strategy == "two_stage");
    CHECK(back.meta.seed == 11);
    CHECK(back.plan.dropped_nodes == pf.plan.dropped_nodes);
    CHECK(back.plan.dropped_edges == pf.plan.dropped_edges);
    CHECK(back.final_adjacency_ref == "final.adj.json");
    CHECK(same_adj(back.plan.final_adjacency, pf.plan.final_adjacency));
    validate_plan(back);
}

TEST_CASE("a plan rejects an adjacency written under a different config") {
    commdrop::test::TempDir dir;
    PlanFile pf;
    pf.meta = meta_of(11, "1111222233334444");
    pf.strategy = "two_stage";
    pf.plan = make_plan();
    pf.final_adjacency_ref = "final.adj.json";
    write_plan_file(dir.path.string(), pf);

    SUBCASE("hash mismatch") {
        write_adjacency_file(dir.file("final.adj.json"), pf.plan.final_adjacency,
                             meta_of(11, "9999999999999999"));
        try {
            read_plan_file(dir.file("plan.json"));
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(std::string(e.what()).find("config_hash") != std::string::npos);
        }
    }
    SUBCASE("seed mismatch") {
        write_adjacency_file(dir.file("final.adj.json"), pf.plan.final_adjacency,
                             meta_of(12, "1111222233334444"));
        CHECK_THROWS_AS(read_plan_file(dir.file("plan.json")), SchemaError);
    }
}

TEST_CASE("plan validation catches tampering") {
    PlanFile pf;
    pf.meta = meta_of(11, "1111222233334444");
    pf.strategy = "two_stage";
    pf.plan = make_plan();
    pf.final_adjacency_ref = "final.adj.json";
    REQUIRE_FALSE(pf.plan.dropped_nodes[0].empty());
    REQUIRE_FALSE(pf.plan.dropped_edges.empty());
    const std::string dropped_id = pf.plan.dropped_nodes[0][0];
    const std::string surviving_id = pf.plan.final_adjacency.round_node_ids[0][0];

    SUBCASE("an edge referencing a dropped node") {
        pf.plan.dropped_edges.push_back(
            DroppedEdge{DroppedEdge::Kind::Intra, 1, dropped_id, surviving_id});
        try {
            validate_plan(pf);
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(std::string(e.what()).find("references dropped node '" + dropped_id + "'") !=
                  std::string::npos);
        }
    }
    SUBCASE("an edge referencing an unknown node") {
        pf.plan.dropped_edges.push_back(
            DroppedEdge{DroppedEdge::Kind::Intra, 1, "nobody", surviving_id});
        try {
            validate_plan(pf);
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(std::string(e.what()).find("unknown node 'nobody'") != std::string::npos);
        }
    }
    SUBCASE("an edge that is still trainable") {
        // Find a surviving trainable intra pair and claim it was dropped.
        const AdjacencySet& adj = pf.plan.final_adjacency;
        bool added = false;
        for (int r = 0; r < adj.rounds() && !added; ++r)
            for (int i = 0; i < adj.node_count(r) && !added; ++i)
                for (int j = 0; j < adj.node_count(r) && !added; ++j)
                    if (adj.intra_mask[size_t(r)](i, j)) {
                        pf.plan.dropped_edges.push_back(
                            DroppedEdge{DroppedEdge::Kind::Intra, r + 1,
                                        adj.round_node_ids[size_t(r)][size_t(i)],
                                        adj.round_node_ids[size_t(r)][size_t(j)]});
                        added = true;
                    }
        REQUIRE(added);
        try {
            validate_plan(pf);
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(std::string(e.what()).find("still trainable") != std::string::npos);
        }
    }
    SUBCASE("a dropped node that is still present") {
        pf.plan.dropped_nodes[0].push_back(surviving_id);
        try {
            validate_plan(pf);
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(std::string(e.what()).find("still present") != std::string::npos);
        }
    }
    SUBCASE("wrong number of dropout rounds") {
        pf.plan.dropped_nodes.pop_back();
        CHECK_THROWS_AS(validate_plan(pf), SchemaError);
    }
    SUBCASE("the untampered plan passes") { validate_plan(pf); }
}

TEST_CASE("reading a plan enforces its schema") {
    commdrop::test::TempDir dir;
    PlanFile pf;
    pf.meta = meta_of(11, "1111222233334444");
    pf.strategy = "two_stage";
    pf.plan = make_plan();
    pf.final_adjacency_ref = "final.adj.json";
    std::string plan_path = write_plan_dir(dir, pf);

    auto rewrite = [&](void (*mutate)(json&)) {
        json doc = json::parse(commdrop::test::read_file(plan_path));
        mutate(doc);
        std::ofstream out(plan_path, std::ios::binary);
        out << doc.dump(2) << "\n";
    };

    SUBCASE("unknown strategy") {
        rewrite([](json& d) { d["strategy"] = "three_stage"; });
        try {
            read_plan_file(plan_path);
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(e.pointer() == "/strategy");
        }
    }
    SUBCASE("future schema version") {
        rewrite([](json& d) { d["schema_version"] = kSchemaVersion + 1; });
        try {
            read_plan_file(plan_path);
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(std::string(e.what()).find("unsupported schema_version") != std::string::npos);
        }
    }
    SUBCASE("missing seed") {
        rewrite([](json& d) { d.erase("seed"); });
        CHECK_THROWS_AS(read_plan_file(plan_path), SchemaError);
    }
    SUBCASE("bad edge kind") {
        rewrite([](json& d) {
            d["dropped_edges"] = json::array(
                {json{{"kind", "diagonal"}, {"round", 1}, {"src", "a"}, {"dst", "b"}}});
        });
        try {
            read_plan_file(plan_path);
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(e.pointer() == "/dropped_edges/0/kind");
        }
    }
    SUBCASE("missing adjacency reference") {
        rewrite([](json& d) { d.erase("final_adjacency_ref"); });
        CHECK_THROWS_AS(read_plan_file(plan_path), SchemaError);
    }
    SUBCASE("dangling adjacency reference") {
        rewrite([](json& d) { d["final_adjacency_ref"] = "nowhere.adj.json"; });
        CHECK_THROWS_AS(read_plan_file(plan_path), SchemaError);
    }
    SUBCASE("not json") {
        std::ofstream out(plan_path, std::ios::binary);
        out << "{broken";
        out.close();
        CHECK_THROWS_AS(read_plan_file(plan_path), SchemaError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_plan_file(dir.file("absent.json")), SchemaError);
    }
}

TEST_CASE("jsonl artifacts start with a meta line") {
    commdrop::test::TempDir dir;

    SUBCASE("trace") {
        std::string path = dir.file("trace.jsonl");
        {
            TraceWriter writer(path, meta_of(5, "aaaabbbbccccdddd"));
            StepStats s;
            s.step = 1;
            s.stage = "stage1_intra";
            s.mean_utility = 0.625;
            s.intra_nuclear_norms = {1.5, 2.5};
            s.inter_nuclear_norms = {0.5};
            s.wall_time_ms = 12.0;
            writer.write_step(s);
            s.step = 2;
            writer.write_step(s);
        }
        auto lines = read_lines(path);
        REQUIRE(lines.size() == 3);
        json head = json::parse(lines[0]);
        CHECK(head["type"] == "meta");
        CHECK(head["kind"] == "trace");
        CHECK(head["schema_version"] == kSchemaVersion);
        CHECK(head["seed"] == 5);
        CHECK(head["config_hash"] == "aaaabbbbccccdddd");
        json step = json::parse(lines[1]);
        CHECK(step["type"] == "step");
        CHECK(step["stage"] == "stage1_intra");
        CHECK(step["step"] == 1);
        CHECK(step["mean_utility"].get<double>() == doctest::Approx(0.625));
        CHECK(step["nuclear_norms"]["intra"].size() == 2);
        CHECK(step["nuclear_norms"]["inter"].size() == 1);
        CHECK(json::parse(lines[2])["step"] == 2);
    }

    SUBCASE("records") {
        std::string path = dir.file("records.jsonl");
        {
            RecordsWriter writer(path, meta_of(5, "aaaabbbbccccdddd"));
            RolloutRecord r;
            r.instance_id = "q7";
            r.final_answer = "B";
            r.utility = 1.0;
            r.prompt_tokens = 42;
            r.completion_tokens = 17;
            r.wall_time_ms = 3.5;
            r.usage_estimated = true;
            r.outputs.push_back(AgentOutput{"a", 1, "I think B."});
            r.outputs.push_back(AgentOutput{"b", 2, "Agreed: B."});
            writer.write_record(r);
        }
        auto lines = read_lines(path);
        REQUIRE(lines.size() == 2);
        CHECK(json::parse(lines[0])["kind"] == "records");
        json rec = json::parse(lines[1]);
        CHECK(rec["type"] == "record");
        CHECK(rec["instance_id"] == "q7");
        CHECK(rec["final_answer"] == "B");
        CHECK(rec["utility"] == 1.0);
        CHECK(rec["prompt_tokens"] == 42);
        CHECK(rec["completion_tokens"] == 17);
        CHECK(rec["usage_estimated"] == true);
        REQUIRE(rec["outputs"].size() == 2);
        CHECK(rec["outputs"][0]["agent_id"] == "a");
        CHECK(rec["outputs"][0]["round"] == 1);
        CHECK(rec["outputs"][1]["content"] == "Agreed: B.");
    }
}

TEST_CASE("evaluation reports round-trip") {
    commdrop::test::TempDir dir;
    EvalReport report;
    report.meta = meta_of(3, "feedfacefeedface");
    report.instances = 60;
    report.accuracy = 0.85;
    report.prompt_tokens = 123456;
    report.completion_tokens = 7890;
    report.wall_time_ms = 4200;
    report.usage_estimated = true;
    report.records_ref = "records.jsonl";

    std::string path = dir.file("report.json");
    write_report_file(path, report);
    EvalReport back = read_report_file(path);
    CHECK(back.meta.seed == 3);
    CHECK(back.meta.config_hash == "feedfacefeedface");
    CHECK(back.instances == 60);
    CHECK(back.accuracy == 0.85);
    CHECK(back.prompt_tokens == 123456);
    CHECK(back.completion_tokens == 7890);
    CHECK(back.wall_time_ms == 4200);
    CHECK(back.usage_estimated);
    CHECK(back.records_ref == "records.jsonl");

    SUBCASE("missing fields are named") {
        json doc = json::parse(commdrop::test::read_file(path));
        doc.erase("accuracy");
        std::ofstream out(path, std::ios::binary);
        out << doc.dump() << "\n";
        out.close();
        try {
            read_report_file(path);
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(e.pointer() == "/accuracy");
        }
    }
}
