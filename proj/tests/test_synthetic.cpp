#include <doctest.h>

#include "commdrop/rollout.hpp"
#include "commdrop/synthetic.hpp"

#include <cmath>
#include <set>
#include <string>
#include <vector>

using namespace commdrop;

namespace {

SimulatedAgentSpec oracle(const std::string& id, double reliability, double influence = 0.0) {
    SimulatedAgentSpec s;
    s.agent_id = id;
    s.behavior = SimBehavior::Oracle;
    s.reliability = reliability;
    s.influence = influence;
    return s;
}

SimulatedAgentSpec saboteur(const std::string& id, double strength, double influence = 0.0) {
    SimulatedAgentSpec s;
    s.agent_id = id;
    s.behavior = SimBehavior::Saboteur;
    s.strength = strength;
    s.influence = influence;
    return s;
}

GraphSample make_sample(std::vector<std::vector<std::string>> ids,
                        std::vector<std::vector<int>> topo,
                        std::vector<std::vector<std::pair<int, int>>> intra,
                        std::vector<std::vector<std::pair<int, int>>> inter) {
    GraphSample s;
    s.round_node_ids = std::move(ids);
    s.topo_order = std::move(topo);
    s.intra_edges = std::move(intra);
    s.inter_edges = std::move(inter);
    return s;
}

GraphSample one_round(std::vector<std::pair<int, int>> edges) {
    return make_sample({{"s", "o1", "o2"}}, {{0, 1, 2}}, {std::move(edges)}, {});
}

} // namespace

TEST_CASE("planted tasks are seed-deterministic with letter answers") {
    SyntheticTaskSpec spec;
    spec.agent_specs = {oracle("o", 1.0)};
    spec.letters = "AB";
    spec.instance_count = 12;

    PlantedTask task = make_planted_task(spec, 5);
    REQUIRE(task.instances.size() == 12);
    CHECK(task.kind.kind == AnswerKind::MultipleChoice);
    CHECK(task.kind.letters == "AB");
    for (int k = 0; k < 12; ++k) {
        const TaskInstance& inst = task.instances[k];
        CHECK(inst.id == "synth-" + std::to_string(k + 1));
        REQUIRE(inst.answer.size() == 1);
        CHECK(spec.letters.find(inst.answer[0]) != std::string::npos);
        CHECK(inst.question.find("#" + std::to_string(k + 1)) != std::string::npos);
        CHECK(inst.question.find("{A, B}") != std::string::npos);
    }

    PlantedTask again = make_planted_task(spec, 5);
    for (int k = 0; k < 12; ++k) CHECK(task.instances[k].answer == again.instances[k].answer);

    PlantedTask other = make_planted_task(spec, 6);
    bool any_different = false;
    for (int k = 0; k < 12; ++k)
        any_different |= task.instances[k].answer != other.instances[k].answer;
    CHECK(any_different);

    // The paired backend knows the instances: a perfect oracle answers gold.
    AgentProfile p = make_profile("o", "Oracle");
    for (const auto& inst : task.instances)
        CHECK(task.backend->call_agent(p, "Task: " + inst.question).content == inst.answer);
}

TEST_CASE("planted tasks give the aggregator a majority-following behavior") {
    SyntheticTaskSpec spec;
    spec.agent_specs = {oracle("o", 1.0)};
    spec.instance_count = 1;
    PlantedTask task = make_planted_task(spec, 9);
    const TaskInstance& inst = task.instances[0];
    std::string wrong = inst.answer == "A" ? "B" : "A";

    AgentProfile agg = default_aggregator_profile();
    std::string majority_correct = "Task: " + inst.question + "\n(final decision)\n" +
                                   "Agent X (x) said: " + inst.answer + "\n" +
                                   "Agent Y (y) said: " + inst.answer + "\n" +
                                   "Agent Z (z) said: " + wrong;
    CHECK(task.backend->call_agent(agg, majority_correct).content == inst.answer);
    std::string majority_wrong = "Task: " + inst.question + "\n(final decision)\n" +
                                 "Agent X (x) said: " + wrong + "\nAgent Y (y) said: " + wrong;
    CHECK(task.backend->call_agent(agg, majority_wrong).content == wrong);

    // An explicit behavior for the aggregator id takes precedence.
    SimulatedAgentSpec fixed;
    fixed.agent_id = agg.agent_id;
    fixed.behavior = SimBehavior::Constant;
    fixed.text = "B";
    spec.agent_specs.push_back(fixed);
    PlantedTask overridden = make_planted_task(spec, 9);
    CHECK(overridden.backend->call_agent(agg, majority_correct).content == "B");
}

TEST_CASE("synthetic spec validation rejects malformed inputs") {
    SyntheticTaskSpec good;
    good.agent_specs = {oracle("o", 1.0)};
    good.validate();

    SyntheticTaskSpec s = good;
    s.letters = "A";
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = good;
    s.letters = "Ab";
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = good;
    s.letters = "AA";
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = good;
    s.instance_count = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = good;
    s.agent_specs.clear();
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = good;
    s.agent_specs = {oracle("o", 1.0), saboteur("o", 1.0)};
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("three perfect oracles reach expected utility one") {
    SyntheticTaskSpec spec;
    spec.agent_specs = {oracle("s", 1.0), oracle("o1", 1.0), oracle("o2", 1.0)};
    double eu = expected_utility(spec, one_round({{0, 1}, {0, 2}, {1, 2}}));
    CHECK(eu == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("expected utility drops as a saboteur gains listeners") {
    // s always lies; o1 and o2 are 0.9-reliable and half-swayed by input.
    SyntheticTaskSpec spec;
    spec.agent_specs = {saboteur("s", 1.0), oracle("o1", 0.9, 0.5), oracle("o2", 0.9, 0.5)};

    // Hand-derived via the correctness chain (o2 conditions on o1, both on s):
    //   no saboteur edges (s silent and skipped): 0.9
    //   s -> o2 only:                             0.63
    //   s -> o1 only (poison propagates):         0.4275
    //   s -> both:                                0.315
    double eu_none = expected_utility(spec, one_round({{1, 2}}));
    double eu_s_o2 = expected_utility(spec, one_round({{0, 2}, {1, 2}}));
    double eu_s_o1 = expected_utility(spec, one_round({{0, 1}, {1, 2}}));
    double eu_both = expected_utility(spec, one_round({{0, 1}, {0, 2}, {1, 2}}));

    CHECK(eu_none == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(eu_s_o2 == doctest::Approx(0.63).epsilon(1e-12));
    CHECK(eu_s_o1 == doctest::Approx(0.4275).epsilon(1e-12));
    CHECK(eu_both == doctest::Approx(0.315).epsilon(1e-12));
    CHECK(eu_none > eu_s_o2);
    CHECK(eu_s_o2 > eu_s_o1);
    CHECK(eu_s_o1 > eu_both);
}

TEST_CASE("with influence zero the topology does not matter") {
    SyntheticTaskSpec spec;
    spec.agent_specs = {oracle("s", 0.7), oracle("o1", 0.7), oracle("o2", 0.7)};
    // Any wiring where all three participate leaves them independent
    // Bernoulli(0.7): P(majority correct) = 0.7^3 + 3 * 0.7^2 * 0.3 = 0.784.
    double expected = 0.784;
    std::vector<GraphSample> samples = {
        one_round({{0, 1}, {1, 2}}),
        one_round({{0, 1}, {0, 2}}),
        one_round({{0, 1}, {0, 2}, {1, 2}}),
        make_sample({{"s", "o1", "o2"}}, {{2, 1, 0}}, {{{2, 1}, {1, 0}}}, {}),
    };
    for (const auto& s : samples)
        CHECK(expected_utility(spec, s) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("two-round utility accounts for inter-round influence") {
    // Round 1: two 0.8-oracles, no intra edges but both feed round 2, so both
    // participate. Round 2: fully swayed copies. Correct pair -> certain win;
    // split -> coin flips; wrong pair -> certain loss: EU = 0.64 + 0.32/2.
    SyntheticTaskSpec spec;
    spec.agent_specs = {oracle("a", 0.8, 1.0), oracle("b", 0.8, 1.0)};
    GraphSample s = make_sample({{"a", "b"}, {"a", "b"}}, {{0, 1}, {0, 1}}, {{}, {}},
                                {{{0, 0}, {0, 1}, {1, 0}, {1, 1}}});
    CHECK(expected_utility(spec, s) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("an empty final round scores zero") {
    SyntheticTaskSpec spec;
    spec.agent_specs = {oracle("s", 1.0), oracle("o1", 1.0), oracle("o2", 1.0)};
    GraphSample s = make_sample({{"s", "o1", "o2"}, {"s", "o1", "o2"}},
                                {{0, 1, 2}, {0, 1, 2}}, {{{0, 1}, {0, 2}}, {}}, {{}});
    CHECK(expected_utility(spec, s) == 0.0);
}

TEST_CASE("closed-form utility matches Monte-Carlo rollouts") {
    SyntheticTaskSpec spec;
    spec.agent_specs = {saboteur("s", 1.0, 0.3), oracle("o1", 0.8, 0.6), oracle("o2", 0.6, 1.0)};

    // Two rounds with intra and inter edges; s is skipped in round 2.
    GraphSample sample = make_sample({{"s", "o1", "o2"}, {"s", "o1", "o2"}},
                                     {{0, 1, 2}, {1, 2, 0}},
                                     {{{0, 1}}, {{1, 2}}},
                                     {{{1, 1}, {2, 2}, {2, 1}}});
    double eu = expected_utility(spec, sample);
    CHECK(eu > 0.0);
    CHECK(eu < 1.0);

    TeamSpec team;
    team.agents = {make_profile("s", "Spoiler"), make_profile("o1", "First"),
                   make_profile("o2", "Second")};
    team.rounds = 2;

    TaskInstance inst{"q1", "Pick the correct option, A or B.", "A"};
    TaskKindSpec kind;
    kind.kind = AnswerKind::MultipleChoice;
    kind.letters = "AB";

    auto specs = spec.agent_specs;
    SimulatedAgentSpec agg;
    agg.agent_id = default_aggregator_profile().agent_id;
    agg.behavior = SimBehavior::Oracle;
    agg.reliability = 0.5;
    agg.influence = 1.0;
    specs.push_back(agg);

    const int n = 10000;
    double total = 0.0;
    for (int seed = 0; seed < n; ++seed) {
        SimulatedBackend backend(specs, {inst}, kind, uint64_t(seed));
        total += run_rollout(sample, team, backend, inst, kind, AggregationMode::DecisionAgent)
                     .utility;
    }
    double mc = total / n;
    double se = std::sqrt(eu * (1.0 - eu) / n);
    CHECK(std::fabs(mc - eu) < 3.5 * se);
}

TEST_CASE("closed-form utility enforces its size and behavior limits") {
    SyntheticTaskSpec spec;
    spec.agent_specs = {oracle("s", 1.0), oracle("o1", 1.0), oracle("o2", 1.0)};

    GraphSample three_rounds = make_sample(
        {{"s", "o1"}, {"s", "o1"}, {"s", "o1"}}, {{0, 1}, {0, 1}, {0, 1}},
        {{{0, 1}}, {{0, 1}}, {{0, 1}}}, {{{0, 0}}, {{0, 0}}});
    CHECK_THROWS_AS(expected_utility(spec, three_rounds), OversizeError);

    std::vector<std::string> seven;
    std::vector<int> order;
    std::vector<SimulatedAgentSpec> many;
    for (int i = 0; i < 7; ++i) {
        seven.push_back("n" + std::to_string(i));
        order.push_back(i);
        many.push_back(oracle(seven.back(), 1.0));
    }
    SyntheticTaskSpec wide;
    wide.agent_specs = many;
    GraphSample seven_nodes = make_sample({seven}, {order}, {{{0, 1}}}, {});
    CHECK_THROWS_AS(expected_utility(wide, seven_nodes), OversizeError);

    // Unsupported behavior and missing specs are contract violations.
    SyntheticTaskSpec echoy;
    echoy.agent_specs = {oracle("s", 1.0), oracle("o1", 1.0), oracle("o2", 1.0)};
    echoy.agent_specs[1].behavior = SimBehavior::Echo;
    CHECK_THROWS_AS(expected_utility(echoy, one_round({{0, 1}, {1, 2}})), ContractError);

    SyntheticTaskSpec missing;
    missing.agent_specs = {oracle("s", 1.0)};
    CHECK_THROWS_AS(expected_utility(missing, one_round({{0, 1}, {1, 2}})), ContractError);
}
