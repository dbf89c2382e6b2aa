#include <doctest.h>

#include <commdrop/team.hpp>

using namespace commdrop;

namespace {

TeamSpec simple_team(int n, int rounds) {
    TeamSpec team;
    team.rounds = rounds;
    for (int i = 0; i < n; ++i)
        team.agents.push_back(make_profile("agent-" + std::to_string(i), "Role"));
    return team;
}

} // namespace

TEST_CASE("default template carries exactly one of each placeholder") {
    std::string tpl = default_prompt_template();
    CHECK(count_occurrences(tpl, kQueryPlaceholder) == 1);
    CHECK(count_occurrences(tpl, kMessagesPlaceholder) == 1);
    simple_team(2, 1).validate();
}

TEST_CASE("team validation rejects malformed specs") {
    CHECK_THROWS_AS(simple_team(1, 1).validate(), ConfigError);
    CHECK_THROWS_AS(simple_team(2, 0).validate(), ConfigError);

    TeamSpec dup = simple_team(2, 1);
    dup.agents[1].agent_id = dup.agents[0].agent_id;
    CHECK_THROWS_AS(dup.validate(), ConfigError);

    TeamSpec bad_tpl = simple_team(2, 1);
    bad_tpl.agents[0].prompt_template = "no placeholders at all";
    CHECK_THROWS_AS(bad_tpl.validate(), ConfigError);

    TeamSpec two_query = simple_team(2, 1);
    two_query.agents[0].prompt_template = "{query} {query} {messages}";
    CHECK_THROWS_AS(two_query.validate(), ConfigError);
}

TEST_CASE("layered sizes must sum to the team size") {
    TeamSpec team = simple_team(4, 2);
    team.topology.kind = TopologyKind::Layered;
    team.topology.layer_sizes = {2, 2};
    team.validate();

    team.topology.layer_sizes = {3, 2};
    CHECK_THROWS_AS(team.validate(), ConfigError);
    team.topology.layer_sizes = {4, 0};
    CHECK_THROWS_AS(team.validate(), ConfigError);
}

TEST_CASE("random topology needs a probability in [0,1]") {
    TeamSpec team = simple_team(3, 1);
    team.topology.kind = TopologyKind::Random;
    team.topology.edge_probability = 1.5;
    CHECK_THROWS_AS(team.validate(), ConfigError);
    team.topology.edge_probability = 1.0;
    team.validate();
}

TEST_CASE("aggregator id must not collide with an agent") {
    TeamSpec team = simple_team(2, 1);
    team.aggregator = make_profile("agent-0", "Final Decision");
    CHECK_THROWS_AS(team.validate(), ConfigError);
    team.aggregator = make_profile("final-decision", "Final Decision");
    team.validate();
    CHECK(team.aggregator_profile().agent_id == "final-decision");
}

TEST_CASE("aggregator_profile falls back to the default decision agent") {
    TeamSpec team = simple_team(2, 1);
    const AgentProfile& agg = team.aggregator_profile();
    CHECK(agg.agent_id == default_aggregator_profile().agent_id);
    CHECK(team.find_agent("agent-1") != nullptr);
    CHECK(team.find_agent("missing") == nullptr);
}
