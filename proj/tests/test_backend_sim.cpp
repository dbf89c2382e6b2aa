#include <doctest.h>

#include "commdrop/simulated_backend.hpp"

#include <cmath>
#include <string>
#include <vector>

using namespace commdrop;

namespace {

TaskKindSpec binary_mc() {
    TaskKindSpec k;
    k.kind = AnswerKind::MultipleChoice;
    k.letters = "AB";
    return k;
}

AgentProfile profile(const std::string& id) {
    AgentProfile p;
    p.agent_id = id;
    p.role_name = "Agent " + id;
    p.prompt_template = default_prompt_template();
    return p;
}

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

SimulatedAgentSpec constant(const std::string& id, const std::string& text) {
    SimulatedAgentSpec s;
    s.agent_id = id;
    s.behavior = SimBehavior::Constant;
    s.text = text;
    return s;
}

SimulatedAgentSpec echo(const std::string& id) {
    SimulatedAgentSpec s;
    s.agent_id = id;
    s.behavior = SimBehavior::Echo;
    return s;
}

const TaskInstance kInstance{"q1", "Is water wet?", "A"};

std::string prompt_with(const std::string& extra = "") {
    return "Question: " + kInstance.question + "\n(round 1 of 1)" + extra;
}

} // namespace

TEST_CASE("constant agents emit their text with exact token accounting") {
    SimulatedBackend backend({constant("c", "A")}, {kInstance}, binary_mc(), 1);
    std::string prompt = prompt_with("\n(no incoming messages)");
    AgentReply r = backend.call_agent(profile("c"), prompt);
    CHECK(r.content == "A");
    CHECK(r.usage.completion_tokens == 1); // ceil(1/4)
    CHECK(r.usage.prompt_tokens == long((prompt.size() + 3) / 4));
    CHECK_FALSE(r.usage.estimated);
    CHECK(r.latency_ms == double(r.usage.prompt_tokens + r.usage.completion_tokens));
}

TEST_CASE("token estimate is ceil(len/4) on both sides") {
    CHECK(estimate_tokens("") == 0);
    CHECK(estimate_tokens("a") == 1);
    CHECK(estimate_tokens("abcd") == 1);
    CHECK(estimate_tokens("abcde") == 2);
    CHECK(estimate_tokens(std::string(103, 'x')) == 26);

    SimulatedBackend backend({constant("c", "xxxxx")}, {kInstance}, binary_mc(), 1);
    AgentReply r = backend.call_agent(profile("c"), std::string(10, 'p'));
    CHECK(r.usage.prompt_tokens == 3);
    CHECK(r.usage.completion_tokens == 2);
}

TEST_CASE("a perfectly reliable oracle always answers with the gold answer") {
    SimulatedBackend backend({oracle("o", 1.0)}, {kInstance}, binary_mc(), 99);
    for (int i = 0; i < 50; ++i) {
        AgentReply r = backend.call_agent(profile("o"), prompt_with(" #" + std::to_string(i)));
        CHECK(r.content == "A");
    }
}

TEST_CASE("a full-strength saboteur always answers wrongly") {
    SimulatedBackend backend({saboteur("s", 1.0)}, {kInstance}, binary_mc(), 99);
    for (int i = 0; i < 50; ++i) {
        AgentReply r = backend.call_agent(profile("s"), prompt_with(" #" + std::to_string(i)));
        // With letters AB and gold A the only wrong choice is B.
        CHECK(r.content == "B");
    }
}

TEST_CASE("saboteur wrong answers stay wrong across task kinds") {
    SUBCASE("numeric") {
        TaskKindSpec k;
        k.kind = AnswerKind::Numeric;
        TaskInstance inst{"n1", "What is 7 + 5?", "12"};
        SimulatedBackend backend({saboteur("s", 1.0)}, {inst}, k, 3);
        for (int i = 0; i < 20; ++i) {
            AgentReply r = backend.call_agent(
                profile("s"), "Question: What is 7 + 5? #" + std::to_string(i));
            CHECK(score(extract_answer(r.content, k), inst.answer, k) == 0.0);
        }
    }
    SUBCASE("exact text") {
        TaskKindSpec k;
        k.kind = AnswerKind::ExactText;
        TaskInstance inst{"t1", "Name the color.", "blue"};
        SimulatedBackend backend({saboteur("s", 1.0)}, {inst}, k, 3);
        AgentReply r = backend.call_agent(profile("s"), "Question: Name the color.");
        CHECK(r.content == "not blue");
        CHECK(score(extract_answer(r.content, k), inst.answer, k) == 0.0);
    }
}

TEST_CASE("replies are deterministic in (seed, agent, prompt)") {
    auto specs = std::vector<SimulatedAgentSpec>{oracle("o", 0.5), oracle("p", 0.5)};
    SimulatedBackend a(specs, {kInstance}, binary_mc(), 42);
    SimulatedBackend b(specs, {kInstance}, binary_mc(), 42);
    SimulatedBackend c(specs, {kInstance}, binary_mc(), 43);

    bool seed_changed_something = false;
    bool agent_changed_something = false;
    for (int i = 0; i < 64; ++i) {
        std::string prompt = prompt_with(" #" + std::to_string(i));
        std::string ra = a.call_agent(profile("o"), prompt).content;
        CHECK(ra == b.call_agent(profile("o"), prompt).content);
        // The second call on the same backend repeats the first.
        CHECK(ra == a.call_agent(profile("o"), prompt).content);
        seed_changed_something |= ra != c.call_agent(profile("o"), prompt).content;
        agent_changed_something |= ra != a.call_agent(profile("p"), prompt).content;
    }
    CHECK(seed_changed_something);
    CHECK(agent_changed_something);
}

TEST_CASE("oracle correctness frequency matches its reliability") {
    SimulatedBackend backend({oracle("o", 0.7)}, {kInstance}, binary_mc(), 1234);
    const int n = 4000;
    int correct = 0;
    for (int i = 0; i < n; ++i) {
        AgentReply r = backend.call_agent(profile("o"), prompt_with(" trial " + std::to_string(i)));
        correct += r.content == "A";
    }
    double p = double(correct) / n;
    double se = std::sqrt(0.7 * 0.3 / n);
    CHECK(std::fabs(p - 0.7) < 3.5 * se);
}

TEST_CASE("incoming answers are parsed from message blocks only") {
    TaskKindSpec k = binary_mc();

    SUBCASE("blocks at line starts count") {
        std::string prompt = "header\n"
                             "Agent Critic (critic) said: I vote B\n"
                             "Agent Expert (expert) said: the answer is A\n"
                             "tail";
        auto answers = parse_incoming_answers(prompt, k);
        REQUIRE(answers.size() == 2);
        CHECK(answers[0] == "B");
        CHECK(answers[1] == "A");
    }

    SUBCASE("a block at position zero counts") {
        auto answers = parse_incoming_answers("Agent Critic (critic) said: B", k);
        REQUIRE(answers.size() == 1);
        CHECK(answers[0] == "B");
    }

    SUBCASE("mid-line mentions do not count") {
        auto answers = parse_incoming_answers("I heard that Agent Critic (critic) said: B", k);
        CHECK(answers.empty());
    }

    SUBCASE("blocks without an extractable answer are skipped") {
        auto answers = parse_incoming_answers("Agent Critic (critic) said: hmm, unsure\n"
                                              "Agent Expert (expert) said: B\n",
                                              k);
        REQUIRE(answers.size() == 1);
        CHECK(answers[0] == "B");
    }

    SUBCASE("no blocks yields no answers") {
        CHECK(parse_incoming_answers(prompt_with("\n(no incoming messages)"), k).empty());
    }
}

TEST_CASE("echo agents repeat the modal incoming answer") {
    SimulatedBackend backend({echo("e")}, {kInstance}, binary_mc(), 1);

    SUBCASE("clear majority") {
        std::string prompt = prompt_with("\nAgent X (x) said: B\nAgent Y (y) said: B\n"
                                         "Agent Z (z) said: A");
        CHECK(backend.call_agent(profile("e"), prompt).content == "B");
    }

    SUBCASE("ties resolve to the lexicographically smallest answer") {
        std::string prompt = prompt_with("\nAgent X (x) said: B\nAgent Y (y) said: A");
        CHECK(backend.call_agent(profile("e"), prompt).content == "A");
    }

    SUBCASE("nothing extractable yields None.") {
        std::string prompt = prompt_with("\n(no incoming messages)");
        CHECK(backend.call_agent(profile("e"), prompt).content == "None.");
        CHECK(backend.call_agent(profile("e"), prompt_with("\nAgent X (x) said: dunno")).content ==
              "None.");
    }
}

TEST_CASE("influence blends base correctness with the incoming majority") {
    // influence 1.0: the majority fully determines the outcome.
    SUBCASE("correct majority forces a correct answer") {
        SimulatedBackend backend({oracle("o", 0.0, 1.0)}, {kInstance}, binary_mc(), 7);
        std::string prompt = prompt_with("\nAgent X (x) said: A\nAgent Y (y) said: A\n"
                                         "Agent Z (z) said: B");
        for (int i = 0; i < 20; ++i)
            CHECK(backend.call_agent(profile("o"), prompt + " #" + std::to_string(i)).content ==
                  "A");
    }

    SUBCASE("wrong majority forces a wrong answer") {
        SimulatedBackend backend({oracle("o", 1.0, 1.0)}, {kInstance}, binary_mc(), 7);
        std::string prompt = prompt_with("\nAgent X (x) said: B\nAgent Y (y) said: B\n"
                                         "Agent Z (z) said: A");
        for (int i = 0; i < 20; ++i)
            CHECK(backend.call_agent(profile("o"), prompt + " #" + std::to_string(i)).content ==
                  "B");
    }

    SUBCASE("a tie leaves the outcome at probability one half") {
        SimulatedBackend backend({oracle("o", 1.0, 1.0)}, {kInstance}, binary_mc(), 7);
        std::string prompt = prompt_with("\nAgent X (x) said: A\nAgent Y (y) said: B");
        const int n = 2000;
        int correct = 0;
        for (int i = 0; i < n; ++i)
            correct +=
                backend.call_agent(profile("o"), prompt + " #" + std::to_string(i)).content == "A";
        double p = double(correct) / n;
        CHECK(std::fabs(p - 0.5) < 3.5 * std::sqrt(0.25 / n));
    }

    SUBCASE("influence zero ignores incoming answers entirely") {
        SimulatedBackend backend({oracle("o", 1.0, 0.0)}, {kInstance}, binary_mc(), 7);
        std::string prompt = prompt_with("\nAgent X (x) said: B\nAgent Y (y) said: B");
        CHECK(backend.call_agent(profile("o"), prompt).content == "A");
    }
}

TEST_CASE("saboteurs follow influence the same way oracles do") {
    // strength 1.0 gives base 0; a correct majority with influence 1 flips it.
    SimulatedBackend backend({saboteur("s", 1.0, 1.0)}, {kInstance}, binary_mc(), 7);
    std::string prompt = prompt_with("\nAgent X (x) said: A\nAgent Y (y) said: A");
    for (int i = 0; i < 20; ++i)
        CHECK(backend.call_agent(profile("s"), prompt + " #" + std::to_string(i)).content == "A");
}

TEST_CASE("backend construction and lookup validate their inputs") {
    CHECK_THROWS_AS(SimulatedBackend({}, {kInstance}, binary_mc(), 1), ConfigError);
    CHECK_THROWS_AS(
        SimulatedBackend({oracle("o", 0.5), oracle("o", 0.7)}, {kInstance}, binary_mc(), 1),
        ConfigError);
    CHECK_THROWS_AS(SimulatedBackend({oracle("o", 1.5)}, {kInstance}, binary_mc(), 1),
                    ConfigError);
    CHECK_THROWS_AS(SimulatedBackend({saboteur("s", -0.1)}, {kInstance}, binary_mc(), 1),
                    ConfigError);
    CHECK_THROWS_AS(SimulatedBackend({oracle("o", 0.5, 2.0)}, {kInstance}, binary_mc(), 1),
                    ConfigError);

    SimulatedBackend backend({oracle("o", 1.0)}, {kInstance}, binary_mc(), 1);
    CHECK_THROWS_AS(backend.call_agent(profile("ghost"), prompt_with()), BackendError);
    CHECK_THROWS_AS(backend.call_agent(profile("o"), "unknown question text"), BackendError);
}

TEST_CASE("instances can be swapped without rebuilding the backend") {
    SimulatedBackend backend({oracle("o", 1.0)}, {kInstance}, binary_mc(), 1);
    TaskInstance other{"q2", "Is fire cold?", "B"};
    CHECK_THROWS_AS(backend.call_agent(profile("o"), "Question: Is fire cold?"), BackendError);
    backend.set_instances({other});
    CHECK(backend.call_agent(profile("o"), "Question: Is fire cold?").content == "B");
}
