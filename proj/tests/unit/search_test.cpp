#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "factweaver/search.hpp"
#include "test_helpers.hpp"

using namespace factweaver;

namespace {

DataTable tiny_table() {
    return load_csv(
        "Year,Region,Product,Sales,Profit\n"
        "2019,North,A,10,2\n"
        "2019,South,B,14,3\n"
        "2020,North,B,12,5\n"
        "2020,South,A,9,1\n"
        "2021,North,A,20,6\n"
        "2021,South,B,7,2\n"
        "2022,North,B,25,8\n"
        "2022,South,A,5,1\n");
}

// Reward of a path written out from the definitions, independent of story.hpp.
double oracle_reward(const std::vector<DataFact>& facts, const std::vector<Relation>& rels, const DataTable& t,
                     const RewardWeights& w) {
    std::map<FactType, double> counts;
    for (const auto& f : facts) counts[f.type] += 1;
    const double n = static_cast<double>(counts.size());
    double evenness = 1;
    if (counts.size() > 1) {
        double h = 0;
        for (auto& [k, c] : counts) h -= c / facts.size() * std::log(c / facts.size());
        evenness = h / std::log(n);
    }
    const double d = std::min(1.0, n / std::min<double>(facts.size(), 10) * evenness);
    double l = 1;
    if (!rels.empty()) {
        l = 0;
        for (std::size_t i = 0; i < rels.size(); ++i) l += relation_likelihood(facts[i].type, rels[i]);
        l /= rels.size();
    }
    std::set<std::size_t> rows;
    for (const auto& f : facts)
        for (auto r : select_subspace(t, f.subspace)) rows.insert(r);
    const double c = static_cast<double>(rows.size()) / t.row_count();
    double h = 0;
    for (const auto& f : facts) {
        const auto s = importance(f, t);
        h += s.probability * s.significance * s.self_information_bits;
    }
    return (w.diversity * d + w.logicality * l + w.integrity * c) * h;
}

void enumerate(std::vector<DataFact>& facts, std::vector<Relation>& rels, std::size_t length, const DataTable& t,
               std::size_t fanout, std::uint64_t seed, const RewardWeights& w, double& best, std::size_t& paths) {
    if (facts.size() == length) {
        ++paths;
        best = std::max(best, oracle_reward(facts, rels, t, w));
        return;
    }
    for (const auto& c : expansion_candidates(facts, t, fanout, seed)) {
        facts.push_back(c.fact);
        rels.push_back(c.relation);
        enumerate(facts, rels, length, t, fanout, seed, w, best, paths);
        facts.pop_back();
        rels.pop_back();
    }
}

}  // namespace

TEST(InitialFact, DeterministicAndStartingType) {
    const auto t = fwtest::load_fixture("covid_deaths.csv");
    const auto a = initial_fact(t, 5), b = initial_fact(t, 5);
    EXPECT_EQ(a, b);
    EXPECT_TRUE(a.type == FactType::value || a.type == FactType::trend || a.type == FactType::categorization);
}

TEST(InitialFact, OnlyCategorizationWithoutMeasuresOrTime) {
    const auto t = load_csv("Color\nred\nblue\nred\ngreen\n");
    EXPECT_EQ(initial_fact(t, 1).type, FactType::categorization);
}

TEST(Goal, Validation) {
    Goal g;
    EXPECT_THROW(g.check(), SpecError);
    g.iteration_budget = 0;
    EXPECT_THROW(g.check(), SpecError);
    g.iteration_budget = 3;
    EXPECT_NO_THROW(g.check());
    g.time_budget_seconds = 1;
    EXPECT_THROW(g.check(), SpecError);
}

TEST(GenerateStory, ExhaustiveMatchesBruteForce) {
    const auto t = tiny_table();
    const RewardWeights w;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Goal goal;
        goal.max_length = 3;
        goal.iteration_budget = 1000;
        SearchConfig cfg;
        cfg.fanout = 3;
        cfg.simulation_budget = 100000;
        const auto story = generate_story(t, goal, w, cfg, seed);
        ASSERT_EQ(story.facts.size(), 3u);
        std::vector<DataFact> facts{initial_fact(t, seed)};
        std::vector<Relation> rels;
        double best = -1;
        std::size_t paths = 0;
        enumerate(facts, rels, 3, t, 3, seed, w, best, paths);
        EXPECT_GT(paths, 1u);
        EXPECT_EQ(story.reward, best) << "seed " << seed;
        EXPECT_NEAR(oracle_reward(story.facts, story.relations, t, w), story.reward, 1e-12);
    }
}

TEST(GenerateStory, PairsRevalidate) {
    const auto t = fwtest::load_fixture("carsales.csv");
    Goal goal;
    goal.max_length = 5;
    goal.iteration_budget = 30;
    const auto story = generate_story(t, goal, {}, {}, 42);
    ASSERT_EQ(story.relations.size() + 1, story.facts.size());
    EXPECT_EQ(story.facts.size(), 5u);
    for (std::size_t i = 0; i + 1 < story.facts.size(); ++i)
        EXPECT_TRUE(check_relation(story.facts[i], story.facts[i + 1], story.relations[i], t));
    Story replay;
    replay.facts = story.facts;
    replay.relations = story.relations;
    StoryEvaluator{}.evaluate(replay, t);
    EXPECT_NEAR(replay.reward, story.reward, 1e-9);
}

TEST(GenerateStory, DeterministicWithIterationBudget) {
    const auto t = fwtest::load_fixture("covid_deaths.csv");
    Goal goal;
    goal.max_length = 4;
    goal.iteration_budget = 20;
    const auto a = generate_story(t, goal, {}, {}, 9);
    const auto b = generate_story(t, goal, {}, {}, 9);
    ASSERT_EQ(a.facts.size(), b.facts.size());
    for (std::size_t i = 0; i < a.facts.size(); ++i) EXPECT_EQ(a.facts[i], b.facts[i]);
    EXPECT_EQ(a.relations, b.relations);
    EXPECT_EQ(a.reward, b.reward);
}

TEST(GenerateStory, SingleFactGoal) {
    const auto t = fwtest::small_sales();
    Goal goal;
    goal.max_length = 1;
    goal.iteration_budget = 5;
    const auto s = generate_story(t, goal, {}, {}, 1);
    EXPECT_EQ(s.facts.size(), 1u);
    EXPECT_FALSE(s.goal_unmet);
}

TEST(GenerateStory, TreeWeightsAreMaxOfCompletedPaths) {
    const auto t = tiny_table();
    Goal goal;
    goal.max_length = 3;
    goal.iteration_budget = 50;
    SearchConfig cfg;
    cfg.fanout = 4;
    StorySearch search(t, goal, {}, cfg, 3);
    const auto story = search.run();
    const auto tree = search.export_tree();
    double best_path = -1;
    for (const auto& n : tree) best_path = std::max(best_path, n["path_reward"].get<double>());
    for (const auto& n : tree) {
        if (!n["completed_weight"].get<bool>()) continue;
        for (const auto& c : n["children"])
            EXPECT_GE(n["weight"].get<double>(), tree[c.get<std::size_t>()]["weight"].get<double>() - 1e-15);
    }
    EXPECT_GE(story.reward, 0.0);
    EXPECT_EQ(tree[0]["parent"], nullptr);
}
