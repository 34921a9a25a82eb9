#include <gtest/gtest.h>

#include <cmath>

#include "factweaver/generator.hpp"
#include "factweaver/scoring.hpp"
#include "test_helpers.hpp"

using namespace factweaver;

namespace {

DataFact fact(FactType t, std::vector<std::string> b, std::vector<Measure> m, std::vector<Filter> x = {}, Subspace s = {}) {
    DataFact f;
    f.type = t;
    f.subspace = std::move(s);
    f.breakdown = std::move(b);
    f.measures = std::move(m);
    f.focus = std::move(x);
    return f;
}

DataTable two_groups(double a, double b) {
    return load_csv("G,V\nA," + format_fixed(a, 6) + "\nB," + format_fixed(b, 6) + "\n");
}

}  // namespace

TEST(Scoring, ThreeBitExample) {
    const auto t = fwtest::small_sales();
    const auto f = fact(FactType::value, {}, {{"Sales", Aggregate::sum}}, {}, {{{"Brand", "Ford"}}});
    const auto s = importance(f, t);
    EXPECT_EQ(s.probability, 0.125);
    EXPECT_EQ(s.self_information_bits, 3.0);
    EXPECT_EQ(s.significance, 0.125);
    EXPECT_EQ(s.importance, 0.375);
}

TEST(Scoring, ZeroSupportSubspace) {
    const auto t = load_csv("A,B,V\nx,p,1\ny,q,2\n");
    const auto f = fact(FactType::value, {}, {{"V", Aggregate::sum}}, {}, {{{"A", "x"}, {"B", "q"}}});
    const auto s = importance(f, t);
    EXPECT_TRUE(s.zero_support);
    EXPECT_EQ(s.importance, 0.0);
}

TEST(Significance, ProportionFixtures) {
    const auto hi = two_groups(62, 38);
    EXPECT_EQ(significance(fact(FactType::proportion, {"G"}, {{"V", Aggregate::sum}}, {{"G", "A"}}), hi), 1.0);
    const auto lo = two_groups(70, 30);
    EXPECT_NEAR(significance(fact(FactType::proportion, {"G"}, {{"V", Aggregate::sum}}, {{"G", "B"}}), lo), 0.30, 1e-15);
}

TEST(Significance, GrubbsNoneIsZero) {
    const auto t = load_csv("G,V\na,1\nb,2\nc,3\nd,4\ne,5\n");
    EXPECT_EQ(significance(fact(FactType::outlier, {"G"}, {{"V", Aggregate::sum}}, {{"G", "e"}}), t), 0.0);
}

TEST(Significance, PerfectAssociationIsOne) {
    const auto t = load_csv("G,X,Y\na,1,2\nb,2,4\nc,3,6\nd,4,8\ne,5,10\n");
    EXPECT_EQ(significance(fact(FactType::association, {"G"}, {{"X", Aggregate::sum}, {"Y", Aggregate::sum}}), t), 1.0);
}

TEST(Significance, AllTypesInUnitInterval) {
    const auto t = fwtest::load_fixture("carsales.csv");
    for (FactType type : kFactTypes) {
        if (!type_constructible(type, t)) continue;
        Rng rng(fnv1a(to_string(type)));
        int scored = 0;
        for (int i = 0; i < 40; ++i) {
            auto f = random_fact(t, type, rng);
            if (!f) continue;
            ++scored;
            const auto s = importance(*f, t);
            EXPECT_GE(s.significance, 0.0) << fact_key(*f);
            EXPECT_LE(s.significance, 1.0) << fact_key(*f);
            EXPECT_GE(s.importance, 0.0);
        }
        EXPECT_GT(scored, 0) << to_string(type);
    }
}

TEST(Significance, ExtremeNotAtExtremumIsZero) {
    const auto t = load_csv("G,V\na,1\nb,2\nc,3\nd,40\n");
    // derived kind is min (closer to the minimum) but b is not the minimum
    EXPECT_EQ(significance(fact(FactType::extreme, {"G"}, {{"V", Aggregate::sum}}, {{"G", "b"}}), t), 0.0);
    EXPECT_GT(significance(fact(FactType::extreme, {"G"}, {{"V", Aggregate::sum}}, {{"G", "d"}}), t), 0.0);
}

TEST(Significance, TrendOnCovidDeaths) {
    const auto t = fwtest::load_fixture("covid_deaths.csv");
    const double s = significance(fact(FactType::trend, {"Date"}, {{"Deaths", Aggregate::sum}}), t);
    EXPECT_GT(s, 0.5);
    EXPECT_LE(s, 1.0);
}

TEST(Generator, DeterministicPerSeed) {
    const auto t = fwtest::load_fixture("carsales.csv");
    for (FactType type : kFactTypes) {
        Rng a(7), b(7);
        EXPECT_EQ(random_fact(t, type, a), random_fact(t, type, b));
    }
}

TEST(Generator, TopFactsSortedByImportance) {
    const auto t = fwtest::small_sales();
    const auto top = top_facts(t, FactType::categorization, 3);
    ASSERT_FALSE(top.empty());
    for (std::size_t i = 1; i < top.size(); ++i) EXPECT_GE(top[i - 1].score.importance, top[i].score.importance);
    for (const auto& s : top) EXPECT_TRUE(is_usable(s.fact, t));
}
