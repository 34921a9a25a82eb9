#include <gtest/gtest.h>

#include <set>

#include "factweaver/narrate.hpp"
#include "test_helpers.hpp"

using namespace factweaver;

namespace {

json goldens() { return json::parse(fwtest::read_file(std::string(FACTWEAVER_GOLDEN_DIR) + "/captions.json")); }

}  // namespace

TEST(Caption, MatchesGoldenFiles) {
    std::set<FactType> covered;
    for (const auto& g : goldens()) {
        SCOPED_TRACE(g.at("name").get<std::string>());
        const auto table = fwtest::load_fixture(g.at("dataset").get<std::string>());
        const DataFact f = from_fact_record(g.at("fact"), table.schema());
        covered.insert(f.type);
        EXPECT_EQ(caption(f, table), g.at("caption").get<std::string>());
    }
    EXPECT_EQ(covered.size(), kFactTypes.size());
}

TEST(Caption, WorkedSentences) {
    const auto carsales = fwtest::load_fixture("carsales.csv");
    EXPECT_EQ(caption(fwtest::make_fact(FactType::value, {}, {}, {{"Sales", Aggregate::sum}}), carsales),
              "The total Sales is 21,921,768.");
    const auto covid = fwtest::load_fixture("covid_deaths.csv");
    EXPECT_EQ(caption(fwtest::make_fact(FactType::extreme, {}, {"Date"}, {{"Deaths", Aggregate::sum}},
                                        {{"Date", "2020/3/2"}}),
                      covid),
              "The maximum value of the total Deaths is 42 when Date is 2020/3/2.");
    const auto infections = fwtest::load_fixture("covid_infections.csv");
    EXPECT_EQ(caption(fwtest::make_fact(FactType::distribution, {{{"Country", "China"}}}, {"Province"},
                                        {{"Infections", Aggregate::sum}}, {{"Province", "Hubei"}}),
                      infections),
              "The distribution of the total Infections over Province(s) when Country is China and Province is Hubei "
              "needs to pay attention.");
}

TEST(Caption, FollowsFocusEdits) {
    const auto t = fwtest::small_sales();
    auto f = fwtest::make_fact(FactType::proportion, {}, {"Brand"}, {{"Sales", Aggregate::sum}}, {{"Brand", "Ford"}});
    EXPECT_EQ(caption(f, t), "The Ford accounts for 66.7% of the total Sales.");
    f.focus = {{"Brand", "Honda"}};
    EXPECT_EQ(caption(f, t), "The Honda accounts for 17.5% of the total Sales.");
}

TEST(Caption, ListPhrases) {
    EXPECT_EQ(detail::list_phrase({}), "");
    EXPECT_EQ(detail::list_phrase({"a"}), "a");
    EXPECT_EQ(detail::list_phrase({"a", "b"}), "a and b");
    EXPECT_EQ(detail::list_phrase({"a", "b", "c"}), "a, b, and c");
}

TEST(Caption, RejectsUnusableFacts) {
    const auto t = fwtest::small_sales();
    // invalid: value with a breakdown
    EXPECT_THROW(caption(fwtest::make_fact(FactType::value, {}, {"Brand"}, {{"Sales", Aggregate::sum}}), t),
                 NarrationError);
    // valid but trend needs a temporal breakdown with enough points
    const auto covid = fwtest::load_fixture("covid_deaths.csv");
    const auto one_day = fwtest::make_fact(FactType::trend, {{{"Date", "2020/3/1"}}}, {"Date"}, {{"Deaths", Aggregate::sum}});
    EXPECT_THROW(caption(one_day, covid), NarrationError);
}

TEST(StorySummary, CountsFactsAndCoverage) {
    const auto t = fwtest::small_sales();
    Story s;
    s.facts = {fwtest::make_fact(FactType::value, {{{"Brand", "Ford"}}}, {}, {{"Sales", Aggregate::sum}}),
               fwtest::make_fact(FactType::value, {{{"Brand", "BMW"}}}, {}, {{"Sales", Aggregate::sum}})};
    s.relations = {Relation::contrast};
    EXPECT_EQ(story_summary(s, t),
              "This story has 2 facts covering 70.0% of the data. The total Sales is 80 when Brand is Ford. "
              "The total Sales is 19 when Brand is BMW.");
}
