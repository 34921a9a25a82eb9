// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Every check compares library output against an oracle written here from
// the definitions, or against stored fixtures and goldens.

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "factweaver/cli.hpp"
#include "factweaver/factweaver.hpp"

using namespace factweaver;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

DataTable fixture(const std::string& name) { return load_csv(read_file(std::string(FACTWEAVER_TEST_DATA) + "/" + name)); }

DataFact make(FactType t, Subspace s, std::vector<std::string> b, std::vector<Measure> m, std::vector<Filter> x = {}) {
    DataFact f;
    f.type = t;
    f.subspace = std::move(s);
    f.breakdown = std::move(b);
    f.measures = std::move(m);
    f.focus = std::move(x);
    return f;
}

std::vector<DataFact> sample_facts(const DataTable& t, std::uint64_t seed, std::size_t per_type) {
    Rng rng(seed);
    std::vector<DataFact> out;
    for (FactType type : kFactTypes) {
        std::size_t got = 0;
        for (int i = 0; i < 400 && got < per_type; ++i) {
            auto f = random_fact(t, type, rng);
            if (f && is_usable(*f, t)) {
                out.push_back(*f);
                ++got;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// 1. Importance oracle
// ---------------------------------------------------------------------------

// Six rows held as plain strings; kinds are fixed by hand.
const std::vector<std::string> kSixHeader{"Year", "City", "Type", "Sales", "Cost"};
const std::vector<std::vector<std::string>> kSixRows{
    {"2019", "Oslo", "A", "10", "4"}, {"2019", "Rome", "B", "12", "5"}, {"2020", "Oslo", "B", "7", "3"},
    {"2020", "Rome", "A", "15", "9"}, {"2021", "Oslo", "A", "11", "2"}, {"2021", "Rome", "A", "20", "8"}};

std::size_t col(const std::string& name) {
    return static_cast<std::size_t>(std::find(kSixHeader.begin(), kSixHeader.end(), name) - kSixHeader.begin());
}

struct BruteScore {
    double p, bits, imp;
};

BruteScore brute_score(const DataFact& f, double significance) {
    const double N = 2, C = 2, T = 1, m = 3;
    double pm = 1;
    if (f.measures.size() == 1) pm = 1 / N;
    if (f.measures.size() == 2) pm = 1 / (N * (N - 1) / 2);
    double pb = 1;
    if (f.type == FactType::trend) pb = 1 / T;
    else if (f.type == FactType::categorization || f.type == FactType::distribution) pb = 1 / C;
    else if (f.type != FactType::value) pb = 1 / (C + T);
    // sum over i of C(m, i) = 2^m
    double combos = 0;
    for (int i = 0; i <= m; ++i) combos += std::tgamma(m + 1) / (std::tgamma(i + 1) * std::tgamma(m - i + 1));
    double ps = 1 / combos;
    std::vector<std::size_t> scope;
    for (std::size_t r = 0; r < kSixRows.size(); ++r) {
        bool in = true;
        for (const auto& flt : f.subspace.filters) in = in && kSixRows[r][col(flt.field)] == flt.value;
        if (in) scope.push_back(r);
    }
    for (const auto& flt : f.subspace.filters) {
        double hits = 0;
        for (const auto& row : kSixRows) hits += row[col(flt.field)] == flt.value;
        ps *= hits / kSixRows.size();
    }
    double px = 1;
    if (!f.focus.empty()) {
        double hits = 0;
        for (std::size_t r : scope) {
            bool any = false;
            for (const auto& x : f.focus) any = any || kSixRows[r][col(x.field)] == x.value;
            hits += any;
        }
        px = hits / scope.size();
    }
    const double p = pm * pb * ps * px;
    const double bits = -std::log2(p);
    return {p, bits, significance * bits};
}

Outcome criterion_importance() {
    Outcome o;
    const auto start = Clock::now();
    std::string csv;
    for (std::size_t i = 0; i < kSixHeader.size(); ++i) csv += (i ? "," : "") + kSixHeader[i];
    csv += "\n";
    for (const auto& r : kSixRows) {
        for (std::size_t i = 0; i < r.size(); ++i) csv += (i ? "," : "") + r[i];
        csv += "\n";
    }
    const auto t = load_csv(csv);
    o.require(t.field("Year").kind == FieldKind::temporal && t.count_of(FieldKind::numerical) == 2, "fixture kinds");

    std::vector<DataFact> facts;
    for (std::size_t round = 0; facts.size() < 30 && round < 40; ++round)
        for (FactType type : kFactTypes) {
            const auto all = enumerate_facts(t, type, 1);
            if (round < all.size() && is_usable(all[round], t) && facts.size() < 30) facts.push_back(all[round]);
        }
    o.require(facts.size() == 30, "could not enumerate 30 facts");
    for (const auto& f : facts) {
        const auto s = importance(f, t);
        const auto b = brute_score(f, s.significance);
        o.require(std::fabs(s.probability - b.p) <= 1e-12, "P(f) mismatch for " + fact_key(f));
        o.require(std::fabs(s.self_information_bits - b.bits) <= 1e-12, "I(f) mismatch for " + fact_key(f));
        o.require(std::fabs(s.importance - b.imp) <= 1e-12, "I_s(f) mismatch for " + fact_key(f));
    }

    // hand-computed: m = 2, N = 1, Brand = Ford on 5 of 10 rows
    const auto small = load_csv("Brand,Category,Sales\nFord,SUV,10\nFord,Compact,20\nFord,SUV,30\nFord,Sedan,5\n"
                                "Ford,Compact,15\nBMW,SUV,7\nBMW,Sedan,12\nHonda,Compact,9\nHonda,SUV,4\nHonda,Sedan,8\n");
    const auto s = importance(make(FactType::value, {{{"Brand", "Ford"}}}, {}, {{"Sales", Aggregate::sum}}), small);
    o.require(s.probability == 0.125 && s.self_information_bits == 3.0, "3-bit example");
    o.require(s.importance == s.significance * 3.0, "importance = S * I");
    const double elapsed = seconds_since(start);
    o.require(elapsed < 1.0, "took " + std::to_string(elapsed) + " s");
    if (o.pass) o.detail = "30 facts to 1e-12, 3-bit example exact, " + format_fixed(elapsed, 3) + " s";
    return o;
}

// ---------------------------------------------------------------------------
// 2. Significance suite
// ---------------------------------------------------------------------------

Outcome criterion_significance() {
    Outcome o;
    std::set<FactType> computed;
    std::size_t degenerate = 0;
    for (const char* name : {"carsales.csv", "covid_deaths.csv", "sales_1k.csv"}) {
        const auto t = fixture(name);
        for (const auto& f : sample_facts(t, fnv1a(name), 12)) {
            // data-dependent failures are typed errors that callers score as 0
            try {
                const double s = significance(f, t);
                o.require(s >= 0.0 && s <= 1.0, std::string("out of range on ") + name + ": " + fact_key(f));
                computed.insert(f.type);
            } catch (const InsufficientData&) {
                ++degenerate;
            } catch (const DegenerateInput&) {
                ++degenerate;
            }
            const double used = importance(f, t).significance;
            o.require(used >= 0.0 && used <= 1.0, "importance carries significance outside [0,1]");
        }
    }
    o.require(computed.size() == kFactTypes.size(), "some type never produced a significance value");
    const auto two = [](const char* a, const char* b) { return load_csv(std::string("G,V\nA,") + a + "\nB," + b + "\n"); };
    o.require(significance(make(FactType::proportion, {}, {"G"}, {{"V", Aggregate::sum}}, {{"G", "A"}}), two("62", "38")) == 1.0,
              "proportion 0.62");
    o.require(std::fabs(significance(make(FactType::proportion, {}, {"G"}, {{"V", Aggregate::sum}}, {{"G", "B"}}),
                                     two("70", "30")) - 0.30) < 1e-15,
              "proportion 0.30");
    o.require(significance(make(FactType::outlier, {}, {"G"}, {{"V", Aggregate::sum}}, {{"G", "e"}}),
                           load_csv("G,V\na,1\nb,2\nc,3\nd,4\ne,5\n")) == 0.0,
              "grubbs none");
    o.require(significance(make(FactType::association, {}, {"G"}, {{"X", Aggregate::sum}, {"Y", Aggregate::sum}}),
                           load_csv("G,X,Y\na,1,2\nb,2,4\nc,3,6\nd,4,8\ne,5,10\n")) == 1.0,
              "perfect association");

    boost::math::quadrature::tanh_sinh<double> tanh_sinh;
    const auto q = [&](auto f, double a, double b) { return a == b ? 0.0 : a < b ? tanh_sinh.integrate(f, a, b) : -tanh_sinh.integrate(f, b, a); };
    double worst = 0;
    for (double nu : {1.0, 3.0, 10.0, 25.0})
        for (double x : {-4.0, -1.3, 0.2, 0.9, 2.5}) {
            const double c = std::exp(std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2)) / std::sqrt(nu * stats::kPi);
            const double tail = q([&](double u) { return c * std::pow(1 + u * u / nu, -(nu + 1) / 2); }, 0.0, std::fabs(x));
            worst = std::max(worst, std::fabs(stats::cdf(stats::StudentT{nu}, x) - (x >= 0 ? 0.5 + tail : 0.5 - tail)));
        }
    for (double k : {1.0, 2.0, 4.0, 9.0})
        for (double x : {0.3, 1.0, 3.7, 8.0}) {
            const double c = 1.0 / (std::pow(2.0, k / 2) * std::tgamma(k / 2));
            const double v = q([&](double u) { return c * std::pow(u, k / 2 - 1) * std::exp(-u / 2); }, 0.0, x);
            worst = std::max(worst, std::fabs(stats::cdf(stats::ChiSquare{k}, x) - v));
        }
    for (double x : {-3.0, -0.5, 0.7, 2.2}) {
        const double v = 0.5 + q([](double u) { return std::exp(-u * u / 2) / std::sqrt(2 * stats::kPi); }, 0.0, x);
        worst = std::max(worst, std::fabs(stats::cdf(stats::Normal{0, 1}, x) - v));
        const double l = 0.5 + q(
                                   [](double u) {
                                       const double e = std::exp(-u / 0.5);
                                       return e / (0.5 * (1 + e) * (1 + e));
                                   },
                                   0.0, x);
        worst = std::max(worst, std::fabs(stats::cdf(stats::Logistic{0, 0.5}, x) - l));
    }
    o.require(worst <= 1e-9, "CDF error " + std::to_string(worst));
    if (o.pass) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "ten types in [0,1] (%zu degenerate scored 0), fixtures exact, max CDF error %.1e",
                      degenerate, worst);
        o.detail = buf;
    }
    return o;
}

// ---------------------------------------------------------------------------
// 3. Search correctness
// ---------------------------------------------------------------------------

DataTable eight_rows() {
    return load_csv(
        "Year,Region,Product,Sales,Profit\n"
        "2019,North,A,10,2\n2019,South,B,14,3\n2020,North,B,12,5\n2020,South,A,9,1\n"
        "2021,North,A,20,6\n2021,South,B,7,2\n2022,North,B,25,8\n2022,South,A,5,1\n");
}

double oracle_reward(const std::vector<DataFact>& facts, const std::vector<Relation>& rels, const DataTable& t) {
    std::map<FactType, double> counts;
    for (const auto& f : facts) counts[f.type] += 1;
    const double k = static_cast<double>(counts.size());
    double evenness = 1;
    if (counts.size() > 1) {
        double h = 0;
        for (auto& [type, c] : counts) h -= c / facts.size() * std::log(c / facts.size());
        evenness = h / std::log(k);
    }
    const double d = std::min(1.0, k / std::min<double>(facts.size(), 10) * evenness);
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
        h += s.probability * s.importance;
    }
    const RewardWeights w;
    return (w.diversity * d + w.logicality * l + w.integrity * c) * h;
}

void brute_force(std::vector<DataFact>& facts, std::vector<Relation>& rels, std::size_t length, const DataTable& t,
                 std::size_t fanout, std::uint64_t seed, double& best, std::size_t& paths) {
    if (facts.size() == length) {
        ++paths;
        best = std::max(best, oracle_reward(facts, rels, t));
        return;
    }
    for (const auto& c : expansion_candidates(facts, t, fanout, seed)) {
        facts.push_back(c.fact);
        rels.push_back(c.relation);
        brute_force(facts, rels, length, t, fanout, seed, best, paths);
        facts.pop_back();
        rels.pop_back();
    }
}

Outcome criterion_search() {
    Outcome o;
    const auto start = Clock::now();
    const auto t = eight_rows();
    std::size_t cases = 0, total_paths = 0;
    for (std::size_t fanout : {2u, 3u})
        for (std::size_t depth : {2u, 3u})
            for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
                Goal goal;
                goal.max_length = depth;
                goal.iteration_budget = 100000;
                SearchConfig cfg;
                cfg.fanout = fanout;
                cfg.simulation_budget = 1000000;
                const auto story = generate_story(t, goal, {}, cfg, seed);
                std::vector<DataFact> facts{initial_fact(t, seed)};
                std::vector<Relation> rels;
                double best = -1;
                std::size_t paths = 0;
                brute_force(facts, rels, depth, t, fanout, seed, best, paths);
                total_paths += paths;
                ++cases;
                if (paths == 0) {
                    o.require(story.facts.size() == 1, "no legal path but search extended the story");
                    continue;
                }
                o.require(story.facts.size() == depth, "story shorter than a reachable full path");
                o.require(std::fabs(story.reward - best) <= 1e-12, "reward differs from brute force (fanout " + std::to_string(fanout) +
                                                    ", depth " + std::to_string(depth) + ", seed " +
                                                    std::to_string(seed) + ")");
            }
    const double elapsed = seconds_since(start);
    o.require(elapsed < 30.0, "took " + std::to_string(elapsed) + " s");
    if (o.pass)
        o.detail = std::to_string(cases) + " cases, " + std::to_string(total_paths) + " paths, exact, " +
                   format_fixed(elapsed, 2) + " s";
    return o;
}

// ---------------------------------------------------------------------------
// 4. Search efficiency
// ---------------------------------------------------------------------------

Outcome criterion_efficiency() {
    Outcome o;
    const auto t = fixture("sales_1k.csv");
    o.require(t.row_count() == 1000, "fixture should have 1,000 rows");
    Goal goal;
    goal.max_length = 6;
    goal.time_budget_seconds = 10.0;
    const auto start = Clock::now();
    StorySearch search(t, goal, {}, {}, 2024);
    const auto story = search.run();
    const double wall = seconds_since(start);
    const auto& st = search.stats();
    o.require(story.facts.size() == 6, "story has " + std::to_string(story.facts.size()) + " facts");
    o.require(st.late_simulation_steps == 0, std::to_string(st.late_simulation_steps) + " late simulation steps");
    o.require(wall <= 10.0 + 2.0, "wall time " + std::to_string(wall) + " s");
    if (o.pass)
        o.detail = "6 facts in " + format_fixed(wall, 2) + " s, " + std::to_string(st.simulation_steps) +
                   " simulation steps, none late";
    return o;
}

// ---------------------------------------------------------------------------
// 5. Logic fidelity
// ---------------------------------------------------------------------------

Outcome criterion_logic() {
    Outcome o;
    double worst = 0;
    for (FactType ft : kFactTypes) {
        Rng rng(mix_seed(7, index_of(ft)));
        std::array<int, 6> hits{};
        for (int i = 0; i < 10000; ++i) ++hits[index_of(sample_relation(ft, rng))];
        for (Relation r : kRelations) worst = std::max(worst, std::fabs(hits[index_of(r)] / 10000.0 - relation_likelihood(ft, r)));
        o.require(hits[index_of(Relation::contrast)] == 0 || ft != FactType::value, "value sampled contrast");
    }
    o.require(worst <= 0.03, "frequency off by " + std::to_string(worst));

    std::size_t pairs = 0;
    for (const char* name : {"carsales.csv", "covid_deaths.csv", "sales_1k.csv"}) {
        const auto t = fixture(name);
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            Goal goal;
            goal.max_length = 5;
            goal.iteration_budget = 6;
            SearchConfig cfg;
            cfg.fanout = 10;
            cfg.simulation_budget = 4;
            const auto story = generate_story(t, goal, {}, cfg, seed);
            for (std::size_t i = 0; i + 1 < story.facts.size(); ++i, ++pairs) {
                o.require(story.relations[i] != Relation::unlinked, "generated pair is unlinked");
                o.require(check_relation(story.facts[i], story.facts[i + 1], story.relations[i], t),
                          std::string("pair fails its rule on ") + name);
                o.require(!(story.facts[i].type == FactType::value && story.relations[i] == Relation::contrast),
                          "value -> contrast in a story");
            }
        }
        // value facts never receive contrast candidates
        Rng rng(3);
        for (int i = 0; i < 20; ++i) {
            auto f = random_fact(t, FactType::value, rng);
            if (!f) continue;
            o.require(expand(*f, Relation::contrast, t, rng, 10).empty(), "expand(value, contrast) non-empty");
            for (const auto& c : expansion_candidates({*f}, t, 20, i))
                o.require(c.relation != Relation::contrast, "value proposed contrast");
        }
    }
    if (o.pass) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "max frequency error %.4f, %zu story pairs revalidated, no value/contrast", worst,
                      pairs);
        o.detail = buf;
    }
    return o;
}

// ---------------------------------------------------------------------------
// 6. Reward components
// ---------------------------------------------------------------------------

Outcome criterion_reward() {
    Outcome o;
    const auto t = fixture("carsales.csv");
    const auto pool = sample_facts(t, 99, 6);
    Rng rng(123);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 1 + uniform_index(rng, 8);
        std::vector<DataFact> facts;
        std::vector<Relation> rels;
        for (std::size_t k = 0; k < n; ++k) facts.push_back(pool[uniform_index(rng, pool.size())]);
        for (std::size_t k = 0; k + 1 < n; ++k) rels.push_back(static_cast<Relation>(uniform_index(rng, 7)));
        const double d = diversity(facts), l = logicality(facts, rels), c = integrity(facts, t);
        o.require(d >= 0 && d <= 1 && l >= 0 && l <= 1 && c >= 0 && c <= 1, "component outside [0,1]");
    }
    auto typed = [](FactType ft) {
        DataFact f;
        f.type = ft;
        return f;
    };
    std::vector<DataFact> six;
    for (FactType ft : {FactType::value, FactType::trend, FactType::rank, FactType::extreme, FactType::outlier,
                        FactType::difference})
        six.push_back(typed(ft));
    o.require(diversity(six) == 1.0, "diversity 1.0 fixture");
    o.require(diversity(std::vector<DataFact>(4, typed(FactType::value))) == 0.25, "diversity 0.25 fixture");
    o.require(diversity({typed(FactType::value), typed(FactType::value), typed(FactType::trend), typed(FactType::trend)}) ==
                  0.5,
              "diversity 0.5 fixture");
    o.require(logicality({typed(FactType::value), typed(FactType::trend)}, {Relation::similarity}) == 0.456,
              "logicality 0.456 fixture");
    if (o.pass) o.detail = "1000 random stories in range, fixtures 1.0 / 0.25 / 0.5 / 0.456 exact";
    return o;
}

// ---------------------------------------------------------------------------
// 7. Narration goldens
// ---------------------------------------------------------------------------

Outcome criterion_narration() {
    Outcome o;
    const auto goldens = json::parse(read_file(std::string(FACTWEAVER_GOLDEN_DIR) + "/captions.json"));
    std::set<FactType> types;
    std::set<std::string> captions;
    for (const auto& g : goldens) {
        const auto t = fixture(g.at("dataset").get<std::string>());
        const auto f = from_fact_record(g.at("fact"), t.schema());
        types.insert(f.type);
        const auto got = caption(f, t);
        o.require(got == g.at("caption").get<std::string>(), "golden " + g.at("name").get<std::string>() + ": " + got);
        captions.insert(got);
    }
    o.require(types.size() == kFactTypes.size(), "goldens do not cover all ten types");
    for (const char* s : {"The distribution of the total Infections over Province(s) when Country is China and Province "
                          "is Hubei needs to pay attention.",
                          "The total Sales is 21,921,768.",
                          "The maximum value of the total Deaths is 42 when Date is 2020/3/2."})
        o.require(captions.count(s) == 1, std::string("missing worked sentence: ") + s);
    if (o.pass) o.detail = std::to_string(goldens.size()) + " goldens over 10 types, 3 worked sentences";
    return o;
}

// ---------------------------------------------------------------------------
// 8. Chart defaults
// ---------------------------------------------------------------------------

Outcome criterion_charts() {
    Outcome o;
    o.require(default_chart(FactType::trend) == ChartType::line, "trend default");
    o.require(default_chart(FactType::proportion) == ChartType::pie, "proportion default");
    o.require(default_chart(FactType::value) == ChartType::big_number, "value default");
    for (FactType t : kFactTypes) {
        const auto zero = chart_candidates(t, 0.0);
        o.require(zero.size() == 1 && zero.front() == default_chart(t), "diversity 0 is not a single default");
        std::vector<ChartType> prev;
        for (int i = 0; i <= 1000; ++i) {
            const auto c = chart_candidates(t, i / 1000.0);
            o.require(c.size() >= prev.size() && std::equal(prev.begin(), prev.end(), c.begin()),
                      std::string("not prefix-monotone for ") + std::string(to_string(t)));
            prev = c;
        }
    }
    if (o.pass) o.detail = "defaults line/pie/big_number, prefix-monotone over 1001 steps, one chart at 0";
    return o;
}

// ---------------------------------------------------------------------------
// 9. Layout optimality
// ---------------------------------------------------------------------------

double oracle_layout_f(const std::vector<std::size_t>& lengths, const std::vector<double>& imp, const DistanceMatrix& d) {
    const std::size_t n = imp.size(), k = lengths.size();
    double total = 0;
    for (double v : imp) total += v;
    std::vector<double> s(n), a(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = total > 0 ? imp[i] / total : 1.0 / n;
    std::vector<std::size_t> first, last;
    std::size_t at = 0;
    for (std::size_t len : lengths) {
        double row = 0;
        for (std::size_t i = at; i < at + len; ++i) row += std::max(s[i], 1e-6);
        for (std::size_t i = at; i < at + len; ++i) a[i] = std::max(s[i], 1e-6) / row / k;
        first.push_back(at);
        last.push_back(at + len - 1);
        at += len;
    }
    double fs = 0, asum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        fs += s[i] * a[i];
        asum += a[i];
    }
    double inter = 0, intra = 0;
    for (std::size_t j = 0; j + 1 < k; ++j) inter += d[last[j]][first[j + 1]];
    if (k > 1) inter /= static_cast<double>(k - 1);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = first[j]; i < last[j]; ++i) intra += d[i][i + 1];
    if (n > k) intra /= static_cast<double>(n - k);
    return fs / asum + inter - intra;
}

Outcome criterion_layout() {
    Outcome o;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0, 1);
    std::size_t checked = 0;
    const auto t = fixture("carsales.csv");
    const auto pool = sample_facts(t, 5, 2);
    for (std::size_t n = 1; n <= 8; ++n)
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<double> imp(n);
            DistanceMatrix d;
            if (trial % 3 == 0) {
                // real facts: distances from similarity, importance from scoring
                std::vector<DataFact> facts;
                for (std::size_t i = 0; i < n; ++i) facts.push_back(pool[(trial * 7 + i * 3) % pool.size()]);
                for (std::size_t i = 0; i < n; ++i) imp[i] = importance(facts[i], t).importance;
                d = distance_matrix(facts, t);
            } else {
                for (auto& v : imp) v = u(rng);
                d.assign(n, std::vector<double>(n, 0.0));
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = i + 1; j < n; ++j) d[i][j] = d[j][i] = u(rng);
            }
            // every composition of n, as a bitmask over the n - 1 gaps
            std::vector<std::size_t> best;
            double best_f = -1e300;
            for (std::uint32_t cut = 0; cut < (1u << (n - 1)); ++cut) {
                std::vector<std::size_t> lengths{1};
                for (std::size_t g = 0; g + 1 < n; ++g) {
                    if (cut >> g & 1u) lengths.push_back(0);
                    ++lengths.back();
                }
                const double f = oracle_layout_f(lengths, imp, d);
                if (f > best_f || (f == best_f && (lengths.size() < best.size() ||
                                                   (lengths.size() == best.size() && lengths < best)))) {
                    best_f = f;
                    best = lengths;
                }
            }
            const auto layout = layout_factsheet(imp, d, {1000, 1000}, n);
            std::vector<std::size_t> got;
            for (const auto& r : layout.rows) got.push_back(r.size());
            o.require(got == best, "layout differs from enumerator at n=" + std::to_string(n));
            ++checked;
        }
    const auto single = layout_score({{0}}, {1.0}, {1.0}, {{0.0}});
    o.require(single.f_d == 0.0 && single.f == 1.0, "n=1 convention");
    const DistanceMatrix d3{{0, 0.4, 0.9}, {0.4, 0, 0.2}, {0.9, 0.2, 0}};
    const auto singles = layout_score({{0}, {1}, {2}}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, d3);
    o.require(singles.intra == 0.0 && std::fabs(singles.inter - 0.3) < 1e-15, "all-singleton convention");
    if (o.pass) o.detail = std::to_string(checked) + " layouts with n <= 8 equal the enumerator; degenerate cases hold";
    return o;
}

// ---------------------------------------------------------------------------
// 10. Round-trips
// ---------------------------------------------------------------------------

Outcome criterion_round_trips() {
    Outcome o;
    std::size_t facts_checked = 0;
    for (const char* name : {"carsales.csv", "covid_deaths.csv", "sales_1k.csv"}) {
        const auto t = fixture(name);
        for (const auto& f : sample_facts(t, 31, 5)) {
            const auto back = from_fact_record(json::parse(to_fact_record(f).dump()), t.schema());
            o.require(back == f, "fact record changed: " + fact_key(f));
            ++facts_checked;
        }
    }

    const auto t = fixture("carsales.csv");
    GenerationParams p;
    p.goal.max_length = 5;
    p.goal.iteration_budget = 4;
    p.seed = 8;
    p.chart_diversity = 0.8;
    const auto doc = generate_document(t, p, nullptr, "acc", "carsales.csv");
    const auto text = to_json(doc).dump(2);
    const auto back = document_from_json(json::parse(text));
    o.require(to_json(back).dump(2) == text, "StoryDocument JSON changed on round trip");
    o.require(std::fabs(replay_reward(back, t) - doc.story.reward) <= 1e-9, "stored reward does not replay");

    const fs::path dir = fs::temp_directory_path() / ("fw-acceptance-" + std::to_string(Clock::now().time_since_epoch().count()));
    fs::create_directories(dir);
    const std::string csv = std::string(FACTWEAVER_TEST_DATA) + "/carsales.csv";
    std::vector<std::string> files;
    for (const char* out : {"a.json", "b.json"}) {
        const std::string path = (dir / out).string();
        const std::vector<std::string> args{"factweaver", "generate", csv, "--length", "5", "--iterations", "4",
                                            "--seed", "21", "--chart-diversity", "0.5", "--out", path};
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream sink_out, sink_err;
        const int code = cli::run(static_cast<int>(argv.size()), argv.data(), sink_out, sink_err);
        o.require(code == 0, "cli generate exit " + std::to_string(code) + ": " + sink_err.str());
        files.push_back(read_file(path));
    }
    fs::remove_all(dir);
    o.require(!files[0].empty() && files[0] == files[1], "cli output differs between runs");
    if (o.pass)
        o.detail = std::to_string(facts_checked) + " fact records, document JSON identical, replay within 1e-9, CLI " +
                   std::to_string(files[0].size()) + " bytes identical";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"importance oracle", criterion_importance},
        {"significance suite", criterion_significance},
        {"search correctness", criterion_search},
        {"search efficiency", criterion_efficiency},
        {"logic fidelity", criterion_logic},
        {"reward components", criterion_reward},
        {"narration goldens", criterion_narration},
        {"chart defaults", criterion_charts},
        {"layout optimality", criterion_layout},
        {"round-trips", criterion_round_trips},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failed += o.pass ? 0 : 1;
        std::printf("[%s] %2zu. %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
