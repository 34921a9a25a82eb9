#pragma once

// StoryDocument: a story plus everything needed to present and edit it.
// The CLI writes it and the service persists it; both use the same JSON.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "factweaver/compose.hpp"
#include "factweaver/fact.hpp"
#include "factweaver/logic.hpp"
#include "factweaver/narrate.hpp"
#include "factweaver/scoring.hpp"
#include "factweaver/search.hpp"
#include "factweaver/story.hpp"
#include "factweaver/visualize.hpp"

namespace factweaver {

inline constexpr const char* kStoryFormat = "factweaver.story/1";

struct GenerationParams {
    Goal goal;
    RewardWeights weights;
    double chart_diversity = 0.0;
    std::uint64_t seed = 0;
    std::size_t fanout = 20;
    std::size_t simulation_budget = 8;
};

struct FactEntry {
    DerivedValue derived;
    ChartSpec chart;
};

struct StoryDocument {
    std::string id;
    std::string dataset_id;
    std::uint64_t revision = 0;
    GenerationParams params;
    Story story;
    std::vector<FactEntry> entries;  // parallel to story.facts
    std::string summary;
};

// ---------------------------------------------------------------------------
// Building and editing
// ---------------------------------------------------------------------------

namespace detail {

/// Falls back to the default chart when the requested one cannot show the data.
inline FactEntry make_entry(const DataFact& f, const DataTable& table, ChartType chart) {
    FactEntry e;
    e.derived = derive_value(f, table);
    try {
        e.chart = build_chart_spec(f, table, chart);
    } catch (const SpecError&) {
        if (chart == default_chart(f.type)) throw;
        e.chart = build_chart_spec(f, table, default_chart(f.type));
    }
    return e;
}

inline ChartType keep_or_default(const DataFact& f, std::optional<ChartType> current) {
    if (current) {
        const auto ok = chart_candidates(f.type, 1.0);
        if (std::find(ok.begin(), ok.end(), *current) != ok.end()) return *current;
    }
    return default_chart(f.type);
}

inline StoryEvaluator evaluator_for(const GenerationParams& p) {
    StoryEvaluator e;
    e.weights = normalized(p.weights);
    return e;
}

}  // namespace detail

/// Recomputes scores, criteria, reward, captions, charts and the summary.
/// Chart types already chosen are kept when they still suit the fact.
inline void refresh(StoryDocument& doc, const DataTable& table) {
    if (doc.story.facts.size() > 0 && doc.story.relations.size() != doc.story.facts.size() - 1)
        throw SpecError("story needs one relation per adjacent pair");
    detail::evaluator_for(doc.params).evaluate(doc.story, table);
    std::vector<FactEntry> entries;
    for (std::size_t i = 0; i < doc.story.facts.size(); ++i) {
        std::optional<ChartType> current;
        if (i < doc.entries.size()) current = doc.entries[i].chart.chart;
        entries.push_back(detail::make_entry(doc.story.facts[i], table, detail::keep_or_default(doc.story.facts[i], current)));
    }
    doc.entries = std::move(entries);
    doc.summary = story_summary(doc.story, table);
}

inline StoryDocument make_document(Story story, const DataTable& table, const GenerationParams& params,
                                   std::string id = {}, std::string dataset_id = {}) {
    StoryDocument doc;
    doc.id = std::move(id);
    doc.dataset_id = std::move(dataset_id);
    doc.params = params;
    doc.story = std::move(story);
    for (std::size_t i = 0; i < doc.story.facts.size(); ++i) {
        const auto chart = pick_chart(doc.story.facts[i].type, params.chart_diversity, params.seed, i);
        doc.entries.push_back(detail::make_entry(doc.story.facts[i], table, chart));
    }
    refresh(doc, table);
    return doc;
}

/// Runs the search and wraps the result.
inline StoryDocument generate_document(const DataTable& table, const GenerationParams& params,
                                       const std::atomic<bool>* cancel = nullptr, std::string id = {},
                                       std::string dataset_id = {}) {
    SearchConfig cfg;
    cfg.fanout = params.fanout;
    cfg.simulation_budget = params.simulation_budget;
    cfg.cancel = cancel;
    Story story = generate_story(table, params.goal, params.weights, cfg, params.seed);
    return make_document(std::move(story), table, params, std::move(id), std::move(dataset_id));
}

/// Relations for a new fact order: pairs that were already adjacent keep
/// their relation, new pairs get the likeliest legal one (or unlinked).
inline std::vector<Relation> relink(const std::vector<DataFact>& old_facts, const std::vector<Relation>& old_relations,
                                    const std::vector<DataFact>& facts, const DataTable& table) {
    std::map<std::pair<std::string, std::string>, Relation> known;
    for (std::size_t i = 0; i + 1 < old_facts.size() && i < old_relations.size(); ++i)
        known.emplace(std::make_pair(fact_key(old_facts[i]), fact_key(old_facts[i + 1])), old_relations[i]);
    std::vector<Relation> out;
    for (std::size_t i = 0; i + 1 < facts.size(); ++i) {
        auto it = known.find({fact_key(facts[i]), fact_key(facts[i + 1])});
        out.push_back(it != known.end() ? it->second : infer_relation(facts[i], facts[i + 1], table));
    }
    return out;
}

namespace detail {

inline void apply_facts(StoryDocument& doc, std::vector<DataFact> facts, std::vector<std::optional<ChartType>> charts,
                        const DataTable& table) {
    doc.story.relations = relink(doc.story.facts, doc.story.relations, facts, table);
    doc.story.facts = std::move(facts);
    std::vector<FactEntry> entries;
    for (std::size_t i = 0; i < doc.story.facts.size(); ++i)
        entries.push_back(make_entry(doc.story.facts[i], table, keep_or_default(doc.story.facts[i], charts[i])));
    doc.entries = std::move(entries);
    refresh(doc, table);
    ++doc.revision;
}

inline std::vector<std::optional<ChartType>> current_charts(const StoryDocument& doc) {
    std::vector<std::optional<ChartType>> out;
    for (const auto& e : doc.entries) out.push_back(e.chart.chart);
    out.resize(doc.story.facts.size());
    return out;
}

inline void require_usable(const DataFact& f, const DataTable& table) {
    if (auto v = validate(f, table); !v.empty()) throw ValidationError(v);
    if (!is_usable(f, table)) throw ValidationError({"fact has no data to describe"});
}

}  // namespace detail

/// Replaces fact `index`; the chart type is kept when it still suits the new fact.
inline void edit_fact(StoryDocument& doc, std::size_t index, const DataFact& fact, const DataTable& table,
                      std::optional<ChartType> chart = std::nullopt) {
    if (index >= doc.story.facts.size()) throw std::out_of_range("fact index out of range");
    detail::require_usable(fact, table);
    auto facts = doc.story.facts;
    auto charts = detail::current_charts(doc);
    facts[index] = fact;
    if (chart) {
        const auto ok = chart_candidates(fact.type, 1.0);
        if (std::find(ok.begin(), ok.end(), *chart) == ok.end())
            throw SpecError(std::string(to_string(*chart)) + " chart does not suit a " + std::string(to_string(fact.type)) +
                            " fact");
        charts[index] = chart;
    }
    detail::apply_facts(doc, std::move(facts), std::move(charts), table);
}

/// Inserts a fact at `position` (default: the end).
inline void add_fact(StoryDocument& doc, const DataFact& fact, const DataTable& table,
                     std::optional<std::size_t> position = std::nullopt) {
    const std::size_t pos = position.value_or(doc.story.facts.size());
    if (pos > doc.story.facts.size()) throw std::out_of_range("insert position out of range");
    detail::require_usable(fact, table);
    auto facts = doc.story.facts;
    auto charts = detail::current_charts(doc);
    facts.insert(facts.begin() + static_cast<std::ptrdiff_t>(pos), fact);
    charts.insert(charts.begin() + static_cast<std::ptrdiff_t>(pos), std::nullopt);
    detail::apply_facts(doc, std::move(facts), std::move(charts), table);
}

inline void remove_fact(StoryDocument& doc, std::size_t index, const DataTable& table) {
    if (index >= doc.story.facts.size()) throw std::out_of_range("fact index out of range");
    if (doc.story.facts.size() == 1) throw SpecError("a story keeps at least one fact");
    auto facts = doc.story.facts;
    auto charts = detail::current_charts(doc);
    facts.erase(facts.begin() + static_cast<std::ptrdiff_t>(index));
    charts.erase(charts.begin() + static_cast<std::ptrdiff_t>(index));
    detail::apply_facts(doc, std::move(facts), std::move(charts), table);
}

/// `order[i]` is the current index of the fact that moves to position i.
inline void reorder_facts(StoryDocument& doc, const std::vector<std::size_t>& order, const DataTable& table) {
    const std::size_t n = doc.story.facts.size();
    std::vector<char> used(n, 0);
    if (order.size() != n) throw std::out_of_range("order must list every fact once");
    for (std::size_t i : order) {
        if (i >= n || used[i]) throw std::out_of_range("order must list every fact once");
        used[i] = 1;
    }
    std::vector<DataFact> facts;
    std::vector<std::optional<ChartType>> charts;
    const auto old = detail::current_charts(doc);
    for (std::size_t i : order) {
        facts.push_back(doc.story.facts[i]);
        charts.push_back(old[i]);
    }
    detail::apply_facts(doc, std::move(facts), std::move(charts), table);
}

/// Reward recomputed from facts and relations alone.
inline double replay_reward(const StoryDocument& doc, const DataTable& table) {
    Story s;
    s.facts = doc.story.facts;
    s.relations = doc.story.relations;
    detail::evaluator_for(doc.params).evaluate(s, table);
    return s.reward;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

inline std::string render_document(const StoryDocument& doc, const DataTable& table, RenderMode mode,
                                   Size page = {1200, 1600}, std::size_t max_rows = 4) {
    std::vector<ChartSpec> specs;
    for (const auto& e : doc.entries) specs.push_back(e.chart);
    switch (mode) {
        case RenderMode::storyline: return render_storyline(specs);
        case RenderMode::swiper: return render_swiper(specs);
        case RenderMode::factsheet: {
            std::vector<double> imp;
            for (const auto& s : doc.story.scores) imp.push_back(s.importance);
            imp.resize(specs.size(), 0.0);
            const auto d = distance_matrix(doc.story.facts, table);
            return render_factsheet(specs, layout_factsheet(imp, d, page, std::min(max_rows, specs.size())));
        }
    }
    throw SpecError("unknown render mode");
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline json to_json(const GenerationParams& p) {
    json j = {{"max_length", p.goal.max_length},
              {"weights", {{"diversity", p.weights.diversity}, {"logicality", p.weights.logicality}, {"integrity", p.weights.integrity}}},
              {"chart_diversity", p.chart_diversity},
              {"seed", p.seed},
              {"fanout", p.fanout},
              {"simulation_budget", p.simulation_budget}};
    j["min_information_bits"] = p.goal.min_information_bits ? json(*p.goal.min_information_bits) : json(nullptr);
    j["time_budget_seconds"] = p.goal.time_budget_seconds ? json(*p.goal.time_budget_seconds) : json(nullptr);
    j["iteration_budget"] = p.goal.iteration_budget ? json(*p.goal.iteration_budget) : json(nullptr);
    return j;
}

inline GenerationParams params_from_json(const json& j) {
    GenerationParams p;
    p.goal.max_length = j.at("max_length").get<std::size_t>();
    const auto& w = j.at("weights");
    p.weights = {w.at("diversity").get<double>(), w.at("logicality").get<double>(), w.at("integrity").get<double>()};
    p.chart_diversity = j.at("chart_diversity").get<double>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.fanout = j.value("fanout", std::size_t{20});
    p.simulation_budget = j.value("simulation_budget", std::size_t{8});
    if (j.contains("min_information_bits") && !j["min_information_bits"].is_null())
        p.goal.min_information_bits = j["min_information_bits"].get<double>();
    if (j.contains("time_budget_seconds") && !j["time_budget_seconds"].is_null())
        p.goal.time_budget_seconds = j["time_budget_seconds"].get<double>();
    if (j.contains("iteration_budget") && !j["iteration_budget"].is_null())
        p.goal.iteration_budget = j["iteration_budget"].get<std::size_t>();
    return p;
}

inline DerivedValue derived_from_json(const json& j) {
    DerivedValue d;
    const auto t = parse_fact_type(j.at("type").get<std::string>());
    if (!t) throw ParseError("unknown fact type in derived value");
    d.type = *t;
    if (j.contains("number")) d.number = j["number"].get<double>();
    if (j.contains("direction")) {
        const auto s = j["direction"].get<std::string>();
        d.direction = s == "increasing" ? TrendDirection::increasing
                                        : (s == "decreasing" ? TrendDirection::decreasing : TrendDirection::flat);
    }
    if (j.contains("extreme")) d.extreme = j["extreme"].get<std::string>() == "max" ? ExtremeKind::max : ExtremeKind::min;
    return d;
}

inline FactScore score_from_json(const json& j) {
    FactScore s;
    s.significance = j.at("significance").get<double>();
    s.self_information_bits = j.at("self_information_bits").get<double>();
    s.probability = j.at("probability").get<double>();
    s.importance = j.at("importance").get<double>();
    s.zero_support = j.at("zero_support").get<bool>();
    return s;
}

inline json to_json(const StoryDocument& doc) {
    json facts = json::array();
    for (std::size_t i = 0; i < doc.story.facts.size(); ++i) {
        json f = {{"fact", to_fact_record(doc.story.facts[i])}};
        if (i < doc.story.scores.size()) f["score"] = to_json(doc.story.scores[i]);
        if (i < doc.entries.size()) {
            f["derived"] = to_json(doc.entries[i].derived);
            f["chart"] = to_json(doc.entries[i].chart);
            f["caption"] = doc.entries[i].chart.caption;
        }
        facts.push_back(std::move(f));
    }
    json relations = json::array();
    for (Relation r : doc.story.relations) relations.push_back(std::string(to_string(r)));
    const auto& c = doc.story.criteria;
    return {{"format", kStoryFormat},
            {"id", doc.id},
            {"dataset_id", doc.dataset_id},
            {"revision", doc.revision},
            {"parameters", to_json(doc.params)},
            {"facts", std::move(facts)},
            {"relations", std::move(relations)},
            {"reward", doc.story.reward},
            {"criteria", {{"diversity", c.diversity}, {"logicality", c.logicality}, {"integrity", c.integrity}, {"entropy", c.entropy}}},
            {"goal_unmet", doc.story.goal_unmet},
            {"warnings", doc.story.warnings},
            {"summary", doc.summary}};
}

inline StoryDocument document_from_json(const json& j) {
    try {
        if (j.at("format").get<std::string>() != kStoryFormat) throw ParseError("unsupported story format");
        StoryDocument doc;
        doc.id = j.at("id").get<std::string>();
        doc.dataset_id = j.at("dataset_id").get<std::string>();
        doc.revision = j.at("revision").get<std::uint64_t>();
        doc.params = params_from_json(j.at("parameters"));
        for (const auto& f : j.at("facts")) {
            doc.story.facts.push_back(from_fact_record(f.at("fact")));
            doc.story.scores.push_back(score_from_json(f.at("score")));
            doc.entries.push_back({derived_from_json(f.at("derived")), chart_spec_from_json(f.at("chart"))});
        }
        for (const auto& r : j.at("relations")) {
            const auto rel = parse_relation(r.get<std::string>());
            if (!rel) throw ParseError("unknown relation: " + r.get<std::string>());
            doc.story.relations.push_back(*rel);
        }
        doc.story.reward = j.at("reward").get<double>();
        const auto& c = j.at("criteria");
        doc.story.criteria = {c.at("diversity").get<double>(), c.at("logicality").get<double>(),
                              c.at("integrity").get<double>(), c.at("entropy").get<double>()};
        doc.story.goal_unmet = j.at("goal_unmet").get<bool>();
        doc.story.warnings = j.at("warnings").get<std::vector<std::string>>();
        doc.summary = j.at("summary").get<std::string>();
        if (!doc.story.facts.empty() && doc.story.relations.size() + 1 != doc.story.facts.size())
            throw ParseError("story needs one relation per adjacent pair");
        return doc;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad story document: ") + e.what());
    }
}

}  // namespace factweaver
