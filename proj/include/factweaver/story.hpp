#pragma once

// Stories and their reward: diversity, logicality, integrity and entropy.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "factweaver/fact.hpp"
#include "factweaver/logic.hpp"
#include "factweaver/scoring.hpp"
#include "factweaver/table.hpp"

namespace factweaver {

struct RewardWeights {
    double diversity = 1.0 / 3.0;
    double logicality = 1.0 / 3.0;
    double integrity = 1.0 / 3.0;

    double sum() const { return diversity + logicality + integrity; }
};

/// Checks ranges and rescales to sum to one. Throws SpecError when a weight
/// is outside [0, 1] or the sum is off by more than `tolerance`.
inline RewardWeights normalized(RewardWeights w, double tolerance = 1e-6) {
    for (double v : {w.diversity, w.logicality, w.integrity})
        if (!(v >= 0.0 && v <= 1.0)) throw SpecError("reward weights must lie in [0, 1]");
    const double s = w.sum();
    if (std::fabs(s - 1.0) > tolerance) throw SpecError("reward weights must sum to 1");
    w.diversity /= s;
    w.logicality /= s;
    w.integrity /= s;
    return w;
}

enum class IntegrityMode { rows, cells };

struct StoryCriteria {
    double diversity = 0.0;
    double logicality = 0.0;
    double integrity = 0.0;
    double entropy = 0.0;
};

struct Story {
    std::vector<DataFact> facts;
    std::vector<Relation> relations;  // size = facts.size() - 1
    std::vector<FactScore> scores;
    StoryCriteria criteria;
    double reward = 0.0;
    bool goal_unmet = false;
    std::vector<std::string> warnings;
};

/// Sum of P(f) * I_s(f).
inline double entropy(const std::vector<FactScore>& scores) {
    double h = 0;
    for (const auto& s : scores) h += s.probability * s.importance;
    return h;
}

/// Type count over min(|S|, 10) times the normalized Shannon evenness of
/// the type mix (defined as 1 for a single type).
inline double diversity(const std::vector<DataFact>& facts) {
    if (facts.empty()) return 0.0;
    std::map<FactType, std::size_t> counts;
    for (const auto& f : facts) ++counts[f.type];
    const auto n = static_cast<double>(counts.size());
    const double richness = n / std::min<double>(static_cast<double>(facts.size()), 10.0);
    // An even split has evenness exactly 1; skip the rounding of h / ln n.
    const bool even = std::all_of(counts.begin(), counts.end(),
                                  [&](const auto& kv) { return kv.second == counts.begin()->second; });
    if (even) return std::min(richness, 1.0);
    double h = 0;
    for (const auto& [t, c] : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(facts.size());
        h -= p * std::log(p);
    }
    return std::clamp(richness * h / std::log(n), 0.0, 1.0);
}

/// Mean of P(r_i | type(f_i)); 1 for a single fact.
inline double logicality(const std::vector<DataFact>& facts, const std::vector<Relation>& relations,
                         const RelationTable& priors = RelationTable::builtin()) {
    if (facts.size() < 2) return 1.0;
    if (relations.size() != facts.size() - 1) throw SpecError("story needs one relation per adjacent pair");
    double sum = 0;
    for (std::size_t i = 0; i < relations.size(); ++i) sum += priors.likelihood(facts[i].type, relations[i]);
    return sum / static_cast<double>(relations.size());
}

/// Fraction of rows covered by the union of the facts' subspaces. In cell
/// mode, each fact covers its subspace rows times the fields it references.
inline double integrity(const std::vector<DataFact>& facts, const DataTable& table,
                        IntegrityMode mode = IntegrityMode::rows) {
    if (facts.empty() || table.row_count() == 0) return 0.0;
    if (mode == IntegrityMode::rows) {
        std::vector<char> covered(table.row_count(), 0);
        std::size_t n = 0;
        for (const auto& f : facts)
            for (std::size_t r : select_subspace(table, f.subspace))
                if (!covered[r]) {
                    covered[r] = 1;
                    ++n;
                }
        return static_cast<double>(n) / static_cast<double>(table.row_count());
    }
    std::set<std::pair<std::size_t, std::size_t>> cells;
    for (const auto& f : facts) {
        std::set<std::size_t> cols;
        for (const auto& x : f.subspace.filters) cols.insert(*table.field_index(x.field));
        for (const auto& b : f.breakdown) cols.insert(*table.field_index(b));
        for (const auto& m : f.measures)
            if (auto c = table.field_index(m.field)) cols.insert(*c);
        for (std::size_t r : select_subspace(table, f.subspace))
            for (std::size_t c : cols) cells.emplace(r, c);
    }
    return static_cast<double>(cells.size()) / static_cast<double>(table.row_count() * table.column_count());
}

/// (g1 D + g2 L + g3 C) * H
inline double reward(const StoryCriteria& c, const RewardWeights& w) {
    return (w.diversity * c.diversity + w.logicality * c.logicality + w.integrity * c.integrity) * c.entropy;
}

struct StoryEvaluator {
    RewardWeights weights;
    ScoringConfig scoring;
    RelationTable priors = RelationTable::builtin();
    IntegrityMode integrity_mode = IntegrityMode::rows;

    StoryCriteria criteria(const std::vector<DataFact>& facts, const std::vector<Relation>& relations,
                           const std::vector<FactScore>& scores, const DataTable& table) const {
        StoryCriteria c;
        c.diversity = diversity(facts);
        c.logicality = logicality(facts, relations, priors);
        c.integrity = integrity(facts, table, integrity_mode);
        c.entropy = entropy(scores);
        return c;
    }

    /// Scores every fact and fills criteria and reward.
    void evaluate(Story& story, const DataTable& table) const {
        story.scores.clear();
        for (const auto& f : story.facts) story.scores.push_back(importance(f, table, scoring));
        story.criteria = criteria(story.facts, story.relations, story.scores, table);
        story.reward = reward(story.criteria, weights);
    }
};

}  // namespace factweaver
