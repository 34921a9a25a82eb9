#pragma once

// Coherence relations between consecutive facts: likelihood priors per fact
// type, the six expansion rules, and a checker that re-validates a pair.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "factweaver/fact.hpp"
#include "factweaver/generator.hpp"
#include "factweaver/stats.hpp"
#include "factweaver/table.hpp"
#include "factweaver/util.hpp"

namespace factweaver {

enum class Relation { similarity, temporal, contrast, cause_effect, elaboration, generalization, unlinked };

inline constexpr std::array<Relation, 6> kRelations{Relation::similarity,   Relation::temporal,
                                                    Relation::contrast,     Relation::cause_effect,
                                                    Relation::elaboration, Relation::generalization};

inline std::string_view to_string(Relation r) {
    switch (r) {
        case Relation::similarity: return "similarity";
        case Relation::temporal: return "temporal";
        case Relation::contrast: return "contrast";
        case Relation::cause_effect: return "cause_effect";
        case Relation::elaboration: return "elaboration";
        case Relation::generalization: return "generalization";
        case Relation::unlinked: return "unlinked";
    }
    return "?";
}

inline std::optional<Relation> parse_relation(std::string_view s) {
    for (Relation r : kRelations)
        if (to_string(r) == s) return r;
    if (s == "unlinked") return Relation::unlinked;
    return std::nullopt;
}

inline std::size_t index_of(Relation r) { return static_cast<std::size_t>(r); }

/// P(relation | fact type), rows normalized to sum to one.
class RelationTable {
public:
    using Row = std::array<double, 6>;

    /// Builds from percentages (one row per fact type, columns in
    /// kRelations order); each row is divided by its own sum.
    static RelationTable from_percentages(const std::array<Row, 10>& pct) {
        RelationTable t;
        for (std::size_t i = 0; i < pct.size(); ++i) {
            double sum = 0;
            for (double v : pct[i]) {
                if (v < 0) throw SpecError("relation likelihoods must be non-negative");
                sum += v;
            }
            if (sum <= 0) throw SpecError("relation likelihood row sums to zero");
            for (std::size_t j = 0; j < 6; ++j) t.p_[i][j] = pct[i][j] / sum;
        }
        return t;
    }

    static const RelationTable& builtin() {
        static const RelationTable table = from_percentages({{
            {45.6, 8.9, 0.0, 4.2, 26.8, 14.5},   // value
            {41.6, 6.7, 0.0, 5.8, 31.1, 14.8},   // difference
            {52.1, 7.3, 0.0, 5.2, 22.4, 13.0},   // proportion
            {34.7, 9.4, 8.2, 7.1, 28.2, 12.4},   // trend
            {37.7, 3.4, 0.0, 3.4, 47.5, 7.8},    // categorization
            {49.0, 12.1, 0.0, 4.4, 22.3, 12.1},  // distribution
            {43.8, 11.7, 0.0, 6.6, 34.3, 3.6},   // rank
            {31.0, 5.6, 15.1, 7.1, 26.2, 15.1},  // association
            {51.8, 5.6, 0.0, 3.7, 25.9, 13.0},   // extreme
            {20.0, 10.0, 0.0, 10.0, 40.0, 20.0}, // outlier
        }});
        return table;
    }

    /// Reads {"value": [6 percentages], ...}; missing types keep the builtin row.
    static RelationTable from_json(const json& j) {
        std::array<Row, 10> pct{};
        for (FactType t : kFactTypes) {
            const auto& row = builtin().p_[index_of(t)];
            for (std::size_t k = 0; k < 6; ++k) pct[index_of(t)][k] = row[k] * 100.0;
            const std::string name(to_string(t));
            if (!j.contains(name)) continue;
            const auto& v = j[name];
            if (!v.is_array() || v.size() != 6) throw SpecError("relation row for " + name + " needs 6 numbers");
            for (std::size_t k = 0; k < 6; ++k) {
                if (!v[k].is_number()) throw SpecError("relation row for " + name + " needs 6 numbers");
                pct[index_of(t)][k] = v[k].get<double>();
            }
        }
        return from_percentages(pct);
    }

    double likelihood(FactType t, Relation r) const {
        if (r == Relation::unlinked) return 0.0;
        return p_[index_of(t)][index_of(r)];
    }

    const Row& row(FactType t) const { return p_[index_of(t)]; }

private:
    std::array<Row, 10> p_{};
};

inline double relation_likelihood(FactType t, Relation r) { return RelationTable::builtin().likelihood(t, r); }

/// Draws a relation with probability P(r | t).
inline Relation sample_relation(FactType t, Rng& rng, const RelationTable& table = RelationTable::builtin()) {
    const double u = uniform01(rng);
    double acc = 0;
    Relation last = Relation::similarity;
    for (Relation r : kRelations) {
        const double p = table.likelihood(t, r);
        if (p <= 0) continue;
        acc += p;
        last = r;
        if (u < acc) return r;
    }
    return last;
}

/// Children per relation: round(budget * P(r|t)), at least one for every
/// relation with nonzero likelihood.
inline std::array<std::size_t, 6> allocate_fanout(FactType t, std::size_t budget,
                                                  const RelationTable& table = RelationTable::builtin()) {
    std::array<std::size_t, 6> out{};
    for (Relation r : kRelations) {
        const double p = table.likelihood(t, r);
        if (p <= 0) continue;
        out[index_of(r)] = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(budget) * p)));
    }
    return out;
}

/// The numerical field most correlated with `measure_field` over all rows
/// (|r| >= 0.3, first in schema order on ties), or nullopt.
inline std::optional<std::string> causal_successor(std::string_view measure_field, const DataTable& table) {
    const auto src = table.field_index(measure_field);
    if (!src || table.schema()[*src].kind != FieldKind::numerical) return std::nullopt;
    std::optional<std::string> best;
    double best_r = 0.3;
    for (std::size_t c = 0; c < table.column_count(); ++c) {
        if (c == *src || table.schema()[c].kind != FieldKind::numerical) continue;
        std::vector<double> x, y;
        for (std::size_t r = 0; r < table.row_count(); ++r) {
            const double a = table.number(r, *src), b = table.number(r, c);
            if (std::isnan(a) || std::isnan(b)) continue;
            x.push_back(a);
            y.push_back(b);
        }
        double r;
        try {
            r = std::fabs(stats::pearson_test(x, y).r);
        } catch (const Error&) {
            continue;
        }
        if (r > best_r || (!best && r >= best_r)) {
            best_r = r;
            best = table.schema()[c].name;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Expansion
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<std::string> successor(const DataTable& table, const std::string& field, const std::string& value) {
    const auto col = table.field_index(field);
    if (!col) return std::nullopt;
    const auto& meta = table.schema()[*col];
    if (meta.kind != FieldKind::temporal) return std::nullopt;
    const auto code = table.value_code(*col, value);
    if (!code || static_cast<std::size_t>(*code + 1) >= meta.distinct_values.size()) return std::nullopt;
    return meta.distinct_values[static_cast<std::size_t>(*code + 1)];
}

inline bool is_temporal(const DataTable& table, const std::string& field) {
    const auto col = table.field_index(field);
    return col && table.schema()[*col].kind == FieldKind::temporal;
}

inline bool focus_optional(FactType t) { return rule_for(t).focus_min == 0 && rule_for(t).focus_max != 0; }

inline bool focus_required(FactType t) { return rule_for(t).focus_min > 0; }

/// +1 / -1 / 0 for the slope of a trend or the correlation of an association.
inline int derived_sign(const DataFact& f, const DataTable& table) {
    try {
        const auto d = derive_value(f, table);
        if (!d.number) return 0;
        return *d.number > 0 ? 1 : (*d.number < 0 ? -1 : 0);
    } catch (const Error&) {
        return 0;
    }
}

/// Dimension fields that could be added as a new subspace filter.
inline std::vector<std::string> free_dimensions(const DataFact& f, const DataTable& table) {
    std::vector<std::string> out;
    if (f.subspace.size() >= 2) return out;
    for (const auto& d : table.dimension_fields()) {
        if (f.subspace.find(d)) continue;
        if (!f.breakdown.empty() && f.breakdown.front() == d) continue;
        out.push_back(d);
    }
    return out;
}

inline bool same_fields(const DataFact& a, const DataFact& b) {
    return a.breakdown == b.breakdown && a.measures == b.measures;
}

/// True when `big` equals `small` plus exactly one extra filter.
inline std::optional<Filter> added_filter(const Subspace& small, const Subspace& big) {
    if (big.size() != small.size() + 1) return std::nullopt;
    std::optional<Filter> extra;
    for (const auto& f : big.filters) {
        const Filter* g = small.find(f.field);
        if (!g) {
            if (extra) return std::nullopt;
            extra = f;
        } else if (g->value != f.value) {
            return std::nullopt;
        }
    }
    return extra;
}

/// The single filter whose value changed between two subspaces with the same fields.
inline std::optional<std::pair<Filter, Filter>> replaced_filter(const Subspace& a, const Subspace& b) {
    if (a.size() != b.size()) return std::nullopt;
    std::optional<std::pair<Filter, Filter>> changed;
    for (const auto& f : a.filters) {
        const Filter* g = b.find(f.field);
        if (!g) return std::nullopt;
        if (g->value != f.value) {
            if (changed) return std::nullopt;
            changed = std::make_pair(f, *g);
        }
    }
    return changed;
}

inline std::vector<FactType> compatible_types(const DataFact& skeleton, const DataTable& table) {
    std::vector<FactType> out;
    std::optional<FieldKind> kind;
    if (!skeleton.breakdown.empty()) kind = table.field(skeleton.breakdown.front()).kind;
    for (FactType t : kFactTypes) {
        const auto rule = rule_for(t);
        if (rule.breakdown == BreakdownRule::none ? kind.has_value() : (!kind || !breakdown_fits(t, *kind))) continue;
        if (rule.measures > static_cast<int>(skeleton.measures.size())) continue;
        out.push_back(t);
    }
    return out;
}

/// Retypes a skeleton, trimming its measures to what the type takes.
inline std::optional<DataFact> retype(DataFact f, FactType t, const DataTable& table, Rng& rng) {
    const int k = rule_for(t).measures;
    if (static_cast<int>(f.measures.size()) < k) return std::nullopt;
    f.measures.resize(static_cast<std::size_t>(k));
    const bool changed = f.type != t;
    f.type = t;
    if (changed) return complete_focus(std::move(f), table, rng);
    return refocus(std::move(f), table, rng);
}

inline std::vector<DataFact> similarity_candidates(const DataFact& f, const DataTable& table, Rng& rng) {
    std::vector<DataFact> skeletons;
    const auto numeric = table.fields_of(FieldKind::numerical);
    for (std::size_t i = 0; i < f.measures.size(); ++i) {
        for (const auto& field : numeric)
            for (Aggregate a : kAggregates) {
                Measure m{field, a};
                if (m == f.measures[i]) continue;
                if (f.measures.size() == 2 && f.measures[1 - i].field == field) continue;
                if (f.measures.size() == 2 && a == Aggregate::count) continue;
                DataFact s = f;
                s.measures[i] = m;
                skeletons.push_back(std::move(s));
            }
    }
    if (!f.breakdown.empty()) {
        for (const auto& d : table.dimension_fields()) {
            if (d == f.breakdown.front() || f.subspace.find(d)) continue;
            DataFact s = f;
            s.breakdown = {d};
            s.focus.clear();
            skeletons.push_back(std::move(s));
        }
    }

    std::vector<DataFact> out;
    for (auto& s : skeletons) {
        const auto types = compatible_types(s, table);
        if (types.empty()) continue;
        const FactType t = types[uniform_index(rng, types.size())];
        if (auto c = retype(std::move(s), t, table, rng)) out.push_back(std::move(*c));
    }

    if (!f.focus.empty() && f.type != FactType::rank) {
        const auto& values = table.field(f.breakdown.front()).distinct_values;
        for (std::size_t i = 0; i < f.focus.size(); ++i)
            for (const auto& v : values) {
                bool used = false;
                for (const auto& x : f.focus) used = used || x.value == v;
                if (used) continue;
                DataFact s = f;
                s.focus[i].value = v;
                out.push_back(std::move(s));
            }
    }
    return out;
}

inline std::vector<DataFact> temporal_candidates(const DataFact& f, const DataTable& table, Rng& rng) {
    std::vector<DataFact> out;
    bool has_temporal_filter = false;
    for (std::size_t i = 0; i < f.subspace.filters.size(); ++i) {
        const auto& flt = f.subspace.filters[i];
        if (!is_temporal(table, flt.field)) continue;
        has_temporal_filter = true;
        const auto next = successor(table, flt.field, flt.value);
        if (!next) continue;
        DataFact s = f;
        s.subspace.filters[i].value = *next;
        if (auto c = refocus(std::move(s), table, rng)) out.push_back(std::move(*c));
    }
    if (has_temporal_filter) return out;

    if (!f.focus.empty() && !f.breakdown.empty() && is_temporal(table, f.breakdown.front())) {
        DataFact s = f;
        bool ok = true;
        for (auto& x : s.focus) {
            const auto next = successor(table, x.field, x.value);
            if (!next) {
                ok = false;
                break;
            }
            x.value = *next;
        }
        if (ok) out.push_back(std::move(s));
    }
    for (const auto& d : free_dimensions(f, table)) {
        if (!is_temporal(table, d)) continue;
        const auto& values = table.field(d).distinct_values;
        if (values.empty()) continue;
        DataFact s = f;
        s.subspace.filters.push_back({d, values.front()});
        if (auto c = refocus(std::move(s), table, rng)) out.push_back(std::move(*c));
    }
    return out;
}

inline std::vector<DataFact> contrast_candidates(const DataFact& f, const DataTable& table) {
    std::vector<DataFact> out;
    if (f.type != FactType::trend && f.type != FactType::association) return out;
    const int sign = derived_sign(f, table);
    if (sign == 0) return out;
    auto consider = [&](DataFact s) {
        if (!is_usable(s, table)) {
            if (s.focus.empty()) return;
            s.focus.clear();
            if (!is_usable(s, table)) return;
        }
        if (derived_sign(s, table) == -sign) out.push_back(std::move(s));
    };
    for (std::size_t i = 0; i < f.subspace.filters.size(); ++i) {
        const auto& flt = f.subspace.filters[i];
        for (const auto& v : table.field(flt.field).distinct_values) {
            if (v == flt.value) continue;
            DataFact s = f;
            s.subspace.filters[i].value = v;
            consider(std::move(s));
        }
    }
    for (const auto& d : free_dimensions(f, table))
        for (const auto& v : table.field(d).distinct_values) {
            DataFact s = f;
            s.subspace.filters.push_back({d, v});
            consider(std::move(s));
        }
    return out;
}

inline std::vector<DataFact> cause_effect_candidates(const DataFact& f, const DataTable& table, Rng& rng) {
    std::vector<DataFact> out;
    for (std::size_t i = 0; i < f.measures.size(); ++i) {
        const auto next = causal_successor(f.measures[i].field, table);
        if (!next) continue;
        if (f.measures.size() == 2 && f.measures[1 - i].field == *next) continue;
        DataFact s = f;
        s.measures[i].field = *next;
        if (auto c = refocus(std::move(s), table, rng)) out.push_back(std::move(*c));
    }
    return out;
}

inline std::vector<DataFact> elaboration_candidates(const DataFact& f, const DataTable& table, Rng& rng) {
    std::vector<DataFact> out;
    for (const auto& d : free_dimensions(f, table))
        for (const auto& v : table.field(d).distinct_values) {
            DataFact s = f;
            s.subspace.filters.push_back({d, v});
            if (auto c = refocus(std::move(s), table, rng)) out.push_back(std::move(*c));
        }
    if (focus_optional(f.type) && f.focus.empty()) {
        for (const auto& g : valued_groups(f, table)) {
            DataFact s = f;
            s.focus = {{f.breakdown.front(), g.key}};
            out.push_back(std::move(s));
        }
    }
    if (f.type == FactType::trend || f.type == FactType::distribution) {
        const auto groups = by_value_desc(valued_groups(f, table));
        if (!groups.empty()) {
            for (const auto* g : {&groups.front(), &groups.back()}) {
                DataFact s = f;
                s.type = FactType::extreme;
                s.focus = {{f.breakdown.front(), g->key}};
                out.push_back(std::move(s));
            }
        }
    }
    return out;
}

inline std::vector<DataFact> generalization_candidates(const DataFact& f, const DataTable& table, Rng& rng) {
    std::vector<DataFact> out;
    for (std::size_t i = 0; i < f.subspace.filters.size(); ++i) {
        DataFact s = f;
        s.subspace.filters.erase(s.subspace.filters.begin() + static_cast<std::ptrdiff_t>(i));
        if (auto c = refocus(std::move(s), table, rng)) out.push_back(std::move(*c));
    }
    if (focus_optional(f.type) && !f.focus.empty()) {
        DataFact s = f;
        s.focus.clear();
        out.push_back(std::move(s));
    }
    if (focus_required(f.type) && f.breakdown.size() == 1) {
        DataFact s = f;
        s.type = is_temporal(table, f.breakdown.front()) ? FactType::trend : FactType::distribution;
        s.focus.clear();
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace detail

/// Up to `budget` distinct usable facts related to `fact` by `r`.
inline std::vector<DataFact> expand(const DataFact& fact, Relation r, const DataTable& table, Rng& rng,
                                    std::size_t budget) {
    std::vector<DataFact> candidates;
    switch (r) {
        case Relation::similarity: candidates = detail::similarity_candidates(fact, table, rng); break;
        case Relation::temporal: candidates = detail::temporal_candidates(fact, table, rng); break;
        case Relation::contrast: candidates = detail::contrast_candidates(fact, table); break;
        case Relation::cause_effect: candidates = detail::cause_effect_candidates(fact, table, rng); break;
        case Relation::elaboration: candidates = detail::elaboration_candidates(fact, table, rng); break;
        case Relation::generalization: candidates = detail::generalization_candidates(fact, table, rng); break;
        case Relation::unlinked: break;
    }
    std::vector<DataFact> out;
    std::set<std::string> seen{fact_key(fact)};
    for (auto& c : candidates) {
        if (!seen.insert(fact_key(c)).second) continue;
        if (!is_usable(c, table)) continue;
        out.push_back(std::move(c));
    }
    shuffle_in_place(out, rng);
    if (out.size() > budget) out.resize(budget);
    return out;
}

// ---------------------------------------------------------------------------
// Post-hoc checking
// ---------------------------------------------------------------------------

/// Whether `to` is a legal `r`-expansion of `from`.
inline bool check_relation(const DataFact& from, const DataFact& to, Relation r, const DataTable& table) {
    if (r == Relation::unlinked) return true;
    if (from == to || !is_usable(to, table)) return false;
    switch (r) {
        case Relation::similarity: {
            if (!(from.subspace == to.subspace)) return false;
            if (to.measures.size() > from.measures.size()) return false;
            // A retyped fact may keep only a prefix of the source measures.
            const bool measures_changed =
                !to.measures.empty() &&
                !std::equal(to.measures.begin(), to.measures.end(), from.measures.begin());
            return !(measures_changed && from.breakdown != to.breakdown);
        }
        case Relation::temporal: {
            if (from.type != to.type || !detail::same_fields(from, to)) return false;
            if (auto rep = detail::replaced_filter(from.subspace, to.subspace))
                return detail::successor(table, rep->first.field, rep->first.value) == rep->second.value;
            bool from_has_temporal = false;
            for (const auto& f : from.subspace.filters) from_has_temporal = from_has_temporal || detail::is_temporal(table, f.field);
            if (from_has_temporal) return false;
            if (from.subspace == to.subspace) {
                if (from.focus.empty() || from.focus.size() != to.focus.size()) return false;
                for (std::size_t i = 0; i < from.focus.size(); ++i)
                    if (detail::successor(table, from.focus[i].field, from.focus[i].value) != to.focus[i].value ||
                        from.focus[i].field != to.focus[i].field)
                        return false;
                return true;
            }
            if (auto extra = detail::added_filter(from.subspace, to.subspace)) {
                if (!detail::is_temporal(table, extra->field)) return false;
                const auto& values = table.field(extra->field).distinct_values;
                return !values.empty() && values.front() == extra->value;
            }
            return false;
        }
        case Relation::contrast: {
            if (from.type != to.type || (from.type != FactType::trend && from.type != FactType::association)) return false;
            if (!detail::same_fields(from, to)) return false;
            if (!detail::replaced_filter(from.subspace, to.subspace) && !detail::added_filter(from.subspace, to.subspace))
                return false;
            const int a = detail::derived_sign(from, table), b = detail::derived_sign(to, table);
            return a != 0 && a == -b;
        }
        case Relation::cause_effect: {
            if (from.type != to.type || from.breakdown != to.breakdown || !(from.subspace == to.subspace)) return false;
            if (from.measures.size() != to.measures.size()) return false;
            int changed = 0;
            for (std::size_t i = 0; i < from.measures.size(); ++i) {
                if (from.measures[i] == to.measures[i]) continue;
                if (from.measures[i].agg != to.measures[i].agg) return false;
                if (causal_successor(from.measures[i].field, table) != to.measures[i].field) return false;
                ++changed;
            }
            return changed == 1;
        }
        case Relation::elaboration: {
            if (!detail::same_fields(from, to)) return false;
            if (detail::added_filter(from.subspace, to.subspace)) return from.type == to.type;
            if (!(from.subspace == to.subspace)) return false;
            if (from.type == to.type) return from.focus.empty() && !to.focus.empty();
            return (from.type == FactType::trend || from.type == FactType::distribution) &&
                   to.type == FactType::extreme;
        }
        case Relation::generalization: {
            if (!detail::same_fields(from, to)) return false;
            if (detail::added_filter(to.subspace, from.subspace)) return from.type == to.type;
            if (!(from.subspace == to.subspace) || !to.focus.empty()) return false;
            if (from.type == to.type) return !from.focus.empty();
            return detail::focus_required(from.type) &&
                   (to.type == FactType::trend || to.type == FactType::distribution);
        }
        case Relation::unlinked: return true;
    }
    return false;
}

/// The most likely relation under which `to` follows `from`, or unlinked.
inline Relation infer_relation(const DataFact& from, const DataFact& to, const DataTable& table,
                               const RelationTable& priors = RelationTable::builtin()) {
    std::vector<Relation> order(kRelations.begin(), kRelations.end());
    std::stable_sort(order.begin(), order.end(), [&](Relation a, Relation b) {
        return priors.likelihood(from.type, a) > priors.likelihood(from.type, b);
    });
    for (Relation r : order)
        if (priors.likelihood(from.type, r) > 0 && check_relation(from, to, r, table)) return r;
    return Relation::unlinked;
}

}  // namespace factweaver
