#pragma once

// Construction of concrete facts: focus completion for a fact skeleton,
// seeded random facts, and exhaustive enumeration.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "factweaver/fact.hpp"
#include "factweaver/scoring.hpp"
#include "factweaver/table.hpp"
#include "factweaver/util.hpp"

namespace factweaver {

/// Valid, non-empty scope and a computable derived value.
inline bool is_usable(const DataFact& fact, const DataTable& table) {
    if (!validate(fact, table).empty()) return false;
    try {
        if (select_subspace(table, fact.subspace).empty()) return false;
        derive_value(fact, table);
    } catch (const Error&) {
        return false;
    }
    return true;
}

namespace detail {

inline std::vector<GroupValue> valued_groups(const DataFact& fact, const DataTable& table) {
    std::vector<GroupValue> out;
    for (auto& g : fact_groups(fact, table))
        if (!std::isnan(g.value)) out.push_back(std::move(g));
    return out;
}

inline std::vector<GroupValue> by_value_desc(std::vector<GroupValue> groups) {
    std::stable_sort(groups.begin(), groups.end(), [](const GroupValue& a, const GroupValue& b) {
        if (a.value != b.value) return a.value > b.value;
        return a.key < b.key;
    });
    return groups;
}

inline Filter focus_on(const DataFact& f, const std::string& key) { return {f.breakdown.front(), key}; }

}  // namespace detail

/// Chooses the focus a fact of this type needs, given its subspace,
/// breakdown and measures. Returns nullopt when the data cannot support it.
inline std::optional<DataFact> complete_focus(DataFact f, const DataTable& table, Rng& rng) {
    f.focus.clear();
    try {
        switch (f.type) {
            case FactType::value:
            case FactType::trend:
            case FactType::categorization:
            case FactType::distribution:
            case FactType::association: break;
            case FactType::difference: {
                auto groups = detail::valued_groups(f, table);
                if (groups.size() < 2) return std::nullopt;
                const std::size_t i = uniform_index(rng, groups.size());
                std::size_t j = uniform_index(rng, groups.size() - 1);
                if (j >= i) ++j;
                const GroupValue* a = &groups[i];
                const GroupValue* b = &groups[j];
                if (b->value > a->value || (b->value == a->value && b->key < a->key)) std::swap(a, b);
                f.focus = {detail::focus_on(f, a->key), detail::focus_on(f, b->key)};
                break;
            }
            case FactType::proportion: {
                auto groups = detail::valued_groups(f, table);
                if (groups.empty()) return std::nullopt;
                f.focus = {detail::focus_on(f, groups[uniform_index(rng, groups.size())].key)};
                break;
            }
            case FactType::rank: {
                auto groups = detail::by_value_desc(detail::valued_groups(f, table));
                if (groups.size() < 3) return std::nullopt;
                for (std::size_t i = 0; i < 3; ++i) f.focus.push_back(detail::focus_on(f, groups[i].key));
                break;
            }
            case FactType::extreme: {
                auto groups = detail::by_value_desc(detail::valued_groups(f, table));
                if (groups.empty()) return std::nullopt;
                const bool take_max = uniform_index(rng, 2) == 0;
                f.focus = {detail::focus_on(f, take_max ? groups.front().key : groups.back().key)};
                break;
            }
            case FactType::outlier: {
                auto groups = detail::valued_groups(f, table);
                if (groups.size() < 3) return std::nullopt;
                double mean = 0;
                for (const auto& g : groups) mean += g.value;
                mean /= static_cast<double>(groups.size());
                std::size_t best = 0;
                for (std::size_t i = 1; i < groups.size(); ++i)
                    if (std::fabs(groups[i].value - mean) > std::fabs(groups[best].value - mean)) best = i;
                f.focus = {detail::focus_on(f, groups[best].key)};
                break;
            }
        }
    } catch (const Error&) {
        return std::nullopt;
    }
    if (!is_usable(f, table)) return std::nullopt;
    return f;
}

/// Keeps the current focus when it still works, otherwise picks a new one.
inline std::optional<DataFact> refocus(DataFact f, const DataTable& table, Rng& rng) {
    if (is_usable(f, table)) return f;
    return complete_focus(std::move(f), table, rng);
}

namespace detail {

inline bool breakdown_fits(FactType t, FieldKind k) {
    switch (rule_for(t).breakdown) {
        case BreakdownRule::none: return false;
        case BreakdownRule::dimension: return k != FieldKind::numerical;
        case BreakdownRule::temporal: return k == FieldKind::temporal;
        case BreakdownRule::categorical: return k == FieldKind::categorical;
    }
    return false;
}

inline std::vector<std::string> breakdown_options(FactType t, const DataTable& table, const Subspace& s) {
    std::vector<std::string> out;
    for (const auto& f : table.schema())
        if (breakdown_fits(t, f.kind) && !s.find(f.name)) out.push_back(f.name);
    return out;
}

inline Measure random_measure(const DataTable& table, Rng& rng) {
    const auto numeric = table.fields_of(FieldKind::numerical);
    if (numeric.empty()) return {"", Aggregate::count};
    return {numeric[uniform_index(rng, numeric.size())], kAggregates[uniform_index(rng, kAggregates.size())]};
}

}  // namespace detail

inline bool type_constructible(FactType type, const DataTable& table);

/// A random fact of the given type, or nullopt when this draw is not usable.
inline std::optional<DataFact> random_fact(const DataTable& table, FactType type, Rng& rng) {
    if (!type_constructible(type, table)) return std::nullopt;
    DataFact f;
    f.type = type;
    auto dims = table.dimension_fields();
    shuffle_in_place(dims, rng);

    if (detail::rule_for(type).breakdown != detail::BreakdownRule::none) {
        auto options = detail::breakdown_options(type, table, {});
        if (options.empty()) return std::nullopt;
        f.breakdown = {options[uniform_index(rng, options.size())]};
    }
    const std::size_t filters = uniform_index(rng, 3);
    for (const auto& d : dims) {
        if (f.subspace.size() >= filters) break;
        if (!f.breakdown.empty() && d == f.breakdown.front()) continue;
        const auto& values = table.field(d).distinct_values;
        if (values.empty()) continue;
        f.subspace.filters.push_back({d, values[uniform_index(rng, values.size())]});
    }

    const int nm = detail::rule_for(type).measures;
    if (nm == 1) {
        f.measures = {detail::random_measure(table, rng)};
    } else if (nm == 2) {
        const auto numeric = table.fields_of(FieldKind::numerical);
        if (numeric.size() < 2) return std::nullopt;
        const std::size_t i = uniform_index(rng, numeric.size());
        std::size_t j = uniform_index(rng, numeric.size() - 1);
        if (j >= i) ++j;
        const Aggregate agg = kAggregates[1 + uniform_index(rng, kAggregates.size() - 1)];
        f.measures = {{numeric[std::min(i, j)], agg}, {numeric[std::max(i, j)], agg}};
    }
    return complete_focus(std::move(f), table, rng);
}

/// Random generation needs a numerical field for every measure slot.
inline bool type_constructible(FactType type, const DataTable& table) {
    const auto rule = detail::rule_for(type);
    if (static_cast<std::size_t>(rule.measures) > table.count_of(FieldKind::numerical)) return false;
    if (rule.breakdown == detail::BreakdownRule::none) return true;
    return !detail::breakdown_options(type, table, {}).empty();
}

/// Every fact of `type` with at most `max_filters` subspace filters, using
/// canonical focus choices: ordered pairs (larger first) for difference,
/// each group for proportion, top three for rank, maximum and minimum for
/// extreme, the most deviating group for outlier and no focus otherwise.
inline std::vector<DataFact> enumerate_facts(const DataTable& table, FactType type, std::size_t max_filters = 1) {
    std::vector<Subspace> subspaces{{}};
    const auto dims = table.dimension_fields();
    for (std::size_t level = 0; level < std::min<std::size_t>(max_filters, 2); ++level) {
        std::vector<Subspace> next;
        for (const auto& s : subspaces) {
            if (s.size() != level) continue;
            for (std::size_t d = 0; d < dims.size(); ++d) {
                if (s.find(dims[d])) continue;
                if (!s.empty() && table.field_index(dims[d]) <= table.field_index(s.filters.back().field)) continue;
                for (const auto& v : table.field(dims[d]).distinct_values) {
                    Subspace t = s;
                    t.filters.push_back({dims[d], v});
                    next.push_back(std::move(t));
                }
            }
        }
        subspaces.insert(subspaces.end(), next.begin(), next.end());
    }

    std::vector<std::vector<Measure>> measure_sets;
    const auto numeric = table.fields_of(FieldKind::numerical);
    const int nm = detail::rule_for(type).measures;
    if (nm == 0) {
        measure_sets.push_back({});
    } else if (nm == 1) {
        if (numeric.empty()) measure_sets.push_back({{"", Aggregate::count}});
        for (const auto& m : numeric)
            for (Aggregate a : kAggregates) measure_sets.push_back({{m, a}});
    } else {
        for (std::size_t i = 0; i < numeric.size(); ++i)
            for (std::size_t j = i + 1; j < numeric.size(); ++j)
                for (Aggregate a : kAggregates)
                    if (a != Aggregate::count) measure_sets.push_back({{numeric[i], a}, {numeric[j], a}});
    }

    std::vector<DataFact> out;
    for (const auto& s : subspaces) {
        if (select_subspace(table, s).empty()) continue;
        std::vector<std::vector<std::string>> breakdowns;
        if (detail::rule_for(type).breakdown == detail::BreakdownRule::none)
            breakdowns.push_back({});
        else
            for (const auto& b : detail::breakdown_options(type, table, s)) breakdowns.push_back({b});
        for (const auto& b : breakdowns)
            for (const auto& ms : measure_sets) {
                DataFact f;
                f.type = type;
                f.subspace = s;
                f.breakdown = b;
                f.measures = ms;
                std::vector<std::vector<Filter>> foci;
                switch (type) {
                    case FactType::difference: {
                        const auto groups = detail::by_value_desc(detail::valued_groups(f, table));
                        for (std::size_t i = 0; i < groups.size(); ++i)
                            for (std::size_t j = i + 1; j < groups.size(); ++j)
                                foci.push_back({detail::focus_on(f, groups[i].key), detail::focus_on(f, groups[j].key)});
                        break;
                    }
                    case FactType::proportion:
                        for (const auto& g : detail::by_value_desc(detail::valued_groups(f, table)))
                            foci.push_back({detail::focus_on(f, g.key)});
                        break;
                    case FactType::extreme: {
                        const auto groups = detail::by_value_desc(detail::valued_groups(f, table));
                        if (groups.empty()) break;
                        foci.push_back({detail::focus_on(f, groups.front().key)});
                        if (groups.size() > 1) foci.push_back({detail::focus_on(f, groups.back().key)});
                        break;
                    }
                    case FactType::rank:
                    case FactType::outlier: {
                        Rng unused(0);
                        if (auto c = complete_focus(f, table, unused)) foci.push_back(c->focus);
                        break;
                    }
                    default: foci.push_back({});
                }
                for (auto& x : foci) {
                    f.focus = std::move(x);
                    if (is_usable(f, table)) out.push_back(f);
                }
            }
    }
    return out;
}

struct ScoredFact {
    DataFact fact;
    FactScore score;
};

/// Facts of `type` ranked by importance (descending, enumeration order on ties).
inline std::vector<ScoredFact> top_facts(const DataTable& table, FactType type, std::size_t k,
                                         const ScoringConfig& config = {}, std::size_t max_filters = 1) {
    std::vector<ScoredFact> all;
    for (auto& f : enumerate_facts(table, type, max_filters)) {
        auto s = importance(f, table, config);
        all.push_back({std::move(f), s});
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const ScoredFact& a, const ScoredFact& b) { return a.score.importance > b.score.importance; });
    if (all.size() > k) all.resize(k);
    return all;
}

}  // namespace factweaver
