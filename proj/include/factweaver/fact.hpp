#pragma once

// The ten-type data fact model: validation, derived values, similarity and
// the JSON record format.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "factweaver/errors.hpp"
#include "factweaver/stats.hpp"
#include "factweaver/table.hpp"

namespace factweaver {

using json = nlohmann::json;

enum class FactType { value, difference, proportion, trend, categorization, distribution, rank, association, extreme, outlier };

inline constexpr std::array<FactType, 10> kFactTypes{
    FactType::value,        FactType::difference, FactType::proportion, FactType::trend,   FactType::categorization,
    FactType::distribution, FactType::rank,       FactType::association, FactType::extreme, FactType::outlier};

inline std::string_view to_string(FactType t) {
    switch (t) {
        case FactType::value: return "value";
        case FactType::difference: return "difference";
        case FactType::proportion: return "proportion";
        case FactType::trend: return "trend";
        case FactType::categorization: return "categorization";
        case FactType::distribution: return "distribution";
        case FactType::rank: return "rank";
        case FactType::association: return "association";
        case FactType::extreme: return "extreme";
        case FactType::outlier: return "outlier";
    }
    return "?";
}

inline std::optional<FactType> parse_fact_type(std::string_view s) {
    for (FactType t : kFactTypes)
        if (to_string(t) == s) return t;
    return std::nullopt;
}

inline std::size_t index_of(FactType t) { return static_cast<std::size_t>(t); }

struct Measure {
    std::string field;
    Aggregate agg = Aggregate::sum;
    auto operator<=>(const Measure&) const = default;
};

struct DataFact {
    FactType type = FactType::value;
    Subspace subspace;
    std::vector<std::string> breakdown;
    std::vector<Measure> measures;
    std::vector<Filter> focus;

    friend bool operator==(const DataFact& a, const DataFact& b) {
        return a.type == b.type && a.subspace == b.subspace && a.breakdown == b.breakdown &&
               a.measures == b.measures && a.focus == b.focus;
    }
};

/// Canonical text identity of a fact. Subspace filter order is ignored.
inline std::string fact_key(const DataFact& f) {
    std::string out(to_string(f.type));
    auto filters = f.subspace.filters;
    std::sort(filters.begin(), filters.end());
    out += "|s:";
    for (const auto& x : filters) out += x.field + "=" + x.value + ";";
    out += "|b:";
    for (const auto& b : f.breakdown) out += b + ";";
    out += "|m:";
    for (const auto& m : f.measures) out += std::string(to_string(m.agg)) + "(" + m.field + ");";
    out += "|x:";
    for (const auto& x : f.focus) out += x.field + "=" + x.value + ";";
    return out;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace detail {

enum class BreakdownRule { none, dimension, temporal, categorical };

struct TypeRule {
    BreakdownRule breakdown;
    int measures;       // exact count
    int focus_min;
    int focus_max;      // -1 = unbounded
};

inline TypeRule rule_for(FactType t) {
    switch (t) {
        case FactType::value: return {BreakdownRule::none, 1, 0, 0};
        case FactType::difference: return {BreakdownRule::dimension, 1, 2, 2};
        case FactType::proportion: return {BreakdownRule::dimension, 1, 1, 1};
        case FactType::trend: return {BreakdownRule::temporal, 1, 0, -1};
        case FactType::categorization: return {BreakdownRule::categorical, 0, 0, -1};
        case FactType::distribution: return {BreakdownRule::categorical, 1, 0, -1};
        case FactType::rank: return {BreakdownRule::dimension, 1, 3, 3};
        case FactType::association: return {BreakdownRule::dimension, 2, 0, 0};
        case FactType::extreme: return {BreakdownRule::dimension, 1, 1, 1};
        case FactType::outlier: return {BreakdownRule::dimension, 1, 1, 1};
    }
    return {BreakdownRule::none, 0, 0, 0};
}

inline const FieldMeta* find_field(const std::vector<FieldMeta>& schema, std::string_view name) {
    for (const auto& f : schema)
        if (f.name == name) return &f;
    return nullptr;
}

inline bool has_value(const FieldMeta& meta, const std::string& value) {
    return std::find(meta.distinct_values.begin(), meta.distinct_values.end(), value) != meta.distinct_values.end();
}

}  // namespace detail

/// Returns every constraint the fact violates; empty means valid.
inline std::vector<std::string> validate(const DataFact& fact, const std::vector<FieldMeta>& schema) {
    std::vector<std::string> v;
    const auto rule = detail::rule_for(fact.type);
    const std::string tname(to_string(fact.type));

    if (fact.subspace.size() > 2) v.push_back("subspace has at most 2 filters");
    std::set<std::string> filter_fields;
    for (const auto& f : fact.subspace.filters) {
        const FieldMeta* meta = detail::find_field(schema, f.field);
        if (!meta)
            v.push_back("unknown subspace field: " + f.field);
        else if (meta->kind == FieldKind::numerical)
            v.push_back("subspace field must be categorical or temporal: " + f.field);
        else if (!detail::has_value(*meta, f.value))
            v.push_back("unknown value for " + f.field + ": " + f.value);
        if (!filter_fields.insert(f.field).second) v.push_back("duplicate subspace field: " + f.field);
    }

    if (rule.breakdown == detail::BreakdownRule::none) {
        if (!fact.breakdown.empty()) v.push_back("breakdown must be empty");
    } else if (fact.breakdown.size() != 1) {
        v.push_back(tname + " needs exactly one breakdown field");
    } else {
        const std::string& b = fact.breakdown.front();
        const FieldMeta* meta = detail::find_field(schema, b);
        if (!meta) {
            v.push_back("unknown breakdown field: " + b);
        } else if (meta->kind == FieldKind::numerical) {
            v.push_back("breakdown field must be categorical or temporal: " + b);
        } else if (rule.breakdown == detail::BreakdownRule::temporal && meta->kind != FieldKind::temporal) {
            v.push_back(tname + " breakdown must be temporal");
        } else if (rule.breakdown == detail::BreakdownRule::categorical && meta->kind != FieldKind::categorical) {
            v.push_back(tname + " breakdown must be categorical");
        }
        if (filter_fields.count(b)) v.push_back("breakdown field cannot also filter the subspace: " + b);
    }

    if (static_cast<int>(fact.measures.size()) != rule.measures) {
        if (rule.measures == 0)
            v.push_back("measures must be empty");
        else if (rule.measures == 2)
            v.push_back("association needs two distinct measures");
        else
            v.push_back(tname + " needs exactly one measure");
    }
    if (fact.measures.size() == 2 && fact.measures[0].field == fact.measures[1].field)
        v.push_back("association needs two distinct measures");
    for (const auto& m : fact.measures) {
        const FieldMeta* meta = detail::find_field(schema, m.field);
        if (m.agg == Aggregate::count) {
            if (!m.field.empty() && !meta) v.push_back("unknown measure field: " + m.field);
            continue;
        }
        if (!meta)
            v.push_back("unknown measure field: " + m.field);
        else if (meta->kind != FieldKind::numerical)
            v.push_back("measure field must be numerical unless aggregate is count: " + m.field);
    }

    const int nf = static_cast<int>(fact.focus.size());
    if (nf < rule.focus_min || (rule.focus_max >= 0 && nf > rule.focus_max)) {
        if (rule.focus_max == 0)
            v.push_back("focus must be empty");
        else if (rule.focus_min == rule.focus_max)
            v.push_back(tname + " needs exactly " + std::to_string(rule.focus_min) + " focus value(s)");
        else
            v.push_back(tname + " focus count out of range");
    }
    std::set<std::string> focus_values;
    for (const auto& x : fact.focus) {
        if (fact.breakdown.size() == 1 && x.field != fact.breakdown.front())
            v.push_back("focus must refer to the breakdown field: " + x.field);
        else if (const FieldMeta* meta = detail::find_field(schema, x.field); meta && !detail::has_value(*meta, x.value))
            v.push_back("unknown value for " + x.field + ": " + x.value);
        if (!focus_values.insert(x.value).second) v.push_back("duplicate focus value: " + x.value);
    }
    return v;
}

inline std::vector<std::string> validate(const DataFact& fact, const DataTable& table) {
    return validate(fact, table.schema());
}

inline bool is_valid(const DataFact& fact, const DataTable& table) { return validate(fact, table).empty(); }

// ---------------------------------------------------------------------------
// Derived values
// ---------------------------------------------------------------------------

enum class TrendDirection { increasing, decreasing, flat };
enum class ExtremeKind { max, min };

inline std::string_view to_string(TrendDirection d) {
    switch (d) {
        case TrendDirection::increasing: return "increasing";
        case TrendDirection::decreasing: return "decreasing";
        case TrendDirection::flat: return "flat";
    }
    return "?";
}

inline std::string_view to_string(ExtremeKind k) { return k == ExtremeKind::max ? "max" : "min"; }

/// Per-type summary. `number` holds the aggregate (value), signed difference,
/// fraction (proportion), slope (trend), category count (categorization),
/// Pearson r (association), extreme value, or outlier score. Rank and
/// distribution carry no number.
struct DerivedValue {
    FactType type = FactType::value;
    std::optional<double> number;
    std::optional<TrendDirection> direction;
    std::optional<ExtremeKind> extreme;
};

inline json to_json(const DerivedValue& d) {
    json j = json::object();
    j["type"] = std::string(to_string(d.type));
    if (d.number) j["number"] = *d.number;
    if (d.direction) j["direction"] = std::string(to_string(*d.direction));
    if (d.extreme) j["extreme"] = std::string(to_string(*d.extreme));
    return j;
}

/// Rows of the fact's subspace whose breakdown value is one of the focus values.
inline RowSet focus_rows(const DataFact& fact, const DataTable& table) {
    const RowSet scope = select_subspace(table, fact.subspace);
    if (fact.focus.empty()) return scope;
    RowSet out;
    std::vector<std::pair<std::size_t, int>> wanted;
    for (const auto& x : fact.focus) {
        const auto col = table.field_index(x.field);
        if (!col) throw FilterError("unknown focus field: " + x.field);
        const auto code = table.value_code(*col, x.value);
        if (code) wanted.emplace_back(*col, *code);
    }
    for (std::size_t r : scope)
        for (const auto& [col, code] : wanted)
            if (table.code(r, col) == code) {
                out.push_back(r);
                break;
            }
    return out;
}

/// The breakdown groups of the fact's first measure within its subspace.
inline std::vector<GroupValue> fact_groups(const DataFact& fact, const DataTable& table, std::size_t measure = 0) {
    const RowSet rows = select_subspace(table, fact.subspace);
    if (fact.measures.empty()) return group_and_aggregate(table, rows, fact.breakdown, "", Aggregate::count);
    const Measure& m = fact.measures.at(measure);
    return group_and_aggregate(table, rows, fact.breakdown, m.field, m.agg);
}

namespace detail {

inline const GroupValue* find_group(const std::vector<GroupValue>& groups, std::string_view key) {
    for (const auto& g : groups)
        if (g.key == key) return &g;
    return nullptr;
}

inline const GroupValue& require_group(const std::vector<GroupValue>& groups, std::string_view key) {
    const GroupValue* g = find_group(groups, key);
    if (!g || std::isnan(g->value)) throw EmptyScope("focus group has no data: " + std::string(key));
    return *g;
}

inline std::vector<double> group_values(const std::vector<GroupValue>& groups) {
    std::vector<double> out;
    for (const auto& g : groups)
        if (!std::isnan(g.value)) out.push_back(g.value);
    return out;
}

/// Pairs the per-group aggregates of both association measures.
inline std::pair<std::vector<double>, std::vector<double>> paired_groups(const DataFact& fact, const DataTable& table) {
    const auto a = fact_groups(fact, table, 0);
    const auto b = fact_groups(fact, table, 1);
    std::vector<double> x, y;
    for (const auto& g : a) {
        const GroupValue* h = find_group(b, g.key);
        if (!h || std::isnan(g.value) || std::isnan(h->value)) continue;
        x.push_back(g.value);
        y.push_back(h->value);
    }
    return {std::move(x), std::move(y)};
}

}  // namespace detail

/// Trend slope on the index axis rescaled to [0, 1]; chronological groups.
inline double trend_slope(const std::vector<double>& y) { return stats::linear_regression(y).slope; }

inline DerivedValue derive_value(const DataFact& fact, const DataTable& table) {
    DerivedValue d;
    d.type = fact.type;
    switch (fact.type) {
        case FactType::value: {
            const RowSet rows = select_subspace(table, fact.subspace);
            if (rows.empty()) throw EmptyScope("value fact over an empty subspace");
            const auto& m = fact.measures.at(0);
            const double v = aggregate_rows(table, rows, m.field, m.agg);
            if (std::isnan(v)) throw EmptyScope("value fact has no numeric data");
            d.number = v;
            break;
        }
        case FactType::difference: {
            const auto groups = fact_groups(fact, table);
            if (groups.empty()) throw EmptyScope("difference fact over an empty subspace");
            d.number = detail::require_group(groups, fact.focus.at(0).value).value -
                       detail::require_group(groups, fact.focus.at(1).value).value;
            break;
        }
        case FactType::proportion: {
            const auto groups = fact_groups(fact, table);
            if (groups.empty()) throw EmptyScope("proportion fact over an empty subspace");
            double total = 0;
            for (double v : detail::group_values(groups)) total += v;
            if (total == 0) throw DegenerateInput("proportion fact has a zero total");
            d.number = std::clamp(detail::require_group(groups, fact.focus.at(0).value).value / total, 0.0, 1.0);
            break;
        }
        case FactType::trend: {
            const auto y = detail::group_values(fact_groups(fact, table));
            if (y.size() < 3) throw InsufficientData("trend needs at least 3 time points");
            const double slope = trend_slope(y);
            d.number = slope;
            d.direction = slope > 0 ? TrendDirection::increasing
                                    : (slope < 0 ? TrendDirection::decreasing : TrendDirection::flat);
            break;
        }
        case FactType::categorization: {
            d.number = static_cast<double>(fact_groups(fact, table).size());
            break;
        }
        case FactType::distribution:
        case FactType::rank: break;
        case FactType::association: {
            const auto [x, y] = detail::paired_groups(fact, table);
            if (x.size() < 3) throw InsufficientData("association needs at least 3 groups");
            d.number = stats::pearson_test(x, y).r;
            break;
        }
        case FactType::extreme: {
            const auto groups = fact_groups(fact, table);
            if (groups.empty()) throw EmptyScope("extreme fact over an empty subspace");
            const auto values = detail::group_values(groups);
            const double v = detail::require_group(groups, fact.focus.at(0).value).value;
            const double hi = *std::max_element(values.begin(), values.end());
            const double lo = *std::min_element(values.begin(), values.end());
            d.number = v;
            d.extreme = (hi - v <= v - lo) ? ExtremeKind::max : ExtremeKind::min;
            break;
        }
        case FactType::outlier: {
            const auto groups = fact_groups(fact, table);
            const auto values = detail::group_values(groups);
            if (values.size() < 3) throw InsufficientData("outlier needs at least 3 groups");
            const double v = detail::require_group(groups, fact.focus.at(0).value).value;
            double mean = 0;
            for (double x : values) mean += x;
            mean /= static_cast<double>(values.size());
            double ss = 0;
            for (double x : values) ss += (x - mean) * (x - mean);
            const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
            if (sd == 0) throw DegenerateInput("outlier: zero variance");
            d.number = (v - mean) / sd;
            break;
        }
    }
    return d;
}

// ---------------------------------------------------------------------------
// Similarity
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
double set_iou(const std::set<T>& a, const std::set<T>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& x : a) inter += b.count(x);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

inline double rows_iou(const RowSet& a, const RowSet& b) {
    if (a.empty() && b.empty()) return 1.0;
    RowSet inter;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
    return static_cast<double>(inter.size()) / static_cast<double>(a.size() + b.size() - inter.size());
}

}  // namespace detail

/// Mean of five overlap components: type match, measure-field IoU,
/// breakdown IoU, subspace row-set IoU and focus row-set IoU.
inline double fact_similarity(const DataFact& a, const DataFact& b, const DataTable& table) {
    const double s_type = a.type == b.type ? 1.0 : 0.0;
    std::set<std::string> ma, mb;
    for (const auto& m : a.measures) ma.insert(m.field);
    for (const auto& m : b.measures) mb.insert(m.field);
    const double s_measure = detail::set_iou(ma, mb);
    const double s_breakdown = detail::set_iou(std::set<std::string>(a.breakdown.begin(), a.breakdown.end()),
                                               std::set<std::string>(b.breakdown.begin(), b.breakdown.end()));
    const double s_subspace =
        detail::rows_iou(select_subspace(table, a.subspace), select_subspace(table, b.subspace));
    double s_focus;
    if (a.focus.empty() && b.focus.empty())
        s_focus = 1.0;
    else if (a.focus.empty() || b.focus.empty())
        s_focus = 0.0;
    else
        s_focus = detail::rows_iou(focus_rows(a, table), focus_rows(b, table));
    return (s_type + s_measure + s_breakdown + s_subspace + s_focus) / 5.0;
}

// ---------------------------------------------------------------------------
// Record format
// ---------------------------------------------------------------------------

inline json to_fact_record(const DataFact& f) {
    json j;
    j["type"] = std::string(to_string(f.type));
    j["measure"] = json::array();
    for (const auto& m : f.measures) j["measure"].push_back({{"field", m.field}, {"aggregate", std::string(to_string(m.agg))}});
    j["subspace"] = json::array();
    for (const auto& x : f.subspace.filters) j["subspace"].push_back({{"field", x.field}, {"value", x.value}});
    j["breakdown"] = json::array();
    for (const auto& b : f.breakdown) j["breakdown"].push_back({{"field", b}});
    j["focus"] = json::array();
    for (const auto& x : f.focus) j["focus"].push_back({{"field", x.field}, {"value", x.value}});
    return j;
}

namespace detail {

inline std::string record_string(const json& j, const char* key, const char* context) {
    if (!j.is_object() || !j.contains(key) || !j[key].is_string())
        throw ParseError(std::string(context) + ": missing string \"" + key + "\"");
    return j[key].get<std::string>();
}

inline std::string record_value(const json& j, const char* context) {
    if (!j.is_object() || !j.contains("value")) throw ParseError(std::string(context) + ": missing \"value\"");
    const auto& v = j["value"];
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw ParseError(std::string(context) + ": \"value\" must be a string");
}

inline const json& record_list(const json& j, const char* key) {
    static const json empty = json::array();
    if (!j.contains(key) || j[key].is_null()) return empty;
    if (!j[key].is_array()) throw ParseError(std::string("\"") + key + "\" must be a list");
    return j[key];
}

}  // namespace detail

inline DataFact from_fact_record(const json& j) {
    if (!j.is_object()) throw ParseError("fact record must be an object");
    DataFact f;
    const std::string type = detail::record_string(j, "type", "fact");
    const auto t = parse_fact_type(type);
    if (!t) throw ParseError("unknown fact type: " + type);
    f.type = *t;
    for (const auto& m : detail::record_list(j, "measure")) {
        Measure measure;
        measure.field = detail::record_string(m, "field", "measure");
        const std::string agg = detail::record_string(m, "aggregate", "measure");
        const auto a = parse_aggregate(agg);
        if (!a) throw ParseError("unknown aggregate: " + agg);
        measure.agg = *a;
        f.measures.push_back(measure);
    }
    for (const auto& x : detail::record_list(j, "subspace"))
        f.subspace.filters.push_back({detail::record_string(x, "field", "subspace"), detail::record_value(x, "subspace")});
    const char* breakdown_key = j.contains("breakdown") ? "breakdown" : "group-by";
    for (const auto& b : detail::record_list(j, breakdown_key)) {
        if (b.is_string())
            f.breakdown.push_back(b.get<std::string>());
        else
            f.breakdown.push_back(detail::record_string(b, "field", "breakdown"));
    }
    for (const auto& x : detail::record_list(j, "focus"))
        f.focus.push_back({detail::record_string(x, "field", "focus"), detail::record_value(x, "focus")});
    return f;
}

/// Parses and validates against `schema`; violations raise ParseError.
inline DataFact from_fact_record(const json& j, const std::vector<FieldMeta>& schema) {
    DataFact f = from_fact_record(j);
    const auto violations = validate(f, schema);
    if (!violations.empty()) throw ValidationError(violations);
    return f;
}

}  // namespace factweaver
