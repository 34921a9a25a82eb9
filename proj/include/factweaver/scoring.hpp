#pragma once

// Fact importance: occurrence probability, self-information and the per-type
// pattern significance procedures.

#include <algorithm>
#include <cmath>
#include <vector>

#include "factweaver/fact.hpp"
#include "factweaver/stats.hpp"
#include "factweaver/table.hpp"

namespace factweaver {

struct ScoringConfig {
    /// Scale of the logistic model for normalized trend slopes.
    double trend_logistic_scale = 0.5;
};

struct FactScore {
    double significance = 0.0;
    double self_information_bits = 0.0;
    double probability = 0.0;
    double importance = 0.0;
    bool zero_support = false;
};

inline json to_json(const FactScore& s) {
    return {{"significance", s.significance},
            {"self_information_bits", s.self_information_bits},
            {"probability", s.probability},
            {"importance", s.importance},
            {"zero_support", s.zero_support}};
}

// ---------------------------------------------------------------------------
// Occurrence probability
// ---------------------------------------------------------------------------

/// Fraction of all rows matching field = value.
inline double filter_probability(const Filter& f, const DataTable& table) {
    return static_cast<double>(select_subspace(table, Subspace{{f}}).size()) / static_cast<double>(table.row_count());
}

/// P(s): product of filter probabilities over the 2^m subspace field
/// combinations, m = number of categorical + temporal fields.
inline double subspace_probability(const Subspace& s, const DataTable& table) {
    const auto m = static_cast<double>(table.count_of(FieldKind::categorical) + table.count_of(FieldKind::temporal));
    double p = std::pow(2.0, -m);
    for (const auto& f : s.filters) p *= filter_probability(f, table);
    return p;
}

inline double focus_probability(const DataFact& fact, const DataTable& table) {
    if (fact.focus.empty()) return 1.0;
    const RowSet scope = select_subspace(table, fact.subspace);
    if (scope.empty()) throw DegenerateInput("focus over an empty subspace");
    return static_cast<double>(focus_rows(fact, table).size()) / static_cast<double>(scope.size());
}

struct FieldProbability {
    double measure = 1.0;
    double breakdown = 1.0;
};

inline FieldProbability field_probability(const DataFact& fact, const DataTable& table) {
    const auto n = static_cast<double>(table.count_of(FieldKind::numerical));
    const auto c = static_cast<double>(table.count_of(FieldKind::categorical));
    const auto t = static_cast<double>(table.count_of(FieldKind::temporal));
    FieldProbability p;
    if (fact.measures.size() == 2) {
        if (n < 2) throw SchemaError("association needs two numerical fields");
        p.measure = 2.0 / (n * (n - 1.0));
    } else if (fact.measures.size() == 1) {
        if (n >= 1)
            p.measure = 1.0 / n;
        else if (fact.measures.front().agg != Aggregate::count)
            throw SchemaError("no numerical field available for the measure");
    }
    switch (fact.type) {
        case FactType::value: break;
        case FactType::trend:
            if (t < 1) throw SchemaError("trend needs a temporal field");
            p.breakdown = 1.0 / t;
            break;
        case FactType::categorization:
        case FactType::distribution:
            if (c < 1) throw SchemaError(std::string(to_string(fact.type)) + " needs a categorical field");
            p.breakdown = 1.0 / c;
            break;
        default:
            if (c + t < 1) throw SchemaError("breakdown needs a categorical or temporal field");
            p.breakdown = 1.0 / (c + t);
    }
    return p;
}

/// P(f) = P(m|t) P(b|t) P(s) P(x|s).
inline double fact_probability(const DataFact& fact, const DataTable& table) {
    const auto fp = field_probability(fact, table);
    const double ps = subspace_probability(fact.subspace, table);
    if (ps == 0.0 || select_subspace(table, fact.subspace).empty()) return 0.0;
    return fp.measure * fp.breakdown * ps * focus_probability(fact, table);
}

// ---------------------------------------------------------------------------
// Significance
// ---------------------------------------------------------------------------

namespace detail {

/// Non-negative values, largest first. For minima the series is mirrored so
/// the smallest value leads.
inline std::vector<double> power_law_series(std::vector<double> v, bool mirror) {
    if (mirror) {
        const double hi = *std::max_element(v.begin(), v.end());
        for (double& x : v) x = hi - x;
    } else {
        const double lo = *std::min_element(v.begin(), v.end());
        if (lo < 0)
            for (double& x : v) x -= lo;
    }
    std::sort(v.begin(), v.end(), std::greater<>());
    return v;
}

}  // namespace detail

/// Per-type pattern significance in [0, 1]. Data-dependent failures
/// (too few groups, zero variance, ...) propagate as exceptions.
inline double significance(const DataFact& fact, const DataTable& table, const ScoringConfig& config = {}) {
    switch (fact.type) {
        case FactType::value: return std::clamp(fact_probability(fact, table), 0.0, 1.0);
        case FactType::difference: {
            const double diff = *derive_value(fact, table).number;
            const auto values = detail::group_values(fact_groups(fact, table));
            const double range = *std::max_element(values.begin(), values.end()) -
                                 *std::min_element(values.begin(), values.end());
            if (range <= 0) return 0.0;
            return std::clamp(std::fabs(diff) / range, 0.0, 1.0);
        }
        case FactType::proportion: {
            const double share = *derive_value(fact, table).number;
            return share >= 0.5 ? 1.0 : share;
        }
        case FactType::trend: {
            auto y = detail::group_values(fact_groups(fact, table));
            if (y.size() < 3) throw InsufficientData("trend needs at least 3 time points");
            double scale = 0;
            for (double v : y) scale += std::fabs(v);
            scale /= static_cast<double>(y.size());
            if (scale > 0)
                for (double& v : y) v /= scale;
            const auto fit = stats::linear_regression(y);
            const double p = stats::sf(stats::Logistic{0.0, config.trend_logistic_scale}, std::fabs(fit.slope));
            return std::clamp(fit.r_squared * (1.0 - p), 0.0, 1.0);
        }
        case FactType::categorization: {
            const auto counts = detail::group_values(fact_groups(fact, table));
            return 1.0 - stats::chi_square_uniform(counts).p_value;
        }
        case FactType::distribution: {
            const auto values = detail::group_values(fact_groups(fact, table));
            return 1.0 - stats::shapiro_wilk(values).p_value;
        }
        case FactType::rank: {
            const auto values = detail::group_values(fact_groups(fact, table));
            if (values.size() < 4) throw InsufficientData("rank needs at least 4 groups");
            return 1.0 - stats::power_law_residual_test(detail::power_law_series(values, false)).p_value;
        }
        case FactType::association: {
            const auto [x, y] = detail::paired_groups(fact, table);
            return 1.0 - stats::pearson_test(x, y).test.p_value;
        }
        case FactType::extreme: {
            const auto groups = fact_groups(fact, table);
            const auto values = detail::group_values(groups);
            if (values.size() < 4) throw InsufficientData("extreme needs at least 4 groups");
            const auto derived = derive_value(fact, table);
            const bool is_max = *derived.extreme == ExtremeKind::max;
            const double target = is_max ? *std::max_element(values.begin(), values.end())
                                         : *std::min_element(values.begin(), values.end());
            if (*derived.number != target) return 0.0;
            return 1.0 - stats::power_law_residual_test(detail::power_law_series(values, !is_max)).p_value;
        }
        case FactType::outlier: {
            const auto groups = fact_groups(fact, table);
            std::vector<double> values;
            std::vector<std::string> keys;
            for (const auto& g : groups) {
                if (std::isnan(g.value)) continue;
                values.push_back(g.value);
                keys.push_back(g.key);
            }
            const auto result = stats::grubbs_test(values);
            if (!result.outlier_index || keys[*result.outlier_index] != fact.focus.at(0).value) return 0.0;
            return 1.0 - result.test.p_value;
        }
    }
    return 0.0;
}

/// I_s(f) = S(f) * I(f). Significance failures score 0; zero-probability
/// facts are flagged and score 0.
inline FactScore importance(const DataFact& fact, const DataTable& table, const ScoringConfig& config = {}) {
    FactScore s;
    s.probability = fact_probability(fact, table);
    if (s.probability <= 0.0) {
        s.probability = 0.0;
        s.zero_support = true;
        return s;
    }
    s.self_information_bits = s.probability >= 1.0 ? 0.0 : -std::log2(s.probability);
    try {
        s.significance = significance(fact, table, config);
    } catch (const Error&) {
        s.significance = 0.0;
    }
    s.importance = s.significance * s.self_information_bits;
    return s;
}

}  // namespace factweaver
