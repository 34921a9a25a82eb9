#pragma once

// Template captions for facts and a one-paragraph story briefing.

#include <string>
#include <vector>

#include "factweaver/fact.hpp"
#include "factweaver/story.hpp"
#include "factweaver/table.hpp"
#include "factweaver/util.hpp"

namespace factweaver {

inline std::string aggregate_phrase(Aggregate a) {
    switch (a) {
        case Aggregate::count: return "total number of";
        case Aggregate::sum: return "total";
        case Aggregate::avg: return "average";
        case Aggregate::max: return "maximum";
        case Aggregate::min: return "minimum";
    }
    return "";
}

/// "<field> is <value>" joined with " and "; empty for the whole table.
inline std::string subspace_phrase(const Subspace& s) {
    std::vector<std::string> parts;
    for (const auto& f : s.filters) parts.push_back(f.field + " is " + f.value);
    return join(parts, " and ");
}

namespace detail {

inline std::string measure_phrase(const Measure& m) {
    return aggregate_phrase(m.agg) + " " + (m.field.empty() ? std::string("records") : m.field);
}

inline std::string when_clause(const Subspace& s) {
    const auto p = subspace_phrase(s);
    return p.empty() ? "" : " when " + p;
}

inline std::vector<std::string> focus_values(const DataFact& f) {
    std::vector<std::string> out;
    for (const auto& x : f.focus) out.push_back(x.value);
    return out;
}

/// "a", "a and b", "a, b, and c"
inline std::string list_phrase(const std::vector<std::string>& items) {
    if (items.size() <= 1) return items.empty() ? "" : items.front();
    if (items.size() == 2) return items[0] + " and " + items[1];
    std::vector<std::string> head(items.begin(), items.end() - 1);
    return join(head, ", ") + ", and " + items.back();
}

}  // namespace detail

/// Caption for one fact. Throws NarrationError when the derived value
/// cannot be computed.
inline std::string caption(const DataFact& f, const DataTable& table) {
    if (auto v = validate(f, table); !v.empty()) throw NarrationError("fact does not validate: " + v.front());
    DerivedValue d;
    try {
        d = derive_value(f, table);
    } catch (const Error& e) {
        throw NarrationError(std::string("no derived value: ") + e.what());
    }
    const std::string when = detail::when_clause(f.subspace);
    const std::string m = f.measures.empty() ? "" : detail::measure_phrase(f.measures.front());
    const std::string b = f.breakdown.empty() ? "" : f.breakdown.front();
    const auto x = detail::focus_values(f);
    auto need = [&](const std::optional<double>& n) {
        if (!n) throw NarrationError(std::string("missing derived value for ") + std::string(to_string(f.type)));
        return *n;
    };

    switch (f.type) {
        case FactType::value: return "The " + m + " is " + format_number(need(d.number)) + when + ".";
        case FactType::difference:
            return "The difference between " + x.at(0) + " and " + x.at(1) + " regarding to their " + m + " is " +
                   format_number(need(d.number)) + when + ".";
        case FactType::proportion:
            return "The " + x.at(0) + " accounts for " + format_percent(need(d.number)) + " of the " + m + when + ".";
        case FactType::trend: {
            if (!d.direction) throw NarrationError("missing trend direction");
            std::string s = "The " + std::string(to_string(*d.direction)) + " trend of " + m + " over " + b + "(s)" + when;
            if (!x.empty()) s += " and the values of " + detail::list_phrase(x) + " needs to pay attention";
            return s + ".";
        }
        case FactType::categorization: {
            std::vector<std::string> names;
            for (const auto& g : fact_groups(f, table)) names.push_back(g.key);
            const std::size_t n = names.size();
            if (n > 6) {
                names.resize(6);
                names.push_back(std::to_string(n - 6) + " more");
            }
            std::string s = "There are " + format_number(need(d.number)) + " " + b + "(s) which are " +
                            detail::list_phrase(names) + when;
            if (!x.empty()) s += ", among which " + detail::list_phrase(x) + " needs to pay attention";
            return s + ".";
        }
        case FactType::distribution: {
            std::string s = "The distribution of the " + m + " over " + b + "(s)" + when;
            if (!x.empty()) {
                std::vector<std::string> parts;
                for (const auto& v : x) parts.push_back(b + " is " + v);
                s += " and " + join(parts, " and ") + " needs to pay attention";
            }
            return s + ".";
        }
        case FactType::rank: {
            std::string s = "In the " + m + " ranking of different " + b + "(s), the top three " + b + "(s) are " +
                            join(x, ", ");
            if (!when.empty()) s += "," + when;
            return s + ".";
        }
        case FactType::association:
            return "The Pearson correlation between the " + detail::measure_phrase(f.measures.at(0)) + " and the " +
                   detail::measure_phrase(f.measures.at(1)) + " is " + format_number(need(d.number)) + when + ".";
        case FactType::extreme: {
            if (!d.extreme) throw NarrationError("missing extreme kind");
            const std::string kind = *d.extreme == ExtremeKind::max ? "maximum" : "minimum";
            std::string s = "The " + kind + " value of the " + m + " is " + format_number(need(d.number)) + " when " +
                            b + " is " + x.at(0);
            const auto sub = subspace_phrase(f.subspace);
            if (!sub.empty()) s += " and " + sub;
            return s + ".";
        }
        case FactType::outlier:
            return "The " + m + " of " + x.at(0) + " is an outlier when compare with that of other " + b + "(s)" +
                   when + ".";
    }
    throw NarrationError("unknown fact type");
}

/// Coverage, fact count and the captions in story order.
inline std::string story_summary(const Story& story, const DataTable& table,
                                 IntegrityMode mode = IntegrityMode::rows) {
    const double coverage = integrity(story.facts, table, mode);
    const std::size_t n = story.facts.size();
    std::string s = "This story has " + std::to_string(n) + (n == 1 ? " fact" : " facts") + " covering " +
                    format_percent(coverage) + " of the data.";
    for (const auto& f : story.facts) {
        std::string c;
        try {
            c = caption(f, table);
        } catch (const NarrationError&) {
            continue;
        }
        s += " " + c;
    }
    return s;
}

}  // namespace factweaver
