#pragma once

// Story composition: factsheet layout, fact aggregation into compounds and
// the three presentation documents (storyline, swiper, factsheet).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "factweaver/errors.hpp"
#include "factweaver/fact.hpp"
#include "factweaver/narrate.hpp"
#include "factweaver/story.hpp"
#include "factweaver/visualize.hpp"

namespace factweaver {

inline double fact_distance(const DataFact& a, const DataFact& b, const DataTable& table) {
    return 1.0 - fact_similarity(a, b, table);
}

using DistanceMatrix = std::vector<std::vector<double>>;

inline DistanceMatrix distance_matrix(const std::vector<DataFact>& facts, const DataTable& table) {
    DistanceMatrix d(facts.size(), std::vector<double>(facts.size(), 0.0));
    for (std::size_t i = 0; i < facts.size(); ++i)
        for (std::size_t j = i + 1; j < facts.size(); ++j) d[i][j] = d[j][i] = fact_distance(facts[i], facts[j], table);
    return d;
}

// ---------------------------------------------------------------------------
// Factsheet layout
// ---------------------------------------------------------------------------

struct FactsheetLayout {
    std::vector<std::vector<std::size_t>> rows;
    std::vector<double> areas;  // per fact, fractions of the page
    Size page;
};

struct LayoutScore {
    double f = 0.0;
    double f_s = 0.0;
    double f_d = 0.0;
    double inter = 0.0;
    double intra = 0.0;
};

/// Importances scaled to sum to one (uniform when all are zero).
inline std::vector<double> normalized_importance(const std::vector<double>& importance) {
    double total = 0;
    for (double v : importance) {
        if (!(v >= 0)) throw LayoutError("importance must be non-negative");
        total += v;
    }
    std::vector<double> s(importance.size(), importance.empty() ? 0.0 : 1.0 / static_cast<double>(importance.size()));
    if (total > 0)
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = importance[i] / total;
    return s;
}

inline void check_partition(const std::vector<std::vector<std::size_t>>& rows, std::size_t n) {
    std::size_t next = 0;
    for (const auto& row : rows) {
        if (row.empty()) throw LayoutError("layout rows must be non-empty");
        for (std::size_t i : row)
            if (i != next++) throw LayoutError("layout rows must partition the facts in story order");
    }
    if (next != n) throw LayoutError("layout must place every fact exactly once");
}

/// Equal row heights; widths within a row proportional to normalized
/// importance, floored at 1e-6 so every area stays positive.
inline std::vector<double> layout_areas(const std::vector<std::vector<std::size_t>>& rows, const std::vector<double>& s) {
    std::vector<double> a(s.size(), 0.0);
    const double k = static_cast<double>(rows.size());
    for (const auto& row : rows) {
        double total = 0;
        for (std::size_t i : row) total += std::max(s[i], 1e-6);
        for (std::size_t i : row) a[i] = std::max(s[i], 1e-6) / total / k;
    }
    return a;
}

/// f = f_s + f_d with f_d = inter - intra. `s` holds normalized importance.
inline LayoutScore layout_score(const std::vector<std::vector<std::size_t>>& rows, const std::vector<double>& areas,
                                const std::vector<double>& s, const DistanceMatrix& d) {
    const std::size_t n = s.size();
    check_partition(rows, n);
    if (areas.size() != n || d.size() != n) throw LayoutError("layout, scores and distances disagree in size");
    LayoutScore out;
    double area_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(areas[i] > 0)) throw LayoutError("every area must be positive");
        out.f_s += s[i] * areas[i];
        area_sum += areas[i];
    }
    out.f_s /= area_sum;
    const std::size_t k = rows.size();
    if (k > 1) {
        for (std::size_t j = 0; j + 1 < k; ++j) out.inter += d[rows[j].back()][rows[j + 1].front()];
        out.inter /= static_cast<double>(k - 1);
    }
    if (n > k) {
        for (const auto& row : rows)
            for (std::size_t i = 0; i + 1 < row.size(); ++i) out.intra += d[row[i]][row[i + 1]];
        out.intra /= static_cast<double>(n - k);
    }
    out.f_d = out.inter - out.intra;
    out.f = out.f_s + out.f_d;
    return out;
}

inline LayoutScore layout_score(const FactsheetLayout& layout, const std::vector<double>& importance,
                                const DistanceMatrix& d) {
    return layout_score(layout.rows, layout.areas, normalized_importance(importance), d);
}

/// Exhaustive search over order-preserving row partitions with at most
/// `max_rows` rows. Ties go to fewer rows, then the lexicographically
/// smaller sequence of row lengths.
inline FactsheetLayout layout_factsheet(const std::vector<double>& importance, const DistanceMatrix& d, Size page,
                                        std::size_t max_rows) {
    const std::size_t n = importance.size();
    if (n == 0) throw LayoutError("cannot lay out an empty story");
    if (n > 16) throw LayoutError("factsheets hold at most 16 facts");
    if (max_rows == 0) throw LayoutError("max_rows must be positive");
    max_rows = std::min(max_rows, n);
    const auto s = normalized_importance(importance);

    FactsheetLayout best;
    double best_f = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> best_lengths;
    for (std::uint32_t mask = 0; mask < (1u << (n - 1)); ++mask) {
        // bit i set: a row break after fact i
        std::vector<std::vector<std::size_t>> rows{{0}};
        for (std::size_t i = 1; i < n; ++i) {
            if (mask & (1u << (i - 1))) rows.emplace_back();
            rows.back().push_back(i);
        }
        if (rows.size() > max_rows) continue;
        std::vector<std::size_t> lengths;
        for (const auto& r : rows) lengths.push_back(r.size());
        const auto areas = layout_areas(rows, s);
        const double f = layout_score(rows, areas, s, d).f;
        bool take = f > best_f;
        if (f == best_f)
            take = rows.size() < best.rows.size() || (rows.size() == best.rows.size() && lengths < best_lengths);
        if (take) {
            best_f = f;
            best.rows = std::move(rows);
            best.areas = areas;
            best_lengths = std::move(lengths);
        }
    }
    best.page = page;
    return best;
}

inline FactsheetLayout layout_factsheet(const Story& story, const DataTable& table, Size page, std::size_t max_rows) {
    std::vector<double> imp;
    for (std::size_t i = 0; i < story.facts.size(); ++i)
        imp.push_back(i < story.scores.size() ? story.scores[i].importance : importance(story.facts[i], table).importance);
    return layout_factsheet(imp, distance_matrix(story.facts, table), page, max_rows);
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct CompoundFact {
    std::vector<DataFact> parts;
    std::optional<ChartType> merged_chart;
    bool juxtaposed = false;
    std::string caption;
};

namespace detail {

inline int chart_count(FactType t, ChartType c) {
    if (c == ChartType::donut || c == ChartType::half_donut) c = ChartType::pie;
    for (const auto& e : chart_frequencies(t))
        if (e.chart == c) return e.count;
    return 0;
}

inline bool tuples_agree(const DataFact& a, const DataFact& b) {
    return a.subspace == b.subspace && a.breakdown == b.breakdown && a.measures == b.measures;
}

}  // namespace detail

/// One chart for both facts when their non-focus fields agree and their
/// chart candidates overlap (most used overall wins), else side by side.
inline CompoundFact merge_facts(const DataFact& a, const DataFact& b, const DataTable& table) {
    CompoundFact c;
    c.parts = {a, b};
    c.caption = caption(a, table) + " " + caption(b, table);
    if (detail::tuples_agree(a, b)) {
        const auto ca = chart_candidates(a.type, 1.0), cb = chart_candidates(b.type, 1.0);
        int best = -1;
        for (ChartType x : ca) {
            if (std::find(cb.begin(), cb.end(), x) == cb.end()) continue;
            const int score = detail::chart_count(a.type, x) + detail::chart_count(b.type, x);
            if (score > best) {
                best = score;
                c.merged_chart = x;
            }
        }
    }
    c.juxtaposed = !c.merged_chart.has_value();
    return c;
}

/// Sibling leaf pairs of an average-linkage clustering on fact distance,
/// most similar first. Pairs hold story indices (smaller first).
inline std::vector<std::pair<std::size_t, std::size_t>> sibling_leaf_pairs(const DistanceMatrix& d) {
    struct Cluster {
        std::vector<std::size_t> members;
        bool alive = true;
    };
    std::vector<Cluster> clusters;
    for (std::size_t i = 0; i < d.size(); ++i) clusters.push_back({{i}, true});
    std::vector<std::pair<double, std::pair<std::size_t, std::size_t>>> pairs;
    for (std::size_t remaining = clusters.size(); remaining > 1; --remaining) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            if (!clusters[i].alive) continue;
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                if (!clusters[j].alive) continue;
                double sum = 0;
                for (std::size_t x : clusters[i].members)
                    for (std::size_t y : clusters[j].members) sum += d[x][y];
                const double avg = sum / static_cast<double>(clusters[i].members.size() * clusters[j].members.size());
                if (avg < best) {
                    best = avg;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (clusters[bi].members.size() == 1 && clusters[bj].members.size() == 1) {
            const auto x = clusters[bi].members[0], y = clusters[bj].members[0];
            pairs.push_back({best, {std::min(x, y), std::max(x, y)}});
        }
        Cluster merged;
        merged.members = clusters[bi].members;
        merged.members.insert(merged.members.end(), clusters[bj].members.begin(), clusters[bj].members.end());
        clusters[bi].alive = clusters[bj].alive = false;
        clusters.push_back(std::move(merged));
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& p : pairs) out.push_back(p.second);
    return out;
}

/// A story item: a single fact or a compound of two.
struct StoryItem {
    std::vector<std::size_t> facts;  // story indices, one or two
    std::optional<CompoundFact> compound;
};

/// Merges the top ceil(level * candidates) sibling leaf pairs. Items keep
/// story order, a compound sitting where its first part was.
inline std::vector<StoryItem> aggregate_story(const Story& story, const DataTable& table, double level) {
    if (!(level >= 0.0 && level <= 1.0)) throw SpecError("aggregation level must lie in [0, 1]");
    const auto pairs = sibling_leaf_pairs(distance_matrix(story.facts, table));
    const auto take = static_cast<std::size_t>(std::ceil(level * static_cast<double>(pairs.size()) - 1e-12));
    std::vector<std::optional<std::size_t>> partner(story.facts.size());
    for (std::size_t k = 0; k < std::min(take, pairs.size()); ++k) {
        partner[pairs[k].first] = pairs[k].second;
        partner[pairs[k].second] = pairs[k].first;
    }
    std::vector<StoryItem> items;
    for (std::size_t i = 0; i < story.facts.size(); ++i) {
        if (!partner[i]) {
            items.push_back({{i}, std::nullopt});
        } else if (*partner[i] > i) {
            items.push_back({{i, *partner[i]}, merge_facts(story.facts[i], story.facts[*partner[i]], table)});
        }
    }
    return items;
}

// ---------------------------------------------------------------------------
// Documents
// ---------------------------------------------------------------------------

enum class RenderMode { storyline, swiper, factsheet };

inline std::string_view to_string(RenderMode m) {
    switch (m) {
        case RenderMode::storyline: return "storyline";
        case RenderMode::swiper: return "swiper";
        case RenderMode::factsheet: return "factsheet";
    }
    return "storyline";
}

inline std::optional<RenderMode> parse_render_mode(std::string_view s) {
    for (RenderMode m : {RenderMode::storyline, RenderMode::swiper, RenderMode::factsheet})
        if (to_string(m) == s) return m;
    return std::nullopt;
}

namespace detail {

/// Chart SVG re-rooted as a positioned child element.
inline std::string nested_svg(const ChartSpec& spec, double x, double y, Size size) {
    std::string svg = render_svg(spec, size);
    const std::string open = "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" ";
    return "<svg x=\"" + num(x) + "\" y=\"" + num(y) + "\" " + svg.substr(open.size());
}

}  // namespace detail

/// All charts side by side in one row, captions underneath.
inline std::string render_storyline(const std::vector<ChartSpec>& specs, Size cell = {360, 260}) {
    const double w = cell.width * static_cast<double>(std::max<std::size_t>(specs.size(), 1));
    const double h = cell.height + 60;
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + detail::num(w) +
                      "\" height=\"" + detail::num(h) + "\" viewBox=\"0 0 " + detail::num(w) + " " + detail::num(h) +
                      "\">\n<title>Storyline</title>\n";
    for (std::size_t i = 0; i < specs.size(); ++i) {
        out += detail::nested_svg(specs[i], cell.width * i, 0, cell);
        out += "<foreignObject x=\"" + detail::num(cell.width * i + 8) + "\" y=\"" + detail::num(cell.height) +
               "\" width=\"" + detail::num(cell.width - 16) + "\" height=\"56\"><div xmlns=\"http://www.w3.org/1999/xhtml\" "
               "style=\"font:12px sans-serif\">" + xml_escape(specs[i].caption) + "</div></foreignObject>\n";
    }
    return out + "</svg>\n";
}

/// One frame per fact, shown one at a time.
inline std::string render_swiper(const std::vector<ChartSpec>& specs, Size cell = {360, 420}) {
    std::string out =
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\"/>\n<title>Story</title>\n<style>"
        ".frame{display:none;width:" + detail::num(cell.width) + "px;margin:auto;font:14px sans-serif}"
        ".frame:target,.frame:first-of-type{display:block}</style>\n</head>\n<body>\n";
    for (std::size_t i = 0; i < specs.size(); ++i) {
        out += "<section class=\"frame\" id=\"frame-" + std::to_string(i + 1) + "\">\n";
        out += render_svg(specs[i], {cell.width, cell.height * 0.75});
        out += "<p>" + xml_escape(specs[i].caption) + "</p>\n";
        out += "<nav>" + std::to_string(i + 1) + " / " + std::to_string(specs.size());
        if (i + 1 < specs.size()) out += " <a href=\"#frame-" + std::to_string(i + 2) + "\">next</a>";
        out += "</nav>\n</section>\n";
    }
    return out + "</body>\n</html>\n";
}

/// Single poster: equal-height rows, widths from the layout areas.
inline std::string render_factsheet(const std::vector<ChartSpec>& specs, const FactsheetLayout& layout) {
    if (specs.empty()) throw LayoutError("cannot render an empty factsheet");
    check_partition(layout.rows, specs.size());
    const Size page = layout.page;
    if (!(page.width > 0 && page.height > 0)) throw RenderError("page size must be positive");
    const double row_h = page.height / static_cast<double>(layout.rows.size());
    const double k = static_cast<double>(layout.rows.size());
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + detail::num(page.width) +
                      "\" height=\"" + detail::num(page.height) + "\" viewBox=\"0 0 " + detail::num(page.width) + " " +
                      detail::num(page.height) + "\">\n<title>Factsheet</title>\n";
    for (std::size_t r = 0; r < layout.rows.size(); ++r) {
        double x = 0;
        for (std::size_t i : layout.rows[r]) {
            const double w = page.width * layout.areas[i] * k;
            const double chart_h = std::max(1.0, row_h - 40);
            out += detail::nested_svg(specs[i], x, row_h * r, {std::max(1.0, w), chart_h});
            out += "<foreignObject x=\"" + detail::num(x + 4) + "\" y=\"" + detail::num(row_h * r + chart_h) +
                   "\" width=\"" + detail::num(std::max(1.0, w - 8)) + "\" height=\"40\"><div xmlns=\"http://www.w3.org/1999/xhtml\" "
                   "style=\"font:11px sans-serif\">" + xml_escape(specs[i].caption) + "</div></foreignObject>\n";
            x += w;
        }
    }
    return out + "</svg>\n";
}

}  // namespace factweaver
