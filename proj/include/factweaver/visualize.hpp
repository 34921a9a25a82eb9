#pragma once

// Fact-to-chart mapping, declarative chart specs and a small SVG renderer.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "factweaver/errors.hpp"
#include "factweaver/fact.hpp"
#include "factweaver/narrate.hpp"
#include "factweaver/table.hpp"
#include "factweaver/util.hpp"
#include "json.hpp"

namespace factweaver {

enum class ChartType { bar, line, pie, donut, half_donut, scatter, area, big_number, table_list, box_plot, treemap, bubble };

inline constexpr std::array<ChartType, 12> kChartTypes{
    ChartType::bar,     ChartType::line, ChartType::pie,        ChartType::donut,      ChartType::half_donut,
    ChartType::scatter, ChartType::area, ChartType::big_number, ChartType::table_list, ChartType::box_plot,
    ChartType::treemap, ChartType::bubble};

inline std::string_view to_string(ChartType c) {
    switch (c) {
        case ChartType::bar: return "bar";
        case ChartType::line: return "line";
        case ChartType::pie: return "pie";
        case ChartType::donut: return "donut";
        case ChartType::half_donut: return "half_donut";
        case ChartType::scatter: return "scatter";
        case ChartType::area: return "area";
        case ChartType::big_number: return "big_number";
        case ChartType::table_list: return "table_list";
        case ChartType::box_plot: return "box_plot";
        case ChartType::treemap: return "treemap";
        case ChartType::bubble: return "bubble";
    }
    return "bar";
}

inline std::optional<ChartType> parse_chart_type(std::string_view s) {
    for (ChartType c : kChartTypes)
        if (to_string(c) == s) return c;
    return std::nullopt;
}

namespace detail {

struct ChartCount {
    ChartType chart;
    int count;
};

// Observed chart usage per fact type, renderable charts only, in the
// source column order: bar, line, scatter, pie, area, bubble, text, table,
// box plot, treemap. Map and pictograph columns are dropped.
inline std::vector<ChartCount> chart_frequencies(FactType t) {
    using C = ChartType;
    switch (t) {
        case FactType::value: return {{C::bar, 56}, {C::big_number, 204}, {C::table_list, 9}};
        case FactType::difference: return {{C::bar, 99}, {C::line, 37}, {C::big_number, 46}};
        case FactType::proportion: return {{C::bar, 45}, {C::pie, 131}, {C::big_number, 58}};
        case FactType::trend: return {{C::bar, 60}, {C::line, 170}, {C::area, 14}};
        case FactType::categorization: return {{C::bar, 24}, {C::area, 4}, {C::treemap, 5}};
        case FactType::distribution: return {{C::bar, 40}, {C::area, 12}};
        case FactType::rank: return {{C::bar, 24}, {C::pie, 3}, {C::big_number, 22}, {C::table_list, 5}};
        case FactType::association: return {{C::line, 17}, {C::scatter, 9}, {C::bubble, 2}, {C::big_number, 1}};
        case FactType::extreme: return {{C::bar, 12}, {C::line, 2}, {C::big_number, 4}};
        case FactType::outlier: return {{C::area, 4}, {C::big_number, 2}, {C::box_plot, 2}};
    }
    return {};
}

/// Nonzero entries by count descending, column order on ties.
inline std::vector<ChartType> ranked_charts(FactType t) {
    auto f = chart_frequencies(t);
    std::stable_sort(f.begin(), f.end(), [](const ChartCount& a, const ChartCount& b) { return a.count > b.count; });
    std::vector<ChartType> out;
    for (const auto& c : f) out.push_back(c.chart);
    return out;
}

}  // namespace detail

/// Most frequent renderable chart for the type.
inline ChartType default_chart(FactType t) { return detail::ranked_charts(t).front(); }

/// The top ceil(1 + d (K - 1)) charts by frequency. Above zero diversity a
/// pie also brings its donut and half-donut variants.
inline std::vector<ChartType> chart_candidates(FactType t, double diversity) {
    if (!(diversity >= 0.0 && diversity <= 1.0)) throw SpecError("chart diversity must lie in [0, 1]");
    const auto ranked = detail::ranked_charts(t);
    if (diversity == 0.0) return {ranked.front()};
    const double k = static_cast<double>(ranked.size());
    const auto take = std::min(ranked.size(), static_cast<std::size_t>(std::ceil(1.0 + diversity * (k - 1.0) - 1e-12)));
    std::vector<ChartType> out;
    for (std::size_t i = 0; i < take; ++i) {
        out.push_back(ranked[i]);
        if (ranked[i] == ChartType::pie) {
            out.push_back(ChartType::donut);
            out.push_back(ChartType::half_donut);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Chart specs
// ---------------------------------------------------------------------------

struct ChartDatum {
    std::string key;
    double value = 0.0;
    std::optional<double> x;  // first measure for two-measure charts

    bool operator==(const ChartDatum&) const = default;
};

struct ChartSpec {
    ChartType chart = ChartType::bar;
    FactType fact_type = FactType::value;
    std::string categorical_channel;
    std::vector<std::string> numerical_channels;
    std::vector<ChartDatum> data;
    std::vector<std::string> highlighted;
    std::string caption;

    bool operator==(const ChartSpec&) const = default;
};

inline json to_json(const ChartSpec& s) {
    json data = json::array();
    for (const auto& d : s.data) {
        json row = {{"key", d.key}, {"value", d.value}};
        if (d.x) row["x"] = *d.x;
        data.push_back(std::move(row));
    }
    return {{"chart", to_string(s.chart)},
            {"fact_type", to_string(s.fact_type)},
            {"encoding", {{"categorical", s.categorical_channel}, {"numerical", s.numerical_channels}}},
            {"data", std::move(data)},
            {"highlighted", s.highlighted},
            {"caption", s.caption}};
}

inline ChartSpec chart_spec_from_json(const json& j) {
    try {
        ChartSpec s;
        const auto chart = parse_chart_type(j.at("chart").get<std::string>());
        const auto type = parse_fact_type(j.at("fact_type").get<std::string>());
        if (!chart || !type) throw ParseError("unknown chart or fact type");
        s.chart = *chart;
        s.fact_type = *type;
        s.categorical_channel = j.at("encoding").at("categorical").get<std::string>();
        s.numerical_channels = j.at("encoding").at("numerical").get<std::vector<std::string>>();
        for (const auto& row : j.at("data")) {
            ChartDatum d{row.at("key").get<std::string>(), row.at("value").get<double>(), std::nullopt};
            if (row.contains("x")) d.x = row.at("x").get<double>();
            s.data.push_back(std::move(d));
        }
        s.highlighted = j.at("highlighted").get<std::vector<std::string>>();
        s.caption = j.at("caption").get<std::string>();
        return s;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad chart spec: ") + e.what());
    }
}

namespace detail {

inline std::string measure_label(const Measure& m) {
    return std::string(to_string(m.agg)) + "(" + (m.field.empty() ? "*" : m.field) + ")";
}

inline bool is_pie_like(ChartType c) {
    return c == ChartType::pie || c == ChartType::donut || c == ChartType::half_donut;
}

}  // namespace detail

/// Data from the fact's groups with the breakdown on the categorical
/// channel and the measures on the numerical channels; focus keys are
/// highlighted. Throws SpecError when the chart does not suit the fact.
inline ChartSpec build_chart_spec(const DataFact& fact, const DataTable& table, ChartType chart) {
    const auto allowed = chart_candidates(fact.type, 1.0);
    if (std::find(allowed.begin(), allowed.end(), chart) == allowed.end())
        throw SpecError(std::string(to_string(chart)) + " chart does not suit a " + std::string(to_string(fact.type)) +
                        " fact");
    if (auto v = validate(fact, table); !v.empty()) throw SpecError("fact does not validate: " + v.front());

    ChartSpec s;
    s.chart = chart;
    s.fact_type = fact.type;
    if (!fact.breakdown.empty()) s.categorical_channel = fact.breakdown.front();
    for (const auto& m : fact.measures) s.numerical_channels.push_back(detail::measure_label(m));
    if (fact.type == FactType::categorization) s.numerical_channels = {"count(*)"};
    s.caption = caption(fact, table);

    if (fact.type == FactType::value) {
        const auto d = derive_value(fact, table);
        s.data.push_back({detail::measure_label(fact.measures.front()), *d.number, std::nullopt});
        return s;
    }
    if (chart == ChartType::big_number && fact.type != FactType::rank) {
        const auto d = derive_value(fact, table);
        if (!d.number) throw SpecError("big number needs a numeric derived value");
        std::string label(to_string(fact.type));
        if (fact.focus.size() == 1) label = fact.focus.front().value;
        s.data.push_back({label, *d.number, std::nullopt});
        for (const auto& x : fact.focus)
            if (x.value == label) s.highlighted.push_back(label);
        return s;
    }
    if (fact.type == FactType::association) {
        const auto a = fact_groups(fact, table, 0);
        const auto b = fact_groups(fact, table, 1);
        for (const auto& g : a) {
            const auto* h = detail::find_group(b, g.key);
            if (!h || std::isnan(g.value) || std::isnan(h->value)) continue;
            s.data.push_back({g.key, h->value, g.value});
        }
        if (chart == ChartType::line)
            std::stable_sort(s.data.begin(), s.data.end(), [](const ChartDatum& p, const ChartDatum& q) { return *p.x < *q.x; });
        return s;
    }
    for (const auto& g : fact_groups(fact, table)) {
        if (std::isnan(g.value)) continue;
        s.data.push_back({g.key, g.value, std::nullopt});
    }
    if (detail::is_pie_like(chart) || chart == ChartType::treemap)
        for (const auto& d : s.data)
            if (d.value < 0) throw SpecError(std::string(to_string(chart)) + " chart needs non-negative values");
    for (const auto& x : fact.focus)
        for (const auto& d : s.data)
            if (d.key == x.value) s.highlighted.push_back(d.key);
    return s;
}

/// Deterministic chart choice for story position `index` at the given chart diversity.
inline ChartType pick_chart(FactType t, double diversity, std::uint64_t seed, std::size_t index) {
    const auto c = chart_candidates(t, diversity);
    return c[mix_seed(seed, index) % c.size()];
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

inline constexpr std::array<const char*, 8> kPalette{"#4e79a7", "#f28e2b", "#59a14f", "#76b7b2",
                                                      "#edc948", "#b07aa1", "#9c755f", "#bab0ac"};
inline constexpr const char* kAccent = "#e15759";

struct Size {
    double width = 480;
    double height = 320;
};

namespace detail {

inline std::string num(double v) {
    std::string s = format_fixed(v, 2);
    if (s == "-0.00") s = "0.00";
    return s;
}

class SvgWriter {
public:
    SvgWriter(Size size, const std::string& caption) : size_(size) {
        out_ = "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(size.width) +
               "\" height=\"" + num(size.height) + "\" viewBox=\"0 0 " + num(size.width) + " " + num(size.height) +
               "\">\n<title>" + xml_escape(caption) + "</title>\n<style>.mark{stroke:#ffffff;stroke-width:1}"
               ".accent{fill:" + kAccent + "}.line{fill:none;stroke-width:2}.label{font:11px sans-serif;fill:#333333}"
               ".big{font:bold 40px sans-serif;fill:#333333}.caption{font:12px sans-serif;fill:#111111}</style>\n";
    }

    void raw(const std::string& s) { out_ += s + "\n"; }

    void text(double x, double y, const std::string& s, const char* cls = "label", const char* anchor = "middle") {
        out_ += "<text class=\"" + std::string(cls) + "\" x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" +
                anchor + "\">" + xml_escape(s) + "</text>\n";
    }

    std::string finish() { return out_ + "</svg>\n"; }

private:
    Size size_;
    std::string out_;
};

inline std::string fill_for(std::size_t i, bool highlighted) {
    return highlighted ? std::string(kAccent) : std::string(kPalette[i % kPalette.size()]);
}

inline std::string mark_class(bool highlighted) { return highlighted ? "mark accent" : "mark"; }

inline bool is_highlighted(const ChartSpec& s, const std::string& key) {
    return std::find(s.highlighted.begin(), s.highlighted.end(), key) != s.highlighted.end();
}

struct Frame {
    double left, top, width, height;
};

inline std::pair<double, double> value_range(const std::vector<double>& v) {
    double lo = 0, hi = 0;
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (hi == lo) hi = lo + 1;
    return {lo, hi};
}

inline void draw_bars(SvgWriter& w, const ChartSpec& s, const Frame& f) {
    std::vector<double> values;
    for (const auto& d : s.data) values.push_back(d.value);
    const auto [lo, hi] = value_range(values);
    const double band = f.width / static_cast<double>(s.data.size());
    auto y_of = [&](double v) { return f.top + f.height * (hi - v) / (hi - lo); };
    for (std::size_t i = 0; i < s.data.size(); ++i) {
        const auto& d = s.data[i];
        const bool hl = is_highlighted(s, d.key);
        const double y0 = y_of(0), y1 = y_of(d.value);
        w.raw("<rect class=\"" + mark_class(hl) + "\" x=\"" + num(f.left + band * i + band * 0.1) + "\" y=\"" +
              num(std::min(y0, y1)) + "\" width=\"" + num(band * 0.8) + "\" height=\"" + num(std::fabs(y1 - y0)) +
              "\" fill=\"" + fill_for(0, hl) + "\"/>");
        w.text(f.left + band * (i + 0.5), f.top + f.height + 14, d.key);
    }
}

inline void draw_series(SvgWriter& w, const ChartSpec& s, const Frame& f, bool area) {
    std::vector<double> values;
    for (const auto& d : s.data) values.push_back(d.value);
    const auto [lo, hi] = value_range(values);
    const double n = static_cast<double>(s.data.size());
    auto x_of = [&](std::size_t i) { return n == 1 ? f.left + f.width / 2 : f.left + f.width * i / (n - 1); };
    auto y_of = [&](double v) { return f.top + f.height * (hi - v) / (hi - lo); };
    std::string pts;
    for (std::size_t i = 0; i < s.data.size(); ++i)
        pts += (i ? " " : "") + num(x_of(i)) + "," + num(y_of(s.data[i].value));
    if (area) {
        const std::string base = num(y_of(std::max(lo, 0.0)));
        w.raw("<polygon class=\"area\" points=\"" + num(x_of(0)) + "," + base + " " + pts + " " +
              num(x_of(s.data.size() - 1)) + "," + base + "\" fill=\"" + kPalette[0] + "\" fill-opacity=\"0.4\"/>");
    }
    w.raw("<polyline class=\"line\" points=\"" + pts + "\" stroke=\"" + kPalette[0] + "\"/>");
    for (std::size_t i = 0; i < s.data.size(); ++i) {
        const bool hl = is_highlighted(s, s.data[i].key);
        w.raw("<circle class=\"" + mark_class(hl) + "\" cx=\"" + num(x_of(i)) + "\" cy=\"" + num(y_of(s.data[i].value)) +
              "\" r=\"" + (hl ? "5" : "3") + "\" fill=\"" + fill_for(0, hl) + "\"/>");
    }
    w.text(f.left, f.top + f.height + 14, s.data.front().key, "label", "start");
    w.text(f.left + f.width, f.top + f.height + 14, s.data.back().key, "label", "end");
}

inline void draw_points(SvgWriter& w, const ChartSpec& s, const Frame& f, bool bubble) {
    std::vector<double> xs, ys;
    for (const auto& d : s.data) {
        xs.push_back(d.x.value_or(0));
        ys.push_back(d.value);
    }
    const auto [xlo, xhi] = value_range(xs);
    const auto [ylo, yhi] = value_range(ys);
    for (std::size_t i = 0; i < s.data.size(); ++i) {
        const bool hl = is_highlighted(s, s.data[i].key);
        const double cx = f.left + f.width * (xs[i] - xlo) / (xhi - xlo);
        const double cy = f.top + f.height * (yhi - ys[i]) / (yhi - ylo);
        const double r = bubble ? 4 + 12 * (ys[i] - ylo) / (yhi - ylo) : 4;
        w.raw("<circle class=\"" + mark_class(hl) + "\" cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) +
              "\" fill=\"" + fill_for(i, hl) + "\" fill-opacity=\"0.8\"/>");
    }
}

inline void draw_pie(SvgWriter& w, const ChartSpec& s, const Frame& f) {
    const double pi = std::acos(-1.0);
    const bool half = s.chart == ChartType::half_donut;
    const double cx = f.left + f.width / 2;
    const double cy = half ? f.top + f.height * 0.85 : f.top + f.height / 2;
    const double r = half ? std::min(f.width / 2, f.height * 0.8) : std::min(f.width, f.height) / 2;
    const double inner = s.chart == ChartType::pie ? 0.0 : r * 0.55;
    const double sweep = half ? pi : 2 * pi;
    double total = 0;
    for (const auto& d : s.data) total += d.value;
    double a = half ? pi : -pi / 2;
    for (std::size_t i = 0; i < s.data.size(); ++i) {
        const double frac = total > 0 ? s.data[i].value / total : 0;
        const double b = a + sweep * std::min(frac, 0.999999);
        const bool hl = is_highlighted(s, s.data[i].key);
        const int large = sweep * frac > pi ? 1 : 0;
        std::string d = "M " + num(cx + r * std::cos(a)) + " " + num(cy + r * std::sin(a)) + " A " + num(r) + " " +
                        num(r) + " 0 " + std::to_string(large) + " 1 " + num(cx + r * std::cos(b)) + " " +
                        num(cy + r * std::sin(b));
        if (inner > 0)
            d += " L " + num(cx + inner * std::cos(b)) + " " + num(cy + inner * std::sin(b)) + " A " + num(inner) + " " +
                 num(inner) + " 0 " + std::to_string(large) + " 0 " + num(cx + inner * std::cos(a)) + " " +
                 num(cy + inner * std::sin(a)) + " Z";
        else
            d += " L " + num(cx) + " " + num(cy) + " Z";
        w.raw("<path class=\"" + mark_class(hl) + "\" d=\"" + d + "\" fill=\"" + fill_for(i, hl) + "\"/>");
        a += sweep * frac;
    }
}

inline void draw_treemap(SvgWriter& w, const ChartSpec& s, const Frame& f) {
    double total = 0;
    for (const auto& d : s.data) total += d.value;
    double x = f.left;
    for (std::size_t i = 0; i < s.data.size(); ++i) {
        const double width = total > 0 ? f.width * s.data[i].value / total : 0;
        const bool hl = is_highlighted(s, s.data[i].key);
        w.raw("<rect class=\"" + mark_class(hl) + "\" x=\"" + num(x) + "\" y=\"" + num(f.top) + "\" width=\"" +
              num(width) + "\" height=\"" + num(f.height) + "\" fill=\"" + fill_for(i, hl) + "\"/>");
        if (width > 30) w.text(x + width / 2, f.top + f.height / 2, s.data[i].key);
        x += width;
    }
}

inline void draw_box(SvgWriter& w, const ChartSpec& s, const Frame& f) {
    std::vector<double> v;
    for (const auto& d : s.data) v.push_back(d.value);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    auto q = [&](double p) {
        const double pos = p * static_cast<double>(sorted.size() - 1);
        const auto i = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i);
        return i + 1 < sorted.size() ? sorted[i] + frac * (sorted[i + 1] - sorted[i]) : sorted[i];
    };
    const auto [lo, hi] = value_range(v);
    auto y_of = [&](double x) { return f.top + f.height * (hi - x) / (hi - lo); };
    const double cx = f.left + f.width / 2, bw = f.width / 4;
    w.raw("<line x1=\"" + num(cx) + "\" y1=\"" + num(y_of(sorted.front())) + "\" x2=\"" + num(cx) + "\" y2=\"" +
          num(y_of(sorted.back())) + "\" stroke=\"#333333\"/>");
    w.raw("<rect class=\"mark\" x=\"" + num(cx - bw / 2) + "\" y=\"" + num(y_of(q(0.75))) + "\" width=\"" + num(bw) +
          "\" height=\"" + num(y_of(q(0.25)) - y_of(q(0.75))) + "\" fill=\"" + kPalette[0] + "\"/>");
    w.raw("<line x1=\"" + num(cx - bw / 2) + "\" y1=\"" + num(y_of(q(0.5))) + "\" x2=\"" + num(cx + bw / 2) + "\" y2=\"" +
          num(y_of(q(0.5))) + "\" stroke=\"#ffffff\" stroke-width=\"2\"/>");
    for (const auto& d : s.data)
        if (is_highlighted(s, d.key)) {
            w.raw("<circle class=\"mark accent\" cx=\"" + num(cx) + "\" cy=\"" + num(y_of(d.value)) + "\" r=\"5\" fill=\"" +
                  kAccent + "\"/>");
            w.text(cx + 10, y_of(d.value) + 4, d.key, "label", "start");
        }
}

inline void draw_table(SvgWriter& w, const ChartSpec& s, const Frame& f) {
    const double row = std::min(18.0, f.height / static_cast<double>(s.data.size()));
    for (std::size_t i = 0; i < s.data.size(); ++i) {
        const auto& d = s.data[i];
        const char* cls = is_highlighted(s, d.key) ? "label accent" : "label";
        const double y = f.top + row * (i + 0.75);
        w.text(f.left, y, d.key, cls, "start");
        w.text(f.left + f.width, y, format_number(d.value), cls, "end");
    }
}

}  // namespace detail

/// SVG 1.1 document for the spec. Throws RenderError for a non-positive size.
inline std::string render_svg(const ChartSpec& spec, Size size = {}) {
    if (!(size.width > 0 && size.height > 0)) throw RenderError("chart size must be positive");
    detail::SvgWriter w(size, spec.caption);
    const detail::Frame frame{size.width * 0.08, size.height * 0.12, size.width * 0.84, size.height * 0.7};
    if (spec.data.empty()) {
        w.text(size.width / 2, size.height / 2, "no data");
        return w.finish();
    }
    switch (spec.chart) {
        case ChartType::bar: detail::draw_bars(w, spec, frame); break;
        case ChartType::line: detail::draw_series(w, spec, frame, false); break;
        case ChartType::area: detail::draw_series(w, spec, frame, true); break;
        case ChartType::scatter: detail::draw_points(w, spec, frame, false); break;
        case ChartType::bubble: detail::draw_points(w, spec, frame, true); break;
        case ChartType::pie:
        case ChartType::donut:
        case ChartType::half_donut: detail::draw_pie(w, spec, frame); break;
        case ChartType::treemap: detail::draw_treemap(w, spec, frame); break;
        case ChartType::box_plot: detail::draw_box(w, spec, frame); break;
        case ChartType::table_list: detail::draw_table(w, spec, frame); break;
        case ChartType::big_number:
            w.text(size.width / 2, size.height / 2, format_number(spec.data.front().value), "big");
            w.text(size.width / 2, size.height / 2 + 24, spec.data.front().key);
            break;
    }
    return w.finish();
}

}  // namespace factweaver
