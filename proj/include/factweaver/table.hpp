#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "factweaver/errors.hpp"
#include "factweaver/util.hpp"

namespace factweaver {

enum class FieldKind { numerical, categorical, temporal };

inline std::string_view to_string(FieldKind k) {
    switch (k) {
        case FieldKind::numerical: return "numerical";
        case FieldKind::categorical: return "categorical";
        case FieldKind::temporal: return "temporal";
    }
    return "?";
}

inline std::optional<FieldKind> parse_field_kind(std::string_view s) {
    if (s == "numerical") return FieldKind::numerical;
    if (s == "categorical") return FieldKind::categorical;
    if (s == "temporal") return FieldKind::temporal;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Cell parsing
// ---------------------------------------------------------------------------

/// Chronological sort key. Missing month/day components are zero, so "2020"
/// sorts before "2020-01".
struct TemporalKey {
    int year = 0;
    int month = 0;
    int day = 0;
    auto operator<=>(const TemporalKey&) const = default;
};

namespace detail {

inline bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

inline int to_int(std::string_view s) {
    int v = 0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
}

inline std::vector<std::string_view> split_view(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

inline bool is_year_literal(std::string_view s) { return s.size() == 4 && all_digits(s) && s[0] != '0'; }

}  // namespace detail

/// Accepts YYYY, YYYY-MM, YYYY-MM-DD (month/day may be one digit) and YYYY/M/D.
inline std::optional<TemporalKey> parse_temporal(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    if (detail::is_year_literal(text)) return TemporalKey{detail::to_int(text), 0, 0};

    const char sep = text.find('/') != std::string_view::npos ? '/' : '-';
    const auto parts = detail::split_view(text, sep);
    if (!detail::is_year_literal(parts[0])) return std::nullopt;
    if (sep == '/' && parts.size() != 3) return std::nullopt;
    if (parts.size() < 2 || parts.size() > 3) return std::nullopt;
    for (std::size_t i = 1; i < parts.size(); ++i)
        if (!detail::all_digits(parts[i]) || parts[i].size() > 2) return std::nullopt;

    TemporalKey key{detail::to_int(parts[0]), detail::to_int(parts[1]), 0};
    if (key.month < 1 || key.month > 12) return std::nullopt;
    if (parts.size() == 3) {
        key.day = detail::to_int(parts[2]);
        static constexpr std::array<int, 13> days{0, 31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        if (key.day < 1 || key.day > days[static_cast<std::size_t>(key.month)]) return std::nullopt;
    }
    return key;
}

/// Dot decimal separator; thousands commas are accepted only in well-formed
/// groups of three ("21,921,768").
inline std::optional<double> parse_number(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    std::string cleaned;
    cleaned.reserve(text.size());
    if (text.find(',') != std::string_view::npos) {
        std::string_view body = text;
        if (body.front() == '-' || body.front() == '+') body.remove_prefix(1);
        const auto dot = body.find('.');
        const std::string_view integer = body.substr(0, dot);
        const auto groups = detail::split_view(integer, ',');
        if (groups.front().empty() || groups.front().size() > 3 || !detail::all_digits(groups.front()))
            return std::nullopt;
        for (std::size_t i = 1; i < groups.size(); ++i)
            if (groups[i].size() != 3 || !detail::all_digits(groups[i])) return std::nullopt;
        for (char c : text)
            if (c != ',') cleaned.push_back(c);
    } else {
        cleaned.assign(text);
    }
    for (char c : cleaned) {
        const bool ok = (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '+' || c == 'e' || c == 'E';
        if (!ok) return std::nullopt;
    }
    const char* begin = cleaned.data();
    const char* end = begin + cleaned.size();
    if (*begin == '+') ++begin;
    double v = 0;
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) return std::nullopt;
    return v;
}

/// Column kind inference. A column made only of four-digit integers is a
/// year column; otherwise numbers win at >= 95%, then dates at >= 95%.
inline FieldKind infer_field_type(const std::vector<std::string>& values) {
    std::size_t non_empty = 0, numeric = 0, temporal = 0, years = 0;
    for (const auto& raw : values) {
        const auto v = trim(raw);
        if (v.empty()) continue;
        ++non_empty;
        if (parse_number(v)) ++numeric;
        if (parse_temporal(v)) ++temporal;
        if (detail::is_year_literal(v)) ++years;
    }
    if (non_empty == 0) throw SchemaError("cannot infer the type of an all-empty column");
    if (years == non_empty) return FieldKind::temporal;
    // integer arithmetic: count / total >= 0.95
    if (numeric * 100 >= non_empty * 95) return FieldKind::numerical;
    if (temporal * 100 >= non_empty * 95) return FieldKind::temporal;
    return FieldKind::categorical;
}

// ---------------------------------------------------------------------------
// Schema and table
// ---------------------------------------------------------------------------

struct FieldMeta {
    std::string name;
    FieldKind kind = FieldKind::categorical;
    /// Categorical: lexicographic. Temporal: chronological.
    std::vector<std::string> distinct_values;
    double min = 0.0;
    double max = 0.0;
};

struct Filter {
    std::string field;
    std::string value;
    auto operator<=>(const Filter&) const = default;
};

struct Subspace {
    std::vector<Filter> filters;

    bool empty() const noexcept { return filters.empty(); }
    std::size_t size() const noexcept { return filters.size(); }

    /// Order-insensitive comparison.
    friend bool operator==(const Subspace& a, const Subspace& b) {
        if (a.filters.size() != b.filters.size()) return false;
        auto x = a.filters, y = b.filters;
        std::sort(x.begin(), x.end());
        std::sort(y.begin(), y.end());
        return x == y;
    }

    const Filter* find(std::string_view field) const {
        for (const auto& f : filters)
            if (f.field == field) return &f;
        return nullptr;
    }
};

using RowSet = std::vector<std::size_t>;

struct CsvOptions {
    char delimiter = ',';
    /// Forces a kind for the named columns instead of inferring it.
    std::map<std::string, FieldKind> kind_overrides;
};

class DataTable {
public:
    static constexpr int kMissing = -1;

    DataTable() = default;

    /// Builds a typed table from header + text cells. Rows must be rectangular.
    static DataTable from_text(const std::vector<std::string>& header,
                               const std::vector<std::vector<std::string>>& rows,
                               const CsvOptions& options = {}) {
        if (rows.empty()) throw EmptyTable();
        std::set<std::string> seen;
        for (const auto& h : header) {
            if (h.empty()) throw SchemaError("empty column name in header");
            if (!seen.insert(h).second) throw SchemaError("duplicate column name: " + h);
        }
        for (std::size_t r = 0; r < rows.size(); ++r)
            if (rows[r].size() != header.size())
                throw CsvError("row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                                   " fields, expected " + std::to_string(header.size()),
                               r + 1, rows[r].size());

        DataTable t;
        t.row_count_ = rows.size();
        t.schema_.resize(header.size());
        t.columns_.resize(header.size());
        for (std::size_t c = 0; c < header.size(); ++c) {
            std::vector<std::string> cells;
            cells.reserve(rows.size());
            for (const auto& row : rows) cells.push_back(row[c]);
            FieldMeta& meta = t.schema_[c];
            meta.name = header[c];
            if (auto it = options.kind_overrides.find(meta.name); it != options.kind_overrides.end())
                meta.kind = it->second;
            else
                meta.kind = infer_field_type(cells);
            t.fill_column(c, cells);
            t.index_.emplace(meta.name, c);
        }
        return t;
    }

    const std::vector<FieldMeta>& schema() const noexcept { return schema_; }
    std::size_t row_count() const noexcept { return row_count_; }
    std::size_t column_count() const noexcept { return schema_.size(); }

    std::optional<std::size_t> field_index(std::string_view name) const {
        auto it = index_.find(std::string(name));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    const FieldMeta& field(std::string_view name) const {
        auto idx = field_index(name);
        if (!idx) throw SchemaError("unknown field: " + std::string(name));
        return schema_[*idx];
    }

    bool has_field(std::string_view name) const { return field_index(name).has_value(); }

    /// NaN for missing or unparseable numerical cells.
    double number(std::size_t row, std::size_t col) const { return columns_[col].numbers[row]; }

    /// Index into distinct_values, or kMissing.
    int code(std::size_t row, std::size_t col) const { return columns_[col].codes[row]; }

    std::string text(std::size_t row, std::size_t col) const {
        const auto& meta = schema_[col];
        if (meta.kind == FieldKind::numerical) {
            const double v = columns_[col].numbers[row];
            return std::isnan(v) ? std::string() : format_number(v);
        }
        const int c = columns_[col].codes[row];
        return c == kMissing ? std::string() : meta.distinct_values[static_cast<std::size_t>(c)];
    }

    std::optional<int> value_code(std::size_t col, std::string_view value) const {
        const auto& lookup = columns_[col].lookup;
        auto it = lookup.find(std::string(value));
        if (it == lookup.end()) return std::nullopt;
        return it->second;
    }

    std::vector<std::string> fields_of(FieldKind kind) const {
        std::vector<std::string> out;
        for (const auto& f : schema_)
            if (f.kind == kind) out.push_back(f.name);
        return out;
    }

    std::size_t count_of(FieldKind kind) const {
        return static_cast<std::size_t>(
            std::count_if(schema_.begin(), schema_.end(), [kind](const FieldMeta& f) { return f.kind == kind; }));
    }

    /// Categorical + temporal fields, in schema order.
    std::vector<std::string> dimension_fields() const {
        std::vector<std::string> out;
        for (const auto& f : schema_)
            if (f.kind != FieldKind::numerical) out.push_back(f.name);
        return out;
    }

    RowSet all_rows() const {
        RowSet rows(row_count_);
        for (std::size_t i = 0; i < row_count_; ++i) rows[i] = i;
        return rows;
    }

private:
    struct Column {
        std::vector<double> numbers;
        std::vector<int> codes;
        std::unordered_map<std::string, int> lookup;
    };

    void fill_column(std::size_t c, const std::vector<std::string>& cells) {
        FieldMeta& meta = schema_[c];
        Column& col = columns_[c];
        if (meta.kind == FieldKind::numerical) {
            col.numbers.reserve(cells.size());
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (const auto& cell : cells) {
                const auto v = parse_number(cell);
                col.numbers.push_back(v ? *v : std::numeric_limits<double>::quiet_NaN());
                if (v) {
                    lo = std::min(lo, *v);
                    hi = std::max(hi, *v);
                }
            }
            meta.min = std::isfinite(lo) ? lo : 0.0;
            meta.max = std::isfinite(hi) ? hi : 0.0;
            return;
        }

        std::vector<std::string> values;
        for (const auto& cell : cells) {
            const auto v = trim(cell);
            if (v.empty()) continue;
            if (meta.kind == FieldKind::temporal && !parse_temporal(v)) continue;
            values.emplace_back(v);
        }
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        if (meta.kind == FieldKind::temporal) {
            std::stable_sort(values.begin(), values.end(), [](const std::string& a, const std::string& b) {
                return *parse_temporal(a) < *parse_temporal(b);
            });
        }
        meta.distinct_values = values;
        for (std::size_t i = 0; i < values.size(); ++i) col.lookup.emplace(values[i], static_cast<int>(i));
        col.codes.reserve(cells.size());
        for (const auto& cell : cells) {
            auto it = col.lookup.find(std::string(trim(cell)));
            col.codes.push_back(it == col.lookup.end() ? kMissing : it->second);
        }
    }

    std::vector<FieldMeta> schema_;
    std::vector<Column> columns_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t row_count_ = 0;
};

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

namespace detail {

/// RFC 4180 record splitter. Returns records with their 1-based line numbers.
inline std::vector<std::vector<std::string>> parse_csv_records(std::string_view text, char delim) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    bool quoted_field = false;
    std::size_t i = 0;
    auto end_field = [&] {
        record.push_back(quoted_field ? field : std::string(trim(field)));
        field.clear();
        field_started = false;
        quoted_field = false;
    };
    auto end_record = [&] {
        end_field();
        const bool blank = record.size() == 1 && record[0].empty();
        if (!blank) records.push_back(std::move(record));
        record.clear();
    };
    while (i < text.size()) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    i += 2;
                    continue;
                }
                in_quotes = false;
            } else {
                field.push_back(c);
            }
            ++i;
            continue;
        }
        if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
            quoted_field = true;
        } else if (c == delim) {
            end_field();
        } else if (c == '\r' || c == '\n') {
            end_record();
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
        } else {
            if (!(c == ' ' && !field_started)) field_started = true;
            field.push_back(c);
        }
        ++i;
    }
    if (in_quotes) throw CsvError("unterminated quoted field", records.size());
    if (field_started || !record.empty() || !field.empty()) end_record();
    return records;
}

}  // namespace detail

inline DataTable load_csv(std::string_view bytes, const CsvOptions& options = {}) {
    if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xEF &&
        static_cast<unsigned char>(bytes[1]) == 0xBB && static_cast<unsigned char>(bytes[2]) == 0xBF)
        bytes.remove_prefix(3);
    auto records = detail::parse_csv_records(bytes, options.delimiter);
    if (records.empty()) throw SchemaError("missing header row");
    std::vector<std::string> header = std::move(records.front());
    records.erase(records.begin());
    if (records.empty()) throw EmptyTable();
    return DataTable::from_text(header, records, options);
}

// ---------------------------------------------------------------------------
// Query primitives
// ---------------------------------------------------------------------------

/// Rows satisfying every filter. A value absent from the column is a valid
/// empty result.
inline RowSet select_subspace(const DataTable& table, const Subspace& s) {
    std::vector<std::pair<std::size_t, int>> conditions;
    std::set<std::string> fields;
    for (const auto& f : s.filters) {
        const auto idx = table.field_index(f.field);
        if (!idx) throw FilterError("unknown filter field: " + f.field);
        if (table.schema()[*idx].kind == FieldKind::numerical)
            throw FilterError("cannot filter on numerical field: " + f.field);
        if (!fields.insert(f.field).second) throw FilterError("duplicate filter field: " + f.field);
        const auto code = table.value_code(*idx, f.value);
        if (!code) return {};
        conditions.emplace_back(*idx, *code);
    }
    RowSet rows;
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        bool ok = true;
        for (const auto& [col, code] : conditions)
            if (table.code(r, col) != code) {
                ok = false;
                break;
            }
        if (ok) rows.push_back(r);
    }
    return rows;
}

enum class Aggregate { count, sum, avg, max, min };

inline std::string_view to_string(Aggregate a) {
    switch (a) {
        case Aggregate::count: return "count";
        case Aggregate::sum: return "sum";
        case Aggregate::avg: return "avg";
        case Aggregate::max: return "max";
        case Aggregate::min: return "min";
    }
    return "?";
}

inline std::optional<Aggregate> parse_aggregate(std::string_view s) {
    if (s == "count") return Aggregate::count;
    if (s == "sum") return Aggregate::sum;
    if (s == "avg" || s == "average" || s == "mean") return Aggregate::avg;
    if (s == "max") return Aggregate::max;
    if (s == "min") return Aggregate::min;
    return std::nullopt;
}

inline constexpr std::array<Aggregate, 5> kAggregates{Aggregate::count, Aggregate::sum, Aggregate::avg,
                                                      Aggregate::max, Aggregate::min};

struct GroupValue {
    std::string key;
    std::vector<int> codes;
    double value = 0.0;
    std::size_t rows = 0;
};

namespace detail {

struct Accumulator {
    std::size_t rows = 0;
    std::size_t valid = 0;
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        ++rows;
        if (std::isnan(v)) return;
        ++valid;
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }

    double result(Aggregate agg) const {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        switch (agg) {
            case Aggregate::count: return static_cast<double>(rows);
            case Aggregate::sum: return sum;
            case Aggregate::avg: return valid ? sum / static_cast<double>(valid) : nan;
            case Aggregate::max: return valid ? hi : nan;
            case Aggregate::min: return valid ? lo : nan;
        }
        return nan;
    }
};

}  // namespace detail

/// Groups `rows` by the breakdown fields and aggregates the measure. Temporal
/// groupings come back chronologically; all others by descending aggregate,
/// then key. An empty `measure_field` is allowed only for count.
inline std::vector<GroupValue> group_and_aggregate(const DataTable& table, const RowSet& rows,
                                                   const std::vector<std::string>& breakdown,
                                                   std::string_view measure_field, Aggregate agg) {
    std::optional<std::size_t> measure_col;
    if (!measure_field.empty()) {
        measure_col = table.field_index(measure_field);
        if (!measure_col) throw SchemaError("unknown measure field: " + std::string(measure_field));
    }
    if (agg != Aggregate::count) {
        if (!measure_col || table.schema()[*measure_col].kind != FieldKind::numerical)
            throw TypeError("aggregate " + std::string(to_string(agg)) + " needs a numerical measure");
    }
    std::vector<std::size_t> cols;
    bool all_temporal = !breakdown.empty();
    for (const auto& b : breakdown) {
        const auto idx = table.field_index(b);
        if (!idx) throw SchemaError("unknown breakdown field: " + b);
        const FieldKind kind = table.schema()[*idx].kind;
        if (kind == FieldKind::numerical) throw TypeError("breakdown field must be categorical or temporal: " + b);
        if (kind != FieldKind::temporal) all_temporal = false;
        cols.push_back(*idx);
    }

    const bool numeric_measure = measure_col && table.schema()[*measure_col].kind == FieldKind::numerical;
    std::map<std::vector<int>, detail::Accumulator> groups;
    for (const std::size_t r : rows) {
        std::vector<int> key;
        key.reserve(cols.size());
        bool missing = false;
        for (const std::size_t c : cols) {
            const int code = table.code(r, c);
            if (code == DataTable::kMissing) {
                missing = true;
                break;
            }
            key.push_back(code);
        }
        if (missing) continue;
        groups[key].add(numeric_measure ? table.number(r, *measure_col) : 0.0);
    }

    std::vector<GroupValue> out;
    out.reserve(groups.size());
    for (const auto& [codes, acc] : groups) {
        GroupValue g;
        g.codes = codes;
        std::vector<std::string> parts;
        for (std::size_t i = 0; i < codes.size(); ++i)
            parts.push_back(table.schema()[cols[i]].distinct_values[static_cast<std::size_t>(codes[i])]);
        g.key = join(parts, ", ");
        g.value = acc.result(agg);
        g.rows = acc.rows;
        out.push_back(std::move(g));
    }
    if (!all_temporal) {
        std::stable_sort(out.begin(), out.end(), [](const GroupValue& a, const GroupValue& b) {
            const bool an = std::isnan(a.value), bn = std::isnan(b.value);
            if (an != bn) return bn;
            if (!an && a.value != b.value) return a.value > b.value;
            return a.key < b.key;
        });
    }
    return out;
}

/// Aggregate over a row set with no breakdown.
inline double aggregate_rows(const DataTable& table, const RowSet& rows, std::string_view measure_field,
                             Aggregate agg) {
    const auto g = group_and_aggregate(table, rows, {}, measure_field, agg);
    if (g.empty()) return agg == Aggregate::count || agg == Aggregate::sum ? 0.0 : std::numeric_limits<double>::quiet_NaN();
    return g.front().value;
}

}  // namespace factweaver
