#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "beamsim/array_model.hpp"
#include "beamsim/stepsize.hpp"

namespace beamsim {

struct MechanismSpec {
    std::string label;
    StepSizeMechanism mechanism;
};

struct ExperimentSpec {
    ScenarioConfig scenario;
    std::vector<MechanismSpec> mechanisms;
};

/// Parse or validation failure; line is 0 when no single line is to blame.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::size_t line, const std::string& message)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// ---------------------------------------------------------------------------
// A small TOML subset: [table], [dotted.table], [[array-of-tables]],
// key = value with strings, booleans, integers, floats (incl. inf/nan), and
// '#' comments. Inline tables, arrays and multi-line strings are not needed by
// the scenario files and are rejected.

namespace toml {

struct Value {
    std::variant<bool, std::int64_t, double, std::string> data;
    std::size_t line = 0;
};

struct Table {
    std::string name;  // "" for the root table
    bool array_element = false;
    std::size_t line = 0;
    std::vector<std::pair<std::string, Value>> entries;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline bool is_bare_key_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
}

inline void check_key(std::string_view key, std::size_t line) {
    if (key.empty()) throw ConfigError(line, "empty key");
    for (char c : key) {
        if (!is_bare_key_char(c)) throw ConfigError(line, "invalid character in key '" + std::string(key) + "'");
    }
}

inline void check_table_name(std::string_view name, std::size_t line) {
    if (name.empty()) throw ConfigError(line, "empty table name");
    std::size_t start = 0;
    while (true) {
        const auto dot = name.find('.', start);
        check_key(trim(name.substr(start, dot == std::string_view::npos ? dot : dot - start)), line);
        if (dot == std::string_view::npos) break;
        start = dot + 1;
    }
}

// Drops a trailing comment that is not inside a string.
inline std::string_view strip_comment(std::string_view s) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string && c == '\\') {
            ++i;
        } else if (c == '"') {
            in_string = !in_string;
        } else if (c == '#' && !in_string) {
            return s.substr(0, i);
        }
    }
    return s;
}

inline std::string parse_string(std::string_view s, std::size_t line) {
    if (s.size() < 2 || s.back() != '"') throw ConfigError(line, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        char c = s[i];
        if (c == '"') throw ConfigError(line, "unexpected quote inside string");
        if (c == '\\') {
            if (i + 2 >= s.size()) throw ConfigError(line, "dangling escape in string");
            switch (s[++i]) {
                case '"': c = '"'; break;
                case '\\': c = '\\'; break;
                case 'n': c = '\n'; break;
                case 't': c = '\t'; break;
                default: throw ConfigError(line, "unsupported escape in string");
            }
        }
        out.push_back(c);
    }
    return out;
}

inline Value parse_value(std::string_view s, std::size_t line) {
    Value v;
    v.line = line;
    if (s.empty()) throw ConfigError(line, "missing value");
    if (s.front() == '"') {
        v.data = parse_string(s, line);
        return v;
    }
    if (s == "true" || s == "false") {
        v.data = (s == "true");
        return v;
    }
    std::string digits;
    for (char c : s) {
        if (c != '_') digits.push_back(c);
    }
    std::string_view body = digits;
    const bool negative = !body.empty() && body.front() == '-';
    std::string_view unsigned_body = (!body.empty() && (body.front() == '+' || body.front() == '-')) ? body.substr(1) : body;
    if (unsigned_body == "inf" || unsigned_body == "nan") {
        const double special = unsigned_body == "inf" ? std::numeric_limits<double>::infinity()
                                                      : std::numeric_limits<double>::quiet_NaN();
        v.data = negative ? -special : special;
        return v;
    }
    const bool looks_float = unsigned_body.find_first_of(".eE") != std::string_view::npos;
    if (!looks_float) {
        std::int64_t i = 0;
        const std::string_view parse_from = body.front() == '+' ? body.substr(1) : body;
        const auto [ptr, ec] = std::from_chars(parse_from.data(), parse_from.data() + parse_from.size(), i);
        if (ec == std::errc() && ptr == parse_from.data() + parse_from.size()) {
            v.data = i;
            return v;
        }
        if (ec == std::errc::result_out_of_range) throw ConfigError(line, "integer out of range: " + std::string(s));
        throw ConfigError(line, "cannot parse value: " + std::string(s));
    }
    // strtod is locale-sensitive, but accepts exactly the decimal forms used here under "C".
    const std::string copy(body.front() == '+' ? body.substr(1) : body);
    char* end = nullptr;
    const double d = std::strtod(copy.c_str(), &end);
    if (end != copy.c_str() + copy.size() || copy.empty() || copy.front() == '.' || copy.back() == '.') {
        throw ConfigError(line, "cannot parse value: " + std::string(s));
    }
    v.data = d;
    return v;
}

}  // namespace detail

/// Parses text into tables in document order; tables[0] is the root table.
inline std::vector<Table> parse(std::string_view text) {
    std::vector<Table> tables(1);
    std::set<std::string> seen_tables;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        const auto raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        const auto line = detail::trim(detail::strip_comment(raw));
        if (line.empty()) continue;

        if (line.front() == '[') {
            const bool array = line.size() >= 2 && line[1] == '[';
            const std::size_t open = array ? 2 : 1;
            if (line.size() < 2 * open + 1 || line.substr(line.size() - open) != (array ? "]]" : "]")) {
                throw ConfigError(line_no, "malformed table header");
            }
            const auto name = detail::trim(line.substr(open, line.size() - 2 * open));
            detail::check_table_name(name, line_no);
            Table t;
            t.name = std::string(name);
            t.array_element = array;
            t.line = line_no;
            if (!array && !seen_tables.insert(t.name).second) {
                throw ConfigError(line_no, "duplicate table [" + t.name + "]");
            }
            tables.push_back(std::move(t));
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(line_no, "expected 'key = value'");
        const auto key = detail::trim(line.substr(0, eq));
        detail::check_key(key, line_no);
        auto& table = tables.back();
        for (const auto& [k, _] : table.entries) {
            if (k == key) throw ConfigError(line_no, "duplicate key '" + std::string(key) + "'");
        }
        table.entries.emplace_back(std::string(key), detail::parse_value(detail::trim(line.substr(eq + 1)), line_no));
    }
    return tables;
}

}  // namespace toml

// ---------------------------------------------------------------------------

namespace detail {

/// Typed, consume-once view of a table; leftover keys are errors.
class TableReader {
public:
    explicit TableReader(const toml::Table& table) : table_(table) {}

    [[nodiscard]] const toml::Value* find(std::string_view key) {
        for (const auto& [k, v] : table_.entries) {
            if (k == key) {
                used_.insert(k);
                return &v;
            }
        }
        return nullptr;
    }

    [[nodiscard]] bool has(std::string_view key) const {
        for (const auto& [k, v] : table_.entries) {
            if (k == key) return true;
        }
        return false;
    }

    double number(std::string_view key, std::optional<double> fallback = std::nullopt) {
        const auto* v = find(key);
        if (v == nullptr) return require(key, fallback);
        if (const auto* d = std::get_if<double>(&v->data)) return *d;
        if (const auto* i = std::get_if<std::int64_t>(&v->data)) return static_cast<double>(*i);
        throw ConfigError(v->line, where() + ": '" + std::string(key) + "' must be a number");
    }

    std::int64_t integer(std::string_view key, std::optional<std::int64_t> fallback = std::nullopt) {
        const auto* v = find(key);
        if (v == nullptr) return require(key, fallback);
        if (const auto* i = std::get_if<std::int64_t>(&v->data)) return *i;
        throw ConfigError(v->line, where() + ": '" + std::string(key) + "' must be an integer");
    }

    std::size_t count(std::string_view key, std::optional<std::size_t> fallback = std::nullopt) {
        if (!has(key)) return require(key, fallback);
        const auto i = integer(key);
        if (i < 0) throw ConfigError(line_of(key), where() + ": '" + std::string(key) + "' must be non-negative");
        return static_cast<std::size_t>(i);
    }

    bool boolean(std::string_view key, bool fallback) {
        const auto* v = find(key);
        if (v == nullptr) return fallback;
        if (const auto* b = std::get_if<bool>(&v->data)) return *b;
        throw ConfigError(v->line, where() + ": '" + std::string(key) + "' must be true or false");
    }

    std::string string(std::string_view key, std::optional<std::string> fallback = std::nullopt) {
        const auto* v = find(key);
        if (v == nullptr) return require(key, fallback);
        if (const auto* s = std::get_if<std::string>(&v->data)) return *s;
        throw ConfigError(v->line, where() + ": '" + std::string(key) + "' must be a string");
    }

    [[nodiscard]] std::size_t line_of(std::string_view key) const {
        for (const auto& [k, v] : table_.entries) {
            if (k == key) return v.line;
        }
        return table_.line;
    }

    [[nodiscard]] std::size_t line() const { return table_.line; }

    [[nodiscard]] std::string where() const {
        if (table_.name.empty()) return "top level";
        return table_.array_element ? "[[" + table_.name + "]]" : "[" + table_.name + "]";
    }

    void finish() const {
        for (const auto& [k, v] : table_.entries) {
            if (!used_.contains(k)) throw ConfigError(v.line, where() + ": unknown key '" + k + "'");
        }
    }

private:
    template <typename T>
    T require(std::string_view key, const std::optional<T>& fallback) const {
        if (fallback) return *fallback;
        throw ConfigError(table_.line, where() + ": missing required key '" + std::string(key) + "'");
    }

    const toml::Table& table_;
    std::set<std::string> used_;
};

template <typename F>
auto with_line(std::size_t line, F&& build) {
    try {
        return build();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(line, e.what());
    }
}

inline StepSizeBounds read_bounds(TableReader& r) { return {r.number("mu_min"), r.number("mu_max")}; }

inline StepSizeMechanism read_mechanism(TableReader& r, const std::string& label) {
    const std::string kind = r.string("kind", label);
    if (kind == "fss") {
        FssParams p;
        p.mu = r.number("mu");
        return with_line(r.line(), [&] { validate(p); return StepSizeMechanism(Fss(p)); });
    }
    if (kind == "mass") {
        MassParams p;
        p.alpha = r.number("alpha");
        p.gamma = r.number("gamma");
        p.mu0 = r.number("mu0");
        p.bounds = read_bounds(r);
        return with_line(r.line(), [&] { validate(p); return StepSizeMechanism(Mass(p)); });
    }
    if (kind == "taass") {
        TaassParams p;
        p.alpha = r.number("alpha");
        p.beta = r.number("beta");
        p.gamma = r.number("gamma");
        p.mu0 = r.number("mu0");
        p.v0 = r.number("v0", 0.0);
        p.bounds = read_bounds(r);
        return with_line(r.line(), [&] { validate(p); return StepSizeMechanism(Taass(p)); });
    }
    if (kind == "ass") {
        AssParams p;
        p.mu0 = r.number("mu0");
        p.rho = r.number("rho");
        p.bounds = read_bounds(r);
        return with_line(r.line(), [&] { validate(p); return StepSizeMechanism(Ass(p)); });
    }
    throw ConfigError(r.line_of("kind"), r.where() + ": unknown mechanism kind '" + kind +
                                             "' (expected fss, ass, mass or taass)");
}

}  // namespace detail

/**
 * Builds a validated ExperimentSpec from scenario text.
 *
 *   scenario_id = "scenario1"
 *   [array]      sensors, spacing_over_wavelength (0.5), allow_endfire (false)
 *   [noise]      power                      linear sigma_n^2
 *   [[sources]]  doa_deg, power_db_rel_soi | power, active_from (1), active_until (unbounded)
 *   [mismatch]   offset_deg (0)
 *   [run]        snapshots, runs, seed
 *   [mechanism.<label>]  kind (= label) plus the parameters of that kind
 *
 * The first [[sources]] entry is the signal of interest; its linear power
 * defaults to 1 and interferer powers in dB are relative to it.
 */
inline ExperimentSpec parse_config(std::string_view text) {
    const auto tables = toml::parse(text);
    ExperimentSpec spec;
    auto& sc = spec.scenario;

    struct PendingSource {
        double doa_deg;
        std::optional<double> power_linear;
        std::optional<double> power_db;
        std::size_t active_from;
        std::size_t active_until;
        std::size_t line;
    };
    std::vector<PendingSource> pending;
    bool have_array = false;
    bool have_noise = false;
    bool have_run = false;
    std::set<std::string> labels;

    for (const auto& table : tables) {
        detail::TableReader r(table);
        const std::string& name = table.name;
        if (table.array_element && name != "sources") {
            throw ConfigError(table.line, "unknown array of tables [[" + name + "]]");
        }
        if (name.empty()) {
            sc.id = r.string("scenario_id", std::string("scenario"));
        } else if (name == "array") {
            have_array = true;
            sc.geometry.sensors = r.count("sensors");
            sc.geometry.spacing_over_wavelength = r.number("spacing_over_wavelength", 0.5);
            sc.allow_endfire = r.boolean("allow_endfire", false);
        } else if (name == "noise") {
            have_noise = true;
            sc.noise_power = r.number("power");
        } else if (name == "sources") {
            PendingSource src{};
            src.line = table.line;
            src.doa_deg = r.number("doa_deg");
            if (r.has("power")) src.power_linear = r.number("power");
            if (r.has("power_db_rel_soi")) src.power_db = r.number("power_db_rel_soi");
            if (src.power_linear && src.power_db) {
                throw ConfigError(table.line, "[[sources]]: give either 'power' or 'power_db_rel_soi', not both");
            }
            src.active_from = r.count("active_from", 1);
            src.active_until = r.count("active_until", kUnbounded);
            pending.push_back(src);
        } else if (name == "mismatch") {
            sc.presumed_doa_offset_deg = r.number("offset_deg", 0.0);
        } else if (name == "run") {
            have_run = true;
            sc.snapshots = r.count("snapshots");
            sc.runs = r.count("runs");
            const auto seed = r.integer("seed");
            if (seed < 0) throw ConfigError(r.line_of("seed"), "[run]: 'seed' must be non-negative");
            sc.master_seed = static_cast<std::uint64_t>(seed);
        } else if (name.starts_with("mechanism.") && name.size() > 10) {
            const std::string label = name.substr(10);
            if (!labels.insert(label).second) throw ConfigError(table.line, "duplicate mechanism '" + label + "'");
            spec.mechanisms.push_back({label, detail::read_mechanism(r, label)});
        } else {
            throw ConfigError(table.line, "unknown table [" + name + "]");
        }
        r.finish();
    }

    if (!have_array) throw ConfigError(0, "missing [array] table");
    if (!have_noise) throw ConfigError(0, "missing [noise] table");
    if (!have_run) throw ConfigError(0, "missing [run] table");
    if (pending.empty()) throw ConfigError(0, "at least one [[sources]] entry is required");
    if (spec.mechanisms.empty()) throw ConfigError(0, "at least one [mechanism.<name>] table is required");

    const auto& soi = pending.front();
    if (soi.power_db && *soi.power_db != 0.0) {
        throw ConfigError(soi.line, "[[sources]]: the first source is the reference; its power_db_rel_soi must be 0");
    }
    const double soi_power = soi.power_linear.value_or(1.0);
    for (const auto& p : pending) {
        SourceSpec src;
        src.doa_deg = p.doa_deg;
        src.power = p.power_linear ? *p.power_linear : soi_power * from_db(p.power_db.value_or(0.0));
        src.active_from = p.active_from;
        src.active_until = p.active_until;
        sc.sources.push_back(src);
        detail::with_line(p.line, [&] {
            detail::check_doa(src.doa_deg, sc.allow_endfire, "[[sources]]");
            if (!(src.power > 0.0)) throw std::invalid_argument("[[sources]]: power must be > 0");
            if (!(src.active_from >= 1 && src.active_from < src.active_until)) {
                throw std::invalid_argument("[[sources]]: need 1 <= active_from < active_until");
            }
            return 0;
        });
    }
    detail::with_line(0, [&] { validate(sc); return 0; });
    return spec;
}

}  // namespace beamsim
