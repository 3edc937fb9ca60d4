#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "amlsim/core.hpp"
#include "amlsim/csv.hpp"

namespace amlsim {

struct EntitySpec {
    EntityKind kind = EntityKind::Licit;
    int instance = 1;

    friend auto operator<=>(const EntitySpec&, const EntitySpec&) = default;
};

inline std::string to_string(const EntitySpec& e) {
    return std::string(to_string(e.kind)) + " " + std::to_string(e.instance);
}

// Optional per-row transaction shape hint (sixth schema column).
enum class RowStyle { Auto, Pattern, InOut, Coinjoin };

struct SidePattern {
    std::size_t inputs = 1;
    std::size_t outputs = 1;
    friend bool operator==(const SidePattern&, const SidePattern&) = default;
};

struct SchemaRow {
    EntitySpec sender;
    EntitySpec receiver;
    std::size_t quantity = 1;
    Timestamp latest_ts = 0;
    std::size_t min_inputs = 1;
    RowStyle style = RowStyle::Auto;
    std::optional<SidePattern> pattern;

    friend bool operator==(const SchemaRow&, const SchemaRow&) = default;
};

enum class SchemaFormat { Csv, Json };

// Kinds that may be funded from outside the simulated scope when they send
// before receiving anything.
constexpr bool outer_funding_eligible(EntityKind k) {
    return k != EntityKind::InterimAddress && k != EntityKind::SingleUse && k != EntityKind::Escrow &&
           k != EntityKind::OuterLayer;
}

inline EntitySpec parse_entity_spec(std::string_view text, std::vector<std::string>* warnings = nullptr) {
    std::string s = csv::trim(text);
    if (s.empty()) throw ParseError("empty entity");
    // Trailing integer is the instance; everything before it names the kind.
    std::size_t end = s.size();
    while (end > 0 && std::isdigit(static_cast<unsigned char>(s[end - 1]))) --end;
    std::string name = csv::trim(std::string_view(s).substr(0, end));
    std::string digits = s.substr(end);
    // "set-2" style suffixes.
    for (std::string_view suffix : {" set-", " set", "set-", "-", " #"}) {
        if (name.size() >= suffix.size() && name.ends_with(suffix)) {
            name = csv::trim(std::string_view(name).substr(0, name.size() - suffix.size()));
            break;
        }
    }
    auto kind = parse_entity_kind(name);
    if (!kind) throw ParseError("unknown entity kind '" + name + "'");
    EntitySpec e{*kind, 1};
    if (digits.empty()) {
        if (warnings) warnings->push_back("entity '" + s + "' has no instance number; using 1");
    } else {
        e.instance = std::stoi(digits);
        if (e.instance < 1) throw ParseError("instance must be positive in '" + s + "'");
    }
    return e;
}

namespace detail {

inline std::size_t parse_positive(const std::string& raw, const char* what) {
    const std::string s = csv::trim(raw);
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        throw ParseError(std::string(what) + " '" + s + "' is not an integer");
    }
    if (pos != s.size()) throw ParseError(std::string(what) + " '" + s + "' is not an integer");
    if (v < 1) throw ParseError(std::string(what) + " must be at least 1, got " + s);
    return static_cast<std::size_t>(v);
}

inline void parse_style(const std::string& raw, SchemaRow& row) {
    std::string s = detail::normalize_name(raw);
    if (s.empty() || s == "auto") return;
    if (s == "inout" || s == "in+out") {
        row.style = RowStyle::InOut;
    } else if (s == "coinjoin" || s == "cj") {
        row.style = RowStyle::Coinjoin;
    } else {
        const auto x = s.find('x');
        if (x == std::string::npos) throw ParseError("unknown pattern '" + raw + "'");
        row.style = RowStyle::Pattern;
        row.pattern = SidePattern{parse_positive(s.substr(0, x), "pattern inputs"),
                                  parse_positive(s.substr(x + 1), "pattern outputs")};
    }
}

inline std::string style_text(const SchemaRow& r) {
    switch (r.style) {
        case RowStyle::Auto: return "";
        case RowStyle::InOut: return "inout";
        case RowStyle::Coinjoin: return "coinjoin";
        case RowStyle::Pattern:
            return std::to_string(r.pattern->inputs) + "x" + std::to_string(r.pattern->outputs);
    }
    return "";
}

inline std::string timestamp_text(Timestamp t) {
    std::string s = format_iso8601(t);
    if (t % kSecondsPerDay == 0) s.resize(10);
    return s;
}

inline SchemaRow make_row(const std::string& sender, const std::string& receiver, const std::string& quantity,
                          const std::string& ts, const std::string& min_inputs, const std::string& pattern,
                          std::size_t row_no, std::vector<std::string>* warnings) {
    try {
        SchemaRow r;
        r.sender = parse_entity_spec(sender, warnings);
        r.receiver = parse_entity_spec(receiver, warnings);
        if (r.sender.kind == EntityKind::OuterLayer || r.receiver.kind == EntityKind::OuterLayer)
            throw ParseError("outer-layer accounts cannot be named in a schema");
        r.quantity = parse_positive(quantity, "quantity");
        r.latest_ts = parse_timestamp(ts);
        if (!csv::trim(min_inputs).empty()) r.min_inputs = parse_positive(min_inputs, "min_inputs");
        parse_style(pattern, r);
        return r;
    } catch (const ParseError& e) {
        throw ParseError(e.what(), row_no);
    } catch (const std::exception& e) {
        throw ParseError(e.what(), row_no);
    }
}

}  // namespace detail

inline std::vector<SchemaRow> parse_schema_text(const std::string& text, SchemaFormat format,
                                                std::vector<std::string>* warnings = nullptr) {
    std::vector<SchemaRow> rows;
    if (format == SchemaFormat::Csv) {
        std::istringstream in(text);
        const auto lines = csv::read_lines(in);
        if (lines.empty()) throw ParseError("schema is empty");
        auto header = csv::split_line(lines.front());
        std::map<std::string, std::size_t> col;
        for (std::size_t i = 0; i < header.size(); ++i) col[detail::normalize_name(header[i])] = i;
        for (const char* required : {"sender", "receiver", "quantity", "timestamp"})
            if (!col.contains(required)) throw ParseError(std::string("schema header lacks column '") + required + "'");
        if (lines.size() == 1) throw ParseError("schema has a header but no rows");
        for (std::size_t li = 1; li < lines.size(); ++li) {
            const std::size_t row_no = li;
            std::vector<std::string> f;
            try {
                f = csv::split_line(lines[li]);
            } catch (const ParseError& e) {
                throw ParseError(e.what(), row_no);
            }
            if (f.size() < 4) throw ParseError("expected at least 4 fields", row_no);
            auto get = [&](const char* name) -> std::string {
                auto it = col.find(name);
                if (it == col.end() || it->second >= f.size()) return "";
                return f[it->second];
            };
            rows.push_back(detail::make_row(get("sender"), get("receiver"), get("quantity"), get("timestamp"),
                                            get("mininputs"), get("pattern"), row_no, warnings));
        }
    } else {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const std::exception& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_array()) throw ParseError("JSON schema must be an array of rows");
        if (j.empty()) throw ParseError("schema is empty");
        std::size_t row_no = 0;
        for (const auto& o : j) {
            ++row_no;
            if (!o.is_object()) throw ParseError("row is not an object", row_no);
            auto get = [&](const char* name) -> std::string {
                if (!o.contains(name)) return "";
                const auto& v = o.at(name);
                if (v.is_string()) return v.get<std::string>();
                if (v.is_number_integer()) return std::to_string(v.get<long long>());
                if (v.is_null()) return "";
                return v.dump();
            };
            for (const char* required : {"sender", "receiver", "quantity", "timestamp"})
                if (!o.contains(required)) throw ParseError(std::string("missing key '") + required + "'", row_no);
            rows.push_back(detail::make_row(get("sender"), get("receiver"), get("quantity"), get("timestamp"),
                                            get("min_inputs"), get("pattern"), row_no, warnings));
        }
    }
    return rows;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SimError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline SchemaFormat format_from_path(const std::string& path) {
    return path.size() >= 5 && path.ends_with(".json") ? SchemaFormat::Json : SchemaFormat::Csv;
}

inline std::vector<SchemaRow> parse_schema(const std::string& path, SchemaFormat format,
                                           std::vector<std::string>* warnings = nullptr) {
    return parse_schema_text(read_file(path), format, warnings);
}

inline std::string serialize_schema(const std::vector<SchemaRow>& rows, SchemaFormat format) {
    const bool any_style = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.style != RowStyle::Auto; });
    if (format == SchemaFormat::Csv) {
        std::string out = "sender,receiver,quantity,timestamp,min_inputs";
        if (any_style) out += ",pattern";
        out += "\n";
        for (const auto& r : rows) {
            out += to_string(r.sender) + "," + to_string(r.receiver) + "," + std::to_string(r.quantity) + "," +
                   detail::timestamp_text(r.latest_ts) + "," + std::to_string(r.min_inputs);
            if (any_style) out += "," + detail::style_text(r);
            out += "\n";
        }
        return out;
    }
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json o = {{"sender", to_string(r.sender)},
                            {"receiver", to_string(r.receiver)},
                            {"quantity", r.quantity},
                            {"timestamp", detail::timestamp_text(r.latest_ts)},
                            {"min_inputs", r.min_inputs}};
        if (r.style != RowStyle::Auto) o["pattern"] = detail::style_text(r);
        j.push_back(std::move(o));
    }
    return j.dump(2) + "\n";
}

// Multiplies every quantity by `factor` (at least 1 per row).
inline std::vector<SchemaRow> scale_quantities(std::vector<SchemaRow> rows, double factor) {
    if (!(factor > 0)) throw ConfigError("quantity scale must be positive");
    for (auto& r : rows)
        r.quantity = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(r.quantity) * factor)));
    return rows;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct ValidationIssue {
    enum class Severity { Warning, Error };
    Severity severity = Severity::Warning;
    std::size_t row = 0;  // 1-based
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool ok() const {
        return std::none_of(issues.begin(), issues.end(),
                            [](const auto& i) { return i.severity == ValidationIssue::Severity::Error; });
    }
    std::size_t count(ValidationIssue::Severity s) const {
        return static_cast<std::size_t>(
            std::count_if(issues.begin(), issues.end(), [s](const auto& i) { return i.severity == s; }));
    }
};

// Upper bound on single-use outputs per transaction; also used by pool sizing.
inline constexpr std::size_t kSingleUseSideMax = 3;

inline ValidationReport validate_schema(const std::vector<SchemaRow>& rows) {
    using Sev = ValidationIssue::Severity;
    ValidationReport rep;
    std::map<EntitySpec, Timestamp> latest_seen;
    std::set<EntitySpec> funded;
    struct SingleUseUse {
        std::size_t sends = 0;
        std::size_t capacity = 0;
        std::size_t first_row = 0;
    };
    std::map<EntitySpec, SingleUseUse> single_use;

    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const std::size_t row_no = i + 1;

        for (const auto* e : {&r.sender, &r.receiver}) {
            auto it = latest_seen.find(*e);
            if (it != latest_seen.end() && r.latest_ts < it->second)
                rep.issues.push_back({Sev::Warning, row_no,
                                      "timestamp " + detail::timestamp_text(r.latest_ts) + " precedes an earlier row's " +
                                          detail::timestamp_text(it->second) + " for " + to_string(*e)});
        }
        for (const auto* e : {&r.sender, &r.receiver}) {
            auto& t = latest_seen[*e];
            t = std::max(t, r.latest_ts);
        }

        // Pools that must hold funds when this row runs.
        std::vector<EntitySpec> spenders{r.sender};
        if (r.style == RowStyle::InOut || r.style == RowStyle::Coinjoin) spenders.push_back(r.receiver);
        for (const auto& s : spenders) {
            if (!funded.contains(s) && !outer_funding_eligible(s.kind))
                rep.issues.push_back({Sev::Error, row_no,
                                      to_string(s) + " sends before it is ever funded and cannot be funded from "
                                                     "the outer layer"});
        }

        for (const auto* e : {&r.sender, &r.receiver}) {
            if (e->kind != EntityKind::SingleUse) continue;
            auto& u = single_use[*e];
            if (!u.first_row) u.first_row = row_no;
            if (r.style == RowStyle::InOut || r.style == RowStyle::Coinjoin)
                rep.issues.push_back({Sev::Error, row_no,
                                      to_string(*e) + " would send and receive in one transaction"});
        }
        if (r.sender.kind == EntityKind::SingleUse) {
            auto& u = single_use[r.sender];
            u.sends += r.quantity * r.min_inputs;
            if (u.sends > u.capacity)
                rep.issues.push_back({Sev::Error, row_no,
                                      to_string(r.sender) + " needs " + std::to_string(u.sends) +
                                          " single-use sends but at most " + std::to_string(u.capacity) +
                                          " of its addresses can have received by then"});
        }
        if (r.receiver.kind == EntityKind::SingleUse)
            single_use[r.receiver].capacity += r.quantity * kSingleUseSideMax;

        funded.insert(r.receiver);
        if (outer_funding_eligible(r.sender.kind)) funded.insert(r.sender);
    }
    return rep;
}

}  // namespace amlsim
