#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "amlsim/core.hpp"
#include "amlsim/csv.hpp"
#include "amlsim/digest.hpp"
#include "amlsim/ledger.hpp"
#include "amlsim/simulation.hpp"

namespace amlsim {

inline constexpr std::string_view kToolVersion = "1.0.0";

struct AccountInfo {
    std::string id;
    EntityKind kind = EntityKind::Licit;
    int instance = 1;
    std::string pool;
    EntityKind provenance = EntityKind::Licit;  // kind whose category the account carries
    std::vector<Satoshi> genesis;               // endowments without a creating record
};

// A generated (or re-read) dataset. Record account references index `accounts`.
struct Dataset {
    std::uint64_t seed = 0;
    std::vector<AccountInfo> accounts;
    std::vector<TransactionRecord> records;
    std::vector<TraceEntry> trace;
    std::size_t pending_trades = 0;
    bool partial = false;
    std::string error;
    std::string schema_digest;
    std::string config_digest;

    AccountRef find(std::string_view id) const {
        if (index_.empty())
            for (std::size_t i = 0; i < accounts.size(); ++i) index_.emplace(accounts[i].id, make_ref(i));
        auto it = index_.find(std::string(id));
        if (it == index_.end()) throw UnknownAccount("unknown account " + std::string(id));
        return it->second;
    }
    void reindex() const { index_.clear(); }

private:
    mutable std::unordered_map<std::string, AccountRef> index_;
};

// Shortest text that reads back to the same double.
inline std::string format_number(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw SimError("number formatting failed");
    return std::string(buf, p);
}

inline double parse_number(std::string_view s) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ParseError("bad number '" + std::string(s) + "'");
    return v;
}

struct RunManifest {
    std::uint64_t seed = 0;
    std::string schema_digest;
    std::string config_digest;
    std::string version{kToolVersion};
    std::size_t transactions = 0;
    std::size_t accounts = 0;
    std::map<std::string, std::size_t> accounts_per_entity;
    std::map<std::string, std::size_t> records_per_entity;  // records touching at least one account of the kind
    std::size_t pending_trades = 0;
    bool partial = false;
    std::string error;
    std::map<std::string, std::string> files;  // file name -> sha256
};

inline RunManifest make_manifest(const Dataset& d) {
    RunManifest m;
    m.seed = d.seed;
    m.schema_digest = d.schema_digest;
    m.config_digest = d.config_digest;
    m.transactions = d.records.size();
    m.accounts = d.accounts.size();
    for (const auto& a : d.accounts) ++m.accounts_per_entity[std::string(to_string(a.kind))];
    for (const auto& r : d.records) {
        std::array<bool, kEntityKindCount> seen{};
        for (auto a : r.inputs) seen[static_cast<std::size_t>(d.accounts[index_of(a)].kind)] = true;
        for (auto a : r.outputs) seen[static_cast<std::size_t>(d.accounts[index_of(a)].kind)] = true;
        for (std::size_t k = 0; k < kEntityKindCount; ++k)
            if (seen[k]) ++m.records_per_entity[std::string(to_string(kAllEntityKinds[k]))];
    }
    m.pending_trades = d.pending_trades;
    m.partial = d.partial;
    m.error = d.error;
    return m;
}

inline nlohmann::json to_json(const RunManifest& m) {
    return {{"tool", "amlsim"},
            {"version", m.version},
            {"seed", m.seed},
            {"schema_digest", m.schema_digest},
            {"config_digest", m.config_digest},
            {"counts",
             {{"transactions", m.transactions},
              {"accounts", m.accounts},
              {"accounts_per_entity", m.accounts_per_entity},
              {"records_per_entity", m.records_per_entity}}},
            {"pending_trades", m.pending_trades},
            {"partial", m.partial},
            {"error", m.error},
            {"files", m.files}};
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
    RunManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.schema_digest = j.value("schema_digest", "");
    m.config_digest = j.value("config_digest", "");
    m.version = j.value("version", "");
    const auto& c = j.at("counts");
    m.transactions = c.at("transactions").get<std::size_t>();
    m.accounts = c.at("accounts").get<std::size_t>();
    m.accounts_per_entity = c.value("accounts_per_entity", std::map<std::string, std::size_t>{});
    m.records_per_entity = c.value("records_per_entity", std::map<std::string, std::size_t>{});
    m.pending_trades = j.value("pending_trades", std::size_t{0});
    m.partial = j.value("partial", false);
    m.error = j.value("error", "");
    m.files = j.value("files", std::map<std::string, std::string>{});
    return m;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace detail {

inline std::string id_array(const Dataset& d, const std::vector<AccountRef>& refs) {
    std::string s = "[";
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (i) s += ',';
        s += '"' + d.accounts[index_of(refs[i])].id + '"';
    }
    return s + "]";
}

inline std::string number_array(const std::vector<Satoshi>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += format_number(v[i]);
    }
    return s + "]";
}

// Writes through a temporary file in the same directory, then renames.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw SimError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw SimError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw SimError("cannot rename " + tmp.string() + ": " + ec.message());
}

inline std::vector<AccountRef> refs_from_json(const Dataset& d, const nlohmann::json& arr) {
    std::vector<AccountRef> out;
    for (const auto& x : arr) out.push_back(d.find(x.get<std::string>()));
    return out;
}

inline std::vector<Satoshi> values_from_json(const nlohmann::json& arr) {
    std::vector<Satoshi> out;
    for (const auto& x : arr) out.push_back(x.get<double>());
    return out;
}

}  // namespace detail

inline constexpr std::string_view kTransactionHeader = "hash,inputs,outputs,in_values,out_values,timestamp,fee";

inline std::string transactions_csv(const Dataset& d) {
    std::string out(kTransactionHeader);
    out += '\n';
    for (const auto& r : d.records) {
        out += r.hash;
        out += ',' + csv::escape(detail::id_array(d, r.inputs));
        out += ',' + csv::escape(detail::id_array(d, r.outputs));
        out += ',' + csv::escape(detail::number_array(r.in_values));
        out += ',' + csv::escape(detail::number_array(r.out_values));
        out += ',' + format_iso8601(r.timestamp);
        out += ',' + format_number(r.fee);
        out += '\n';
    }
    return out;
}

inline std::string transactions_jsonl(const Dataset& d) {
    std::string out;
    for (const auto& r : d.records) {
        out += "{\"hash\":\"" + r.hash + "\"";
        out += ",\"inputs\":" + detail::id_array(d, r.inputs);
        out += ",\"outputs\":" + detail::id_array(d, r.outputs);
        out += ",\"in_values\":" + detail::number_array(r.in_values);
        out += ",\"out_values\":" + detail::number_array(r.out_values);
        out += ",\"timestamp\":\"" + format_iso8601(r.timestamp) + "\"";
        out += ",\"fee\":" + format_number(r.fee) + "}\n";
    }
    return out;
}

inline std::string accounts_csv(const Dataset& d) {
    std::string out = "id,kind,instance,pool,provenance,category,genesis\n";
    for (const auto& a : d.accounts) {
        out += a.id + ',' + std::string(to_string(a.kind)) + ',' + std::to_string(a.instance) + ',' + csv::escape(a.pool) +
               ',' + std::string(to_string(a.provenance)) + ',' +
               (default_illicit_kind(a.provenance) ? "illicit" : "licit") + ',' +
               csv::escape(detail::number_array(a.genesis)) + '\n';
    }
    return out;
}

inline std::string trace_jsonl(const std::vector<TraceEntry>& trace) {
    std::string out;
    for (const auto& e : trace) {
        nlohmann::json j = {{"step", e.step},         {"row", e.row},       {"module", e.module},
                            {"subclass", e.subclass}, {"script_step", e.script_step},
                            {"funds", e.funds},       {"requested", e.requested},
                            {"records", e.hashes.size()}, {"hashes", e.hashes}};
        if (!e.note.empty()) j["note"] = e.note;
        out += j.dump() + '\n';
    }
    return out;
}

enum class TxFormat { Csv, Jsonl, Both };

// Writes transactions, accounts, trace and manifest; returns the manifest.
inline RunManifest write_dataset(const Dataset& d, const std::filesystem::path& dir, TxFormat format = TxFormat::Csv) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw SimError("cannot create output directory " + dir.string());
    RunManifest m = make_manifest(d);
    auto put = [&](const std::string& name, const std::string& content) {
        detail::write_atomic(dir / name, content);
        m.files[name] = sha256_hex(content);
    };
    if (format != TxFormat::Jsonl) put("transactions.csv", transactions_csv(d));
    if (format != TxFormat::Csv) put("transactions.jsonl", transactions_jsonl(d));
    put("accounts.csv", accounts_csv(d));
    put("trace.jsonl", trace_jsonl(d.trace));
    detail::write_atomic(dir / "manifest.json", to_json(m).dump(2) + "\n");
    return m;
}

inline Dataset read_dataset(const std::filesystem::path& dir) {
    Dataset d;
    if (!std::filesystem::is_directory(dir)) throw SimError("no dataset directory " + dir.string());
    {
        std::ifstream in(dir / "accounts.csv");
        if (!in) throw SimError("missing accounts.csv in " + dir.string());
        const auto lines = csv::read_lines(in);
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const auto f = csv::split_line(lines[i]);
            if (f.size() < 7) throw ParseError("accounts.csv: expected 7 fields", i);
            AccountInfo a;
            a.id = f[0];
            auto k = parse_entity_kind(f[1]);
            auto p = parse_entity_kind(f[4]);
            if (!k || !p) throw ParseError("accounts.csv: unknown kind", i);
            a.kind = *k;
            a.instance = std::stoi(f[2]);
            a.pool = f[3];
            a.provenance = *p;
            a.genesis = detail::values_from_json(nlohmann::json::parse(f[6]));
            d.accounts.push_back(std::move(a));
        }
    }
    const bool have_csv = std::filesystem::exists(dir / "transactions.csv");
    if (have_csv) {
        std::ifstream in(dir / "transactions.csv");
        const auto lines = csv::read_lines(in);
        if (lines.empty() || lines.front() != kTransactionHeader) throw ParseError("transactions.csv: bad header");
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const auto f = csv::split_line(lines[i]);
            if (f.size() != 7) throw ParseError("transactions.csv: expected 7 fields", i);
            TransactionRecord r;
            r.hash = f[0];
            r.inputs = detail::refs_from_json(d, nlohmann::json::parse(f[1]));
            r.outputs = detail::refs_from_json(d, nlohmann::json::parse(f[2]));
            r.in_values = detail::values_from_json(nlohmann::json::parse(f[3]));
            r.out_values = detail::values_from_json(nlohmann::json::parse(f[4]));
            r.timestamp = parse_timestamp(f[5]);
            r.fee = parse_number(f[6]);
            d.records.push_back(std::move(r));
        }
    } else {
        std::ifstream in(dir / "transactions.jsonl");
        if (!in) throw SimError("no transactions file in " + dir.string());
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (csv::trim(line).empty()) continue;
            const auto j = nlohmann::json::parse(line);
            TransactionRecord r;
            r.hash = j.at("hash").get<std::string>();
            r.inputs = detail::refs_from_json(d, j.at("inputs"));
            r.outputs = detail::refs_from_json(d, j.at("outputs"));
            r.in_values = detail::values_from_json(j.at("in_values"));
            r.out_values = detail::values_from_json(j.at("out_values"));
            r.timestamp = parse_timestamp(j.at("timestamp").get<std::string>());
            r.fee = j.at("fee").get<double>();
            d.records.push_back(std::move(r));
        }
    }
    if (std::filesystem::exists(dir / "manifest.json")) {
        std::ifstream in(dir / "manifest.json");
        const auto m = manifest_from_json(nlohmann::json::parse(in));
        d.seed = m.seed;
        d.schema_digest = m.schema_digest;
        d.config_digest = m.config_digest;
        d.pending_trades = m.pending_trades;
        d.partial = m.partial;
        d.error = m.error;
    }
    if (std::filesystem::exists(dir / "trace.jsonl")) {
        std::ifstream in(dir / "trace.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            if (csv::trim(line).empty()) continue;
            const auto j = nlohmann::json::parse(line);
            TraceEntry e;
            e.step = j.at("step");
            e.row = j.at("row");
            e.module = j.at("module");
            e.subclass = j.at("subclass");
            e.script_step = j.at("script_step");
            e.funds = j.at("funds");
            e.requested = j.at("requested");
            e.hashes = j.at("hashes").get<std::vector<std::string>>();
            e.note = j.value("note", "");
            d.trace.push_back(std::move(e));
        }
    }
    return d;
}

// Builds the dataset view of a finished simulation. Accounts that never
// appear in a record and hold no endowment are left out unless `keep_idle`.
inline Dataset dataset_from_ledger(const Ledger& l, const std::vector<std::string>& pool_of_account,
                                   const std::vector<EntityKind>& provenance, bool keep_idle = false) {
    Dataset d;
    d.seed = l.seed();
    std::vector<char> used(l.account_count(), keep_idle ? 1 : 0);
    for (const auto& g : l.genesis()) used[index_of(g.account)] = 1;
    for (const auto& r : l.log()) {
        for (auto a : r.inputs) used[index_of(a)] = 1;
        for (auto a : r.outputs) used[index_of(a)] = 1;
    }
    std::vector<AccountRef> remap(l.account_count());
    for (std::size_t i = 0; i < l.account_count(); ++i) {
        if (!used[i]) continue;
        const auto& a = l.accounts()[i];
        AccountInfo info;
        info.id = a.id;
        info.kind = a.kind;
        info.instance = a.instance;
        info.pool = i < pool_of_account.size() ? pool_of_account[i] : std::string(to_string(a.kind));
        info.provenance = i < provenance.size() ? provenance[i] : a.kind;
        remap[i] = make_ref(d.accounts.size());
        d.accounts.push_back(std::move(info));
    }
    for (const auto& g : l.genesis()) d.accounts[index_of(remap[index_of(g.account)])].genesis.push_back(g.value);
    d.records = l.log();
    for (auto& r : d.records) {
        for (auto& a : r.inputs) a = remap[index_of(a)];
        for (auto& a : r.outputs) a = remap[index_of(a)];
    }
    return d;
}

}  // namespace amlsim
