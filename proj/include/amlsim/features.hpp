#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "amlsim/dataset.hpp"
#include "amlsim/random.hpp"

namespace amlsim {

inline constexpr std::size_t kRealtimeCount = 70;
inline constexpr std::size_t kInteractionCount = 60;
inline constexpr std::size_t kFeatureCount = kRealtimeCount + kInteractionCount;

struct FeatureSpec {
    std::string name;
    std::string group;  // stream | count | scalar | cluster | interaction
    std::string definition;
    bool red_flag = false;
};

namespace detail {

struct StreamSpec {
    const char* name;
    const char* definition;
    bool red_flag;
};

inline constexpr std::array<StreamSpec, 9> kStreams = {{
    {"sent_value", "value the account contributed as inputs, per record it sends in", false},
    {"recv_value", "value credited to the account, per record it receives in", false},
    {"fee_paid", "record fee apportioned by the account's share of input value, per sent record", false},
    {"inputs_per_sent", "number of inputs of each sent record", true},
    {"outputs_per_sent", "number of outputs of each sent record", true},
    {"inputs_per_recv", "number of inputs of each received record", true},
    {"outputs_per_recv", "number of outputs of each received record", false},
    {"gap", "seconds between consecutive records involving the account", true},
    {"hold_time", "seconds between receiving a UTXO and spending it (exact-value, oldest first)", true},
}};

inline constexpr std::array<const char*, 5> kAggregates = {"min", "max", "mean", "std", "sum"};

}  // namespace detail

// The versioned feature list. Order is part of the format.
inline const std::vector<FeatureSpec>& feature_manifest() {
    static const std::vector<FeatureSpec> m = [] {
        std::vector<FeatureSpec> v;
        for (const auto& s : detail::kStreams)
            for (const char* a : detail::kAggregates)
                v.push_back({std::string(s.name) + "_" + a, "stream", std::string(a) + " of " + s.definition, s.red_flag});
        const std::vector<FeatureSpec> rest = {
            {"n_sent", "count", "records with the account among inputs", false},
            {"n_recv", "count", "records with the account among outputs", false},
            {"n_total", "count", "records involving the account", false},
            {"distinct_in_counterparties", "count", "other accounts that were inputs of received records", false},
            {"distinct_out_counterparties", "count", "other accounts that were outputs of sent records", false},
            {"equal_output_records", "count", "involved records with two or more outputs, all equal", true},
            {"single_output_sent", "count", "sent records with exactly one output", true},
            {"multi_input_sent", "count", "sent records with two or more inputs", false},
            {"dust_receipts", "count", "outputs to the account below the 8000 availability threshold", true},
            {"both_sides_records", "count", "records where the account is input and output", true},
            {"lifetime_span", "scalar", "seconds between first and last involved record", false},
            {"activity_rate", "scalar", "involved records per day of lifetime (lifetime floored at one day)", false},
            {"final_balance", "scalar", "endowment plus received minus sent value", false},
            {"net_flow", "scalar", "received minus sent value", false},
            {"sent_recv_ratio", "scalar", "sent over received value, 0 without receipts", true},
            {"mean_counterparties", "scalar", "mean number of other accounts per involved record", false},
            {"top_counterparty_share", "scalar", "largest share of sent value reaching one other account", true},
            {"first_seen_offset", "scalar", "seconds from the earliest record in the log to the first involved record", false},
            {"last_seen_offset", "scalar", "seconds from the earliest record in the log to the last involved record", false},
            {"has_sent", "scalar", "1 if the account ever sends", false},
            {"has_received", "scalar", "1 if the account ever receives", false},
            {"cluster_size", "cluster", "accounts in the common-input cluster", true},
            {"cluster_tx_count", "cluster", "records involving any cluster member", false},
            {"cluster_volume", "cluster", "input value spent by cluster members", false},
            {"cluster_counterparties", "cluster", "distinct non-members in records involving members", false},
        };
        v.insert(v.end(), rest.begin(), rest.end());
        for (EntityKind k : kAllEntityKinds) {
            const std::string kn(to_string(k));
            v.push_back({"sent_tx_to_" + kn, "interaction", "sent records paying at least one other " + kn + " account", false});
            v.push_back({"recv_tx_from_" + kn, "interaction", "received records funded by at least one other " + kn + " account", false});
            v.push_back({"value_to_" + kn, "interaction", "sent value reaching other " + kn + " accounts, apportioned by input share", false});
            v.push_back({"value_from_" + kn, "interaction", "received value apportioned to other " + kn + " inputs", false});
        }
        return v;
    }();
    return m;
}

inline nlohmann::json manifest_json() {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : feature_manifest())
        arr.push_back({{"name", f.name}, {"group", f.group}, {"definition", f.definition}, {"red_flag", f.red_flag}});
    return {{"version", kToolVersion}, {"features", arr}};
}

inline std::string manifest_hash() { return sha256_hex(manifest_json().dump()); }

// ---------------------------------------------------------------------------
// Clustering
// ---------------------------------------------------------------------------

struct ClusterAssignment {
    std::vector<std::size_t> cluster_of;        // account index -> cluster id
    std::vector<std::vector<std::size_t>> members;  // cluster id -> sorted account indices
};

// Common-input ownership: all inputs of one record share a cluster.
inline ClusterAssignment cluster_common_input(std::size_t account_count, const std::vector<TransactionRecord>& log) {
    std::vector<std::size_t> parent(account_count);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (const auto& r : log) {
        if (r.inputs.empty()) continue;
        std::size_t root = find(index_of(r.inputs.front()));
        for (auto in : r.inputs) root = std::min(root, find(index_of(in)));
        for (auto in : r.inputs) parent[find(index_of(in))] = root;
    }
    ClusterAssignment c;
    c.cluster_of.assign(account_count, 0);
    std::unordered_map<std::size_t, std::size_t> id_of_root;
    for (std::size_t i = 0; i < account_count; ++i) {
        const std::size_t r = find(i);
        auto [it, fresh] = id_of_root.emplace(r, c.members.size());
        if (fresh) c.members.emplace_back();
        c.cluster_of[i] = it->second;
        c.members[it->second].push_back(i);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Per-account extraction
// ---------------------------------------------------------------------------

// The records an account takes part in, split by side (log order).
struct AccountView {
    AccountRef account;
    std::vector<std::size_t> sent;
    std::vector<std::size_t> received;
    std::vector<std::size_t> all;  // union, log order
};

inline std::vector<AccountView> build_views(const Dataset& d) {
    std::vector<AccountView> v(d.accounts.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i].account = make_ref(i);
    for (std::size_t r = 0; r < d.records.size(); ++r) {
        const auto& rec = d.records[r];
        for (auto a : rec.inputs) {
            auto& s = v[index_of(a)].sent;
            if (s.empty() || s.back() != r) s.push_back(r);
        }
        for (auto a : rec.outputs) {
            auto& s = v[index_of(a)].received;
            if (s.empty() || s.back() != r) s.push_back(r);
        }
    }
    for (auto& x : v) {
        x.all.reserve(x.sent.size() + x.received.size());
        std::merge(x.sent.begin(), x.sent.end(), x.received.begin(), x.received.end(), std::back_inserter(x.all));
        x.all.erase(std::unique(x.all.begin(), x.all.end()), x.all.end());
    }
    return v;
}

namespace detail {

inline void aggregate(const std::vector<double>& xs, std::vector<double>& out) {
    if (xs.empty()) {
        out.insert(out.end(), 5, 0.0);
        return;
    }
    double mn = xs.front(), mx = xs.front(), sum = 0;
    for (double x : xs) {
        mn = std::min(mn, x);
        mx = std::max(mx, x);
        sum += x;
    }
    const double n = static_cast<double>(xs.size());
    const double mean = sum / n;
    double ss = 0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    out.push_back(mn);
    out.push_back(mx);
    out.push_back(mean);
    out.push_back(std::sqrt(ss / n));
    out.push_back(sum);
}

inline double side_value(const std::vector<AccountRef>& refs, const std::vector<Satoshi>& vals, AccountRef a) {
    double v = 0;
    for (std::size_t i = 0; i < refs.size(); ++i)
        if (refs[i] == a) v += vals[i];
    return v;
}

struct ClusterStats {
    double size = 0, tx_count = 0, volume = 0, counterparties = 0;
};

inline std::vector<ClusterStats> cluster_stats(const Dataset& d, const ClusterAssignment& c) {
    std::vector<ClusterStats> out(c.members.size());
    std::vector<std::unordered_set<std::size_t>> cps(c.members.size());
    for (std::size_t k = 0; k < c.members.size(); ++k) out[k].size = static_cast<double>(c.members[k].size());
    for (const auto& r : d.records) {
        std::vector<std::size_t> touched;
        for (auto a : r.inputs) touched.push_back(c.cluster_of[index_of(a)]);
        for (auto a : r.outputs) touched.push_back(c.cluster_of[index_of(a)]);
        std::sort(touched.begin(), touched.end());
        touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
        for (auto k : touched) {
            out[k].tx_count += 1;
            for (auto a : r.inputs)
                if (c.cluster_of[index_of(a)] != k) cps[k].insert(index_of(a));
            for (auto a : r.outputs)
                if (c.cluster_of[index_of(a)] != k) cps[k].insert(index_of(a));
        }
        for (std::size_t i = 0; i < r.inputs.size(); ++i) out[c.cluster_of[index_of(r.inputs[i])]].volume += r.in_values[i];
    }
    for (std::size_t k = 0; k < out.size(); ++k) out[k].counterparties = static_cast<double>(cps[k].size());
    return out;
}

}  // namespace detail

inline std::vector<double> extract_realtime(const Dataset& d, const AccountView& v, const ClusterAssignment& c,
                                            const std::vector<detail::ClusterStats>& cs, Timestamp log_start) {
    const AccountRef a = v.account;
    const auto& info = d.accounts[index_of(a)];
    std::array<std::vector<double>, 9> s;
    auto& sent_v = s[0];
    auto& recv_v = s[1];

    double n_equal = 0, n_single_out = 0, n_multi_in = 0, n_dust = 0, n_both = 0;
    std::unordered_set<std::size_t> in_cp, out_cp;
    std::map<std::size_t, double> to_cp;
    double cp_per_tx = 0;

    for (auto r : v.sent) {
        const auto& rec = d.records[r];
        const double mine = detail::side_value(rec.inputs, rec.in_values, a);
        const double share = mine / rec.in_sum();
        sent_v.push_back(mine);
        s[2].push_back(rec.fee * share);
        s[3].push_back(static_cast<double>(rec.inputs.size()));
        s[4].push_back(static_cast<double>(rec.outputs.size()));
        if (rec.outputs.size() == 1) n_single_out += 1;
        if (rec.inputs.size() >= 2) n_multi_in += 1;
        for (std::size_t i = 0; i < rec.outputs.size(); ++i) {
            if (rec.outputs[i] == a) continue;
            out_cp.insert(index_of(rec.outputs[i]));
            to_cp[index_of(rec.outputs[i])] += rec.out_values[i] * share;
        }
    }
    for (auto r : v.received) {
        const auto& rec = d.records[r];
        recv_v.push_back(detail::side_value(rec.outputs, rec.out_values, a));
        s[5].push_back(static_cast<double>(rec.inputs.size()));
        s[6].push_back(static_cast<double>(rec.outputs.size()));
        for (std::size_t i = 0; i < rec.inputs.size(); ++i)
            if (rec.inputs[i] != a) in_cp.insert(index_of(rec.inputs[i]));
        for (std::size_t i = 0; i < rec.outputs.size(); ++i)
            if (rec.outputs[i] == a && rec.out_values[i] < kAvailabilityThreshold) n_dust += 1;
    }

    // Gaps, holding times and per-record scans in log order.
    std::vector<std::pair<Timestamp, double>> receipts;  // (time, value), unmatched
    std::vector<char> matched;
    for (std::size_t i = 0; i < v.all.size(); ++i) {
        const auto& rec = d.records[v.all[i]];
        if (i) s[7].push_back(static_cast<double>(rec.timestamp - d.records[v.all[i - 1]].timestamp));
        if (i == 0)
            for (double g : info.genesis) {
                receipts.push_back({rec.timestamp, g});
                matched.push_back(0);
            }
        bool in = false, out = false;
        std::unordered_set<std::size_t> others;
        for (std::size_t j = 0; j < rec.inputs.size(); ++j) {
            if (rec.inputs[j] == a) {
                in = true;
                for (std::size_t k = 0; k < receipts.size(); ++k) {
                    if (!matched[k] && receipts[k].second == rec.in_values[j]) {
                        matched[k] = 1;
                        s[8].push_back(static_cast<double>(rec.timestamp - receipts[k].first));
                        break;
                    }
                }
            } else {
                others.insert(index_of(rec.inputs[j]));
            }
        }
        for (std::size_t j = 0; j < rec.outputs.size(); ++j) {
            if (rec.outputs[j] == a) {
                out = true;
                receipts.push_back({rec.timestamp, rec.out_values[j]});
                matched.push_back(0);
            } else {
                others.insert(index_of(rec.outputs[j]));
            }
        }
        if (in && out) n_both += 1;
        if (rec.outputs.size() >= 2 &&
            std::all_of(rec.out_values.begin(), rec.out_values.end(), [&](double x) { return x == rec.out_values.front(); }))
            n_equal += 1;
        cp_per_tx += static_cast<double>(others.size());
    }

    std::vector<double> f;
    f.reserve(kRealtimeCount);
    for (const auto& x : s) detail::aggregate(x, f);

    const double total_sent = std::accumulate(sent_v.begin(), sent_v.end(), 0.0);
    const double total_recv = std::accumulate(recv_v.begin(), recv_v.end(), 0.0);
    const double genesis = std::accumulate(info.genesis.begin(), info.genesis.end(), 0.0);
    f.push_back(static_cast<double>(v.sent.size()));
    f.push_back(static_cast<double>(v.received.size()));
    f.push_back(static_cast<double>(v.all.size()));
    f.push_back(static_cast<double>(in_cp.size()));
    f.push_back(static_cast<double>(out_cp.size()));
    f.push_back(n_equal);
    f.push_back(n_single_out);
    f.push_back(n_multi_in);
    f.push_back(n_dust);
    f.push_back(n_both);

    double span = 0, first = 0, last = 0;
    if (!v.all.empty()) {
        first = static_cast<double>(d.records[v.all.front()].timestamp - log_start);
        last = static_cast<double>(d.records[v.all.back()].timestamp - log_start);
        span = last - first;
    }
    double top = 0, to_others = 0;
    for (const auto& [k, x] : to_cp) {
        top = std::max(top, x);
        to_others += x;
    }
    f.push_back(span);
    f.push_back(static_cast<double>(v.all.size()) / std::max(span / static_cast<double>(kSecondsPerDay), 1.0));
    f.push_back(genesis + total_recv - total_sent);
    f.push_back(total_recv - total_sent);
    f.push_back(total_recv > 0 ? total_sent / total_recv : 0.0);
    f.push_back(v.all.empty() ? 0.0 : cp_per_tx / static_cast<double>(v.all.size()));
    f.push_back(to_others > 0 ? top / to_others : 0.0);
    f.push_back(first);
    f.push_back(last);
    f.push_back(v.sent.empty() ? 0.0 : 1.0);
    f.push_back(v.received.empty() ? 0.0 : 1.0);

    const auto& cl = cs[c.cluster_of[index_of(a)]];
    f.push_back(cl.size);
    f.push_back(cl.tx_count);
    f.push_back(cl.volume);
    f.push_back(cl.counterparties);
    return f;
}

inline std::vector<double> extract_interaction(const Dataset& d, const AccountView& v) {
    const AccountRef a = v.account;
    std::vector<double> f(kInteractionCount, 0.0);
    auto cell = [&](EntityKind k, std::size_t measure) -> double& {
        return f[static_cast<std::size_t>(k) * 4 + measure];
    };
    for (auto r : v.sent) {
        const auto& rec = d.records[r];
        const double share = detail::side_value(rec.inputs, rec.in_values, a) / rec.in_sum();
        std::array<bool, kEntityKindCount> hit{};
        for (std::size_t i = 0; i < rec.outputs.size(); ++i) {
            if (rec.outputs[i] == a) continue;
            const EntityKind k = d.accounts[index_of(rec.outputs[i])].kind;
            hit[static_cast<std::size_t>(k)] = true;
            cell(k, 2) += rec.out_values[i] * share;
        }
        for (std::size_t k = 0; k < kEntityKindCount; ++k)
            if (hit[k]) cell(kAllEntityKinds[k], 0) += 1;
    }
    for (auto r : v.received) {
        const auto& rec = d.records[r];
        const double mine = detail::side_value(rec.outputs, rec.out_values, a);
        const double in_sum = rec.in_sum();
        std::array<bool, kEntityKindCount> hit{};
        for (std::size_t i = 0; i < rec.inputs.size(); ++i) {
            if (rec.inputs[i] == a) continue;
            const EntityKind k = d.accounts[index_of(rec.inputs[i])].kind;
            hit[static_cast<std::size_t>(k)] = true;
            cell(k, 3) += mine * rec.in_values[i] / in_sum;
        }
        for (std::size_t k = 0; k < kEntityKindCount; ++k)
            if (hit[k]) cell(kAllEntityKinds[k], 1) += 1;
    }
    return f;
}

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

struct LabelConfig {
    std::array<std::optional<bool>, kEntityKindCount> illicit;

    static LabelConfig defaults() {
        LabelConfig c;
        for (EntityKind k : kAllEntityKinds)
            if (k != EntityKind::SingleUse) c.illicit[static_cast<std::size_t>(k)] = default_illicit_kind(k);
        return c;
    }

    // {"illicit": [kinds...], "licit": [kinds...]} overrides the defaults.
    static LabelConfig from_json(const nlohmann::json& j) {
        LabelConfig c = defaults();
        for (const char* key : {"illicit", "licit"}) {
            if (!j.contains(key)) continue;
            for (const auto& name : j.at(key)) {
                auto k = parse_entity_kind(name.get<std::string>());
                if (!k) throw ConfigError("label config: unknown kind " + name.get<std::string>());
                c.illicit[static_cast<std::size_t>(*k)] = std::string(key) == "illicit";
            }
        }
        return c;
    }
};

enum class Category { Licit, Illicit };

inline std::string_view to_string(Category c) { return c == Category::Illicit ? "illicit" : "licit"; }

// Single-use accounts carry the category of the kind that created them.
inline Category assign_label(const AccountInfo& a, const LabelConfig& cfg) {
    const EntityKind k = a.kind == EntityKind::SingleUse ? a.provenance : a.kind;
    const auto& v = cfg.illicit[static_cast<std::size_t>(k)];
    if (!v) throw ConfigError("no category configured for " + std::string(to_string(k)));
    return *v ? Category::Illicit : Category::Licit;
}

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

struct FeatureMatrix {
    std::vector<std::vector<double>> rows;  // kFeatureCount values each
    std::vector<EntityKind> entity;
    std::vector<Category> category;
};

inline FeatureMatrix extract_features(const Dataset& d, const LabelConfig& labels = LabelConfig::defaults()) {
    FeatureMatrix m;
    const auto views = build_views(d);
    const auto clusters = cluster_common_input(d.accounts.size(), d.records);
    const auto cs = detail::cluster_stats(d, clusters);
    Timestamp start = 0;
    if (!d.records.empty()) {
        start = d.records.front().timestamp;
        for (const auto& r : d.records) start = std::min(start, r.timestamp);
    }
    m.rows.reserve(d.accounts.size());
    for (std::size_t i = 0; i < d.accounts.size(); ++i) {
        auto row = extract_realtime(d, views[i], clusters, cs, start);
        const auto inter = extract_interaction(d, views[i]);
        row.insert(row.end(), inter.begin(), inter.end());
        m.rows.push_back(std::move(row));
        m.entity.push_back(d.accounts[i].kind);
        m.category.push_back(assign_label(d.accounts[i], labels));
    }
    return m;
}

// v -> v * scale * (1 + u), u uniform in [-noise, noise], one draw per value.
inline void augment(FeatureMatrix& m, double scale = 1.12, double noise = 0.10, std::uint64_t seed = 0) {
    if (!(noise >= 0.0 && noise < 1.0)) throw ConfigError("noise fraction must lie in [0,1)");
    Rng rng(mix_seed(seed ^ 0x61756790ULL));
    for (auto& row : m.rows)
        for (auto& v : row) v = v * scale * (1.0 + rng.uniform(-noise, noise));
}

inline std::string matrix_csv(const FeatureMatrix& m) {
    std::string out = "# manifest=" + manifest_hash() + "\n";
    for (const auto& f : feature_manifest()) out += f.name + ",";
    out += "entity_label,category_label\n";
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        for (double v : m.rows[i]) out += format_number(v) + ",";
        out += std::string(to_string(m.entity[i])) + "," + std::string(to_string(m.category[i])) + "\n";
    }
    return out;
}

}  // namespace amlsim
