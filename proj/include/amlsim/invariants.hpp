#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "amlsim/dataset.hpp"
#include "amlsim/ledger.hpp"

namespace amlsim {

struct InvariantReport {
    std::size_t conservation = 0;
    std::size_t dust = 0;
    std::size_t single_use = 0;
    std::size_t temporal = 0;
    std::size_t duplicate_hash = 0;
    std::size_t replay = 0;
    std::size_t coinjoin = 0;
    std::vector<std::string> messages;  // first few violations, for humans

    std::size_t total() const { return conservation + dust + single_use + temporal + duplicate_hash + replay + coinjoin; }
    bool ok() const { return total() == 0; }
};

namespace detail {

inline void note(InvariantReport& r, std::size_t& counter, const std::string& msg) {
    ++counter;
    if (r.messages.size() < 20) r.messages.push_back(msg);
}

inline std::vector<GenesisUtxo> genesis_of(const Dataset& d) {
    std::vector<GenesisUtxo> g;
    for (std::size_t i = 0; i < d.accounts.size(); ++i)
        for (Satoshi v : d.accounts[i].genesis) g.push_back({make_ref(i), v});
    return g;
}

}  // namespace detail

// Checks every structural guarantee of a generated log.
inline InvariantReport check_invariants(const Dataset& d) {
    InvariantReport rep;
    std::unordered_set<std::string> hashes;
    std::vector<int> su_sent(d.accounts.size(), 0), su_recv(d.accounts.size(), 0);
    std::vector<Timestamp> last(d.accounts.size(), std::numeric_limits<Timestamp>::min());

    for (const auto& r : d.records) {
        if (!conserved(r.in_sum(), r.out_sum(), r.fee))
            detail::note(rep, rep.conservation, "value not conserved in " + r.hash);
        for (Satoshi v : r.out_values)
            if (v < kDustThreshold) detail::note(rep, rep.dust, "dust output in " + r.hash);
        if (!hashes.insert(r.hash).second) detail::note(rep, rep.duplicate_hash, "duplicate hash " + r.hash);

        std::unordered_set<std::size_t> seen_in, seen_out;
        for (auto a : r.inputs) seen_in.insert(index_of(a));
        for (auto a : r.outputs) seen_out.insert(index_of(a));
        for (auto i : seen_in) {
            if (d.accounts[i].kind == EntityKind::SingleUse && ++su_sent[i] > 1)
                detail::note(rep, rep.single_use, "single-use account sends twice: " + d.accounts[i].id);
        }
        for (auto i : seen_out) {
            if (d.accounts[i].kind == EntityKind::SingleUse && ++su_recv[i] > 1)
                detail::note(rep, rep.single_use, "single-use account receives twice: " + d.accounts[i].id);
        }
        for (auto set : {&seen_in, &seen_out})
            for (auto i : *set) {
                if (r.timestamp < last[i]) detail::note(rep, rep.temporal, "time runs backwards for " + d.accounts[i].id);
                last[i] = std::max(last[i], r.timestamp);
            }
    }
    try {
        replay_utxos(d.accounts.size(), detail::genesis_of(d), d.records);
    } catch (const InvariantViolation& e) {
        detail::note(rep, rep.replay, e.what());
    }

    // Coinjoin steps pay equal outputs.
    std::unordered_map<std::string, std::size_t> by_hash;
    for (std::size_t i = 0; i < d.records.size(); ++i) by_hash.emplace(d.records[i].hash, i);
    for (const auto& t : d.trace) {
        if (t.module != "coinjoin") continue;
        for (const auto& h : t.hashes) {
            auto it = by_hash.find(h);
            if (it == by_hash.end()) continue;
            const auto& ov = d.records[it->second].out_values;
            if (std::adjacent_find(ov.begin(), ov.end(), std::not_equal_to<>()) != ov.end())
                detail::note(rep, rep.coinjoin, "unequal coinjoin outputs in " + h);
        }
    }
    return rep;
}

// Live ledger balances must be exactly what the log explains.
inline bool ledger_matches_log(const Ledger& l) {
    const auto replayed = replay_utxos(l.account_count(), l.genesis(), l.log());
    for (std::size_t i = 0; i < l.account_count(); ++i) {
        auto u = l.accounts()[i].utxos;
        std::sort(u.begin(), u.end());
        if (u != replayed[i]) return false;
    }
    return true;
}

}  // namespace amlsim
