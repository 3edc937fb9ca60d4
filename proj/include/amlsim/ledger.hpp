#pragma once

#include <cassert>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "amlsim/core.hpp"
#include "amlsim/digest.hpp"
#include "amlsim/random.hpp"

namespace amlsim {

struct Account {
    std::string id;
    EntityKind kind = EntityKind::Licit;
    int instance = 1;
    std::vector<Satoshi> utxos;
    Timestamp last_time = 0;
    bool sent_once = false;
    bool received_once = false;
};

struct TransactionRecord {
    std::string hash;
    std::vector<AccountRef> inputs;
    std::vector<AccountRef> outputs;
    std::vector<Satoshi> in_values;
    std::vector<Satoshi> out_values;
    Timestamp timestamp = 0;
    Satoshi fee = 0;

    Satoshi in_sum() const { return std::accumulate(in_values.begin(), in_values.end(), 0.0); }
    Satoshi out_sum() const { return std::accumulate(out_values.begin(), out_values.end(), 0.0); }
};

// A UTXO that exists without a creating transaction (outer-layer endowment).
struct GenesisUtxo {
    AccountRef account;
    Satoshi value;
};

// ---------------------------------------------------------------------------
// Split policies: how the post-fee value of a transaction is shared out.
// ---------------------------------------------------------------------------

namespace split {
// `floor` raises the per-share minimum above the dust threshold when the
// outputs are meant to stay spendable.
struct Random {
    Satoshi floor = kDustThreshold;
};
struct Equal {};
struct Proportional {
    std::vector<double> weights;
};
// Escrow settlement. Inputs are the two trade legs, outputs are
// [payee of leg 1, payee of leg 2, party 1, party 2, platform].
struct FixedFee {
    double fee_rate = 0.01;
    double deposit_rate = 0.10;
};
}  // namespace split

using SplitPolicy = std::variant<split::Random, split::Equal, split::Proportional, split::FixedFee>;

// ---------------------------------------------------------------------------
// Fee / output arithmetic
// ---------------------------------------------------------------------------

inline Satoshi compute_fee(std::size_t input_count, Satoshi in_value_sum) {
    if (input_count == 0) throw InsufficientFunds("transaction without inputs");
    if (!(in_value_sum > kFeePerInput + kDustThreshold))
        throw InsufficientFunds("input value " + std::to_string(in_value_sum) +
                                " cannot cover the minimum fee and one dust output");
    return static_cast<double>(input_count) * kFeePerInput +
           kFeeValueRate * (in_value_sum - kFeePerInput - kDustThreshold) + kFeeBase;
}

inline std::size_t compute_max_outputs(Satoshi in_value_sum, Satoshi fee) {
    if (fee > in_value_sum) throw InsufficientFunds("fee exceeds input value");
    return static_cast<std::size_t>(std::floor((in_value_sum - fee) / kDustThreshold));
}

// Escrow settlement amounts for trade legs L1, L2 that each carry the trade
// amount plus a security deposit. The network fee comes out of the deposits,
// shared in proportion to the legs so a small leg never pays for a large one.
struct SettlementAmounts {
    Satoshi trade1 = 0;  // party 1's traded amount
    Satoshi trade2 = 0;
    Satoshi payee1 = 0;  // party 1's amount net of platform fee, paid to party 2's side
    Satoshi payee2 = 0;
    Satoshi deposit_return1 = 0;
    Satoshi deposit_return2 = 0;
    Satoshi platform_fee = 0;
};

inline SettlementAmounts settlement_amounts(Satoshi leg1, Satoshi leg2, Satoshi network_fee,
                                            const split::FixedFee& r) {
    SettlementAmounts s;
    s.trade1 = leg1 / (1.0 + r.deposit_rate);
    s.trade2 = leg2 / (1.0 + r.deposit_rate);
    s.payee1 = s.trade1 * (1.0 - r.fee_rate);
    s.payee2 = s.trade2 * (1.0 - r.fee_rate);
    const Satoshi share1 = leg1 / (leg1 + leg2);
    s.deposit_return1 = (leg1 - s.trade1) - network_fee * share1;
    s.deposit_return2 = (leg2 - s.trade2) - network_fee * (1.0 - share1);
    s.platform_fee = (s.trade1 + s.trade2) * r.fee_rate;
    return s;
}

// Random composition of `rem` into n shares, each at least `floor`.
// Shares start from normalized uniform weights; shares under the floor are
// pinned to it and the deficit is taken proportionally from the others.
inline std::vector<Satoshi> split_random(Satoshi rem, std::size_t n, Rng& rng, Satoshi floor = kDustThreshold) {
    std::vector<double> w(n);
    for (auto& x : w) x = rng.uniform01() + 1e-12;
    std::vector<Satoshi> shares(n, 0.0);
    std::vector<bool> pinned(n, false);
    for (;;) {
        double free_weight = 0.0;
        std::size_t n_pinned = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (pinned[i]) ++n_pinned;
            else free_weight += w[i];
        }
        const Satoshi free_value = rem - floor * static_cast<double>(n_pinned);
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (pinned[i]) {
                shares[i] = floor;
                continue;
            }
            shares[i] = free_value * w[i] / free_weight;
            if (shares[i] < floor) {
                pinned[i] = true;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return shares;
}

inline std::vector<Satoshi> compute_split(const SplitPolicy& policy, Satoshi rem, std::size_t n,
                                          std::span<const Satoshi> in_values, Satoshi fee, Rng& rng) {
    if (n == 0) throw SimError("transaction without outputs");
    if (rem < kDustThreshold * static_cast<double>(n))
        throw DustViolation("remaining value " + std::to_string(rem) + " cannot give " +
                            std::to_string(n) + " outputs the dust minimum");
    return std::visit(
        [&](const auto& p) -> std::vector<Satoshi> {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, split::Random>) {
                const Satoshi floor = std::max(p.floor, kDustThreshold);
                if (rem < floor * static_cast<double>(n))
                    throw DustViolation("remaining value cannot give every output the requested floor");
                return split_random(rem, n, rng, floor);
            } else if constexpr (std::is_same_v<P, split::Equal>) {
                return std::vector<Satoshi>(n, rem / static_cast<double>(n));
            } else if constexpr (std::is_same_v<P, split::Proportional>) {
                if (p.weights.size() != n) throw SimError("proportional split: weight count mismatch");
                double total = 0.0;
                for (double x : p.weights) {
                    if (x < 0.0) throw SimError("proportional split: negative weight");
                    total += x;
                }
                if (!(total > 0.0)) throw SimError("proportional split: weights sum to zero");
                std::vector<Satoshi> out(n);
                for (std::size_t i = 0; i < n; ++i) {
                    out[i] = rem * p.weights[i] / total;
                    if (out[i] < kDustThreshold)
                        throw DustViolation("proportional share " + std::to_string(out[i]) +
                                            " below dust threshold");
                }
                return out;
            } else {
                if (in_values.size() != 2 || n != 5)
                    throw SimError("escrow settlement needs 2 legs and 5 outputs");
                if (p.fee_rate < 0 || p.fee_rate >= 1 || p.deposit_rate < 0 || p.deposit_rate >= 1)
                    throw ConfigError("escrow rates must lie in [0,1)");
                const auto s = settlement_amounts(in_values[0], in_values[1], fee, p);
                std::vector<Satoshi> out{s.payee1, s.payee2, s.deposit_return1, s.deposit_return2,
                                         s.platform_fee};
                for (auto v : out)
                    if (v < kDustThreshold)
                        throw DustViolation("escrow settlement output below dust threshold");
                return out;
            }
        },
        policy);
}

// ---------------------------------------------------------------------------
// Timestamp sampling
// ---------------------------------------------------------------------------

enum class TimeDist { Uniform, Gaussian };

inline std::vector<Timestamp> sample_timestamps(std::size_t count, Timestamp lower, Timestamp upper,
                                                TimeDist dist, Rng& rng) {
    if (lower > upper)
        throw ScheduleError("preferred timestamp " + format_iso8601(upper) +
                            " precedes participants' last activity " + format_iso8601(lower));
    std::vector<Timestamp> out(count);
    const double mid = 0.5 * (static_cast<double>(lower) + static_cast<double>(upper));
    const double sigma = (static_cast<double>(upper) - static_cast<double>(lower)) / 6.0;
    for (auto& t : out) {
        if (dist == TimeDist::Uniform) {
            t = rng.uniform_int(lower, upper);
        } else {
            const double x = std::round(rng.normal(mid, sigma));
            t = std::clamp(static_cast<Timestamp>(x), lower, upper);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Deterministic 34-character base58 address derived from (seed, salt, counter).
inline std::string derive_account_id(std::uint64_t seed, std::string_view salt, std::uint64_t counter) {
    const auto d = Sha256{}.update_field("account").update_u64(seed).update_field(salt).update_u64(counter).finish();
    std::string b = base58_encode(d.data(), d.size());
    return "1" + b.substr(0, 33);
}

// ---------------------------------------------------------------------------
// Ledger
// ---------------------------------------------------------------------------

class Ledger;

// Restore point. Cheap to take: the ledger journals account changes while at
// least one snapshot is alive and truncates its append-only parts on rollback.
class Snapshot {
public:
    Snapshot() = default;

private:
    friend class Ledger;
    struct Token {
        std::shared_ptr<std::size_t> live;
        ~Token() {
            if (live) --*live;
        }
    };
    const Ledger* owner_ = nullptr;
    std::shared_ptr<Token> token_;
    std::size_t accounts_ = 0;
    std::size_t log_ = 0;
    std::size_t genesis_ = 0;
    std::size_t journal_ = 0;
    std::uint64_t tx_counter_ = 0;
    std::uint64_t id_counter_ = 0;
    Rng rng_;
};

class Ledger {
public:
    explicit Ledger(std::uint64_t seed = 0, Timestamp epoch = 0)
        : seed_(seed), epoch_(epoch), rng_(mix_seed(seed)), live_(std::make_shared<std::size_t>(0)) {}

    Ledger(const Ledger&) = delete;
    Ledger& operator=(const Ledger&) = delete;
    Ledger(Ledger&&) noexcept = default;
    Ledger& operator=(Ledger&&) noexcept = default;

    std::uint64_t seed() const { return seed_; }
    Timestamp epoch() const { return epoch_; }
    Rng& rng() { return rng_; }

    // -- accounts ----------------------------------------------------------

    std::vector<AccountRef> init_accounts(EntityKind kind, int instance, std::size_t count) {
        if (count == 0) throw SimError("init_accounts: count must be positive");
        if (instance < 1) throw SimError("init_accounts: instance must be positive");
        std::vector<AccountRef> out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            std::string id;
            do {
                id = derive_account_id(seed_, "ledger", id_counter_++);
            } while (index_.contains(id));
            out.push_back(add_account(std::move(id), kind, instance));
        }
        return out;
    }

    // Registers an account whose id was assigned elsewhere (compiled plans).
    AccountRef add_account(std::string id, EntityKind kind, int instance) {
        if (index_.contains(id)) throw SimError("duplicate account id " + id);
        const AccountRef ref = make_ref(accounts_.size());
        Account a;
        a.id = id;
        a.kind = kind;
        a.instance = instance;
        a.last_time = epoch_;
        accounts_.push_back(std::move(a));
        index_.emplace(std::move(id), ref);
        return ref;
    }

    std::size_t account_count() const { return accounts_.size(); }
    const Account& account(AccountRef r) const {
        check(r);
        return accounts_[index_of(r)];
    }
    const std::vector<Account>& accounts() const { return accounts_; }

    AccountRef find(std::string_view id) const {
        auto it = index_.find(std::string(id));
        if (it == index_.end()) throw UnknownAccount("unknown account " + std::string(id));
        return it->second;
    }

    // Endows an account with a UTXO that has no creating transaction.
    void mint(AccountRef r, Satoshi value) {
        check(r);
        if (value < 0) throw SimError("negative mint");
        journal(r);
        accounts_[index_of(r)].utxos.push_back(value);
        genesis_.push_back({r, value});
    }

    // -- availability --------------------------------------------------------

    // One entry per UTXO strictly above the threshold, for senders whose
    // largest UTXO clears it.
    std::vector<AccountRef> avail_general(std::span<const AccountRef> senders,
                                          Satoshi threshold = kAvailabilityThreshold) const {
        std::vector<AccountRef> ac;
        for (AccountRef r : senders) {
            const Account& a = account(r);
            if (a.utxos.empty()) continue;
            if (*std::max_element(a.utxos.begin(), a.utxos.end()) <= threshold) continue;
            for (Satoshi u : a.utxos)
                if (u > threshold) ac.push_back(r);
        }
        return ac;
    }

    std::vector<AccountRef> avail_single_use_sender(std::span<const AccountRef> senders,
                                                    Satoshi threshold = kAvailabilityThreshold) const {
        std::vector<AccountRef> filtered;
        for (AccountRef r : senders) {
            const Account& a = account(r);
            if (a.kind == EntityKind::SingleUse && !a.sent_once) filtered.push_back(r);
        }
        return avail_general(filtered, threshold);
    }

    std::vector<AccountRef> avail_receiver_capacity(std::span<const AccountRef> receivers) const {
        std::vector<AccountRef> out;
        for (AccountRef r : receivers) {
            const Account& a = account(r);
            if (a.kind == EntityKind::SingleUse && a.received_once) continue;
            out.push_back(r);
        }
        return out;
    }

    // -- update ----------------------------------------------------------------

    // Commits one transaction. `in_values[i]` must be an existing UTXO of
    // `inputs[i]`; it is consumed. All checks run before any mutation.
    const TransactionRecord& apply_update(std::span<const AccountRef> inputs,
                                          std::span<const AccountRef> outputs,
                                          std::span<const Satoshi> in_values, Satoshi fee, Timestamp ts,
                                          const SplitPolicy& policy) {
        if (inputs.empty() || outputs.empty()) throw SimError("transaction needs inputs and outputs");
        if (inputs.size() != in_values.size()) throw SimError("inputs/in_values length mismatch");
        if (fee < 0) throw SimError("negative fee");

        // UTXO existence, with multiplicity across repeated inputs.
        std::unordered_map<std::size_t, std::vector<Satoshi>> pending;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            check(inputs[i]);
            const Account& a = accounts_[index_of(inputs[i])];
            if (a.kind == EntityKind::SingleUse && a.sent_once)
                throw PoolExhausted("single-use account " + a.id + " already sent");
            auto& taken = pending[index_of(inputs[i])];
            if (a.kind == EntityKind::SingleUse && !taken.empty())
                throw PoolExhausted("single-use account " + a.id + " spends twice in one transaction");
            const auto need = std::count(taken.begin(), taken.end(), in_values[i]) + 1;
            if (std::count(a.utxos.begin(), a.utxos.end(), in_values[i]) < need)
                throw InsufficientFunds("account " + a.id + " has no UTXO of value " +
                                        std::to_string(in_values[i]));
            taken.push_back(in_values[i]);
        }
        for (std::size_t i = 0; i < outputs.size(); ++i) {
            check(outputs[i]);
            const Account& a = accounts_[index_of(outputs[i])];
            if (a.kind != EntityKind::SingleUse) continue;
            if (a.received_once) throw PoolExhausted("single-use account " + a.id + " already received");
            for (std::size_t j = 0; j < i; ++j)
                if (outputs[j] == outputs[i])
                    throw PoolExhausted("single-use account " + a.id + " credited twice");
        }
        for (auto r : inputs)
            if (accounts_[index_of(r)].last_time > ts) throw ScheduleError("transaction predates sender activity");
        for (auto r : outputs)
            if (accounts_[index_of(r)].last_time > ts) throw ScheduleError("transaction predates receiver activity");

        const Satoshi in_sum = std::accumulate(in_values.begin(), in_values.end(), 0.0);
        const Satoshi rem = in_sum - fee;
        if (rem < 0) throw InsufficientFunds("fee exceeds input value");
        std::vector<Satoshi> shares = compute_split(policy, rem, outputs.size(), in_values, fee, rng_);

        // Mutation.
        TransactionRecord rec;
        rec.inputs.assign(inputs.begin(), inputs.end());
        rec.outputs.assign(outputs.begin(), outputs.end());
        rec.in_values.assign(in_values.begin(), in_values.end());
        rec.out_values = std::move(shares);
        rec.timestamp = ts;
        rec.fee = fee;
        rec.hash = make_hash(rec);

        for (std::size_t i = 0; i < inputs.size(); ++i) {
            journal(inputs[i]);
            Account& a = accounts_[index_of(inputs[i])];
            a.utxos.erase(std::find(a.utxos.begin(), a.utxos.end(), in_values[i]));
            if (a.kind == EntityKind::SingleUse) a.sent_once = true;
        }
        for (std::size_t i = 0; i < outputs.size(); ++i) {
            journal(outputs[i]);
            Account& a = accounts_[index_of(outputs[i])];
            a.utxos.push_back(rec.out_values[i]);
            if (a.kind == EntityKind::SingleUse) a.received_once = true;
        }
        for (auto r : inputs) touch(r, ts);
        for (auto r : outputs) touch(r, ts);

        ++tx_counter_;
        log_.push_back(std::move(rec));
        return log_.back();
    }

    // -- snapshots ---------------------------------------------------------------

    Snapshot snapshot() {
        if (*live_ == 0) journal_.clear();
        ++*live_;
        Snapshot s;
        s.owner_ = this;
        s.token_ = std::make_shared<Snapshot::Token>();
        s.token_->live = live_;
        s.accounts_ = accounts_.size();
        s.log_ = log_.size();
        s.genesis_ = genesis_.size();
        s.journal_ = journal_.size();
        s.tx_counter_ = tx_counter_;
        s.id_counter_ = id_counter_;
        s.rng_ = rng_;
        return s;
    }

    void rollback(const Snapshot& s) {
        if (s.owner_ != this || !s.token_) throw SimError("snapshot belongs to another ledger");
        while (journal_.size() > s.journal_) {
            auto& [idx, saved] = journal_.back();
            accounts_[idx] = std::move(saved);
            journal_.pop_back();
        }
        while (accounts_.size() > s.accounts_) {
            index_.erase(accounts_.back().id);
            accounts_.pop_back();
        }
        log_.resize(s.log_);
        genesis_.resize(s.genesis_);
        tx_counter_ = s.tx_counter_;
        id_counter_ = s.id_counter_;
        rng_ = s.rng_;
    }

    // -- views -----------------------------------------------------------------

    const std::vector<TransactionRecord>& log() const { return log_; }
    const std::vector<GenesisUtxo>& genesis() const { return genesis_; }
    std::uint64_t tx_counter() const { return tx_counter_; }

    Timestamp max_last_time(std::span<const AccountRef> refs) const {
        Timestamp t = epoch_;
        for (auto r : refs) t = std::max(t, account(r).last_time);
        return t;
    }

    // Digest over every piece of mutable state, including the generator.
    std::string digest() const {
        Sha256 h;
        h.update_u64(seed_).update_i64(epoch_).update_u64(tx_counter_).update_u64(id_counter_);
        h.update_u64(accounts_.size());
        for (const auto& a : accounts_) {
            h.update_field(a.id).update_u64(static_cast<std::uint64_t>(a.kind)).update_i64(a.instance);
            h.update_u64(a.utxos.size());
            for (auto u : a.utxos) h.update_f64(u);
            h.update_i64(a.last_time).update_u64(a.sent_once).update_u64(a.received_once);
        }
        h.update_u64(log_.size());
        for (const auto& r : log_) hash_record(h, r);
        h.update_u64(genesis_.size());
        for (const auto& g : genesis_) h.update_u64(index_of(g.account)).update_f64(g.value);
        h.update_field(rng_.state());
        return to_hex(h.finish());
    }

private:
    void check(AccountRef r) const {
        if (index_of(r) >= accounts_.size())
            throw UnknownAccount("unknown account reference " + std::to_string(index_of(r)));
    }

    void journal(AccountRef r) {
        if (*live_ > 0) journal_.emplace_back(index_of(r), accounts_[index_of(r)]);
    }

    void touch(AccountRef r, Timestamp ts) {
        Account& a = accounts_[index_of(r)];
        a.last_time = std::max(a.last_time, ts);
    }

    static void hash_record(Sha256& h, const TransactionRecord& r) {
        h.update_field(r.hash).update_i64(r.timestamp).update_f64(r.fee);
        h.update_u64(r.inputs.size());
        for (std::size_t i = 0; i < r.inputs.size(); ++i) h.update_u64(index_of(r.inputs[i])).update_f64(r.in_values[i]);
        h.update_u64(r.outputs.size());
        for (std::size_t i = 0; i < r.outputs.size(); ++i)
            h.update_u64(index_of(r.outputs[i])).update_f64(r.out_values[i]);
    }

    std::string make_hash(const TransactionRecord& r) const {
        Sha256 h;
        h.update_field("tx").update_u64(tx_counter_).update_u64(seed_).update_i64(r.timestamp);
        h.update_u64(r.inputs.size());
        for (auto a : r.inputs) h.update_field(accounts_[index_of(a)].id);
        h.update_u64(r.outputs.size());
        for (auto a : r.outputs) h.update_field(accounts_[index_of(a)].id);
        return to_hex(h.finish());
    }

    std::uint64_t seed_;
    Timestamp epoch_;
    Rng rng_;
    std::vector<Account> accounts_;
    std::unordered_map<std::string, AccountRef> index_;
    std::vector<TransactionRecord> log_;
    std::vector<GenesisUtxo> genesis_;
    std::uint64_t tx_counter_ = 0;
    std::uint64_t id_counter_ = 0;
    std::vector<std::pair<std::size_t, Account>> journal_;
    std::shared_ptr<std::size_t> live_;
};

// Replays genesis plus the log and returns every account's UTXO multiset
// (sorted). Used to check that ledger state is fully explained by the log.
inline std::vector<std::vector<Satoshi>> replay_utxos(std::size_t account_count,
                                                      std::span<const GenesisUtxo> genesis,
                                                      std::span<const TransactionRecord> log) {
    std::vector<std::vector<Satoshi>> u(account_count);
    for (const auto& g : genesis) u[index_of(g.account)].push_back(g.value);
    for (const auto& r : log) {
        for (std::size_t i = 0; i < r.inputs.size(); ++i) {
            auto& v = u[index_of(r.inputs[i])];
            auto it = std::find(v.begin(), v.end(), r.in_values[i]);
            if (it == v.end()) throw InvariantViolation("replay: spend of a missing UTXO in " + r.hash);
            v.erase(it);
        }
        for (std::size_t i = 0; i < r.outputs.size(); ++i) u[index_of(r.outputs[i])].push_back(r.out_values[i]);
    }
    for (auto& v : u) std::sort(v.begin(), v.end());
    return u;
}

}  // namespace amlsim
