#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "amlsim/ledger.hpp"
#include "amlsim/schema.hpp"
#include "amlsim/simulation.hpp"

namespace amlsim {

struct GenRequest {
    std::vector<AccountRef> senders;
    std::vector<AccountRef> receivers;
    std::size_t quantity = 1;
    std::size_t min_inputs = 1;
    Timestamp latest_ts = 0;
    TimeDist dist = TimeDist::Uniform;
    // Receivers spend later in the plan: keep their outputs above the
    // availability threshold where the value allows it.
    bool spendable_outputs = false;
    // UTXO entries later plan steps expect from these senders; they are
    // not drawn on for inputs beyond the per-transaction minimum.
    std::size_t held_back = 0;
};

enum class SingleUseMode { SglSgl, SglGen, GenSgl };

namespace detail {

struct TransferOptions {
    bool sender_single_use = false;
    bool receiver_single_use = false;
    bool equal = false;
    std::optional<SidePattern> pattern;
    double retain_rate = 0.0;  // change share returned to the first input
    std::function<void(const TransactionRecord&)> after;
};

inline void check_request(const GenRequest& r) {
    if (r.quantity < 1) throw SimError("quantity must be at least 1");
    if (r.min_inputs < 1) throw SimError("min_inputs must be at least 1");
    if (r.senders.empty()) throw PoolExhausted("empty sender pool");
    if (r.receivers.empty()) throw PoolExhausted("empty receiver pool");
}

inline Timestamp pool_lower(const Ledger& l, std::span<const AccountRef> a, std::span<const AccountRef> b) {
    return std::max(l.max_last_time(a), l.max_last_time(b));
}

inline Timestamp tx_time(const Ledger& l, Timestamp sampled, std::span<const AccountRef> ins,
                         std::span<const AccountRef> outs, Timestamp upper) {
    const Timestamp t = std::max({sampled, l.max_last_time(ins), l.max_last_time(outs)});
    if (t > upper)
        throw ScheduleError("participants were last active after the preferred timestamp " + format_iso8601(upper));
    return t;
}

// Picks one distinct UTXO above the threshold per chosen availability entry.
// `largest` takes each account's biggest UTXOs instead of random ones.
inline std::vector<Satoshi> pick_utxos(const Ledger& l, std::span<const AccountRef> chosen, Satoshi threshold,
                                       bool largest, Rng& rng) {
    std::vector<Satoshi> values(chosen.size());
    std::unordered_map<std::size_t, std::vector<std::size_t>> used;  // account -> utxo indices
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        const auto& utxos = l.account(chosen[i]).utxos;
        auto& u = used[index_of(chosen[i])];
        std::vector<std::size_t> cand;
        for (std::size_t j = 0; j < utxos.size(); ++j)
            if (utxos[j] > threshold && std::find(u.begin(), u.end(), j) == u.end()) cand.push_back(j);
        if (cand.empty()) throw InsufficientFunds("account " + l.account(chosen[i]).id + " has no spendable UTXO");
        std::size_t j;
        if (largest) {
            j = *std::max_element(cand.begin(), cand.end(), [&](auto a, auto b) { return utxos[a] < utxos[b]; });
        } else {
            j = cand[rng.index(cand.size())];
        }
        u.push_back(j);
        values[i] = utxos[j];
    }
    return values;
}

// `n` distinct accounts from a general pool.
inline std::vector<AccountRef> sample_distinct(std::span<const AccountRef> pool, std::size_t n, Rng& rng) {
    std::vector<AccountRef> out;
    if (n > pool.size()) throw PoolExhausted("receiver pool too small");
    if (n * 3 > pool.size()) {
        std::vector<AccountRef> copy(pool.begin(), pool.end());
        return rng.take(copy, n);
    }
    while (out.size() < n) {
        const AccountRef a = pool[rng.index(pool.size())];
        if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
    }
    return out;
}

inline std::size_t uniform_count(Rng& rng, std::size_t lo, std::size_t hi) {
    return static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
}

// Shared loop behind the regular, gen->gen, single-use and lending-stage
// generators. Not atomic on its own.
inline std::vector<std::size_t> transfer(Simulation& sim, const GenRequest& req, const TransferOptions& opt) {
    check_request(req);
    Ledger& l = sim.ledger();
    Rng& rng = sim.rng();
    const SimConfig& cfg = sim.config();
    const Satoshi thr = cfg.availability_threshold;

    std::vector<AccountRef> ac =
        opt.sender_single_use ? l.avail_single_use_sender(req.senders, thr) : l.avail_general(req.senders, thr);
    std::vector<AccountRef> fresh;
    if (opt.receiver_single_use) {
        for (auto r : l.avail_receiver_capacity(req.receivers))
            if (l.account(r).kind == EntityKind::SingleUse) fresh.push_back(r);
    }
    std::vector<char> is_sender;
    if (!opt.sender_single_use) {
        is_sender.assign(l.account_count(), 0);
        for (auto s : req.senders) is_sender[index_of(s)] = 1;
    }

    const std::size_t in_cap = opt.sender_single_use ? std::min(cfg.input_cap, cfg.single_use_side_max) : cfg.input_cap;
    const std::size_t out_side_cap =
        opt.receiver_single_use ? std::min(cfg.output_cap, cfg.single_use_side_max) : cfg.output_cap;
    const auto times =
        sample_timestamps(req.quantity, pool_lower(l, req.senders, req.receivers), req.latest_ts, req.dist, rng);

    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < req.quantity; ++t) {
        const std::size_t remaining = req.quantity - t - 1;
        const std::size_t per_tx = opt.pattern ? opt.pattern->inputs : req.min_inputs;
        const std::size_t reserved = remaining * per_tx;
        if (ac.size() < reserved + per_tx)
            throw InsufficientFunds("transaction " + std::to_string(t + 1) + " of " + std::to_string(req.quantity) +
                                    ": " + std::to_string(ac.size()) + " spendable UTXOs left, need " +
                                    std::to_string(reserved + per_tx));
        std::size_t k = per_tx;
        const std::size_t soft = reserved + per_tx + req.held_back;
        const std::size_t spare = ac.size() > soft ? ac.size() - soft : 0;
        if (!opt.pattern) k = uniform_count(rng, per_tx, std::min(in_cap, per_tx + spare));
        if (opt.pattern && k > in_cap && opt.sender_single_use) throw DustViolation("pattern exceeds side limit");

        const auto inputs = rng.take(ac, k);
        const auto in_values = pick_utxos(l, inputs, thr, opt.pattern.has_value(), rng);
        const Satoshi in_sum = std::accumulate(in_values.begin(), in_values.end(), 0.0);
        const Satoshi fee = compute_fee(k, in_sum);
        const Satoshi rem = in_sum - fee;
        const bool retain = opt.retain_rate > 0 && rem * opt.retain_rate >= kDustThreshold;
        const Satoshi usable = retain ? rem * (1.0 - opt.retain_rate) : rem;

        std::size_t eligible = req.receivers.size();
        if (opt.receiver_single_use) {
            if (fresh.size() <= remaining) throw PoolExhausted("single-use receivers exhausted");
            eligible = fresh.size() - remaining;
        }
        const std::size_t m = static_cast<std::size_t>(std::floor(usable / kDustThreshold));
        Satoshi floor = kDustThreshold;
        std::size_t n;
        if (opt.pattern) {
            n = opt.pattern->outputs;
            if (n > m) throw DustViolation("pattern needs " + std::to_string(n) + " outputs, value allows " + std::to_string(m));
            if (n > eligible) throw PoolExhausted("pattern needs more receivers than available");
        } else {
            std::size_t cap = std::min({m, eligible, out_side_cap});
            if (req.spendable_outputs) {
                const Satoshi keep = thr + 1.0;
                const auto spendable_cap = static_cast<std::size_t>(std::floor(usable / keep));
                if (spendable_cap >= 1) {
                    cap = std::min(cap, spendable_cap);
                    floor = keep;
                }
            }
            if (cap == 0) throw DustViolation("input value cannot fund one output");
            n = uniform_count(rng, 1, cap);
        }

        std::vector<AccountRef> outputs;
        if (opt.receiver_single_use) outputs = rng.take(fresh, n);
        else outputs = sample_distinct(req.receivers, n, rng);

        SplitPolicy policy = split::Random{floor};
        if (opt.equal) policy = split::Equal{};
        if (retain) {
            std::vector<double> w = opt.equal ? std::vector<double>(n, usable / static_cast<double>(n))
                                              : split_random(usable, n, rng, floor);
            w.push_back(rem * opt.retain_rate);
            outputs.push_back(inputs.front());
            policy = split::Proportional{std::move(w)};
        }

        const Timestamp ts = tx_time(l, times[t], inputs, outputs, req.latest_ts);
        const std::size_t idx = sim.commit(inputs, outputs, in_values, fee, ts, policy);
        const auto& rec = l.log()[idx];
        if (!opt.sender_single_use) {
            for (std::size_t i = 0; i < rec.outputs.size(); ++i) {
                const auto o = rec.outputs[i];
                if (index_of(o) < is_sender.size() && is_sender[index_of(o)] && rec.out_values[i] > thr &&
                    l.account(o).kind != EntityKind::SingleUse)
                    ac.push_back(o);
            }
        }
        if (opt.after) opt.after(rec);
        out.push_back(idx);
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// General templates
// ---------------------------------------------------------------------------

inline std::vector<std::size_t> gen_regular(Simulation& sim, const GenRequest& req) {
    return atomically(sim, [&] { return detail::transfer(sim, req, {}); });
}

// With a side pattern every record has exactly (inputs, outputs) accounts.
inline std::vector<std::size_t> gen_gen_gen(Simulation& sim, const GenRequest& req,
                                            std::optional<SidePattern> pattern = std::nullopt) {
    detail::TransferOptions opt;
    opt.pattern = pattern;
    if (pattern && (pattern->inputs < 1 || pattern->outputs < 1)) throw SimError("pattern sides must be positive");
    return atomically(sim, [&] { return detail::transfer(sim, req, opt); });
}

inline std::vector<std::size_t> gen_single_use(Simulation& sim, SingleUseMode mode, bool cj_variant,
                                               const GenRequest& req) {
    detail::TransferOptions opt;
    opt.sender_single_use = mode != SingleUseMode::GenSgl;
    opt.receiver_single_use = mode != SingleUseMode::SglGen;
    opt.equal = cj_variant;
    return atomically(sim, [&] { return detail::transfer(sim, req, opt); });
}

// Inputs and outputs each mix accounts of both pools.
inline std::vector<std::size_t> gen_inout(Simulation& sim, const GenRequest& req) {
    return atomically(sim, [&] {
        detail::check_request(req);
        Ledger& l = sim.ledger();
        Rng& rng = sim.rng();
        const auto& cfg = sim.config();
        const Satoshi thr = cfg.availability_threshold;
        auto ac_s = l.avail_general(req.senders, thr);
        auto ac_r = l.avail_general(req.receivers, thr);
        std::vector<char> side(l.account_count(), 0);
        for (auto a : req.senders) side[index_of(a)] |= 1;
        for (auto a : req.receivers) side[index_of(a)] |= 2;
        const auto times =
            sample_timestamps(req.quantity, detail::pool_lower(l, req.senders, req.receivers), req.latest_ts, req.dist, rng);
        std::vector<std::size_t> out;
        for (std::size_t t = 0; t < req.quantity; ++t) {
            const std::size_t remaining = req.quantity - t - 1;
            if (ac_s.size() < (remaining + 1) || ac_r.size() < (remaining + 1))
                throw InsufficientFunds("in+out transaction " + std::to_string(t + 1) + ": a side ran out of UTXOs");
            // At least one input from each side, the rest from the sender side.
            const std::size_t total_cap = std::min(cfg.input_cap, ac_s.size() - remaining + 1);
            const std::size_t k = detail::uniform_count(rng, std::max<std::size_t>(2, req.min_inputs), std::max<std::size_t>(2, std::max(req.min_inputs, total_cap)));
            std::vector<AccountRef> inputs = rng.take(ac_r, 1);
            for (auto a : rng.take(ac_s, std::min(k - 1, ac_s.size() - remaining))) inputs.push_back(a);
            rng.shuffle(inputs);
            const auto in_values = detail::pick_utxos(l, inputs, thr, false, rng);
            const Satoshi in_sum = std::accumulate(in_values.begin(), in_values.end(), 0.0);
            const Satoshi fee = compute_fee(inputs.size(), in_sum);
            const auto m = compute_max_outputs(in_sum, fee);
            const std::size_t cap = std::min({m, cfg.output_cap, req.senders.size() + req.receivers.size()});
            if (cap < 2) throw DustViolation("in+out transaction cannot fund outputs on both sides");
            const std::size_t n = detail::uniform_count(rng, 2, cap);
            const std::size_t n_s = std::min(req.senders.size(), detail::uniform_count(rng, 1, n - 1));
            std::vector<AccountRef> outputs = detail::sample_distinct(req.senders, n_s, rng);
            for (auto a : detail::sample_distinct(req.receivers, std::min(n - n_s, req.receivers.size()), rng))
                outputs.push_back(a);
            const Timestamp ts = detail::tx_time(l, times[t], inputs, outputs, req.latest_ts);
            const auto idx = sim.commit(inputs, outputs, in_values, fee, ts, split::Random{});
            const auto& rec = l.log()[idx];
            for (std::size_t i = 0; i < rec.outputs.size(); ++i) {
                if (rec.out_values[i] <= thr) continue;
                const auto o = rec.outputs[i];
                if (side[index_of(o)] & 1) ac_s.push_back(o);
                else if (side[index_of(o)] & 2) ac_r.push_back(o);
            }
            out.push_back(idx);
        }
        return out;
    });
}

// Both pools act on both sides; every participant receives the same amount.
inline std::vector<std::size_t> gen_coinjoin(Simulation& sim, const GenRequest& req) {
    return atomically(sim, [&] {
        detail::check_request(req);
        Ledger& l = sim.ledger();
        Rng& rng = sim.rng();
        const auto& cfg = sim.config();
        const Satoshi thr = cfg.availability_threshold;
        auto ac_s = l.avail_general(req.senders, thr);
        auto ac_r = l.avail_general(req.receivers, thr);
        std::vector<char> in_s(l.account_count(), 0);
        for (auto a : req.senders) in_s[index_of(a)] = 1;
        const auto times =
            sample_timestamps(req.quantity, detail::pool_lower(l, req.senders, req.receivers), req.latest_ts, req.dist, rng);
        std::vector<std::size_t> out;
        for (std::size_t t = 0; t < req.quantity; ++t) {
            const std::size_t avail = ac_s.size() + ac_r.size();
            if (ac_s.empty() || ac_r.empty() || avail < cfg.coinjoin_min)
                throw InsufficientFunds("coinjoin needs at least " + std::to_string(cfg.coinjoin_min) +
                                        " participants with one from each pool, " + std::to_string(avail) +
                                        " available");
            const std::size_t p = detail::uniform_count(rng, cfg.coinjoin_min, std::min(cfg.coinjoin_max, avail));
            std::vector<AccountRef> parts = rng.take(ac_s, 1);
            parts.push_back(rng.take(ac_r, 1).front());
            // Remaining participants come from the union, drawn proportionally.
            while (parts.size() < p) {
                const std::size_t j = rng.index(ac_s.size() + ac_r.size());
                if (j < ac_s.size()) parts.push_back(rng.take(ac_s, 1).front());
                else parts.push_back(rng.take(ac_r, 1).front());
            }
            const auto in_values = detail::pick_utxos(l, parts, thr, false, rng);
            const Satoshi in_sum = std::accumulate(in_values.begin(), in_values.end(), 0.0);
            const Satoshi fee = compute_fee(parts.size(), in_sum);
            const Timestamp ts = detail::tx_time(l, times[t], parts, parts, req.latest_ts);
            const auto idx = sim.commit(parts, parts, in_values, fee, ts, split::Equal{});
            const auto& rec = l.log()[idx];
            for (std::size_t i = 0; i < rec.outputs.size(); ++i) {
                if (rec.out_values[i] <= thr) continue;
                (in_s[index_of(rec.outputs[i])] ? ac_s : ac_r).push_back(rec.outputs[i]);
            }
            out.push_back(idx);
        }
        return out;
    });
}

// ---------------------------------------------------------------------------
// Crypto lending
// ---------------------------------------------------------------------------

// Depositors -> lender. Each input account is credited with its share of
// the value that reached the lender.
inline std::vector<std::size_t> gen_dli_deposit(Simulation& sim, const GenRequest& req, DepositBook& book) {
    return atomically(sim, [&] {
        DepositBook staged = book;
        detail::TransferOptions opt;
        opt.after = [&](const TransactionRecord& r) {
            const Satoshi in_sum = r.in_sum();
            const Satoshi delivered = r.out_sum();
            for (std::size_t i = 0; i < r.inputs.size(); ++i)
                add_deposit(staged, r.inputs[i], delivered * r.in_values[i] / in_sum);
        };
        auto out = detail::transfer(sim, req, opt);
        book = std::move(staged);
        return out;
    });
}

// Lender -> investors, keeping the retain share as change on the lender.
inline std::vector<std::size_t> gen_dli_invest(Simulation& sim, const GenRequest& req) {
    detail::TransferOptions opt;
    opt.retain_rate = sim.config().lending_retain_rate;
    return atomically(sim, [&] { return detail::transfer(sim, req, opt); });
}

inline std::vector<std::size_t> gen_ild_return(Simulation& sim, const GenRequest& req) { return gen_regular(sim, req); }

// Lender -> depositors. Transaction j pays chunk j of the depositors present
// in `req.receivers`, each in proportion to principal, aiming at principal
// plus interest and capped by the value the lender can put in.
inline std::vector<std::size_t> gen_ild_payout(Simulation& sim, const GenRequest& req, const DepositBook& book) {
    return atomically(sim, [&] {
        detail::check_request(req);
        Ledger& l = sim.ledger();
        Rng& rng = sim.rng();
        const auto& cfg = sim.config();
        const Satoshi thr = cfg.availability_threshold;

        std::vector<char> wanted(l.account_count(), 0);
        for (auto r : req.receivers) wanted[index_of(r)] = 1;
        std::vector<DepositEntry> payees;
        for (const auto& e : book)
            if (index_of(e.account) < wanted.size() && wanted[index_of(e.account)] && e.principal > 0) payees.push_back(e);
        if (payees.empty()) throw SimError("no recorded deposits from the receiving pool");
        const std::size_t chunk = cfg.output_cap - 1;
        const std::size_t n_chunks = (payees.size() + chunk - 1) / chunk;

        // Spendable lender UTXOs as (account, value).
        std::vector<std::pair<AccountRef, Satoshi>> pot;
        for (auto a : req.senders)
            for (auto v : l.account(a).utxos)
                if (v > thr) pot.push_back({a, v});

        const auto times =
            sample_timestamps(req.quantity, detail::pool_lower(l, req.senders, req.receivers), req.latest_ts, req.dist, rng);
        std::vector<std::size_t> out;
        for (std::size_t t = 0; t < req.quantity; ++t) {
            const std::size_t c = t % n_chunks;
            std::vector<DepositEntry> group(payees.begin() + static_cast<std::ptrdiff_t>(c * chunk),
                                            payees.begin() + static_cast<std::ptrdiff_t>(std::min(payees.size(), (c + 1) * chunk)));
            Satoshi desired = 0;
            for (const auto& e : group) desired += e.principal * (1.0 + cfg.lending_interest_rate);

            // Largest UTXOs first until the payout and fee are covered.
            std::sort(pot.begin(), pot.end(), [](const auto& a, const auto& b) {
                return a.second != b.second ? a.second > b.second : index_of(a.first) < index_of(b.first);
            });
            std::vector<AccountRef> inputs;
            std::vector<Satoshi> in_values;
            Satoshi in_sum = 0;
            std::size_t used = 0;
            while (used < pot.size() && used < cfg.input_cap) {
                inputs.push_back(pot[used].first);
                in_values.push_back(pot[used].second);
                in_sum += pot[used].second;
                ++used;
                if (in_sum - compute_fee(inputs.size(), in_sum) >= desired + kDustThreshold) break;
            }
            if (inputs.empty()) throw InsufficientFunds("lender has no spendable UTXO for payouts");
            pot.erase(pot.begin(), pot.begin() + static_cast<std::ptrdiff_t>(used));
            const Satoshi fee = compute_fee(inputs.size(), in_sum);
            const Satoshi rem = in_sum - fee;

            std::vector<AccountRef> outputs;
            std::vector<double> weights;
            Satoshi change = 0;
            Satoshi payable = desired;
            if (rem >= desired + kDustThreshold) {
                change = rem - desired;
            } else {
                payable = rem;
            }
            // Drop the smallest principals until every payout clears dust.
            std::sort(group.begin(), group.end(), [](const auto& a, const auto& b) {
                return a.principal != b.principal ? a.principal > b.principal : index_of(a.account) < index_of(b.account);
            });
            while (!group.empty()) {
                Satoshi total = 0;
                for (const auto& e : group) total += e.principal;
                if (payable * group.back().principal / total >= kDustThreshold) break;
                group.pop_back();
            }
            if (group.empty()) throw DustViolation("lender value cannot pay any depositor above dust");
            Satoshi total = 0;
            for (const auto& e : group) total += e.principal;
            if (payable == desired) {
                // Only the remaining depositors are paid; what is left is change.
                Satoshi paid = 0;
                for (const auto& e : group) paid += e.principal * (1.0 + cfg.lending_interest_rate);
                change = rem - paid;
                payable = paid;
            }
            for (const auto& e : group) {
                outputs.push_back(e.account);
                weights.push_back(payable * e.principal / total);
            }
            if (change >= kDustThreshold) {
                outputs.push_back(inputs.front());
                weights.push_back(change);
            } else if (change > 0) {
                // Fold sub-dust change into the payouts proportionally.
                for (auto& w : weights) w += change * w / payable;
            }
            const Timestamp ts = detail::tx_time(l, times[t], inputs, outputs, req.latest_ts);
            const auto idx = sim.commit(inputs, outputs, in_values, fee, ts, split::Proportional{std::move(weights)});
            const auto& rec = l.log()[idx];
            if (change >= kDustThreshold && rec.out_values.back() > thr) pot.push_back({rec.outputs.back(), rec.out_values.back()});
            out.push_back(idx);
        }
        return out;
    });
}

// Two-stage compositions.
inline std::vector<std::size_t> gen_dli(Simulation& sim, const GenRequest& deposit, const GenRequest& invest,
                                        DepositBook& book) {
    return atomically(sim, [&] {
        auto a = gen_dli_deposit(sim, deposit, book);
        auto b = gen_dli_invest(sim, invest);
        a.insert(a.end(), b.begin(), b.end());
        return a;
    });
}

inline std::vector<std::size_t> gen_ild(Simulation& sim, const GenRequest& inflow, const GenRequest& payout,
                                        const DepositBook& book) {
    return atomically(sim, [&] {
        auto a = gen_ild_return(sim, inflow);
        auto b = gen_ild_payout(sim, payout, book);
        a.insert(a.end(), b.begin(), b.end());
        return a;
    });
}

// ---------------------------------------------------------------------------
// P2P trades and escrow settlement
// ---------------------------------------------------------------------------

namespace detail {

struct Leg {
    std::vector<Satoshi> values;
    Satoshi in_sum = 0;
};

// Largest UTXOs of `a` (above threshold), at most `cap`.
inline Leg largest_utxos(const Ledger& l, AccountRef a, Satoshi thr, std::size_t cap) {
    Leg g;
    for (auto v : l.account(a).utxos)
        if (v > thr) g.values.push_back(v);
    std::sort(g.values.begin(), g.values.end(), std::greater<>());
    if (g.values.size() > cap) g.values.resize(cap);
    for (auto v : g.values) g.in_sum += v;
    return g;
}

// Largest trade (before the deposit) an account can put into escrow.
inline Satoshi affordable_trade(const Ledger& l, AccountRef a, const SimConfig& cfg) {
    const Leg g = largest_utxos(l, a, cfg.availability_threshold, cfg.input_cap);
    if (g.values.empty() || g.in_sum <= kFeePerInput + kDustThreshold) return 0;
    return (g.in_sum - compute_fee(g.values.size(), g.in_sum)) / (1.0 + cfg.escrow_deposit_rate);
}

}  // namespace detail

// Each trade: party1 -> escrow and party2 -> escrow, each leg carrying the
// traded amount plus the security deposit. Both parties come from `req.senders`;
// the escrow account is drawn from `req.receivers`.
inline std::vector<std::size_t> gen_p2p(Simulation& sim, const GenRequest& req, EscrowBook& book) {
    return atomically(sim, [&] {
        detail::check_request(req);
        Ledger& l = sim.ledger();
        Rng& rng = sim.rng();
        const auto& cfg = sim.config();
        const Satoshi thr = cfg.availability_threshold;
        const Satoshi min_trade = std::max(cfg.trade_min, cfg.p2p_min_trade);
        EscrowBook staged = book;
        const auto times =
            sample_timestamps(req.quantity, detail::pool_lower(l, req.senders, req.receivers), req.latest_ts, req.dist, rng);
        std::vector<std::size_t> out;

        auto find_party = [&](AccountRef other, bool has_other) -> AccountRef {
            for (int attempt = 0; attempt < 64; ++attempt) {
                const AccountRef a = req.senders[rng.index(req.senders.size())];
                if (has_other && a == other) continue;
                if (detail::affordable_trade(l, a, cfg) >= min_trade) return a;
            }
            for (auto a : req.senders)  // deterministic fallback scan
                if ((!has_other || a != other) && detail::affordable_trade(l, a, cfg) >= min_trade) return a;
            throw InsufficientFunds("no party can fund a trade of at least " + std::to_string(min_trade));
        };

        auto leg = [&](AccountRef party, AccountRef escrow, Timestamp ts) -> std::pair<std::size_t, Satoshi> {
            const Satoshi hi = std::min(cfg.trade_max, detail::affordable_trade(l, party, cfg));
            const Satoshi amount = rng.log_uniform(min_trade, std::max(min_trade, hi));
            const Satoshi target = amount * (1.0 + cfg.escrow_deposit_rate);
            const auto all = detail::largest_utxos(l, party, thr, cfg.input_cap);
            std::vector<Satoshi> in_values;
            Satoshi in_sum = 0;
            for (auto v : all.values) {
                in_values.push_back(v);
                in_sum += v;
                if (in_sum - compute_fee(in_values.size(), in_sum) >= target) break;
            }
            const Satoshi fee = compute_fee(in_values.size(), in_sum);
            const Satoshi rem = in_sum - fee;
            std::vector<AccountRef> ins(in_values.size(), party);
            std::vector<AccountRef> outs{escrow};
            SplitPolicy policy = split::Equal{};
            if (rem - target >= kDustThreshold) {
                outs.push_back(party);
                policy = split::Proportional{{target, rem - target}};
            }
            const Timestamp t = detail::tx_time(l, ts, ins, outs, req.latest_ts);
            const auto idx = sim.commit(ins, outs, in_values, fee, t, policy);
            return {idx, l.log()[idx].out_values.front()};
        };

        for (std::size_t t = 0; t < req.quantity; ++t) {
            const AccountRef p1 = find_party(AccountRef{}, false);
            const AccountRef p2 = find_party(p1, true);
            const AccountRef escrow = req.receivers[rng.index(req.receivers.size())];
            const auto [i1, v1] = leg(p1, escrow, times[t]);
            const auto [i2, v2] = leg(p2, escrow, times[t]);
            staged.push_back({escrow, p1, p2, v1, v2, l.log()[i2].timestamp});
            out.push_back(i1);
            out.push_back(i2);
        }
        book = std::move(staged);
        return out;
    });
}

struct SettleResult {
    std::vector<std::size_t> records;
    std::size_t unmatched = 0;  // requested settlements with no pending trade
};

// Settles up to `req.quantity` pending trades (oldest first). Outputs are
// [payee of party1's amount, payee of party2's amount, party1 deposit return,
// party2 deposit return, platform fee]; payees are drawn from `req.receivers`
// and the platform fee goes to a `dex` account.
inline SettleResult gen_escrow_settle(Simulation& sim, const GenRequest& req, std::span<const AccountRef> dex,
                                      EscrowBook& book) {
    return atomically(sim, [&] {
        if (req.receivers.empty()) throw PoolExhausted("empty payee pool");
        if (dex.empty()) throw PoolExhausted("no decentralized exchange account for platform fees");
        Ledger& l = sim.ledger();
        Rng& rng = sim.rng();
        const auto& cfg = sim.config();
        EscrowBook staged = book;
        std::vector<char> in_pool(l.account_count(), 0);
        for (auto a : req.senders) in_pool[index_of(a)] = 1;

        std::vector<EscrowTrade> todo;
        for (auto it = staged.begin(); it != staged.end() && todo.size() < req.quantity;) {
            if (in_pool[index_of(it->escrow)]) {
                todo.push_back(*it);
                it = staged.erase(it);
            } else {
                ++it;
            }
        }
        SettleResult res;
        res.unmatched = req.quantity - todo.size();
        if (todo.empty()) {
            book = std::move(staged);
            return res;
        }
        std::vector<AccountRef> dex_pool(dex.begin(), dex.end());
        std::vector<AccountRef> scope(req.senders.begin(), req.senders.end());
        scope.insert(scope.end(), dex_pool.begin(), dex_pool.end());
        const auto times = sample_timestamps(todo.size(), detail::pool_lower(l, scope, req.receivers), req.latest_ts,
                                             req.dist, rng);
        const split::FixedFee policy{cfg.escrow_fee_rate, cfg.escrow_deposit_rate};
        for (std::size_t t = 0; t < todo.size(); ++t) {
            const auto& tr = todo[t];
            const auto payees = detail::sample_distinct(req.receivers, std::min<std::size_t>(2, req.receivers.size()), rng);
            const AccountRef payee1 = payees.front(), payee2 = payees.back();
            const AccountRef fee_acct = dex_pool[rng.index(dex_pool.size())];
            const std::vector<AccountRef> ins{tr.escrow, tr.escrow};
            const std::vector<AccountRef> outs{payee1, payee2, tr.party1, tr.party2, fee_acct};
            const std::vector<Satoshi> vals{tr.leg1, tr.leg2};
            const Satoshi fee = compute_fee(2, tr.leg1 + tr.leg2);
            const Timestamp ts = detail::tx_time(l, std::max(times[t], tr.ts), ins, outs, req.latest_ts);
            res.records.push_back(sim.commit(ins, outs, vals, fee, ts, policy));
        }
        book = std::move(staged);
        return res;
    });
}

}  // namespace amlsim
