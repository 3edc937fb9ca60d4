#pragma once

#include <deque>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "amlsim/config.hpp"
#include "amlsim/ledger.hpp"

namespace amlsim {

// One generator invocation as seen by the trace log.
struct TraceEntry {
    std::size_t step = 0;         // 1-based plan step (0 outside a plan)
    std::size_t row = 0;          // 1-based schema row (0 for synthesized steps)
    std::string module;           // generator name
    int subclass = 0;             // mixer subclass, 0 otherwise
    std::size_t script_step = 0;  // 1-based position inside a mixer script
    bool funds = false;           // draws from the mixer's Funds pool
    std::size_t requested = 0;
    std::vector<std::string> hashes;
    std::string note;
};

struct EscrowTrade {
    AccountRef escrow;
    AccountRef party1;
    AccountRef party2;
    Satoshi leg1 = 0;
    Satoshi leg2 = 0;
    Timestamp ts = 0;
};
using EscrowBook = std::deque<EscrowTrade>;

// Principal per depositor, in order of first deposit.
struct DepositEntry {
    AccountRef account;
    Satoshi principal = 0;
};
using DepositBook = std::vector<DepositEntry>;

inline void add_deposit(DepositBook& book, AccountRef a, Satoshi v) {
    for (auto& e : book)
        if (e.account == a) {
            e.principal += v;
            return;
        }
    book.push_back({a, v});
}

class Simulation {
public:
    explicit Simulation(std::uint64_t seed = 0, Timestamp epoch = 0, SimConfig cfg = {})
        : ledger_(seed, epoch), cfg_(std::move(cfg)) {
        cfg_.validate();
    }

    Ledger& ledger() { return ledger_; }
    const Ledger& ledger() const { return ledger_; }
    const SimConfig& config() const { return cfg_; }
    Rng& rng() { return ledger_.rng(); }

    std::vector<TraceEntry>& trace() { return trace_; }
    const std::vector<TraceEntry>& trace() const { return trace_; }

    // Books are keyed by the pool they belong to (escrow pool, lender pool).
    std::map<std::size_t, EscrowBook> escrow_books;
    std::map<std::size_t, DepositBook> deposit_books;

    // Called after every committed record; may throw to abort the step.
    std::function<void(const TransactionRecord&)> on_commit;

    std::size_t commit(std::span<const AccountRef> inputs, std::span<const AccountRef> outputs,
                       std::span<const Satoshi> in_values, Satoshi fee, Timestamp ts, const SplitPolicy& policy) {
        const auto& rec = ledger_.apply_update(inputs, outputs, in_values, fee, ts, policy);
        if (!trace_.empty() && tracing_) trace_.back().hashes.push_back(rec.hash);
        if (on_commit) on_commit(rec);
        return ledger_.log().size() - 1;
    }

    struct Checkpoint {
        Snapshot snapshot;
        std::map<std::size_t, EscrowBook> escrow_books;
        std::map<std::size_t, DepositBook> deposit_books;
        std::size_t trace_size = 0;
        bool tracing = false;
    };

    Checkpoint checkpoint() {
        return {ledger_.snapshot(), escrow_books, deposit_books, trace_.size(), tracing_};
    }

    void restore(const Checkpoint& c) {
        ledger_.rollback(c.snapshot);
        escrow_books = c.escrow_books;
        deposit_books = c.deposit_books;
        trace_.resize(c.trace_size);
        tracing_ = c.tracing;
    }

    // Opens a trace entry that collects the hashes of subsequent commits.
    TraceEntry& begin_trace(TraceEntry e) {
        trace_.push_back(std::move(e));
        tracing_ = true;
        return trace_.back();
    }
    void end_trace() { tracing_ = false; }

private:
    Ledger ledger_;
    SimConfig cfg_;
    std::vector<TraceEntry> trace_;
    bool tracing_ = false;
};

// Runs f with all-or-nothing semantics on the simulation state.
template <class F>
auto atomically(Simulation& sim, F&& f) {
    auto cp = sim.checkpoint();
    try {
        return f();
    } catch (...) {
        sim.restore(cp);
        throw;
    }
}

}  // namespace amlsim
