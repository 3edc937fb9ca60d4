#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "amlsim/config.hpp"
#include "amlsim/dataset.hpp"
#include "amlsim/generators.hpp"
#include "amlsim/mapper.hpp"
#include "amlsim/mixer.hpp"

namespace amlsim {

// A step failed after all attempts; carries the step position.
class StepError : public SimError {
public:
    StepError(std::size_t step, std::size_t row, const std::string& what)
        : SimError("step " + std::to_string(step) + (row ? " (schema row " + std::to_string(row) + ")" : "") + ": " +
                   what),
          step_(step),
          row_(row) {}
    std::size_t step() const { return step_; }
    std::size_t row() const { return row_; }

private:
    std::size_t step_, row_;
};

struct RunOptions {
    bool keep_partial = false;
    std::size_t max_attempts = 3;
    std::size_t progress_every = 10000;
    std::function<void(std::size_t records)> progress;
    // Installed as the simulation's commit hook (fault injection in tests).
    std::function<void(const TransactionRecord&)> on_commit;
    // Called before each plan step with its 1-based index.
    std::function<void(std::size_t step, const Simulation&)> before_step;
};

// Owns a simulation wired to a compiled plan.
class PlanRunner {
public:
    PlanRunner(const ExecutionPlan& plan, const SimConfig& cfg, RunOptions opts = {})
        : plan_(plan), sim_(plan.seed, plan.epoch, cfg), opts_(std::move(opts)) {
        Ledger& l = sim_.ledger();
        refs_.resize(plan.pools.size());
        for (std::size_t p = 0; p < plan.pools.size(); ++p) {
            const auto& pool = plan.pools[p];
            for (const auto& id : pool.ids) {
                refs_[p].push_back(l.add_account(id, pool.kind, pool.instance));
                pool_of_.push_back(pool.key);
                provenance_.push_back(pool.provenance);
            }
        }
        for (const auto& id : plan.outer_ids) {
            l.add_account(id, EntityKind::OuterLayer, 1);
            pool_of_.push_back("OuterLayer");
            provenance_.push_back(EntityKind::OuterLayer);
        }
        // Last (step, invocation) position at which each pool sends.
        last_send_.assign(plan.pools.size(), {0, 0});
        future_.assign(plan.pools.size(), 0.0);
        step_takes_.resize(plan.steps.size());
        for (std::size_t i = 0; i < plan.steps.size(); ++i) {
            const auto invs = expand(plan.steps[i]);
            for (std::size_t j = 0; j < invs.size(); ++j) {
                for (const auto& [p, n] : detail::invocation_flow(invs[j], plan.steps[i]).takes) {
                    if (p == kNoPool || plan.pools[p].kind == EntityKind::SingleUse) continue;
                    future_[p] += n;
                    step_takes_[i].push_back({p, n});
                }
                for (auto s : invs[j].senders) last_send_[s] = {i + 1, j + 1};
                if (invs[j].gen == GeneratorId::Coinjoin || invs[j].gen == GeneratorId::InOut)
                    last_send_[invs[j].receiver] = {i + 1, j + 1};
            }
        }
        sim_.on_commit = [this](const TransactionRecord& r) {
            if (opts_.progress && opts_.progress_every && sim_.ledger().log().size() % opts_.progress_every == 0)
                opts_.progress(sim_.ledger().log().size());
            if (opts_.on_commit) opts_.on_commit(r);
        };
    }

    Simulation& simulation() { return sim_; }
    const std::vector<AccountRef>& pool(std::size_t p) const { return refs_.at(p); }

    void run_seeds() {
        Ledger& l = sim_.ledger();
        TraceEntry t;
        t.module = "outer_funding";
        sim_.begin_trace(std::move(t));
        sim_.trace().back().requested = plan_.seeds.size();
        for (const auto& s : plan_.seeds) {
            const AccountRef outer = l.find(s.outer_id);
            l.mint(outer, s.genesis);
            std::vector<AccountRef> outs;
            for (const auto& id : s.out_ids) outs.push_back(l.find(id));
            const std::vector<AccountRef> ins{outer};
            const std::vector<Satoshi> vals{s.genesis};
            sim_.commit(ins, outs, vals, compute_fee(1, s.genesis), s.ts, split::Proportional{s.out_values});
        }
        sim_.end_trace();
    }

    // Executes plan step `i` (0-based) with retries; throws StepError.
    void run_step(std::size_t i) {
        const auto& step = plan_.steps.at(i);
        if (opts_.before_step) opts_.before_step(i + 1, sim_);
        for (const auto& [p, n] : step_takes_[i]) future_[p] = std::max(0.0, future_[p] - n);
        std::string last_error;
        for (std::size_t attempt = 0; attempt < std::max<std::size_t>(1, opts_.max_attempts); ++attempt) {
            auto cp = sim_.checkpoint();
            try {
                // A retry takes a different random path from the restored state.
                if (attempt) sim_.rng().discard(attempt * 7919);
                execute(i, step);
                return;
            } catch (const SimError& e) {
                sim_.restore(cp);
                last_error = e.what();
            }
        }
        throw StepError(i + 1, step.row, std::string(to_string(step.gen)) + ": " + last_error);
    }

    Dataset dataset() const {
        Dataset d = dataset_from_ledger(sim_.ledger(), pool_of_, provenance_);
        d.trace = sim_.trace();
        for (const auto& [k, book] : sim_.escrow_books) d.pending_trades += book.size();
        return d;
    }

private:
    bool spends_later(std::size_t pool, std::size_t step, std::size_t inv) const {
        const auto& [s, j] = last_send_.at(pool);
        return s > step || (s == step && j > inv);
    }

    std::size_t held_back(const std::vector<std::size_t>& pools) const {
        double n = 0;
        for (auto p : pools) n += future_[p];
        return static_cast<std::size_t>(std::ceil(n));
    }

    GenRequest request(const Invocation& inv, const PlanStep& step, std::size_t i, std::size_t j) const {
        GenRequest g;
        for (auto s : inv.senders) g.senders.insert(g.senders.end(), refs_[s].begin(), refs_[s].end());
        g.receivers = refs_[inv.receiver];
        g.quantity = inv.quantity;
        g.min_inputs = inv.min_inputs;
        g.latest_ts = step.latest_ts;
        g.dist = inv.dist;
        g.spendable_outputs = spends_later(inv.receiver, i + 1, j + 1);
        g.held_back = held_back(inv.senders);
        return g;
    }

    void execute(std::size_t i, const PlanStep& step) {
        TraceEntry base;
        base.step = i + 1;
        base.row = step.row;
        if (step.gen == GeneratorId::Mixer) {
            MixerRequest m;
            m.subclass = step.mixer_subclass;
            m.senders = refs_[step.sender];
            m.receivers = refs_[step.receiver];
            m.mixer = refs_[step.mixer];
            if (step.funds != kNoPool) m.funds = refs_[step.funds];
            for (auto p : step.layers) m.layers.push_back(refs_[p]);
            m.quantity = step.quantity;
            m.min_inputs = step.min_inputs;
            m.latest_ts = step.latest_ts;
            m.held_back[kSlotSenders] = held_back({step.sender});
            m.held_back[kSlotMixer] = held_back({step.mixer});
            if (step.funds != kNoPool) m.held_back[kSlotFunds] = held_back({step.funds});
            m.receivers_spend_later = spends_later(step.receiver, i + 1, mixer_script(step.mixer_subclass).steps.size());
            gen_mixer(sim_, m, base);
            return;
        }
        const auto inv = expand(step).front();
        const GenRequest g = request(inv, step, i, 0);
        base.module = std::string(to_string(step.gen));
        base.requested = step.quantity;
        auto& entry = sim_.begin_trace(base);
        (void)entry;
        switch (step.gen) {
            case GeneratorId::Regular: gen_regular(sim_, g); break;
            case GeneratorId::GenGen: gen_gen_gen(sim_, g, step.pattern); break;
            case GeneratorId::InOut: gen_inout(sim_, g); break;
            case GeneratorId::Coinjoin: gen_coinjoin(sim_, g); break;
            case GeneratorId::SglSgl: gen_single_use(sim_, SingleUseMode::SglSgl, step.cj, g); break;
            case GeneratorId::SglGen: gen_single_use(sim_, SingleUseMode::SglGen, step.cj, g); break;
            case GeneratorId::GenSgl: gen_single_use(sim_, SingleUseMode::GenSgl, step.cj, g); break;
            case GeneratorId::P2p: gen_p2p(sim_, g, sim_.escrow_books[step.receiver]); break;
            case GeneratorId::EscrowSettle: {
                const auto res = gen_escrow_settle(sim_, g, refs_[step.dex], sim_.escrow_books[step.sender]);
                if (res.unmatched)
                    sim_.trace().back().note = std::to_string(res.unmatched) + " requested settlements had no pending trade";
                break;
            }
            case GeneratorId::DliDeposit: gen_dli_deposit(sim_, g, sim_.deposit_books[step.receiver]); break;
            case GeneratorId::DliInvest: gen_dli_invest(sim_, g); break;
            case GeneratorId::IldReturn: gen_ild_return(sim_, g); break;
            case GeneratorId::IldPayout: gen_ild_payout(sim_, g, sim_.deposit_books[step.sender]); break;
            case GeneratorId::Mixer: break;
        }
        sim_.end_trace();
    }

    const ExecutionPlan& plan_;
    Simulation sim_;
    RunOptions opts_;
    std::vector<std::vector<AccountRef>> refs_;
    std::vector<std::string> pool_of_;
    std::vector<EntityKind> provenance_;
    std::vector<std::pair<std::size_t, std::size_t>> last_send_;
    std::vector<double> future_;  // UTXO entries later steps will take, per pool
    std::vector<std::vector<std::pair<std::size_t, double>>> step_takes_;
};

// Executes seeds then steps in order. On a failing step the error propagates
// with the step index, unless `keep_partial` is set, in which case the
// dataset holds every step committed so far and records the error.
inline Dataset run_plan(const ExecutionPlan& plan, const SimConfig& cfg = {}, RunOptions opts = {}) {
    const bool keep_partial = opts.keep_partial;
    PlanRunner runner(plan, cfg, std::move(opts));
    runner.run_seeds();
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        try {
            runner.run_step(i);
        } catch (const StepError& e) {
            if (!keep_partial) throw;
            Dataset d = runner.dataset();
            d.partial = true;
            d.error = e.what();
            d.config_digest = config_digest(cfg);
            return d;
        }
    }
    Dataset d = runner.dataset();
    d.config_digest = config_digest(cfg);
    return d;
}

}  // namespace amlsim
