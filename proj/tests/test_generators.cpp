#include <gtest/gtest.h>

#include <map>
#include <set>

#include "amlsim/invariants.hpp"
#include "amlsim/runner.hpp"

using namespace amlsim;

namespace {

SchemaRow row(const char* s, const char* r, std::size_t q, int day, const char* style = "") {
    SchemaRow x;
    x.sender = parse_entity_spec(s);
    x.receiver = parse_entity_spec(r);
    x.quantity = q;
    x.latest_ts = make_timestamp(2021, 1, 1) + day * kSecondsPerDay;
    if (*style) detail::parse_style(style, x);
    return x;
}

Dataset run_rows(const std::vector<SchemaRow>& rows, std::uint64_t seed = 1) {
    return run_plan(compile(rows, seed));
}

// Records listed under trace entries whose module matches.
std::vector<const TransactionRecord*> records_of(const Dataset& d, const std::string& module) {
    std::map<std::string, const TransactionRecord*> by_hash;
    for (const auto& r : d.records) by_hash[r.hash] = &r;
    std::vector<const TransactionRecord*> out;
    for (const auto& t : d.trace)
        if (t.module == module)
            for (const auto& h : t.hashes) out.push_back(by_hash.at(h));
    return out;
}

std::size_t traced(const Dataset& d, const std::string& module) { return records_of(d, module).size(); }

}  // namespace

TEST(Generators, RegularFulfilsQuantityCleanly) {
    const auto d = run_rows({row("Licit 1", "Exchange 1", 200, 1, ""), row("Exchange 1", "Licit 1", 100, 2)});
    EXPECT_EQ(traced(d, "regular"), 300u);
    EXPECT_TRUE(check_invariants(d).ok());
}

TEST(Generators, MinInputsRespected) {
    auto r = row("Licit 1", "Exchange 1", 50, 1);
    r.min_inputs = 3;
    const auto d = run_rows({r});
    for (const auto* rec : records_of(d, "regular")) EXPECT_GE(rec->inputs.size(), 3u);
}

TEST(Generators, GenGenPatternFixesSides) {
    const auto d = run_rows({row("Licit 1", "Licit 2", 60, 1, "3x2")});
    const auto recs = records_of(d, "gen_gen");
    ASSERT_EQ(recs.size(), 60u);
    for (const auto* rec : recs) {
        EXPECT_EQ(rec->inputs.size(), 3u);
        EXPECT_EQ(rec->outputs.size(), 2u);
    }
}

TEST(Generators, CoinjoinOutputsAreEqual) {
    const auto d = run_rows({row("Licit 1", "Exchange 1", 80, 1, "coinjoin")}, 3);
    const auto recs = records_of(d, "coinjoin");
    ASSERT_EQ(recs.size(), 80u);
    for (const auto* rec : recs) {
        EXPECT_EQ(std::set<Satoshi>(rec->out_values.begin(), rec->out_values.end()).size(), 1u);
        EXPECT_GE(rec->inputs.size(), 4u);
        EXPECT_LE(rec->inputs.size(), 12u);
        EXPECT_EQ(rec->inputs, rec->outputs);
    }
    EXPECT_TRUE(check_invariants(d).ok());
}

TEST(Generators, InOutReturnsToBothSides) {
    const auto d = run_rows({row("Licit 1", "Exchange 1", 40, 1, "inout")}, 4);
    const auto recs = records_of(d, "inout");
    ASSERT_EQ(recs.size(), 40u);
    for (const auto* rec : recs) {
        std::set<std::string> pools;
        for (auto o : rec->outputs) pools.insert(d.accounts[index_of(o)].pool);
        EXPECT_EQ(pools.size(), 2u);
    }
}

TEST(Generators, SingleUseAccountsUsedOnce) {
    const auto d = run_rows({row("Licit 1", "SingleUse 1", 100, 1), row("SingleUse 1", "SingleUse 2", 60, 2),
                             row("SingleUse 2", "Exchange 1", 40, 3)},
                            5);
    std::map<std::size_t, int> sends, recvs;
    for (const auto& r : d.records) {
        for (auto a : r.inputs) sends[index_of(a)]++;
        for (auto a : r.outputs) recvs[index_of(a)]++;
        std::size_t su_in = 0, su_out = 0;
        for (auto a : r.inputs) su_in += d.accounts[index_of(a)].kind == EntityKind::SingleUse;
        for (auto a : r.outputs) su_out += d.accounts[index_of(a)].kind == EntityKind::SingleUse;
        EXPECT_LE(su_in, 3u);
        EXPECT_LE(su_out, 3u);
    }
    for (std::size_t i = 0; i < d.accounts.size(); ++i) {
        if (d.accounts[i].kind != EntityKind::SingleUse) continue;
        EXPECT_LE(sends[i], 1);
        EXPECT_LE(recvs[i], 1);
    }
    EXPECT_EQ(traced(d, "sgl_sgl"), 60u);
    EXPECT_TRUE(check_invariants(d).ok());
}

TEST(Generators, EscrowSettlesToZero) {
    const auto plan = compile({row("Licit 1", "Escrow 1", 30, 1), row("Escrow 1", "Licit 2", 30, 2)}, 6);
    PlanRunner runner(plan, {});
    runner.run_seeds();
    for (std::size_t i = 0; i < plan.steps.size(); ++i) runner.run_step(i);
    const Ledger& l = runner.simulation().ledger();
    for (auto a : runner.pool(plan.pool_index("Escrow 1"))) EXPECT_TRUE(l.account(a).utxos.empty());
    const auto d = runner.dataset();
    EXPECT_EQ(d.pending_trades, 0u);
    const auto settles = records_of(d, "escrow_settle");
    ASSERT_EQ(settles.size(), 30u);
    for (const auto* rec : settles) EXPECT_EQ(rec->inputs.size(), 2u);
    EXPECT_TRUE(check_invariants(d).ok());
}

TEST(Generators, LendingCycle) {
    const auto d = run_rows({row("Licit 1", "InterimAddress 1", 60, 1), row("InterimAddress 1", "CryptoLending 1", 40, 2),
                             row("CryptoLending 1", "Licit 2", 10, 3), row("Licit 2", "CryptoLending 1", 10, 4),
                             row("CryptoLending 1", "InterimAddress 1", 5, 5)},
                            7);
    EXPECT_EQ(traced(d, "dli_deposit"), 40u);
    EXPECT_EQ(traced(d, "dli_invest"), 10u);
    EXPECT_EQ(traced(d, "ild_return"), 10u);
    EXPECT_EQ(traced(d, "ild_payout"), 5u);
    EXPECT_TRUE(check_invariants(d).ok());
}

TEST(Generators, MixerTracesFollowScripts) {
    std::vector<SchemaRow> rows;
    for (int i = 0; i < 4; ++i) rows.push_back(row("Licit 1", "Mixer 1", 26, i + 1));
    const auto d = run_rows(rows, 8);
    std::map<int, std::size_t> steps;
    std::map<int, std::vector<std::size_t>> funds;
    for (const auto& t : d.trace) {
        if (!t.subclass) continue;
        steps[t.subclass]++;
        if (t.funds) funds[t.subclass].push_back(t.script_step);
        EXPECT_EQ(t.hashes.size(), t.requested);
    }
    EXPECT_EQ(steps, (std::map<int, std::size_t>{{1, 5}, {2, 5}, {3, 13}, {4, 9}}));
    EXPECT_EQ(funds[1], (std::vector<std::size_t>{3}));
    EXPECT_EQ(funds[2], (std::vector<std::size_t>{3}));
    EXPECT_EQ(funds[3], (std::vector<std::size_t>{4, 6, 9}));
    EXPECT_EQ(funds[4], (std::vector<std::size_t>{3, 5, 7}));
    EXPECT_TRUE(check_invariants(d).ok());
}

TEST(Atomicity, ThrowInsideRestoresState) {
    Simulation sim(9, 0);
    Ledger& l = sim.ledger();
    const auto a = l.init_accounts(EntityKind::Licit, 1, 2);
    l.mint(a[0], 1e6);
    const std::string before = l.digest();
    EXPECT_THROW(atomically(sim,
                            [&] {
                                const std::vector<AccountRef> in{a[0]}, out{a[1]};
                                const std::vector<Satoshi> v{1e6};
                                sim.commit(in, out, v, compute_fee(1, 1e6), 10, split::Equal{});
                                throw SimError("injected");
                            }),
                 SimError);
    EXPECT_EQ(l.digest(), before);
}

TEST(Atomicity, FailedStepLeavesNoTrace) {
    const auto plan = compile({row("Licit 1", "Exchange 1", 40, 1), row("Exchange 1", "Licit 2", 40, 2)}, 10);
    std::size_t commits = 0;
    RunOptions opts;
    opts.max_attempts = 1;
    opts.on_commit = [&](const TransactionRecord&) {
        if (++commits == 20) throw SimError("injected");
    };
    PlanRunner runner(plan, {}, opts);
    runner.run_seeds();
    commits = 0;
    const std::string before = runner.simulation().ledger().digest();
    const auto trace_before = runner.simulation().trace().size();
    EXPECT_THROW(runner.run_step(0), StepError);
    EXPECT_EQ(runner.simulation().ledger().digest(), before);
    EXPECT_EQ(runner.simulation().trace().size(), trace_before);
}
