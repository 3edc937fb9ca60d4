#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "amlsim/entitysim.hpp"
#include "amlsim/invariants.hpp"

using namespace amlsim;
namespace fs = std::filesystem;

namespace {

std::vector<SchemaRow> figure2() { return parse_schema(AMLSIM_SOURCE_DIR "/schemas/figure2.csv", SchemaFormat::Csv); }

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("amlsim_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST(Runner, FigureTwoRunsThreeSteps) {
    const auto plan = compile(figure2(), 7);
    ASSERT_EQ(plan.steps.size(), 3u);
    const auto d = run_plan(plan);
    EXPECT_FALSE(d.partial);
    std::size_t per_row[4] = {};
    for (const auto& t : d.trace) per_row[t.row] += t.hashes.size();
    EXPECT_EQ(per_row[1], 1200u);
    EXPECT_EQ(per_row[2], 2000u);
    EXPECT_EQ(per_row[3], 1500u);
    const auto rep = check_invariants(d);
    EXPECT_TRUE(rep.ok()) << (rep.messages.empty() ? "" : rep.messages.front());
}

TEST(Runner, TimestampsStayInsideRowWindows) {
    const auto rows = figure2();
    const auto d = run_plan(compile(rows, 3));
    std::map<std::string, Timestamp> ts;
    for (const auto& r : d.records) ts[r.hash] = r.timestamp;
    for (const auto& t : d.trace) {
        if (!t.row) continue;
        for (const auto& h : t.hashes) EXPECT_LE(ts[h], rows[t.row - 1].latest_ts);
    }
}

TEST(Runner, FailingStepReportsPosition) {
    std::size_t commits = 0;
    RunOptions opts;
    opts.on_commit = [&](const TransactionRecord&) {
        if (++commits > 2000) throw SimError("injected");
    };
    const auto plan = compile(figure2(), 7);
    try {
        run_plan(plan, {}, opts);
        FAIL() << "expected StepError";
    } catch (const StepError& e) {
        EXPECT_GE(e.step(), 1u);
        EXPECT_EQ(e.row(), e.step());
    }
}

TEST(Runner, KeepPartialReturnsCommittedSteps) {
    const auto plan = compile(figure2(), 7);
    const std::size_t seeds = plan.seeds.size();
    std::size_t commits = 0;
    RunOptions opts;
    opts.keep_partial = true;
    opts.on_commit = [&](const TransactionRecord&) {
        if (++commits > seeds + 1200 + 10) throw SimError("injected");
    };
    const auto d = run_plan(plan, {}, opts);
    EXPECT_TRUE(d.partial);
    EXPECT_NE(d.error.find("step 2"), std::string::npos);
    EXPECT_EQ(d.records.size(), seeds + 1200);
}

TEST(Runner, SameSeedSameBytes) {
    const auto a = run_plan(compile(figure2(), 11));
    const auto b = run_plan(compile(figure2(), 11));
    const auto c = run_plan(compile(figure2(), 12));
    EXPECT_EQ(transactions_csv(a), transactions_csv(b));
    EXPECT_EQ(accounts_csv(a), accounts_csv(b));
    EXPECT_NE(transactions_csv(a), transactions_csv(c));
}

TEST(Runner, IdleAccountsAreDropped) {
    const auto d = run_plan(compile(figure2(), 7));
    std::set<std::size_t> used;
    for (const auto& r : d.records) {
        for (auto a : r.inputs) used.insert(index_of(a));
        for (auto a : r.outputs) used.insert(index_of(a));
    }
    for (std::size_t i = 0; i < d.accounts.size(); ++i)
        EXPECT_TRUE(used.count(i) || !d.accounts[i].genesis.empty()) << d.accounts[i].id;
}

TEST(Dataset, WriteReadRoundTrip) {
    const auto d = run_plan(compile(figure2(), 5));
    for (auto fmt : {TxFormat::Csv, TxFormat::Jsonl}) {
        const auto dir = scratch(fmt == TxFormat::Csv ? "rt_csv" : "rt_jsonl");
        const auto m = write_dataset(d, dir, fmt);
        EXPECT_EQ(m.transactions, d.records.size());
        const auto back = read_dataset(dir);
        EXPECT_EQ(transactions_csv(back), transactions_csv(d));
        EXPECT_EQ(accounts_csv(back), accounts_csv(d));
        EXPECT_EQ(back.trace.size(), d.trace.size());
        EXPECT_TRUE(check_invariants(back).ok());
        fs::remove_all(dir);
    }
}

TEST(Dataset, ReadRejectsMissingFiles) {
    const auto dir = scratch("empty");
    fs::create_directories(dir);
    EXPECT_THROW(read_dataset(dir), SimError);
    fs::remove_all(dir);
}

TEST(Dataset, NumbersRoundTripExactly) {
    for (double v : {0.1, 1984.184, 123456789.123456789, 5460.0, 1e-7})
        EXPECT_EQ(parse_number(format_number(v)), v);
}

class QuickGen : public ::testing::TestWithParam<QuickEntity> {};

TEST_P(QuickGen, ProducesRequestedCountCleanly) {
    for (std::size_t count : {50u, 600u}) {
        QuickGenConfig qc;
        qc.entity = GetParam();
        qc.count = count;
        qc.seed = 21;
        const auto d = quickgen(qc);
        EXPECT_GE(d.records.size(), count);
        const auto rep = check_invariants(d);
        EXPECT_TRUE(rep.ok()) << (rep.messages.empty() ? "" : rep.messages.front());
    }
}

INSTANTIATE_TEST_SUITE_P(AllEntities, QuickGen,
                         ::testing::Values(QuickEntity::Licit, QuickEntity::Exchange, QuickEntity::Mixer,
                                           QuickEntity::P2pEscrow, QuickEntity::NestedExchange),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(QuickGen, UnknownEntityIsAnError) { EXPECT_THROW(parse_quick_entity("bank"), ConfigError); }
