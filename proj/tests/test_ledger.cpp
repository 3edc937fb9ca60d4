#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "amlsim/ledger.hpp"

using namespace amlsim;

namespace {

// Three accounts with fixed balances, timestamps after the epoch.
struct Fixture {
    Ledger l{11, 1000};
    std::vector<AccountRef> a;
    Fixture() {
        a = l.init_accounts(EntityKind::Licit, 1, 3);
        l.mint(a[0], 200000);
        l.mint(a[0], 50000);
        l.mint(a[1], 7000);
        l.mint(a[1], 9000);
    }
};

}  // namespace

TEST(Fee, HandEvaluation) {
    // 1*1810 + 0.0008*(100000 - 1810 - 5460) + 100
    EXPECT_NEAR(compute_fee(1, 100000), 1984.184, 1e-9);
    EXPECT_NEAR(compute_fee(3, 100000), 3*1810 + 0.0008*(100000 - 7270) + 100, 1e-9);
    EXPECT_EQ(compute_max_outputs(100000, 1984.184), 17u);
    EXPECT_EQ(compute_max_outputs(5460 + 100, 100), 1u);
}

TEST(Fee, RejectsHopelessInputs) {
    EXPECT_THROW(compute_fee(0, 1e6), InsufficientFunds);
    EXPECT_THROW(compute_fee(1, 7270), InsufficientFunds);
    EXPECT_THROW(compute_max_outputs(10, 20), InsufficientFunds);
}

TEST(Split, RandomRespectsFloorAndSum) {
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 1 + rng.index(15);
        const Satoshi rem = kDustThreshold * n + rng.uniform(0, 1e6);
        const auto s = split_random(rem, n, rng);
        double sum = 0;
        for (auto v : s) {
            EXPECT_GE(v, kDustThreshold - 1e-9);
            sum += v;
        }
        EXPECT_NEAR(sum, rem, 1e-6 * rem);
    }
}

TEST(Split, RandomWithRaisedFloor) {
    Rng rng(9);
    const auto s = compute_split(split::Random{8001}, 8001 * 4 + 10, 4, {}, 0, rng);
    for (auto v : s) EXPECT_GE(v, 8001 - 1e-9);
    EXPECT_THROW(compute_split(split::Random{8001}, 8001 * 4 - 1, 4, {}, 0, rng), DustViolation);
}

TEST(Split, EqualAndProportional) {
    Rng rng(1);
    const auto e = compute_split(split::Equal{}, 30000, 3, {}, 0, rng);
    EXPECT_EQ(e, std::vector<Satoshi>(3, 10000));
    const auto p = compute_split(split::Proportional{{1, 3}}, 40000, 2, {}, 0, rng);
    EXPECT_DOUBLE_EQ(p[0], 10000);
    EXPECT_DOUBLE_EQ(p[1], 30000);
    EXPECT_THROW(compute_split(split::Proportional{{1, 100}}, 40000, 2, {}, 0, rng), DustViolation);
    EXPECT_THROW(compute_split(split::Equal{}, 10000, 2, {}, 0, rng), DustViolation);
}

TEST(Split, EscrowSettlementArithmetic) {
    const split::FixedFee f{0.01, 0.10};
    const Satoshi l1 = 1.1e6, l2 = 2.2e6, fee = 5000;
    const auto s = settlement_amounts(l1, l2, fee, f);
    EXPECT_NEAR(s.trade1, 1e6, 1e-6);
    EXPECT_NEAR(s.trade2, 2e6, 1e-6);
    EXPECT_NEAR(s.payee1, 0.99e6, 1e-6);
    EXPECT_NEAR(s.platform_fee, 3e4, 1e-6);
    EXPECT_NEAR(s.deposit_return1 + s.deposit_return2, 3e5 - fee, 1e-6);
    EXPECT_NEAR(s.payee1 + s.payee2 + s.deposit_return1 + s.deposit_return2 + s.platform_fee, l1 + l2 - fee, 1e-6);
    // The network fee follows leg size.
    EXPECT_NEAR(s.deposit_return1, 1e5 - fee / 3, 1e-6);
}

TEST(Availability, GeneralCountsUtxosAboveThreshold) {
    Fixture f;
    const auto ac = f.l.avail_general(f.a);
    EXPECT_EQ(std::count(ac.begin(), ac.end(), f.a[0]), 2);
    EXPECT_EQ(std::count(ac.begin(), ac.end(), f.a[1]), 1);
    EXPECT_EQ(std::count(ac.begin(), ac.end(), f.a[2]), 0);
}

TEST(Availability, SingleUseSenderExcludesSpent) {
    Ledger l(3, 0);
    const auto su = l.init_accounts(EntityKind::SingleUse, 1, 2);
    const auto r = l.init_accounts(EntityKind::Licit, 1, 1);
    l.mint(su[0], 50000);
    l.mint(su[1], 50000);
    EXPECT_EQ(l.avail_single_use_sender(su).size(), 2u);
    const std::vector<AccountRef> in{su[0]}, out{r[0]};
    const std::vector<Satoshi> v{50000};
    l.apply_update(in, out, v, compute_fee(1, 50000), 10, split::Equal{});
    EXPECT_EQ(l.avail_single_use_sender(su).size(), 1u);
    EXPECT_THROW(l.apply_update(in, out, v, compute_fee(1, 50000), 20, split::Equal{}), SimError);
}

TEST(Update, ConservesAndMovesUtxos) {
    Fixture f;
    const std::vector<AccountRef> in{f.a[0]}, out{f.a[1], f.a[2]};
    const std::vector<Satoshi> v{200000};
    const Satoshi fee = compute_fee(1, 200000);
    const auto& r = f.l.apply_update(in, out, v, fee, 5000, split::Proportional{{1, 1}});
    EXPECT_TRUE(conserved(r.in_sum(), r.out_sum(), r.fee));
    EXPECT_EQ(r.hash.size(), 64u);
    EXPECT_EQ(f.l.account(f.a[0]).utxos, std::vector<Satoshi>{50000});
    EXPECT_EQ(f.l.account(f.a[2]).utxos.size(), 1u);
    EXPECT_EQ(f.l.account(f.a[1]).last_time, 5000);
}

TEST(Update, RejectsBadRequests) {
    Fixture f;
    const std::vector<AccountRef> in{f.a[0]}, out{f.a[1]};
    EXPECT_THROW(f.l.apply_update(in, out, std::vector<Satoshi>{123456}, 2000, 5000, split::Equal{}), SimError);
    // Timestamp before a participant's last activity.
    EXPECT_THROW(f.l.apply_update(in, out, std::vector<Satoshi>{200000}, compute_fee(1, 200000), 10, split::Equal{}),
                 ScheduleError);
}

TEST(Update, HashesAreUnique) {
    Fixture f;
    std::set<std::string> seen;
    for (int i = 0; i < 5; ++i) {
        const auto u = f.l.account(f.a[0]).utxos;
        const Satoshi v = *std::max_element(u.begin(), u.end());
        const std::vector<AccountRef> in{f.a[0]}, out{f.a[0]};
        const std::vector<Satoshi> vals{v};
        seen.insert(f.l.apply_update(in, out, vals, compute_fee(1, v), 2000 + i, split::Equal{}).hash);
    }
    EXPECT_EQ(seen.size(), 5u);
}

TEST(Snapshot, RollbackRestoresDigest) {
    Fixture f;
    const std::string before = f.l.digest();
    const auto snap = f.l.snapshot();
    const std::vector<AccountRef> in{f.a[0]}, out{f.a[1]};
    f.l.apply_update(in, out, std::vector<Satoshi>{200000}, compute_fee(1, 200000), 5000, split::Equal{});
    f.l.init_accounts(EntityKind::Mule, 1, 4);
    EXPECT_NE(f.l.digest(), before);
    f.l.rollback(snap);
    EXPECT_EQ(f.l.digest(), before);
    EXPECT_EQ(f.l.account_count(), 3u);
    EXPECT_TRUE(f.l.log().empty());
}

TEST(Snapshot, NestedRollbackKeepsOuterChanges) {
    Fixture f;
    const auto outer = f.l.snapshot();
    const std::vector<AccountRef> in{f.a[0]}, out{f.a[1]};
    f.l.apply_update(in, out, std::vector<Satoshi>{200000}, compute_fee(1, 200000), 5000, split::Equal{});
    const std::string mid = f.l.digest();
    const auto inner = f.l.snapshot();
    f.l.apply_update(in, out, std::vector<Satoshi>{50000}, compute_fee(1, 50000), 6000, split::Equal{});
    f.l.rollback(inner);
    EXPECT_EQ(f.l.digest(), mid);
    f.l.rollback(outer);
    EXPECT_TRUE(f.l.log().empty());
}

TEST(Replay, MatchesLedgerState) {
    Fixture f;
    const std::vector<AccountRef> in{f.a[0], f.a[1]}, out{f.a[2], f.a[2]};
    f.l.apply_update(in, out, std::vector<Satoshi>{200000, 9000}, compute_fee(2, 209000), 5000, split::Equal{});
    const auto u = replay_utxos(f.l.account_count(), f.l.genesis(), f.l.log());
    for (std::size_t i = 0; i < 3; ++i) {
        auto mine = f.l.accounts()[i].utxos;
        std::sort(mine.begin(), mine.end());
        EXPECT_EQ(mine, u[i]);
    }
}

TEST(Timestamps, SampledInsideWindow) {
    Rng rng(2);
    for (auto dist : {TimeDist::Uniform, TimeDist::Gaussian}) {
        const auto ts = sample_timestamps(500, 100, 100000, dist, rng);
        EXPECT_TRUE(std::is_sorted(ts.begin(), ts.end()));
        EXPECT_GE(ts.front(), 100);
        EXPECT_LE(ts.back(), 100000);
    }
    EXPECT_THROW(sample_timestamps(3, 50, 10, TimeDist::Uniform, rng), ScheduleError);
}

TEST(Ids, DeterministicBase58) {
    const auto a = derive_account_id(1, "x", 0), b = derive_account_id(1, "x", 0), c = derive_account_id(1, "x", 1);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    EXPECT_EQ(a.front(), '1');
    EXPECT_EQ(a.find_first_of("0OIl"), std::string::npos);
}
