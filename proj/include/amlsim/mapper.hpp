#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "amlsim/config.hpp"
#include "amlsim/core.hpp"
#include "amlsim/ledger.hpp"
#include "amlsim/random.hpp"
#include "amlsim/schema.hpp"

namespace amlsim {

enum class GeneratorId : std::uint8_t {
    Regular,
    GenGen,
    InOut,
    Coinjoin,
    SglSgl,
    SglGen,
    GenSgl,
    P2p,
    EscrowSettle,
    DliDeposit,
    DliInvest,
    IldReturn,
    IldPayout,
    Mixer,
};

constexpr std::string_view to_string(GeneratorId g) noexcept {
    switch (g) {
        case GeneratorId::Regular: return "regular";
        case GeneratorId::GenGen: return "gen_gen";
        case GeneratorId::InOut: return "inout";
        case GeneratorId::Coinjoin: return "coinjoin";
        case GeneratorId::SglSgl: return "sgl_sgl";
        case GeneratorId::SglGen: return "sgl_gen";
        case GeneratorId::GenSgl: return "gen_sgl";
        case GeneratorId::P2p: return "p2p";
        case GeneratorId::EscrowSettle: return "escrow_settle";
        case GeneratorId::DliDeposit: return "dli_deposit";
        case GeneratorId::DliInvest: return "dli_invest";
        case GeneratorId::IldReturn: return "ild_return";
        case GeneratorId::IldPayout: return "ild_payout";
        case GeneratorId::Mixer: return "mixer";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Mixer scripts
// ---------------------------------------------------------------------------

// Script slots: positive values name internal single-use layers (1-based).
enum Slot : int { kSlotSenders = -1, kSlotReceivers = -2, kSlotFunds = -3, kSlotMixer = -4 };

struct ScriptStep {
    GeneratorId gen;
    std::vector<int> from;
    int to;
    bool cj = false;
    bool funds = false;
};

struct MixerScript {
    int subclass = 1;
    std::vector<ScriptStep> steps;
    int layers = 0;  // internal single-use layers

    std::vector<std::size_t> funds_steps() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < steps.size(); ++i)
            if (steps[i].funds) out.push_back(i + 1);
        return out;
    }
};

inline const MixerScript& mixer_script(int subclass) {
    using G = GeneratorId;
    constexpr int S = kSlotSenders, R = kSlotReceivers, F = kSlotFunds, M = kSlotMixer;
    static const std::vector<MixerScript> scripts = {
        {1,
         {{G::GenSgl, {S}, 1},
          {G::SglSgl, {1}, 2},
          {G::GenGen, {F}, M, false, true},
          {G::SglGen, {2}, M},
          {G::Regular, {M}, R}},
         2},
        {2,
         {{G::GenSgl, {S}, 1},
          {G::SglSgl, {1}, 2, true},
          {G::GenSgl, {F}, 3, false, true},
          {G::SglSgl, {2, 3}, 4, true},
          {G::SglGen, {4}, R}},
         4},
        {3,
         {{G::GenSgl, {S}, 1},
          {G::SglSgl, {1}, 2},
          {G::SglSgl, {2}, 3, true},
          {G::GenSgl, {F}, 4, false, true},
          {G::SglSgl, {3, 4}, 5},
          {G::GenSgl, {F}, 6, false, true},
          {G::SglSgl, {5, 6}, 7, true},
          {G::SglSgl, {7}, 8},
          {G::GenSgl, {F}, 9, false, true},
          {G::SglSgl, {8, 9}, 10, true},
          {G::SglSgl, {10}, 11},
          {G::SglGen, {11}, M},
          {G::Regular, {M}, R}},
         11},
        {4,
         {{G::GenSgl, {S}, 1, true},
          {G::SglGen, {1}, M, true},
          {G::Coinjoin, {F}, M, true, true},
          {G::GenSgl, {M}, 2, true},
          {G::Coinjoin, {F}, M, true, true},
          {G::SglGen, {2}, M, true},
          {G::Coinjoin, {F}, M, true, true},
          {G::GenSgl, {M}, 3, true},
          {G::SglGen, {3}, R, true}},
         3},
    };
    if (subclass < 1 || subclass > 4) throw SimError("mixer subclass must be 1..4");
    return scripts[static_cast<std::size_t>(subclass - 1)];
}

// ---------------------------------------------------------------------------
// Entity statistics and pool sizing
// ---------------------------------------------------------------------------

struct EntityStats {
    EntitySpec spec;
    std::size_t occurrences = 0;
    std::size_t as_sender = 0;
    std::size_t as_receiver = 0;
    std::size_t total_quantity = 0;
};

// One entry per unique entity, in order of first appearance.
inline std::vector<EntityStats> collect_entities(const std::vector<SchemaRow>& rows) {
    std::vector<EntityStats> out;
    std::map<EntitySpec, std::size_t> pos;
    auto add = [&](const EntitySpec& e, bool sender, std::size_t q) {
        auto [it, fresh] = pos.emplace(e, out.size());
        if (fresh) out.push_back({e});
        auto& s = out[it->second];
        ++s.occurrences;
        (sender ? s.as_sender : s.as_receiver) += 1;
        s.total_quantity += q;
    };
    for (const auto& r : rows) {
        add(r.sender, true, r.quantity);
        add(r.receiver, false, r.quantity);
    }
    return out;
}

inline std::size_t pool_size_for(const EntityStats& s, const SimConfig& cfg) {
    if (s.spec.kind == EntityKind::SingleUse) return std::max<std::size_t>(1, s.total_quantity * cfg.single_use_expected_outputs);
    const auto scaled = static_cast<std::size_t>(std::ceil(cfg.pool_fraction * static_cast<double>(s.total_quantity)));
    return std::min(std::max(scaled, cfg.pool_min), cfg.pool_max);
}

inline std::map<EntitySpec, std::size_t> size_pools(const std::vector<EntityStats>& stats, const SimConfig& cfg = {}) {
    std::map<EntitySpec, std::size_t> out;
    for (const auto& s : stats) out[s.spec] = pool_size_for(s, cfg);
    return out;
}

// ---------------------------------------------------------------------------
// Plan
// ---------------------------------------------------------------------------

inline constexpr std::size_t kNoPool = static_cast<std::size_t>(-1);

struct PlanPool {
    std::string key;
    EntityKind kind = EntityKind::Licit;
    int instance = 1;
    bool internal = false;
    // Kind whose licit/illicit category the pool's accounts carry.
    EntityKind provenance = EntityKind::Licit;
    std::vector<std::string> ids;
};

struct PlanStep {
    std::size_t row = 0;  // 1-based schema row; 0 for synthesized steps
    GeneratorId gen = GeneratorId::Regular;
    std::size_t sender = kNoPool;
    std::size_t receiver = kNoPool;
    std::size_t quantity = 1;
    Timestamp latest_ts = 0;
    std::size_t min_inputs = 1;
    std::optional<SidePattern> pattern;
    bool cj = false;
    int mixer_subclass = 0;
    std::size_t mixer = kNoPool;
    std::size_t funds = kNoPool;
    std::size_t dex = kNoPool;
    std::vector<std::size_t> layers;
};

// One generator call. Mixer steps expand to one invocation per script step.
struct Invocation {
    GeneratorId gen = GeneratorId::Regular;
    std::vector<std::size_t> senders;
    std::size_t receiver = kNoPool;
    std::size_t quantity = 1;
    std::size_t min_inputs = 1;
    std::optional<SidePattern> pattern;
    bool cj = false;
    bool funds = false;
    std::size_t script_step = 0;  // 1-based inside a mixer script, else 0
    TimeDist dist = TimeDist::Uniform;
};

struct SeedTx {
    std::string outer_id;
    Satoshi genesis = 0;
    Timestamp ts = 0;
    std::vector<std::string> out_ids;
    std::vector<Satoshi> out_values;
};

struct ExecutionPlan {
    std::uint64_t seed = 0;
    Timestamp epoch = 0;
    Timestamp oldest = 0;
    std::vector<PlanPool> pools;
    std::vector<PlanStep> steps;
    std::vector<std::string> outer_ids;
    std::vector<SeedTx> seeds;

    std::size_t pool_index(std::string_view key) const {
        for (std::size_t i = 0; i < pools.size(); ++i)
            if (pools[i].key == key) return i;
        return kNoPool;
    }
    std::size_t account_count() const {
        std::size_t n = outer_ids.size();
        for (const auto& p : pools) n += p.ids.size();
        return n;
    }
};

inline std::size_t mixer_step_quantity(std::size_t q, int subclass) {
    const std::size_t n = mixer_script(subclass).steps.size();
    return (q + n - 1) / n;
}

inline std::vector<Invocation> expand(const PlanStep& s) {
    if (s.gen != GeneratorId::Mixer) {
        Invocation inv;
        inv.gen = s.gen;
        inv.senders = {s.sender};
        inv.receiver = s.receiver;
        inv.quantity = s.quantity;
        inv.min_inputs = s.min_inputs;
        inv.pattern = s.pattern;
        inv.cj = s.cj;
        return {inv};
    }
    const auto& script = mixer_script(s.mixer_subclass);
    const std::size_t q = mixer_step_quantity(s.quantity, s.mixer_subclass);
    auto slot = [&](int x) -> std::size_t {
        switch (x) {
            case kSlotSenders: return s.sender;
            case kSlotReceivers: return s.receiver;
            case kSlotFunds: return s.funds;
            case kSlotMixer: return s.mixer;
            default: return s.layers.at(static_cast<std::size_t>(x - 1));
        }
    };
    std::vector<Invocation> out;
    for (std::size_t i = 0; i < script.steps.size(); ++i) {
        const auto& st = script.steps[i];
        Invocation inv;
        inv.gen = st.gen;
        for (int f : st.from) inv.senders.push_back(slot(f));
        inv.receiver = slot(st.to);
        inv.quantity = q;
        inv.min_inputs = st.from.front() == kSlotSenders ? s.min_inputs : 1;
        inv.cj = st.cj;
        inv.funds = st.funds;
        inv.script_step = i + 1;
        inv.dist = TimeDist::Gaussian;
        out.push_back(std::move(inv));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Compilation
// ---------------------------------------------------------------------------

namespace detail {

inline void check_contradiction(const SchemaRow& r, std::size_t row_no) {
    auto bad = [&](EntityKind a, EntityKind b) {
        auto either = [&](EntityKind x, EntityKind y) {
            return (r.sender.kind == x && r.receiver.kind == y) || (r.sender.kind == y && r.receiver.kind == x);
        };
        if (either(a, b))
            throw CompileError("row " + std::to_string(row_no) + ": cannot map " + to_string(r.sender) + " -> " +
                               to_string(r.receiver) + " to any transaction type");
    };
    for (auto k : {EntityKind::Escrow, EntityKind::CryptoLending, EntityKind::Mixer, EntityKind::SingleUse})
        bad(EntityKind::Escrow, k);
    for (auto k : {EntityKind::CryptoLending, EntityKind::Mixer, EntityKind::SingleUse})
        bad(EntityKind::CryptoLending, k);
}

class PlanBuilder {
public:
    PlanBuilder(std::uint64_t seed, const SimConfig& cfg) : cfg_(cfg), rng_(mix_seed(seed ^ 0x706c616eULL)) {
        plan_.seed = seed;
    }

    std::size_t add_pool(std::string key, EntityKind kind, int instance, std::size_t size, bool internal,
                         EntityKind provenance) {
        PlanPool p;
        p.key = std::move(key);
        p.kind = kind;
        p.instance = instance;
        p.internal = internal;
        p.provenance = provenance;
        for (std::size_t i = 0; i < size; ++i) p.ids.push_back(fresh_id());
        plan_.pools.push_back(std::move(p));
        return plan_.pools.size() - 1;
    }

    std::string fresh_id() {
        std::string id;
        do {
            id = derive_account_id(plan_.seed, "plan", counter_++);
        } while (!used_.insert(id).second);
        return id;
    }

    ExecutionPlan& plan() { return plan_; }
    Rng& rng() { return rng_; }
    const SimConfig& cfg() const { return cfg_; }

private:
    const SimConfig& cfg_;
    Rng rng_;
    ExecutionPlan plan_;
    std::uint64_t counter_ = 0;
    std::unordered_set<std::string> used_;
};

// UTXO entries an invocation is expected to consume (takes) and create
// (gives) per pool. Inputs are counted at their minimum per transaction.
struct PoolFlow {
    std::vector<std::pair<std::size_t, double>> takes, gives;
};

inline PoolFlow invocation_flow(const Invocation& inv, const PlanStep& step) {
    PoolFlow f;
    const double q = static_cast<double>(inv.quantity);
    const double per_tx = static_cast<double>(inv.pattern ? inv.pattern->inputs : inv.min_inputs);
    const std::size_t s0 = inv.senders.front();
    switch (inv.gen) {
        case GeneratorId::Coinjoin:
            f.takes = {{s0, 2 * q}, {inv.receiver, 2 * q}};
            f.gives = {{s0, 2 * q}, {inv.receiver, 2 * q}};
            break;
        case GeneratorId::InOut:
            f.takes = {{s0, q * per_tx}, {inv.receiver, q}};
            f.gives = {{s0, q}, {inv.receiver, q}};
            break;
        case GeneratorId::P2p:
            f.takes = {{s0, 4 * q}};
            f.gives = {{inv.receiver, 2 * q}};
            break;
        case GeneratorId::EscrowSettle:
            f.gives = {{inv.receiver, 2 * q}, {step.dex, q}};
            break;
        case GeneratorId::DliInvest:
        case GeneratorId::IldPayout:
            f.takes = {{s0, q * per_tx}};
            f.gives = {{inv.receiver, q}, {s0, q}};
            break;
        default:
            // Demand is split across union sources.
            for (auto s : inv.senders) f.takes.push_back({s, q * per_tx / static_cast<double>(inv.senders.size())});
            f.gives = {{inv.receiver, q}};
    }
    return f;
}

// Per-pool estimate of spendable UTXO counts along the plan; pools that
// would go negative and may be funded from outside accumulate a deficit.
inline std::vector<double> funding_deficits(const ExecutionPlan& plan) {
    std::vector<double> balance(plan.pools.size(), 0.0), deficit(plan.pools.size(), 0.0);
    for (const auto& step : plan.steps) {
        for (const auto& inv : expand(step)) {
            const auto f = invocation_flow(inv, step);
            for (const auto& [p, n] : f.takes) {
                if (p == kNoPool) continue;
                if (balance[p] >= n) {
                    balance[p] -= n;
                    continue;
                }
                if (outer_funding_eligible(plan.pools[p].kind)) deficit[p] += n - balance[p];
                balance[p] = 0;
            }
            for (const auto& [p, n] : f.gives)
                if (p != kNoPool) balance[p] += n;
        }
    }
    return deficit;
}

inline void plan_seeds(PlanBuilder& b) {
    auto& plan = b.plan();
    const auto& cfg = b.cfg();
    auto& rng = b.rng();
    const auto deficit = funding_deficits(plan);

    // Flatten required UTXOs as (pool, account) slots, round-robin inside each pool.
    std::vector<std::string> slots;
    for (std::size_t p = 0; p < plan.pools.size(); ++p) {
        if (deficit[p] <= 0) continue;
        const auto n = static_cast<std::size_t>(std::ceil(cfg.funding_factor * deficit[p]));
        const auto& ids = plan.pools[p].ids;
        const std::size_t start = rng.index(ids.size());
        for (std::size_t i = 0; i < n; ++i) slots.push_back(ids[(start + i) % ids.size()]);
    }
    rng.shuffle(slots);

    const Timestamp lo = plan.oldest - cfg.seed_window_max_days * kSecondsPerDay;
    const Timestamp hi = plan.oldest - cfg.seed_window_min_days * kSecondsPerDay;
    std::size_t pos = 0;
    while (pos < slots.size()) {
        const auto want = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(cfg.seed_outputs_min),
                                                                   static_cast<std::int64_t>(cfg.seed_outputs_max)));
        const std::size_t n = std::min(want, slots.size() - pos);
        SeedTx s;
        s.outer_id = b.fresh_id();
        plan.outer_ids.push_back(s.outer_id);
        Satoshi total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            s.out_ids.push_back(slots[pos + i]);
            s.out_values.push_back(rng.log_uniform(cfg.seed_value_min, cfg.seed_value_max));
            total += s.out_values.back();
        }
        pos += n;
        // One-input fee is 1904.184 + 0.0008 * genesis; solve for rem == total.
        s.genesis = (total + kFeePerInput + kFeeBase - kFeeValueRate * (kFeePerInput + kDustThreshold)) /
                    (1.0 - kFeeValueRate);
        s.ts = rng.uniform_int(lo, hi);
        plan.seeds.push_back(std::move(s));
    }
    std::stable_sort(plan.seeds.begin(), plan.seeds.end(), [](const SeedTx& a, const SeedTx& c) { return a.ts < c.ts; });
}

}  // namespace detail

// The checks run in a fixed order; the first that matches decides the generator.
inline ExecutionPlan compile(const std::vector<SchemaRow>& rows, std::uint64_t seed, const SimConfig& cfg = {}) {
    cfg.validate();
    for (std::size_t i = 0; i < rows.size(); ++i) detail::check_contradiction(rows[i], i + 1);

    detail::PlanBuilder b(seed, cfg);
    auto& plan = b.plan();
    if (rows.empty()) return plan;

    plan.oldest = std::min_element(rows.begin(), rows.end(), [](const auto& a, const auto& c) {
                      return a.latest_ts < c.latest_ts;
                  })->latest_ts;
    plan.epoch = plan.oldest - (cfg.seed_window_max_days + 1) * kSecondsPerDay;

    // Provenance of schema single-use pools: the first non-single-use counterparty.
    std::map<EntitySpec, EntityKind> provenance;
    for (const auto& r : rows) {
        if (r.sender.kind == EntityKind::SingleUse && r.receiver.kind != EntityKind::SingleUse)
            provenance.emplace(r.sender, r.receiver.kind);
        if (r.receiver.kind == EntityKind::SingleUse && r.sender.kind != EntityKind::SingleUse)
            provenance.emplace(r.receiver, r.sender.kind);
    }

    const auto stats = collect_entities(rows);
    std::map<EntitySpec, std::size_t> pool_of;
    for (const auto& s : stats) {
        EntityKind prov = s.spec.kind;
        if (prov == EntityKind::SingleUse) {
            auto it = provenance.find(s.spec);
            prov = it == provenance.end() ? EntityKind::Licit : it->second;
        }
        pool_of[s.spec] = b.add_pool(to_string(s.spec), s.spec.kind, s.spec.instance, pool_size_for(s, cfg), false, prov);
    }

    auto find_or_add = [&](EntityKind kind, int instance, std::size_t size) {
        const EntitySpec e{kind, instance};
        auto it = pool_of.find(e);
        if (it != pool_of.end()) return it->second;
        const auto p = b.add_pool(to_string(e), kind, instance, size, true, kind);
        pool_of[e] = p;
        return p;
    };

    std::map<int, int> mixer_rr;
    std::map<std::size_t, std::set<std::size_t>> depositors, investors;  // lender pool -> pools

    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        PlanStep st;
        st.row = i + 1;
        st.sender = pool_of.at(r.sender);
        st.receiver = pool_of.at(r.receiver);
        st.quantity = r.quantity;
        st.latest_ts = r.latest_ts;
        st.min_inputs = r.min_inputs;
        const EntityKind sk = r.sender.kind, rk = r.receiver.kind;
        const bool su_s = sk == EntityKind::SingleUse, su_r = rk == EntityKind::SingleUse;

        if (su_s && su_r) {
            st.gen = GeneratorId::SglSgl;
            st.cj = plan.pools[st.sender].ids.size() == plan.pools[st.receiver].ids.size();
        } else if (su_s) {
            st.gen = GeneratorId::SglGen;
        } else if (su_r) {
            st.gen = GeneratorId::GenSgl;
        } else if (rk == EntityKind::Escrow) {
            st.gen = GeneratorId::P2p;
        } else if (sk == EntityKind::Escrow) {
            st.gen = GeneratorId::EscrowSettle;
            const auto dex_key = to_string(EntitySpec{EntityKind::DecentralizedExchange, r.sender.instance});
            if (plan.pool_index(dex_key) != kNoPool) {
                st.dex = plan.pool_index(dex_key);
            } else {
                auto any = std::find_if(plan.pools.begin(), plan.pools.end(),
                                        [](const auto& p) { return p.kind == EntityKind::DecentralizedExchange; });
                st.dex = any != plan.pools.end() ? static_cast<std::size_t>(any - plan.pools.begin())
                                                 : find_or_add(EntityKind::DecentralizedExchange, 1, cfg.pool_min);
            }
        } else if (rk == EntityKind::CryptoLending) {
            const auto lender = st.receiver;
            if (investors[lender].contains(st.sender)) {
                st.gen = GeneratorId::IldReturn;
            } else {
                st.gen = GeneratorId::DliDeposit;
                depositors[lender].insert(st.sender);
            }
        } else if (sk == EntityKind::CryptoLending) {
            const auto lender = st.sender;
            if (depositors[lender].contains(st.receiver)) {
                st.gen = GeneratorId::IldPayout;
            } else {
                st.gen = GeneratorId::DliInvest;
                investors[lender].insert(st.receiver);
            }
        } else if (sk == EntityKind::Mixer || rk == EntityKind::Mixer) {
            st.gen = GeneratorId::Mixer;
            const auto& m = rk == EntityKind::Mixer ? r.receiver : r.sender;
            st.mixer = pool_of.at(m);
            st.mixer_subclass = mixer_rr[m.instance]++ % 4 + 1;
            const auto& script = mixer_script(st.mixer_subclass);
            const std::size_t q = mixer_step_quantity(r.quantity, st.mixer_subclass);
            const bool has_funds = !script.funds_steps().empty();
            if (has_funds) {
                const auto injections = script.funds_steps().size();
                const auto size = std::max(cfg.pool_min, static_cast<std::size_t>(std::ceil(cfg.pool_fraction * static_cast<double>(q * injections))));
                st.funds = find_or_add(EntityKind::Funds, m.instance, size);
            }
            for (int l = 1; l <= script.layers; ++l) {
                const std::string key = to_string(m) + "/row " + std::to_string(st.row) + "/su " + std::to_string(l);
                st.layers.push_back(b.add_pool(key, EntityKind::SingleUse, m.instance,
                                               q * cfg.single_use_side_max, true, EntityKind::Mixer));
            }
        } else if (r.style == RowStyle::InOut) {
            st.gen = GeneratorId::InOut;
        } else if (r.style == RowStyle::Coinjoin) {
            st.gen = GeneratorId::Coinjoin;
        } else if (r.style == RowStyle::Pattern) {
            st.gen = GeneratorId::GenGen;
            st.pattern = r.pattern;
        } else if (sk == rk) {
            st.gen = GeneratorId::GenGen;
        } else {
            st.gen = GeneratorId::Regular;
        }
        plan.steps.push_back(std::move(st));
    }

    detail::plan_seeds(b);
    return std::move(plan);
}

// Seeds-only accounting: (pool index, seed UTXO count) for inspection.
inline std::vector<std::pair<std::size_t, std::size_t>> seed_distribution(const ExecutionPlan& plan) {
    std::map<std::string, std::size_t> owner;
    for (std::size_t p = 0; p < plan.pools.size(); ++p)
        for (const auto& id : plan.pools[p].ids) owner.emplace(id, p);
    std::map<std::size_t, std::size_t> count;
    for (const auto& s : plan.seeds)
        for (const auto& id : s.out_ids) ++count[owner.at(id)];
    return {count.begin(), count.end()};
}

inline nlohmann::json plan_to_json(const ExecutionPlan& plan) {
    using nlohmann::json;
    json pools = json::array();
    for (const auto& p : plan.pools)
        pools.push_back({{"key", p.key},
                         {"kind", to_string(p.kind)},
                         {"instance", p.instance},
                         {"internal", p.internal},
                         {"provenance", to_string(p.provenance)},
                         {"size", p.ids.size()},
                         {"ids", p.ids}});
    json steps = json::array();
    for (const auto& s : plan.steps) {
        json j = {{"row", s.row},
                  {"generator", to_string(s.gen)},
                  {"sender", plan.pools[s.sender].key},
                  {"receiver", plan.pools[s.receiver].key},
                  {"quantity", s.quantity},
                  {"latest_ts", format_iso8601(s.latest_ts)},
                  {"min_inputs", s.min_inputs}};
        if (s.pattern) j["pattern"] = {s.pattern->inputs, s.pattern->outputs};
        if (s.cj) j["cj"] = true;
        if (s.gen == GeneratorId::Mixer) {
            j["subclass"] = s.mixer_subclass;
            j["mixer"] = plan.pools[s.mixer].key;
            if (s.funds != kNoPool) j["funds"] = plan.pools[s.funds].key;
            json script = json::array();
            for (const auto& inv : expand(s)) {
                json from = json::array();
                for (auto p : inv.senders) from.push_back(plan.pools[p].key);
                script.push_back({{"step", inv.script_step},
                                  {"generator", to_string(inv.gen)},
                                  {"from", from},
                                  {"to", plan.pools[inv.receiver].key},
                                  {"quantity", inv.quantity},
                                  {"funds", inv.funds},
                                  {"cj", inv.cj}});
            }
            j["script"] = std::move(script);
        }
        if (s.dex != kNoPool) j["dex"] = plan.pools[s.dex].key;
        steps.push_back(std::move(j));
    }
    json seeds = json::array();
    for (const auto& s : plan.seeds)
        seeds.push_back({{"outer", s.outer_id},
                         {"genesis", s.genesis},
                         {"timestamp", format_iso8601(s.ts)},
                         {"outputs", s.out_ids},
                         {"values", s.out_values}});
    return {{"seed", plan.seed},
            {"epoch", format_iso8601(plan.epoch)},
            {"oldest", format_iso8601(plan.oldest)},
            {"pools", std::move(pools)},
            {"steps", std::move(steps)},
            {"seed_transactions", std::move(seeds)}};
}

}  // namespace amlsim
