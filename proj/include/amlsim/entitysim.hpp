#pragma once

#include <string>
#include <vector>

#include "amlsim/runner.hpp"
#include "amlsim/schema.hpp"

namespace amlsim {

enum class QuickEntity { Mixer, Exchange, P2pEscrow, NestedExchange, Licit };

inline std::string_view to_string(QuickEntity e) {
    switch (e) {
        case QuickEntity::Mixer: return "mixer";
        case QuickEntity::Exchange: return "exchange";
        case QuickEntity::P2pEscrow: return "p2p_escrow";
        case QuickEntity::NestedExchange: return "nested_exchange";
        case QuickEntity::Licit: return "licit";
    }
    return "?";
}

inline QuickEntity parse_quick_entity(std::string_view s) {
    const std::string n = detail::normalize_name(s);
    if (n == "mixer") return QuickEntity::Mixer;
    if (n == "exchange") return QuickEntity::Exchange;
    if (n == "p2pescrow" || n == "p2p" || n == "escrow") return QuickEntity::P2pEscrow;
    if (n == "nestedexchange" || n == "nested") return QuickEntity::NestedExchange;
    if (n == "licit") return QuickEntity::Licit;
    throw ConfigError("unknown quickgen entity '" + std::string(s) + "'");
}

struct QuickGenConfig {
    QuickEntity entity = QuickEntity::Licit;
    std::size_t count = 100;
    std::uint64_t seed = 0;
    Timestamp base_ts = make_timestamp(2020, 3, 1);
};

// The schema each ready-use simulator runs. Row dates advance one day per
// row so pools shared across rows never move backwards in time.
inline std::vector<SchemaRow> quickgen_rows(const QuickGenConfig& qc, const SimConfig& cfg = {}) {
    if (qc.count < 1) throw ConfigError("quickgen count must be at least 1");
    std::vector<SchemaRow> rows;
    Timestamp day = qc.base_ts;
    auto row = [&](EntityKind sk, int si, EntityKind rk, int ri, std::size_t q) -> SchemaRow& {
        day += kSecondsPerDay;
        SchemaRow r;
        r.sender = {sk, si};
        r.receiver = {rk, ri};
        r.quantity = q;
        r.latest_ts = day;
        rows.push_back(r);
        return rows.back();
    };
    using K = EntityKind;
    switch (qc.entity) {
        case QuickEntity::Licit: row(K::Licit, 1, K::Licit, 1, qc.count); break;
        case QuickEntity::Exchange: {
            // Customers deposit to the current service-address generation,
            // which is swept into the exchange and then retired.
            const std::size_t r = cfg.service_rotation;
            const std::size_t gens = (qc.count + r - 1) / r;
            for (std::size_t g = 1; g <= gens; ++g) {
                row(K::Licit, 1, K::ServiceAddress, static_cast<int>(g), r / 2);
                row(K::ServiceAddress, static_cast<int>(g), K::Exchange, 1, r - r / 2);
            }
            break;
        }
        case QuickEntity::P2pEscrow: {
            const std::size_t trades = 10;
            const std::size_t cycles = (qc.count + 3 * trades - 1) / (3 * trades);
            for (std::size_t c = 0; c < cycles; ++c) {
                row(K::Licit, 1, K::Escrow, 1, trades);
                row(K::Escrow, 1, K::Licit, 2, trades);
            }
            break;
        }
        case QuickEntity::NestedExchange: {
            // Peel-style 1-in/1-out hops alternating between two exchanges
            // and fresh nested service addresses.
            Rng rng(mix_seed(qc.seed ^ 0x6e65737465ULL));
            const std::size_t width = 5;
            std::size_t made = 0;
            int nsa = 0;
            int ex = 1;
            while (made < qc.count) {
                const auto hops = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(cfg.nested_hops_min),
                                                                           static_cast<std::int64_t>(cfg.nested_hops_max)));
                EntitySpec at{K::Exchange, ex};
                for (std::size_t h = 0; h < hops; ++h) {
                    EntitySpec next = at.kind == K::Exchange ? EntitySpec{K::NestedServiceAddress, ++nsa}
                                                             : EntitySpec{K::Exchange, (ex = 3 - ex)};
                    auto& r = row(at.kind, at.instance, next.kind, next.instance, width);
                    r.style = RowStyle::Pattern;
                    r.pattern = SidePattern{1, 1};
                    at = next;
                    made += width;
                }
            }
            break;
        }
        case QuickEntity::Mixer: {
            const std::size_t per_row = 26;
            int i = 0;
            std::size_t made = 0;
            while (made < qc.count) {
                const int sub = i % 4 + 1;
                row(K::Licit, 1, K::Mixer, 1, per_row);
                made += mixer_step_quantity(per_row, sub) * mixer_script(sub).steps.size();
                ++i;
            }
            break;
        }
    }
    return rows;
}

inline Dataset quickgen(const QuickGenConfig& qc, const SimConfig& cfg = {}, RunOptions opts = {}) {
    const auto rows = quickgen_rows(qc, cfg);
    const auto plan = compile(rows, qc.seed, cfg);
    opts.keep_partial = false;
    Dataset d = run_plan(plan, cfg, std::move(opts));
    d.schema_digest = sha256_hex(serialize_schema(rows, SchemaFormat::Csv));
    return d;
}

}  // namespace amlsim
