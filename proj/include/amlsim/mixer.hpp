#pragma once

#include <map>
#include <string>
#include <vector>

#include "amlsim/generators.hpp"
#include "amlsim/mapper.hpp"

namespace amlsim {

struct MixerRequest {
    int subclass = 1;
    std::vector<AccountRef> senders;
    std::vector<AccountRef> receivers;
    std::vector<AccountRef> mixer;
    std::vector<AccountRef> funds;
    std::vector<std::vector<AccountRef>> layers;  // internal single-use layers, script order
    std::size_t quantity = 1;
    std::size_t min_inputs = 1;
    Timestamp latest_ts = 0;
    bool receivers_spend_later = false;
    // UTXO entries later plan steps need, keyed by slot (senders, funds, mixer).
    std::map<int, std::size_t> held_back;
};

// Runs the whole script atomically, one trace entry per script step.
// `base` supplies the step/row identity of the trace entries.
inline std::vector<std::size_t> gen_mixer(Simulation& sim, const MixerRequest& req, const TraceEntry& base = {}) {
    const auto& script = mixer_script(req.subclass);
    if (req.layers.size() < static_cast<std::size_t>(script.layers))
        throw SimError("mixer subclass " + std::to_string(req.subclass) + " needs " + std::to_string(script.layers) +
                       " internal layers");
    if (!script.funds_steps().empty() && req.funds.empty()) throw PoolExhausted("mixer Funds pool is empty");
    const std::size_t q = mixer_step_quantity(req.quantity, req.subclass);

    auto slot = [&](int x) -> const std::vector<AccountRef>& {
        switch (x) {
            case kSlotSenders: return req.senders;
            case kSlotReceivers: return req.receivers;
            case kSlotFunds: return req.funds;
            case kSlotMixer: return req.mixer;
            default: return req.layers.at(static_cast<std::size_t>(x - 1));
        }
    };
    auto spends_later = [&](std::size_t i, int to) {
        if (to == kSlotReceivers) return req.receivers_spend_later;
        for (std::size_t j = i + 1; j < script.steps.size(); ++j)
            for (int f : script.steps[j].from)
                if (f == to) return true;
        return false;
    };

    return atomically(sim, [&] {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < script.steps.size(); ++i) {
            const auto& st = script.steps[i];
            GenRequest g;
            for (int f : st.from) {
                const auto& v = slot(f);
                g.senders.insert(g.senders.end(), v.begin(), v.end());
            }
            g.receivers = slot(st.to);
            g.quantity = q;
            g.min_inputs = st.from.front() == kSlotSenders ? req.min_inputs : 1;
            g.latest_ts = req.latest_ts;
            g.dist = TimeDist::Gaussian;
            g.spendable_outputs = spends_later(i, st.to);
            for (int f : st.from) {
                if (f > 0) continue;
                auto it = req.held_back.find(f);
                if (it != req.held_back.end()) g.held_back += it->second;
                for (std::size_t j = i + 1; j < script.steps.size(); ++j)
                    for (int later : script.steps[j].from)
                        if (later == f) g.held_back += script.steps[j].gen == GeneratorId::Coinjoin ? 2 * q : q;
            }

            TraceEntry e = base;
            e.module = std::string(to_string(st.gen));
            e.subclass = req.subclass;
            e.script_step = i + 1;
            e.funds = st.funds;
            e.requested = q;
            sim.begin_trace(std::move(e));
            std::vector<std::size_t> got;
            try {
                switch (st.gen) {
                    case GeneratorId::GenSgl: got = gen_single_use(sim, SingleUseMode::GenSgl, st.cj, g); break;
                    case GeneratorId::SglSgl: got = gen_single_use(sim, SingleUseMode::SglSgl, st.cj, g); break;
                    case GeneratorId::SglGen: got = gen_single_use(sim, SingleUseMode::SglGen, st.cj, g); break;
                    case GeneratorId::Coinjoin: got = gen_coinjoin(sim, g); break;
                    case GeneratorId::GenGen: got = gen_gen_gen(sim, g); break;
                    default: got = gen_regular(sim, g); break;
                }
            } catch (const SimError& e) {
                throw SimError("script step " + std::to_string(i + 1) + ": " + e.what());
            }
            sim.end_trace();
            out.insert(out.end(), got.begin(), got.end());
        }
        return out;
    });
}

}  // namespace amlsim
