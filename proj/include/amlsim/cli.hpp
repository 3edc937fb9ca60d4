#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "amlsim/entitysim.hpp"
#include "amlsim/features.hpp"
#include "amlsim/invariants.hpp"
#include "amlsim/runner.hpp"
#include "amlsim/schema.hpp"

namespace amlsim {

enum ExitCode : int { kExitOk = 0, kExitDomain = 1, kExitUsage = 2 };

namespace detail {

inline std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("SIM_SEED")) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used == std::string_view(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw ConfigError("SIM_SEED is not an unsigned integer: " + std::string(env));
    }
    throw ConfigError("no seed: pass --seed or set SIM_SEED");
}

inline SimConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    try {
        return config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
}

inline void print_report(const ValidationReport& rep, std::ostream& os) {
    for (const auto& i : rep.issues)
        os << (i.severity == ValidationIssue::Severity::Error ? "error" : "warning") << ": row " << i.row << ": "
           << i.message << "\n";
}

inline RunOptions progress_options() {
    RunOptions o;
    o.progress = [](std::size_t n) { std::cerr << "  " << n << " records\n"; };
    return o;
}

}  // namespace detail

inline int cli_main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Synthetic UTXO transaction generator for laundering-detection research"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    std::string schema_path, out_dir, dataset_dir, config_path, labels_path, format = "csv", entity;
    std::optional<std::uint64_t> seed;
    bool emit_plan = false, keep_partial = false, do_augment = false;
    double quantity_scale = 1.0, scale = 1.12, noise = 0.10;
    std::size_t count = 1000;

    auto* validate = app.add_subcommand("validate", "check a schema without simulating");
    validate->add_option("--schema", schema_path, "schema file (.csv or .json)")->required();

    auto* simulate = app.add_subcommand("simulate", "compile a schema and generate a dataset");
    simulate->add_option("--schema", schema_path, "schema file (.csv or .json)")->required();
    simulate->add_option("--seed", seed, "random seed (falls back to SIM_SEED)");
    simulate->add_option("--out", out_dir, "output directory")->required();
    simulate->add_option("--config", config_path, "JSON configuration overrides");
    simulate->add_option("--quantity-scale", quantity_scale, "multiply every row quantity")->check(CLI::PositiveNumber);
    simulate->add_option("--format", format, "transaction file format")->check(CLI::IsMember({"csv", "jsonl", "both"}));
    simulate->add_flag("--emit-plan", emit_plan, "also write the compiled plan as plan.json");
    simulate->add_flag("--keep-partial", keep_partial, "write committed steps if a step fails");

    auto* quick = app.add_subcommand("quickgen", "run a ready-made single-entity simulation");
    quick->add_option("--entity", entity, "mixer | exchange | p2p_escrow | nested_exchange | licit")->required();
    quick->add_option("--count", count, "approximate number of records")->check(CLI::PositiveNumber);
    quick->add_option("--seed", seed, "random seed (falls back to SIM_SEED)");
    quick->add_option("--out", out_dir, "output directory")->required();
    quick->add_option("--config", config_path, "JSON configuration overrides");

    auto* feats = app.add_subcommand("features", "extract the per-account feature matrix");
    feats->add_option("--dataset", dataset_dir, "dataset directory")->required();
    feats->add_option("--out", out_dir, "output directory")->required();
    feats->add_option("--labels", labels_path, "JSON label overrides");
    feats->add_flag("--augment", do_augment, "scale and jitter every feature value");
    feats->add_option("--scale", scale, "augmentation scale");
    feats->add_option("--noise", noise, "augmentation noise fraction");
    feats->add_option("--seed", seed, "augmentation seed (falls back to SIM_SEED)");

    auto* stats = app.add_subcommand("stats", "summarize a dataset and check its invariants");
    stats->add_option("--dataset", dataset_dir, "dataset directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*validate) {
            const auto rows = parse_schema(schema_path, format_from_path(schema_path));
            const auto rep = validate_schema(rows);
            detail::print_report(rep, err);
            out << rows.size() << " rows, " << rep.count(ValidationIssue::Severity::Error) << " errors, "
                << rep.count(ValidationIssue::Severity::Warning) << " warnings\n";
            return rep.ok() ? kExitOk : kExitDomain;
        }
        if (*simulate) {
            const SimConfig cfg = detail::load_config(config_path);
            const std::uint64_t s = detail::resolve_seed(seed);
            std::vector<std::string> warnings;
            auto rows = parse_schema(schema_path, format_from_path(schema_path), &warnings);
            for (const auto& w : warnings) err << "warning: " << w << "\n";
            if (quantity_scale != 1.0) rows = scale_quantities(std::move(rows), quantity_scale);
            const auto rep = validate_schema(rows);
            detail::print_report(rep, err);
            if (!rep.ok()) return kExitDomain;

            const auto plan = compile(rows, s, cfg);
            if (emit_plan) {
                std::filesystem::create_directories(out_dir);
                detail::write_atomic(std::filesystem::path(out_dir) / "plan.json", plan_to_json(plan).dump(2) + "\n");
            }
            err << "simulating " << plan.steps.size() << " steps over " << plan.account_count() << " accounts\n";
            auto opts = detail::progress_options();
            opts.keep_partial = keep_partial;
            Dataset d = run_plan(plan, cfg, std::move(opts));
            d.schema_digest = sha256_hex(serialize_schema(rows, SchemaFormat::Csv));
            const TxFormat tf = format == "jsonl" ? TxFormat::Jsonl : format == "both" ? TxFormat::Both : TxFormat::Csv;
            const auto m = write_dataset(d, out_dir, tf);
            out << m.transactions << " transactions, " << m.accounts << " accounts -> " << out_dir << "\n";
            if (d.partial) {
                err << "partial dataset: " << d.error << "\n";
                return kExitDomain;
            }
            return kExitOk;
        }
        if (*quick) {
            QuickGenConfig qc;
            qc.entity = parse_quick_entity(entity);
            qc.count = count;
            qc.seed = detail::resolve_seed(seed);
            const Dataset d = quickgen(qc, detail::load_config(config_path), detail::progress_options());
            const auto m = write_dataset(d, out_dir);
            out << m.transactions << " transactions, " << m.accounts << " accounts -> " << out_dir << "\n";
            return kExitOk;
        }
        if (*feats) {
            const Dataset d = read_dataset(dataset_dir);
            LabelConfig labels = LabelConfig::defaults();
            if (!labels_path.empty()) {
                std::ifstream in(labels_path);
                if (!in) throw ConfigError("cannot open labels " + labels_path);
                labels = LabelConfig::from_json(nlohmann::json::parse(in));
            }
            FeatureMatrix fm = extract_features(d, labels);
            if (do_augment) augment(fm, scale, noise, detail::resolve_seed(seed));
            std::filesystem::create_directories(out_dir);
            detail::write_atomic(std::filesystem::path(out_dir) / "features.csv", matrix_csv(fm));
            detail::write_atomic(std::filesystem::path(out_dir) / "feature_manifest.json", manifest_json().dump(2) + "\n");
            out << fm.rows.size() << " accounts x " << kFeatureCount << " features -> " << out_dir << "\n";
            return kExitOk;
        }
        if (*stats) {
            const Dataset d = read_dataset(dataset_dir);
            const auto m = make_manifest(d);
            out << "transactions " << m.transactions << "\naccounts " << m.accounts << "\n";
            for (const auto& [k, n] : m.accounts_per_entity)
                out << "  " << k << ": " << n << " accounts, " << m.records_per_entity.at(k) << " records\n";
            out << "pending escrow trades " << m.pending_trades << "\n";
            const auto rep = check_invariants(d);
            for (const auto& msg : rep.messages) err << "violation: " << msg << "\n";
            out << "invariant violations " << rep.total() << "\n";
            return rep.ok() ? kExitOk : kExitDomain;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    return kExitUsage;
}

}  // namespace amlsim
