#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "amlsim/csv.hpp"
#include "amlsim/features.hpp"

using namespace amlsim;

namespace {

const std::string kToy = AMLSIM_SOURCE_DIR "/tests/fixtures/feature_toy";

struct Expected {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Frozen oracle output; values are shortest round-trip decimals.
Expected load_expected() {
    std::ifstream in(kToy + "/expected_features.csv");
    const auto lines = csv::read_lines(in);
    Expected e;
    e.header = csv::split_line(lines.at(0));
    for (std::size_t i = 1; i < lines.size(); ++i) e.rows.push_back(csv::split_line(lines[i]));
    return e;
}

}  // namespace

TEST(Manifest, HasUniqueNames) {
    const auto& m = feature_manifest();
    ASSERT_EQ(m.size(), 130u);
    std::set<std::string> names;
    for (const auto& f : m) {
        names.insert(f.name);
        EXPECT_FALSE(f.definition.empty()) << f.name;
    }
    EXPECT_EQ(names.size(), 130u);
    EXPECT_EQ(manifest_hash().size(), 64u);
}

TEST(Features, ToyFixtureMatchesOracle) {
    const auto d = read_dataset(kToy);
    const auto m = extract_features(d);
    const auto e = load_expected();
    ASSERT_EQ(e.header.size(), 132u);
    for (std::size_t j = 0; j < 130; ++j) EXPECT_EQ(e.header[j], feature_manifest()[j].name);
    ASSERT_EQ(m.rows.size(), e.rows.size());
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        for (std::size_t j = 0; j < 130; ++j)
            EXPECT_EQ(m.rows[i][j], std::stod(e.rows[i][j])) << d.accounts[i].id << " " << e.header[j];
        EXPECT_EQ(to_string(m.entity[i]), e.rows[i][130]);
        EXPECT_EQ(to_string(m.category[i]), e.rows[i][131]);
    }
}

TEST(Features, HandCheckedValues) {
    const auto d = read_dataset(kToy);
    const auto m = extract_features(d);
    auto col = [](const std::string& name) {
        const auto& f = feature_manifest();
        for (std::size_t j = 0; j < f.size(); ++j)
            if (f[j].name == name) return j;
        throw std::out_of_range(name);
    };
    const auto& a = m.rows[index_of(d.find("a"))];
    EXPECT_EQ(a[col("sent_value_sum")], 850000.0);  // 400000 + 250000 + 200000
    EXPECT_EQ(a[col("final_balance")], 150000.0);
    EXPECT_EQ(a[col("n_sent")], 2.0);
    EXPECT_EQ(a[col("hold_time_max")], 237600.0);  // received in t6, spent in t9
    const auto& s1 = m.rows[index_of(d.find("s1"))];
    EXPECT_EQ(s1[col("n_total")], 2.0);
    EXPECT_EQ(s1[col("sent_tx_to_Exchange")], 1.0);
    EXPECT_EQ(s1[col("recv_tx_from_Mixer")], 1.0);
}

TEST(Features, CommonInputClusters) {
    const auto d = read_dataset(kToy);
    const auto c = cluster_common_input(d.accounts.size(), d.records);
    const auto s2 = index_of(d.find("s2")), b = index_of(d.find("b")), a = index_of(d.find("a"));
    EXPECT_EQ(c.cluster_of[s2], c.cluster_of[b]);
    EXPECT_NE(c.cluster_of[s2], c.cluster_of[a]);
}

TEST(Labels, SingleUseFollowsProvenance) {
    AccountInfo su;
    su.kind = EntityKind::SingleUse;
    su.provenance = EntityKind::Mixer;
    EXPECT_EQ(assign_label(su, LabelConfig::defaults()), Category::Illicit);
    su.provenance = EntityKind::Exchange;
    EXPECT_EQ(assign_label(su, LabelConfig::defaults()), Category::Licit);
}

TEST(Labels, OverridesAndErrors) {
    const auto cfg = LabelConfig::from_json(nlohmann::json{{"licit", {"Mixer"}}, {"illicit", {"Exchange"}}});
    AccountInfo x;
    x.kind = EntityKind::Mixer;
    EXPECT_EQ(assign_label(x, cfg), Category::Licit);
    x.kind = EntityKind::Exchange;
    EXPECT_EQ(assign_label(x, cfg), Category::Illicit);
    EXPECT_THROW(LabelConfig::from_json(nlohmann::json{{"illicit", {"Bank"}}}), ConfigError);
    LabelConfig empty;
    EXPECT_THROW(assign_label(x, empty), ConfigError);
}

TEST(Augment, StaysInsideBand) {
    FeatureMatrix m;
    m.rows.assign(100, std::vector<double>(130, 1000.0));
    augment(m, 1.12, 0.10, 3);
    for (const auto& r : m.rows)
        for (double v : r) {
            EXPECT_GE(v, 1000.0 * 1.12 * 0.9);
            EXPECT_LE(v, 1000.0 * 1.12 * 1.1);
        }
    EXPECT_THROW(augment(m, 1.12, 1.5, 3), ConfigError);
}

TEST(Augment, Deterministic) {
    FeatureMatrix a, b;
    a.rows.assign(3, std::vector<double>(130, 7.0));
    b = a;
    augment(a, 1.12, 0.1, 9);
    augment(b, 1.12, 0.1, 9);
    EXPECT_EQ(a.rows, b.rows);
}

TEST(MatrixCsv, HeaderCarriesManifestHash) {
    const auto m = extract_features(read_dataset(kToy));
    const auto text = matrix_csv(m);
    EXPECT_EQ(text.rfind("# manifest=" + manifest_hash() + "\n", 0), 0u);
    EXPECT_NE(text.find("entity_label,category_label\n"), std::string::npos);
}
