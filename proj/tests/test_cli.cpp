#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "amlsim/cli.hpp"

using namespace amlsim;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "amlsim");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("amlsim_cli_" + name);
    fs::remove_all(p);
    return p;
}

const std::string kFigure2 = AMLSIM_SOURCE_DIR "/schemas/figure2.csv";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Cli, ValidateFigureTwo) { EXPECT_EQ(run({"validate", "--schema", kFigure2}).code, 0); }

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"simulate", "--schema", kFigure2}).code, 2);
    EXPECT_EQ(run({"simulate", "--schema", kFigure2, "--out", "x", "--format", "xml"}).code, 2);
}

TEST(Cli, DomainErrorsExitOne) {
    const auto dir = scratch("bad");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.csv") << "sender,receiver,quantity,timestamp\nBank 1,Licit 1,5,2020-01-01\n";
    const auto r = run({"validate", "--schema", (dir / "bad.csv").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("row 1"), std::string::npos) << r.err;
    EXPECT_EQ(run({"stats", "--dataset", (dir / "missing").string()}).code, 1);
    fs::remove_all(dir);
}

TEST(Cli, SimulateFeaturesStats) {
    const auto dir = scratch("sim");
    const auto r = run({"simulate", "--schema", kFigure2, "--seed", "7", "--out", (dir / "ds").string(), "--emit-plan"});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"transactions.csv", "accounts.csv", "trace.jsonl", "manifest.json", "plan.json"})
        EXPECT_TRUE(fs::exists(dir / "ds" / f)) << f;
    const auto manifest = nlohmann::json::parse(slurp(dir / "ds" / "manifest.json"));
    EXPECT_EQ(manifest.at("seed").get<std::uint64_t>(), 7u);

    ASSERT_EQ(run({"features", "--dataset", (dir / "ds").string(), "--out", (dir / "f").string()}).code, 0);
    EXPECT_TRUE(fs::exists(dir / "f" / "features.csv"));
    EXPECT_TRUE(fs::exists(dir / "f" / "feature_manifest.json"));

    const auto s = run({"stats", "--dataset", (dir / "ds").string()});
    EXPECT_EQ(s.code, 0) << s.err;
    fs::remove_all(dir);
}

TEST(Cli, SeedFromEnvironment) {
    const auto dir = scratch("env");
    setenv("SIM_SEED", "7", 1);
    ASSERT_EQ(run({"quickgen", "--entity", "licit", "--count", "30", "--out", (dir / "a").string()}).code, 0);
    unsetenv("SIM_SEED");
    ASSERT_EQ(run({"quickgen", "--entity", "licit", "--count", "30", "--seed", "7", "--out", (dir / "b").string()}).code,
              0);
    EXPECT_EQ(slurp(dir / "a" / "transactions.csv"), slurp(dir / "b" / "transactions.csv"));
    fs::remove_all(dir);
}

TEST(Cli, QuickgenUnknownEntity) {
    EXPECT_EQ(run({"quickgen", "--entity", "bank", "--out", scratch("q").string()}).code, 1);
}
