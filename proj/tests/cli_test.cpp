#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "panorama/metrics.hpp"

namespace fs = std::filesystem;
using namespace panorama;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(PANORAMA_CLI) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Scratch : ::testing::Test {
    fs::path dir;
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("panorama_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
};

}  // namespace

TEST_F(Scratch, SimulateGrid) {
    std::ofstream(dir / "grid.json") << R"({"lenses":["gcpb","gcnb"],"seeds":[1,2,3],"explore_range":10})";
    ASSERT_EQ(run("simulate --config " + (dir / "grid.json").string() + " --out " + (dir / "out").string()), 0);
    const auto csv = slurp(dir / "out" / "results.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
    EXPECT_TRUE(fs::exists(dir / "out" / "summary.csv"));
}

TEST_F(Scratch, SimulateSingleAndReplay) {
    ASSERT_EQ(run("simulate --lens lcmb --seed 4 --out " + dir.string()), 0);
    for (const char* f : {"results.csv", "trace.jsonl", "intervals.csv", "metrics.json"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    const auto stored = nlohmann::json::parse(slurp(dir / "metrics.json"));
    std::ifstream in(dir / "trace.jsonl");
    auto report = compute_metrics(Trace::read_jsonl(in));
    EXPECT_EQ(stored["staleness_ms"], report.staleness_ms);
    EXPECT_EQ(run("replay --trace " + (dir / "trace.jsonl").string() + " --csv " + (dir / "again.csv").string()), 0);
    EXPECT_EQ(slurp(dir / "again.csv"), slurp(dir / "intervals.csv"));
    EXPECT_EQ(run("verify --trace " + (dir / "trace.jsonl").string()), 0);
}

TEST(Cli, Verify) {
    EXPECT_EQ(run("verify --theorems --seeds 10"), 0);
    EXPECT_EQ(run("verify --counterexample theorem3"), 0);
}

TEST_F(Scratch, TamperedTraceFails) {
    ASSERT_EQ(run("simulate --lens gcnb --out " + dir.string()), 0);
    std::ifstream in(dir / "trace.jsonl");
    auto trace = Trace::read_jsonl(in);
    // claim a UC was returned through a lens that promises visibility
    auto& e = trace.reads.front();
    e.states.begin()->second = {ItemKind::UnderComputation, e.meta_at_read.latest, ""};
    std::ofstream out(dir / "bad.jsonl");
    trace.write_jsonl(out);
    out.close();
    EXPECT_EQ(run("verify --trace " + (dir / "bad.jsonl").string()), 1);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("verify"), 2);
    EXPECT_EQ(run("verify --counterexample nope"), 2);
    EXPECT_EQ(run("simulate --lens gcfb --out /tmp/panorama_cli_unused"), 2);
    EXPECT_EQ(run("replay --trace /nonexistent.jsonl"), 2);
    EXPECT_EQ(run("--help"), 0);
}
