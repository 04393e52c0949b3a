#include "pseudohaptic/cli.hpp"
#include "pseudohaptic/trial_log.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace pseudohaptic;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args)
{
    args.insert(args.begin(), "pseudohaptic");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    Result r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("pseudohaptic_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Cli, UsageErrors)
{
    EXPECT_EQ(run({}).code, kExitUsage);
    EXPECT_EQ(run({"bogus"}).code, kExitUsage);
    EXPECT_EQ(run({"simulate", "--out", "/tmp/x"}).code, kExitUsage);
    const auto r = run({"simulate", "--study", "1", "--participants", "0", "--out", "/tmp/x"});
    EXPECT_EQ(r.code, kExitUsage);
    EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
    EXPECT_EQ(run({"simulate", "--study", "3", "--out", "/tmp/x"}).code, kExitUsage);
    EXPECT_EQ(run({"simulate", "--study", "1", "--tune-p", "0.3", "--out", "/tmp/x"}).code, kExitUsage);
    EXPECT_EQ(run({"serve", "--port", "0"}).code, kExitUsage);
    EXPECT_EQ(run({"serve", "--port", "8080", "--seed-policy", "maybe"}).code, kExitUsage);
}

TEST(Cli, HelpIsSuccess)
{
    const auto r = run({"--help"});
    EXPECT_EQ(r.code, kExitOk);
    EXPECT_NE(r.out.find("simulate"), std::string::npos);
}

TEST(Cli, MissingInputsAreDataErrors)
{
    auto r = run({"analyze", "--in", "/nonexistent/trials.csv", "--out", "/tmp/x"});
    EXPECT_EQ(r.code, kExitData);
    EXPECT_NE(r.err.find("input not found"), std::string::npos);
    r = run({"simulate", "--study", "1", "--observer", "/nonexistent/obs.cfg", "--out", "/tmp/x"});
    EXPECT_EQ(r.code, kExitData);
}

TEST(Cli, MalformedInputIsDataError)
{
    const auto dir = scratch("bad_csv");
    fs::create_directories(dir);
    std::ofstream(dir / "trials.csv") << "not,a,trial,file\n1,2,3,4\n";
    EXPECT_EQ(run({"analyze", "--in", dir.string(), "--out", (dir / "out").string()}).code, kExitData);
    fs::remove_all(dir);
}

TEST(Cli, BadObserverConfigIsUsageError)
{
    const auto dir = scratch("bad_obs");
    fs::create_directories(dir);
    std::ofstream(dir / "obs.cfg") << "gain = 2\n";
    EXPECT_EQ(run({"simulate", "--study", "1", "--observer", (dir / "obs.cfg").string(), "--out",
                   (dir / "out").string()})
                  .code,
              kExitUsage);
    fs::remove_all(dir);
}

TEST(Cli, SimulateThenAnalyze)
{
    const auto dir = scratch("pipeline");
    auto r = run({"simulate", "--study", "1", "--participants", "3", "--seed", "5", "--tune-p", "0.8", "--out",
                  (dir / "sim").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("simulated 3 participants, 360 trials"), std::string::npos);
    for (const char* name : {"trials.csv", "trials.jsonl", "logs/p01.csv", "logs/p03.jsonl"}) {
        EXPECT_TRUE(fs::exists(dir / "sim" / name)) << name;
    }

    r = run({"analyze", "--in", (dir / "sim").string(), "--out", (dir / "ana").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_TRUE(fs::exists(dir / "ana" / "test_results.csv"));
    EXPECT_TRUE(fs::exists(dir / "ana" / "plot_comparison.csv"));

    // Same seed, same bytes.
    ASSERT_EQ(run({"simulate", "--study", "1", "--participants", "3", "--seed", "5", "--tune-p", "0.8", "--out",
                   (dir / "sim2").string()})
                  .code,
              kExitOk);
    EXPECT_EQ(slurp(dir / "sim" / "trials.jsonl"), slurp(dir / "sim2" / "trials.jsonl"));
    EXPECT_EQ(slurp(dir / "sim" / "trials.csv"), slurp(dir / "sim2" / "trials.csv"));
    fs::remove_all(dir);
}

TEST(Cli, ConfigFileWithFlagsWinning)
{
    const auto dir = scratch("config");
    fs::create_directories(dir);
    std::ofstream(dir / "run.ini") << "[simulate]\nstudy = 2\nparticipants = 4\nseed = 3\nout = "
                                   << (dir / "from_config").string() << "\n";
    auto r = run({"--config", (dir / "run.ini").string(), "simulate", "--participants", "2"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("simulated 2 participants, 120 trials"), std::string::npos);
    const auto rows = read_summary_csv(dir / "from_config" / "trials.csv");
    EXPECT_EQ(rows.size(), 120u);
    fs::remove_all(dir);
}
