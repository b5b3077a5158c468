#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "twinet/app/cli.hpp"
#include "twinet/app/config.hpp"
#include "twinet/app/csv.hpp"

using namespace twinet::app;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("twinet-app-test-" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

const Schema kSchema{{"n", ColumnType::Int}, {"x", ColumnType::Real, 3}, {"label", ColumnType::Text}};

}  // namespace

TEST(Csv, EmptyRowsGiveHeaderOnly) {
    const auto path = scratch("csv") / "empty.csv";
    write_metrics_csv({}, kSchema, path);
    EXPECT_EQ(slurp(path), "n,x,label\n");
}

TEST(Csv, Formatting) {
    const std::vector<Row> rows{{std::int64_t{1}, 0.5, std::string("plain")},
                                {std::int64_t{-2}, -0.0001, std::string("a,b")},
                                {std::int64_t{3}, 2.0 / 3.0, std::string("say \"hi\"")}};
    EXPECT_EQ(render_csv(rows, kSchema), "n,x,label\n1,0.500,plain\n-2,0.000,\"a,b\"\n3,0.667,\"say \"\"hi\"\"\"\n");
}

TEST(Csv, SchemaMismatchFailsBeforeWriting) {
    const auto path = scratch("csv-bad") / "bad.csv";
    const std::vector<Row> arity{{std::int64_t{1}, 0.5}};
    EXPECT_THROW(write_metrics_csv(arity, kSchema, path), CsvError);
    EXPECT_FALSE(fs::exists(path));
    const std::vector<Row> type{{std::int64_t{1}, 0.5, std::string("ok")}, {1.0, 0.5, std::string("bad")}};
    EXPECT_THROW(write_metrics_csv(type, kSchema, path), CsvError);
    EXPECT_FALSE(fs::exists(path));
}

TEST(Csv, IoFailureSurfaces) {
    EXPECT_THROW(write_metrics_csv({}, kSchema, "/nonexistent-dir/x/y.csv"), CsvError);
}

TEST(Csv, SameRowsSameBytes) {
    const auto dir = scratch("csv-det");
    const std::vector<Row> rows{{std::int64_t{7}, 1.25, std::string("z")}};
    write_metrics_csv(rows, kSchema, dir / "a.csv");
    write_metrics_csv(rows, kSchema, dir / "b.csv");
    EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
}

TEST(Csv, WallClockColumnsDropped) {
    Table t;
    t.schema = {{"k", ColumnType::Int}, {"ms", ColumnType::Real, 3, true}, {"v", ColumnType::Real}};
    t.rows = {{std::int64_t{1}, 3.5, 2.0}};
    const auto s = without_wall_clock(t);
    EXPECT_EQ(render_csv(s.rows, s.schema), "k,v\n1,2.000000\n");
}

TEST(Config, EmptyObjectGivesDefaults) {
    const auto s = parse_settings("{}");
    EXPECT_EQ(s.seed, 1u);
    EXPECT_FALSE(s.broker);
    EXPECT_EQ(s.bench.sizes.size(), 6u);
    EXPECT_EQ(s.mirror.duration_s, 60.0);
    EXPECT_EQ(s.mirror.changes, 6u);
    EXPECT_EQ(s.sadr.escalation.repetitions, 10u);
    EXPECT_EQ(s.pilot.scenarios.size(), 3u);
}

TEST(Config, ShippedScenariosParse) {
    for (const auto& entry : fs::directory_iterator(TWINET_SCENARIO_DIR)) {
        if (entry.path().extension() != ".json") continue;
        EXPECT_NO_THROW(load_settings(entry.path())) << entry.path();
    }
}

TEST(Config, Overrides) {
    const auto s = parse_settings(R"({
        "seed": 9, "broker": "10.0.0.2:1884",
        "sadr": {"repetitions": 2, "app_requirements": 2.5, "arms": "gated", "dwell_s": 1},
        "mirror": {"schedule": [[0, 50], [3, 80]]},
        "pilot": {"scenarios": ["20mhz"], "timeout_s": 1.5}})");
    EXPECT_EQ(s.seed, 9u);
    ASSERT_TRUE(s.broker);
    EXPECT_EQ(s.broker->port, 1884);
    EXPECT_EQ(s.sadr.escalation.repetitions, 2u);
    EXPECT_FALSE(s.sadr.escalation.derive_requirements);
    EXPECT_EQ(s.sadr.escalation.sadr.app_requirements, 2.5);
    EXPECT_TRUE(s.sadr.escalation.run_gated);
    EXPECT_FALSE(s.sadr.escalation.run_ungated);
    EXPECT_EQ(s.mirror.schedule.size(), 2u);
    EXPECT_EQ(s.pilot.timeout.count(), 1500);
}

TEST(Config, Rejections) {
    const char* bad[] = {
        "not json",
        R"({"colour": 1})",
        R"({"bench": {"sizes": [1], "extra": 0}})",
        R"({"bench": {"samples": 0}})",
        R"({"mirror": {"schedule": [[1, 5], [1, 6]]}})",
        R"({"mirror": {"speedup": 0}})",
        R"({"sadr": {"arms": "neither"}})",
        R"({"sadr": {"transport": "carrier-pigeon"}})",
        R"({"sadr": {"safe_setup": [4.5, 4.5, 4.5]}})",
        R"({"sadr": {"instances": [[1, 2]]}})",
        R"({"sadr": {"instances": [[1, 2, 10]]}})",
        R"({"pilot": {"scenarios": ["5mhz"]}})",
        R"({"broker": "host:notaport"})",
        R"({"seed": "one"})",
    };
    for (const char* text : bad) EXPECT_THROW(parse_settings(text), ConfigError) << text;
    EXPECT_THROW(load_settings("/nonexistent/scenario.json"), ConfigError);
}

TEST(Cli, UnknownOrMissingCommand) {
    EXPECT_NE(run_command({"twinet"}), 0);
    EXPECT_NE(run_command({"twinet", "frobnicate"}), 0);
    EXPECT_NE(run_command({"twinet", "pilot", "--scenario", "5mhz"}), 0);
    EXPECT_EQ(run_command({"twinet", "--help"}), 0);
}

TEST(Cli, BadConfigFails) {
    const auto dir = scratch("cli-cfg");
    std::ofstream(dir / "bad.json") << R"({"sadr": {"arms": 3}})";
    EXPECT_EQ(run_command({"twinet", "sadr", "--config", (dir / "bad.json").string(), "--out", dir.string()}), 1);
}

TEST(Cli, BenchShape) {
    const auto dir = scratch("cli-bench");
    ASSERT_EQ(run_command({"twinet", "bench", "--samples", "3", "--warmup", "1", "--out", dir.string()}), 0);
    const auto csv = slurp(dir / "bench_latency.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "size_bytes,direction,mean_ms,p50_ms,p99_ms,n");
    EXPECT_EQ(line_count(csv), 1u + 2 * 6);
}

TEST(Cli, MirrorShapeAndSadrReproducible) {
    const auto dir = scratch("cli-run");
    ASSERT_EQ(run_command({"twinet", "mirror", "--duration", "3", "--changes", "2", "--speedup", "50", "--out",
                           dir.string()}),
              0);
    EXPECT_EQ(line_count(slurp(dir / "mirror_fig2.csv")), 1u + 30);
    EXPECT_EQ(line_count(slurp(dir / "mirror_changes.csv")), 1u + 2);

    const auto a = dir / "a", b = dir / "b";
    for (const auto& out : {a, b}) {
        ASSERT_EQ(run_command({"twinet", "sadr", "--reps", "2", "--dwell", "2", "--seed", "4", "--out", out.string()}),
                  0);
    }
    for (const char* f : {"sadr_rewards.csv", "sadr_cumulative.csv", "sadr_summary.csv", "sadr_decisions.csv"}) {
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    EXPECT_EQ(line_count(slurp(a / "sadr_rewards.csv")), 1u + 12 * 2 * 2);
}
