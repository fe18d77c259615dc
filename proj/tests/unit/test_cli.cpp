#include <gtest/gtest.h>

#include <cstdio>
#include <sstream>
#include <sys/wait.h>

#include "support.hpp"

using namespace climgen;
using namespace climgen::testing;

namespace {

struct RunResult {
  int code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(CLIMGEN_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

void write_series_csv(const std::filesystem::path& path, Variable v, const std::vector<double>& values,
                      const char* start = "2026-08-01T00:00:00") {
  std::ostringstream out;
  out << "# site.name: test\n# site.latitude: -20.9\n# site.longitude: 55.5\n# site.utc_offset: 4\n";
  out << "timestamp," << to_string(v) << "\n";
  const auto t0 = at(start);
  for (std::size_t i = 0; i < values.size(); ++i)
    out << format_iso8601(t0 + static_cast<Timestamp>(i) * kSecondsPerHour) << "," << format_number(values[i])
        << "\n";
  write_file(path, out.str());
}

std::size_t count_lines(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(Cli, DescribeCountsPresentValues) {
  TempDir dir;
  write_file(dir / "d.csv",
             "timestamp,dry_bulb_temp\n2026-08-01T00:00:00,20\n2026-08-01T01:00:00,-999\n"
             "2026-08-01T02:00:00,22\n2026-08-01T03:00:00,24\n");
  const auto r = run("describe " + q(dir / "d.csv") + " --var dry_bulb_temp");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("count: 3"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("missing: 1"), std::string::npos) << r.output;
}

TEST(Cli, FitArmaRerunOverwrites) {
  TempDir dir;
  auto z = ar_process({0.7}, 24 * 30, 4);
  for (auto& v : z) v = 5.0 + std::abs(v);
  write_series_csv(dir / "w.csv", Variable::wind_speed, z);
  const std::string cmd = "fit arma --data " + q(dir / "w.csv") + " --var wind_speed --months 8 --p 1 --q 0 --registry " +
                          q(dir / "reg");
  const auto first = run(cmd);
  ASSERT_EQ(first.code, 0) << first.output;
  EXPECT_NE(first.output.find("phi1"), std::string::npos);
  ASSERT_EQ(run(cmd).code, 0);
  const auto models = run("models --registry " + q(dir / "reg"));
  EXPECT_EQ(models.code, 0);
  EXPECT_EQ(count_lines(models.output, "wind_speed__"), 1u) << models.output;
}

TEST(Cli, GenerateWithoutModelPrintsFitHint) {
  TempDir dir;
  write_file(dir / "plan.json", R"({
    "site": {"name": "s", "latitude": -20.9, "longitude": 55.5, "altitude": 0, "utc_offset": 4},
    "variables": ["wind_speed"], "start": "2027-08-01T00:00:00", "duration": 24,
    "criteria": {"months": [8]}, "seed": 1
  })");
  const auto r = run("generate --plan " + q(dir / "plan.json") + " --registry " + q(dir / "empty") + " --out " +
                     q(dir / "seq.csv"));
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find("climgen fit arma"), std::string::npos) << r.output;
  EXPECT_FALSE(std::filesystem::exists(dir / "seq.csv"));
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("describe").code, 1);
  EXPECT_EQ(run("no_such_command").code, 1);
  TempDir dir;
  write_file(dir / "d.csv", "timestamp,dry_bulb_temp\n2026-08-01T00:00:00,20\n");
  EXPECT_EQ(run("describe " + q(dir / "d.csv") + " --var not_a_variable").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, ValidationFailureExitsThree) {
  TempDir dir;
  auto ref = normals(400, 1);
  auto gen = normals(400, 2);
  for (auto& v : ref) v = 5.0 + std::abs(v);
  for (auto& v : gen) v = 9.0 + std::abs(v);
  write_series_csv(dir / "ref.csv", Variable::wind_speed, ref);
  write_series_csv(dir / "gen.csv", Variable::wind_speed, gen);
  const auto bad = run("validate --generated " + q(dir / "gen.csv") + " --reference " + q(dir / "ref.csv") +
                       " --json " + q(dir / "report.json"));
  EXPECT_EQ(bad.code, 3) << bad.output;
  EXPECT_TRUE(std::filesystem::exists(dir / "report.json"));
  const auto good = run("validate --generated " + q(dir / "ref.csv") + " --reference " + q(dir / "ref.csv"));
  EXPECT_EQ(good.code, 0) << good.output;
}
