#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "limodel/limodel.hpp"

using namespace limodel;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

JobConfig load(const std::string& name) { return parse_config(slurp(std::string(LIMODEL_CONFIG_DIR) + "/" + name)); }

std::optional<ErrorKind> kind_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

bool has_note(const Report& r, const std::string& prefix) {
  for (const auto& n : r.notes)
    if (n.rfind(prefix, 0) == 0) return true;
  return false;
}

int run_cli(const std::string& args) {
  const int rc = std::system((std::string(LIMODEL_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Config, CycleFromFile) {
  const JobConfig c = load("cycle2.json");
  EXPECT_EQ(c.name, "cycle2");
  ASSERT_EQ(c.system.size(), 2u);
  EXPECT_EQ(c.system.weight(0), Complex(2.0));
  EXPECT_EQ(c.system.weight(1), Complex(3.0));
}

TEST(Config, BilateralRuleTable) {
  const JobConfig c = load("bilateral.json");
  EXPECT_EQ(c.window_extent, 64);
  EXPECT_EQ(c.system.size(), 129u);
  for (std::int64_t n = -64; n <= 64; ++n)
    EXPECT_EQ(c.system.weight(c.system.at(std::to_string(n))), Complex(n > 0 ? 1.0 : 0.5)) << n;
}

TEST(Config, RayCycle) {
  const JobConfig c = load("ray_cycle.json");
  const OrbitStructure o = analyze_orbits(c.system);
  ASSERT_EQ(o.orbits.size(), 1u);
  EXPECT_EQ(o.orbits[0].cycle.size(), 4u);
  EXPECT_EQ(c.system.weight(c.system.at("(1,5)")), Complex(2.0));
}

TEST(Config, Rejections) {
  EXPECT_EQ(kind_of(R"({"schema":"limodel/1","system":{"builtin":"cycle","weights":[1,2]},"colour":1})"),
            ErrorKind::config_validation);
  EXPECT_EQ(kind_of(R"({"schema":"limodel/1","system":{"builtin":"cycle","weights":[1,0]}})"),
            ErrorKind::config_validation);
  EXPECT_EQ(kind_of(R"({"schema":"limodel/2","system":{"builtin":"cycle","weights":[1]}})"),
            ErrorKind::config_validation);
  EXPECT_EQ(kind_of(R"({"schema":"limodel/1","system":{"builtin":"rooted_ray","window":100000}})"),
            ErrorKind::config_validation);
  EXPECT_EQ(kind_of(R"({"schema":"limodel/1","system":{"builtin":"mobius"}})"), ErrorKind::config_validation);
}

TEST(Config, ParseErrorHasPosition) {
  try {
    parse_config("{\n  \"schema\": \"limodel/1\",\n  \"name\" 3\n}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config_parse);
    EXPECT_NE(std::string(e.what()).find("3:"), std::string::npos) << e.what();
  }
}

TEST(Verify, CycleRunsFormally) {
  const Report r = run_verify(load("cycle2.json"));
  ASSERT_EQ(r.checks.size(), pipeline_stages().size());
  for (std::size_t i = 0; i < r.checks.size(); ++i) EXPECT_EQ(r.checks[i].name, pipeline_stages()[i]);
  for (const auto& c : r.checks)
    EXPECT_TRUE(c.status == Status::pass || c.status == Status::not_applicable) << c.name << " " << c.message;
  EXPECT_EQ(r.find("kernel_two_path")->status, Status::not_applicable);
  EXPECT_TRUE(has_note(r, "annulus is empty"));
  EXPECT_TRUE(has_note(r, "r_minus: general"));
  EXPECT_EQ(r.exit_code(), 0);
}

TEST(Verify, BilateralAllPass) {
  const Report r = run_verify(load("bilateral.json"));
  for (const auto& c : r.checks)
    EXPECT_TRUE(c.status == Status::pass || c.status == Status::not_applicable) << c.name << " " << c.message;
  EXPECT_EQ(r.find("kernel_two_path")->status, Status::pass);
  EXPECT_EQ(r.find("reproducing_property")->status, Status::pass);
  EXPECT_NEAR(r.radii["r_minus"].get<double>(), 0.5, 1e-6);
  EXPECT_NEAR(r.radii["r_plus"].get<double>(), 1.0, 1e-6);
}

TEST(Verify, ModesRestrictStages) {
  const JobConfig c = load("rooted_ray.json");
  RunOptions o;
  o.mode = Mode::radii;
  const Report r = run_verify(c, o);
  const auto wanted = stages_for(Mode::radii);
  for (const auto& ch : r.checks) {
    if (wanted.count(ch.name)) EXPECT_NE(ch.status, Status::skipped) << ch.name;
    else EXPECT_EQ(ch.status, Status::skipped) << ch.name;
  }
}

TEST(Report, DeterministicAndRoundTrips) {
  for (const char* f : {"bilateral.json", "branching_tree.json", "example1_cycle3.json"}) {
    const JobConfig c = load(f);
    const std::string a = render(run_verify(c), Format::json);
    const std::string b = render(run_verify(c), Format::json);
    EXPECT_EQ(a, b) << f;
    const Json j = Json::parse(a);
    EXPECT_EQ(j.dump(2), Json::parse(j.dump()).dump(2));
    EXPECT_EQ(j["checks"].size(), pipeline_stages().size());
    EXPECT_EQ(j["provenance"]["config_sha256"].get<std::string>().size(), 64u);
  }
}

TEST(Report, CsvTables) {
  const Report r = run_verify(load("bilateral.json"));
  const std::string csv = render(r, Format::csv);
  EXPECT_EQ(csv.rfind("check,status,message\n", 0), 0u);
  EXPECT_NE(csv.find("\nn,neg_norm,pos_norm,neg_root,pos_root\n"), std::string::npos);
  const std::string text = render(r, Format::text);
  EXPECT_NE(text.find("radii"), std::string::npos);
}

TEST(Report, Sha256KnownAnswer) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Cli, ExitCodes) {
  const auto dir = std::filesystem::temp_directory_path() / "limodel_cli_test";
  std::filesystem::create_directories(dir);
  const auto bad = dir / "zero.json";
  std::ofstream(bad) << R"({"schema":"limodel/1","system":{"builtin":"cycle","weights":[1,0]}})";
  EXPECT_EQ(run_cli("verify " + bad.string()), 2);
  EXPECT_EQ(run_cli("verify " + (dir / "missing.json").string()), 2);
  EXPECT_EQ(run_cli("verify " + std::string(LIMODEL_CONFIG_DIR) + "/cycle2.json --format text"), 0);
  const auto out = dir / "report.csv";
  EXPECT_EQ(run_cli("radii " + std::string(LIMODEL_CONFIG_DIR) + "/bilateral.json --format csv --out " + out.string()), 0);
  EXPECT_EQ(slurp(out.string()).rfind("check,status,message", 0), 0u);
  EXPECT_EQ(run_cli("examples list"), 0);
  std::filesystem::remove_all(dir);
}
