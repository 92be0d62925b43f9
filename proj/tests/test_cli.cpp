#include "geoequiv/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace geoequiv;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "geoequiv");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("geoequiv_test_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string pairs_file(const std::string& name) { return std::string(GEOEQUIV_PAIRS_DIR) + "/" + name; }

}  // namespace

TEST(Csv, SeventeenDigits) {
  EXPECT_EQ(csv::number(0.1), "0.10000000000000001");
  EXPECT_EQ(csv::number(2.0), "2");
  EXPECT_EQ(std::stod(csv::number(M_PI)), M_PI);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(cli::exit_code(Verdict::Pass), 0);
  EXPECT_EQ(cli::exit_code(Verdict::Fail), 1);
  EXPECT_EQ(cli::exit_code(Verdict::Inconclusive), 2);
  EXPECT_EQ(cli::combine(Verdict::Pass, Verdict::Inconclusive), Verdict::Inconclusive);
  EXPECT_EQ(cli::combine(Verdict::Inconclusive, Verdict::Fail), Verdict::Fail);
  EXPECT_EQ(cli::combine(Verdict::Pass, Verdict::Pass), Verdict::Pass);
}

TEST(Check, BeltramiPasses) {
  const Result r = run_cli({"check", "--catalog", "beltrami-sphere", "--A", "1,2,3"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST(Check, ControlFails) {
  const Result r = run_cli({"check", "--catalog", "control-nonequivalent", "--geodesics", "5", "--samples", "50"});
  EXPECT_EQ(r.code, 1) << r.out << r.err;
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
}

TEST(Check, LiouvilleFilePasses) {
  const Result r = run_cli({"check", "--file", pairs_file("liouville.json"), "--geodesics", "5", "--samples", "50"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
}

TEST(Check, ConfigErrors) {
  EXPECT_EQ(run_cli({"check", "--file", "missing.json"}).code, 64);
  EXPECT_EQ(run_cli({"check"}).code, 64);
  EXPECT_EQ(run_cli({"check", "--catalog", "torus"}).code, 64);
  EXPECT_EQ(run_cli({"check", "--catalog", "flat", "--file", pairs_file("control.json")}).code, 64);
  EXPECT_EQ(run_cli({"check", "--file", pairs_file("control.json"), "--c", "2"}).code, 64);
  EXPECT_EQ(run_cli({"check", "--catalog", "flat", "--tol", "0"}).code, 64);
  EXPECT_EQ(run_cli({"check", "--catalog", "flat", "--samples", "0"}).code, 64);
  EXPECT_EQ(run_cli({"check", "--catalog", "flat", "--bogus"}).code, 64);
  EXPECT_EQ(run_cli({"check", "--catalog", "flat", "--seed", "abc"}).code, 64);
  EXPECT_EQ(run_cli({}).code, 64);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 64);
  const Result r = run_cli({"check", "--file", "missing.json"});
  EXPECT_NE(r.err.find("missing.json"), std::string::npos);
}

TEST(Check, EmitCsvIsDeterministic) {
  const std::string a = temp_path("check_a.csv"), b = temp_path("check_b.csv");
  const std::vector<std::string> base{"check", "--catalog", "ellipsoid", "--geodesics", "4", "--samples", "40"};
  auto with = [&](const std::string& path) {
    auto args = base;
    args.insert(args.end(), {"--emit", path});
    return args;
  };
  ASSERT_EQ(run_cli(with(a)).code, 0);
  ASSERT_EQ(run_cli(with(b)).code, 0);
  const std::string first = slurp(a);
  EXPECT_EQ(first, slurp(b));
  EXPECT_EQ(first.substr(0, first.find('\n')), "record,i,j,value,detail");
  EXPECT_NE(first.find("\nverdict,"), std::string::npos);
  // a different seed gives different samples
  auto other = with(b);
  other.insert(other.end(), {"--seed", "7"});
  ASSERT_EQ(run_cli(other).code, 0);
  EXPECT_NE(first, slurp(b));
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST(Check, ThreadCountDoesNotChangeOutput) {
  const std::string a = temp_path("threads_a.csv"), b = temp_path("threads_b.csv");
  const std::vector<std::string> base{"check", "--catalog", "poisson", "--geodesics", "4", "--samples", "40", "--emit"};
  auto args = base;
  args.push_back(a);
  ::setenv("GEOEQUIV_THREADS", "1", 1);
  ASSERT_EQ(run_cli(args).code, 0);
  ::setenv("GEOEQUIV_THREADS", "4", 1);
  args.back() = b;
  ASSERT_EQ(run_cli(args).code, 0);
  ::unsetenv("GEOEQUIV_THREADS");
  EXPECT_EQ(slurp(a), slurp(b));
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST(Brackets, CsvRows) {
  const std::string path = temp_path("brackets.csv");
  const Result r = run_cli({"brackets", "--catalog", "beltrami-sphere", "--samples", "30", "--emit", path});
  EXPECT_EQ(r.code, 0) << r.err;
  std::istringstream in(slurp(path));
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header, "j,k,max_normalized_bracket,x1,x2,p1,p2");
  std::getline(in, row);
  EXPECT_EQ(row.substr(0, 4), "0,1,");
  std::filesystem::remove(path);
  EXPECT_EQ(run_cli({"brackets", "--catalog", "control-nonequivalent", "--samples", "30"}).code, 1);
}

TEST(Rank, Runs) {
  const Result r = run_cli({"rank", "--catalog", "beltrami-sphere", "--samples", "30"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("rank"), std::string::npos);
}

TEST(Sinjukov, PowerOnePasses) {
  const std::string path = temp_path("sinjukov.json");
  const Result r = run_cli({"sinjukov", "--catalog", "beltrami-sphere", "--A", "1,2,3", "--power", "1", "--geodesics",
                            "5", "--samples", "50", "--emit", path});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  const std::string text = slurp(path);
  EXPECT_NE(text.find("\"tabulated\": true"), std::string::npos);
  EXPECT_THROW(parse_pair_definition(text), ConfigError);
  std::filesystem::remove(path);
}

TEST(Sinjukov, PowerZeroRejected) {
  EXPECT_EQ(run_cli({"sinjukov", "--catalog", "beltrami-sphere", "--power", "0"}).code, 64);
}

TEST(Geodesics, CsvHeader) {
  const std::string path = temp_path("geodesic.csv");
  const Result r = run_cli({"geodesics", "--catalog", "ellipsoid", "--a", "1,2,3", "--t-end", "1", "--emit", path});
  EXPECT_EQ(r.code, 0) << r.err;
  std::istringstream in(slurp(path));
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t,x1,x2,p1,p2");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 1001);
  std::filesystem::remove(path);
}

TEST(Geodesics, StdoutWithoutEmit) {
  const Result r = run_cli({"geodesics", "--catalog", "flat", "--t-end", "0.01", "--step", "0.005"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, 13), "t,x1,x2,p1,p2");
}

TEST(Quantum, ExitCodes) {
  const Result flat = run_cli({"quantum", "--catalog", "flat"});
  EXPECT_EQ(flat.code, 0) << flat.out;
  EXPECT_NE(flat.out.find("vanish exactly"), std::string::npos);
  EXPECT_EQ(run_cli({"quantum", "--catalog", "beltrami-sphere", "--A", "1,2,3"}).code, 0);
  EXPECT_EQ(run_cli({"quantum", "--catalog", "control-nonequivalent"}).code, 1);
  EXPECT_EQ(run_cli({"quantum", "--catalog", "flat", "--grid", "4"}).code, 64);
  EXPECT_EQ(run_cli({"quantum", "--catalog", "ellipsoid", "--a", "1,2,3,4"}).code, 64);
}

TEST(Quantum, EmitCsv) {
  const std::string path = temp_path("quantum.csv");
  ASSERT_EQ(run_cli({"quantum", "--catalog", "flat", "--grid", "16", "--emit", path}).code, 0);
  std::istringstream in(slurp(path));
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header, "resolution,step,commutator,adjoint_defect");
  std::getline(in, row);
  EXPECT_EQ(row.substr(0, 3), "16,");
  std::filesystem::remove(path);
}

TEST(Scan, Components) {
  const Result r = run_cli({"scan", "--catalog", "beltrami-sphere", "--A", "1,2,3"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("components: 4"), std::string::npos) << r.out;
  const Result all = run_cli({"scan", "--catalog", "sphere-scaled", "--grid", "40"});
  EXPECT_NE(all.out.find("all"), std::string::npos) << all.out;
}

TEST(Catalog, Lists) {
  const Result r = run_cli({"catalog"});
  EXPECT_EQ(r.code, 0);
  int entries = 0;
  std::istringstream in(r.out);
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != ' ') ++entries;
  EXPECT_GE(entries, 4);
}

TEST(Help, ExitsCleanly) {
  const Result r = run_cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("check"), std::string::npos);
}
