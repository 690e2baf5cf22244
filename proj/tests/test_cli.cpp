// Drives the gyrorotor binary end to end through the shell.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "gyrorotor/io.hpp"

namespace fs = std::filesystem;
using namespace gyrorotor;

namespace {

const std::string kCli = GYROROTOR_CLI;
const std::string kConfigs = GYROROTOR_CONFIGS;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("gyrorotor_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = kCli + " " + args + " > " + (dir_ / "stdout.txt").string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string out() const { return "--out " + dir_.string(); }
  static std::string preset() { return "--config " + kConfigs + "/no2plus.ini"; }

  std::string read(const std::string& name) const {
    std::ifstream is(dir_ / name);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }

  std::map<std::string, std::string> key_values(const std::string& name) const {
    std::istringstream is(read(name));
    std::map<std::string, std::string> m;
    for (const auto& [k, v] : read_key_values(is)) m[k] = v;
    return m;
  }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  std::vector<double> densities(const std::string& name) const {
    std::istringstream is(read(name));
    std::string line;
    std::getline(is, line);
    std::vector<double> d;
    double th, ph, v;
    while (is >> th >> ph >> v) d.push_back(v);
    return d;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, PrepareWritesReportAndState) {
  ASSERT_EQ(run("prepare " + preset() + " " + out()), 0);
  auto kv = key_values("prepare_report.txt");
  EXPECT_NEAR(std::stod(kv["rabi_MHz"]), 1.0, 0.02);
  EXPECT_NEAR(std::stod(kv["duration_ns"]), 204.5, 0.1);
  EXPECT_GE(std::stod(kv["fidelity"]), 0.99);
  EXPECT_LE(std::stod(kv["leakage"]), 0.01);
  EXPECT_EQ(kv["mode"], "propagated");
  EXPECT_EQ(read("state.txt").substr(0, 9), "J M re im");
}

TEST_F(Cli, AnalyticPrepare) {
  ASSERT_EQ(run("prepare --analytic " + out()), 0);
  auto kv = key_values("prepare_report.txt");
  EXPECT_EQ(kv["mode"], "analytic");
  EXPECT_EQ(kv["fidelity"], "1");
}

TEST_F(Cli, ConfigErrorsExitTwo) {
  const auto no_brot = write("bad1.ini", "[molecule]\nname = mystery\ng_r = -0.1\n");
  EXPECT_EQ(run("prepare --config " + no_brot.string() + " " + out()), 2);
  EXPECT_NE(read("stderr.txt").find("molecule.B_rot_GHz"), std::string::npos);
  const auto zero_shots = write("bad2.ini", "[scan]\nshots = 0\n");
  EXPECT_EQ(run("prepare --config " + zero_shots.string() + " " + out()), 2);
  EXPECT_NE(read("stderr.txt").find("scan.shots"), std::string::npos);
  EXPECT_EQ(run("prepare --no-such-flag"), 2);
  EXPECT_EQ(run("extract --model bogus " + out()), 2);
}

TEST_F(Cli, MissingInputFileExitsOne) {
  EXPECT_EQ(run("scan --state " + (dir_ / "absent.txt").string() + " " + out()), 1);
}

TEST_F(Cli, ScanIsReproducible) {
  ASSERT_EQ(run("prepare " + preset() + " " + out()), 0);
  ASSERT_EQ(run("scan " + preset() + " " + out()), 0);
  const std::string first = read("scan.txt");
  ASSERT_EQ(run("scan " + preset() + " " + out()), 0);
  EXPECT_EQ(read("scan.txt"), first);
  std::istringstream is(first);
  const ScanSeries s = read_scan(is, 10000);
  EXPECT_EQ(s.points.size(), 64u);
  ASSERT_EQ(run("scan " + preset() + " --seed 5 " + out()), 0);
  EXPECT_NE(read("scan.txt"), first);
}

TEST_F(Cli, ExtractRecoversGFactor) {
  ASSERT_EQ(run("prepare " + preset() + " " + out()), 0);
  ASSERT_EQ(run("scan " + preset() + " " + out()), 0);
  ASSERT_EQ(run("extract " + preset() + " " + out()), 0);
  auto kv = key_values("estimate.txt");
  EXPECT_NEAR(std::stod(kv["g_r_abs"]), 0.0367, 0.0367 * 0.01);
  EXPECT_EQ(kv["model"], "jvec");
  EXPECT_EQ(kv["sense"], "right-handed");
  ASSERT_EQ(run("extract --model detector " + preset() + " " + out()), 0);
  kv = key_values("estimate.txt");
  EXPECT_NEAR(std::stod(kv["g_r_abs"]), 0.0367, 0.0367 * 0.01);
  EXPECT_EQ(kv["model"], "detector");
}

TEST_F(Cli, ExtractFailsOnFlatScan) {
  std::string table = "delay_s D1_prob D1_counts D2_prob D2_counts\n";
  for (int k = 0; k < 32; ++k)
    table += std::to_string(k * 1e-7) + " 0.08 800 0.03 300\n";
  const auto p = write("flat.txt", table);
  EXPECT_EQ(run("extract --scan " + p.string() + " " + out()), 4);
  EXPECT_NE(read("stderr.txt").find("estimation failed"), std::string::npos);
}

TEST_F(Cli, DensityOfGroundStateIsUniform) {
  const auto p = write("g.txt", "J M re im\n0 0 1 0\n");
  ASSERT_EQ(run("density --state " + p.string() + " " + out()), 0);
  const auto d = densities("density.txt");
  ASSERT_FALSE(d.empty());
  for (double v : d) EXPECT_NEAR(v, 0.0795775, 1e-7);
}

TEST_F(Cli, DensityRecursAfterPrecessionPeriod) {
  ASSERT_EQ(run("prepare --analytic " + out()), 0);
  ASSERT_EQ(run("density " + out()), 0);
  const auto d0 = densities("density.txt");
  // one precession period at 1 T for NO2+
  const double tp_us = 1.0 / (0.0367 * 7.6225932);
  ASSERT_EQ(run("density --evolve magnetic --time-us " + std::to_string(tp_us) + " " + out()), 0);
  const auto d1 = densities("density.txt");
  ASSERT_EQ(d0.size(), d1.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < d0.size(); ++i) worst = std::max(worst, std::abs(d0[i] - d1[i]));
  EXPECT_LT(worst, 1e-6);
}

TEST_F(Cli, CogwheelDensityPeaksAtEquator) {
  ASSERT_EQ(run("prepare --analytic " + out()), 0);
  ASSERT_EQ(run("density " + out()), 0);
  std::istringstream is(read("density.txt"));
  std::string header;
  std::getline(is, header);
  double th, ph, v, best = -1.0, best_th = 0.0;
  while (is >> th >> ph >> v)
    if (v > best) best = v, best_th = th;
  EXPECT_NEAR(best_th, M_PI / 2, M_PI / 64);
}

TEST_F(Cli, StrictTurnsWarningsIntoExitThree) {
  // unnormalized state: warning, then renormalized
  ASSERT_EQ(run("prepare --analytic " + out()), 0);
  const auto p = write("loose.txt", "J M re im\n0 0 0.8 0\n2 2 0.8 0\n");
  EXPECT_EQ(run("scan --state " + p.string() + " " + out()), 0);
  EXPECT_NE(read("stderr.txt").find("warning"), std::string::npos);
  EXPECT_EQ(run("scan --strict --state " + p.string() + " " + out()), 3);
}
