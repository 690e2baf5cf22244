#include <sstream>

#include <gtest/gtest.h>

#include "gyrorotor/pipeline.hpp"

using namespace gyrorotor;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string config_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(StateFile, RoundTripIsByteIdentical) {
  const RotorState s = cogwheel_state({1, 2, 0.7, 0.6}, RotorBasis(4));
  std::ostringstream a;
  write_state(a, s);
  std::istringstream in(a.str());
  const RotorState back = read_state(in);
  std::ostringstream b;
  write_state(b, back);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(back.basis().j_max(), 4);
  EXPECT_LT((back.amplitudes() - s.amplitudes()).norm(), 1e-8);
}

TEST(StateFile, SparseRowsAndErrors) {
  std::istringstream in("# cogwheel\nJ M re im\n0 0 0.70710678 0\n2 2 0.70710678 0\n");
  const RotorState s = read_state(in, 5);
  EXPECT_EQ(s.basis().j_max(), 5);
  EXPECT_NEAR(s.population(2, 2), 0.5, 1e-8);
  std::istringstream bad_header("J M amp\n0 0 1\n");
  EXPECT_THROW(read_state(bad_header), InvalidArgument);
  std::istringstream bad_number("J M re im\n0 0 one 0\n");
  EXPECT_THROW(read_state(bad_number), InvalidArgument);
  std::istringstream bad_m("J M re im\n1 3 1 0\n");
  EXPECT_THROW(read_state(bad_m), InvalidArgument);
  std::istringstream empty("");
  EXPECT_THROW(read_state(empty), InvalidArgument);
}

TEST(ScanTable, RoundTrip) {
  ScanConfig c;
  c.delays = uniform_delays(4e-6, 12);
  const ScanSeries s = pump_probe_scan(cogwheel_state({0, 2}, RotorBasis(4)),
                                       MoleculeParams::no2_plus(), MagneticField{1.0}, c,
                                       default_detectors());
  std::ostringstream a;
  write_scan(a, s);
  std::istringstream in(a.str());
  const ScanSeries back = read_scan(in, c.shots_per_delay);
  ASSERT_EQ(back.points.size(), 12u);
  EXPECT_EQ(back.detector_labels, (std::vector<std::string>{"D1", "D2"}));
  for (std::size_t k = 0; k < 12; ++k) {
    EXPECT_EQ(back.points[k].counts, s.points[k].counts);
    EXPECT_NEAR(back.points[k].delay, s.points[k].delay, 1e-14);
    EXPECT_LT((back.points[k].j - s.points[k].j).norm(), 1e-8);
  }
  std::ostringstream b;
  write_scan(b, back);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_TRUE(scan_has_jvec(back));
  EXPECT_EQ(default_model(back), PrecessionModel::jvec);
}

TEST(ScanTable, CountsOnlyTable) {
  std::istringstream in("delay_s D1_prob D1_counts\n0 0.1 1000\n1e-7 0.2 2000\n");
  const ScanSeries s = read_scan(in, 10000);
  ASSERT_EQ(s.points.size(), 2u);
  EXPECT_EQ(s.points[1].counts[0], 2000);
  EXPECT_FALSE(scan_has_jvec(s));
  EXPECT_EQ(default_model(s), PrecessionModel::detector);
  std::istringstream ragged("delay_s D1_prob D1_counts\n0 0.1\n");
  EXPECT_THROW(read_scan(ragged, 10), InvalidArgument);
  std::istringstream unpaired("delay_s D1_prob D2_counts\n0 0.1 3\n");
  EXPECT_THROW(read_scan(unpaired, 10), InvalidArgument);
}

TEST(KeyValueDocument, RoundTrip) {
  const GFactorEstimate g = estimate_g_factor(0.2798e6, 400.0, MagneticField{1.0}, "right-handed");
  std::ostringstream os;
  write_key_values(os, estimate_document(g, PrecessionModel::detector));
  std::istringstream in(os.str());
  const KeyValues kv = read_key_values(in);
  ASSERT_EQ(kv.size(), 7u);
  EXPECT_EQ(kv[0].first, "omega_p_MHz");
  EXPECT_NEAR(std::stod(kv[0].second), 0.2798, 1e-9);
  EXPECT_EQ(kv[4], (std::pair<std::string, std::string>{"sense", "right-handed"}));
  EXPECT_EQ(kv[6].second, "detector");
  std::istringstream bad("no equals sign\n");
  EXPECT_THROW(read_key_values(bad), InvalidArgument);
}

TEST(Config, MissingMoleculeSectionMeansPreset) {
  EXPECT_EQ(parse("").molecule.name, MoleculeParams::no2_plus().name);
}

TEST(Config, DefaultsAndPreset) {
  const RunConfig c = parse("[molecule]\nname = NO2+\n");
  EXPECT_DOUBLE_EQ(c.molecule.b_rot_hz, MoleculeParams::no2_plus().b_rot_hz);
  EXPECT_DOUBLE_EQ(c.laser.intensity_w_cm2, 4.9e6);
  EXPECT_EQ(c.scan.n_delays, 64);
  EXPECT_EQ(c.scan.shots, 10000);
  EXPECT_EQ(c.scan.fast_phase, FastPhase::randomized);
  EXPECT_EQ(c.scan_config().delays.size(), 64u);
  EXPECT_NEAR(c.detectors()[0].half_angle, 20 * pi / 180, 1e-15);
}

TEST(Config, PresetValuesCanBeOverridden) {
  const RunConfig c = parse(
      "[molecule]\nname = NO2+\ng_r = -0.01\n[field]\nB_tesla = 0.5\naxis = 1,0,1\n"
      "[scan]\ntau_us = 300\nshot_model = per_shot\nseed = 18446744073709551615\n");
  EXPECT_DOUBLE_EQ(c.molecule.g_r, -0.01);
  EXPECT_NEAR(c.field.axis.x(), std::sqrt(0.5), 1e-15);
  EXPECT_EQ(c.scan.seed, 18446744073709551615ULL);
  EXPECT_NEAR(*c.scan_config().decoherence_tau, 300e-6, 1e-18);
  EXPECT_EQ(c.scan.shot_model, ShotModel::per_shot);
}

TEST(Config, CustomMolecule) {
  const RunConfig c =
      parse("[molecule]\nname = X\nB_rot_GHz = 10\ndelta_alpha_A3 = 3\ng_r = -0.05\n");
  EXPECT_EQ(c.molecule.name, "X");
  EXPECT_DOUBLE_EQ(c.molecule.b_rot_hz, 10e9);
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_NE(config_error("[scan]\nshotz = 3\n").find("scan.shotz"), std::string::npos);
  EXPECT_NE(config_error("[molecule]\nname = X\n").find("molecule.B_rot_GHz"), std::string::npos);
  EXPECT_NE(config_error("[molecule]\nB_rot_GHz = 10\n").find("molecule.delta_alpha_A3"),
            std::string::npos);
  EXPECT_NE(config_error("[scan]\nshots = 0\n").find("scan.shots"), std::string::npos);
  EXPECT_NE(config_error("[scan]\nshots = many\n").find("scan.shots"), std::string::npos);
  EXPECT_NE(config_error("[field]\nB_tesla = -1\n").find("field.B_tesla"), std::string::npos);
  EXPECT_NE(config_error("[laser]\nenvelope = gauss\n").find("laser.envelope"), std::string::npos);
  EXPECT_NE(config_error("[state]\ninitial_J = 3\nj_max = 4\n").find("state.j_max"),
            std::string::npos);
  EXPECT_NE(config_error("[detector]\nx = 1\n").find("detector"), std::string::npos);
  EXPECT_NE(config_error("[scan\n").find("config syntax"), std::string::npos);
}

TEST(Config, SampleFilesParse) {
  const RunConfig a = load_config(std::string(GYROROTOR_SOURCE_DIR) + "/configs/no2plus.ini");
  EXPECT_EQ(a.molecule.name, "NO2+");
  EXPECT_EQ(a.scan.seed, 20240611u);
  const RunConfig b =
      load_config(std::string(GYROROTOR_SOURCE_DIR) + "/configs/custom_molecule.ini");
  EXPECT_EQ(b.laser.envelope.shape, Envelope::Shape::sin2_ramp);
  EXPECT_TRUE(b.scan.tau_us.has_value());
  EXPECT_THROW(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST(Pipeline, PulseFromConfig) {
  RunConfig c;
  const PulseParams p = pulse_from_config(c);
  EXPECT_NEAR(p.duration_s * 1e9, 204.5, 0.1);
  c.laser.detuning_mhz = 0.5;
  c.laser.duration_ns = 300;
  const PulseParams q = pulse_from_config(c);
  EXPECT_NEAR(q.omega0_hz - p.omega0_hz, 0.5e6, 1e-3);
  EXPECT_DOUBLE_EQ(q.duration_s, 300e-9);
}

TEST(Pipeline, RampedPulseStillPreparesCogwheel) {
  RunConfig c;
  c.laser.envelope = {Envelope::Shape::sin2_ramp, 0.1};
  const PreparedRun r = prepare_from_config(c, false);
  EXPECT_GE(r.result.fidelity, 0.99);
  EXPECT_LE(r.result.leakage, 0.01);
}

TEST(Pipeline, AnalyticPreparation) {
  RunConfig c;
  c.laser.phi_rad = 0.4;
  const PreparedRun r = prepare_from_config(c, true);
  EXPECT_DOUBLE_EQ(r.result.fidelity, 1.0);
  EXPECT_NEAR(r.result.excited_population, 0.5, 1e-15);
  const KeyValues kv = preparation_report(r);
  EXPECT_EQ(kv.front().second, "analytic");
}
