#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"
#include "pat/config.hpp"
#include "pat/pat.hpp"
#include "pat/field_io.hpp"
#include "pat/metrics.hpp"
#include "pat/wave_operator.hpp"

using namespace pat;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path root = fs::temp_directory_path() / "pat_cli_tests";

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

CliRun run(const std::string& args) {
  fs::create_directories(root);
  const fs::path out = root / "stdout.txt", err = root / "stderr.txt";
  const std::string cmd = std::string("\"") + PAT_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

// 32 x 32 image on [-2, 2] x (0, 4), T = 4.
ExperimentConfig small_config(const std::string& name) {
  ExperimentConfig c;
  c.nx = c.ny = 32;
  c.nt = 128;
  c.dx = 1.0 / 8;
  c.dt = 1.0 / 32;
  c.disks = {{0.0, 1.0, 0.5, 1.0}};
  c.wavelet_levels = 3;
  c.trials = 2;
  c.seeds = {1};
  c.deltas = {0.5, 0.25};
  c.output_dir = (root / name).string();
  return c;
}

fs::path write_config(const ExperimentConfig& c, const std::string& name) {
  fs::create_directories(root);
  const fs::path p = root / (name + ".toml");
  std::ofstream(p) << serialize_config(c);
  return p;
}

}  // namespace

TEST(CliSimulate, WritesFieldsMatchingTheGrid) {
  const ExperimentConfig c = small_config("sim");
  const CliRun r = run("simulate -c " + write_config(c, "sim").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const fs::path dir = c.output_dir;
  for (const char* f : {"phantom.pgf1", "data_clean.pgf1", "data_noisy.pgf1"}) {
    const PgfHeader h = read_pgf_header(dir / f);
    EXPECT_EQ(h.nx, 32u);
    EXPECT_EQ(h.ny, 32u);
    EXPECT_EQ(h.nt, 128u);
    EXPECT_EQ(h.dx, c.dx);
    EXPECT_EQ(h.dt, c.dt);
  }
  EXPECT_EQ(read_pgf_header(dir / "phantom.pgf1").kind, PgfKind::Image);
  EXPECT_EQ(read_pgf_header(dir / "data_noisy.pgf1").kind, PgfKind::Data);
  const json manifest = json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["version"], pat::version);
  EXPECT_TRUE(parse_config(manifest["config_text"].get<std::string>()) == c);
}

TEST(CliSimulate, SameSeedGivesIdenticalBytes) {
  ExperimentConfig c = small_config("det_a");
  ASSERT_EQ(run("simulate -c " + write_config(c, "det_a").string()).code, 0);
  c.output_dir = (root / "det_b").string();
  ASSERT_EQ(run("simulate -c " + write_config(c, "det_b").string()).code, 0);
  EXPECT_EQ(slurp(root / "det_a" / "data_noisy.pgf1"), slurp(root / "det_b" / "data_noisy.pgf1"));
  c.seed = 2;
  c.output_dir = (root / "det_c").string();
  ASSERT_EQ(run("simulate -c " + write_config(c, "det_c").string()).code, 0);
  EXPECT_NE(slurp(root / "det_a" / "data_noisy.pgf1"), slurp(root / "det_c" / "data_noisy.pgf1"));
}

TEST(CliSimulate, ConfigErrorsExitTwo) {
  fs::create_directories(root);
  std::ofstream(root / "touch.toml") << "[phantom]\ndisks = [[0.0, 1.0, 0.2, 1.0], [0.5, 0.1, 0.1, 1.0]]\n";
  const CliRun touch = run("simulate -c " + (root / "touch.toml").string());
  EXPECT_EQ(touch.code, 2);
  EXPECT_NE(touch.err.find("disk 1"), std::string::npos) << touch.err;

  std::ofstream(root / "unknown.toml") << "[noise]\nsigmaa = 0.1\n";
  const CliRun unknown = run("simulate -c " + (root / "unknown.toml").string());
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.err.find("sigmaa"), std::string::npos);

  EXPECT_EQ(run("simulate -c " + (root / "does_not_exist.toml").string()).code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
}

TEST(CliReconstruct, BaselineMatchesLibraryAndZeroThresholdMatchesBaseline) {
  ExperimentConfig c = small_config("rec");
  const fs::path conf = write_config(c, "rec");
  ASSERT_EQ(run("simulate -c " + conf.string()).code, 0);
  const fs::path dir = c.output_dir;
  const CliRun base = run("reconstruct -c " + conf.string() + " -i " + (dir / "data_clean.pgf1").string() +
                       " -m baseline -t " + (dir / "phantom.pgf1").string());
  ASSERT_EQ(base.code, 0) << base.err;
  const ImageField baseline = read_image(dir / "recon.pgf1");
  const json metrics = json::parse(slurp(dir / "metrics.json"));
  const ImageField truth = read_image(dir / "phantom.pgf1");
  const ForwardOperator op(c.grid());
  EXPECT_DOUBLE_EQ(metrics["relative_error"].get<double>(),
                   relative_l2(op.adjoint(read_data(dir / "data_clean.pgf1")), truth));
  EXPECT_EQ(slurp(dir / "recon.pgm").substr(0, 3), "P5\n");

  c.threshold = 0.0;
  const fs::path zero = write_config(c, "rec_zero");
  ASSERT_EQ(run("reconstruct -c " + zero.string() + " -i " + (dir / "data_clean.pgf1").string() + " -m wvd").code, 0);
  const ImageField wvd = read_image(dir / "recon.pgf1");
  EXPECT_LE(norm(wvd - baseline), 1e-10 * norm(baseline));
}

TEST(CliReconstruct, NonConvergenceExitsFourWithPartialOutput) {
  ExperimentConfig c = small_config("nc");
  c.admm.max_iters = 1;
  const fs::path conf = write_config(c, "nc");
  ASSERT_EQ(run("simulate -c " + conf.string()).code, 0);
  const fs::path dir = c.output_dir;
  fs::remove(dir / "recon.pgf1");
  const CliRun r = run("reconstruct -c " + conf.string() + " -i " + (dir / "data_noisy.pgf1").string() + " -m hybrid");
  EXPECT_EQ(r.code, 4);
  EXPECT_TRUE(fs::exists(dir / "recon.pgf1"));
  EXPECT_FALSE(json::parse(slurp(dir / "metrics.json"))["converged"].get<bool>());
}

TEST(CliReconstruct, IoAndGridErrors) {
  const ExperimentConfig c = small_config("io");
  const fs::path conf = write_config(c, "io");
  EXPECT_EQ(run("reconstruct -c " + conf.string() + " -i " + (root / "missing.pgf1").string() + " -m wvd").code, 3);
  std::ofstream(root / "garbage.pgf1") << "not a field";
  EXPECT_EQ(run("reconstruct -c " + conf.string() + " -i " + (root / "garbage.pgf1").string() + " -m wvd").code, 3);
  ExperimentConfig other = small_config("io_other");
  other.nt = 64;
  ASSERT_EQ(run("simulate -c " + write_config(other, "io_other").string()).code, 0);
  EXPECT_EQ(run("reconstruct -c " + conf.string() + " -i " + (root / "io_other" / "data_noisy.pgf1").string() +
                " -m wvd").code,
            2);
  EXPECT_EQ(run("reconstruct -c " + conf.string() + " -i " + (root / "io_other" / "data_noisy.pgf1").string() +
                " -m magic").code,
            2);
}

TEST(CliDiagnose, InvariantsPassAndImagesAreWritten) {
  const fs::path dir = root / "diag";
  const CliRun r = run("diagnose -o " + dir.string());
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  int pass = 0;
  for (std::size_t at = r.out.find("PASS"); at != std::string::npos; at = r.out.find("PASS", at + 1)) ++pass;
  EXPECT_EQ(pass, 6);
  int vaguelettes = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename().string().rfind("vaguelette_", 0) == 0 && e.path().extension() == ".pgf1") ++vaguelettes;
  EXPECT_GE(vaguelettes, 6);

  std::istringstream csv(slurp(dir / "gram.csv"));
  std::string line;
  std::getline(csv, line);
  int diagonal = 0;
  while (std::getline(csv, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    ASSERT_EQ(f.size(), 9u);
    if (std::equal(f.begin(), f.begin() + 4, f.begin() + 4)) {
      ++diagonal;
      const double v = std::stod(f[8]);
      EXPECT_GE(v, 0.95);
      EXPECT_LE(v, 1.05);
    }
  }
  EXPECT_GE(diagonal, 6);
}

TEST(CliEvaluate, WritesRiskOrderingAndSlope) {
  const ExperimentConfig c = small_config("eval");
  const CliRun r = run("evaluate -c " + write_config(c, "eval").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const json report = json::parse(slurp(fs::path(c.output_dir) / "evaluate.json"));
  EXPECT_EQ(report["risk"].size(), 2u);
  EXPECT_EQ(report["ordering"]["rows"].size(), 1u);
  EXPECT_FALSE(report["rate_diagnostic"]["gating"].get<bool>());
  EXPECT_TRUE(report["rate_diagnostic"]["log_log_slope"].is_number());
  const std::string csv = slurp(fs::path(c.output_dir) / "risk.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "estimator,sigma,trial,squared_error");
}
