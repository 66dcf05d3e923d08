#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "pepcmp/config.hpp"
#include "pepcmp/emit.hpp"
#include "pepcmp/sweep.hpp"

namespace pepcmp {
namespace {

namespace fs = std::filesystem;

const char* kSmall = R"(
name = small
[problem]
structure = sum
alpha = 1
beta = 5
rho = 0.9
mu = 0
[sweep]
methods = GM, PRS, DRS
engines = pep, closed_form, quad_oracle
tau_grid = 0.5, 1, 2
)";

TEST(RescaleClassTest, Examples) {
  EXPECT_EQ(rescale_class(FunctionClass(0.0, 1.0), 5.0), FunctionClass(0.0, 5.0));
  EXPECT_EQ(rescale_class(FunctionClass(0.1, 1.0), 1.0), FunctionClass(0.1, 1.0));
  const FunctionClass c = rescale_class(rescale_class(FunctionClass(0.3, 2.0), 7.0), 1.0 / 7.0);
  EXPECT_NEAR(c.mu(), 0.3, 1e-15);
  EXPECT_NEAR(c.L(), 2.0, 1e-15);
  EXPECT_THROW(rescale_class(FunctionClass(0.0, 1.0), 0.0), InvalidArgument);
  EXPECT_THROW(rescale_class(FunctionClass(0.0, 1.0), -1.0), InvalidArgument);
}

TEST(ConfigTest, ParsesParameterNames) {
  const ExperimentConfig cfg = parse_config(kSmall);
  ASSERT_EQ(cfg.variants.size(), 1u);
  const auto& p = std::get<SumProblem>(cfg.variants[0].problem);
  EXPECT_EQ(p.f_class, FunctionClass(0.9, 1.0));
  EXPECT_EQ(p.g_class, FunctionClass(0.0, 0.2));
  EXPECT_EQ(cfg.name, "small");
  EXPECT_EQ(cfg.tau_grid, (std::vector<double>{0.5, 1.0, 2.0}));
  EXPECT_EQ(cfg.engines.size(), 3u);
}

TEST(ConfigTest, LambdaRescalesG) {
  const ExperimentConfig cfg = parse_config(
      "[problem]\nalpha = 0.1\nbeta = 1\nrho = 0.1\nmu = 0\nlambda = 5\n[sweep]\nmethods = PRS\n");
  EXPECT_EQ(std::get<SumProblem>(cfg.variants[0].problem).g_class, FunctionClass(0.0, 5.0));
}

TEST(ConfigTest, DefaultGridIsLogarithmicFifty) {
  const ExperimentConfig cfg = parse_config("[problem]\nalpha = 1\nbeta = 5\nrho = 0.1\n[sweep]\nmethods = DRS\n");
  ASSERT_EQ(cfg.tau_grid.size(), 50u);
  EXPECT_DOUBLE_EQ(cfg.tau_grid.front(), 0.01);
  EXPECT_NEAR(cfg.tau_grid.back(), 100.0, 1e-12);
  EXPECT_NEAR(cfg.tau_grid[1] / cfg.tau_grid[0], cfg.tau_grid[49] / cfg.tau_grid[48], 1e-12);
}

TEST(ConfigTest, ListValuesExpandIntoVariants) {
  const ExperimentConfig cfg = parse_config(
      "[problem]\nstructure = primal-dual\nalpha = 1\ngamma = 5\nrho = 0.1\ndelta = 0, 0.1\nLop = 1\n"
      "[sweep]\nmethods = CPM\n");
  ASSERT_EQ(cfg.variants.size(), 2u);
  EXPECT_EQ(cfg.variants[0].label, "[delta=0]");
  EXPECT_EQ(cfg.variants[1].label, "[delta=0.1]");
  const auto& cp = std::get<CompositeProblem>(cfg.variants[1].problem);
  EXPECT_EQ(cp.h_class, FunctionClass(0.1, 0.2));
}

TEST(ConfigTest, SigmaRules) {
  const CompositeProblem cp{FunctionClass(0.1, 1.0), FunctionClass(0.0, 0.2), OperatorBound(2.0)};
  SigmaRule autorule;
  EXPECT_DOUBLE_EQ(*autorule.sigma(MethodKind::CPM, 0.5, cp), 1.0 / (0.5 * 4.0));
  EXPECT_DOUBLE_EQ(*autorule.sigma(MethodKind::CVM, 0.5, cp), (2.0 - 0.5) / 4.0);
  EXPECT_FALSE(autorule.sigma(MethodKind::DRS, 0.5, cp));
  SigmaRule fixed{SigmaRule::Kind::Constant, 0.3};
  EXPECT_DOUBLE_EQ(*fixed.sigma(MethodKind::CPM, 0.5, cp), 0.3);
}

TEST(ConfigTest, RejectsMalformedInput) {
  const char* bad[] = {
      "[sweep]\nmethods = GM\n[problem]\nalpha = 1\nbeta = 5\nrho = 0.9\nalpha = 2\n",     // duplicate
      "[problem]\nalpha = 1\nbeta = 5\nrho = 0.9\nepsilon = 1\n[sweep]\nmethods = GM\n",    // unknown key
      "[problem]\nalpha = 1\nbeta = 5\nrho = 0.9\n[sweeps]\nmethods = GM\n",                // unknown section
      "[problem]\nalpha = 1\nbeta = 5\nrho = 0.9\n[sweep]\nmethods = XYZ\n",                // unknown method
      "[problem]\nalpha = 1\nbeta = 5\nrho = 0.9\n[sweep]\nmethods = GM\ntau_grid = 2, 1\n", // not increasing
      "[problem]\nalpha = 1\nbeta = 5\nrho = 2\n[sweep]\nmethods = GM\n",                   // rho >= 1/alpha
      "[problem]\nalpha = 1\nbeta = 5\nrho = 0.9\n[sweep]\nmethods = CPM\n",                // CPM on a sum
      "[problem]\nalpha = 1\nbeta = 5\nrho = 0.9\n[sweep]\n",                               // no methods
      "[problem]\nalpha = 1\nbeta = 5\nrho = 0.9\nlambda = 0\n[sweep]\nmethods = GM\n",     // lambda <= 0
      "[problem]\nalpha = 1\nbeta = 5\nrho = 0.9\n[sweep]\nmethods = GM\nengines = pep, pep\n",
      "[problem]\nalpha = 1\nbeta = 5\nrho = 0.9\nno equals sign\n",
  };
  for (const char* text : bad) EXPECT_THROW(parse_config(text), ConfigError) << text;
}

TEST(ConfigTest, FingerprintSeparatesProblems) {
  const Problem a = SumProblem{FunctionClass(0.9, 1.0), FunctionClass(0.0, 0.2)};
  const Problem b = SumProblem{FunctionClass(0.9, 1.0), FunctionClass(0.0, 0.25)};
  EXPECT_EQ(fingerprint(a), fingerprint(a));
  EXPECT_NE(fingerprint(a), fingerprint(b));
}

TEST(ConfigTest, PresetsValidate) {
  for (const auto& entry : fs::directory_iterator(PEPCMP_PRESET_DIR)) {
    EXPECT_NO_THROW(load_config(entry.path().string())) << entry.path();
  }
}

TEST(SweepTest, CurvesAndEngineOrdering) {
  const auto curves = sweep(parse_config(kSmall));
  // GM and PRS: pep, closed_form, quad_oracle; DRS: pep, upper, corner, quad_oracle
  ASSERT_EQ(curves.size(), 10u);
  for (size_t i = 1; i < curves.size(); ++i) {
    const auto& a = curves[i - 1];
    const auto& b = curves[i];
    EXPECT_TRUE(a.method < b.method || (a.method == b.method && a.engine < b.engine));
  }
  for (const auto& c : curves) {
    ASSERT_EQ(c.samples.size(), 3u);
    for (size_t i = 1; i < c.samples.size(); ++i) EXPECT_LT(c.samples[i - 1].tau, c.samples[i].tau);
  }
}

TEST(SweepTest, InadmissibleStepsAreKeptWithEmptyRate) {
  const auto curves = sweep(parse_config(kSmall));
  for (const auto& c : curves) {
    if (c.method != "GM") continue;
    EXPECT_TRUE(c.samples[0].rate.has_value());
    EXPECT_FALSE(c.samples[2].rate.has_value()) << c.engine;  // tau = 2 > 2/1.2
    EXPECT_FALSE(c.samples[2].failed);
  }
}

TEST(SweepTest, PepWithinBoundsOfOtherEngines) {
  const auto curves = sweep(parse_config(kSmall));
  std::map<std::string, const RateCurve*> by;
  for (const auto& c : curves) by[c.method + "/" + c.engine] = &c;
  const RateCurve& pep = *by.at("DRS/pep");
  for (size_t i = 0; i < pep.samples.size(); ++i) {
    const double r = *pep.samples[i].rate;
    // DRS is the average of identity and PRS, so (1 + r_PRS)/2 bounds it; the
    // other branch of closed_form_upper is undercut by quadratics (see closed_form_test).
    EXPECT_LE(r, 0.5 * (1.0 + *by.at("PRS/closed_form")->samples[i].rate) + 1e-4);
    EXPECT_GE(r, *by.at("DRS/closed_form_corner")->samples[i].rate - 1e-4);
    EXPECT_GE(r, *by.at("DRS/quad_oracle")->samples[i].rate - 1e-4);
  }
}

TEST(SweepTest, IndependentOfWorkerCount) {
  const ExperimentConfig cfg = parse_config(kSmall);
  SweepOptions one, four;
  four.workers = 4;
  EXPECT_EQ(to_csv(sweep(cfg, one)), to_csv(sweep(cfg, four)));
}

TEST(SweepTest, DumpsSdpaFiles) {
  const fs::path dir = fs::temp_directory_path() / "pepcmp_sdpa_dump_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  SweepOptions opt;
  opt.sdpa_dir = dir.string();
  sweep(parse_config(kSmall), opt);
  int n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ".dat-s";
  EXPECT_EQ(n, 8);  // GM at two admissible steps, PRS and DRS at three
  fs::remove_all(dir);
}

TEST(CsvTest, ExactFormat) {
  RateCurve c;
  c.method = "CPM";
  c.engine = "pep";
  c.samples.push_back({0.1, 10.0, 0.123456789012345, false, ""});
  c.samples.push_back({0.05, 20.0, std::nullopt, false, ""});
  RateCurve d;
  d.method = "CPM";
  d.engine = "closed_form";
  d.samples.push_back({1.0 / 3.0, std::nullopt, 1e-20, false, ""});
  EXPECT_EQ(to_csv({c, d}),
            "method,engine,tau,sigma,rate\n"
            "CPM,closed_form,0.333333333333,,1e-20\n"
            "CPM,pep,0.05,20,\n"
            "CPM,pep,0.1,10,0.123456789012\n");
}

TEST(CsvTest, DeterministicAcrossRuns) {
  const ExperimentConfig cfg = parse_config(kSmall);
  const std::string a = to_csv(sweep(cfg)), b = to_csv(sweep(cfg));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.find('\r'), std::string::npos);
  EXPECT_EQ(a.rfind("method,engine,tau,sigma,rate\n", 0), 0u);
}

TEST(SvgTest, OneSeriesPerCurve) {
  const auto curves = sweep(parse_config(kSmall));
  std::ostringstream os;
  write_svg(curves, os, true, "small");
  const std::string svg = os.str();
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  size_t paths = 0;
  for (size_t p = svg.find("<path"); p != std::string::npos; p = svg.find("<path", p + 1)) ++paths;
  EXPECT_EQ(paths, curves.size());
  EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);
}

TEST(FindBestTest, GradientMethodBalancedStep) {
  ExperimentConfig cfg = parse_config(std::string(kSmall) + "[best]\ntau_min = 0.1\ntau_max = 1.6\nmethods = GM\n");
  const BestResult r = find_best(cfg, cfg.variants[0], *cfg.best);
  EXPECT_EQ(r.best.method, MethodKind::GM);
  EXPECT_NEAR(r.best.tau, 2.0 / 2.1, 1e-3);
  EXPECT_NEAR(r.best.rate, 1.0 - 0.9 * 2.0 / 2.1, 1e-4);
}

TEST(FindBestTest, EmptyIntervalIsAnError) {
  ExperimentConfig cfg = parse_config(kSmall);
  BestSearch s;
  s.tau_min = 2.0;
  s.tau_max = 1.0;
  s.methods = {MethodKind::GM};
  EXPECT_THROW(find_best(cfg, cfg.variants[0], s), ConfigError);
  s.tau_min = 1.7;
  s.tau_max = 3.0;
  EXPECT_THROW(find_best(cfg, cfg.variants[0], s), ConfigError);
}

// CLI

int run(const std::string& args) {
  const std::string cmd = std::string(PEPCMP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pepcmp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST_F(CliTest, ValidateExitCodes) {
  EXPECT_EQ(run("validate --config " + write("ok.cfg", kSmall)), 0);
  EXPECT_EQ(run("validate --config " + write("bad.cfg", "[problem]\nalpha = x\n")), 1);
  EXPECT_EQ(run("validate --config " + (dir_ / "missing.cfg").string()), 1);
  EXPECT_EQ(run("frobnicate"), 1);
}

TEST_F(CliTest, SweepWritesCsvAndSvg) {
  const std::string cfg = write("small.cfg", kSmall);
  const fs::path out = dir_ / "out";
  ASSERT_EQ(run("sweep --config " + cfg + " --out " + out.string() + " --workers 2 --format csv,svg"), 0);
  EXPECT_EQ(slurp(out / "small.csv"), to_csv(sweep(parse_config(kSmall))));
  EXPECT_TRUE(fs::exists(out / "small.svg"));
  EXPECT_EQ(run("sweep --config " + cfg + " --out " + out.string() + " --format pdf"), 1);
}

TEST_F(CliTest, StrictTurnsSolverFailureIntoExitTwo) {
  // far outside every preset grid; the interior point method stalls here
  const std::string text =
      "[problem]\nalpha = 1\nbeta = 5\nrho = 0.9\nmu = 0\n[sweep]\nmethods = PRS\ntau_grid = 476\n";
  const std::string cfg = write("hard.cfg", text);
  if (!any_failure(sweep(parse_config(text)))) GTEST_SKIP() << "solver succeeded at this step";
  EXPECT_EQ(run("sweep --config " + cfg + " --out " + (dir_ / "o").string() + " --strict"), 2);
  EXPECT_EQ(run("sweep --config " + cfg + " --out " + (dir_ / "o").string()), 0);
}

TEST_F(CliTest, BestNeedsSection) {
  EXPECT_EQ(run("best --config " + write("nobest.cfg", kSmall)), 1);
  EXPECT_EQ(run("best --config " + write("best.cfg", std::string(kSmall) +
                                                         "[best]\ntau_min = 0.1\ntau_max = 1.6\nmethods = GM\n")),
            0);
}

}  // namespace
}  // namespace pepcmp
