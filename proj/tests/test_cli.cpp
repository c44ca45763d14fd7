#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "gim/gim.hpp"
#include "gim/io.hpp"

namespace fs = std::filesystem;
using gim::Matrix;
namespace io = gim::io;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string c; std::getline(in, c, ',');) out.push_back(c);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("gimts_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  Outcome run(const std::string& args) const {
    const auto o = path("stdout.txt"), e = path("stderr.txt");
    const std::string cmd = std::string("\"") + GIMTS_PATH + "\" " + args + " > \"" + o.string() +
                            "\" 2> \"" + e.string() + "\"";
    const int status = std::system(cmd.c_str());
    Outcome r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
  }

  std::string write_series(const std::string& name, const gim::TimeSeries& x) const {
    std::ostringstream ss;
    io::write_series_csv(ss, x);
    io::write_text_file(path(name).string(), ss.str());
    return "\"" + path(name).string() + "\"";
  }

  std::string q(const std::string& name) const { return "\"" + path(name).string() + "\""; }

  fs::path dir_;
};

gim::VarParams chain_var() {
  gim::VarParams v;
  v.d = 3;
  v.p = 1;
  Matrix a(3, 3);
  a << 0.4, 0.3, 0.0, 0.0, 0.4, 0.0, 0.0, 0.3, 0.4;
  v.a = {a};
  v.sigma = Matrix::Identity(3, 3);
  return v;
}

gim::TimeSeries white_noise(int T, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix x(T, d);
  for (int t = 0; t < T; ++t)
    for (int a = 0; a < d; ++a) x(t, a) = n(rng);
  return gim::TimeSeries(x);
}

}  // namespace

TEST_F(Cli, FitWritesJsonAndSpectra) {
  const auto csv = write_series("x.csv", gim::simulate_var(chain_var(), 500, -1, 1));
  const auto r = run("fit " + csv + " --p 1 --out " + q("fit.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = io::read_json_file(path("fit.json").string());
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_EQ(j["spec"]["graph"]["edges"].size(), 3u);
  EXPECT_TRUE(j.contains("asymptotic_covariance"));
  EXPECT_TRUE(fs::exists(path("fit_spectrum.csv")));
  EXPECT_TRUE(fs::exists(path("fit_pcoh.csv")));
  EXPECT_EQ(lines(slurp(path("fit_pcoh.csv"))).front(), "freq_index,lambda,a,b,re,im,abs");
}

TEST_F(Cli, FitWithEdgesAndGraphJson) {
  const auto csv = write_series("x.csv", gim::simulate_var(chain_var(), 800, -1, 2));
  const auto r1 = run("fit " + csv + " --edges 0-1,1-2 --out " + q("a.json"));
  ASSERT_EQ(r1.code, 0) << r1.err;
  io::write_text_file(path("g.json").string(), R"({"d":3,"edges":[[0,1],[1,2]]})");
  const auto r2 = run("fit " + csv + " --graph-json " + q("g.json") + " --out " + q("b.json"));
  ASSERT_EQ(r2.code, 0) << r2.err;
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  EXPECT_EQ(run("fit " + csv + " --edges 0-7").code, 2);
}

TEST_F(Cli, FitNonNumericCellIsInputError) {
  io::write_text_file(path("bad.csv").string(), "a,b,c\n1,2,3\n4,oops,6\n7,8,9\n");
  const auto r = run("fit " + q("bad.csv") + " --out " + q("f.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("row 3, column 2"), std::string::npos) << r.err;
}

TEST_F(Cli, FitConstantColumnIsNumericalError) {
  auto x = gim::simulate_var(chain_var(), 300, -1, 3);
  x.data.col(2).setConstant(1.5);
  const auto csv = write_series("c.csv", x);
  const auto r = run("fit " + csv + " --out " + q("f.json"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("singular"), std::string::npos) << r.err;
}

TEST_F(Cli, FitNonConvergenceExitsFour) {
  const auto csv = write_series("x.csv", gim::simulate_var(chain_var(), 500, -1, 4));
  const auto r = run("fit " + csv + " --edges 0-1 --max-cycles 1 --tol 1e-15 --out " + q("f.json"));
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("not converged"), std::string::npos) << r.err;
  EXPECT_FALSE(io::read_json_file(path("f.json").string())["converged"].get<bool>());
}

TEST_F(Cli, SelectTwoVariables) {
  const auto csv = write_series("x.csv", white_noise(400, 2, 5));
  const auto r = run("select " + csv + " --p-min 1 --p-max 1 --all-graphs --out " + q("sel"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = io::read_json_file(path("sel.json").string());
  EXPECT_EQ(j["rows"].size(), 2u);
  EXPECT_EQ(lines(slurp(path("sel.csv"))).size(), 3u);
  EXPECT_EQ(lines(slurp(path("sel.csv"))).front(), "rank,p,edges,bic,q,loglik,converged,cycles");
  EXPECT_NE(r.out.find("best model"), std::string::npos);
  EXPECT_NE(r.out.find("within 2 BIC"), std::string::npos);
}

TEST_F(Cli, SelectOutputIndependentOfJobs) {
  const auto csv = write_series("x.csv", gim::simulate_var(chain_var(), 600, -1, 6));
  ASSERT_EQ(run("select " + csv + " --p-max 2 --all-graphs --jobs 1 --out " + q("s1")).code, 0);
  ASSERT_EQ(run("select " + csv + " --p-max 2 --all-graphs --jobs 8 --out " + q("s8")).code, 0);
  EXPECT_EQ(slurp(path("s1.json")), slurp(path("s8.json")));
  EXPECT_EQ(slurp(path("s1.csv")), slurp(path("s8.csv")));
}

TEST_F(Cli, SelectRefusesSixVariables) {
  const auto csv = write_series("x.csv", white_noise(200, 6, 7));
  const auto r = run("select " + csv + " --all-graphs --out " + q("s"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("32768"), std::string::npos) << r.err;
}

TEST_F(Cli, SelectGraphsFileTopAndLiteral) {
  const auto csv = write_series("x.csv", gim::simulate_var(chain_var(), 600, -1, 8));
  io::write_text_file(path("gs.json").string(),
                      R"([{"d":3,"edges":[]},{"d":3,"edges":[[0,1],[1,2]]},{"d":3,"edges":[[0,1],[0,2],[1,2]]}])");
  const auto r = run("select " + csv + " --graphs-file " + q("gs.json") +
                     " --bic-literal --top 2 --out " + q("s"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = io::read_json_file(path("s.json").string());
  EXPECT_EQ(j["rows"].size(), 2u);
  EXPECT_EQ(j["bic_formula"], "T*det(Sigma)+log(T)*q");
  EXPECT_EQ(run("select " + csv + " --out " + q("s")).code, 2);
}

TEST_F(Cli, SpectraOfWhiteNoiseAreFlat) {
  const auto csv = write_series("x.csv", white_noise(8192, 2, 9));
  const auto r = run("spectra " + csv + " --bandwidth 401 --grid 8192 --taper none --out " + q("sp"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(slurp(path("sp_spectrum.csv")));
  EXPECT_EQ(rows.front(), "freq_index,lambda,a,b,re,im");
  const double flat = 1.0 / (2.0 * std::numbers::pi);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto c = split(rows[k]);
    ASSERT_EQ(c.size(), 6u);
    if (c[2] == c[3]) EXPECT_NEAR(std::stod(c[4]), flat, 0.35 * flat) << rows[k];
  }
  EXPECT_TRUE(fs::exists(path("sp_coherence.csv")));
  EXPECT_TRUE(fs::exists(path("sp_pcoh.csv")));
  const auto side = io::read_json_file(path("sp.json").string());
  EXPECT_EQ(side["d"], 2);
  EXPECT_EQ(side["N"], 8192);
}

TEST_F(Cli, SpectraBandwidthOneSuppressesPartialCoherence) {
  const auto csv = write_series("x.csv", white_noise(100, 3, 10));
  const auto r = run("spectra " + csv + " --bandwidth 1 --out " + q("sp"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("partial coherence suppressed"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("sp_pcoh.csv")));
  EXPECT_TRUE(io::read_json_file(path("sp.json").string())["files"]["partial_coherence"].is_null());

  // Raw periodogram passthrough.
  const auto x = gim::demean(gim::TimeSeries(white_noise(100, 3, 10).data));
  const auto I = gim::periodogram(x, gim::TaperSpec::cosine_bell(0.1), 512);
  const auto row = split(lines(slurp(path("sp_spectrum.csv")))[7]);
  const int j = std::stoi(row[0]), a = std::stoi(row[2]), b = std::stoi(row[3]);
  EXPECT_EQ(std::stod(row[4]), I[j](a, b).real());
}

TEST_F(Cli, SpectraRejectsHugeBandwidth) {
  const auto csv = write_series("x.csv", white_noise(100, 2, 11));
  EXPECT_EQ(run("spectra " + csv + " --bandwidth 513 --out " + q("sp")).code, 2);
  EXPECT_EQ(run("spectra " + csv + " --bandwidth 4 --out " + q("sp")).code, 2);
}

TEST_F(Cli, SimulateIsReproducible) {
  io::write_text_file(path("v.json").string(), io::var_to_json(chain_var()).dump());
  ASSERT_EQ(run("simulate " + q("v.json") + " --T 250 --seed 3 --out " + q("a.csv")).code, 0);
  ASSERT_EQ(run("simulate " + q("v.json") + " --T 250 --seed 3 --out " + q("b.csv")).code, 0);
  ASSERT_EQ(run("simulate " + q("v.json") + " --T 250 --seed 4 --out " + q("c.csv")).code, 0);
  const auto a = slurp(path("a.csv"));
  EXPECT_EQ(a, slurp(path("b.csv")));
  EXPECT_NE(a, slurp(path("c.csv")));
  const auto rows = lines(a);
  EXPECT_EQ(rows.size(), 251u);
  EXPECT_EQ(rows.front(), "x0,x1,x2");
}

TEST_F(Cli, SimulateRejectsUnitRoot) {
  io::write_text_file(path("v.json").string(), R"({"d":1,"p":1,"a":[[[1.0]]],"sigma":[[1.0]]})");
  const auto r = run("simulate " + q("v.json") + " --T 10 --out " + q("a.csv"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("unstable"), std::string::npos);
}

TEST_F(Cli, PcohZeroOnConstrainedPairs) {
  const auto csv = write_series("x.csv", gim::simulate_var(chain_var(), 800, -1, 12));
  ASSERT_EQ(run("fit " + csv + " --edges 0-1,1-2 --out " + q("f.json")).code, 0);
  const auto r = run("pcoh " + q("f.json") + " --out " + q("p.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(slurp(path("p.csv")));
  EXPECT_EQ(rows.front(), "freq_index,lambda,a,b,re,im,abs");
  int constrained = 0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto c = split(rows[k]);
    ASSERT_EQ(c.size(), 7u);
    if (c[2] == "0" && c[3] == "2") {
      EXPECT_EQ(c[6], "0");
      ++constrained;
    } else {
      EXPECT_GT(std::stod(c[6]), 0.0);
    }
  }
  EXPECT_EQ(constrained, 512 / 2 + 1);
}

TEST_F(Cli, PcohCompleteGraphHasNoForcedZeros) {
  const auto csv = write_series("x.csv", gim::simulate_var(chain_var(), 800, -1, 13));
  ASSERT_EQ(run("fit " + csv + " --out " + q("f.json")).code, 0);
  ASSERT_EQ(run("pcoh " + q("f.json") + " --out " + q("p.csv")).code, 0);
  const auto rows = lines(slurp(path("p.csv")));
  for (std::size_t k = 1; k < rows.size(); ++k) EXPECT_NE(split(rows[k])[6], "0") << rows[k];
}

TEST_F(Cli, PcohMalformedJsonIsInputError) {
  io::write_text_file(path("f.json").string(), "{\"spec\": [1, 2");
  EXPECT_EQ(run("pcoh " + q("f.json") + " --out " + q("p.csv")).code, 2);
  io::write_text_file(path("g.json").string(), R"({"spec":{"p":1}})");
  EXPECT_EQ(run("pcoh " + q("g.json") + " --out " + q("p.csv")).code, 2);
}

TEST_F(Cli, HelpListsFlags) {
  const auto r = run("fit --help");
  EXPECT_EQ(r.code, 0);
  for (const char* flag : {"--p", "--edges", "--graph-json", "--taper", "--tol", "--max-cycles",
                           "--grid", "--out", "--no-demean"})
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  EXPECT_EQ(run("bogus").code, 2);
  EXPECT_EQ(run("fit").code, 2);
}
