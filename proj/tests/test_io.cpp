#include <gtest/gtest.h>

#include <boost/math/distributions/gamma.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "dnamix/cli.hpp"
#include "dnamix/io.hpp"
#include "dnamix/report.hpp"

using namespace dnamix;
namespace fs = std::filesystem;

namespace {

class Workdir {
 public:
  Workdir() {
    static int counter = 0;
    dir_ = fs::temp_directory_path() / ("dnamix_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(dir_);
  }
  ~Workdir() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  std::string write(const std::string& name, const std::string& text) const {
    const auto p = (dir_ / name).string();
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

 private:
  fs::path dir_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct Run {
  int code = -1;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "dnamix");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = cli::run_command(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

template <class F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const InputError& e) {
    return e.what();
  } catch (const std::exception& e) {
    return std::string("other: ") + e.what();
  }
  return "no error";
}

std::vector<AlleleLadder> frequencies(const std::string& text) {
  std::istringstream in(text);
  return io::parse_frequencies(in, "f.csv");
}

const char* two_markers =
    "marker,allele,frequency\n"
    "M1,1,0.2\nM1,2,0.5\nM1,3,0.3\n"
    "M2,1,0.6\nM2,2,0.4\n";

// k = 0 toy: K is 1/2 at M1 and 2/2 at M2.
const char* toy_profiles =
    "individual,marker,allele,count\n"
    "K,M1,1,1\nK,M1,2,1\nK,M2,2,2\n";

const char* toy_peaks =
    "trace,marker,allele,height\n"
    "T,M1,1,320\nT,M1,2,250\nT,M2,2,500\nT,M2,1,0\n";

const char* toy_hypothesis =
    "# one known contributor\n"
    "[hypothesis]\nname = Hp\nknown = K\nunknowns = 0\n\n"
    "[trace T]\nthreshold = 50\n\n"
    "[parameters T]\nrho = 10\neta = 30\nxi = 0.1\nphi = K: 1\n";

double gamma_log_pdf(double z, double shape, double scale) {
  return std::log(boost::math::pdf(boost::math::gamma_distribution<double>(shape, scale), z));
}
double gamma_log_cdf(double z, double shape, double scale) {
  return std::log(boost::math::cdf(boost::math::gamma_distribution<double>(shape, scale), z));
}

}  // namespace

// ---- frequencies -------------------------------------------------------------

TEST(Frequencies, ParsesAndSortsNumericAlleles) {
  const auto l = frequencies("marker,allele,frequency\nD2,23,0.1\nD2,16,0.2\nD2,19.3,0.3\nD2,8,0.4\n");
  ASSERT_EQ(l.size(), 1u);
  EXPECT_EQ(l[0].labels, (std::vector<std::string>{"8", "16", "19.3", "23"}));
  EXPECT_EQ(l[0].frequencies, (std::vector<double>{0.4, 0.2, 0.3, 0.1}));
}

TEST(Frequencies, KeepsFileOrderForNonNumericLabels) {
  const auto l = frequencies("marker,allele,frequency\nM,X,0.5\nM,10,0.25\nM,A,0.25\n");
  EXPECT_EQ(l[0].labels, (std::vector<std::string>{"X", "10", "A"}));
}

TEST(Frequencies, RenormalizesWithinTolerance) {
  const auto l = frequencies("marker,allele,frequency\nM,1,0.499999\nM,2,0.5\n");
  EXPECT_NEAR(l[0].frequencies[0] + l[0].frequencies[1], 1.0, 1e-15);
  EXPECT_NEAR(l[0].frequencies[0], 0.499999 / 0.999999, 1e-16);
}

TEST(Frequencies, RejectsBeyondTolerance) {
  const auto e = error_of([] { frequencies("marker,allele,frequency\nM,1,0.45\nM,2,0.5\n"); });
  EXPECT_NE(e.find("f.csv:3:"), std::string::npos) << e;
  EXPECT_NE(e.find("sum"), std::string::npos) << e;
}

TEST(Frequencies, MalformedInputsCarryFileAndLine) {
  EXPECT_NE(error_of([] { frequencies("marker,allele,frequency\nM,1,0.5\n\nM,1,0.5\n"); }).find("f.csv:4: duplicate"),
            std::string::npos);
  EXPECT_NE(error_of([] { frequencies("marker,allele,frequency\nM,1,0\nM,2,1\n"); }).find("f.csv:2:"), std::string::npos);
  EXPECT_NE(error_of([] { frequencies("marker,allele,frequency\nM,1,abc\n"); }).find("f.csv:2:"), std::string::npos);
  EXPECT_NE(error_of([] { frequencies("marker,allele\nM,1\n"); }).find("f.csv:1: header"), std::string::npos);
  EXPECT_NE(error_of([] { frequencies("marker,allele,frequency\nM,1\n"); }).find("f.csv:2: expected 3"),
            std::string::npos);
  EXPECT_NE(error_of([] { frequencies(""); }).find("missing header"), std::string::npos);
}

TEST(Frequencies, QuotedFieldsAndByteOrderMark) {
  const auto l = frequencies("\xEF\xBB\xBFMarker,Allele,Frequency\r\n\"M,1\",\"a\"\"b\",1\r\n");
  EXPECT_EQ(l[0].marker, "M,1");
  EXPECT_EQ(l[0].labels[0], "a\"b");
}

// ---- round trips -------------------------------------------------------------

TEST(RoundTrip, FrequenciesAreReproducedExactly) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    std::ostringstream text;
    text << "marker,allele,frequency\n";
    std::uniform_int_distribution<int> na(1, 8);
    std::uniform_real_distribution<double> u(0.05, 1.0), jitter(-9e-7, 9e-7);
    for (int m = 0; m < 3; ++m) {
      const int A = na(rng);
      std::vector<double> w(A);
      double s = 0;
      for (double& x : w) s += (x = u(rng));
      for (int a = 0; a < A; ++a)
        text << "M" << m << "," << (rep % 2 ? std::to_string(a + 5) + ".3" : "x" + std::to_string(A - a)) << ","
             << io::exact(w[a] / s - (a == 0 ? std::abs(jitter(rng)) / 2 : 0.0)) << "\n";
    }
    const auto first = frequencies(text.str());
    std::ostringstream again;
    io::write_frequencies(again, first);
    const auto second = frequencies(again.str());
    ASSERT_EQ(first.size(), second.size());
    for (std::size_t m = 0; m < first.size(); ++m) {
      EXPECT_EQ(first[m].marker, second[m].marker);
      EXPECT_EQ(first[m].labels, second[m].labels);
      EXPECT_EQ(first[m].frequencies, second[m].frequencies);
    }
  }
}

TEST(RoundTrip, PeaksAndProfiles) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> h(50.0, 3000.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<io::PeakRow> peaks;
    std::vector<io::ProfileRow> profiles;
    for (int i = 0; i < 15; ++i) {
      peaks.push_back({"T" + std::to_string(i % 2), "M" + std::to_string(i % 4), std::to_string(i),
                       i % 5 == 0 ? 0.0 : h(rng), 0});
      profiles.push_back({"K, \"senior\"", "M" + std::to_string(i), std::to_string(i), i % 3, 0});
    }
    std::ostringstream a, b;
    io::write_peaks(a, peaks);
    io::write_profiles(b, profiles);
    std::istringstream ia(a.str()), ib(b.str());
    EXPECT_EQ(io::parse_peaks(ia), peaks);
    EXPECT_EQ(io::parse_profiles(ib), profiles);
  }
}

TEST(RoundTrip, CaseConfig) {
  const std::string text =
      "[hypothesis]\nname = Hd\nknown = K1, K2\nunknowns = 2\n"
      "[trace A]\nthreshold = 50\n[trace B]\nthreshold = 40.5\ncontributors = K2, U1\n"
      "[parameters A]\nrho = 9\neta = 30\nxi = 0.1\nphi = K1: 0.4, K2: 0.3, U1: 0.2, U2: 0.1\n"
      "[parameters B]\nrho = 3.5\neta = 41\nxi = 0.02\nphi = K2: 0.75, U1: 0.25\n"
      "[optimizer]\nrestarts = 2\nseed = 99\nstandard_errors = false\n";
  std::istringstream in(text);
  const auto cfg = io::parse_case_config(in, "h.ini");
  EXPECT_EQ(cfg.hypothesis.contributors.size(), 4u);
  EXPECT_EQ(cfg.hypothesis.trace_members[1], (std::vector<std::size_t>{1, 2}));
  std::ostringstream out;
  io::write_case_config(out, cfg);
  std::istringstream in2(out.str());
  const auto back = io::parse_case_config(in2, "h2.ini");
  EXPECT_EQ(back.hypothesis.name, cfg.hypothesis.name);
  EXPECT_EQ(back.hypothesis.trace_members, cfg.hypothesis.trace_members);
  EXPECT_EQ(back.trace_names(), cfg.trace_names());
  EXPECT_EQ(back.traces[1].threshold, 40.5);
  EXPECT_EQ(back.parameters.at("B").phi, cfg.parameters.at("B").phi);
  EXPECT_EQ(back.optimizer.seed, 99u);
  EXPECT_EQ(back.optimizer.restarts, 2u);
  EXPECT_FALSE(back.optimizer.standard_errors);
}

// ---- case assembly -----------------------------------------------------------

namespace {

CaseData assemble(const std::string& freq, const std::string& peaks, const std::string& profiles,
                  const std::vector<io::TraceConfig>& traces = {{"T", 50.0, std::nullopt, 1}}) {
  std::istringstream f(freq), p(peaks), r(profiles);
  const io::CaseFiles files{"f.csv", "p.csv", "r.csv"};
  return io::assemble_case(io::parse_frequencies(f, files.frequencies), io::parse_peaks(p, files.peaks),
                           io::parse_profiles(r, files.profiles), traces, files);
}

const char* d2_freq =
    "marker,allele,frequency\n"
    "D2S1338,16,0.03\nD2S1338,17,0.2\nD2S1338,18,0.1\nD2S1338,19,0.15\nD2S1338,20,0.14\n"
    "D2S1338,21,0.03\nD2S1338,23,0.12\nD2S1338,24,0.1\nD2S1338,25,0.13\n";

}  // namespace

TEST(Assemble, SingleMarkerCaseRow) {
  const auto d = assemble(d2_freq, "trace,marker,allele,height\nT,D2S1338,16,64\nT,D2S1338,23,1235\n",
                          "individual,marker,allele,count\nK3,D2S1338,16,1\nK3,D2S1338,23,1\n");
  const auto& m = d.markers[0];
  EXPECT_EQ(m.heights[0][*m.ladder.index_of("16")], 64.0);
  EXPECT_EQ(m.heights[0][*m.ladder.index_of("17")], 0.0);
  EXPECT_EQ(d.profiles.at("K3")[0][*m.ladder.index_of("16")], 1);
}

TEST(Assemble, EmptyPeaksFileLeavesEveryAlleleUnobserved) {
  const auto d = assemble(two_markers, "trace,marker,allele,height\n", "individual,marker,allele,count\n");
  for (const auto& m : d.markers)
    for (double z : m.heights[0]) EXPECT_EQ(z, 0.0);
  EXPECT_EQ(d.observed_peaks(), 0u);
}

TEST(Assemble, EveryMalformedInputIsReportedWithContext) {
  const std::string none = "individual,marker,allele,count\n";
  const std::string head = "trace,marker,allele,height\n";
  struct Case {
    std::string peaks, profiles, where;
  };
  const std::vector<Case> cases{
      {head + "T,M1,1,300\nT,M1,1,200\n", none, "p.csv:3: duplicate peak"},
      {head + "T,M1,1,30\n", none, "p.csv:2: height 30 lies below"},
      {head + "T,M1,7,300\n", none, "p.csv:2: allele 7 is not in the ladder"},
      {head + "T,M9,1,300\n", none, "p.csv:2: marker M9"},
      {head + "U,M1,1,300\n", none, "p.csv:2: trace U"},
      {head + "T,M1,1,-3\n", none, "p.csv:2: height must be"},
      {head, none + "K,M1,1,1\nK,M1,2,2\nK,M2,1,2\n", "r.csv:3: counts of K at M1 sum to 3"},
      {head, none + "K,M1,1,2\n", "r.csv:2: K has no genotype at marker M2"},
      {head, none + "K,M1,1,1\nK,M1,1,1\n", "r.csv:3: duplicate row"},
      {head, none + "K,M1,4,2\n", "r.csv:2: allele 4 is not in the ladder"},
      {head, none + "K,M1,1,3\n", "r.csv:2: count must be"},
  };
  for (const auto& c : cases) {
    const auto e = error_of([&] { assemble(two_markers, c.peaks, c.profiles); });
    EXPECT_NE(e.find(c.where), std::string::npos) << "expected '" << c.where << "', got '" << e << "'";
  }
}

TEST(Config, ErrorsCarryLineNumbers) {
  struct Case {
    std::string text, where;
  };
  const std::vector<Case> cases{
      {"[trace T]\nthreshold = 50\n", "missing [hypothesis]"},
      {"[hypothesis]\nunknowns = 1\n", "at least one [trace"},
      {"[hypothesis]\nunknowns = x\n[trace T]\nthreshold=50\n", "h.ini:2: unknowns"},
      {"[hypothesis]\nunknowns = 1\ncolour = red\n[trace T]\nthreshold=50\n", "h.ini:3: unknown key"},
      {"[hypothesis]\nunknowns = 1\n[trace T]\n", "h.ini:3: trace T needs a threshold"},
      {"[hypothesis]\nunknowns = 1\n[trace T]\nthreshold = 50\ncontributors = U2\n", "h.ini:5: U2 is not"},
      {"[hypothesis]\nunknowns = 1\n[trace T]\nthreshold = 50\n[parameters T]\nrho=1\neta=1\nxi=0\nphi = K: 1\n",
       "h.ini:5: fraction given for K"},
      {"[hypothesis]\nunknowns = 2\n[trace T]\nthreshold = 50\n[parameters T]\nrho=1\neta=1\nxi=0\nphi = U1: 1\n",
       "h.ini:5: no fraction for U2"},
      {"[hypothesis]\nunknowns = 1\n[trace T]\nthreshold = 50\n[parameters X]\n", "h.ini:5: [parameters] names"},
      {"[hypothesis]\nunknowns = 1\nunknowns = 2\n", "h.ini:3: duplicate key"},
      {"[hypothesis]\nunknowns 1\n", "h.ini:2: expected 'key = value'"},
      {"[hypothesis]\n[trace T]\nthreshold = 50\n", "has no contributor for trace"},
  };
  for (const auto& c : cases) {
    const auto e = error_of([&] {
      std::istringstream in(c.text);
      io::parse_case_config(in, "h.ini");
    });
    EXPECT_NE(e.find(c.where), std::string::npos) << "expected '" << c.where << "', got '" << e << "'";
  }
}

// ---- reports -----------------------------------------------------------------

TEST(Report, NumbersHaveTwelveSignificantDigits) {
  EXPECT_EQ(report::number(1.0 / 3.0).dump(), "0.333333333333");
  EXPECT_EQ(report::number(-118.0912345678912).dump(), "-118.091234568");
  EXPECT_EQ(report::number(2.5e-20).dump(), "2.5e-20");
  EXPECT_EQ(report::number(-0.0).dump(), "0.0");
  EXPECT_EQ(report::number(-INFINITY), "-inf");
}

TEST(Report, Sha256) {
  EXPECT_EQ(report::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(report::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

// ---- command line ------------------------------------------------------------

TEST(Cli, TreeSizeSpotValue) {
  const auto r = run({"treesize", "--method", "slice", "--A", "2", "--k", "1", "--N", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = report::Json::parse(r.out);
  EXPECT_EQ(j["rows"][0]["total_size"], 117);
  const auto t = run({"treesize", "--method", "triangle", "--A", "2", "--k", "1", "--N", "1"});
  EXPECT_EQ(report::Json::parse(t.out)["rows"][0]["total_size"], 99);
  EXPECT_EQ(run({"treesize", "--method", "triangle", "--A", "2", "--k", "1", "--N", "1", "--compressed"}).code, 2);
  EXPECT_EQ(run({"treesize", "--method", "slice", "--A", "x", "--k", "1", "--N", "1"}).code, 2);
}

TEST(Cli, LogLikelihoodOfKnownOnlyCaseIsTheHandSum) {
  Workdir w;
  const auto f = w.write("f.csv", two_markers), p = w.write("p.csv", toy_peaks),
             r = w.write("r.csv", toy_profiles), h = w.write("h.ini", toy_hypothesis);
  const auto res = run({"loglik", "--frequencies", f, "--peaks", p, "--profiles", r, "--hypothesis", h});
  ASSERT_EQ(res.code, 0) << res.err;
  const auto j = report::Json::parse(res.out);
  // M1: shapes 10 (0.9 + 0.1 stutter from allele 2) and 9; allele 3 has shape 0
  // M2: allele 1 only stutter (shape 2) and unobserved; allele 2 shape 18
  const double hand = gamma_log_pdf(320, 10, 30) + gamma_log_pdf(250, 9, 30) + gamma_log_cdf(50, 2, 30) +
                      gamma_log_pdf(500, 18, 30);
  EXPECT_NEAR(j["log_likelihood"].get<double>(), hand, 1e-9 * std::abs(hand));
  EXPECT_EQ(j["command"], "loglik");
  EXPECT_EQ(j["inputs"]["peaks"]["sha256"], report::file_digest(p));
  EXPECT_EQ(j["markers"].size(), 2u);
}

TEST(Cli, ExitCodes) {
  Workdir w;
  const auto f = w.write("f.csv", two_markers), p = w.write("p.csv", toy_peaks), r = w.write("r.csv", toy_profiles),
             h = w.write("h.ini", toy_hypothesis);
  // height below threshold: validation
  const auto bad = w.write("bad.csv", "trace,marker,allele,height\nT,M1,1,20\n");
  auto res = run({"loglik", "--frequencies", f, "--peaks", bad, "--profiles", r, "--hypothesis", h});
  EXPECT_EQ(res.code, 2);
  EXPECT_NE(res.err.find("bad.csv:2:"), std::string::npos) << res.err;
  // a peak that no contributor can explain: numerical
  const auto far = w.write("far.csv", "trace,marker,allele,height\nT,M1,3,900\n");
  res = run({"loglik", "--frequencies", f, "--peaks", far, "--profiles", r, "--hypothesis", h});
  EXPECT_EQ(res.code, 3);
  EXPECT_EQ(report::Json::parse(res.out)["log_likelihood"], "-inf");
  // missing files and flags
  EXPECT_EQ(run({"loglik", "--frequencies", w.path("nope.csv"), "--peaks", p, "--hypothesis", h}).code, 2);
  EXPECT_EQ(run({"loglik", "--peaks", p}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
  // the binary maps the same codes
  const std::string cmd = std::string(DNAMIX_CLI_PATH) + " loglik --frequencies " + f + " --peaks " + bad +
                          " --profiles " + r + " --hypothesis " + h + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  EXPECT_EQ(WEXITSTATUS(status), 2);
}

namespace {

// Two-person mixture: K known, one unknown, three markers.
struct MixtureFiles {
  Workdir w;
  std::string f, p, r, hp, hd;
  MixtureFiles() {
    f = w.write("f.csv",
                "marker,allele,frequency\n"
                "A,10,0.2\nA,11,0.3\nA,12,0.25\nA,13,0.25\n"
                "B,5,0.1\nB,6,0.4\nB,7,0.3\nB,8,0.2\n"
                "C,20,0.5\nC,21,0.3\nC,22,0.2\n");
    p = w.write("p.csv",
                "trace,marker,allele,height\n"
                "T,A,10,900\nT,A,11,750\nT,A,13,300\n"
                "T,B,6,1500\nT,B,8,320\n"
                "T,C,20,700\nT,C,21,1100\nT,C,22,350\n");
    r = w.write("r.csv", "individual,marker,allele,count\nK,A,10,1\nK,A,11,1\nK,B,6,2\nK,C,20,1\nK,C,21,1\n");
    const std::string opt = "[optimizer]\nrestarts = 1\nseed = 7\n";
    hp = w.write("hp.ini", "[hypothesis]\nname = Hp\nknown = K\nunknowns = 1\n[trace T]\nthreshold = 50\n" + opt);
    hd = w.write("hd.ini", "[hypothesis]\nname = Hd\nunknowns = 2\n[trace T]\nthreshold = 50\n" + opt);
  }
  std::vector<std::string> common() const { return {"--frequencies", f, "--peaks", p, "--profiles", r}; }
};

std::vector<std::string> operator+(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST(Cli, IdenticalHypothesisFilesGiveZeroLogLr) {
  MixtureFiles m;
  const auto res = run(std::vector<std::string>{"lr"} + m.common() + std::vector<std::string>{"--hp", m.hp, "--hd", m.hp});
  ASSERT_EQ(res.code, 0) << res.err;
  const auto j = report::Json::parse(res.out);
  EXPECT_EQ(j["log10_lr"].get<double>(), 0.0);
  EXPECT_EQ(j["prosecution"]["log_likelihood"], j["defence"]["log_likelihood"]);
}

TEST(Cli, ReportsAreByteIdenticalOnRerun) {
  MixtureFiles m;
  const auto args = std::vector<std::string>{"deconvolve"} + m.common() +
                    std::vector<std::string>{"--hypothesis", m.hp, "--seed", "5", "--mass", "0.9"};
  const auto a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto j = report::Json::parse(a.out);
  EXPECT_EQ(j["seed"], 5);
  EXPECT_EQ(j["parameter_source"], "fitted");
  EXPECT_EQ(j["rankings"].size(), 3u);
  for (const auto& g : j["rankings"]) EXPECT_GE(g["total"].get<double>(), 0.9);
  // a different thread count leaves the numbers alone
  const auto c = run(args + std::vector<std::string>{"--threads", "3"});
  EXPECT_EQ(a.out, c.out);
}

TEST(Cli, LrReportHasBothFitsAndSideTable) {
  MixtureFiles m;
  const auto table = m.w.path("table2.csv");
  const auto res = run(std::vector<std::string>{"lr"} + m.common() +
                       std::vector<std::string>{"--hp", m.hp, "--hd", m.hd, "--presence", "--table", table});
  ASSERT_EQ(res.code, 0) << res.err;
  const auto j = report::Json::parse(res.out);
  const double lp = j["prosecution"]["log10_likelihood"], ld = j["defence"]["log10_likelihood"];
  EXPECT_NEAR(j["log10_lr"].get<double>(), lp - ld, 1e-9);
  EXPECT_TRUE(j["presence"].contains("log10_lr"));
  const auto csv = slurp(table);
  EXPECT_EQ(csv.rfind("trace,quantity,Hd,se,Hp,se\n", 0), 0u) << csv;
  EXPECT_NE(csv.find("T,phi K,"), std::string::npos);
  EXPECT_NE(csv.find(",log10 L,"), std::string::npos);
}

TEST(Cli, SimulationWritesReadablePeaks) {
  MixtureFiles m;
  const auto hfix = m.w.write("fixed.ini",
                              "[hypothesis]\nknown = K\nunknowns = 1\n[trace T]\nthreshold = 50\n"
                              "[parameters T]\nrho = 8\neta = 40\nxi = 0.05\nphi = K: 0.6, U1: 0.4\n");
  const auto csv = m.w.path("sim.csv");
  const auto args = std::vector<std::string>{"simulate", "--frequencies", m.f, "--profiles", m.r, "--hypothesis",
                                             hfix, "--seed", "3", "--table", csv};
  const auto res = run(args);
  ASSERT_EQ(res.code, 0) << res.err;
  EXPECT_EQ(run(args).out, res.out);
  auto in = io::open_input(csv);
  const auto rows = io::parse_peaks(in, csv);
  EXPECT_EQ(rows.size(), report::Json::parse(res.out)["peaks"].size());
  const auto ll = run({"loglik", "--frequencies", m.f, "--peaks", csv, "--profiles", m.r, "--hypothesis", hfix});
  EXPECT_EQ(ll.code, 0) << ll.err;
  EXPECT_EQ(run({"simulate", "--frequencies", m.f, "--profiles", m.r, "--hypothesis", hfix, "--condition", "peaks"}).code,
            2);
}

TEST(Cli, Diagnostics) {
  MixtureFiles m;
  for (const char* kind : {"qq", "intervals", "preq"}) {
    const auto res = run(std::vector<std::string>{"diagnose", kind} + m.common() +
                         std::vector<std::string>{"--hypothesis", m.hp});
    ASSERT_EQ(res.code, 0) << kind << ": " << res.err;
    const auto j = report::Json::parse(res.out);
    if (std::string(kind) == "qq") {
      EXPECT_EQ(j["points"].size(), 8u);
      EXPECT_EQ(j["mode"], "all-others");
    }
    if (std::string(kind) == "intervals") EXPECT_EQ(j["rows"].size(), 11u);
    if (std::string(kind) == "preq") EXPECT_TRUE(j["monitor"].contains("score"));
  }
  EXPECT_EQ(run(std::vector<std::string>{"diagnose", "pp"} + m.common() + std::vector<std::string>{"--hypothesis", m.hp})
                .code,
            2);
}
