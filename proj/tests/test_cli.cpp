#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace {

using rdd::testing::TempDir;
using rdd::testing::slurp;

struct Run {
  int code = -1;
  std::string out;
  std::string err;
  nlohmann::json json() const { return nlohmann::json::parse(out); }
};

Run rdd_cli(const TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string("cd '") + dir.path().string() + "' && '" RDD_CLI_PATH "' " +
                          args + " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

void write_spec(const TempDir& dir, const std::string& extra = "") {
  std::ofstream(dir / "spec.json")
      << R"({"format_version": 1, "num_prototypes": 4, "dim": 8, "demos": 4,
             "reference_demos": 8, "seed": 21)" << extra << "}";
}

}  // namespace

TEST(Cli, HelpAndUsage) {
  TempDir dir;
  EXPECT_EQ(rdd_cli(dir, "--help").code, 0);
  EXPECT_EQ(rdd_cli(dir, "").code, 2);
  EXPECT_EQ(rdd_cli(dir, "decompose --bogus").code, 2);
}

TEST(Cli, SynthIsDeterministic) {
  TempDir dir;
  write_spec(dir);
  ASSERT_EQ(rdd_cli(dir, "synth --spec spec.json --out a").code, 0);
  const auto r = rdd_cli(dir, "synth --spec spec.json --out b");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.json().at("test_demos"), 4);
  for (const char* f : {"reference/manifest.json", "reference/demo_00003.rddm", "test/manifest.json",
                        "test/demo_00002.rddm"}) {
    EXPECT_EQ(slurp(dir / (std::string("a/") + f)), slurp(dir / (std::string("b/") + f))) << f;
  }
}

TEST(Cli, BuildIndexDecomposeEval) {
  TempDir dir;
  write_spec(dir);
  ASSERT_EQ(rdd_cli(dir, "synth --spec spec.json --out c").code, 0);
  const auto built = rdd_cli(dir, "build-index --bundle c/reference --out idx.rddi");
  ASSERT_EQ(built.code, 0) << built.err;
  EXPECT_GT(built.json().at("entries").get<int>(), 0);
  EXPECT_EQ(built.json().at("dim"), 16);

  const auto dec = rdd_cli(dir, "decompose --index idx.rddi --demo c/test/demo_00000.rddm --out r.json");
  ASSERT_EQ(dec.code, 0) << dec.err;
  const auto res = nlohmann::json::parse(slurp(dir / "r.json"));
  EXPECT_EQ(res.at("total_score"), dec.json().at("total_score"));
  const auto& ivs = res.at("intervals");
  ASSERT_FALSE(ivs.empty());
  EXPECT_EQ(ivs[0].at("half_open")[0], 0);
  EXPECT_EQ(ivs[0].at("closed")[1].get<int>() + 1, ivs[0].at("half_open")[1].get<int>());
  EXPECT_TRUE(res.contains("novelty"));
  EXPECT_TRUE(res.contains("novelty_per_frame"));

  const auto ev = rdd_cli(dir, "eval --reference c/reference --test c/test --exact --out rep.json --csv rep.csv");
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_GE(ev.json().at("miou").get<double>(), 0.95);
  EXPECT_TRUE(std::filesystem::exists(dir / "rep.csv"));
}

TEST(Cli, PrototypeDemoIsOneInterval) {
  TempDir dir;
  std::mt19937_64 rng(1);
  std::vector<rdd::Demonstration> ref{rdd::testing::random_demo("p", 12, 4, rng, std::vector<std::size_t>{12})};
  rdd::write_bundle(dir / "ref", ref);
  ASSERT_EQ(rdd_cli(dir, "build-index --bundle ref --out i.rddi").code, 0);
  const auto r = rdd_cli(dir, "decompose --index i.rddi --demo ref/demo_00000.rddm --out r.json");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.json().at("intervals"), 1);
  EXPECT_EQ(r.json().at("total_score"), 0.0);
}

TEST(Cli, EvaluationCountOn500Frames) {
  TempDir dir;
  std::mt19937_64 rng(2);
  std::vector<rdd::Demonstration> ref{rdd::testing::random_demo("r", 40, 4, rng, std::vector<std::size_t>{10, 25, 40})};
  rdd::write_bundle(dir / "ref", ref);
  std::vector<rdd::Demonstration> demo{rdd::testing::random_demo("long", 500, 4, rng)};
  rdd::write_bundle(dir / "demo", demo);
  ASSERT_EQ(rdd_cli(dir, "build-index --bundle ref --out i.rddi").code, 0);
  const auto late = rdd_cli(dir, "decompose --index i.rddi --demo demo --lmax 100 --late-start");
  ASSERT_EQ(late.code, 0) << late.err;
  EXPECT_EQ(late.json().at("eval_count"), 44549);
  const auto fixed = rdd_cli(dir, "decompose --index i.rddi --demo demo --lmax 100");
  EXPECT_EQ(fixed.json().at("eval_count"), 44550);
  const auto par = rdd_cli(dir, "--threads 2 decompose --index i.rddi --demo demo --lmax 100 --parallel-scoring");
  EXPECT_EQ(par.json().at("total_score"), fixed.json().at("total_score"));
}

TEST(Cli, ConfigFileSuppliesDefaults) {
  TempDir dir;
  std::mt19937_64 rng(3);
  std::vector<rdd::Demonstration> ref{rdd::testing::random_demo("r", 30, 4, rng, std::vector<std::size_t>{10, 30})};
  rdd::write_bundle(dir / "ref", ref);
  std::vector<rdd::Demonstration> demo{rdd::testing::random_demo("d", 60, 4, rng)};
  rdd::write_bundle(dir / "demo", demo);
  ASSERT_EQ(rdd_cli(dir, "build-index --bundle ref --out i.rddi").code, 0);
  std::ofstream(dir / "cfg.json")
      << R"({"format_version": 1, "decompose": {"index": "i.rddi", "demo": "demo", "lmax": 20, "late-start": true}})";
  const auto a = rdd_cli(dir, "--config cfg.json decompose");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.json().at("eval_count"), rdd::count_evaluations(60, 2, 20));
  const auto b = rdd_cli(dir, "--config cfg.json decompose --lmax 10");
  EXPECT_EQ(b.json().at("eval_count"), rdd::count_evaluations(60, 2, 10));
  std::ofstream(dir / "old.json") << R"({"format_version": 7, "decompose": {}})";
  EXPECT_EQ(rdd_cli(dir, "--config old.json decompose").code, 2);
}

TEST(Cli, DomainErrorsExitOne) {
  TempDir dir;
  std::mt19937_64 rng(4);
  std::vector<rdd::Demonstration> ref{rdd::testing::random_demo("r", 10, 4, rng, std::vector<std::size_t>{5, 10})};
  rdd::write_bundle(dir / "ref", ref);
  std::vector<rdd::Demonstration> unlabeled{rdd::testing::random_demo("nolabel", 6, 4, rng)};
  rdd::write_bundle(dir / "raw", unlabeled);
  std::vector<rdd::Demonstration> four{rdd::testing::random_demo("four", 4, 4, rng)};
  rdd::write_bundle(dir / "four", four);

  const auto lacking = rdd_cli(dir, "build-index --bundle raw --out x.rddi");
  EXPECT_EQ(lacking.code, 1);
  EXPECT_NE(lacking.err.find("nolabel"), std::string::npos);
  EXPECT_EQ(rdd_cli(dir, "build-index --bundle ref --out x.rddi --trees 0").code, 1);
  EXPECT_EQ(rdd_cli(dir, "build-index --bundle ref --out x.rddi --trees 0 --exact").code, 0);

  const auto short_demo = rdd_cli(dir, "decompose --index x.rddi --demo four --lmin 5");
  EXPECT_EQ(short_demo.code, 1);
  EXPECT_NE(short_demo.err.find("lmin"), std::string::npos);
  EXPECT_EQ(rdd_cli(dir, "decompose --index x.rddi --demo four --lmin 3 --lmax 3 --strict-cover").code, 1);
}

TEST(Cli, IoErrorsExitTwo) {
  TempDir dir;
  EXPECT_EQ(rdd_cli(dir, "build-index --bundle nowhere --out x.rddi").code, 2);
  EXPECT_EQ(rdd_cli(dir, "decompose --index missing.rddi --demo nowhere").code, 2);
  std::ofstream(dir / "junk.rddi") << "junk";
  EXPECT_EQ(rdd_cli(dir, "decompose --index junk.rddi --demo nowhere").code, 2);

  std::mt19937_64 rng(5);
  std::vector<rdd::Demonstration> ref{rdd::testing::random_demo("r", 10, 4, rng, std::vector<std::size_t>{10})};
  rdd::write_bundle(dir / "ref", ref);
  std::vector<rdd::Demonstration> wide{rdd::testing::random_demo("w", 10, 6, rng)};
  rdd::write_bundle(dir / "wide", wide);
  ASSERT_EQ(rdd_cli(dir, "build-index --bundle ref --out i.rddi").code, 0);
  EXPECT_EQ(rdd_cli(dir, "decompose --index i.rddi --demo wide").code, 2);
}

TEST(Cli, BenchCsv) {
  TempDir dir;
  const auto r = rdd_cli(dir, "bench --lengths 1000,2000,4000,8000 --lmax 100 --work 200000 --out b.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(dir / "b.csv");
  std::string line;
  std::getline(in, line);
  std::vector<long> bounded;
  while (std::getline(in, line)) {
    if (line.find(",bounded,") == std::string::npos) continue;
    bounded.push_back(std::stol(line.substr(line.rfind(',') + 1)));
  }
  ASSERT_EQ(bounded.size(), 4u);
  EXPECT_TRUE(std::is_sorted(bounded.begin(), bounded.end()));
}
