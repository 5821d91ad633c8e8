// rdd: command-line front end for building interval indices, decomposing
// demonstrations, generating synthetic corpora, evaluating and benchmarking.
//
// Exit codes: 0 ok, 1 domain error, 2 I/O or usage error.
// stdout carries JSON only; diagnostics go to stderr.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rdd/rdd.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitIo = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(rdd::Errc code) {
  switch (code) {
    case rdd::Errc::io:
    case rdd::Errc::format:
    case rdd::Errc::dimension_mismatch:
      return kExitIo;
    default:
      return kExitDomain;
  }
}

// Versioned JSON config: {"format_version": 1, "<subcommand>": {"<flag>": value}}.
// Explicit command-line flags take precedence over config values.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
      throw CLI::ConversionError(std::string("malformed config file: ") + ex.what());
    }
    if (!doc.is_object() || doc.value("format_version", 0) != 1) {
      throw CLI::ConversionError("config file needs \"format_version\": 1");
    }
    std::vector<CLI::ConfigItem> items;
    for (const auto& [section, body] : doc.items()) {
      if (section == "format_version") continue;
      if (!body.is_object()) {
        items.push_back({{}, section, {scalar(body)}});
        continue;
      }
      for (const auto& [key, value] : body.items()) {
        CLI::ConfigItem item{{section}, key, {}};
        if (value.is_array()) {
          for (const auto& v : value) item.inputs.push_back(scalar(v));
        } else {
          item.inputs.push_back(scalar(value));
        }
        items.push_back(std::move(item));
      }
    }
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  }
};

void emit(const ordered_json& j) { std::cout << j.dump() << std::endl; }

void write_json_file(const fs::path& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) rdd::fail(rdd::Errc::io, "cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) rdd::fail(rdd::Errc::io, "write failed for '" + path.string() + "'");
}

rdd::FeatureMode parse_feature_mode(const std::string& s) {
  return s == "end_only" ? rdd::FeatureMode::end_only : rdd::FeatureMode::full;
}

rdd::ScoreMode parse_score_mode(const std::string& s) {
  return s == "ood" ? rdd::ScoreMode::ood : rdd::ScoreMode::base;
}

std::vector<rdd::Demonstration> load_demos(const fs::path& path) {
  if (fs::is_directory(path)) return rdd::read_bundle(path).demos;
  if (!fs::exists(path)) rdd::fail(rdd::Errc::io, "no such demo: '" + path.string() + "'");
  rdd::Matrix m = rdd::read_matrix(path);
  for (std::size_t r = 0; r < m.rows; ++r) {
    rdd::normalize_in_place(std::span<float>(m.values).subspan(r * m.cols, m.cols));
  }
  std::vector<rdd::Demonstration> out;
  out.emplace_back(path.stem().string(), m.cols, std::move(m.values));
  return out;
}

ordered_json interval_json(const rdd::Interval& iv) {
  ordered_json j;
  j["demo_id"] = iv.demo_id;
  j["begin"] = iv.begin;
  j["end"] = iv.end;
  return j;
}

ordered_json result_json(const rdd::Demonstration& demo, const rdd::DecompositionResult& r,
                         const rdd::IntervalIndex& index) {
  ordered_json j;
  j["demo_id"] = demo.id();
  j["length"] = demo.length();
  ordered_json intervals = ordered_json::array();
  for (std::size_t k = 0; k < r.partition.intervals.size(); ++k) {
    const auto& iv = r.partition.intervals[k];
    ordered_json e;
    e["half_open"] = {iv.begin, iv.end};
    e["closed"] = {iv.closed().first, iv.closed().second};
    e["duration"] = iv.duration();
    e["score"] = r.interval_scores[k];
    if (k < r.neighbors.size()) {
      const auto& nb = r.neighbors[k];
      ordered_json n = interval_json(nb.source);
      n["entry"] = nb.entry;
      n["duration"] = index.duration(nb.entry);
      n["distance"] = nb.distance;
      e["neighbor"] = std::move(n);
    }
    intervals.push_back(std::move(e));
  }
  j["intervals"] = std::move(intervals);
  j["total_score"] = r.total_score;
  j["novelty"] = r.novelty;
  // Diagnostic only: total score per covered frame.
  j["novelty_per_frame"] =
      r.partition.covered_prefix > 0 ? rdd::novelty_per_frame(r) : 0.0;
  j["full_coverage"] = r.full_coverage;
  j["covered_prefix"] = r.partition.covered_prefix;
  j["eval_count"] = r.eval_count;
  return j;
}

// ---------------------------------------------------------------------------

struct BuildIndexArgs {
  std::string bundle;
  std::string mode = "full";
  std::size_t trees = 10;
  std::size_t leaf_max = 32;
  bool exact = false;
  bool approximate = false;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_build_index(const BuildIndexArgs& a) {
  if (a.trees == 0 && !a.exact) throw UsageError("--trees 0 requires --exact");
  if (a.exact && a.approximate) throw UsageError("--exact and --approximate are exclusive");
  const auto loaded = rdd::read_bundle(a.bundle);
  const auto mode = parse_feature_mode(a.mode);
  const auto intervals = rdd::reference_intervals(loaded.demos);
  const auto features = rdd::reference_features(loaded.demos, intervals, mode);
  rdd::IndexOptions opts{a.trees, a.leaf_max, a.seed, std::nullopt};
  if (a.exact) opts.exact = true;
  if (a.approximate) opts.exact = false;
  const auto index = rdd::IntervalIndex::build(features, opts);
  index.save(a.out);

  ordered_json j;
  j["entries"] = index.size();
  j["dim"] = index.dim();
  j["mode"] = std::string(rdd::to_string(index.mode()));
  j["exact"] = index.exact();
  j["trees"] = index.forest().size();
  j["out"] = a.out;
  emit(j);
  return kExitOk;
}

struct DecomposeArgs {
  std::string index;
  std::string demo;
  double alpha = 1.0;
  double beta = 0.0;
  std::string mode = "base";
  std::size_t lmin = 2;
  std::size_t lmax = 0;  // 0: unbounded
  bool strict_cover = false;
  bool prefix_fallback = false;
  double uvd_slack = 1e-3;
  bool late_start = false;
  bool parallel_scoring = false;
  std::string out;
};

int cmd_decompose(const DecomposeArgs& a, unsigned threads) {
  if (a.lmin < 2) throw UsageError("--lmin must be >= 2");
  if (a.lmax != 0 && a.lmax < a.lmin) throw UsageError("--lmax must be >= --lmin");
  const auto index = rdd::IntervalIndex::load(a.index);
  const auto demos = load_demos(a.demo);

  rdd::ScoreParams params;
  params.alpha = a.alpha;
  params.beta = a.beta;
  params.mode = parse_score_mode(a.mode);
  params.uvd_slack = a.uvd_slack;
  rdd::SolverConfig cfg;
  cfg.l_min = a.lmin;
  if (a.lmax != 0) cfg.l_max = a.lmax;
  cfg.strict_cover = a.strict_cover;
  cfg.parallel_scoring = a.parallel_scoring || threads > 1;
  cfg.threads = threads;
  if (a.late_start) cfg.loop_start = rdd::LoopStart::after_min_length;
  if (a.prefix_fallback) cfg.fallback = rdd::Fallback::longest_prefix;

  ordered_json files = ordered_json::array();
  ordered_json summary = ordered_json::array();
  for (const auto& demo : demos) {
    if (demo.length() < cfg.l_min) {
      rdd::fail(rdd::Errc::invalid_argument,
                "demo '" + demo.id() + "' has " + std::to_string(demo.length()) +
                    " frames, fewer than --lmin " + std::to_string(cfg.l_min));
    }
    const auto r = rdd::max_sum_partition(demo, index, params, cfg);
    files.push_back(result_json(demo, r, index));
    ordered_json s;
    s["demo_id"] = demo.id();
    s["intervals"] = r.partition.intervals.size();
    s["total_score"] = r.total_score;
    s["novelty"] = r.novelty;
    s["eval_count"] = r.eval_count;
    s["full_coverage"] = r.full_coverage;
    summary.push_back(std::move(s));
  }
  if (!a.out.empty()) write_json_file(a.out, files.size() == 1 ? files[0] : files);
  emit(summary.size() == 1 ? summary[0] : summary);
  return kExitOk;
}

struct EvalArgs {
  std::string reference;
  std::string test;
  double alpha = 1.0;
  double beta = 0.0;
  std::string mode = "base";
  std::size_t lmin = 2;
  std::size_t lmax = 0;
  double uvd_slack = 1e-3;
  std::size_t trees = 10;
  std::size_t leaf_max = 32;
  std::uint64_t seed = 0;
  bool exact = false;
  bool approximate = false;
  std::string out;
  std::string csv;
  bool no_timing = false;
};

int cmd_eval(const EvalArgs& a, unsigned threads) {
  if (a.lmin < 2) throw UsageError("--lmin must be >= 2");
  if (a.trees == 0 && !a.exact) throw UsageError("--trees 0 requires --exact");
  const auto reference = rdd::read_bundle(a.reference).demos;
  const auto test = rdd::read_bundle(a.test).demos;
  rdd::EvalOptions opts;
  opts.params.alpha = a.alpha;
  opts.params.beta = a.beta;
  opts.params.mode = parse_score_mode(a.mode);
  opts.params.uvd_slack = a.uvd_slack;
  opts.solver.l_min = a.lmin;
  if (a.lmax != 0) opts.solver.l_max = a.lmax;
  opts.index = rdd::IndexOptions{a.trees, a.leaf_max, a.seed, std::nullopt};
  if (a.exact) opts.index.exact = true;
  if (a.approximate) opts.index.exact = false;
  opts.threads = threads;
  const auto rep = rdd::run_eval(reference, test, opts);

  if (!a.out.empty()) write_json_file(a.out, rdd::report_json(rep, !a.no_timing));
  if (!a.csv.empty()) rdd::write_report_csv(a.csv, rep);
  ordered_json j;
  j["miou"] = rep.miou;
  j["baseline_miou"] = rep.baseline_miou;
  j["mean_novelty"] = rep.mean_novelty;
  j["demos"] = rep.demo_ids.size();
  emit(j);
  return kExitOk;
}

struct SynthArgs {
  std::string spec;
  std::string out;
};

int cmd_synth(const SynthArgs& a) {
  std::ifstream in(a.spec);
  if (!in) rdd::fail(rdd::Errc::io, "cannot read spec '" + a.spec + "'");
  rdd::SynthSpec spec;
  try {
    spec = nlohmann::json::parse(in).get<rdd::SynthSpec>();
  } catch (const nlohmann::json::exception& ex) {
    rdd::fail(rdd::Errc::invalid_argument, std::string("malformed synth spec: ") + ex.what());
  }
  const auto corpus = rdd::generate_corpus(spec);
  const fs::path root(a.out);
  rdd::write_bundle(root / "reference", corpus.reference);
  rdd::write_bundle(root / "test", corpus.test);
  ordered_json j;
  j["reference_demos"] = corpus.reference.size();
  j["test_demos"] = corpus.test.size();
  j["reference"] = (root / "reference").string();
  j["test"] = (root / "test").string();
  emit(j);
  return kExitOk;
}

struct BenchArgs {
  std::vector<std::size_t> lengths;
  std::size_t lmax = 100;
  std::string out;
  std::uint64_t work = 40'000'000;
};

int cmd_bench(const BenchArgs& a) {
  if (a.lengths.empty()) throw UsageError("--lengths needs at least one value");
  for (std::size_t n : a.lengths) {
    if (n < 2) throw UsageError("--lengths values must be >= 2");
  }
  if (a.lmax < 2) throw UsageError("--lmax must be >= 2");
  const auto rows = rdd::bench_runtime(a.lengths, a.lmax, a.work);
  if (!a.out.empty()) {
    std::ofstream out(a.out, std::ios::trunc);
    if (!out) rdd::fail(rdd::Errc::io, "cannot write '" + a.out + "'");
    rdd::write_bench_csv(out, rows);
  }
  ordered_json arr = ordered_json::array();
  for (const auto& r : rows) {
    arr.push_back({{"n", r.n}, {"l_max_mode", r.l_max_mode}, {"wall_ms", r.wall_ms},
                   {"eval_count", r.eval_count}});
  }
  emit(arr);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retrieval-based sub-task decomposition of demonstrations"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "Versioned JSON config file with per-subcommand defaults");
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker cap (1 = single core)")->envname("RDD_THREADS");

  const auto modes = CLI::IsMember({"full", "end_only"});
  const auto score_modes = CLI::IsMember({"base", "ood"});

  BuildIndexArgs bi;
  auto* build = app.add_subcommand("build-index", "Build an interval index from a bundle");
  build->configurable();
  build->add_option("--bundle", bi.bundle, "Reference bundle directory")->required();
  build->add_option("--mode", bi.mode, "Feature mode")->check(modes);
  build->add_option("--trees", bi.trees, "Random-projection trees");
  build->add_option("--leaf-max", bi.leaf_max, "Maximum leaf size");
  build->add_flag("--exact", bi.exact, "Force exact search");
  build->add_flag("--approximate", bi.approximate, "Force forest search");
  build->add_option("--seed", bi.seed, "Tree seed");
  build->add_option("--out", bi.out, "Index file to write")->required();

  DecomposeArgs de;
  auto* decompose = app.add_subcommand("decompose", "Decompose a demo against an index");
  decompose->configurable();
  decompose->add_option("--index", de.index, "Index file")->required();
  decompose->add_option("--demo", de.demo, "RDDM matrix file or bundle directory")->required();
  decompose->add_option("--alpha", de.alpha, "Duration-term weight");
  decompose->add_option("--beta", de.beta, "Change-point heuristic weight (ood)");
  decompose->add_option("--mode", de.mode, "Scoring mode")->check(score_modes);
  decompose->add_option("--lmin", de.lmin, "Minimum interval length");
  decompose->add_option("--lmax", de.lmax, "Maximum interval length (0 = unbounded)");
  decompose->add_flag("--strict-cover", de.strict_cover, "Fail when no exact cover exists");
  decompose->add_flag("--prefix-fallback", de.prefix_fallback,
                      "Without an exact cover, return the best cover of the longest prefix");
  decompose->add_option("--uvd-slack", de.uvd_slack, "Monotonicity slack for the heuristic");
  decompose->add_flag("--late-start", de.late_start,
                      "Start the DP outer loop at lmin + 1 (never places a first segment of exactly lmin)");
  decompose->add_flag("--parallel-scoring", de.parallel_scoring, "Score candidates before the DP");
  decompose->add_option("--out", de.out, "Result JSON file");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Decompose a test bundle and report mIoU");
  eval->configurable();
  eval->add_option("--reference", ev.reference, "Reference bundle")->required();
  eval->add_option("--test", ev.test, "Test bundle with ground-truth boundaries")->required();
  eval->add_option("--alpha", ev.alpha);
  eval->add_option("--beta", ev.beta);
  eval->add_option("--mode", ev.mode)->check(score_modes);
  eval->add_option("--lmin", ev.lmin);
  eval->add_option("--lmax", ev.lmax, "0 = unbounded");
  eval->add_option("--uvd-slack", ev.uvd_slack);
  eval->add_option("--trees", ev.trees);
  eval->add_option("--leaf-max", ev.leaf_max);
  eval->add_option("--seed", ev.seed);
  eval->add_flag("--exact", ev.exact);
  eval->add_flag("--approximate", ev.approximate);
  eval->add_option("--out", ev.out, "Report JSON file");
  eval->add_option("--csv", ev.csv, "Per-demo CSV file");
  eval->add_flag("--no-timing", ev.no_timing, "Omit wall times from the JSON report");

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic reference/test corpus");
  synth->configurable();
  synth->add_option("--spec", sy.spec, "Synth spec JSON")->required();
  synth->add_option("--out", sy.out, "Output directory")->required();

  BenchArgs be;
  auto* bench = app.add_subcommand("bench", "Time the DP solver with O(1) stub scoring");
  bench->configurable();
  bench->add_option("--lengths", be.lengths, "Comma-separated sequence lengths")
      ->required()
      ->delimiter(',');
  bench->add_option("--lmax", be.lmax, "Bounded maximum interval length");
  bench->add_option("--out", be.out, "CSV output");
  bench->add_option("--work", be.work, "Approximate evaluations per row (repetitions)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitIo;
  }

  const unsigned workers = rdd::resolve_threads(threads);
  try {
    if (*build) return cmd_build_index(bi);
    if (*decompose) return cmd_decompose(de, workers);
    if (*eval) return cmd_eval(ev, workers);
    if (*synth) return cmd_synth(sy);
    if (*bench) return cmd_bench(be);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const rdd::Error& e) {
    std::cerr << "error [" << rdd::to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitDomain;
}
