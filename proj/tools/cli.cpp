#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>
#include <variant>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mavic/cct.hpp"
#include "mavic/error.hpp"
#include "mavic/hash.hpp"
#include "mavic/metrics.hpp"
#include "mavic/morphology.hpp"
#include "mavic/ontology.hpp"
#include "mavic/pmi.hpp"
#include "mavic/reward.hpp"
#include "mavic/robustness.hpp"

namespace mavic::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level_from_env() {
  const char* raw = std::getenv("MAVIC_CCT_LOG");
  if (raw == nullptr) return LogLevel::Warn;
  const std::string v = ontology::canonicalize(raw);
  if (v == "error") return LogLevel::Error;
  if (v == "info") return LogLevel::Info;
  if (v == "debug" || v == "trace") return LogLevel::Debug;
  return LogLevel::Warn;
}

class Logger {
 public:
  explicit Logger(std::ostream& err) : err_(err), level_(log_level_from_env()) {}
  void warn(const std::string& msg) const { emit(LogLevel::Warn, "warn", msg); }
  void info(const std::string& msg) const { emit(LogLevel::Info, "info", msg); }
  void debug(const std::string& msg) const { emit(LogLevel::Debug, "debug", msg); }

 private:
  void emit(LogLevel at, const char* tag, const std::string& msg) const {
    if (at <= level_) err_ << "[" << tag << "] " << msg << "\n";
  }
  std::ostream& err_;
  LogLevel level_;
};

// What a command consumed and produced, for its manifest.
struct RunRecord {
  std::string command;
  std::vector<std::string> args;
  json config = json::object();
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;   // flag, path
  std::vector<std::pair<std::string, std::string>> outputs;  // flag, path; first is primary
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::string& path) {
  auto doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::InvalidInput, "'" + path + "' is not valid JSON");
  return doc;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  auto out = open_output(path);
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

std::string manifest_path(const std::string& primary_out) { return primary_out + ".manifest.json"; }

void write_manifest(const RunRecord& run, int exit_code) {
  json inputs = json::array();
  for (const auto& [flag, path] : run.inputs) {
    inputs.push_back({{"flag", flag}, {"path", path}, {"sha256", sha256_file(path)}});
  }
  json outputs = json::array();
  for (const auto& [flag, path] : run.outputs) {
    outputs.push_back({{"flag", flag}, {"path", path}, {"sha256", sha256_file(path)}});
  }
  const json manifest = {{"format", "mavic-run-manifest"},
                         {"version", 1},
                         {"tool_version", kToolVersion},
                         {"command", run.command},
                         {"args", run.args},
                         {"config", run.config},
                         {"seed", run.seed},
                         {"inputs", inputs},
                         {"outputs", outputs},
                         {"exit_code", exit_code}};
  write_file(manifest_path(run.outputs.front().second), manifest.dump(2) + "\n");
}

json error_record(ErrorCode code, const std::string& message) {
  return {{"error", to_string(code)}, {"message", message}};
}

// Calls fn(i) for i in [0, n) on up to `jobs` threads; the first exception
// (lowest worker) is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += jobs) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---- commands ----------------------------------------------------------

struct OntologyOpts {
  std::string in, out;
};

int cmd_ontology_build(const OntologyOpts& o, RunRecord& run, const Logger& log) {
  run.inputs = {{"--in", o.in}};
  run.outputs = {{"--out", o.out}};
  const auto taxonomy = ontology::load_taxonomy(o.in);
  write_file(o.out, ontology::to_json(taxonomy).dump(2) + "\n");
  log.info("ontology-build: " + std::to_string(taxonomy.size()) + " nodes, max depth " +
           std::to_string(taxonomy.max_depth()));
  return 0;
}

struct PmiOpts {
  std::string corpus, schema, schema_manifest, taxonomy, out;
  double epsilon = pmi::kDefaultEpsilon;
};

int cmd_pmi_build(const PmiOpts& o, RunRecord& run, const Logger& log) {
  const auto kind = morphology::parse_schema_kind(o.schema);
  run.inputs = {{"--corpus", o.corpus}};
  run.outputs = {{"--out", o.out}};
  run.config = {{"schema", morphology::to_string(kind)}, {"epsilon", o.epsilon}};
  if (!(o.epsilon > 0.0)) throw Error(ErrorCode::InvalidConfig, "epsilon must be > 0");
  if (!o.schema_manifest.empty()) {
    run.inputs.emplace_back("--schema-manifest", o.schema_manifest);
    const auto manifest = read_json_file(o.schema_manifest);
    const auto key = std::string(morphology::to_string(kind));
    const auto hash = manifest.value("/schemas"_json_pointer / key / "hash", std::string());
    if (hash != morphology::schema_hash(kind)) {
      throw Error(ErrorCode::SchemaMismatch, "schema manifest does not match the built-in " + key + " schema");
    }
  }
  std::optional<ontology::Taxonomy> taxonomy;
  if (!o.taxonomy.empty()) {
    run.inputs.emplace_back("--taxonomy", o.taxonomy);
    taxonomy = ontology::load_taxonomy(o.taxonomy);
  }
  std::set<std::string> unresolved;
  pmi::DiagnosisKey key;
  if (taxonomy) {
    key = [&](const std::string& label) {
      if (auto id = reward::resolve_ground_truth(label, *taxonomy)) return *id;
      unresolved.insert(label);
      return label;
    };
  }
  std::ifstream in(o.corpus, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + o.corpus + "'");
  pmi::CorpusReadReport report;
  const auto counts = pmi::read_corpus(in, kind, &report, key);
  if (counts.n_records() == 0) throw Error(ErrorCode::EmptyCorpus, "corpus has no records");
  const auto table = pmi::normalize_weights(counts, {}, o.epsilon);
  write_file(o.out, pmi::to_json(table).dump(2) + "\n");
  if (!report.unknown_features.empty()) {
    log.warn("pmi-build: " + std::to_string(report.unknown_features.size()) +
             " unknown feature mentions ignored");
  }
  for (const auto& label : unresolved) log.warn("pmi-build: diagnosis '" + label + "' not in taxonomy");
  log.info("pmi-build: " + std::to_string(counts.n_records()) + " records, " +
           std::to_string(table.weights().size()) + " diagnoses");
  return 0;
}

struct SchemaOpts {
  std::string out;
};

int cmd_schema(const SchemaOpts& o, RunRecord& run, const Logger&) {
  run.outputs = {{"--out", o.out}};
  write_file(o.out, morphology::schema_manifest().dump(2) + "\n");
  return 0;
}

struct RewardOpts {
  std::string rollouts, taxonomy, config, out;
  std::vector<std::string> pmi;
  std::size_t jobs = 1;
};

int cmd_reward(const RewardOpts& o, RunRecord& run, const Logger& log) {
  run.inputs = {{"--rollouts", o.rollouts}, {"--taxonomy", o.taxonomy}};
  for (const auto& p : o.pmi) run.inputs.emplace_back("--pmi", p);
  run.outputs = {{"--out", o.out}};
  reward::MavicConfig config;
  if (!o.config.empty()) {
    run.inputs.emplace_back("--config", o.config);
    config = reward::MavicConfig::from_json(read_json_file(o.config));
  }
  config.validate();
  run.config = config.to_json();

  const auto taxonomy = ontology::load_taxonomy(o.taxonomy);
  std::vector<pmi::PmiTable> tables;
  tables.reserve(o.pmi.size());
  for (const auto& p : o.pmi) tables.push_back(pmi::load_table(p));
  reward::ScoringContext context;
  context.taxonomy = &taxonomy;
  for (const auto& t : tables) {
    if (context.pmi_tables.count(t.schema_kind())) {
      throw Error(ErrorCode::InvalidConfig, "two PMI tables for schema " +
                                                std::string(morphology::to_string(t.schema_kind())));
    }
    context.pmi_tables[t.schema_kind()] = &t;
  }

  std::ifstream in(o.rollouts, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + o.rollouts + "'");
  auto out = open_output(o.out);

  using Scored = std::variant<std::vector<reward::RewardBreakdown>, json>;
  std::vector<std::vector<reward::Rollout>> pending;
  std::size_t groups_done = 0, error_records = 0;

  auto flush = [&] {
    std::vector<Scored> results(pending.size());
    if (config.median_scope == reward::MedianScope::Batch) {
      auto scored = reward::score_batch(pending, context, config);
      for (std::size_t g = 0; g < pending.size(); ++g) results[g] = std::move(scored[g]);
    } else {
      parallel_for(pending.size(), o.jobs, [&](std::size_t g) {
        try {
          results[g] = reward::score_group(pending[g], context, config);
        } catch (const Error& e) {
          json rec = error_record(e.code(), e.what());
          rec["group_id"] = pending[g].front().group_id;
          results[g] = std::move(rec);
        }
      });
    }
    for (std::size_t g = 0; g < pending.size(); ++g) {
      if (auto* rec = std::get_if<json>(&results[g])) {
        out << rec->dump() << "\n";
        ++error_records;
        continue;
      }
      const auto& scored = std::get<0>(results[g]);
      for (std::size_t i = 0; i < scored.size(); ++i) {
        out << reward::to_json(scored[i], pending[g][i]).dump() << "\n";
      }
    }
    groups_done += pending.size();
    pending.clear();
  };

  // Groups are contiguous runs of one group_id; a group_id seen again after
  // its run ended is an input error.
  const std::size_t chunk = 64 * std::max<std::size_t>(1, o.jobs);
  std::set<std::string> closed;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto doc = json::parse(line, nullptr, false);
    if (doc.is_discarded()) {
      throw Error(ErrorCode::InvalidInput, "rollouts line " + std::to_string(lineno) + ": invalid JSON");
    }
    auto rollout = reward::rollout_from_json(doc);
    if (pending.empty() || pending.back().front().group_id != rollout.group_id) {
      if (!pending.empty()) closed.insert(pending.back().front().group_id);
      if (closed.count(rollout.group_id)) {
        throw Error(ErrorCode::InvalidInput, "rollouts line " + std::to_string(lineno) + ": group '" +
                                                 rollout.group_id + "' is not contiguous");
      }
      if (config.median_scope == reward::MedianScope::Group && pending.size() >= chunk) {
        const std::string last = pending.back().front().group_id;
        flush();
        closed.insert(last);
      }
      pending.emplace_back();
    }
    pending.back().push_back(std::move(rollout));
  }
  if (!pending.empty()) flush();
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + o.out + "'");
  log.info("reward: " + std::to_string(groups_done) + " groups, " + std::to_string(error_records) +
           " error records");
  return error_records == 0 ? 0 : 1;
}

struct CctOpts {
  std::string in, config, baseline, out;
  std::optional<double> lambda, beta;
};

int cmd_cct(const CctOpts& o, RunRecord& run, const Logger& log) {
  run.inputs = {{"--in", o.in}};
  run.outputs = {{"--out", o.out}};
  auto input = cct::cct_input_from_json(read_json_file(o.in));
  std::string baseline = o.baseline;
  if (!o.config.empty()) {
    run.inputs.emplace_back("--config", o.config);
    const auto cfg = read_json_file(o.config);
    if (!cfg.is_object()) throw Error(ErrorCode::InvalidConfig, "CCT config must be an object");
    try {
      input.config.lambda_conf = cfg.value("lambda", input.config.lambda_conf);
      input.config.beta_cons = cfg.value("beta", input.config.beta_cons);
      if (baseline.empty()) baseline = cfg.value("baseline", std::string());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, e.what());
    }
  }
  if (o.lambda) input.config.lambda_conf = *o.lambda;
  if (o.beta) input.config.beta_cons = *o.beta;
  input.config.validate();
  run.config = {{"lambda", input.config.lambda_conf},
                {"beta", input.config.beta_cons},
                {"k", input.rollouts.size()},
                {"baseline", baseline.empty() ? json() : json(baseline)}};
  if (input.config.restriction.option_indices) {
    run.config["option_indices"] = *input.config.restriction.option_indices;
  }

  json result;
  if (baseline.empty() || baseline == "cct") {
    result = cct::to_json(cct::cct_step(input.rollouts, input.config), input.options);
  } else {
    const auto method = cct::parse_baseline(baseline);
    const auto agg = cct::baseline_aggregate(input.rollouts, method, input.config);
    std::size_t choice = 0;
    if (const auto* dist = std::get_if<cct::ProbDist>(&agg)) {
      result["aggregate"] = dist->values();
      choice = cct::argmax(*dist);
    } else {
      choice = std::get<std::size_t>(agg);
    }
    result["argmax"] = choice;
    if (input.options && choice < input.options->size()) result["decision"] = (*input.options)[choice];
  }
  result["lambda"] = input.config.lambda_conf;
  result["beta"] = input.config.beta_cons;
  result["method"] = baseline.empty() ? "cct" : baseline;
  write_file(o.out, result.dump(2) + "\n");
  log.info("cct: aggregated " + std::to_string(input.rollouts.size()) + " rollouts");
  return 0;
}

struct SimulateOpts {
  robustness::SweepConfig sweep;
  std::string mode = "sampled";
  std::string out, summary;
};

int cmd_simulate(SimulateOpts o, RunRecord& run, const Logger& log) {
  const std::string summary = o.summary.empty() ? o.out + ".summary.json" : o.summary;
  run.outputs = {{"--out", o.out}, {"--summary", summary}};
  if (o.mode == "sampled") {
    o.sweep.mode = robustness::SweepMode::Sampled;
  } else if (o.mode == "constructed") {
    o.sweep.mode = robustness::SweepMode::Constructed;
  } else {
    throw Error(ErrorCode::InvalidConfig, "mode must be 'sampled' or 'constructed'");
  }
  run.seed = o.sweep.seed;
  auto snapshot = o.sweep.to_json();
  snapshot.erase("jobs");  // output does not depend on it
  run.config = snapshot;
  const auto result = robustness::sweep(o.sweep);
  {
    auto out = open_output(o.out);
    result.write_csv(out);
    if (!out) throw Error(ErrorCode::IoError, "write failed for '" + o.out + "'");
  }
  write_file(summary, result.summary(o.sweep).dump(2) + "\n");
  log.info("simulate: " + std::to_string(result.cells.size()) + " cells, " +
           std::to_string(result.total_violations()) + " violations");
  return 0;
}

struct MetricsOpts {
  std::string kind, in, out;
};

json metrics_result(const std::string& kind, const json& doc, const Logger& log) {
  try {
    if (kind == "fairness") {
      const auto acc = (doc.is_object() ? doc.at("accuracies") : doc).get<std::vector<double>>();
      return {{"fairness_ratio", metrics::fairness_ratio(acc)}};
    }
    if (kind == "judge") {
      auto one = [&](const json& rec) {
        const auto counts = metrics::JudgeCounts::from_json(rec);
        if (counts.inconsistent()) log.warn("judge: labeled claims exceed total_ref_claims");
        return json{{"overall", metrics::judge_overall(counts)}, {"inconsistent", counts.inconsistent()}};
      };
      if (!doc.is_array()) return one(doc);
      json out = json::array();
      for (const auto& rec : doc) out.push_back(one(rec));
      return {{"results", out}};
    }
    if (kind == "combined") {
      const double r = doc.at("reasoning").get<double>();
      const double d = doc.at("diagnosis").get<double>();
      return {{"overall", metrics::combined_overall(r, d)}};
    }
    if (kind == "agreement") {
      const auto& arr = doc.is_object() ? doc.at("pairs") : doc;
      std::vector<std::pair<double, double>> pairs;
      for (const auto& p : arr) {
        if (p.is_array() && p.size() == 2) {
          pairs.emplace_back(p[0].get<double>(), p[1].get<double>());
        } else {
          pairs.emplace_back(p.at("a").get<double>(), p.at("b").get<double>());
        }
      }
      return metrics::agreement(pairs).to_json();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("metrics input: ") + e.what());
  }
  throw Error(ErrorCode::InvalidInput, "unknown metrics kind '" + kind + "'");
}

int cmd_metrics(const MetricsOpts& o, RunRecord& run, const Logger& log) {
  run.inputs = {{"--in", o.in}};
  run.outputs = {{"--out", o.out}};
  run.config = {{"kind", o.kind}};
  const json result = metrics_result(o.kind, read_json_file(o.in), log);
  write_file(o.out, result.dump(2) + "\n");
  return 0;
}

struct ReplayOpts {
  std::string manifest, out_dir;
};

// Re-runs a recorded command with its outputs redirected into out_dir and
// compares output hashes. Prints a JSON report; exit 0 iff all match.
int cmd_replay(const ReplayOpts& o, std::ostream& err) {
  const auto manifest = read_json_file(o.manifest);
  if (manifest.value("format", "") != "mavic-run-manifest") {
    throw Error(ErrorCode::InvalidInput, "'" + o.manifest + "' is not a run manifest");
  }
  for (const auto& input : manifest.at("inputs")) {
    const auto path = input.at("path").get<std::string>();
    if (sha256_file(path) != input.at("sha256").get<std::string>()) {
      throw Error(ErrorCode::InvalidInput, "input '" + path + "' changed since the recorded run");
    }
  }
  fs::path dir = o.out_dir;
  if (dir.empty()) {
    dir = fs::temp_directory_path() / ("mavic-replay-" + sha256_hex(read_file(o.manifest)).substr(0, 16));
  }
  fs::create_directories(dir);

  std::map<std::string, std::string> redirect;  // recorded path -> replay path
  std::set<std::string> output_flags;
  for (const auto& output : manifest.at("outputs")) {
    const auto path = output.at("path").get<std::string>();
    redirect[path] = (dir / fs::path(path).filename()).string();
    output_flags.insert(output.at("flag").get<std::string>());
  }
  auto args = manifest.at("args").get<std::vector<std::string>>();
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto eq = args[i].find('=');
    const std::string flag = args[i].substr(0, eq);
    if (!output_flags.count(flag)) continue;
    if (eq != std::string::npos) {
      const auto value = args[i].substr(eq + 1);
      if (redirect.count(value)) args[i] = flag + "=" + redirect[value];
    } else if (i + 1 < args.size() && redirect.count(args[i + 1])) {
      args[i + 1] = redirect[args[i + 1]];
      ++i;
    }
  }

  const int code = run(args, err);
  bool all_match = code == manifest.value("exit_code", 0);
  json outputs = json::array();
  for (const auto& output : manifest.at("outputs")) {
    const auto recorded = output.at("path").get<std::string>();
    const auto& replayed = redirect[recorded];
    const auto expected = output.at("sha256").get<std::string>();
    const std::string actual = fs::exists(replayed) ? sha256_file(replayed) : std::string();
    const bool match = actual == expected;
    all_match = all_match && match;
    outputs.push_back({{"flag", output.at("flag")},
                       {"recorded_path", recorded},
                       {"replay_path", replayed},
                       {"expected_sha256", expected},
                       {"actual_sha256", actual},
                       {"match", match}});
  }
  const json report = {{"manifest", o.manifest}, {"exit_code", code}, {"match", all_match}, {"outputs", outputs}};
  std::cout << report.dump(2) << std::endl;
  return all_match ? 0 : 1;
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& err) {
  const Logger log(err);
  CLI::App app{"mavic: reward scoring, CCT aggregation and robustness sweeps"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  std::uint64_t seed = 0;

  OntologyOpts onto;
  auto* c_onto = app.add_subcommand("ontology-build", "validate and compile a taxonomy");
  c_onto->add_option("--in", onto.in, "taxonomy JSON")->required();
  c_onto->add_option("--out", onto.out, "compiled taxonomy")->required();

  PmiOpts pmio;
  auto* c_pmi = app.add_subcommand("pmi-build", "build a PMI weight table from a corpus");
  c_pmi->add_option("--corpus", pmio.corpus, "corpus JSONL")->required();
  c_pmi->add_option("--schema", pmio.schema, "derm7pt | skincon")->required();
  c_pmi->add_option("--schema-manifest", pmio.schema_manifest, "schema manifest to verify against");
  c_pmi->add_option("--taxonomy", pmio.taxonomy, "key diagnoses by taxonomy node id");
  c_pmi->add_option("--epsilon", pmio.epsilon, "PMI smoothing");
  c_pmi->add_option("--out", pmio.out, "table JSON")->required();

  SchemaOpts scho;
  auto* c_schema = app.add_subcommand("schema", "write the schema manifest");
  c_schema->add_option("--out", scho.out, "manifest JSON")->required();

  RewardOpts rewo;
  auto* c_reward = app.add_subcommand("reward", "score rollout groups");
  c_reward->add_option("--rollouts,--in", rewo.rollouts, "rollout JSONL")->required();
  c_reward->add_option("--taxonomy", rewo.taxonomy, "taxonomy JSON")->required();
  c_reward->add_option("--pmi", rewo.pmi, "PMI table JSON (one per schema)");
  c_reward->add_option("--config", rewo.config, "reward config JSON");
  c_reward->add_option("--jobs", rewo.jobs, "worker threads")->check(CLI::PositiveNumber);
  c_reward->add_option("--out", rewo.out, "breakdown JSONL")->required();

  CctOpts ccto;
  auto* c_cct = app.add_subcommand("cct", "aggregate rollout distributions");
  c_cct->add_option("--in", ccto.in, "CCT input JSON")->required();
  c_cct->add_option("--config", ccto.config, "JSON with lambda, beta, baseline");
  c_cct->add_option("--lambda", ccto.lambda, "confidence weight");
  c_cct->add_option("--beta", ccto.beta, "consistency weight");
  c_cct->add_option("--baseline", ccto.baseline, "cct | vote | meanprob | confonly | consonly");
  c_cct->add_option("--out", ccto.out, "result JSON")->required();

  SimulateOpts simo;
  auto* c_sim = app.add_subcommand("simulate", "contamination robustness sweep");
  c_sim->add_option("--mode", simo.mode, "sampled | constructed");
  c_sim->add_option("--dim", simo.sweep.dim, "simplex dimension");
  c_sim->add_option("--k", simo.sweep.ks, "rollout counts")->delimiter(',');
  c_sim->add_option("--eps", simo.sweep.epsilon, "contamination rate");
  c_sim->add_option("--sigma", simo.sweep.sigma, "good spread");
  c_sim->add_option("--delta", simo.sweep.delta, "bad separation");
  c_sim->add_option("--alpha", simo.sweep.alpha, "good-radius quantile level");
  c_sim->add_option("--beta-grid", simo.sweep.betas, "beta values")->delimiter(',');
  c_sim->add_option("--lambda-grid", simo.sweep.lambdas, "lambda values")->delimiter(',');
  c_sim->add_option("--trials", simo.sweep.trials, "trials per K");
  c_sim->add_option("--jobs", simo.sweep.jobs, "worker threads")->check(CLI::PositiveNumber);
  c_sim->add_option("--out", simo.out, "results CSV")->required();
  c_sim->add_option("--summary", simo.summary, "summary JSON (default <out>.summary.json)");

  MetricsOpts meto;
  auto* c_met = app.add_subcommand("metrics", "evaluation metrics");
  c_met->add_option("kind", meto.kind, "fairness | judge | combined | agreement")->required();
  c_met->add_option("--in", meto.in, "input JSON")->required();
  c_met->add_option("--out", meto.out, "result JSON")->required();

  ReplayOpts repo;
  auto* c_replay = app.add_subcommand("replay", "re-run a manifest and compare outputs");
  c_replay->add_option("--manifest", repo.manifest, "run manifest")->required();
  c_replay->add_option("--out-dir", repo.out_dir, "directory for replayed outputs");

  for (auto* sub : {c_onto, c_pmi, c_schema, c_reward, c_cct, c_sim, c_met}) {
    sub->add_option("--seed", seed, "random seed");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, std::cout, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, std::cout, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, std::cout, err);
  } catch (const CLI::ParseError& e) {
    err << error_record(ErrorCode::InvalidInput, e.what()).dump() << "\n";
    return 1;
  }
  simo.sweep.seed = seed;

  RunRecord record;
  record.args = args;
  record.seed = seed;
  try {
    int code = 0;
    if (c_replay->parsed()) return cmd_replay(repo, err);
    if (c_onto->parsed()) {
      record.command = "ontology-build";
      code = cmd_ontology_build(onto, record, log);
    } else if (c_pmi->parsed()) {
      record.command = "pmi-build";
      code = cmd_pmi_build(pmio, record, log);
    } else if (c_schema->parsed()) {
      record.command = "schema";
      code = cmd_schema(scho, record, log);
    } else if (c_reward->parsed()) {
      record.command = "reward";
      code = cmd_reward(rewo, record, log);
    } else if (c_cct->parsed()) {
      record.command = "cct";
      code = cmd_cct(ccto, record, log);
    } else if (c_sim->parsed()) {
      record.command = "simulate";
      code = cmd_simulate(simo, record, log);
    } else if (c_met->parsed()) {
      record.command = "metrics";
      code = cmd_metrics(meto, record, log);
    }
    write_manifest(record, code);
    log.debug("manifest: " + manifest_path(record.outputs.front().second));
    return code;
  } catch (const Error& e) {
    err << error_record(e.code(), e.what()).dump() << "\n";
  } catch (const std::exception& e) {
    err << error_record(ErrorCode::InvalidInput, e.what()).dump() << "\n";
  }
  return 1;
}

}  // namespace mavic::cli
