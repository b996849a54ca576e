// Copyright 2026 The Pinhole Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pinhole/cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pinhole/asv.hpp"
#include "pinhole/dispersion.hpp"
#include "pinhole/embedding.hpp"
#include "pinhole/error.hpp"
#include "pinhole/io.hpp"
#include "pinhole/mapping.hpp"
#include "pinhole/simulation.hpp"

namespace pinhole {

namespace fs = std::filesystem;

namespace {

nlohmann::json parse_json_file(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
}

std::optional<std::size_t> nontarget_limit(long long flag) {
  if (flag < 0) return kUnbounded;
  if (flag == 0) throw ConfigError("--max-nontarget must be positive (or -1 for unbounded)");
  return static_cast<std::size_t>(flag);
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

/// Writes several files; on failure, removes the ones already written.
class OutputBatch {
 public:
  void add(fs::path path, std::string contents) {
    files_.emplace_back(std::move(path), std::move(contents));
  }

  void commit() {
    std::vector<fs::path> written;
    try {
      for (const auto& [path, contents] : files_) {
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        write_file_atomic(path, contents);
        written.push_back(path);
      }
    } catch (...) {
      std::error_code ignored;
      for (const auto& p : written) fs::remove(p, ignored);
      throw;
    }
  }

 private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

std::string markdown_eer(const EerResult& r) {
  std::ostringstream md;
  md << "| EER (%) | Threshold | Targets | Nontargets |\n|---|---|---|---|\n| "
     << format_double(100.0 * r.eer) << " | " << format_double(r.threshold) << " | "
     << r.n_target << " | " << r.n_nontarget << " |\n";
  return md.str();
}

std::string markdown_scatter(const ScatterReport& r) {
  std::ostringstream md;
  md << "| Tr(W'SwW) | Tr(W'SbW) | J (trace ratio) | J (LDA) | N | S |\n|---|---|---|---|---|---|\n| "
     << format_double(r.tr_w) << " | " << format_double(r.tr_b) << " | "
     << format_double(r.j_trace_ratio) << " | " << format_double(r.j_lda) << " | " << r.n
     << " | " << r.s << " |\n";
  return md.str();
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string out_dir;
  std::string format = "markdown";
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  SimulationConfig config = a.config.empty()
                                ? SimulationConfig::defaults()
                                : simulation_config_from_json(parse_json_file(a.config));
  std::vector<ReplicateData> data;
  const ExperimentReport report = run_simulation(config, &data);
  const auto checks = trend_check(report);

  nlohmann::json j = to_json(report);
  j["trend_check"] = to_json(checks);
  const std::string markdown = render_markdown(report, checks);

  const fs::path dir(a.out_dir);
  OutputBatch batch;
  for (const auto& rep : data) {
    const fs::path seed_dir = dir / ("seed_" + std::to_string(rep.seed));
    batch.add(seed_dir / "org.csv", format_embeddings(rep.population));
    batch.add(seed_dir / "cohort.csv", format_embeddings(rep.cohort));
    for (std::size_t i = 0; i < rep.anonymized.size(); ++i) {
      batch.add(seed_dir / (config.mappings[i].label + ".csv"),
                format_embeddings(rep.anonymized[i]));
    }
  }
  batch.add(dir / "report.json", dump(j));
  batch.add(dir / "report.md", markdown);
  batch.commit();

  out << (a.format == "json" ? dump(j) : markdown);
  return kExitOk;
}

struct AnonymizeArgs {
  std::string embeddings;
  std::string cohort;
  std::string mapping;
  std::string out;
};

int cmd_anonymize(const AnonymizeArgs& a, std::ostream& out) {
  const MappingConfig config = mapping_config_from_json(parse_json_file(a.mapping));
  const EmbeddingSet set = load_embeddings(a.embeddings);
  const EmbeddingSet cohort = load_embeddings(a.cohort);
  const AnonymizationResult result = anonymize_detailed(set, cohort, config);

  auto hashes = nlohmann::json::array();
  std::set<std::string> distinct;
  for (std::size_t i = 0; i < result.set.size(); ++i) {
    const std::string h = vector_hash(result.pseudo[i]);
    distinct.insert(h);
    hashes.push_back({{"utt_id", result.set[i].utt_id}, {"pseudo_hash", h}});
  }
  nlohmann::json sidecar = {{"config", to_json(config)},
                            {"residual_seed", config.residual_seed},
                            {"assignment_seed", config.assignment_seed},
                            {"n_records", result.set.size()},
                            {"distinct_pseudo", distinct.size()},
                            {"pseudo", std::move(hashes)}};
  OutputBatch batch;
  batch.add(a.out, format_embeddings(result.set));
  batch.add(a.out + ".json", dump(sidecar));
  batch.commit();
  out << "anonymized " << result.set.size() << " records (" << to_string(config.mode) << ", "
      << distinct.size() << " distinct pseudo voices) -> " << a.out << "\n";
  return kExitOk;
}

struct DispersionArgs {
  std::string embeddings;
  double ridge = kDefaultRidge;
  std::string partition;
  std::string format = "json";
};

int cmd_dispersion(const DispersionArgs& a, std::ostream& out) {
  EmbeddingSet set = load_embeddings(a.embeddings);
  if (!a.partition.empty()) set = filter_partition(set, a.partition);
  const ScatterReport report = dispersion_of(set, a.ridge);
  out << (a.format == "json" ? dump(to_json(report)) : markdown_scatter(report));
  return kExitOk;
}

struct EvalArgs {
  std::string enroll;
  std::string test;
  std::string mode;
  std::uint64_t seed = 0;
  long long max_nontarget = -1;
  std::string trials_out;
  std::string scores_out;
  bool by_partition = false;
  std::string format = "json";
};

bool same_utterances(const EmbeddingSet& a, const EmbeddingSet& b) {
  if (a.size() != b.size()) return false;
  for (const auto& r : a) {
    if (!b.contains(r.utt_id)) return false;
  }
  return true;
}

struct EvalRun {
  std::vector<Trial> trials;
  ScoreSet scores;
  EerResult result;
};

// link: when both files hold the same utterances, enrollment and test come
// from the even/odd split; otherwise the two files are used whole. deid
// always splits (the two files must describe the same utterances).
EvalRun evaluate_pair(const EmbeddingSet& enroll, const EmbeddingSet& test, bool deid,
                      std::uint64_t seed, std::optional<std::size_t> limit) {
  if (enroll.dim() != test.dim()) throw DataError("enrollment and test dimensions differ");
  EvalRun run;
  if (deid || same_utterances(enroll, test)) {
    const EnrollTestSplit split = parity_split(enroll, test);
    run.trials = generate_trials(split.enroll, split.test, limit, seed);
    run.scores = score_trials(split.enroll, split.test, run.trials);
  } else {
    run.trials = generate_trials(enroll, test, limit, seed);
    run.scores = score_trials(enroll, test, run.trials);
  }
  run.result = eer(run.scores);
  return run;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const bool deid = a.mode == "deid";
  const auto limit = nontarget_limit(a.max_nontarget);
  const EmbeddingSet enroll = load_embeddings(a.enroll);
  const EmbeddingSet test = load_embeddings(a.test);
  const EvalRun run = evaluate_pair(enroll, test, deid, a.seed, limit);

  nlohmann::json j = to_json(run.result);
  if (a.by_partition) {
    std::vector<PartitionEer> parts;
    for (const auto& label : partitions(enroll)) {
      parts.push_back({label, evaluate_pair(filter_partition(enroll, label),
                                            filter_partition(test, label), deid, a.seed, limit)
                                  .result});
    }
    j["by_partition"] = to_json(summarize_partitions(std::move(parts)));
  }

  OutputBatch batch;
  if (!a.trials_out.empty()) {
    std::ostringstream ss;
    write_trials(run.trials, ss);
    batch.add(a.trials_out, ss.str());
  }
  if (!a.scores_out.empty()) {
    std::ostringstream ss;
    write_scores(run.scores, ss);
    batch.add(a.scores_out, ss.str());
  }
  batch.commit();
  out << (a.format == "json" ? dump(j) : markdown_eer(run.result));
  return kExitOk;
}

struct TrialsArgs {
  std::string enroll;
  std::string test;
  std::uint64_t seed = 0;
  long long max_nontarget = -1;
  std::string out;
};

int cmd_trials(const TrialsArgs& a, std::ostream& out) {
  const auto limit = nontarget_limit(a.max_nontarget);
  const auto trials = generate_trials(load_embeddings(a.enroll), load_embeddings(a.test), limit,
                                      a.seed);
  std::ostringstream ss;
  write_trials(trials, ss);
  if (a.out.empty()) {
    out << ss.str();
  } else {
    write_file_atomic(a.out, ss.str());
  }
  return kExitOk;
}

struct ScoreArgs {
  std::string enroll;
  std::string test;
  std::string trials;
  std::string out;
};

int cmd_score(const ScoreArgs& a, std::ostream& out) {
  std::istringstream trial_text(read_file(a.trials));
  const auto trials = read_trials(trial_text);
  const ScoreSet scores = score_trials(load_embeddings(a.enroll), load_embeddings(a.test), trials);
  std::ostringstream ss;
  write_scores(scores, ss);
  if (a.out.empty()) {
    out << ss.str();
  } else {
    write_file_atomic(a.out, ss.str());
  }
  return kExitOk;
}

struct EerArgs {
  std::string trials;
  std::string scores;
  std::string format = "json";
};

int cmd_eer(const EerArgs& a, std::ostream& out) {
  std::istringstream trial_text(read_file(a.trials));
  std::istringstream score_text(read_file(a.scores));
  const ScoreSet scores = attach_labels(read_trials(trial_text), read_scores(score_text));
  const EerResult result = eer(scores);
  out << (a.format == "json" ? dump(to_json(result)) : markdown_eer(result));
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"pinhole: speaker-anonymization evaluation in embedding space"};
  app.name("pinhole");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  const auto formats = CLI::IsMember({"json", "markdown"});

  SimulateArgs simulate;
  auto* sim = app.add_subcommand("simulate", "Run the seeded pinhole simulation end to end");
  sim->add_option("--config", simulate.config,
                  "Simulation config JSON (defaults are used when omitted)")
      ->check(CLI::ExistingFile);
  sim->add_option("--out", simulate.out_dir, "Output directory for CSVs and reports")->required();
  sim->add_option("--format", simulate.format, "Report printed to stdout")->check(formats);

  AnonymizeArgs anon;
  auto* an = app.add_subcommand("anonymize", "Apply a pseudo-speaker mapping to embeddings");
  an->add_option("--embeddings", anon.embeddings, "Embedding CSV to anonymize")->required();
  an->add_option("--cohort", anon.cohort, "Cohort embedding CSV for pseudo speakers")->required();
  an->add_option("--mapping", anon.mapping, "Mapping config JSON")->required();
  an->add_option("--out", anon.out, "Output CSV; a <out>.json sidecar is written next to it")
      ->required();

  DispersionArgs disp;
  auto* di = app.add_subcommand("dispersion", "Scatter matrices and ratio J of an embedding set");
  di->add_option("--embeddings", disp.embeddings, "Embedding CSV")->required();
  di->add_option("--ridge", disp.ridge, "Ridge on S_w, relative to trace(S_w)/d")
      ->capture_default_str();
  di->add_option("--partition", disp.partition, "Only use records of this partition");
  di->add_option("--format", disp.format, "Output format")->check(formats);

  EvalArgs ev;
  auto* evc = app.add_subcommand("eval", "Linkability or de-identification EER");
  evc->add_option("--enroll", ev.enroll, "Enrollment-side embedding CSV")->required();
  evc->add_option("--test", ev.test, "Test-side embedding CSV")->required();
  evc->add_option("--mode", ev.mode, "link: both sides anonymized; deid: original enrollment")
      ->required()
      ->check(CLI::IsMember({"link", "deid"}));
  evc->add_option("--seed", ev.seed, "Trial generation seed")->capture_default_str();
  evc->add_option("--max-nontarget", ev.max_nontarget,
                  "Nontarget trials per test utterance (-1: all)")
      ->capture_default_str();
  evc->add_option("--trials-out", ev.trials_out, "Also write the trial list here");
  evc->add_option("--scores-out", ev.scores_out, "Also write the scores here");
  evc->add_flag("--by-partition", ev.by_partition, "Add per-partition EERs and their averages");
  evc->add_option("--format", ev.format, "Output format")->check(formats);

  TrialsArgs tr;
  auto* trc = app.add_subcommand("trials", "Generate a trial list");
  trc->add_option("--enroll", tr.enroll, "Enrollment embedding CSV")->required();
  trc->add_option("--test", tr.test, "Test embedding CSV")->required();
  trc->add_option("--seed", tr.seed, "Nontarget selection seed")->capture_default_str();
  trc->add_option("--max-nontarget", tr.max_nontarget,
                  "Nontarget trials per test utterance (-1: all)")
      ->capture_default_str();
  trc->add_option("--out", tr.out, "Trial file (stdout when omitted)");

  ScoreArgs sc;
  auto* scc = app.add_subcommand("score", "Cosine-score a trial list");
  scc->add_option("--enroll", sc.enroll, "Enrollment embedding CSV")->required();
  scc->add_option("--test", sc.test, "Test embedding CSV")->required();
  scc->add_option("--trials", sc.trials, "Trial file")->required();
  scc->add_option("--out", sc.out, "Score file (stdout when omitted)");

  EerArgs ea;
  auto* eac = app.add_subcommand("eer", "Equal error rate of a score file");
  eac->add_option("--trials", ea.trials, "Trial file with target/nontarget labels")->required();
  eac->add_option("--scores", ea.scores, "Score file")->required();
  eac->add_option("--format", ea.format, "Output format")->check(formats);

  std::vector<std::string> storage{"pinhole"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(simulate, out);
    if (an->parsed()) return cmd_anonymize(anon, out);
    if (di->parsed()) return cmd_dispersion(disp, out);
    if (evc->parsed()) return cmd_eval(ev, out);
    if (trc->parsed()) return cmd_trials(tr, out);
    if (scc->parsed()) return cmd_score(sc, out);
    if (eac->parsed()) return cmd_eer(ea, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace pinhole
