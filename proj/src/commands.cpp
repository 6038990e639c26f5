#include "clarity/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <unordered_set>

#include "CLI11.hpp"
#include "clarity/coherency_graph.hpp"
#include "clarity/corpus_store.hpp"
#include "clarity/edge_oracle.hpp"
#include "clarity/errors.hpp"
#include "clarity/eval_harness.hpp"
#include "clarity/hashing.hpp"
#include "clarity/pipeline.hpp"
#include "wire_protocol.hpp"

namespace clarity {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flags shared by the pipeline subcommands. Only flags actually given override the config file.
struct Overrides {
  std::string config;
  std::string method;
  std::size_t k = 0;
  double threshold = 0.0;
  std::string scorer;
  std::string cache_dir;
  uint64_t seed = 0;
  std::string out;
  std::string index;
  std::string corpus;
  std::string dataset;
  std::string format;
  std::string split;
  std::size_t workers = 0;
  double nsigma_percent = 0.0;
  long timeout_ms = 0;

  CLI::Option* k_opt = nullptr;
  CLI::Option* threshold_opt = nullptr;
  CLI::Option* scorer_opt = nullptr;
  CLI::Option* cache_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* index_opt = nullptr;
  CLI::Option* corpus_opt = nullptr;
  CLI::Option* dataset_opt = nullptr;
  CLI::Option* format_opt = nullptr;
  CLI::Option* split_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
  CLI::Option* nsigma_opt = nullptr;
  CLI::Option* timeout_opt = nullptr;

  void add_common(CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
    out_opt = cmd->add_option("--out", out, "Output directory");
    cache_opt = cmd->add_option("--cache-dir", cache_dir, "Cache directory (default $CLARITY_CACHE_DIR)");
    seed_opt = cmd->add_option("--seed", seed, "Random seed");
  }
  void add_pipeline(CLI::App* cmd) {
    k_opt = cmd->add_option("--k", k, "Retrieval depth");
    threshold_opt = cmd->add_option("--threshold", threshold, "Edge threshold on p(next)");
    scorer_opt = cmd->add_option("--scorer", scorer, "heuristic | pair-file:<path> | external:<command>");
    index_opt = cmd->add_option("--index", index, "Index directory");
    dataset_opt = cmd->add_option("--dataset", dataset, "Dataset file");
    format_opt = cmd->add_option("--format", format, "Dataset format: clariq | ambignq");
    split_opt = cmd->add_option("--split", split, "Dataset split label: train | dev | test");
    workers_opt = cmd->add_option("--workers", workers, "Worker threads");
    nsigma_opt = cmd->add_option("--nsigma-percent", nsigma_percent, "n(sigma%) cutoff percentage");
    timeout_opt = cmd->add_option("--scorer-timeout-ms", timeout_ms, "Per-batch scorer timeout")
                      ->check(CLI::PositiveNumber);
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!config.empty()) {
      std::ifstream in(config);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw UsageError("config " + config + ": " + e.what());
      }
      try {
        c = RunConfig::from_json(j);
      } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
      }
    }
    const auto set = [](CLI::Option* o) { return o != nullptr && o->count() > 0; };
    if (set(k_opt)) c.k = k;
    if (set(threshold_opt)) c.threshold = threshold;
    if (set(scorer_opt)) c.scorer = scorer;
    if (set(seed_opt)) c.seed = seed;
    if (set(out_opt)) c.out_dir = out;
    if (set(index_opt)) c.index_dir = index;
    if (set(corpus_opt)) c.corpus = corpus;
    if (set(dataset_opt)) c.dataset = dataset;
    if (set(format_opt)) c.dataset_format = format;
    if (set(split_opt)) c.split = split;
    if (set(workers_opt)) c.workers = workers;
    if (set(nsigma_opt)) c.nsigma_percent = nsigma_percent;
    if (set(timeout_opt)) c.scorer_timeout = std::chrono::milliseconds(timeout_ms);
    if (set(cache_opt)) {
      c.cache_dir = cache_dir;
    } else if (!c.cache_dir) {
      if (const char* env = std::getenv("CLARITY_CACHE_DIR"); env && *env) c.cache_dir = env;
    }
    try {
      c.validate();
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

void require_path(const fs::path& p, const char* what) {
  if (p.empty()) throw UsageError(std::string("no ") + what + " given");
  if (!fs::exists(p)) throw UsageError(std::string(what) + " not found: " + p.string());
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

// Adds or replaces one entry of <dir>/manifest.json.
void record_manifest(const fs::path& dir, const std::string& entry, const std::string& command_line,
                     const RunConfig& config, const std::vector<fs::path>& inputs) {
  const auto path = dir / "manifest.json";
  nlohmann::json manifest = nlohmann::json::object();
  if (std::ifstream in(path); in) {
    try {
      manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception&) {
      manifest = nlohmann::json::object();
    }
  }
  nlohmann::json checksums = nlohmann::json::object();
  for (const auto& p : inputs) {
    if (p.empty()) continue;
    if (fs::is_directory(p)) {
      if (fs::exists(p / "meta.json")) checksums[(p / "meta.json").string()] = sha256_file(p / "meta.json");
    } else if (fs::exists(p)) {
      checksums[p.string()] = sha256_file(p);
    }
  }
  manifest["tool"] = "clarity";
  manifest["version"] = std::string(kToolVersion);
  manifest["entries"][entry] = {{"command", command_line}, {"config", config.to_json()}, {"inputs", checksums}};
  write_text(path, manifest.dump(2) + "\n");
}

std::shared_ptr<const Index> open_index(const RunConfig& config) {
  require_path(config.index_dir, "index directory");
  return std::make_shared<const Index>(Index::load(config.index_dir));
}

std::vector<fs::path> scorer_inputs(const RunConfig& config) {
  constexpr std::string_view kPairFile = "pair-file:";
  if (std::string_view(config.scorer).starts_with(kPairFile)) return {config.scorer.substr(kPairFile.size())};
  return {};
}

std::string join(const std::vector<std::string>& args) {
  std::string s;
  for (std::size_t i = 1; i < args.size(); ++i) s += (i > 1 ? " " : "") + args[i];
  return s;
}

const std::vector<double> kDefaultNSigmaGrid{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};

const CLI::IsMember kMethods({"nc", "anc", "wig", "nqc", "smv", "nsigma"});

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Query clarity prediction from retrieved-passage coherency networks", "clarity"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  // index
  Overrides index_flags;
  double k1 = Bm25Params{}.k1;
  double b = Bm25Params{}.b;
  auto* index_cmd = app.add_subcommand("index", "Build a BM25 index from a <pid>\\t<text> corpus");
  index_flags.add_common(index_cmd);
  index_flags.corpus_opt = index_cmd->add_option("--corpus", index_flags.corpus, "Corpus TSV");
  auto* k1_opt = index_cmd->add_option("--k1", k1, "BM25 k1");
  auto* b_opt = index_cmd->add_option("--b", b, "BM25 b");

  // predict
  Overrides predict_flags;
  std::string dump_pairs;
  auto* predict_cmd = app.add_subcommand("predict", "Score every dataset query with one method");
  predict_flags.add_common(predict_cmd);
  predict_flags.add_pipeline(predict_cmd);
  predict_cmd->add_option("--method", predict_flags.method, "nc | anc | wig | nqc | smv | nsigma")
      ->required()
      ->check(kMethods);
  predict_cmd->add_option("--dump-pairs", dump_pairs,
                          "Write the pair requests of every query to this file instead of scoring");

  // evaluate
  Overrides eval_flags;
  std::vector<std::string> run_files;
  std::vector<std::string> dev_runs;
  std::string dev_dataset;
  bool significance = false;
  std::size_t resamples = 10000;
  double bucket_threshold = 0.0;
  auto* eval_cmd = app.add_subcommand("evaluate", "AUC/ROC, significance and AmbigNQ bucket reports for run files");
  eval_flags.add_common(eval_cmd);
  eval_flags.dataset_opt = eval_cmd->add_option("--dataset", eval_flags.dataset, "Dataset file");
  eval_flags.format_opt = eval_cmd->add_option("--format", eval_flags.format, "clariq | ambignq");
  eval_flags.split_opt = eval_cmd->add_option("--split", eval_flags.split, "Split label");
  eval_cmd->add_option("--run", run_files, "Run file (repeatable)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_flag("--significance", significance, "Paired bootstrap p-values between all runs");
  eval_cmd->add_option("--resamples", resamples, "Bootstrap resamples")->check(CLI::PositiveNumber);
  auto* bucket_threshold_opt =
      eval_cmd->add_option("--bucket-threshold", bucket_threshold, "Fixed ambiguity threshold for bucket reports");
  eval_cmd->add_option("--dev-run", dev_runs, "ClariQ dev run per method, for threshold selection")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--dev-dataset", dev_dataset, "ClariQ dev file matching --dev-run");

  // sweep
  Overrides sweep_flags;
  std::vector<std::size_t> ks;
  std::vector<double> nsigma_grid;
  auto* sweep_cmd = app.add_subcommand("sweep", "Dev-split AUC for each retrieval depth k");
  sweep_flags.add_common(sweep_cmd);
  sweep_flags.add_pipeline(sweep_cmd);
  sweep_cmd->add_option("--method", sweep_flags.method, "nc | anc | wig | nqc | smv | nsigma")
      ->required()
      ->check(kMethods);
  sweep_cmd->add_option("--ks", ks, "k values (default 10,20,...,100)")->delimiter(',');
  sweep_cmd->add_option("--nsigma-grid", nsigma_grid, "n(sigma%) cutoffs to try (default 10,20,...,100)")
      ->delimiter(',');

  // export-graph
  Overrides graph_flags;
  std::string query_id;
  auto* graph_cmd = app.add_subcommand("export-graph", "Write one query's coherency network as DOT");
  graph_flags.add_common(graph_cmd);
  graph_flags.add_pipeline(graph_cmd);
  graph_cmd->add_option("--query-id", query_id, "Dataset query id")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  std::string stage = "setup";
  try {
    if (*index_cmd) {
      stage = "index: config";
      auto config = index_flags.resolve();
      if (k1_opt->count()) config.bm25.k1 = k1;
      if (b_opt->count()) config.bm25.b = b;
      config.validate();
      require_path(config.corpus, "corpus");
      const fs::path dir = index_flags.out_opt->count() ? config.out_dir
                           : config.index_dir.empty()   ? config.out_dir
                                                        : config.index_dir;
      stage = "index: reading corpus";
      const auto corpus = read_corpus_tsv(config.corpus);
      stage = "index: building";
      const auto index = Index::build(corpus, config.bm25);
      stage = "index: writing";
      index.save(dir);
      record_manifest(dir, "index", join(args), config, {config.corpus});
      out << "indexed " << index.doc_count() << " passages, " << index.term_count() << " terms -> " << dir.string()
          << "\n";
      return kExitOk;
    }

    if (*predict_cmd) {
      stage = "predict: config";
      const auto config = predict_flags.resolve();
      const auto method = parse_method(predict_flags.method);
      require_path(config.dataset, "dataset");
      stage = "predict: loading index";
      auto index = open_index(config);
      stage = "predict: loading dataset";
      const auto queries = load_dataset(config.dataset, config.dataset_format, eval::parse_split(config.split));

      if (!dump_pairs.empty()) {
        stage = "predict: dumping pairs";
        std::ofstream dump(dump_pairs, std::ios::binary | std::ios::trunc);
        if (!dump) throw DataError("cannot write " + dump_pairs);
        std::unordered_set<std::string> seen;
        std::size_t written = 0;
        for (const auto& q : queries) {
          const auto ranked = index->retrieve_top_k(Query{q.query_id, q.text}, config.k);
          for (const auto& a : ranked.entries) {
            for (const auto& c : ranked.entries) {
              if (a.passage_id == c.passage_id) continue;
              const auto& ta = index->text(a.passage_id);
              const auto& tc = index->text(c.passage_id);
              auto key = pair_key(ta, tc);
              if (!seen.insert(key).second) continue;
              dump << wire::encode_request({std::move(key), ta, tc}) << '\n';
              ++written;
            }
          }
        }
        out << "wrote " << written << " pair requests to " << dump_pairs << "\n";
        return kExitOk;
      }

      std::shared_ptr<SuccessorScorer> scorer;
      if (is_graph_method(method)) {
        stage = "predict: starting scorer";
        scorer = make_scorer(config.scorer, config.scorer_timeout);
      }
      Pipeline pipeline(config, index, scorer);
      stage = "predict: scoring queries";
      const auto run = pipeline.predict(queries, method, config.k);
      stage = "predict: writing run";
      const auto run_path = config.out_dir / (run.method_id + ".tsv");
      eval::write_run(run_path, run);
      write_text(config.out_dir / (run.method_id + ".stats.json"), pipeline.counters().to_json().dump(2) + "\n");
      auto inputs = scorer_inputs(config);
      inputs.push_back(config.index_dir);
      inputs.push_back(config.dataset);
      record_manifest(config.out_dir, "predict:" + run.method_id, join(args), config, inputs);
      out << "wrote " << run.scores.size() << " scores to " << run_path.string() << "\n";
      return kExitOk;
    }

    if (*eval_cmd) {
      stage = "evaluate: config";
      const auto config = eval_flags.resolve();
      require_path(config.dataset, "dataset");
      stage = "evaluate: loading dataset";
      const auto queries = load_dataset(config.dataset, config.dataset_format, eval::parse_split(config.split));
      stage = "evaluate: reading runs";
      std::vector<eval::PredictionRun> runs;
      for (const auto& f : run_files) runs.push_back(eval::read_run(f));
      for (std::size_t i = 0; i < runs.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
          if (runs[i].method_id == runs[j].method_id)
            throw UsageError("two runs share method id '" + runs[i].method_id + "'");
      std::vector<eval::AlignedScores> aligned;
      for (const auto& r : runs) aligned.push_back(eval::align_run(r, queries));

      std::vector<fs::path> inputs{config.dataset};
      for (const auto& f : run_files) inputs.emplace_back(f);

      if (config.dataset_format == "clariq") {
        stage = "evaluate: scoring";
        const auto labels = clarity_labels(queries);
        nlohmann::json summary = nlohmann::json::array();
        for (std::size_t i = 0; i < runs.size(); ++i) {
          const auto roc = eval::roc_and_auc(aligned[i].scores, labels);
          eval::EvalReport report{runs[i].method_id, roc.auc, roc.points, roc.n_pos, roc.n_neg, {}, std::nullopt};
          if (significance) {
            for (std::size_t j = 0; j < runs.size(); ++j) {
              if (i == j) continue;
              eval::BootstrapOptions opts;
              opts.resamples = resamples;
              opts.seed = config.seed;
              report.p_values[runs[j].method_id] =
                  eval::paired_significance(aligned[i].scores, aligned[j].scores, labels, opts);
            }
          }
          write_text(config.out_dir / ("report-" + report.method_id + ".json"), to_json(report).dump(2) + "\n");
          write_text(config.out_dir / ("roc-" + report.method_id + ".csv"), eval::roc_csv(report.roc_points));
          summary.push_back({{"method_id", report.method_id}, {"auc", report.auc}, {"p_values", report.p_values}});
          out << report.method_id << "\tAUC=" << eval::format_double(report.auc) << "\n";
        }
        write_text(config.out_dir / "summary.json", summary.dump(2) + "\n");
      } else {
        stage = "evaluate: bucket thresholds";
        std::vector<double> thresholds(runs.size());
        if (bucket_threshold_opt->count()) {
          std::fill(thresholds.begin(), thresholds.end(), bucket_threshold);
        } else {
          if (dev_runs.empty() || dev_dataset.empty())
            throw UsageError("bucket reports need --bucket-threshold or --dev-run with --dev-dataset");
          const auto dev_queries = eval::load_clariq(dev_dataset, eval::Split::dev);
          const auto dev_labels = clarity_labels(dev_queries);
          inputs.emplace_back(dev_dataset);
          for (std::size_t i = 0; i < runs.size(); ++i) {
            bool found = false;
            for (const auto& f : dev_runs) {
              const auto dev_run = eval::read_run(f);
              if (dev_run.method_id != runs[i].method_id) continue;
              thresholds[i] = eval::select_threshold(eval::align_run(dev_run, dev_queries).scores, dev_labels);
              inputs.emplace_back(f);
              found = true;
              break;
            }
            if (!found) throw UsageError("no --dev-run for method '" + runs[i].method_id + "'");
          }
        }
        stage = "evaluate: bucket report";
        std::vector<int> groups;
        for (const auto& q : queries) {
          if (!q.bucket) throw DataError("query " + q.query_id + " has no AmbigNQ bucket");
          groups.push_back(eval::bucket_group(*q.bucket));
        }
        std::string csv = "method_id,bucket,percent_ambiguous\n";
        nlohmann::json all = nlohmann::json::object();
        for (std::size_t i = 0; i < runs.size(); ++i) {
          const auto pct = eval::bucket_report(aligned[i].scores, groups, thresholds[i]);
          nlohmann::json buckets = nlohmann::json::object();
          for (const auto& [g, p] : pct) {
            const auto label = g == 4 ? std::string("4+") : std::to_string(g);
            buckets[label] = p;
            csv += runs[i].method_id + "," + label + "," + eval::format_double(p) + "\n";
            out << runs[i].method_id << "\tbucket " << label << "\t" << eval::format_double(p) << "%\n";
          }
          all[runs[i].method_id] = {{"threshold", thresholds[i]}, {"percent_ambiguous", buckets}};
        }
        write_text(config.out_dir / "buckets.json", all.dump(2) + "\n");
        write_text(config.out_dir / "buckets.csv", csv);
      }
      record_manifest(config.out_dir, "evaluate", join(args), config, inputs);
      return kExitOk;
    }

    if (*sweep_cmd) {
      stage = "sweep: config";
      auto config = sweep_flags.resolve();
      if (!ks.empty()) config.sweep_ks = ks;
      config.validate();
      const auto method = parse_method(sweep_flags.method);
      // The sweep runs on the dev file when one is configured, otherwise on --dataset.
      const auto dataset = config.dev_dataset.empty() ? config.dataset : config.dev_dataset;
      require_path(dataset, "dev dataset");
      stage = "sweep: loading";
      auto index = open_index(config);
      const auto queries = eval::load_clariq(dataset, eval::Split::dev);
      const auto labels = clarity_labels(queries);
      std::shared_ptr<SuccessorScorer> scorer;
      if (is_graph_method(method)) scorer = make_scorer(config.scorer, config.scorer_timeout);
      // n(sigma%) also tunes its cutoff; other methods have a single grid point.
      std::vector<double> grid{config.nsigma_percent};
      if (method == Method::nsigma) {
        grid = nsigma_grid.empty() ? kDefaultNSigmaGrid : nsigma_grid;
        for (double x : grid)
          if (!(x > 0.0 && x <= 100.0)) throw UsageError("--nsigma-grid values must lie in (0,100]");
      }
      stage = "sweep: scoring";
      struct Cell {
        double x;
        eval::SweepResult result;
      };
      std::vector<Cell> cells;
      std::optional<std::pair<std::size_t, double>> best;  // (k, x)
      double best_auc = -1.0;
      for (double x : grid) {
        auto cfg = config;
        cfg.nsigma_percent = x;
        Pipeline pipeline(cfg, index, scorer);
        auto result = eval::sweep_k(
            cfg.sweep_ks,
            [&](std::size_t k) {
              std::vector<double> s;
              for (const auto& [_, score] : pipeline.predict(queries, method, k).scores) s.push_back(score);
              return s;
            },
            labels);
        // ties go to the smaller k, then the earlier grid value
        const double a = result.auc_by_k.at(result.selected_k);
        if (a > best_auc || (a == best_auc && result.selected_k < best->first)) {
          best_auc = a;
          best = {result.selected_k, x};
        }
        cells.push_back({x, std::move(result)});
      }

      const auto name = std::string(to_string(method));
      const bool tuned_x = method == Method::nsigma;
      std::string csv = tuned_x ? "k,nsigma_percent,auc\n" : "k,auc\n";
      nlohmann::json table = nlohmann::json::object();
      nlohmann::json grid_table = nlohmann::json::array();
      for (const auto& cell : cells) {
        for (const auto& [k, a] : cell.result.auc_by_k) {
          csv += std::to_string(k) + (tuned_x ? "," + eval::format_double(cell.x) : "") + "," + eval::format_double(a) + "\n";
          if (cell.x == best->second) table[std::to_string(k)] = a;
          if (tuned_x) grid_table.push_back({{"k", k}, {"nsigma_percent", cell.x}, {"auc", a}});
          out << "k=" << k << (tuned_x ? "\tx=" + eval::format_double(cell.x) : "") << "\tAUC=" << eval::format_double(a)
              << "\n";
        }
      }
      nlohmann::json summary = {{"method_id", name}, {"auc_by_k", table}, {"selected_k", best->first}};
      if (tuned_x) {
        summary["selected_nsigma_percent"] = best->second;
        summary["grid"] = grid_table;
      }
      write_text(config.out_dir / ("sweep-" + name + ".csv"), csv);
      write_text(config.out_dir / ("sweep-" + name + ".json"), summary.dump(2) + "\n");

      // The dev run at the selected setting, with the selection in its provenance.
      stage = "sweep: writing selected run";
      auto cfg = config;
      cfg.nsigma_percent = best->second;
      Pipeline pipeline(cfg, index, scorer);
      auto run = pipeline.predict(queries, method, best->first);
      run.provenance["sweep"] = summary;
      run.provenance["sweep"].erase("method_id");
      eval::write_run(config.out_dir / (name + ".tsv"), run);

      auto inputs = scorer_inputs(config);
      inputs.push_back(config.index_dir);
      inputs.push_back(dataset);
      record_manifest(config.out_dir, "sweep:" + name, join(args), config, inputs);
      out << "selected k=" << best->first;
      if (tuned_x) out << " nsigma_percent=" << eval::format_double(best->second);
      out << "\n";
      return kExitOk;
    }

    if (*graph_cmd) {
      stage = "export-graph: config";
      const auto config = graph_flags.resolve();
      require_path(config.dataset, "dataset");
      stage = "export-graph: loading";
      auto index = open_index(config);
      const auto queries = load_dataset(config.dataset, config.dataset_format, eval::parse_split(config.split));
      const auto it = std::find_if(queries.begin(), queries.end(),
                                   [&](const eval::LabeledQuery& q) { return q.query_id == query_id; });
      if (it == queries.end()) throw DataError("unknown query id: " + query_id);
      stage = "export-graph: building network";
      Pipeline pipeline(config, index, make_scorer(config.scorer, config.scorer_timeout));
      const Query q{it->query_id, it->text};
      const auto g = pipeline.network(q, config.k);
      const auto report = connectivity_report(g, q.id, true);
      const auto dot_path = config.out_dir / (query_id + ".dot");
      write_text(dot_path, export_dot(g));
      write_text(config.out_dir / (query_id + ".json"), to_json(report, g).dump(2) + "\n");
      auto inputs = scorer_inputs(config);
      inputs.push_back(config.index_dir);
      inputs.push_back(config.dataset);
      record_manifest(config.out_dir, "export-graph:" + query_id, join(args), config, inputs);
      out << "wrote " << dot_path.string() << " (" << g.node_count() << " nodes, " << g.edge_count()
          << " edges, NC=" << report.nc << ", ANC=" << eval::format_double(report.anc) << ")\n";
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "clarity " << stage << ": usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ScorerError& e) {
    err << "clarity " << stage << ": scorer error: " << e.what() << "\n";
    return kExitScorer;
  } catch (const std::exception& e) {
    err << "clarity " << stage << ": error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace clarity
