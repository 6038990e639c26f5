#include <cstdlib>
#include <sstream>

#include "clarity/commands.hpp"
#include "clarity/eval_harness.hpp"
#include "doctest.h"
#include "support/synthetic.hpp"
#include "support/tmpdir.hpp"

using namespace clarity;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "clarity");
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

// Synthetic fixture on disk, already indexed.
struct Workspace {
  testing::TempDir dir;
  synthetic::Fixture fixture = synthetic::make();
  std::string corpus = (dir / "corpus.tsv").string();
  std::string index = (dir / "idx").string();
  std::string clariq = (dir / "clariq.tsv").string();

  Workspace() {
    synthetic::write_corpus(fixture, corpus);
    synthetic::write_clariq(fixture, clariq);
    const auto r = cli({"index", "--corpus", corpus, "--out", index});
    REQUIRE(r.code == 0);
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"predict", "--method", "anc"}).code == kExitUsage);
  CHECK(cli({"predict", "--method", "bart", "--index", "x", "--dataset", "y"}).code == kExitUsage);
  const auto r = cli({"predict", "--method", "anc", "--index", "/nonexistent", "--dataset", "/nonexistent"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("predict") != std::string::npos);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("index, predict, evaluate") {
  Workspace ws;
  CHECK(fs::exists(ws.index + "/index.bin"));
  CHECK(fs::exists(ws.index + "/manifest.json"));
  const auto out = ws.path("out");
  for (const char* m : {"anc", "nc", "nqc", "wig", "smv", "nsigma"}) {
    const auto r = cli({"predict", "--index", ws.index, "--dataset", ws.clariq, "--method", m, "--k", "10", "--out", out});
    CHECK_MESSAGE(r.code == 0, r.err);
    CHECK(fs::exists(out + "/" + m + ".tsv"));
    CHECK(fs::exists(out + "/" + m + ".tsv.json"));
    CHECK(fs::exists(out + "/" + m + ".stats.json"));
  }
  const auto run = eval::read_run(out + "/anc.tsv");
  CHECK(run.scores.size() == 40);
  CHECK(run.k_used == 10);
  CHECK(run.provenance["scorer"] == "heuristic-jaccard-v1");

  const auto ev = ws.path("eval");
  const auto r = cli({"evaluate", "--dataset", ws.clariq, "--run", out + "/anc.tsv", "--run", out + "/nqc.tsv",
                      "--significance", "--resamples", "200", "--out", ev});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto report = nlohmann::json::parse(testing::read_file(ev + "/report-anc.json"));
  CHECK(report["auc"].get<double>() >= 0.8);
  CHECK(report["p_values"].contains("nqc"));
  CHECK(fs::exists(ev + "/roc-nqc.csv"));
  const auto manifest = nlohmann::json::parse(testing::read_file(out + "/manifest.json"));
  CHECK(manifest["entries"].contains("predict:anc"));
  CHECK(manifest["entries"].contains("predict:nqc"));
  CHECK(manifest["entries"]["predict:anc"]["inputs"].size() == 2);

  // a run that misses queries is a data error
  testing::write_file(ws.path("short.tsv"), "q1\t0.5\n");
  CHECK(cli({"evaluate", "--dataset", ws.clariq, "--run", ws.path("short.tsv"), "--out", ev}).code == kExitData);
}

TEST_CASE("config file with flag overrides") {
  Workspace ws;
  const auto out = ws.path("cfg-out");
  nlohmann::json cfg = {{"index", ws.index}, {"dataset", ws.clariq}, {"k", 5}, {"out", out}};
  testing::write_file(ws.path("run.json"), cfg.dump());
  REQUIRE(cli({"predict", "--config", ws.path("run.json"), "--method", "wig"}).code == 0);
  CHECK(eval::read_run(out + "/wig.tsv").k_used == 5);
  REQUIRE(cli({"predict", "--config", ws.path("run.json"), "--method", "wig", "--k", "7"}).code == 0);
  CHECK(eval::read_run(out + "/wig.tsv").k_used == 7);

  testing::write_file(ws.path("bad.json"), "{\"k\": 0}");
  CHECK(cli({"predict", "--config", ws.path("bad.json"), "--method", "wig"}).code == kExitUsage);
  testing::write_file(ws.path("broken.json"), "{");
  CHECK(cli({"predict", "--config", ws.path("broken.json"), "--method", "wig"}).code == kExitUsage);
}

TEST_CASE("dumped pairs feed the pair-file scorer") {
  Workspace ws;
  const auto requests = ws.path("pairs.jsonl");
  REQUIRE(cli({"predict", "--index", ws.index, "--dataset", ws.clariq, "--method", "anc", "--k", "10",
               "--dump-pairs", requests})
              .code == 0);
  // answer every request offline with the heuristic
  std::ifstream in(requests);
  std::string responses;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    const double p = heuristic_successor_score(j["text_a"].get<std::string>(), j["text_b"].get<std::string>());
    responses += nlohmann::json{{"pair_id", j["pair_id"]}, {"p_isnext", p}}.dump() + "\n";
    ++n;
  }
  CHECK(n > 0);
  testing::write_file(ws.path("responses.jsonl"), responses);

  const auto a = ws.path("a");
  const auto b = ws.path("b");
  REQUIRE(cli({"predict", "--index", ws.index, "--dataset", ws.clariq, "--method", "anc", "--k", "10", "--out", a}).code == 0);
  const auto r = cli({"predict", "--index", ws.index, "--dataset", ws.clariq, "--method", "anc", "--k", "10",
                      "--scorer", "pair-file:" + ws.path("responses.jsonl"), "--out", b});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(testing::read_file(a + "/anc.tsv") == testing::read_file(b + "/anc.tsv"));

  // too shallow a pair file for a deeper k is a scorer error
  CHECK(cli({"predict", "--index", ws.index, "--dataset", ws.clariq, "--method", "anc", "--k", "12", "--scorer",
             "pair-file:" + ws.path("responses.jsonl"), "--out", b})
            .code == kExitScorer);
}

TEST_CASE("external scorer failures exit 3") {
  Workspace ws;
  const std::string mock = std::string("external:python3 ") + CLARITY_FIXTURE_DIR + "/mock_scorer.py ";
  const auto r = cli({"predict", "--index", ws.index, "--dataset", ws.clariq, "--method", "nc", "--k", "4",
                      "--scorer", mock + "malformed", "--out", ws.path("x")});
  CHECK(r.code == kExitScorer);
  CHECK(r.err.find("scoring queries") != std::string::npos);
  CHECK(cli({"predict", "--index", ws.index, "--dataset", ws.clariq, "--method", "nc", "--k", "4", "--scorer",
             mock + "silent", "--scorer-timeout-ms", "300", "--out", ws.path("x")})
            .code == kExitScorer);
  // a working subprocess scorer
  const auto ok = cli({"predict", "--index", ws.index, "--dataset", ws.clariq, "--method", "nc", "--k", "4",
                       "--scorer", mock + "reverse", "--out", ws.path("y")});
  CHECK_MESSAGE(ok.code == 0, ok.err);
}

TEST_CASE("cache directory from the environment") {
  Workspace ws;
  const auto cache = ws.path("cache");
  ::setenv("CLARITY_CACHE_DIR", cache.c_str(), 1);
  REQUIRE(cli({"predict", "--index", ws.index, "--dataset", ws.clariq, "--method", "anc", "--k", "10", "--out",
               ws.path("o")})
              .code == 0);
  ::unsetenv("CLARITY_CACHE_DIR");
  CHECK(fs::exists(cache + "/heuristic-jaccard-v1.pairs"));
  REQUIRE(cli({"predict", "--index", ws.index, "--dataset", ws.clariq, "--method", "anc", "--k", "10", "--out",
               ws.path("o"), "--cache-dir", cache})
              .code == 0);
  const auto stats = nlohmann::json::parse(testing::read_file(ws.path("o") + "/anc.stats.json"));
  CHECK(stats["scorer_calls"] == 0);
}

TEST_CASE("sweep and export-graph") {
  Workspace ws;
  const auto out = ws.path("s");
  auto r = cli({"sweep", "--index", ws.index, "--dataset", ws.clariq, "--method", "anc", "--ks", "5,10", "--out", out});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(testing::read_file(out + "/sweep-anc.csv").rfind("k,auc\n5,", 0) == 0);
  const auto sweep = nlohmann::json::parse(testing::read_file(out + "/sweep-anc.json"));
  CHECK(sweep["auc_by_k"].size() == 2);

  const auto selected = eval::read_run(out + "/anc.tsv");
  CHECK(selected.k_used == sweep["selected_k"].get<std::size_t>());
  CHECK(selected.provenance["sweep"]["auc_by_k"] == sweep["auc_by_k"]);

  r = cli({"sweep", "--index", ws.index, "--dataset", ws.clariq, "--method", "nsigma", "--ks", "10,20",
           "--nsigma-grid", "50,100", "--out", out});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto ns = nlohmann::json::parse(testing::read_file(out + "/sweep-nsigma.json"));
  CHECK(ns["grid"].size() == 4);
  CHECK(ns.contains("selected_nsigma_percent"));
  CHECK(testing::read_file(out + "/sweep-nsigma.csv").rfind("k,nsigma_percent,auc\n", 0) == 0);
  CHECK(cli({"sweep", "--index", ws.index, "--dataset", ws.clariq, "--method", "nsigma", "--nsigma-grid", "0",
             "--out", out})
            .code == kExitUsage);

  r = cli({"export-graph", "--index", ws.index, "--dataset", ws.clariq, "--query-id", "q1", "--k", "10", "--out", out});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto dot = testing::read_file(out + "/q1.dot");
  CHECK(dot.rfind("digraph coherency {", 0) == 0);
  CHECK(std::count(dot.begin(), dot.end(), '>') == 90);
  const auto j = nlohmann::json::parse(testing::read_file(out + "/q1.json"));
  CHECK(j["anc"] == 9.0);
  CHECK(j["per_pair"].size() == 90);
  CHECK(cli({"export-graph", "--index", ws.index, "--dataset", ws.clariq, "--query-id", "nope", "--out", out}).code ==
        kExitData);
}

TEST_CASE("AmbigNQ bucket reports") {
  Workspace ws;
  // AmbigNQ records built from the synthetic queries: ambiguous ones get several QA pairs
  nlohmann::json records = nlohmann::json::array();
  for (const auto& q : ws.fixture.queries) {
    nlohmann::json qa = nlohmann::json::array();
    for (int i = 0; i < (*q.clarity_level == 4 ? 3 : 1); ++i) qa.push_back({{"question", "x"}, {"answer", {"y"}}});
    records.push_back({{"id", q.query_id},
                       {"question", q.text},
                       {"annotations", {{{"type", *q.clarity_level == 4 ? "multipleQAs" : "singleAnswer"}, {"qaPairs", qa}}}}});
  }
  testing::write_file(ws.path("ambig.json"), records.dump());

  const auto runs = ws.path("ar");
  REQUIRE(cli({"predict", "--index", ws.index, "--dataset", ws.path("ambig.json"), "--format", "ambignq", "--split",
               "dev", "--method", "anc", "--k", "10", "--out", runs})
              .code == 0);
  REQUIRE(cli({"predict", "--index", ws.index, "--dataset", ws.clariq, "--split", "dev", "--method", "anc", "--k",
               "10", "--out", ws.path("dev")})
              .code == 0);

  const auto out = ws.path("buckets");
  auto r = cli({"evaluate", "--dataset", ws.path("ambig.json"), "--format", "ambignq", "--run", runs + "/anc.tsv",
                "--dev-run", ws.path("dev") + "/anc.tsv", "--dev-dataset", ws.clariq, "--out", out});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto b = nlohmann::json::parse(testing::read_file(out + "/buckets.json"));
  CHECK(b["anc"]["percent_ambiguous"]["1"] == 0.0);
  CHECK(b["anc"]["percent_ambiguous"]["3"] == 100.0);
  CHECK(testing::read_file(out + "/buckets.csv").rfind("method_id,bucket,percent_ambiguous\n", 0) == 0);

  r = cli({"evaluate", "--dataset", ws.path("ambig.json"), "--format", "ambignq", "--run", runs + "/anc.tsv",
           "--bucket-threshold", "-100", "--out", out});
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(testing::read_file(out + "/buckets.json"))["anc"]["percent_ambiguous"]["1"] == 100.0);
  CHECK(cli({"evaluate", "--dataset", ws.path("ambig.json"), "--format", "ambignq", "--run", runs + "/anc.tsv",
             "--out", out})
            .code == kExitUsage);
}

TEST_CASE("the installed binary maps exit codes") {
  const std::string bin = CLARITY_CLI_PATH;
  CHECK(WEXITSTATUS(std::system((bin + " --version >/dev/null").c_str())) == 0);
  CHECK(WEXITSTATUS(std::system((bin + " predict >/dev/null 2>&1").c_str())) == 1);
}
