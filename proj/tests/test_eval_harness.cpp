#include <random>

#include "clarity/errors.hpp"
#include "clarity/eval_harness.hpp"
#include "doctest.h"
#include "support/oracles.hpp"
#include "support/tmpdir.hpp"

using namespace clarity;
using namespace clarity::eval;

namespace {

const char* kClariq =
    "topic_id\tinitial_request\ttopic_desc\tclarification_need\tfacet_id\n"
    "1\tTell me about jaguar\tanimal or car\t4\tF1\n"
    "1\tTell me about jaguar\tanimal or car\t4\tF2\n"
    "2\tpython install on windows\tsetup\t1\tF3\n"
    "3\tdinosaurs\tbroad\t3\tF4\n"
    "4\thow to cook rice in a pot\tfood\t2\tF5\n"
    "5\tmercury\tplanet or metal\t4\tF6\n";

const char* kAmbig = R"([
  {"id": "a1", "question": "who won the cup", "annotations": [
    {"type": "multipleQAs", "qaPairs": [{"question": "x", "answer": ["1"]}, {"question": "y", "answer": ["2"]}]}]},
  {"id": "a2", "question": "capital of france", "annotations": [{"type": "singleAnswer", "answer": ["Paris"]}]},
  {"id": "a3", "question": "when did it open", "annotations": [
    {"type": "singleAnswer", "answer": ["1990"]},
    {"type": "multipleQAs", "qaPairs": [{"question": "a"}, {"question": "b"}, {"question": "c"}]}]},
  {"id": "a4", "question": "largest lake", "annotations": []},
  {"id": "a5", "question": "who played bond", "annotations": [
    {"type": "multipleQAs", "qaPairs": [{}, {}, {}, {}, {}, {}]}]},
  {"id": "a6", "question": "mercury", "annotations": [{"type": "multipleQAs", "qaPairs": [{}, {}, {}, {}]}]}
])";

}  // namespace

TEST_CASE("ClariQ loader") {
  testing::TempDir tmp;
  testing::write_file(tmp / "c.tsv", kClariq);
  const auto q = load_clariq(tmp / "c.tsv", Split::dev);
  REQUIRE(q.size() == 5);
  CHECK(q[0].query_id == "1");
  CHECK(q[0].text == "Tell me about jaguar");
  CHECK(q[0].clarity_level == 4);
  CHECK(q[0].split == Split::dev);
  CHECK(q[3].clarity_level == 2);
  CHECK_FALSE(q[0].bucket);

  testing::write_file(tmp / "bad.tsv", "topic_id\tinitial_request\tclarification_need\n1\tx\t5\n");
  CHECK_THROWS_WITH_AS(load_clariq(tmp / "bad.tsv"), doctest::Contains("bad.tsv:2"), DataError);
  testing::write_file(tmp / "conflict.tsv",
                      "topic_id\tinitial_request\tclarification_need\n1\tx\t2\n1\tx\t3\n");
  CHECK_THROWS_AS(load_clariq(tmp / "conflict.tsv"), DataError);
  testing::write_file(tmp / "nocol.tsv", "topic_id\tinitial_request\n1\tx\n");
  CHECK_THROWS_WITH_AS(load_clariq(tmp / "nocol.tsv"), doctest::Contains("clarification_need"), DataError);
}

TEST_CASE("ClariQ binarization") {
  CHECK_FALSE(binarize_clariq(1));
  CHECK_FALSE(binarize_clariq(2));
  CHECK(binarize_clariq(3));
  CHECK(binarize_clariq(4));
  CHECK_THROWS_AS(binarize_clariq(0), InvalidArgument);
}

TEST_CASE("AmbigNQ loader and buckets") {
  testing::TempDir tmp;
  testing::write_file(tmp / "a.json", kAmbig);
  const auto load = load_ambignq(tmp / "a.json");
  CHECK(load.skipped == 1);
  REQUIRE(load.queries.size() == 5);
  CHECK(load.queries[0].bucket == 2);
  CHECK(load.queries[1].bucket == 1);
  CHECK(load.queries[2].bucket == 3);
  CHECK(load.queries[3].bucket == 6);
  CHECK(load.queries[4].query_id == "a6");
  CHECK(load.queries[4].text == "mercury");
  CHECK(bucket_group(1) == 1);
  CHECK(bucket_group(3) == 3);
  CHECK(bucket_group(4) == 4);
  CHECK(bucket_group(9) == 4);
  CHECK_THROWS_AS(bucket_group(0), InvalidArgument);

  testing::write_file(tmp / "bad.json", R"([{"id": "x", "question": "q", "annotations": [{"type": "huh"}]}])");
  CHECK_THROWS_AS(load_ambignq(tmp / "bad.json"), DataError);
}

TEST_CASE("AUC basics") {
  const std::vector<uint8_t> labels{1, 1, 0, 0};
  CHECK(auc(std::vector<double>{4, 3, 2, 1}, labels) == 1.0);
  CHECK(auc(std::vector<double>{1, 2, 3, 4}, labels) == 0.0);
  CHECK(auc(std::vector<double>{1, 1, 1, 1}, labels) == 0.5);
  const auto r = roc_and_auc(std::vector<double>{4, 2, 3, 1}, labels);
  CHECK(r.auc == 0.75);
  CHECK(r.n_pos == 2);
  CHECK(r.points.front().fpr == 0.0);
  CHECK(r.points.back().tpr == 1.0);
  CHECK_THROWS_AS(auc(std::vector<double>{1, 2}, std::vector<uint8_t>{1, 1}), InvalidArgument);
  CHECK_THROWS_AS(auc(std::vector<double>{1}, labels), InvalidArgument);
}

TEST_CASE("AUC matches pair counting") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 2 + t * 3;
    std::vector<double> s(n);
    std::vector<uint8_t> l(n);
    std::uniform_int_distribution<int> coarse(0, 5);  // lots of ties
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = coarse(rng);
      l[i] = static_cast<uint8_t>(i % 2 == 0 ? 1 : coarse(rng) > 2);
    }
    l[1] = 0;
    CHECK(auc(s, l) == doctest::Approx(oracle::pair_count_auc(s, l)).epsilon(1e-12));
  }
}

TEST_CASE("paired bootstrap") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t n = 60;
  std::vector<uint8_t> l(n);
  std::vector<double> good(n);
  std::vector<double> bad(n);
  for (std::size_t i = 0; i < n; ++i) {
    l[i] = i % 2;
    good[i] = 3.0 * l[i] + noise(rng);
    bad[i] = noise(rng);
  }
  BootstrapOptions opts;
  opts.resamples = 500;
  opts.seed = 9;
  const double p = paired_significance(good, bad, l, opts);
  CHECK(p < 0.01);
  CHECK(p == paired_significance(good, bad, l, opts));
  CHECK(paired_significance(good, good, l, opts) == 1.0);
  CHECK(paired_significance(bad, good, l, opts) == p);
  // similar systems are not significantly different
  std::vector<double> bad2(n);
  for (std::size_t i = 0; i < n; ++i) bad2[i] = noise(rng);
  CHECK(paired_significance(bad, bad2, l, opts) > 0.05);

  // perfect against anti-separated ranking on 40 queries
  std::vector<uint8_t> l40(40);
  std::vector<double> perfect(40);
  std::vector<double> anti(40);
  for (std::size_t i = 0; i < 40; ++i) {
    l40[i] = i < 20;
    perfect[i] = l40[i] ? 1.0 + i : -1.0 - i;
    anti[i] = -perfect[i];
  }
  CHECK(paired_significance(perfect, anti, l40, opts) < 0.05);
}

TEST_CASE("threshold selection") {
  const std::vector<uint8_t> l{0, 0, 1, 1};
  CHECK(select_threshold(std::vector<double>{1, 2, 3, 4}, l) == 2.0);
  // positives and negatives interleaved: best split keeps the top positive only
  CHECK(select_threshold(std::vector<double>{1, 3, 2, 4}, l) == 3.0);
}

TEST_CASE("AUC invariants") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> s(40);
  std::vector<uint8_t> l(40);
  for (std::size_t i = 0; i < s.size(); ++i) {
    l[i] = i % 3 == 0;
    s[i] = g(rng) + l[i];
  }
  const double a = auc(s, l);
  std::vector<double> transformed;
  std::vector<double> negated;
  for (double x : s) {
    transformed.push_back(std::exp(3.0 * x) + 7.0);
    negated.push_back(-x);
  }
  CHECK(auc(transformed, l) == doctest::Approx(a).epsilon(1e-12));
  CHECK(auc(negated, l) == doctest::Approx(1.0 - a).epsilon(1e-12));
  const auto r = roc_and_auc(s, l);
  for (std::size_t i = 1; i < r.points.size(); ++i) {
    CHECK(r.points[i].fpr >= r.points[i - 1].fpr);
    CHECK(r.points[i].tpr >= r.points[i - 1].tpr);
  }
}

TEST_CASE("threshold selection matches an exhaustive scan") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> v(0, 9);
  for (int t = 0; t < 25; ++t) {
    std::vector<double> s(20);
    std::vector<uint8_t> l(20);
    for (std::size_t i = 0; i < 20; ++i) {
      s[i] = v(rng);
      l[i] = v(rng) < 5;
    }
    l[0] = 1;
    l[1] = 0;
    double best_j = -2.0;
    double best_t = 0.0;
    std::vector<double> cand(s.begin(), s.end());
    std::sort(cand.begin(), cand.end(), std::greater<>());
    for (double c : cand) {
      double tp = 0, fp = 0, P = 0, N = 0;
      for (std::size_t i = 0; i < 20; ++i) {
        (l[i] ? P : N) += 1;
        if (s[i] > c) (l[i] ? tp : fp) += 1;
      }
      const double j = tp / P - fp / N;
      if (j > best_j) {
        best_j = j;
        best_t = c;
      }
    }
    CHECK(select_threshold(s, l) == best_t);
  }
  CHECK(select_threshold(std::vector<double>(4, 0.7), std::vector<uint8_t>{0, 1, 0, 1}) == 0.7);
  CHECK_THROWS_AS(select_threshold(std::vector<double>{1, 2}, std::vector<uint8_t>{1, 1}), InvalidArgument);
}

TEST_CASE("bucket report") {
  {
    const std::vector<double> s{1, 2, 3, 4};
    const std::vector<int> b{1, 2, 3, 4};
    for (const auto& [g, pct] : bucket_report(s, b, 0.0)) CHECK(pct == 100.0);
    for (const auto& [g, pct] : bucket_report(s, b, 10.0)) CHECK(pct == 0.0);
    CHECK_THROWS_AS(bucket_report(s, std::vector<int>{1, 2, 3, 5}, 0.0), InvalidArgument);
  }
  const std::vector<double> s{0.1, 0.9, 0.8, 0.2, 0.7};
  const std::vector<int> b{1, 1, 2, 4, 4};
  const auto r = bucket_report(s, b, 0.5);
  CHECK(r.size() == 3);
  CHECK(r.at(1) == 50.0);
  CHECK(r.at(2) == 100.0);
  CHECK(r.at(4) == 50.0);
  CHECK_FALSE(r.count(3));
}

TEST_CASE("run files round trip") {
  testing::TempDir tmp;
  PredictionRun run{"anc", {{"q1", -1.5}, {"q2", 0.1 + 0.2}, {"q3", std::numeric_limits<double>::infinity()}}, 20,
                    {{"seed", 3}}};
  write_run(tmp / "anc.tsv", run);
  const auto back = read_run(tmp / "anc.tsv");
  CHECK(back.method_id == "anc");
  CHECK(back.k_used == 20);
  CHECK(back.scores == run.scores);
  CHECK(back.provenance["seed"] == 3);

  std::vector<LabeledQuery> qs{{"q2", "", 1, {}, Split::test}, {"q1", "", 3, {}, Split::test}};
  CHECK_THROWS_WITH_AS(align_run(back, qs), doctest::Contains("q3"), DataError);
  qs.push_back({"q3", "", 4, {}, Split::test});
  qs.push_back({"q4", "", 4, {}, Split::test});
  CHECK_THROWS_WITH_AS(align_run(back, qs), doctest::Contains("q4"), DataError);
  qs.pop_back();
  const auto aligned = align_run(back, qs);
  CHECK(aligned.query_ids == std::vector<std::string>{"q2", "q1", "q3"});
  CHECK(aligned.scores[1] == -1.5);

  testing::write_file(tmp / "dup.tsv", "q1\t1\nq1\t2\n");
  CHECK_THROWS_AS(read_run(tmp / "dup.tsv"), DataError);
}

TEST_CASE("reports and sweep") {
  EvalReport r{"nqc", 0.75, {{0, 0}, {0.5, 1}, {1, 1}}, 2, 2, {{"anc", 0.03}}, std::nullopt};
  const auto j = to_json(r);
  CHECK(j["auc"] == 0.75);
  CHECK(j["p_values"]["anc"] == 0.03);
  CHECK(roc_csv(r.roc_points) == "fpr,tpr\n0,0\n0.5,1\n1,1\n");

  const std::vector<uint8_t> l{0, 1};
  const std::vector<std::size_t> ks{30, 10, 20};
  const auto sweep = sweep_k(ks, [](std::size_t k) { return k == 30 ? std::vector<double>{1, 0} : std::vector<double>{0, 1}; }, l);
  CHECK(sweep.auc_by_k.at(30) == 0.0);
  CHECK(sweep.selected_k == 10);
}

TEST_CASE("splits") {
  CHECK(parse_split("dev") == Split::dev);
  CHECK(to_string(Split::train) == "train");
  CHECK_THROWS(parse_split("validation"));
}
