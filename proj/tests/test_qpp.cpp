#include <random>

#include "clarity/errors.hpp"
#include "clarity/qpp.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace clarity;

TEST_CASE("hand-worked examples") {
  const std::vector<double> s{6.0, 4.0, 2.0};
  const qpp::QppInput in{s, 2.0, 1};
  CHECK(qpp::nqc(in) == doctest::Approx(0.81650).epsilon(1e-5));
  CHECK(qpp::wig(in) == doctest::Approx(2.0));
  CHECK(qpp::wig({s, 2.0, 4}) == doctest::Approx(1.0));
  // mean 4: (6 ln 1.5 + 0 + 2 ln 2) / 3 / 2
  CHECK(qpp::smv(in) == doctest::Approx((6 * std::log(1.5) + 2 * std::log(2.0)) / 6.0));
  // 50% of 6 keeps 6 and 4
  CHECK(qpp::n_sigma_percent(in) == doctest::Approx(0.5));
  CHECK(qpp::n_sigma_percent(in, 100.0) == 0.0);
}

TEST_CASE("documented examples") {
  const std::vector<double> w{6.0, 4.0};
  CHECK(qpp::wig({w, 3.0, 1}) == doctest::Approx(2.0));
  const std::vector<double> n{10.0, 9.0, 2.0};
  CHECK(qpp::n_sigma_percent({n, 2.0, 1}, 50.0) == doctest::Approx(0.25));
  const std::vector<double> e{std::exp(1.0), std::exp(-1.0)};
  CHECK(qpp::smv({e, 1.0, 1}) == doctest::Approx(1.0333008850517906));
  // scaling scores and corpus score together scales WIG
  CHECK(qpp::wig({std::vector<double>{18.0, 12.0}, 9.0, 1}) == doctest::Approx(6.0));
  // NQC ignores a shift of all scores
  CHECK(qpp::nqc({std::vector<double>{7.0, 5.0, 3.0}, 2.0, 1}) == doctest::Approx(0.81650).epsilon(1e-5));
}

TEST_CASE("constant scores") {
  const std::vector<double> s(5, 3.0);
  const qpp::QppInput in{s, 1.5, 2};
  CHECK(qpp::nqc(in) == 0.0);
  CHECK(qpp::smv(in) == 0.0);
  CHECK(qpp::n_sigma_percent(in) == 0.0);
}

TEST_CASE("input validation") {
  const std::vector<double> empty;
  const std::vector<double> s{2.0, 1.0};
  const std::vector<double> zero{2.0, 0.0};
  CHECK_THROWS_AS(qpp::nqc({empty, 1.0, 1}), InvalidArgument);
  CHECK_THROWS_AS(qpp::nqc({s, 0.0, 1}), InvalidArgument);
  CHECK_THROWS_AS(qpp::wig({s, 1.0, 0}), InvalidArgument);
  CHECK_THROWS_AS(qpp::smv({zero, 1.0, 1}), InvalidArgument);
  CHECK_THROWS_AS(qpp::n_sigma_percent({s, 1.0, 1}, 0.0), InvalidArgument);
  CHECK_THROWS_AS(qpp::n_sigma_percent({s, 1.0, 1}, 120.0), InvalidArgument);
}

TEST_CASE("agrees with straight-line recomputation") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> score(0.1, 30.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> s(1 + t % 12);
    for (auto& x : s) x = score(rng);
    std::sort(s.begin(), s.end(), std::greater<>());
    const double sc = score(rng) / 3.0;
    const std::size_t ql = 1 + t % 4;
    const qpp::QppInput in{s, sc, ql};
    CHECK(qpp::wig(in) == doctest::Approx(oracle::wig(s, sc, ql)).epsilon(1e-9));
    CHECK(qpp::nqc(in) == doctest::Approx(oracle::nqc(s, sc)).epsilon(1e-9));
    CHECK(qpp::smv(in) == doctest::Approx(oracle::smv(s, sc)).epsilon(1e-9));
    CHECK(qpp::n_sigma_percent(in, 70.0) == doctest::Approx(oracle::n_sigma(s, sc, 70.0)).epsilon(1e-9));
  }
}

TEST_CASE("scores_of keeps rank order") {
  RankedList r{"q", {{"a", 3.0}, {"b", 2.0}}};
  CHECK(qpp::scores_of(r) == std::vector<double>{3.0, 2.0});
}
