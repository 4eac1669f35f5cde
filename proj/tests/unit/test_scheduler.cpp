#include <cmath>
#include <limits>

#include "doctest.h"
#include "marvel/errors.hpp"
#include "marvel/ledger.hpp"
#include "marvel/rng.hpp"
#include "marvel/scheduler.hpp"
#include "oracles.hpp"

using namespace marvel;

namespace {
constexpr double inf = std::numeric_limits<double>::infinity();
const double benchmark = std::exp(-0.5);

void fill_column(HistoryLedger& L, int e, const std::vector<double>& w,
                 const std::vector<double>& m) {
  std::vector<std::size_t> idx(w.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  L.record(e, idx, w, m);
}
}  // namespace

TEST_SUITE("scheduler") {
  TEST_CASE("reset") {
    CHECK(reset_nonzero(std::vector<double>{0.3, 0, 1}) == std::vector<double>{1, 0, 1});
    CHECK(reset_nonzero(std::vector<double>{0, 0}) == std::vector<double>{0, 0});
    CHECK(reset_nonzero(std::vector<double>{1, 1}) == std::vector<double>{1, 1});
  }

  TEST_CASE("adaptive weight anchors") {
    const EpochMarginStats s{2.0, 0.25};  // sigma 0.5
    const auto w = adaptive_weights(std::vector<double>{1, 1, 1, 1, 0},
                                    std::vector<double>{2.0, 1.5, 1.0, 9.0, 2.0}, s);
    CHECK(std::abs(w[0] - 1.0) < 1e-12);
    CHECK(std::abs(w[1] - benchmark) < 1e-12);
    CHECK(std::abs(w[1] - 0.60653) < 1e-5);
    CHECK(std::abs(w[2] - std::exp(-2.0)) < 1e-12);
    CHECK(std::abs(w[2] - 0.13534) < 1e-5);
    CHECK(std::abs(w[3] - benchmark) < 1e-12);
    CHECK(w[4] == 0.0);
  }

  TEST_CASE("adaptive weights clamp a zero variance") {
    const auto w = adaptive_weights(std::vector<double>{1, 1}, std::vector<double>{5.0, 4.0},
                                    EpochMarginStats{5.0, 0.0}, 1e-8);
    CHECK(w[0] == 1.0);
    CHECK(w[1] == 0.0);  // exp of a huge negative number
    for (double v : w) CHECK(std::isfinite(v));
  }

  TEST_CASE("adaptive weights are monotone below the median") {
    CounterRng rng(5, Stream::data, 1);
    const EpochMarginStats s{0.3, 1.7};
    for (int t = 0; t < 1000; ++t) {
      const double a = 4 * rng.normal(), b = 4 * rng.normal();
      const auto w = adaptive_weights(std::vector<double>{1, 1}, std::vector<double>{a, b}, s);
      if (a <= b && b <= s.median) CHECK(w[0] <= w[1]);
      if (a > s.median) CHECK(w[0] == benchmark);
      CHECK(w[0] >= 0.0);
      CHECK(w[0] <= 1.0);
    }
  }

  TEST_CASE("epoch statistics") {
    const auto a = epoch_stats(std::vector<double>{1, 2, 3});
    CHECK(a.median == 2.0);
    CHECK(a.variance == 1.0);
    CHECK(epoch_stats(std::vector<double>{1, 2, 3, 10}).median == 2.5);
    CHECK(epoch_stats(std::vector<double>{5, 5, 5}).variance == 0.0);
    CHECK_THROWS_AS(epoch_stats(std::vector<double>{1}), DegenerateStatsError);
    CHECK_THROWS_AS(epoch_stats(std::vector<double>{}), DegenerateStatsError);
  }

  TEST_CASE("removal") {
    CHECK(apply_removal(std::vector<double>{1, 1, 1}, std::vector<double>{-0.2, 0.0, inf}) ==
          std::vector<double>{0, 1, 1});
    CHECK(apply_removal(std::vector<double>{0, 0.5}, std::vector<double>{inf, 3}) ==
          std::vector<double>{0, 0.5});
    CHECK(apply_removal(std::vector<double>{0.2, 1}, std::vector<double>{1, 2}) ==
          std::vector<double>{0.2, 1});
    CHECK_THROWS_AS(apply_removal(std::vector<double>{1}, std::vector<double>{1, 2}), ShapeError);
  }

  TEST_CASE("column statistics use retained finite margins") {
    HistoryLedger L(4, 2);
    fill_column(L, 1, {1, 1, 1, 1}, {inf, inf, inf, inf});
    CHECK_FALSE(column_stats(L, 1).has_value());
    fill_column(L, 2, {1, 0, 1, 1}, {1, 100, 2, 3});
    const auto s = column_stats(L, 2);
    REQUIRE(s.has_value());
    CHECK(s->median == 2.0);
    CHECK(s->variance == 1.0);
  }

  TEST_CASE("decide_batch during warm-up") {
    SchedulerConfig cfg;
    cfg.warm_up = 3;
    HistoryLedger L(6, 5);
    const std::vector<std::size_t> idx{4, 0, 2, 5};
    const auto d = decide_batch(cfg, L, 1, idx, Matrix::from_rows({{1}, {-1}, {2}, {-3}}),
                                std::vector<int>{1, 1, 1, 1}, OutputMode::binary_logit);
    CHECK(d.loss_weights == std::vector<double>(4, 0.25));
    CHECK(d.policy_weights == std::vector<double>(4, 1.0));
    for (double m : d.margins) CHECK(m == inf);
    CHECK_FALSE(d.all_zero);
  }

  TEST_CASE("decide_batch normalizes over retained instances") {
    SchedulerConfig cfg;
    cfg.warm_up = 1;
    cfg.wait = 2;
    HistoryLedger L(4, 3);
    fill_column(L, 1, {1, 1, 1, 1}, {inf, inf, inf, inf});
    fill_column(L, 2, {1, 0, 1, 1}, {0.5, -1, 0.5, 0.5});
    const std::vector<std::size_t> idx{0, 1, 2, 3};
    const auto d = decide_batch(cfg, L, 3, idx, Matrix::from_rows({{1}, {1}, {1}, {1}}),
                                std::vector<int>{1, 1, 1, 1}, OutputMode::binary_logit);
    const double third = 1.0 / 3.0;
    CHECK(d.loss_weights == std::vector<double>{third, 0, third, third});
    CHECK(d.policy_weights == std::vector<double>{1, 0, 1, 1});
    CHECK(d.margins == std::vector<double>{1, 1, 1, 1});
  }

  TEST_CASE("decide_batch removes after two negative margins with wait 2") {
    SchedulerConfig cfg;
    cfg.warm_up = 1;
    cfg.wait = 2;
    HistoryLedger L(1, 3);
    const std::vector<std::size_t> one{0};
    fill_column(L, 1, {1}, {inf});
    fill_column(L, 2, {1}, {-0.1});
    const auto d = decide_batch(cfg, L, 3, one, Matrix::from_rows({{-0.5}}), std::vector<int>{1},
                                OutputMode::binary_logit);
    CHECK(d.margins == std::vector<double>{-0.5});
    CHECK(d.policy_weights == std::vector<double>{0.0});
    CHECK(d.loss_weights == std::vector<double>{1.0});
  }

  TEST_CASE("decide_batch flags an all-removed batch") {
    SchedulerConfig cfg;
    cfg.warm_up = 1;
    HistoryLedger L(2, 3);
    fill_column(L, 1, {1, 1}, {inf, inf});
    fill_column(L, 2, {0, 0}, {-1, -1});
    const auto d = decide_batch(cfg, L, 3, std::vector<std::size_t>{0, 1},
                                Matrix::from_rows({{1}, {1}}), std::vector<int>{1, 1},
                                OutputMode::binary_logit);
    CHECK(d.all_zero);
    CHECK(d.policy_weights == std::vector<double>{0, 0});
  }

  TEST_CASE("MARVEL+ falls back to reset weights on degenerate batches") {
    SchedulerConfig cfg;
    cfg.method = Method::marvel_plus;
    cfg.warm_up = 1;
    HistoryLedger L(2, 2);
    fill_column(L, 1, {1, 0}, {inf, inf});
    const auto d = decide_batch(cfg, L, 2, std::vector<std::size_t>{0, 1},
                                Matrix::from_rows({{-0.3}, {1}}), std::vector<int>{1, 1},
                                OutputMode::binary_logit);
    CHECK(d.policy_weights == std::vector<double>{1, 0});
  }

  TEST_CASE("MARVEL+ with previous-epoch statistics") {
    SchedulerConfig cfg;
    cfg.method = Method::marvel_plus;
    cfg.stats_scope = StatsScope::prev_epoch;
    cfg.warm_up = 1;
    HistoryLedger L(3, 2);
    fill_column(L, 1, {1, 1, 1}, {inf, inf, inf});
    const EpochMarginStats prev{1.0, 1.0};
    const auto d = decide_batch(cfg, L, 2, std::vector<std::size_t>{0, 1, 2},
                                Matrix::from_rows({{1}, {0}, {5}}), std::vector<int>{1, 1, 1},
                                OutputMode::binary_logit, prev);
    CHECK(d.policy_weights[0] == 1.0);
    CHECK(std::abs(d.policy_weights[1] - benchmark) < 1e-15);
    CHECK(d.policy_weights[2] == benchmark);
  }

  TEST_CASE("CE never removes and keeps uniform loss weights") {
    SchedulerConfig cfg;
    cfg.method = Method::ce;
    cfg.warm_up = 1;
    cfg.wait = 1;
    HistoryLedger L(2, 4);
    const std::vector<std::size_t> idx{0, 1};
    for (int e = 1; e <= 4; ++e) {
      const auto d = decide_batch(cfg, L, e, idx, Matrix::from_rows({{-3}, {-2}}),
                                  std::vector<int>{1, 1}, OutputMode::binary_logit);
      CHECK(d.loss_weights == std::vector<double>{0.5, 0.5});
      CHECK(d.policy_weights == std::vector<double>{1, 1});
      if (e > 1) CHECK(d.margins == std::vector<double>{-3, -2});
      L.record(e, idx, d.policy_weights, d.margins);
    }
  }

  TEST_CASE("first post-warm-up removal depends only on margin signs") {
    CounterRng rng(17, Stream::data, 2);
    SchedulerConfig cfg;
    cfg.warm_up = 2;
    cfg.wait = 1;
    for (int t = 0; t < 200; ++t) {
      const std::size_t n = 2 + rng.below(10);
      HistoryLedger L(n, 3);
      std::vector<std::size_t> idx(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
      for (int e = 1; e <= 2; ++e) L.record(e, idx, std::vector<double>(n, 1.0), L.margins_at(0, idx));
      Matrix f(n, 3);
      for (double& v : f.data()) v = rng.normal();
      Matrix g = f;
      const double c = 0.01 + 100 * rng.uniform();
      for (double& v : g.data()) v *= c;
      std::vector<int> y(n);
      for (int& v : y) v = static_cast<int>(rng.below(3));
      for (Method method : {Method::marvel, Method::marvel_plus}) {
        cfg.method = method;
        const auto a = decide_batch(cfg, L, 3, idx, f, y, OutputMode::softmax);
        const auto b = decide_batch(cfg, L, 3, idx, g, y, OutputMode::softmax);
        for (std::size_t i = 0; i < n; ++i) {
          CHECK((a.policy_weights[i] == 0.0) == (b.policy_weights[i] == 0.0));
        }
      }
    }
  }

  TEST_CASE("decision invariants on random batches") {
    CounterRng rng(23, Stream::data, 3);
    for (int t = 0; t < 300; ++t) {
      SchedulerConfig cfg;
      cfg.method = rng.below(2) == 0 ? Method::marvel : Method::marvel_plus;
      cfg.warm_up = 1;
      cfg.wait = 1 + static_cast<int>(rng.below(3));
      const std::size_t n = 1 + rng.below(12);
      HistoryLedger L(n, 6);
      std::vector<std::size_t> idx(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
      for (int e = 1; e <= 6; ++e) {
        Matrix f(n, 1);
        for (double& v : f.data()) v = rng.normal() + 0.2;
        const auto d = decide_batch(cfg, L, e, idx, f, std::vector<int>(n, 1),
                                    OutputMode::binary_logit);
        if (!d.all_zero) {
          double s = 0;
          for (double w : d.loss_weights) s += w;
          CHECK(std::abs(s - 1.0) < 1e-12);
        }
        for (double w : d.policy_weights) {
          CHECK(w >= 0.0);
          CHECK(w <= 1.0);
          if (cfg.method == Method::marvel) CHECK((w == 0.0 || w == 1.0));
        }
        L.record(e, idx, d.policy_weights, d.margins);
      }
    }
  }

  TEST_CASE("training loop matches the step-by-step reference") {
    const auto c = oracle::scheduler_equivalence_suite(200, 99);
    INFO(c.detail);
    CHECK(c.ok);
    CHECK(c.cases == 200);
  }

  TEST_CASE("config parsing and validation") {
    CHECK(parse_method("ce") == Method::ce);
    CHECK(parse_method("marvel") == Method::marvel);
    CHECK(parse_method("marvel+") == Method::marvel_plus);
    CHECK(parse_method("marvel_plus") == Method::marvel_plus);
    CHECK_THROWS(parse_method("coteaching"));
    CHECK(parse_stats_scope("prev_epoch") == StatsScope::prev_epoch);
    SchedulerConfig bad;
    bad.wait = 0;
    CHECK_THROWS(bad.validate());
    bad.wait = 1;
    bad.warm_up = 0;
    CHECK_THROWS(bad.validate());
  }
}
