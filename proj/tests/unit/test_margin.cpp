#include <cmath>

#include "doctest.h"
#include "marvel/errors.hpp"
#include "marvel/margin.hpp"
#include "marvel/rng.hpp"

using namespace marvel;

TEST_SUITE("margin") {
  TEST_CASE("binary margin") {
    CHECK(binary_margin(1.2, -1) == -1.2);
    CHECK(binary_margin(0.0, 1) == 0.0);
    CHECK(binary_margin(0.0, -1) == 0.0);
    CHECK(binary_margin(-0.7, -1) == 0.7);
    CHECK_THROWS_AS(binary_margin(1.0, 0), DomainError);
    CHECK_THROWS_AS(binary_margin(1.0, 2), DomainError);
  }

  TEST_CASE("multi-class margin") {
    const std::vector<double> f{2.0, 0.5, -1.0};
    CHECK(multiclass_margin(f, 0) == 1.5);
    CHECK(multiclass_margin(f, 2) == -3.0);
    CHECK(multiclass_margin(std::vector<double>{1.0, 1.0}, 0) == 0.0);
    CHECK_THROWS_AS(multiclass_margin(f, 3), DomainError);
    CHECK_THROWS_AS(multiclass_margin(f, -1), DomainError);
    CHECK_THROWS_AS(multiclass_margin(std::vector<double>{1.0}, 0), DomainError);
  }

  TEST_CASE("prediction rules") {
    CHECK(predict(std::vector<double>{0.1, 0.9}) == 1);
    CHECK(predict(std::vector<double>{0.5, 0.5}) == 0);
    CHECK(predict(std::vector<double>{-1, 3, 3}) == 1);
    CHECK(predict_sign(-0.3) == -1);
    CHECK(predict_sign(0.3) == 1);
  }

  TEST_CASE("vectorized margins and predictions") {
    const auto bin = Matrix::from_rows({{0.5}, {-2.0}, {0.0}});
    CHECK(margins(bin, std::vector<int>{1, 1, -1}, OutputMode::binary_logit) ==
          std::vector<double>{0.5, -2.0, 0.0});
    CHECK(predictions(bin, OutputMode::binary_logit) == std::vector<int>{1, -1, -1});
    const auto soft = Matrix::from_rows({{2.0, 0.5, -1.0}, {0, 0, 1}});
    CHECK(margins(soft, std::vector<int>{0, 1}, OutputMode::softmax) ==
          std::vector<double>{1.5, -1.0});
    CHECK(predictions(soft, OutputMode::softmax) == std::vector<int>{0, 2});
    CHECK_THROWS_AS(margins(soft, std::vector<int>{0}, OutputMode::softmax), ShapeError);
  }

  TEST_CASE("sign of the margin matches the prediction") {
    CounterRng rng(3, Stream::data, 9);
    for (int t = 0; t < 2000; ++t) {
      const std::size_t k = 2 + rng.below(4);
      std::vector<double> f(k);
      // Coarse grid so ties occur often.
      for (double& v : f) v = static_cast<double>(rng.below(5));
      const int y = static_cast<int>(rng.below(k));
      const double m = multiclass_margin(f, y);
      std::size_t top = 0;
      for (double v : f) top += v == *std::max_element(f.begin(), f.end()) ? 1 : 0;
      const bool unique_winner = static_cast<int>(predict(f)) == y && top == 1;
      CHECK((m > 0) == unique_winner);
      double best_other = -INFINITY;
      for (std::size_t j = 0; j < k; ++j) {
        if (static_cast<int>(j) != y) best_other = std::max(best_other, f[j]);
      }
      CHECK((m == 0) == (f[static_cast<std::size_t>(y)] == best_other));
    }
  }
}
