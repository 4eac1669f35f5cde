#include <cmath>

#include "doctest.h"
#include "marvel/errors.hpp"
#include "marvel/model.hpp"
#include "oracles.hpp"

using namespace marvel;

namespace {

Model single_layer(Matrix w, std::vector<double> b, OutputMode mode) {
  return Model({Layer{std::move(w), std::move(b), Activation::identity}}, mode);
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("forward with an identity layer returns the input") {
    const auto m = single_layer(Matrix::from_rows({{1, 0}, {0, 1}}), {0, 0}, OutputMode::softmax);
    CHECK(forward(m, Matrix::from_rows({{1, 2}})) == Matrix::from_rows({{1, 2}}));
  }

  TEST_CASE("forward with zero weights gives zero logits") {
    const auto m = single_layer(Matrix(3, 2), {0, 0, 0}, OutputMode::softmax);
    const auto out = forward(m, Matrix::from_rows({{4, -7}, {0.5, 9}}));
    for (double v : out.data()) CHECK(v == 0.0);
  }

  TEST_CASE("hand-evaluated relu network") {
    // hidden = relu([[1,-1],[2,1]] x + [0,-1]); out = [1,2] hidden + 0.5
    // x = (1,2): pre-activation (-1, 3), relu (0, 3), output 6.5
    Model m({Layer{Matrix::from_rows({{1, -1}, {2, 1}}), {0, -1}, Activation::relu},
             Layer{Matrix::from_rows({{1, 2}}), {0.5}, Activation::identity}},
            OutputMode::binary_logit);
    const auto out = forward(m, Matrix::from_rows({{1, 2}}));
    CHECK(out.rows() == 1);
    CHECK(out.cols() == 1);
    CHECK(out(0, 0) == doctest::Approx(6.5).epsilon(1e-15));
  }

  TEST_CASE("forward rejects a width mismatch") {
    const auto m = Model::linear(3, 2, OutputMode::binary_logit, 1);
    CHECK_THROWS_AS(forward(m, Matrix(2, 4)), ShapeError);
  }

  TEST_CASE("constructor rejects inconsistent layers") {
    CHECK_THROWS_AS(Model({Layer{Matrix(2, 2), {0, 0}, Activation::relu},
                           Layer{Matrix(1, 3), {0}, Activation::identity}},
                          OutputMode::binary_logit),
                    ShapeError);
    CHECK_THROWS(Model({Layer{Matrix(1, 2), {0}, Activation::relu}}, OutputMode::binary_logit));
  }

  TEST_CASE("initialization stays inside the fan-based bound") {
    const auto m = Model::mlp(5, {7}, 3, OutputMode::softmax, 11);
    for (const auto& layer : m.layers()) {
      const double bound =
          std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
      for (double w : layer.weight.data()) CHECK(std::abs(w) <= bound);
    }
    const auto again = Model::mlp(5, {7}, 3, OutputMode::softmax, 11);
    CHECK(again.layers()[0].weight == m.layers()[0].weight);
  }

  TEST_CASE("probabilities") {
    SUBCASE("binary logit 0 is a coin flip") {
      const auto p = probabilities(Matrix::from_rows({{0.0}}));
      CHECK(p.cols() == 2);
      CHECK(p(0, 1) == 0.5);
      CHECK(p(0, 0) == 0.5);
    }
    SUBCASE("uniform softmax") {
      const auto p = probabilities(Matrix::from_rows({{0, 0, 0}}));
      for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(p(0, j) - 1.0 / 3.0) < 1e-15);
    }
    SUBCASE("binary logit ln 3 gives 3/4") {
      const auto p = probabilities(Matrix::from_rows({{std::log(3.0)}}));
      CHECK(std::abs(p(0, 1) - 0.75) < 1e-12);
    }
    SUBCASE("huge logits do not overflow") {
      const auto p = probabilities(Matrix::from_rows({{1000, -1000, 0}}));
      CHECK(p(0, 0) == 1.0);
      CHECK(std::isfinite(p(0, 1)));
    }
  }

  TEST_CASE("weighted cross entropy") {
    SUBCASE("confident correct instance costs nothing") {
      CHECK(weighted_ce_loss(Matrix::from_rows({{0, -1000}}), std::vector<int>{0},
                             std::vector<double>{1.0}, OutputMode::softmax) == 0.0);
    }
    SUBCASE("two coin flips cost ln 2") {
      const double loss = weighted_ce_loss(Matrix::from_rows({{0.0}, {0.0}}),
                                           std::vector<int>{1, -1}, std::vector<double>{0.5, 0.5},
                                           OutputMode::binary_logit);
      CHECK(std::abs(loss - std::log(2.0)) < 1e-15);
    }
    SUBCASE("zero-weight instance contributes nothing") {
      const auto logits = Matrix::from_rows({{0.3, 1.2}, {-2.0, 4.0}});
      const std::vector<int> y{0, 0};
      const auto per = instance_losses(logits, y, OutputMode::softmax);
      CHECK(weighted_ce_loss(logits, y, std::vector<double>{1, 0}, OutputMode::softmax) == per[0]);
    }
    SUBCASE("negative weight is rejected") {
      CHECK_THROWS_AS(weighted_ce_loss(Matrix::from_rows({{0.0}, {1.0}}), std::vector<int>{1, 1},
                                       std::vector<double>{1.5, -0.5}, OutputMode::binary_logit),
                      DomainError);
    }
    SUBCASE("uniform weights equal the plain mean") {
      const auto logits = Matrix::from_rows({{0.3, 1.2, -1}, {-2.0, 4.0, 0}, {1, 1, 1}});
      const std::vector<int> y{0, 2, 1};
      const auto per = instance_losses(logits, y, OutputMode::softmax);
      const double mean = (per[0] + per[1] + per[2]) / 3.0;
      const double w = 1.0 / 3.0;
      CHECK(std::abs(weighted_ce_loss(logits, y, std::vector<double>{w, w, w},
                                      OutputMode::softmax) -
                     mean) < 1e-12);
    }
  }

  TEST_CASE("gradients") {
    SUBCASE("one-hot weights isolate one instance") {
      const auto m = Model::mlp(3, {4}, 3, OutputMode::softmax, 5);
      const auto x = Matrix::from_rows({{0.1, -0.4, 2}, {1, 1, -1}, {0.3, 0.2, 0.1}});
      const std::vector<int> y{2, 0, 1};
      const auto full = oracle::flatten(gradients(m, x, y, std::vector<double>{0, 1, 0}));
      const auto single = oracle::flatten(
          gradients(m, Matrix::from_rows({{1, 1, -1}}), std::vector<int>{0}, std::vector<double>{1}));
      CHECK(full == single);
    }
    SUBCASE("logistic gradient of a linear model") {
      auto m = Model::linear(2, 2, OutputMode::binary_logit, 3);
      m.layers()[0].weight = Matrix::from_rows({{0.4, -0.3}});
      m.layers()[0].bias = {0.1};
      const std::vector<double> x{1.5, 2.0};
      for (int y : {-1, 1}) {
        const double f = 0.4 * 1.5 - 0.3 * 2.0 + 0.1;
        const double p_pos = 1.0 / (1.0 + std::exp(-f));
        const double coeff = p_pos - (y == 1 ? 1.0 : 0.0);
        const auto g = gradients(m, Matrix::from_rows({x}), std::vector<int>{y},
                                 std::vector<double>{1.0});
        CHECK(std::abs(g.weight[0](0, 0) - coeff * x[0]) < 1e-14);
        CHECK(std::abs(g.weight[0](0, 1) - coeff * x[1]) < 1e-14);
        CHECK(std::abs(g.bias[0][0] - coeff) < 1e-14);
      }
    }
    SUBCASE("finite-difference agreement on 100 random triples") {
      const auto c = oracle::gradient_check_suite(100, 2024);
      INFO(c.detail);
      CHECK(c.ok);
      CHECK(c.cases == 100);
    }
  }

  TEST_CASE("softmax shift invariance and binary consistency") {
    const auto shift = oracle::softmax_shift_suite(500, 7);
    INFO(shift.detail);
    CHECK(shift.ok);
    const auto bin = oracle::binary_consistency_suite(500, 8);
    INFO(bin.detail);
    CHECK(bin.ok);
  }

  TEST_CASE("sgd step") {
    SUBCASE("plain step") {
      auto m = single_layer(Matrix::from_rows({{1.0, -2.0}}), {0.5}, OutputMode::binary_logit);
      auto g = Gradients::zeros_like(m);
      g.weight[0] = Matrix::from_rows({{0.3, 0.7}});
      g.bias[0] = {-1.0};
      OptimizerConfig cfg{0.1, 0.0, 0.0, {}, 10.0};
      SgdState state(m);
      sgd_step(m, g, 1, cfg, state);
      CHECK(std::abs(m.layers()[0].weight(0, 0) - (1.0 - 0.03)) < 1e-15);
      CHECK(std::abs(m.layers()[0].weight(0, 1) - (-2.0 - 0.07)) < 1e-15);
      CHECK(std::abs(m.layers()[0].bias[0] - 0.6) < 1e-15);
    }
    SUBCASE("learning-rate schedule") {
      OptimizerConfig cfg{0.1, 0.9, 2e-4, {75, 90}, 10.0};
      CHECK(cfg.learning_rate_at(74) == doctest::Approx(0.1).epsilon(1e-15));
      CHECK(cfg.learning_rate_at(75) == doctest::Approx(0.01).epsilon(1e-15));
      CHECK(cfg.learning_rate_at(90) == doctest::Approx(0.001).epsilon(1e-15));
    }
    SUBCASE("momentum unrolls to g + 1.9 g") {
      auto m = single_layer(Matrix::from_rows({{0.0}}), {0.0}, OutputMode::binary_logit);
      auto g = Gradients::zeros_like(m);
      g.weight[0](0, 0) = 0.25;
      g.bias[0][0] = -2.0;
      OptimizerConfig cfg{1.0, 0.9, 0.0, {}, 10.0};
      SgdState state(m);
      sgd_step(m, g, 1, cfg, state);
      sgd_step(m, g, 2, cfg, state);
      CHECK(std::abs(m.layers()[0].weight(0, 0) - (-2.9 * 0.25)) < 1e-15);
      CHECK(std::abs(m.layers()[0].bias[0] - (2.9 * 2.0)) < 1e-14);
    }
    SUBCASE("zero gradient without decay is the identity") {
      auto m = Model::mlp(3, {4}, 2, OutputMode::binary_logit, 9);
      const auto before = m.layers();
      OptimizerConfig cfg{0.5, 0.9, 0.0, {}, 10.0};
      SgdState state(m);
      for (int e = 1; e <= 3; ++e) sgd_step(m, Gradients::zeros_like(m), e, cfg, state);
      for (std::size_t l = 0; l < before.size(); ++l) {
        CHECK(m.layers()[l].weight == before[l].weight);
        CHECK(m.layers()[l].bias == before[l].bias);
      }
    }
    SUBCASE("invalid configurations") {
      CHECK_THROWS_AS((OptimizerConfig{0.1, 0.9, 0.0, {90, 75}, 10.0}.validate()), DomainError);
      CHECK_THROWS_AS((OptimizerConfig{-0.1, 0.9, 0.0, {}, 10.0}.validate()), DomainError);
    }
  }
}
