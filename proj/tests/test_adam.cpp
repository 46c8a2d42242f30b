#include <doctest.h>

#include <cmath>
#include <limits>

#include "ultrasr/adam.hpp"

using namespace ultrasr;

namespace {

// Textbook ADAM on a scalar, written out independently of the library.
double reference_adam(double p, const std::vector<double>& grads, double lr) {
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double m = 0.0, v = 0.0;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const double g = grads[t - 1];
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, static_cast<double>(t)));
    const double vh = v / (1 - std::pow(b2, static_cast<double>(t)));
    p -= lr * mh / (std::sqrt(vh) + eps);
  }
  return p;
}

}  // namespace

TEST_CASE("first ADAM step moves each weight by about lr against the gradient sign") {
  ParamMap<double> p{{"w", Tensor<double>({2}, std::vector<double>{1.0, -1.0})}};
  const ParamMap<double> g{{"w", Tensor<double>({2}, std::vector<double>{0.5, -3.0})}};
  AdamState<double> s;
  s.lr = 0.1;
  adam_step(p, g, s);
  // lr * g / (|g| + eps) after bias correction.
  CHECK(p["w"][0] == doctest::Approx(0.900000002).epsilon(1e-12));
  CHECK(p["w"][1] == doctest::Approx(-0.9000000003333).epsilon(1e-12));
  CHECK(s.t == 1);
}

TEST_CASE("several ADAM steps match the textbook recurrence") {
  const std::vector<double> gs{0.3, -1.2, 0.7, 0.05, 2.0};
  ParamMap<double> p{{"w", Tensor<double>::scalar(0.25)}};
  AdamState<double> s;
  s.lr = 0.01;
  for (double g : gs) adam_step(p, ParamMap<double>{{"w", Tensor<double>::scalar(g)}}, s);
  CHECK(p["w"][0] == doctest::Approx(reference_adam(0.25, gs, 0.01)).epsilon(1e-14));
}

TEST_CASE("a non-finite gradient aborts the step without touching anything") {
  ParamMap<float> p{{"a", Tensor<float>({2}, 1.0f)}, {"b", Tensor<float>({1}, 2.0f)}};
  const ParamMap<float> before = p;
  ParamMap<float> g{{"a", Tensor<float>({2}, 0.5f)},
                    {"b", Tensor<float>({1}, std::numeric_limits<float>::quiet_NaN())}};
  AdamState<float> s;
  try {
    adam_step(p, g, s);
    FAIL("expected NonFiniteGradient");
  } catch (const NonFiniteGradient& e) {
    CHECK(e.param() == "b");
  }
  CHECK(p == before);
  CHECK(s.t == 0);
  CHECK(s.m.empty());
}

TEST_CASE("a missing gradient is rejected") {
  ParamMap<double> p{{"a", Tensor<double>({1})}};
  AdamState<double> s;
  CHECK_THROWS_AS(adam_step(p, ParamMap<double>{}, s), std::invalid_argument);
}
