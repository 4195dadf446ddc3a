#include <doctest.h>

#include <cmath>

#include "gradcases.hpp"
#include "m2t/errors.hpp"
#include "m2t/ops.hpp"

using namespace m2t;
using m2t::testing::gradient_cases;

TEST_CASE("every operation passes finite differences") {
  std::mt19937_64 rng(11);
  for (const auto& c : gradient_cases()) {
    for (int i = 0; i < 10; ++i) {
      CAPTURE(c.name);
      CAPTURE(i);
      CHECK(c.run(rng) < 1e-4);
    }
  }
}

TEST_CASE("matmul values") {
  Tape t(false);
  Var a = t.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  Var b = t.constant(Tensor::matrix(2, 1, {5, 6}));
  CHECK(matmul(a, b).value() == Tensor::matrix(2, 1, {17, 39}));
  CHECK(matmul_nt(a, a).value() == Tensor::matrix(2, 2, {5, 11, 11, 25}));
  CHECK(matvec(a, t.constant(Tensor::vector({1, 1}))).value() == Tensor::vector({3, 7}));
}

TEST_CASE("shape mismatches name both shapes") {
  Tape t(false);
  Var a = t.constant(Tensor({2, 3}));
  Var b = t.constant(Tensor({2, 2}));
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[2x2]") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, b), DimensionError);
}

TEST_CASE("softmax is stable and zero past the valid prefix") {
  Tape t(false);
  Var v = t.constant(Tensor::vector({1000, 1000, 5}));
  auto s = softmax(v, 2).value();
  CHECK(s[0] == doctest::Approx(0.5));
  CHECK(s[1] == doctest::Approx(0.5));
  CHECK(s[2] == 0.0);
  auto ls = log_softmax(t.constant(Tensor::vector({-1000, 0}))).value();
  CHECK(std::isfinite(ls[0]));
  CHECK(ls[1] == doctest::Approx(0.0));
}

TEST_CASE("nll equals minus log softmax at the target") {
  Tape t(false);
  Var v = t.constant(Tensor::vector({0.3, -1.2, 2.0}));
  CHECK(nll(v, 2).item() == doctest::Approx(-log_softmax(v).value()[2]));
  CHECK_THROWS_AS(nll(v, 3), ArgumentError);
}

TEST_CASE("sigmoid saturates without overflow") {
  Tape t(false);
  auto s = sigmoid(t.constant(Tensor::vector({-800, 800}))).value();
  CHECK(s[0] == 0.0);
  CHECK(s[1] == 1.0);
}

TEST_CASE("mixing tapes is rejected") {
  Tape a, b;
  Var x = a.leaf(Tensor::scalar(1));
  Var y = b.leaf(Tensor::scalar(1));
  CHECK_THROWS_AS(add(x, y), StateError);
}
