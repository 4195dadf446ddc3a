#include <doctest.h>

#include <limits>

#include "m2t/errors.hpp"
#include "m2t/tensor.hpp"

using namespace m2t;

TEST_CASE("shapes and element access") {
  Tensor m = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(m.rank() == 2);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 6);
  CHECK(m.row(1)[0] == 4);
  CHECK(Tensor::scalar(2.5).item() == 2.5);
  CHECK(Tensor::vector({1, 2}).rows() == 2);
  CHECK(Tensor::vector({1, 2}).cols() == 1);
  CHECK(shape_string({2, 3}) == "[2x3]");
}

TEST_CASE("construction validates shape") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(Tensor(Shape{1, 1, 1}), DimensionError);
  CHECK_THROWS_AS(Tensor::vector({1, 2}).item(), DimensionError);
}

TEST_CASE("finiteness and fill") {
  Tensor t = Tensor::full({3}, 1.0);
  CHECK(t.all_finite());
  t[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
  t.fill(0.0);
  CHECK(t == Tensor::vector({0, 0, 0}));
}
