#include <doctest.h>

#include "m2t/errors.hpp"
#include "m2t/segmentation.hpp"
#include "m2t/text.hpp"
#include "oracles.hpp"

using namespace m2t;

namespace {

std::vector<std::string> words(const char* s) {
  std::vector<std::string> out;
  std::string w;
  for (const char* c = s;; ++c) {
    if (*c == ' ' || *c == 0) {
      if (!w.empty()) out.push_back(w);
      w.clear();
      if (*c == 0) break;
    } else {
      w += *c;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("language segmentation of the u-turn sentence") {
  auto tokens = words("a person walks forward then turns around and walks back <eos>");
  auto a = language_segmentation(tokens, words("walks turns walks"));
  REQUIRE(a);
  CHECK(a->k == std::vector<std::size_t>{2, 5, 8});
  CHECK(a->eos == 10);
  CHECK(a->segment_end(2) == 11);
}

TEST_CASE("language segmentation failures and edge cases") {
  auto tokens = words("a person walks forward <eos>");
  CHECK_FALSE(language_segmentation(tokens, words("walks turns")));
  CHECK_FALSE(language_segmentation(tokens, words("forward walks")));
  CHECK_THROWS_AS(language_segmentation(words("a person walks"), words("walks")), ArgumentError);

  auto single = language_segmentation(words("a walks b <eos>"), words("walks"));
  REQUIRE(single);
  CHECK(single->k == std::vector<std::size_t>{1});
  CHECK(single->eos == 3);
  CHECK(single->segment_begin(0) == 1);
  CHECK(single->segment_end(0) == 4);
}

TEST_CASE("motion segmentation covers member windows") {
  WordAlignment a{{0}, 2};
  std::vector<SegmentInterval> s{{0, 10}, {5, 15}, {10, 20}};
  auto p = motion_segmentation(s, a);
  REQUIRE(p.size() == 1);
  CHECK(p[0].interval == SegmentInterval{0, 20});
  CHECK_FALSE(p[0].gap);

  WordAlignment b{{0, 1}, 2};
  auto q = motion_segmentation(s, b);
  CHECK(q[0].interval == SegmentInterval{0, 10});
  CHECK(q[1].interval == SegmentInterval{5, 20});

  std::vector<SegmentInterval> gappy{{0, 4}, {10, 14}, {14, 16}};
  auto g = motion_segmentation(gappy, a);
  CHECK(g[0].interval == SegmentInterval{0, 16});
  CHECK(g[0].gap);
}

TEST_CASE("iou and iop examples") {
  CHECK(iou({10, 20}, {15, 25}) == doctest::Approx(1.0 / 3));
  CHECK(iop({10, 20}, {15, 25}) == 0.5);
  CHECK(iou({3, 9}, {3, 9}) == 1.0);
  CHECK(iou({0, 5}, {5, 9}) == 0.0);
  CHECK(iop({0, 5}, {6, 9}) == 0.0);
  CHECK(iop({12, 14}, {10, 20}) == 1.0);
}

TEST_CASE("interval scores equal frame enumeration") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    auto p = oracle::random_interval(rng), g = oracle::random_interval(rng);
    CHECK(overlap(p, g) == static_cast<int>(oracle::intersection_count(p, g)));
    CHECK(union_size(p, g) == static_cast<int>(oracle::union_count(p, g)));
    CHECK(iou(p, g) == oracle::iou(p, g));
    CHECK(iop(p, g) == oracle::iop(p, g));
    CHECK(iou(p, g) <= iop(p, g));
  }
}

TEST_CASE("thresholded scores") {
  std::vector<SegmentInterval> P{{10, 20}, {30, 40}}, G{{15, 25}, {30, 40}};
  CHECK(*iou_score(P, G, 0.0) == 1.0);
  CHECK(*iou_score(P, G, 0.5) == 0.5);
  CHECK(*iou_score(P, G, std::nullopt) == doctest::Approx((1.0 / 3 + 1.0) / 2));
  CHECK_FALSE(iou_score(P, std::vector<SegmentInterval>{{0, 1}}, 0.5));
  CHECK_THROWS_AS(iou_score({}, {}, 0.5), ArgumentError);

  std::mt19937_64 rng(2);
  for (int i = 0; i < 500; ++i) {
    std::vector<SegmentInterval> p, g;
    for (int k = 0; k < 3; ++k) {
      p.push_back(oracle::random_interval(rng, 50));
      g.push_back(oracle::random_interval(rng, 50));
    }
    const double cont = *iou_score(p, g, std::nullopt);
    double last = 2.0;
    for (int t = 0; t <= 10; ++t) {
      const double th = t / 10.0;
      const double s = *iou_score(p, g, th);
      CHECK(s <= last);
      last = s;
      if (th > 0) CHECK(s <= cont / th + 1e-12);
    }
  }
}

TEST_CASE("element-of") {
  WordAlignment a{{0}, 1};
  std::vector<SegmentInterval> G{{10, 20}};
  CHECK(element_of_score(std::vector<double>{12, 12}, a, G) == 1.0);
  CHECK(element_of_score(std::vector<double>{20, 12}, a, G) == 0.5);
  CHECK(element_of_score(std::vector<double>{9.5, 19.49}, a, G) == 1.0);
  CHECK(element_of_score(std::vector<double>{9.49, 19.5}, a, G) == 0.0);
  CHECK_THROWS_AS(element_of_score(std::vector<double>{}, a, G), UnsupportedModeError);

  WordAlignment two{{0, 2}, 3};
  std::vector<SegmentInterval> G2{{0, 5}, {5, 10}};
  CHECK(element_of_score(std::vector<double>{1, 2, 6, 7}, two, G2) == 1.0);
  CHECK(element_of_score(std::vector<double>{1, 7, 6, 1}, two, G2) == 0.5);
  CHECK(element_of_score(std::vector<double>{1, 7, 6, 1}, two, G2, 0.6) == 0.0);
}

TEST_CASE("corpus scores") {
  SegmentationInput in;
  in.id = "s";
  in.tokens = words("a person walks then turns <eos>");
  in.word_segments = {{0, 4}, {0, 6}, {2, 8}, {4, 10}, {8, 14}, {10, 16}};
  in.positions = {1, 3, 5, 7, 11, 13};
  in.truth = {{"walks", "turns"}, {{0, 9}, {9, 16}}};
  auto one = corpus_scores(std::vector<SegmentationInput>{in}, default_theta_grid());
  auto s = segment_sample(in);
  REQUIRE(s);
  CHECK(one.scored == 1);
  CHECK(one.iou_continuous == doctest::Approx(aggregate(s->iou, std::nullopt)));
  CHECK(*one.element_of_continuous == doctest::Approx(aggregate(*s->element_of, std::nullopt)));

  SegmentationInput bad = in;
  bad.id = "bad";
  bad.tokens = words("a person squats <eos>");
  bad.word_segments.resize(4);
  bad.positions.resize(4);
  auto both = corpus_scores(std::vector<SegmentationInput>{in, in, bad}, default_theta_grid());
  CHECK(both.scored == 2);
  CHECK(both.excluded == std::vector<std::string>{"bad"});
  CHECK(both.iou == one.iou);
  CHECK(both.iop_continuous == one.iop_continuous);
  CHECK_THROWS_AS(corpus_scores(std::vector<SegmentationInput>{bad}, default_theta_grid()), ArgumentError);

  SegmentationInput soft = in;
  soft.positions.clear();
  auto rs = corpus_scores(std::vector<SegmentationInput>{soft}, default_theta_grid());
  CHECK_FALSE(rs.element_of_continuous);
}
