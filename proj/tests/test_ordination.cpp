#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "paa/composition.hpp"
#include "paa/diversity.hpp"
#include "paa/hpaa.hpp"
#include "paa/ordination.hpp"
#include "paa/taxonomy.hpp"

using namespace paa;

namespace {

// Classic minimax characterization of weighted isotonic regression:
// fit_i = max over j <= i of min over k >= i of the weighted mean y[j..k].
std::vector<double> isotonic_minimax(const std::vector<double>& y,
                                     const std::vector<double>& w) {
  std::size_t n = y.size();
  std::vector<double> fit(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = -1e300;
    for (std::size_t j = 0; j <= i; ++j) {
      double worst = 1e300;
      for (std::size_t k = i; k < n; ++k) {
        double num = 0.0, den = 0.0;
        for (std::size_t l = j; l <= k; ++l) {
          num += w[l] * y[l];
          den += w[l];
        }
        worst = std::min(worst, num / den);
      }
      best = std::max(best, worst);
    }
    fit[i] = best;
  }
  return fit;
}

DistanceMatrix matrix_from_points(const std::vector<double>& pts,
                                  std::size_t dim) {
  DistanceMatrix D;
  D.n = pts.size() / dim;
  D.values.assign(D.n * D.n, 0.0);
  for (std::size_t i = 0; i < D.n; ++i) {
    D.sample_ids.push_back("p" + std::to_string(i));
    for (std::size_t j = 0; j < D.n; ++j) {
      double sq = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        double d = pts[i * dim + k] - pts[j * dim + k];
        sq += d * d;
      }
      D.at(i, j) = std::sqrt(sq);
    }
  }
  return D;
}

CompositionMatrix demo_matrix() {
  return make_composition(3, 4,
                          {10, 20, 30, 40, 40, 30, 20, 10, 25, 25, 25, 25},
                          {"s1", "s2", "s3"}, {"A", "B", "C", "D"});
}

}  // namespace

TEST_CASE("isotonic regression pools violating blocks") {
  CHECK(isotonic_fit({3, 1, 2}, {1, 1, 1}) ==
        std::vector<double>{2.0, 2.0, 2.0});
  CHECK(isotonic_fit({5, 1}, {1, 3}) == std::vector<double>{2.0, 2.0});
  CHECK(isotonic_fit({1, 2, 3}, {1, 1, 1}) ==
        std::vector<double>{1.0, 2.0, 3.0});
  CHECK(isotonic_fit({7}, {2}) == std::vector<double>{7.0});
  CHECK_THROWS_AS(isotonic_fit({1, 2}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(isotonic_fit({1, 2}, {1, 0}), std::invalid_argument);
}

TEST_CASE("isotonic regression matches the minimax characterization") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 40; ++rep) {
    std::size_t n = 1 + rng() % 7;
    std::vector<double> y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<double>(rng() % 9) * 0.25;
      w[i] = 0.5 + static_cast<double>(rng() % 4);
    }
    std::vector<double> got = isotonic_fit(y, w);
    std::vector<double> want = isotonic_minimax(y, w);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
      if (i > 0) CHECK(got[i] >= got[i - 1] - 1e-12);
    }
  }
}

TEST_CASE("classical scaling reproduces exactly embeddable distances") {
  DistanceMatrix D = matrix_from_points({0.0, 1.0, 3.0}, 1);
  std::vector<double> coords = classical_mds_init(D, 1);
  REQUIRE(coords.size() == 3);
  CHECK(coords[0] + coords[1] + coords[2] == doctest::Approx(0.0));
  CHECK(std::abs(coords[0] - coords[1]) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(coords[1] - coords[2]) == doctest::Approx(2.0).epsilon(1e-9));
  // Sign convention: the largest-magnitude coordinate is positive.
  double peak = 0.0;
  for (double c : coords) {
    if (std::abs(c) > std::abs(peak)) peak = c;
  }
  CHECK(peak > 0.0);
  CHECK_THROWS_AS(classical_mds_init(D, 0), std::invalid_argument);
  CHECK_THROWS_AS(classical_mds_init(D, 3), std::invalid_argument);
}

TEST_CASE("stress is zero for order-perfect configurations and frozen otherwise") {
  DistanceMatrix D = matrix_from_points({0.0, 1.0, 3.0}, 1);
  std::vector<double> perfect = {0.0, 1.0, 3.0};
  CHECK(stress1(D, perfect, 1) == doctest::Approx(0.0));
  // Swapping the order of the two short pairs costs exactly 1/3.
  std::vector<double> wrong = {0.0, 2.0, 1.0};
  CHECK(stress1(D, wrong, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(stress1(D, {0.0, 1.0}, 1), std::invalid_argument);
}

TEST_CASE("nmds recovers a planar configuration to near-zero stress") {
  DistanceMatrix D =
      matrix_from_points({0, 0, 1, 0, 1, 1, 0, 1}, 2);  // unit square
  NmdsOptions opt;
  opt.dim = 2;
  Embedding e = nmds(D, opt);
  CHECK(e.n_points == 4);
  CHECK(e.dim == 2);
  CHECK(e.stress < 1e-6);
  CHECK(e.point_ids == D.sample_ids);
  // Stress can only improve on the metric start.
  double init_stress = stress1(D, classical_mds_init(D, 2), 2);
  CHECK(e.stress <= init_stress + 1e-12);
}

TEST_CASE("nmds is deterministic and restarts never hurt") {
  // A noisy dissimilarity that no 2D configuration fits exactly.
  DistanceMatrix D;
  D.n = 5;
  D.sample_ids = {"a", "b", "c", "d", "e"};
  D.values.assign(25, 0.0);
  std::mt19937_64 rng(99);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = i + 1; j < 5; ++j) {
      double v = 0.2 + static_cast<double>(rng() % 100) / 100.0;
      D.at(i, j) = v;
      D.at(j, i) = v;
    }
  }
  NmdsOptions opt;
  opt.dim = 2;
  opt.restarts = 2;
  opt.seed = 11;
  Embedding a = nmds(D, opt);
  Embedding b = nmds(D, opt);
  CHECK(a.coords == b.coords);
  CHECK(a.stress == b.stress);

  NmdsOptions plain = opt;
  plain.restarts = 0;
  Embedding base = nmds(D, plain);
  CHECK(a.stress <= base.stress + 1e-15);
}

TEST_CASE("nmds rejects degenerate dissimilarities") {
  DistanceMatrix zero;
  zero.n = 3;
  zero.values.assign(9, 0.0);
  zero.sample_ids = {"a", "b", "c"};
  CHECK_THROWS_WITH_AS(nmds(zero), doctest::Contains("identically zero"),
                       std::invalid_argument);

  DistanceMatrix tiny = matrix_from_points({0.0, 1.0}, 1);
  CHECK_THROWS_WITH_AS(nmds(tiny), doctest::Contains("at least 3"),
                       std::invalid_argument);

  DistanceMatrix bad = matrix_from_points({0.0, 1.0, 3.0}, 1);
  bad.at(0, 1) = -0.5;
  CHECK_THROWS_AS(nmds(bad), std::invalid_argument);
  bad.at(0, 1) = std::nan("");
  CHECK_THROWS_AS(nmds(bad), std::invalid_argument);
}

TEST_CASE("the paired ordination stacks originals and principals") {
  CompositionMatrix X = demo_matrix();
  MergeTrace trace = run_hpaa(X, std::nullopt, LossSpec{LossKind::SDI, {}, false},
                              ConstraintLevel::Unconstrained);
  CutResult at2 = cut(trace, 2);
  OrdinationCompare cmp =
      ordination_compare(X, at2.grouping, LossSpec{LossKind::BC, {}, false});

  CHECK(cmp.embedding.n_points == 6);
  CHECK(cmp.embedding.point_ids ==
        std::vector<std::string>{"s1", "s2", "s3", "s1", "s2", "s3"});
  REQUIRE(cmp.pairing.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(cmp.pairing[i].first == i);
    CHECK(cmp.pairing[i].second == 3 + i);
    double dx = cmp.embedding.at(i, 0) - cmp.embedding.at(3 + i, 0);
    double dy = cmp.embedding.at(i, 1) - cmp.embedding.at(3 + i, 1);
    double dist = std::sqrt(dx * dx + dy * dy);
    CHECK(cmp.pair_distance[i] == doctest::Approx(dist).epsilon(1e-12));
    CHECK(cmp.radii[i] == doctest::Approx(dist / 2.0).epsilon(1e-12));
  }
  double mean = (cmp.pair_distance[0] + cmp.pair_distance[1] +
                 cmp.pair_distance[2]) /
                3.0;
  CHECK(cmp.mean_distance == doctest::Approx(mean).epsilon(1e-12));
  double var = 0.0;
  for (double d : cmp.pair_distance) var += (d - mean) * (d - mean);
  CHECK(cmp.sd_distance == doctest::Approx(std::sqrt(var / 2.0)).epsilon(1e-12));
}

TEST_CASE("the paired ordination needs a between-sample metric") {
  CompositionMatrix X = demo_matrix();
  MergeTrace trace = run_hpaa(X, std::nullopt, LossSpec{LossKind::SDI, {}, false},
                              ConstraintLevel::Unconstrained);
  CutResult at2 = cut(trace, 2);
  CHECK_THROWS_WITH_AS(
      ordination_compare(X, at2.grouping, LossSpec{LossKind::SDI, {}, false}),
      doctest::Contains("between-sample"), std::invalid_argument);
}

TEST_CASE("the paired ordination is identical across thread counts") {
  CompositionMatrix X = demo_matrix();
  MergeTrace trace = run_hpaa(X, std::nullopt, LossSpec{LossKind::SDI, {}, false},
                              ConstraintLevel::Unconstrained);
  CutResult at2 = cut(trace, 2);
  LossSpec bc{LossKind::BC, {}, false};
  OrdinationCompare a = ordination_compare(X, at2.grouping, bc, {}, 1);
  OrdinationCompare b = ordination_compare(X, at2.grouping, bc, {}, 4);
  CHECK(a.embedding.coords == b.embedding.coords);
  CHECK(a.embedding.stress == b.embedding.stress);
}
