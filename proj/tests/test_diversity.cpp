#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "paa/common.hpp"
#include "paa/composition.hpp"
#include "paa/diversity.hpp"
#include "paa/taxonomy.hpp"

using namespace paa;

namespace {

CompositionMatrix three_samples() {
  // Rows: (0.5, 0.5, 0), (0, 0.5, 0.5), (1/3, 1/3, 1/3).
  return make_composition(3, 3, {1, 1, 0, 0, 1, 1, 1, 1, 1},
                          {"s1", "s2", "s3"}, {"A", "B", "C"});
}

}  // namespace

TEST_CASE("loss names round-trip and classify") {
  CHECK(loss_name(LossKind::SDI) == "sdi");
  CHECK(loss_name(LossKind::WUF) == "wuf");
  CHECK(loss_from_name("BC") == LossKind::BC);
  CHECK(loss_from_name("Swi") == LossKind::SWI);
  CHECK_THROWS_WITH_AS(loss_from_name("euclid"), doctest::Contains("unknown loss"),
                       std::invalid_argument);
  CHECK(is_alpha_loss(LossKind::SDI));
  CHECK(is_alpha_loss(LossKind::SWI));
  CHECK_FALSE(is_alpha_loss(LossKind::BC));
  CHECK_FALSE(is_alpha_loss(LossKind::WUF));
}

TEST_CASE("Gini-Simpson index on frozen values") {
  std::vector<double> x = {0.2, 0.3, 0.5};
  CHECK(sdi(x) == doctest::Approx(0.62).epsilon(1e-15));  // 1 - 0.38
  std::vector<double> u = {0.25, 0.25, 0.25, 0.25};
  CHECK(sdi(u) == doctest::Approx(0.75).epsilon(1e-15));
  std::vector<double> point = {1.0, 0.0};
  CHECK(sdi(point) == doctest::Approx(0.0));
}

TEST_CASE("Shannon index handles zeros and both log bases") {
  std::vector<double> even = {0.5, 0.5};
  CHECK(swi(even) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(swi(even, true) == doctest::Approx(1.0).epsilon(1e-15));
  std::vector<double> x = {0.2, 0.3, 0.5};
  CHECK(swi(x) == doctest::Approx(1.0296530140645735).epsilon(1e-14));
  std::vector<double> point = {1.0, 0.0, 0.0};
  CHECK(swi(point) == doctest::Approx(0.0));
}

TEST_CASE("Bray-Curtis is half the L1 distance on compositions") {
  std::vector<double> x = {0.5, 0.5, 0.0};
  std::vector<double> y = {0.0, 0.5, 0.5};
  CHECK(bray_curtis(x, y) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(bray_curtis(x, x) == doctest::Approx(0.0));
  std::vector<double> a = {1.0, 0.0};
  std::vector<double> b = {0.0, 1.0};
  CHECK(bray_curtis(a, b) == doctest::Approx(1.0));
  CHECK_THROWS_AS(bray_curtis(a, x), std::invalid_argument);
}

TEST_CASE("weighted UniFrac on a star tree reduces to a plain ratio") {
  TaxonomyTree star = parse_lineage_table("taxon\nA\nB\n");
  std::vector<double> a = {1.0, 0.0};
  std::vector<double> b = {0.0, 1.0};
  CHECK(weighted_unifrac(a, b, star, {"A", "B"}) == doctest::Approx(1.0));
  CHECK(weighted_unifrac(a, a, star, {"A", "B"}) == doctest::Approx(0.0));
}

TEST_CASE("weighted UniFrac weights deep leaves by their path length") {
  // A and B sit under f1 (depth 2), C under the root (depth 1).
  TaxonomyTree t = parse_lineage_table("taxon\tr1\nA\tf1\nB\tf1\nC\t\n");
  WufWeights w = wuf_weights(t, {"A", "B", "C"});
  CHECK(w.leaf_length == std::vector<double>{1.0, 1.0, 1.0});
  CHECK(w.root_path == std::vector<double>{2.0, 2.0, 1.0});
  std::vector<double> x = {0.5, 0.5, 0.0};
  std::vector<double> y = {0.0, 0.0, 1.0};
  // numerator 0.5 + 0.5 + 1, denominator 2*0.5 + 2*0.5 + 1.
  CHECK(weighted_unifrac(x, y, w) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  std::vector<double> z = {0.0, 0.0, 0.0};
  CHECK(weighted_unifrac(z, z, w) == doctest::Approx(0.0));  // 0/0 contract
}

TEST_CASE("distance matrices are symmetric with a zero diagonal") {
  CompositionMatrix X = three_samples();
  DistanceMatrix D = distance_matrix(X, LossSpec{LossKind::BC, {}, false});
  REQUIRE(D.n == 3);
  CHECK(D.sample_ids == X.sample_ids);
  for (std::size_t i = 0; i < 3; ++i) CHECK(D.at(i, i) == 0.0);
  CHECK(D.at(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(D.at(0, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(D.at(1, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(D.at(2, 1) == D.at(1, 2));
}

TEST_CASE("distance matrices are identical across thread counts") {
  CompositionMatrix X = three_samples();
  LossSpec spec{LossKind::BC, {}, false};
  DistanceMatrix a = distance_matrix(X, spec, 1);
  DistanceMatrix b = distance_matrix(X, spec, 4);
  CHECK(a.values == b.values);
}

TEST_CASE("distance matrix construction validates its spec") {
  CompositionMatrix X = three_samples();
  CHECK_THROWS_WITH_AS(distance_matrix(X, LossSpec{LossKind::SDI, {}, false}),
                       doctest::Contains("between-sample"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(distance_matrix(X, LossSpec{LossKind::WUF, {}, false}),
                       doctest::Contains("taxonomy tree"), std::invalid_argument);
}

TEST_CASE("distance CSV round-trips exactly") {
  CompositionMatrix X = three_samples();
  DistanceMatrix D = distance_matrix(X, LossSpec{LossKind::BC, {}, false});
  DistanceMatrix back = distance_from_csv(distance_to_csv(D));
  CHECK(back.values == D.values);
  CHECK(back.sample_ids == D.sample_ids);
  CHECK_THROWS_AS(distance_from_csv("a,b\n1,2\n"), ParseError);
}

TEST_CASE("alpha loss sums the per-sample diversity drop") {
  CompositionMatrix X = make_composition(
      2, 3, {2, 3, 5, 1, 1, 2}, {"s1", "s2"}, {"A", "B", "C"});
  Grouping g;
  g.groups = {{0, 1}, {2}};
  g.group_labels = {"AB", "C"};
  // Gini-Simpson drop per row is twice the merged product: 2(.2)(.3) + 2(.25)(.25).
  CHECK(alpha_loss(X, g, LossSpec{LossKind::SDI, {}, false}) ==
        doctest::Approx(0.245).epsilon(1e-14));

  CompositionMatrix Y = amalgamate(X, g);
  double by_hand = swi(std::span<const double>(X.row(0), 3)) -
                   swi(std::span<const double>(Y.row(0), 2)) +
                   swi(std::span<const double>(X.row(1), 3)) -
                   swi(std::span<const double>(Y.row(1), 2));
  CHECK(alpha_loss(X, g, LossSpec{LossKind::SWI, {}, false}) ==
        doctest::Approx(by_hand).epsilon(1e-13));
  CHECK(alpha_loss(X, g, LossSpec{LossKind::SWI, {}, false}) >= 0.0);
  CHECK_THROWS_WITH_AS(alpha_loss(X, g, LossSpec{LossKind::BC, {}, false}),
                       doctest::Contains("within-sample"), std::invalid_argument);
}

TEST_CASE("beta loss accumulates squared pairwise changes") {
  DistanceMatrix before;
  before.n = 2;
  before.values = {0.0, 0.5, 0.5, 0.0};
  before.sample_ids = {"s1", "s2"};
  DistanceMatrix after = before;
  after.values = {0.0, 0.3, 0.3, 0.0};
  CHECK(beta_loss(before, after) == doctest::Approx(0.04).epsilon(1e-15));
  DistanceMatrix odd;
  odd.n = 3;
  odd.values.assign(9, 0.0);
  CHECK_THROWS_AS(beta_loss(before, odd), std::invalid_argument);
}
