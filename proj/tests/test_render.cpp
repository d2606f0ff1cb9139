#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "paa/composition.hpp"
#include "paa/diversity.hpp"
#include "paa/hpaa.hpp"
#include "paa/ordination.hpp"
#include "paa/render.hpp"
#include "paa/taxonomy.hpp"

using namespace paa;

namespace {

CompositionMatrix demo_matrix() {
  return make_composition(3, 4,
                          {10, 20, 30, 40, 40, 30, 20, 10, 25, 25, 25, 25},
                          {"s1", "s2", "s3"}, {"A", "B", "C", "D"});
}

TaxonomyTree demo_tree() {
  return parse_lineage_table(
      "taxon\tfamily\tgenus\n"
      "A\tf1\tg1\n"
      "B\tf1\tg1\n"
      "C\tf1\tg2\n"
      "D\tf2\t\n");
}

// Start tags of every element whose class attribute is exactly cls.
std::vector<std::string> tags_of(const std::string& svg, const std::string& cls) {
  std::vector<std::string> out;
  std::string needle = "class=\"" + cls + "\"";
  std::size_t pos = 0;
  while (true) {
    std::size_t hit = svg.find(needle, pos);
    if (hit == std::string::npos) break;
    std::size_t start = svg.rfind('<', hit);
    std::size_t end = svg.find('>', hit);
    REQUIRE(start != std::string::npos);
    REQUIRE(end != std::string::npos);
    out.push_back(svg.substr(start, end - start + 1));
    pos = end;
  }
  return out;
}

std::string attr(const std::string& tag, const std::string& name) {
  std::string needle = " " + name + "=\"";
  std::size_t hit = tag.find(needle);
  REQUIRE_MESSAGE(hit != std::string::npos, tag << " lacks " << name);
  std::size_t begin = hit + needle.size();
  std::size_t end = tag.find('"', begin);
  return tag.substr(begin, end - begin);
}

double num_attr(const std::string& tag, const std::string& name) {
  return std::stod(attr(tag, name));
}

}  // namespace

TEST_CASE("xml escaping covers the five special characters") {
  CHECK(escape_xml("a<b>&'c\"") == "a&lt;b&gt;&amp;&apos;c&quot;");
  CHECK(escape_xml("plain") == "plain");
}

TEST_CASE("dendrograms carry one leaf per taxon and one join per step") {
  MergeTrace trace = run_hpaa(demo_matrix(), std::nullopt,
                              LossSpec{LossKind::SDI, {}, false},
                              ConstraintLevel::Unconstrained);
  std::string svg = render_dendrogram(trace, nullptr);
  CHECK(svg.find("<svg") != std::string::npos);

  std::vector<std::string> leaves = tags_of(svg, "leaf");
  REQUIRE(leaves.size() == 4);
  std::vector<std::string> seen;
  for (const auto& tag : leaves) seen.push_back(attr(tag, "data-taxon"));
  for (const std::string& taxon : {"A", "B", "C", "D"}) {
    CHECK(std::find(seen.begin(), seen.end(), taxon) != seen.end());
  }

  std::vector<std::string> joins = tags_of(svg, "join");
  REQUIRE(joins.size() == 3);
  double prev = -1.0;
  for (const auto& tag : joins) {
    double pct = num_attr(tag, "data-percent");
    CHECK(pct >= prev);
    prev = pct;
  }
  CHECK(num_attr(joins.back(), "data-percent") == doctest::Approx(100.0));

  // Same trace, same bytes.
  CHECK(render_dendrogram(trace, nullptr) == svg);
  PlotStyle log_style;
  log_style.log_scale = true;
  CHECK(render_dendrogram(trace, nullptr, log_style) != svg);
}

TEST_CASE("a two-column trace draws a single join at full loss") {
  CompositionMatrix X = make_composition(2, 2, {1, 3, 2, 2}, {"s1", "s2"},
                                         {"L", "R"});
  MergeTrace trace = run_hpaa(X, std::nullopt, LossSpec{LossKind::SDI, {}, false},
                              ConstraintLevel::Unconstrained);
  std::string svg = render_dendrogram(trace, nullptr);
  CHECK(tags_of(svg, "leaf").size() == 2);
  std::vector<std::string> joins = tags_of(svg, "join");
  REQUIRE(joins.size() == 1);
  CHECK(num_attr(joins[0], "data-percent") == doctest::Approx(100.0));
}

TEST_CASE("a guided dendrogram marks rank flattening and leaf categories") {
  MergeTrace trace = run_hpaa(demo_matrix(), demo_tree(),
                              LossSpec{LossKind::SDI, {}, false},
                              ConstraintLevel::WeakHierarchy);
  TaxonomyTree tree = demo_tree();
  std::string svg = render_dendrogram(trace, &tree);

  // Depth shrinks 3 -> 2 -> 0, so genus flattens at step 2, family at step 3.
  std::vector<std::string> lines = tags_of(svg, "rank-line");
  REQUIRE(lines.size() == 2);
  CHECK(attr(lines[0], "data-rank") == "family");
  CHECK(num_attr(lines[0], "data-step") == 3);
  CHECK(attr(lines[1], "data-rank") == "genus");
  CHECK(num_attr(lines[1], "data-step") == 2);
  CHECK(svg.find("#d62728") != std::string::npos);

  // One category cell per rank and leaf.
  std::vector<std::string> bars = tags_of(svg, "rankbar");
  REQUIRE(bars.size() == 8);
  bool saw_f1 = false, saw_f2 = false;
  for (const auto& tag : bars) {
    if (attr(tag, "data-rank") == "family") {
      std::string cat = attr(tag, "data-category");
      saw_f1 = saw_f1 || cat == "f1";
      saw_f2 = saw_f2 || cat == "f2";
    }
  }
  CHECK(saw_f1);
  CHECK(saw_f2);

  TaxonomyTree wrong = parse_lineage_table("taxon\tr\nX\tf\nY\tf\n");
  CHECK_THROWS_WITH_AS(render_dendrogram(trace, &wrong),
                       doctest::Contains("does not cover"),
                       std::invalid_argument);

  MergeTrace empty;
  CHECK_THROWS_AS(render_dendrogram(empty, nullptr), std::invalid_argument);
}

TEST_CASE("scree plots walk right as the part count drops") {
  MergeTrace none = run_hpaa(demo_matrix(), std::nullopt,
                             LossSpec{LossKind::SDI, {}, false},
                             ConstraintLevel::Unconstrained);
  MergeTrace weak = run_hpaa(demo_matrix(), demo_tree(),
                             LossSpec{LossKind::SDI, {}, false},
                             ConstraintLevel::WeakHierarchy);
  std::vector<ScreeSeries> series = {{"none", scree(none)}, {"weak", scree(weak)}};
  std::string svg = render_scree(series);
  CHECK(svg.find("loss (%)") != std::string::npos);
  CHECK(svg.find("number of parts") != std::string::npos);
  CHECK(tags_of(svg, "series").size() == 2);
  CHECK(svg.find(">none<") != std::string::npos);  // legend labels
  CHECK(svg.find(">weak<") != std::string::npos);
  CHECK(render_scree(series) == svg);

  CHECK_THROWS_AS(render_scree({}), std::invalid_argument);
  CHECK_THROWS_AS(render_scree({{"empty", {}}}), std::invalid_argument);
}

TEST_CASE("ordination plots cover each pair with its circle") {
  CompositionMatrix X = demo_matrix();
  MergeTrace trace = run_hpaa(X, std::nullopt, LossSpec{LossKind::SDI, {}, false},
                              ConstraintLevel::Unconstrained);
  CutResult at2 = cut(trace, 2);
  OrdinationCompare cmp =
      ordination_compare(X, at2.grouping, LossSpec{LossKind::BC, {}, false});
  std::string svg = render_ordination(cmp);

  std::vector<std::string> points = tags_of(svg, "point");
  REQUIRE(points.size() == 6);
  std::size_t originals = 0;
  for (const auto& tag : points) {
    if (attr(tag, "data-block") == "original") ++originals;
  }
  CHECK(originals == 3);

  std::vector<std::string> circles = tags_of(svg, "pair-circle");
  REQUIRE(circles.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    double cx = num_attr(circles[i], "cx");
    double cy = num_attr(circles[i], "cy");
    double r = num_attr(circles[i], "r");
    // Both members of the pair must sit inside the covering circle.
    for (std::size_t which : {i, i + 3}) {
      double px = num_attr(points[which], "data-cx");
      double py = num_attr(points[which], "data-cy");
      double d = std::hypot(px - cx, py - cy);
      CHECK(d <= r + 1e-9);
    }
  }

  CHECK(svg.find("mean distortion:") != std::string::npos);
  CHECK(svg.find("stress:") != std::string::npos);
  CHECK(render_ordination(cmp) == svg);

  OrdinationCompare broken;
  CHECK_THROWS_AS(render_ordination(broken), std::invalid_argument);
}

TEST_CASE("drawn geometry respects the margins") {
  MergeTrace trace = run_hpaa(demo_matrix(), std::nullopt,
                              LossSpec{LossKind::SDI, {}, false},
                              ConstraintLevel::Unconstrained);
  PlotStyle style;
  style.width = 400.0;
  style.height = 300.0;
  std::string svg = render_dendrogram(trace, nullptr, style);
  CHECK(svg.find("width=\"400\"") != std::string::npos);
  for (const auto& tag : tags_of(svg, "leaf")) {
    double x = num_attr(tag, "x1");
    CHECK(x >= 0.05 * 400.0 - 1e-9);
    CHECK(x <= 0.95 * 400.0 + 1e-9);
  }
}
