#pragma once
// Self-contained SVG emission for the three standard views of a merge
// trajectory: dendrogram, scree curve(s), and the paired NMDS ordination.
// Output is deterministic byte for byte: numbers go through the shortest
// round-trip formatter and element order is fixed by the input.

#include <string>
#include <vector>

#include "paa/hpaa.hpp"
#include "paa/ordination.hpp"
#include "paa/taxonomy.hpp"

namespace paa {

struct PlotStyle {
  double width = 900.0;
  double height = 620.0;
  double font_size = 12.0;
  bool log_scale = false;            // dendrogram heights as log10(percent + 0.01)
  std::vector<std::string> palette;  // empty uses the built-in ten colors

  const std::vector<std::string>& colors() const;
};

// Merge dendrogram: leaves in recursive trace order, join heights at the
// cumulative percent loss. With a tree, red dashed lines mark the first step
// at which the reduced tree is flattened to each named rank, and one color
// bar per rank groups the leaves by their ancestor at that rank. The tree
// must cover exactly the trace's taxa; pass nullptr for an unguided trace.
std::string render_dendrogram(const MergeTrace& trace, const TaxonomyTree* tree,
                              const PlotStyle& style = {});

struct ScreeSeries {
  std::string label;               // typically the constraint level
  std::vector<ScreePoint> points;
};

// Percent loss against the number of remaining parts, p on the left down to
// 1 on the right; several series overlay with a legend.
std::string render_scree(const std::vector<ScreeSeries>& series,
                         const PlotStyle& style = {});

// Scatter of originals (circles) and principals (squares) with, per sample,
// the smallest circle covering the pair, plus a mean (sd) distortion note.
// Isotropic axes keep covering circles true circles.
std::string render_ordination(const OrdinationCompare& result,
                              const PlotStyle& style = {});

std::string escape_xml(const std::string& text);

}  // namespace paa
