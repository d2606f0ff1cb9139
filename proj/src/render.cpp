#include "paa/render.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "paa/common.hpp"

namespace paa {

namespace {

const std::vector<std::string> kDefaultPalette = {
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
    "#edc949", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

std::string num(double v) { return format_double(v); }

void check_style(const PlotStyle& style) {
  if (!(style.width > 0.0) || !(style.height > 0.0)) {
    throw std::invalid_argument("plot width and height must be positive");
  }
}

void open_svg(std::string& s, const PlotStyle& style) {
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(style.width) +
       "\" height=\"" + num(style.height) + "\" viewBox=\"0 0 " +
       num(style.width) + " " + num(style.height) +
       "\" font-family=\"Helvetica, Arial, sans-serif\" font-size=\"" +
       num(style.font_size) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + num(style.width) + "\" height=\"" +
       num(style.height) + "\" fill=\"#ffffff\"/>\n";
}

void add_line(std::string& s, double x1, double y1, double x2, double y2,
              const std::string& extra) {
  s += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
       "\" y2=\"" + num(y2) + "\" " + extra + "/>\n";
}

void add_text(std::string& s, double x, double y, const std::string& content,
              const std::string& extra) {
  s += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\"";
  if (!extra.empty()) s += " " + extra;
  s += ">" + escape_xml(content) + "</text>\n";
}

// Largest of 1/2/2.5/5 x 10^k at or below range/target, as an axis step.
double nice_step(double range, int target) {
  if (!(range > 0.0)) return 1.0;
  double raw = range / target;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double best = mag;
  for (double m : {2.0, 2.5, 5.0, 10.0}) {
    if (m * mag <= raw * (1.0 + 1e-12)) best = m * mag;
  }
  return best;
}

}  // namespace

const std::vector<std::string>& PlotStyle::colors() const {
  return palette.empty() ? kDefaultPalette : palette;
}

std::string escape_xml(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string render_dendrogram(const MergeTrace& trace, const TaxonomyTree* tree,
                              const PlotStyle& style) {
  check_style(style);
  std::size_t p = trace.n_initial();
  if (p < 2 || trace.steps.size() != p - 1) {
    throw std::invalid_argument("dendrogram needs a complete trace");
  }
  if (tree != nullptr) {
    if (tree->leaf_count() != p) {
      throw std::invalid_argument("tree does not cover the trace's taxa");
    }
    for (const auto& taxon : trace.initial_taxa) {
      if (!tree->has_taxon(taxon)) {
        throw std::invalid_argument("tree does not cover the trace's taxa");
      }
    }
  }
  const auto& colors = style.colors();

  // Leaf order by recursive traversal of the merge forest from the root.
  std::vector<int> leaf_order;
  leaf_order.reserve(p);
  auto collect = [&](auto&& self, int fid) -> void {
    if (fid < static_cast<int>(p)) {
      leaf_order.push_back(fid);
      return;
    }
    const MergeStep& s = trace.steps[static_cast<std::size_t>(fid) - p];
    self(self, s.left_id);
    self(self, s.right_id);
  };
  collect(collect, static_cast<int>(p + trace.steps.size() - 1));

  std::vector<std::size_t> slot(p);
  for (std::size_t i = 0; i < p; ++i) slot[static_cast<std::size_t>(leaf_order[i])] = i;

  std::size_t rank_count = tree != nullptr ? tree->rank_names().size() : 0;
  bool draw_labels = p <= 40;
  double left = std::max(60.0, 0.05 * style.width);
  double right = std::max(46.0, 0.05 * style.width);
  double top = std::max(32.0, 0.05 * style.height);
  double bar_h = 12.0;
  double labels_h = draw_labels ? 72.0 : 8.0;
  double bottom = std::max(31.0, 0.05 * style.height) + labels_h +
                  static_cast<double>(rank_count) * bar_h;
  double x0 = left, x1 = style.width - right;
  double y0 = top, y1 = style.height - bottom;
  if (x1 <= x0 || y1 <= y0) throw std::invalid_argument("plot area is empty");
  double slot_w = (x1 - x0) / static_cast<double>(p);

  double max_h = 0.0;
  for (const MergeStep& s : trace.steps) max_h = std::max(max_h, s.percent_loss);
  auto transform = [&](double h) {
    return style.log_scale ? std::log10(h + 0.01) : h;
  };
  double tmin = transform(0.0);
  double tmax = transform(max_h);
  if (tmax <= tmin) tmax = tmin + 1.0;
  auto y_of = [&](double h) {
    return y1 - (transform(h) - tmin) / (tmax - tmin) * (y1 - y0);
  };

  // Node x positions over all forest ids.
  std::vector<double> node_x(p + trace.steps.size(), 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    node_x[j] = x0 + (static_cast<double>(slot[j]) + 0.5) * slot_w;
  }
  for (const MergeStep& s : trace.steps) {
    node_x[static_cast<std::size_t>(s.new_id)] =
        (node_x[static_cast<std::size_t>(s.left_id)] +
         node_x[static_cast<std::size_t>(s.right_id)]) / 2.0;
  }
  auto node_h = [&](int fid) {
    return fid < static_cast<int>(p)
               ? 0.0
               : trace.steps[static_cast<std::size_t>(fid) - p].percent_loss;
  };

  std::string s;
  open_svg(s, style);

  // Vertical axis with percent ticks.
  add_line(s, x0, y0, x0, y1, "stroke=\"#333333\" stroke-width=\"1\"");
  std::string tick_extra =
      "text-anchor=\"end\" fill=\"#333333\" font-size=\"" +
      num(style.font_size * 0.85) + "\"";
  auto add_tick = [&](double value, const std::string& label) {
    double y = y_of(value);
    add_line(s, x0 - 4, y, x0, y, "stroke=\"#333333\" stroke-width=\"1\"");
    add_text(s, x0 - 7, y + style.font_size * 0.3, label, tick_extra);
  };
  if (style.log_scale) {
    add_tick(0.0, "0");
    for (double v : {0.01, 0.1, 1.0, 10.0, 100.0}) {
      if (v <= max_h) add_tick(v, format_double(v));
    }
  } else {
    double step = nice_step(max_h, 5);
    add_tick(0.0, "0");
    for (double v = step; v <= max_h * (1.0 + 1e-12) && max_h > 0.0; v += step) {
      add_tick(v, format_double(v));
    }
  }
  add_text(s, x0, y0 - 8, "loss (%)",
           "fill=\"#333333\" font-size=\"" + num(style.font_size * 0.9) + "\"");

  // Joins, one elbow per merge step.
  for (const MergeStep& st : trace.steps) {
    double xl = node_x[static_cast<std::size_t>(st.left_id)];
    double xr = node_x[static_cast<std::size_t>(st.right_id)];
    double yl = y_of(node_h(st.left_id));
    double yr = y_of(node_h(st.right_id));
    double yj = y_of(st.percent_loss);
    s += "<polyline class=\"join\" data-step=\"" + std::to_string(st.step) +
         "\" data-percent=\"" + num(st.percent_loss) + "\" points=\"" +
         num(xl) + "," + num(yl) + " " + num(xl) + "," + num(yj) + " " +
         num(xr) + "," + num(yj) + " " + num(xr) + "," + num(yr) +
         "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  }

  // Leaf ticks and, when they fit, rotated labels.
  for (std::size_t i = 0; i < p; ++i) {
    auto fid = static_cast<std::size_t>(leaf_order[i]);
    double x = node_x[fid];
    const std::string& taxon = trace.initial_taxa[fid];
    s += "<line class=\"leaf\" data-taxon=\"" + escape_xml(taxon) + "\" x1=\"" +
         num(x) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x) + "\" y2=\"" +
         num(y1 + 5) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    if (draw_labels) {
      double ty = y1 + 10;
      s += "<text x=\"" + num(x) + "\" y=\"" + num(ty) + "\" transform=\"rotate(60 " +
           num(x) + " " + num(ty) + ")\" text-anchor=\"start\" fill=\"#333333\"" +
           " font-size=\"" + num(style.font_size * 0.8) + "\">" +
           escape_xml(taxon) + "</text>\n";
    }
  }

  if (tree != nullptr && rank_count > 0) {
    // Red dashed line where the reduced tree first flattens to each rank.
    TaxonomyTree replay = *tree;
    std::vector<int> depth_after;
    depth_after.reserve(trace.steps.size());
    for (const MergeStep& st : trace.steps) {
      replay.merge_leaves(st.left_label, st.right_label, st.new_label);
      depth_after.push_back(replay.max_leaf_depth());
    }
    int initial_depth = tree->max_leaf_depth();
    const auto& ranks = tree->rank_names();
    for (std::size_t ri = 0; ri < rank_count; ++ri) {
      int rank_depth = static_cast<int>(ri) + 1;
      if (initial_depth <= rank_depth) continue;  // already at or above it
      for (std::size_t t = 0; t < depth_after.size(); ++t) {
        if (depth_after[t] <= rank_depth) {
          double percent = trace.steps[t].percent_loss;
          double y = y_of(percent);
          s += "<line class=\"rank-line\" data-rank=\"" + escape_xml(ranks[ri]) +
               "\" data-step=\"" + std::to_string(trace.steps[t].step) +
               "\" data-percent=\"" + num(percent) + "\" x1=\"" + num(x0) +
               "\" y1=\"" + num(y) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y) +
               "\" stroke=\"#d62728\" stroke-width=\"1\" stroke-dasharray=\"6 4\"/>\n";
          add_text(s, x1 + 3, y + style.font_size * 0.3, ranks[ri],
                   "fill=\"#d62728\" font-size=\"" + num(style.font_size * 0.75) +
                       "\"");
          break;
        }
      }
    }

    // One color bar per rank; same color = same category at that rank.
    double bars_top = y1 + 5 + labels_h;
    for (std::size_t ri = 0; ri < rank_count; ++ri) {
      double by = bars_top + static_cast<double>(ri) * bar_h;
      std::map<std::string, std::size_t> category_color;
      add_text(s, x0 - 7, by + bar_h * 0.7, ranks[ri],
               "text-anchor=\"end\" fill=\"#333333\" font-size=\"" +
                   num(style.font_size * 0.75) + "\"");
      for (std::size_t i = 0; i < p; ++i) {
        auto fid = static_cast<std::size_t>(leaf_order[i]);
        const std::string& taxon = trace.initial_taxa[fid];
        auto category = tree->ancestor_at_rank(tree->leaf_id(taxon), ranks[ri]);
        std::string fill = "#cccccc";
        std::string cat_label;
        if (category.has_value()) {
          cat_label = *category;
          auto [it, inserted] =
              category_color.try_emplace(cat_label, category_color.size());
          (void)inserted;
          fill = colors[it->second % colors.size()];
        }
        s += "<rect class=\"rankbar\" data-rank=\"" + escape_xml(ranks[ri]) +
             "\" data-taxon=\"" + escape_xml(taxon) + "\" data-category=\"" +
             escape_xml(cat_label) + "\" x=\"" +
             num(x0 + static_cast<double>(i) * slot_w) + "\" y=\"" + num(by) +
             "\" width=\"" + num(slot_w) + "\" height=\"" + num(bar_h - 2) +
             "\" fill=\"" + fill + "\"/>\n";
      }
    }
  }

  s += "</svg>\n";
  return s;
}

std::string render_scree(const std::vector<ScreeSeries>& series,
                         const PlotStyle& style) {
  check_style(style);
  if (series.empty()) throw std::invalid_argument("scree plot needs a series");
  for (const auto& sr : series) {
    if (sr.points.empty()) throw std::invalid_argument("empty scree series");
  }
  const auto& colors = style.colors();

  std::size_t kmax = 1;
  double ymax = 0.0;
  for (const auto& sr : series) {
    for (const auto& pt : sr.points) {
      kmax = std::max(kmax, pt.k);
      ymax = std::max(ymax, pt.percent_loss);
    }
  }
  if (ymax <= 0.0) ymax = 1.0;

  double left = std::max(60.0, 0.05 * style.width);
  double right = std::max(46.0, 0.05 * style.width);
  double top = std::max(32.0, 0.05 * style.height);
  double bottom = std::max(31.0, 0.05 * style.height) + 28.0;
  double x0 = left, x1 = style.width - right;
  double y0 = top, y1 = style.height - bottom;
  if (x1 <= x0 || y1 <= y0) throw std::invalid_argument("plot area is empty");

  auto x_of = [&](double k) {
    if (kmax == 1) return (x0 + x1) / 2.0;
    return x0 + (static_cast<double>(kmax) - k) /
                    (static_cast<double>(kmax) - 1.0) * (x1 - x0);
  };
  auto y_of = [&](double v) { return y1 - v / ymax * (y1 - y0); };

  std::string s;
  open_svg(s, style);

  add_line(s, x0, y0, x0, y1, "stroke=\"#333333\" stroke-width=\"1\"");
  add_line(s, x0, y1, x1, y1, "stroke=\"#333333\" stroke-width=\"1\"");
  std::string tick_extra = "text-anchor=\"end\" fill=\"#333333\" font-size=\"" +
                           num(style.font_size * 0.85) + "\"";
  double ystep = nice_step(ymax, 5);
  for (double v = 0.0; v <= ymax * (1.0 + 1e-12); v += ystep) {
    double y = y_of(v);
    add_line(s, x0 - 4, y, x0, y, "stroke=\"#333333\" stroke-width=\"1\"");
    add_text(s, x0 - 7, y + style.font_size * 0.3, format_double(v), tick_extra);
  }
  auto kstep = static_cast<std::size_t>(
      std::max(1.0, nice_step(static_cast<double>(kmax - 1), 8)));
  std::string xtick_extra =
      "text-anchor=\"middle\" fill=\"#333333\" font-size=\"" +
      num(style.font_size * 0.85) + "\"";
  for (std::size_t k = kmax;; k = k > kstep ? k - kstep : 1) {
    double x = x_of(static_cast<double>(k));
    add_line(s, x, y1, x, y1 + 4, "stroke=\"#333333\" stroke-width=\"1\"");
    add_text(s, x, y1 + 6 + style.font_size, std::to_string(k), xtick_extra);
    if (k == 1) break;
  }
  add_text(s, x0, y0 - 8, "loss (%)",
           "fill=\"#333333\" font-size=\"" + num(style.font_size * 0.9) + "\"");
  add_text(s, (x0 + x1) / 2.0, style.height - 8, "number of parts",
           "text-anchor=\"middle\" fill=\"#333333\" font-size=\"" +
               num(style.font_size * 0.9) + "\"");

  for (std::size_t si = 0; si < series.size(); ++si) {
    auto points = series[si].points;
    std::sort(points.begin(), points.end(),
              [](const ScreePoint& a, const ScreePoint& b) { return a.k > b.k; });
    std::string svg_points;
    for (const auto& pt : points) {
      if (!svg_points.empty()) svg_points += ' ';
      svg_points += num(x_of(static_cast<double>(pt.k))) + "," +
                    num(y_of(pt.percent_loss));
    }
    const std::string& color = colors[si % colors.size()];
    s += "<polyline class=\"series\" data-level=\"" +
         escape_xml(series[si].label) + "\" points=\"" + svg_points +
         "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
  }

  // Legend in the top-right corner of the plot area.
  for (std::size_t si = 0; si < series.size(); ++si) {
    double ly = y0 + 10 + static_cast<double>(si) * (style.font_size + 6);
    const std::string& color = colors[si % colors.size()];
    add_line(s, x1 - 110, ly, x1 - 86, ly,
             "class=\"legend-line\" stroke=\"" + color + "\" stroke-width=\"2\"");
    add_text(s, x1 - 80, ly + style.font_size * 0.3, series[si].label,
             "class=\"legend-label\" fill=\"#333333\" font-size=\"" +
                 num(style.font_size * 0.85) + "\"");
  }

  s += "</svg>\n";
  return s;
}

std::string render_ordination(const OrdinationCompare& result,
                              const PlotStyle& style) {
  check_style(style);
  const Embedding& emb = result.embedding;
  if (emb.n_points == 0 || emb.dim == 0) {
    throw std::invalid_argument("empty embedding");
  }
  std::size_t n = result.pairing.size();
  if (emb.n_points != 2 * n || n == 0) {
    throw std::invalid_argument("embedding does not pair originals with principals");
  }
  const auto& colors = style.colors();

  auto px = [&](std::size_t i) { return emb.at(i, 0); };
  auto py = [&](std::size_t i) { return emb.dim > 1 ? emb.at(i, 1) : 0.0; };

  double min_x = px(0), max_x = px(0), min_y = py(0), max_y = py(0);
  for (std::size_t i = 0; i < emb.n_points; ++i) {
    min_x = std::min(min_x, px(i));
    max_x = std::max(max_x, px(i));
    min_y = std::min(min_y, py(i));
    max_y = std::max(max_y, py(i));
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto [a, b] = result.pairing[i];
    double cx = (px(a) + px(b)) / 2.0;
    double cy = (py(a) + py(b)) / 2.0;
    double r = result.radii[i];
    min_x = std::min(min_x, cx - r);
    max_x = std::max(max_x, cx + r);
    min_y = std::min(min_y, cy - r);
    max_y = std::max(max_y, cy + r);
  }
  double span_x = max_x - min_x;
  double span_y = max_y - min_y;
  double pad_x = span_x > 0.0 ? 0.05 * span_x : 1.0;
  double pad_y = span_y > 0.0 ? 0.05 * span_y : 1.0;
  min_x -= pad_x;
  max_x += pad_x;
  min_y -= pad_y;
  max_y += pad_y;

  double left = std::max(46.0, 0.05 * style.width);
  double right = std::max(46.0, 0.05 * style.width);
  double top = std::max(32.0, 0.05 * style.height);
  double bottom = std::max(31.0, 0.05 * style.height);
  double x0 = left, x1 = style.width - right;
  double y0 = top, y1 = style.height - bottom;
  if (x1 <= x0 || y1 <= y0) throw std::invalid_argument("plot area is empty");

  // One isotropic scale for both axes so covering circles stay circles.
  double scale = std::min((x1 - x0) / (max_x - min_x), (y1 - y0) / (max_y - min_y));
  double cx_mid = (min_x + max_x) / 2.0;
  double cy_mid = (min_y + max_y) / 2.0;
  double plot_cx = (x0 + x1) / 2.0;
  double plot_cy = (y0 + y1) / 2.0;
  auto map_x = [&](double v) { return plot_cx + (v - cx_mid) * scale; };
  auto map_y = [&](double v) { return plot_cy - (v - cy_mid) * scale; };

  std::string s;
  open_svg(s, style);
  s += "<rect class=\"frame\" x=\"" + num(x0) + "\" y=\"" + num(y0) +
       "\" width=\"" + num(x1 - x0) + "\" height=\"" + num(y1 - y0) +
       "\" fill=\"none\" stroke=\"#999999\" stroke-width=\"1\"/>\n";

  // Covering circles first, so markers draw on top.
  for (std::size_t i = 0; i < n; ++i) {
    auto [a, b] = result.pairing[i];
    double cx = map_x((px(a) + px(b)) / 2.0);
    double cy = map_y((py(a) + py(b)) / 2.0);
    double r = result.radii[i] * scale;
    s += "<circle class=\"pair-circle\" data-id=\"" +
         escape_xml(emb.point_ids[a]) + "\" data-radius=\"" +
         num(result.radii[i]) + "\" cx=\"" + num(cx) + "\" cy=\"" + num(cy) +
         "\" r=\"" + num(r) + "\" fill=\"none\" stroke=\"#888888\"" +
         " stroke-width=\"0.8\"/>\n";
  }

  const std::string& c_orig = colors[0 % colors.size()];
  const std::string& c_prin = colors[1 % colors.size()];
  for (std::size_t i = 0; i < emb.n_points; ++i) {
    bool original = i < n;
    double mx = map_x(px(i));
    double my = map_y(py(i));
    if (original) {
      s += "<circle class=\"point\" data-block=\"original\" data-id=\"" +
           escape_xml(emb.point_ids[i]) + "\" data-cx=\"" + num(mx) +
           "\" data-cy=\"" + num(my) + "\" cx=\"" + num(mx) + "\" cy=\"" +
           num(my) + "\" r=\"3.5\" fill=\"" + c_orig + "\"/>\n";
    } else {
      s += "<rect class=\"point\" data-block=\"principal\" data-id=\"" +
           escape_xml(emb.point_ids[i]) + "\" data-cx=\"" + num(mx) +
           "\" data-cy=\"" + num(my) + "\" x=\"" + num(mx - 3.0) + "\" y=\"" +
           num(my - 3.0) + "\" width=\"6\" height=\"6\" fill=\"" + c_prin +
           "\"/>\n";
    }
  }

  add_text(s, x0 + 8, y0 + style.font_size + 4,
           "mean distortion: " + format_double_fixed(result.mean_distance, 4) +
               " (sd " + format_double_fixed(result.sd_distance, 4) + ")",
           "class=\"annotation\" fill=\"#333333\" font-size=\"" +
               num(style.font_size * 0.9) + "\"");
  add_text(s, x0 + 8, y0 + 2 * style.font_size + 8,
           "stress: " + format_double_fixed(emb.stress, 4),
           "class=\"stress\" fill=\"#333333\" font-size=\"" +
               num(style.font_size * 0.9) + "\"");

  // Marker legend.
  double lx = x1 - 120;
  double ly = y0 + style.font_size + 4;
  s += "<circle cx=\"" + num(lx) + "\" cy=\"" + num(ly - 3) +
       "\" r=\"3.5\" fill=\"" + c_orig + "\"/>\n";
  add_text(s, lx + 8, ly, "original",
           "fill=\"#333333\" font-size=\"" + num(style.font_size * 0.85) + "\"");
  double ly2 = ly + style.font_size + 6;
  s += "<rect x=\"" + num(lx - 3.0) + "\" y=\"" + num(ly2 - 6) +
       "\" width=\"6\" height=\"6\" fill=\"" + c_prin + "\"/>\n";
  add_text(s, lx + 8, ly2, "principal",
           "fill=\"#333333\" font-size=\"" + num(style.font_size * 0.85) + "\"");

  s += "</svg>\n";
  return s;
}

}  // namespace paa
