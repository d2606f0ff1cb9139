#include "paa/diversity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "paa/common.hpp"

namespace paa {

bool is_alpha_loss(LossKind kind) {
  return kind == LossKind::SDI || kind == LossKind::SWI;
}

std::string loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::SDI: return "sdi";
    case LossKind::SWI: return "swi";
    case LossKind::BC: return "bc";
    case LossKind::WUF: return "wuf";
  }
  return "?";
}

LossKind loss_from_name(const std::string& name) {
  std::string s;
  for (char c : name) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "sdi") return LossKind::SDI;
  if (s == "swi") return LossKind::SWI;
  if (s == "bc") return LossKind::BC;
  if (s == "wuf") return LossKind::WUF;
  throw std::invalid_argument("unknown loss '" + name + "' (expected sdi, swi, bc or wuf)");
}

double sdi(std::span<const double> x) {
  double sq = 0.0;
  for (double v : x) sq += v * v;
  return 1.0 - sq;
}

double swi(std::span<const double> x, bool log2) {
  double h = 0.0;
  for (double v : x) {
    if (v > 0.0) h -= v * std::log(v);
  }
  if (log2) h /= std::log(2.0);
  return h;
}

double bray_curtis(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("bray_curtis size mismatch");
  double overlap = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) overlap += std::min(x[j], y[j]);
  return 1.0 - overlap;
}

WufWeights wuf_weights(const TaxonomyTree& tree,
                       const std::vector<std::string>& coord_taxa) {
  WufWeights w;
  w.leaf_length.reserve(coord_taxa.size());
  w.root_path.reserve(coord_taxa.size());
  for (const auto& taxon : coord_taxa) {
    int leaf = tree.leaf_id(taxon);
    w.leaf_length.push_back(tree.node(leaf).branch_length);
    w.root_path.push_back(tree.root_path_length(leaf));
  }
  return w;
}

double weighted_unifrac(std::span<const double> x, std::span<const double> y,
                        const WufWeights& w) {
  if (x.size() != y.size() || x.size() != w.leaf_length.size()) {
    throw std::invalid_argument("weighted_unifrac size mismatch");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    num += w.leaf_length[j] * std::abs(x[j] - y[j]);
    den += w.root_path[j] * (x[j] + y[j]);
  }
  if (den == 0.0) return 0.0;
  return num / den;
}

double weighted_unifrac(std::span<const double> x, std::span<const double> y,
                        const TaxonomyTree& tree,
                        const std::vector<std::string>& coord_taxa) {
  return weighted_unifrac(x, y, wuf_weights(tree, coord_taxa));
}

DistanceMatrix distance_matrix(const CompositionMatrix& X, const LossSpec& spec,
                               int threads) {
  if (is_alpha_loss(spec.kind)) {
    throw std::invalid_argument("distance_matrix needs a between-sample loss (bc or wuf)");
  }
  WufWeights wuf;
  if (spec.kind == LossKind::WUF) {
    if (!spec.tree) throw std::invalid_argument("weighted UniFrac needs a taxonomy tree");
    wuf = wuf_weights(*spec.tree, X.taxon_ids);
  }

  DistanceMatrix D;
  D.n = X.n_samples;
  D.sample_ids = X.sample_ids;
  D.values.assign(D.n * D.n, 0.0);

  std::size_t n = X.n_samples;
  std::size_t pairs = n * (n - 1) / 2;
  std::span<const double> all(X.values);
  parallel_for(pairs, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      // Row-major unranking of the (i, j) pair with i < j.
      std::size_t i = 0;
      std::size_t rem = idx;
      std::size_t row_len = n - 1;
      while (rem >= row_len) {
        rem -= row_len;
        ++i;
        --row_len;
      }
      std::size_t j = i + 1 + rem;
      auto xi = all.subspan(i * X.n_taxa, X.n_taxa);
      auto xj = all.subspan(j * X.n_taxa, X.n_taxa);
      double d = spec.kind == LossKind::BC ? bray_curtis(xi, xj)
                                           : weighted_unifrac(xi, xj, wuf);
      D.at(i, j) = d;
      D.at(j, i) = d;
    }
  });
  return D;
}

std::string distance_to_csv(const DistanceMatrix& D) {
  std::string out = "sample_id";
  for (const auto& id : D.sample_ids) {
    out += ',';
    out += id;
  }
  out += '\n';
  for (std::size_t i = 0; i < D.n; ++i) {
    out += D.sample_ids[i];
    for (std::size_t j = 0; j < D.n; ++j) {
      out += ',';
      out += format_double(D.at(i, j));
    }
    out += '\n';
  }
  return out;
}

DistanceMatrix distance_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        cells.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    cells.push_back(cur);
    rows.push_back(std::move(cells));
  }
  if (rows.size() < 2) throw ParseError("distance CSV needs a header and rows");
  std::size_t n = rows.size() - 1;
  if (rows[0].size() != n + 1) throw ParseError("distance CSV is not square");
  DistanceMatrix D;
  D.n = n;
  D.sample_ids.assign(rows[0].begin() + 1, rows[0].end());
  D.values.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i + 1].size() != n + 1) throw ParseError("distance CSV row size mismatch");
    if (rows[i + 1][0] != D.sample_ids[i]) {
      throw ParseError("distance CSV row and column ids disagree at '" + rows[i + 1][0] + "'");
    }
    for (std::size_t j = 0; j < n; ++j) {
      D.at(i, j) = parse_double(rows[i + 1][j + 1], "distance CSV");
    }
  }
  return D;
}

double alpha_loss(const CompositionMatrix& X, const Grouping& g, const LossSpec& spec) {
  if (!is_alpha_loss(spec.kind)) {
    throw std::invalid_argument("alpha_loss needs a within-sample loss (sdi or swi)");
  }
  CompositionMatrix reduced = amalgamate(X, g);
  double before = 0.0;
  double after = 0.0;
  for (std::size_t i = 0; i < X.n_samples; ++i) {
    std::span<const double> xi(X.row(i), X.n_taxa);
    std::span<const double> yi(reduced.row(i), reduced.n_taxa);
    if (spec.kind == LossKind::SDI) {
      before += sdi(xi);
      after += sdi(yi);
    } else {
      before += swi(xi, spec.swi_log2);
      after += swi(yi, spec.swi_log2);
    }
  }
  return before - after;
}

double beta_loss(const DistanceMatrix& reference, const DistanceMatrix& reduced) {
  if (reference.n != reduced.n) throw std::invalid_argument("beta_loss size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < reference.n; ++i) {
    for (std::size_t j = i + 1; j < reference.n; ++j) {
      double d = reference.at(i, j) - reduced.at(i, j);
      total += d * d;
    }
  }
  return total;
}

}  // namespace paa
