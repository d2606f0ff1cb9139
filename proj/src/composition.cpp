#include "paa/composition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "paa/common.hpp"

namespace paa {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

void check_unique(const std::vector<std::string>& ids, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw ParseError(std::string("duplicate ") + what + " id '" + id + "'");
    }
  }
}

// Renormalizes one row to sum to exactly 1.0: divide by the row sum, then
// fold the rounding residual into the largest entry.
void normalize_row(double* row, std::size_t p, double sum) {
  std::size_t arg = 0;
  for (std::size_t j = 0; j < p; ++j) {
    row[j] /= sum;
    if (row[j] > row[arg]) arg = j;
  }
  double s = 0.0;
  for (std::size_t j = 0; j < p; ++j) s += row[j];
  row[arg] += 1.0 - s;
}

}  // namespace

void CompositionMatrix::validate(double row_tol) const {
  if (values.size() != n_samples * n_taxa) {
    throw std::invalid_argument("composition body size mismatch");
  }
  if (sample_ids.size() != n_samples || taxon_ids.size() != n_taxa) {
    throw std::invalid_argument("composition id count mismatch");
  }
  for (std::size_t i = 0; i < n_samples; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n_taxa; ++j) {
      double v = at(i, j);
      if (v < 0.0 || !std::isfinite(v)) {
        throw std::invalid_argument("negative entry at sample " + sample_ids[i] +
                                    ", taxon " + taxon_ids[j]);
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > row_tol) {
      throw std::invalid_argument("row sum " + format_double(sum) +
                                  " at sample " + sample_ids[i] +
                                  " is not 1 within tolerance");
    }
  }
}

CompositionMatrix make_composition(std::size_t n, std::size_t p,
                                   std::vector<double> body,
                                   std::vector<std::string> sample_ids,
                                   std::vector<std::string> taxon_ids) {
  if (n == 0 || p == 0) throw std::invalid_argument("empty composition");
  if (body.size() != n * p) throw std::invalid_argument("composition body size mismatch");
  if (sample_ids.size() != n || taxon_ids.size() != p) {
    throw std::invalid_argument("composition id count mismatch");
  }
  check_unique(sample_ids, "sample");
  check_unique(taxon_ids, "taxon");

  CompositionMatrix X;
  X.n_samples = n;
  X.n_taxa = p;
  X.values = std::move(body);
  X.sample_ids = std::move(sample_ids);
  X.taxon_ids = std::move(taxon_ids);
  X.library_sizes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      double v = X.at(i, j);
      if (v < 0.0 || !std::isfinite(v)) {
        throw ParseError("negative entry at sample " + X.sample_ids[i] +
                         ", taxon " + X.taxon_ids[j]);
      }
      sum += v;
    }
    if (sum <= 0.0) {
      throw ParseError("zero row sum at sample " + X.sample_ids[i]);
    }
    X.library_sizes[i] = sum;
    normalize_row(X.values.data() + i * p, p, sum);
  }
  return X;
}

std::size_t Grouping::member_count() const {
  std::size_t total = 0;
  for (const auto& g : groups) total += g.size();
  return total;
}

void Grouping::validate(std::size_t p) const {
  if (group_labels.size() != groups.size()) {
    throw std::invalid_argument("grouping label count mismatch");
  }
  std::vector<char> seen(p, 0);
  std::size_t total = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("empty group in grouping");
    for (std::size_t j : g) {
      if (j >= p) throw std::invalid_argument("group member out of range");
      if (seen[j]) throw std::invalid_argument("column in two groups");
      seen[j] = 1;
      ++total;
    }
  }
  if (total != p) throw std::invalid_argument("grouping does not cover all columns");
}

Grouping Grouping::identity(const std::vector<std::string>& taxon_ids) {
  Grouping g;
  g.groups.reserve(taxon_ids.size());
  g.group_labels = taxon_ids;
  for (std::size_t j = 0; j < taxon_ids.size(); ++j) g.groups.push_back({j});
  return g;
}

CompositionMatrix amalgamate(const CompositionMatrix& X, const Grouping& g) {
  g.validate(X.n_taxa);
  CompositionMatrix out;
  out.n_samples = X.n_samples;
  out.n_taxa = g.size();
  out.sample_ids = X.sample_ids;
  out.taxon_ids = g.group_labels;
  out.library_sizes = X.library_sizes;
  out.values.assign(X.n_samples * g.size(), 0.0);
  for (std::size_t i = 0; i < X.n_samples; ++i) {
    const double* src = X.row(i);
    double* dst = out.values.data() + i * out.n_taxa;
    for (std::size_t k = 0; k < g.size(); ++k) {
      double sum = 0.0;
      for (std::size_t j : g.groups[k]) sum += src[j];
      dst[k] = sum;
    }
  }
  return out;
}

std::vector<double> lift(const std::vector<double>& y, const Grouping& g) {
  if (y.size() != g.size()) throw std::invalid_argument("lift size mismatch");
  std::size_t p = g.member_count();
  g.validate(p);
  std::vector<double> x(p, 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    double share = y[k] / static_cast<double>(g.groups[k].size());
    for (std::size_t j : g.groups[k]) x[j] = share;
  }
  return x;
}

CompositionMatrix load_composition_table(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    std::string stripped = line;
    if (!stripped.empty() && stripped.back() == '\r') stripped.pop_back();
    if (!stripped.empty()) lines.push_back(stripped);
  }
  if (lines.empty()) throw ParseError("empty composition table");

  char delim = lines[0].find('\t') != std::string::npos ? '\t' : ',';
  std::vector<std::string> header = split_line(lines[0], delim);
  if (header.size() < 2) throw ParseError("composition table needs at least one taxon column");
  std::size_t p = header.size() - 1;
  std::vector<std::string> taxon_ids(header.begin() + 1, header.end());

  std::size_t n = lines.size() - 1;
  if (n == 0) throw ParseError("composition table has no sample rows");
  std::vector<std::string> sample_ids;
  std::vector<double> body;
  body.reserve(n * p);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    std::vector<std::string> cells = split_line(lines[r], delim);
    if (cells.size() != p + 1) {
      throw ParseError("row '" + cells[0] + "' has " +
                       std::to_string(cells.size() - 1) + " fields, expected " +
                       std::to_string(p));
    }
    sample_ids.push_back(cells[0]);
    for (std::size_t j = 1; j < cells.size(); ++j) {
      body.push_back(parse_double(cells[j], "row '" + cells[0] + "'"));
    }
  }
  if (n < 2 || p < 2) {
    throw ParseError("composition table needs at least 2 samples and 2 taxa");
  }
  return make_composition(n, p, std::move(body), std::move(sample_ids),
                          std::move(taxon_ids));
}

CompositionMatrix load_composition_file(const std::string& path) {
  return load_composition_table(read_text_file(path));
}

std::string composition_to_table(const CompositionMatrix& X, char delim) {
  std::string out = "sample_id";
  for (const auto& t : X.taxon_ids) {
    out += delim;
    out += t;
  }
  out += '\n';
  for (std::size_t i = 0; i < X.n_samples; ++i) {
    out += X.sample_ids[i];
    for (std::size_t j = 0; j < X.n_taxa; ++j) {
      out += delim;
      out += format_double(X.at(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_composition_file(const CompositionMatrix& X, const std::string& path,
                            char delim) {
  write_text_file(path, composition_to_table(X, delim));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file '" + path + "'");
  out << content;
}

}  // namespace paa
