#pragma once
// Row-stochastic composition matrices: ingestion, normalization, grouping,
// amalgamation (column sums over groups) and its equal-split inverse lift.

#include <cstddef>
#include <string>
#include <vector>

namespace paa {

struct CompositionMatrix {
  std::size_t n_samples = 0;
  std::size_t n_taxa = 0;
  std::vector<double> values;           // row-major n_samples x n_taxa
  std::vector<std::string> sample_ids;
  std::vector<std::string> taxon_ids;
  std::vector<double> library_sizes;    // pre-normalization row sums, if known

  double at(std::size_t i, std::size_t j) const { return values[i * n_taxa + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * n_taxa + j]; }
  const double* row(std::size_t i) const { return values.data() + i * n_taxa; }

  // Entries must be >= 0 and every row must sum to 1 within row_tol.
  void validate(double row_tol = 1e-8) const;
};

// Builds a composition from nonnegative rows (counts or proportions). Rows are
// renormalized to sum to exactly 1.0; the original sums become library sizes.
// Throws on negative entries and on rows summing to zero.
CompositionMatrix make_composition(std::size_t n, std::size_t p,
                                   std::vector<double> body,
                                   std::vector<std::string> sample_ids,
                                   std::vector<std::string> taxon_ids);

// Ordered partition of the column set {0..p-1} into labeled groups.
struct Grouping {
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::string> group_labels;

  std::size_t size() const { return groups.size(); }
  std::size_t member_count() const;
  // Partition check against p columns: non-empty, disjoint, exhaustive.
  void validate(std::size_t p) const;
  static Grouping identity(const std::vector<std::string>& taxon_ids);
};

// Column sums per group. The identity grouping returns X bit for bit; all
// other groupings keep rows summing to 1 because mass is only regrouped.
CompositionMatrix amalgamate(const CompositionMatrix& X, const Grouping& g);

// Spreads a k-part composition back to the original parts, splitting each
// group's mass equally over its members; amalgamating the result restores y.
std::vector<double> lift(const std::vector<double>& y, const Grouping& g);

// Delimited table, taxa across columns, samples down rows; the first header
// cell is ignored. Tab or comma delimiters are auto-detected from the header.
CompositionMatrix load_composition_table(const std::string& text);
CompositionMatrix load_composition_file(const std::string& path);

std::string composition_to_table(const CompositionMatrix& X, char delim = '\t');
void write_composition_file(const CompositionMatrix& X, const std::string& path,
                            char delim = '\t');

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace paa
