#pragma once
// Diversity measures over compositions: within-sample indices (Gini-Simpson,
// Shannon), between-sample dissimilarities (Bray-Curtis, weighted UniFrac),
// distance matrices, and the aggregation losses they induce.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paa/composition.hpp"
#include "paa/taxonomy.hpp"

namespace paa {

enum class LossKind { SDI, SWI, BC, WUF };

// SDI and SWI measure within-sample diversity; BC and WUF are pairwise.
bool is_alpha_loss(LossKind kind);

std::string loss_name(LossKind kind);          // "sdi", "swi", "bc", "wuf"
LossKind loss_from_name(const std::string&);   // case-insensitive

struct LossSpec {
  LossKind kind = LossKind::SDI;
  std::optional<TaxonomyTree> tree;  // required by WUF
  bool swi_log2 = false;             // report Shannon terms in log base 2
};

// Gini-Simpson index 1 - sum x^2.
double sdi(std::span<const double> x);
// Shannon index -sum x ln x with 0 ln 0 = 0; base 2 when log2 is set.
double swi(std::span<const double> x, bool log2 = false);
// 1 - sum min(x, y) for compositions; equals half the L1 distance.
double bray_curtis(std::span<const double> x, std::span<const double> y);

// Per-coordinate branch data for weighted UniFrac: leaf_length is the leaf's
// own branch, root_path the summed branch lengths from the root to the leaf.
struct WufWeights {
  std::vector<double> leaf_length;
  std::vector<double> root_path;
};
WufWeights wuf_weights(const TaxonomyTree& tree,
                       const std::vector<std::string>& coord_taxa);

// sum l_j |x_j - y_j| / sum L_j (x_j + y_j); a zero denominator yields 0.
double weighted_unifrac(std::span<const double> x, std::span<const double> y,
                        const WufWeights& w);
double weighted_unifrac(std::span<const double> x, std::span<const double> y,
                        const TaxonomyTree& tree,
                        const std::vector<std::string>& coord_taxa);

struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<double> values;  // row-major n x n, symmetric, zero diagonal
  std::vector<std::string> sample_ids;

  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * n + j]; }
};

// Pairwise dissimilarity matrix for a between-sample loss (BC or WUF; WUF
// resolves coordinates against spec.tree, which must be present).
DistanceMatrix distance_matrix(const CompositionMatrix& X, const LossSpec& spec,
                               int threads = 0);

// Square CSV with sample ids as both header row and leading column.
std::string distance_to_csv(const DistanceMatrix& D);
DistanceMatrix distance_from_csv(const std::string& text);

// Drop in summed within-sample diversity caused by amalgamating with g;
// nonnegative for SDI and SWI by concavity.
double alpha_loss(const CompositionMatrix& X, const Grouping& g, const LossSpec& spec);

// sum over sample pairs (i < i') of squared distance differences.
double beta_loss(const DistanceMatrix& reference, const DistanceMatrix& reduced);

}  // namespace paa
