#pragma once
// Non-metric multidimensional scaling of a dissimilarity matrix, and the
// paired original-versus-principal ordination that puts both composition sets
// into one embedding.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "paa/composition.hpp"
#include "paa/diversity.hpp"
#include "paa/hpaa.hpp"

namespace paa {

// Weighted isotonic regression (pool adjacent violators): the non-decreasing
// sequence minimizing sum w_i (fit_i - y_i)^2.
std::vector<double> isotonic_fit(const std::vector<double>& y,
                                 const std::vector<double>& w);

// Principal-coordinate start: double-centered -D^2/2, top-d eigenvectors
// scaled by sqrt(max(eigenvalue, 0)). Needs at least 3 points.
std::vector<double> classical_mds_init(const DistanceMatrix& D, std::size_t dim);

struct NmdsOptions {
  std::size_t dim = 2;
  std::size_t max_iterations = 500;
  double rel_tol = 1e-8;          // stop when stress improves less than this
  std::size_t restarts = 0;       // extra jittered starts beyond the metric one
  std::uint64_t seed = 0;         // jitter seed; restart r uses seed + r
};

struct Embedding {
  std::size_t n_points = 0;
  std::size_t dim = 0;
  std::vector<double> coords;     // row-major n_points x dim, centered
  double stress = 0.0;            // Kruskal stress-1
  std::size_t iterations = 0;
  std::vector<std::string> point_ids;

  double at(std::size_t i, std::size_t k) const { return coords[i * dim + k]; }
};

// Kruskal stress-1 of a configuration against the dissimilarity order, with
// primary tie handling; the measure the iteration minimizes and reports.
double stress1(const DistanceMatrix& D, const std::vector<double>& coords,
               std::size_t dim);

// Iterative NMDS: metric start, then alternating isotonic fit and Guttman
// updates with a step backtrack that keeps stress non-increasing. With
// restarts > 0 the best of all runs is kept; ties keep the earliest run.
Embedding nmds(const DistanceMatrix& D, const NmdsOptions& options = {},
               int threads = 0);

// Joint embedding of n originals and their n lifted k-part principals, with
// per-sample displacement bookkeeping. The metric must be a between-sample
// loss (Bray-Curtis or weighted UniFrac).
struct OrdinationCompare {
  Embedding embedding;            // 2n points: originals first, then principals
  std::vector<std::pair<std::size_t, std::size_t>> pairing;  // (i, n + i)
  std::vector<double> pair_distance;  // embedded original-principal distance
  std::vector<double> radii;          // half of pair_distance, for circles
  double mean_distance = 0.0;
  double sd_distance = 0.0;           // sample standard deviation
};

OrdinationCompare ordination_compare(const CompositionMatrix& X,
                                     const Grouping& grouping,
                                     const LossSpec& metric,
                                     const NmdsOptions& options = {},
                                     int threads = 0);

}  // namespace paa
