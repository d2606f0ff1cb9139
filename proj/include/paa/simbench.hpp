#pragma once
// Synthetic-data studies: count-matrix generators, the prevalence-filter
// baseline, distance-preservation comparison of reducers against that
// baseline, and a runtime scaling harness.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "paa/composition.hpp"
#include "paa/diversity.hpp"
#include "paa/hpaa.hpp"
#include "paa/taxonomy.hpp"

namespace paa {

enum class Generator { Poisson, Multinomial };

struct SimConfig {
  Generator generator = Generator::Poisson;
  double lambda = 100.0;            // Poisson rate per entry
  long long total_count = 10000;    // multinomial row total
  std::vector<double> probs;        // multinomial cell probabilities, on simplex
  std::size_t n = 0;
  std::size_t p = 0;
  std::uint64_t seed = 0;
  std::size_t replicates = 1;

  void validate() const;
};

// Replicate r of a study runs on seed ^ r (bitwise xor), so replicates are
// independent of scheduling and can be regenerated in isolation.
std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t r);

// n x p iid Poisson(lambda) counts, rows normalized. An all-zero count row is
// redrawn; each redraw appends a line to *events when given.
CompositionMatrix gen_poisson_matrix(const SimConfig& cfg,
                                     std::vector<std::string>* events = nullptr);

// Each row is one Multinomial(total_count, probs) draw divided by the total,
// sampled by binomial conditioning column by column.
CompositionMatrix gen_multinomial_matrix(const SimConfig& cfg);

// Keeps the k columns with the most nonzero entries (ties: higher mean, then
// lower index) in their original order and renormalizes rows. A row with no
// mass on the retained columns becomes uniform over them and is flagged.
// k = p returns the input unchanged.
CompositionMatrix prevalence_filter(const CompositionMatrix& X, std::size_t k,
                                    std::vector<std::string>* flagged = nullptr);

// A named dimension-reduction method under comparison; exactly one entry of a
// study must be the baseline the others are scored against.
struct Reducer {
  std::string name;
  bool baseline = false;
  std::function<CompositionMatrix(const CompositionMatrix&)> reduce;
};

Reducer prevalence_reducer(std::size_t k);
// Runs the full merge path and cuts at k parts.
Reducer hpaa_reducer(std::string name, LossSpec spec, ConstraintLevel level,
                     std::optional<TaxonomyTree> tree, std::size_t k,
                     int threads = 0);

struct DistanceStudyRow {
  std::size_t replicate = 0;  // 0-based
  std::string method;
  double mse = 0.0;
  double rmse = 0.0;          // mse / median of the baseline's mse column
};

struct DistanceStudyReport {
  std::vector<DistanceStudyRow> rows;  // replicate-major, methods in input order

  std::string to_csv() const;          // replicate,method,mse,rmse
  double median_mse(const std::string& method) const;
  double median_rmse(const std::string& method) const;
};

// For each replicate, draws a multinomial matrix with the reference's column
// means as probabilities and the reference's sample count, reduces it with
// every method, and scores the mean squared Bray-Curtis change over the
// n(n-1)/2 sample pairs. RMSE follows IEEE division when the baseline median
// is zero (possible only in degenerate designs such as k = p).
DistanceStudyReport distance_preservation_report(
    const CompositionMatrix& reference, const std::vector<Reducer>& methods,
    std::size_t k, std::size_t replicates, std::uint64_t seed,
    long long total_count = 10000, int threads = 0);

struct RuntimeRow {
  std::size_t n = 0;
  std::size_t p = 0;
  std::string loss;
  double mean_seconds = 0.0;
  double sd_seconds = 0.0;
};

struct RuntimeReport {
  std::vector<RuntimeRow> rows;

  std::string to_csv() const;  // n,p,loss,mean_seconds,sd_seconds
};

// Times the full merge path on Poisson(100) data, sequentially (both across
// replicates and inside the engine unless threads says otherwise). Dimension
// d uses base seed seed + d * 0x9e3779b97f4a7c15, then the replicate rule.
RuntimeReport runtime_scaling_report(
    const std::vector<std::pair<std::size_t, std::size_t>>& dims,
    const LossSpec& spec, ConstraintLevel level, std::size_t replicates,
    std::uint64_t seed, int threads = 1);

// Random lineage-table taxonomy over the given taxa: each taxon gets a random
// lineage of length 0..max_depth drawn from per-level label pools, so trees
// mix shallow and deep leaves and shared ancestors at every level.
TaxonomyTree random_taxonomy(const std::vector<std::string>& taxa,
                             std::uint64_t seed, std::size_t max_depth = 4);

}  // namespace paa
