#pragma once
// Greedy hierarchical amalgamation: at each of p-1 steps, merge the pair of
// active columns whose merge costs the least diversity, optionally restricted
// by the taxonomy (weak: same lowest multi-child ancestor; strong: weak plus
// both leaves at the current maximum leaf depth).

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "paa/composition.hpp"
#include "paa/diversity.hpp"
#include "paa/taxonomy.hpp"

namespace paa {

enum class ConstraintLevel { Unconstrained, WeakHierarchy, StrongHierarchy };

std::string level_name(ConstraintLevel level);          // "none", "weak", "strong"
ConstraintLevel level_from_name(const std::string&);

struct MergeStep {
  int step = 0;                    // 1-based
  int left_id = -1;                // merge-forest ids: 0..p-1 are input columns,
  int right_id = -1;               // p+t-1 is the node made at step t
  int new_id = -1;
  std::string left_label, right_label, new_label;
  double step_loss = 0.0;
  double cumulative_loss = 0.0;
  double percent_loss = 0.0;
};

struct MergeTrace {
  std::vector<std::string> initial_taxa;
  std::vector<MergeStep> steps;    // exactly p-1 entries
  LossKind loss = LossKind::SDI;
  ConstraintLevel level = ConstraintLevel::Unconstrained;
  bool swi_log2 = false;
  // Denominator of percent_loss: summed initial diversity for sdi/swi, the
  // Frobenius norm of the initial distance matrix (upper triangle) for bc/wuf.
  double initial_total = 0.0;
  std::vector<std::string> notes;  // constraint relaxations and other events
  CompositionMatrix input;         // kept for cut() and replays
  std::optional<TaxonomyTree> input_tree;

  std::size_t n_initial() const { return initial_taxa.size(); }
  std::string label(int forest_id) const;
};

// Mergeable position pairs (a < b, lexicographic order) among `count` current
// columns. Weak and strong levels need the reduced tree and the per-position
// leaf node ids. When the strong stratum at the maximum depth has no pair, the
// search relaxes to the next depth with one, then to the whole weak set; each
// relaxation appends a note.
std::vector<std::pair<std::size_t, std::size_t>> active_pairs(
    std::size_t count, const TaxonomyTree* tree,
    const std::vector<int>* position_leaves, ConstraintLevel level,
    std::vector<std::string>* notes = nullptr);

// Snapshot of the engine state a cost is evaluated against.
struct HpaaState {
  const CompositionMatrix* data = nullptr;     // current columns
  const TaxonomyTree* tree = nullptr;          // current reduced tree
  const std::vector<int>* column_leaves = nullptr;  // per-column leaf node ids
};

// Cost of merging columns j and jp, computed from scratch:
//   sdi  inner product of the columns (half the summed index drop)
//   swi  summed entropy drop of the pooled column
//   bc   sum over sample pairs of the squared Bray-Curtis change
//   wuf  same with weighted UniFrac, using the merged leaf's planned branch
double merge_cost(const HpaaState& state, std::size_t j, std::size_t jp,
                  const LossSpec& spec);

struct StepInfo {
  int step = 0;
  const std::vector<std::pair<std::size_t, std::size_t>>* active = nullptr;
  const std::vector<double>* costs = nullptr;  // parallel to *active
  std::size_t chosen = 0;                      // index into *active
  const CompositionMatrix* data = nullptr;     // state the step was decided on
  const TaxonomyTree* tree = nullptr;
  const std::vector<int>* column_leaves = nullptr;
};

struct HpaaOptions {
  int threads = 0;                              // 0 = hardware default
  std::function<void(const StepInfo&)> observer;  // called before each merge
};

// Runs the full p-1 step trajectory. The tree is required for weak/strong
// levels and for wuf; wuf further rejects the unconstrained level because its
// branch lengths are only defined along tree-guided merges. Ties in the cost
// break toward the lexicographically smallest position pair, and the merged
// column takes the smaller position, so reruns are bitwise identical.
MergeTrace run_hpaa(const CompositionMatrix& X,
                    const std::optional<TaxonomyTree>& tree, const LossSpec& spec,
                    ConstraintLevel level, const HpaaOptions& opts = {});

struct CutResult {
  Grouping grouping;
  CompositionMatrix scores;            // amalgamate(input, grouping)
  std::optional<TaxonomyTree> tree;    // reduced tree at this cut, if guided
};

// State after p-k merges; cuts are nested as k decreases.
CutResult cut(const MergeTrace& trace, std::size_t k);

struct ScreePoint {
  std::size_t k = 0;
  double percent_loss = 0.0;
};

// One point per k from p (0 percent) down to 1.
std::vector<ScreePoint> scree(const MergeTrace& trace);

// Maximum leaf depth of the reduced tree after each step (entry t-1 is the
// state after step t); requires the trace to carry a tree.
std::vector<int> replay_max_depths(const MergeTrace& trace);

// Serialized forms: a JSON document of the steps and a Newick dendrogram
// whose node heights are the percent losses.
std::string trace_to_json(const MergeTrace& trace);
std::string dendrogram_newick(const MergeTrace& trace);

}  // namespace paa
