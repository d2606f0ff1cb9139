#pragma once
// Rooted taxonomic trees: lineage-table and Newick ingestion, depth and
// lowest-multi-child-ancestor queries, and the leaf-merge reduction that
// mirrors column amalgamation.

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace paa {

struct TaxonomyNode {
  int id = -1;
  int parent = -1;               // -1 for the root
  std::vector<int> children;
  std::string name;
  std::string rank;              // rank column name; empty for root and merged leaves
  double branch_length = 1.0;    // edge to the parent; unused on the root
  bool alive = true;
};

// Where a merged leaf lands: either it takes its ancestor A's position (A had
// no children left) or it becomes a fresh child of A.
struct MergedLeafPlacement {
  int attach_parent = -1;        // -1 when the merged leaf becomes the root
  double branch_length = 1.0;    // l of the merged leaf
  double root_path_length = 0.0; // L of the merged leaf
  bool replaced_ancestor = false;
  int merged_node = -1;          // set by merge_leaves, -1 from plan_merge
};

class TaxonomyTree {
 public:
  int root() const { return root_; }
  const TaxonomyNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t leaf_count() const { return leaf_map_.size(); }
  bool has_taxon(const std::string& taxon) const { return leaf_map_.count(taxon) != 0; }
  int leaf_id(const std::string& taxon) const;
  // Current leaves keyed by taxon name, in node-id order.
  std::vector<int> leaf_ids() const;
  std::vector<std::string> leaf_taxa() const;

  int depth(int id) const;                      // root is 0
  int max_leaf_depth() const;
  // Nearest ancestor with >= 2 children; the root itself qualifies when the
  // query node is the root and has more than one child.
  int lowest_multichild_ancestor(int id) const;
  int lca(int a, int b) const;
  double root_path_length(int id) const;        // sum of branch lengths from the root

  const std::vector<std::string>& rank_names() const { return rank_names_; }
  // Name of the ancestor at the given rank, if the leaf's lineage reaches it.
  std::optional<std::string> ancestor_at_rank(int leaf, const std::string& rank) const;

  // Placement a merge of the two leaves would produce, without mutating.
  MergedLeafPlacement plan_merge(const std::string& a, const std::string& b) const;
  // Removes both leaves (and emptied chains below their join point) and
  // attaches a merged leaf named merged_name per the placement rule.
  MergedLeafPlacement merge_leaves(const std::string& a, const std::string& b,
                                   const std::string& merged_name);

  std::string to_newick() const;

  // Construction helpers used by the parsers and generators.
  int add_node(int parent, std::string name, std::string rank, double branch_length);
  void register_leaf(const std::string& taxon, int id);
  void set_node_name(int id, std::string name);
  void set_branch_length(int id, double length);
  void set_rank_names(std::vector<std::string> names) { rank_names_ = std::move(names); }
  void check_structure() const;   // exactly one root, acyclic, leaf map bijective

 private:
  std::vector<TaxonomyNode> nodes_;
  int root_ = -1;
  std::unordered_map<std::string, int> leaf_map_;
  std::vector<std::string> rank_names_;
};

// Rows: taxon_id, then ordered rank columns; empty cells end the lineage.
// Shared lineage prefixes share internal nodes; every edge has length 1.
TaxonomyTree parse_lineage_table(const std::string& text);
TaxonomyTree parse_lineage_file(const std::string& path);

// Newick with optional branch lengths (default 1) and internal names.
TaxonomyTree parse_newick(const std::string& text);

// Loads a tree from a path: .nwk/.newick/.tree parse as Newick, anything else
// as a lineage table.
TaxonomyTree load_taxonomy_file(const std::string& path);

// Copying form of the merge: both leaves collapse into one named a+b.
TaxonomyTree reduce_after_merge(const TaxonomyTree& tree, const std::string& a,
                                const std::string& b);

}  // namespace paa
