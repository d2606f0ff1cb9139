#include "paa/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "paa/common.hpp"
#include "paa/composition.hpp"

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

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

int TaxonomyTree::leaf_id(const std::string& taxon) const {
  auto it = leaf_map_.find(taxon);
  if (it == leaf_map_.end()) {
    throw std::invalid_argument("taxon '" + taxon + "' is not a leaf of the tree");
  }
  return it->second;
}

std::vector<int> TaxonomyTree::leaf_ids() const {
  std::vector<int> out;
  out.reserve(leaf_map_.size());
  for (const auto& kv : leaf_map_) out.push_back(kv.second);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> TaxonomyTree::leaf_taxa() const {
  std::vector<std::string> out;
  for (int id : leaf_ids()) out.push_back(nodes_[static_cast<std::size_t>(id)].name);
  return out;
}

int TaxonomyTree::depth(int id) const {
  int d = 0;
  for (int cur = node(id).parent; cur != -1; cur = node(cur).parent) ++d;
  return d;
}

int TaxonomyTree::max_leaf_depth() const {
  int best = 0;
  for (int id : leaf_ids()) best = std::max(best, depth(id));
  return best;
}

int TaxonomyTree::lowest_multichild_ancestor(int id) const {
  if (id == root_) {
    if (node(root_).children.size() > 1) return root_;
    throw std::invalid_argument("root has no multi-child ancestor");
  }
  for (int cur = node(id).parent; cur != -1; cur = node(cur).parent) {
    if (node(cur).children.size() >= 2) return cur;
  }
  throw std::invalid_argument("node has no multi-child ancestor");
}

int TaxonomyTree::lca(int a, int b) const {
  std::vector<char> mark(nodes_.size(), 0);
  for (int cur = a; cur != -1; cur = node(cur).parent) mark[static_cast<std::size_t>(cur)] = 1;
  for (int cur = b; cur != -1; cur = node(cur).parent) {
    if (mark[static_cast<std::size_t>(cur)]) return cur;
  }
  throw std::invalid_argument("nodes share no ancestor");
}

double TaxonomyTree::root_path_length(int id) const {
  double total = 0.0;
  for (int cur = id; cur != root_; cur = node(cur).parent) {
    total += node(cur).branch_length;
  }
  return total;
}

std::optional<std::string> TaxonomyTree::ancestor_at_rank(int leaf, const std::string& rank) const {
  for (int cur = leaf; cur != -1; cur = node(cur).parent) {
    if (node(cur).rank == rank) return node(cur).name;
  }
  return std::nullopt;
}

int TaxonomyTree::add_node(int parent, std::string name, std::string rank,
                           double branch_length) {
  int id = static_cast<int>(nodes_.size());
  TaxonomyNode n;
  n.id = id;
  n.parent = parent;
  n.name = std::move(name);
  n.rank = std::move(rank);
  n.branch_length = branch_length;
  nodes_.push_back(std::move(n));
  if (parent == -1) {
    if (root_ != -1) throw ParseError("tree has more than one root");
    root_ = id;
  } else {
    nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
  }
  return id;
}

void TaxonomyTree::register_leaf(const std::string& taxon, int id) {
  if (!leaf_map_.emplace(taxon, id).second) {
    throw ParseError("duplicate taxon id '" + taxon + "'");
  }
}

void TaxonomyTree::set_node_name(int id, std::string name) {
  nodes_.at(static_cast<std::size_t>(id)).name = std::move(name);
}

void TaxonomyTree::set_branch_length(int id, double length) {
  nodes_.at(static_cast<std::size_t>(id)).branch_length = length;
}

void TaxonomyTree::check_structure() const {
  if (root_ == -1) throw std::invalid_argument("tree has no root");
  std::vector<char> visited(nodes_.size(), 0);
  std::vector<int> stack{root_};
  std::size_t alive_seen = 0;
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    auto idx = static_cast<std::size_t>(cur);
    if (visited[idx]) throw std::invalid_argument("tree contains a cycle");
    visited[idx] = 1;
    if (!nodes_[idx].alive) throw std::invalid_argument("dead node reachable from root");
    ++alive_seen;
    for (int c : nodes_[idx].children) {
      if (node(c).parent != cur) throw std::invalid_argument("parent link mismatch");
      stack.push_back(c);
    }
  }
  std::size_t alive_total = 0;
  std::size_t leaf_total = 0;
  for (const auto& n : nodes_) {
    if (!n.alive) continue;
    ++alive_total;
    if (n.children.empty()) ++leaf_total;
  }
  if (alive_seen != alive_total) throw std::invalid_argument("unreachable nodes in tree");
  if (leaf_total != leaf_map_.size()) {
    throw std::invalid_argument("leaf map does not cover the current leaves");
  }
  for (const auto& kv : leaf_map_) {
    const TaxonomyNode& n = node(kv.second);
    if (!n.alive || !n.children.empty() || n.name != kv.first) {
      throw std::invalid_argument("leaf map entry '" + kv.first + "' is stale");
    }
  }
}

MergedLeafPlacement TaxonomyTree::plan_merge(const std::string& a,
                                             const std::string& b) const {
  if (a == b) throw std::invalid_argument("cannot merge a leaf with itself");
  int la = leaf_id(a);
  int lb = leaf_id(b);
  int join = lca(la, lb);

  // A chain top disappears only when pruning eats the whole chain: the leaf
  // goes, then each ancestor below the join goes only if the removed child
  // was its last one.
  auto chain_removed = [&](int leaf) {
    int cur = leaf;
    while (node(cur).parent != join) {
      int parent = node(cur).parent;
      if (node(parent).children.size() != 1) return false;
      cur = parent;
    }
    return true;
  };

  MergedLeafPlacement out;
  std::size_t remaining = node(join).children.size();
  if (chain_removed(la)) --remaining;
  if (chain_removed(lb)) --remaining;
  double join_path = root_path_length(join);
  if (remaining == 0) {
    out.replaced_ancestor = true;
    out.attach_parent = node(join).parent;
    out.branch_length = node(join).branch_length;
    out.root_path_length = join_path;
  } else {
    out.replaced_ancestor = false;
    out.attach_parent = join;
    double reach = std::max(root_path_length(la), root_path_length(lb)) - join_path;
    out.branch_length = std::min(reach, 1.0);
    out.root_path_length = join_path + out.branch_length;
  }
  return out;
}

MergedLeafPlacement TaxonomyTree::merge_leaves(const std::string& a,
                                               const std::string& b,
                                               const std::string& merged_name) {
  MergedLeafPlacement plan = plan_merge(a, b);
  int la = leaf_id(a);
  int lb = leaf_id(b);
  int join = lca(la, lb);

  auto detach = [&](int id) {
    auto& siblings = nodes_[static_cast<std::size_t>(node(id).parent)].children;
    siblings.erase(std::find(siblings.begin(), siblings.end(), id));
    nodes_[static_cast<std::size_t>(id)].alive = false;
  };
  auto prune_chain = [&](int leaf) {
    int cur = leaf;
    while (cur != join && node(cur).children.empty()) {
      int parent = node(cur).parent;
      detach(cur);
      cur = parent;
    }
  };
  prune_chain(la);
  prune_chain(lb);
  leaf_map_.erase(a);
  leaf_map_.erase(b);

  int merged;
  if (plan.replaced_ancestor) {
    // The join node lost its whole subtree; reuse it as the merged leaf.
    merged = join;
    auto& n = nodes_[static_cast<std::size_t>(join)];
    n.name = merged_name;
    n.rank.clear();
  } else {
    merged = add_node(join, merged_name, "", plan.branch_length);
  }
  register_leaf(merged_name, merged);
  plan.merged_node = merged;
  return plan;
}

std::string TaxonomyTree::to_newick() const {
  auto quote = [](const std::string& name) {
    if (name.find_first_of(" \t(),:;'\"[]") == std::string::npos && !name.empty()) {
      return name;
    }
    std::string out = "'";
    for (char c : name) {
      out += c;
      if (c == '\'') out += '\'';
    }
    out += '\'';
    return out;
  };
  std::string text;
  auto emit = [&](auto&& self, int id) -> void {
    const TaxonomyNode& n = node(id);
    if (!n.children.empty()) {
      text += '(';
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) text += ',';
        self(self, n.children[i]);
      }
      text += ')';
    }
    text += quote(n.name);
    if (id != root_) {
      text += ':';
      text += format_double(n.branch_length);
    }
  };
  emit(emit, root_);
  text += ';';
  return text;
}

TaxonomyTree parse_lineage_table(const std::string& text) {
  // Tab wins over comma when both could apply; a root-level taxon row may
  // carry no delimiter at all, so the sniff must look past the first line.
  char delim = text.find('\t') != std::string::npos ? '\t' : ',';
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::string stripped = trim(line);
    if (stripped.empty()) continue;
    rows.push_back(split_line(line, delim));
  }
  if (rows.empty()) throw ParseError("empty lineage table");

  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.size());
  if (width < 1) throw ParseError("empty lineage table");

  std::vector<std::string> rank_names;
  std::size_t first_row = 0;
  std::string head = lower(trim(rows[0][0]));
  if (head.empty() || head == "taxon_id" || head == "taxon" || head == "id") {
    for (std::size_t c = 1; c < rows[0].size(); ++c) {
      rank_names.push_back(trim(rows[0][c]));
    }
    first_row = 1;
  }
  if (rank_names.empty()) {
    for (std::size_t c = 1; c < width; ++c) {
      rank_names.push_back("rank" + std::to_string(c));
    }
  }
  if (first_row >= rows.size()) throw ParseError("lineage table has no taxon rows");

  // An optional branch_length column overrides the leaf's own edge length; it
  // is not part of the lineage.
  std::size_t max_cells = 1 + rank_names.size();
  std::size_t bl_cell = 0;  // 1-based cell index, 0 when absent
  {
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < rank_names.size(); ++i) {
      if (lower(rank_names[i]) == "branch_length") {
        bl_cell = i + 1;
      } else {
        kept.push_back(rank_names[i]);
      }
    }
    rank_names = std::move(kept);
  }

  TaxonomyTree tree;
  int root = tree.add_node(-1, "root", "", 1.0);
  // Internal nodes are shared by lineage prefix: the key is (parent, name).
  std::map<std::pair<int, std::string>, int> prefix_nodes;

  for (std::size_t r = first_row; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    std::string taxon = trim(cells[0]);
    if (taxon.empty()) throw ParseError("lineage row " + std::to_string(r + 1) + " has no taxon id");
    if (cells.size() > max_cells) {
      throw ParseError("lineage row '" + taxon + "' has more cells than rank columns");
    }
    int cur = root;
    bool ended = false;
    double leaf_bl = 1.0;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      std::string value = trim(cells[c]);
      if (c == bl_cell) {
        if (!value.empty()) {
          leaf_bl = parse_double(value, "branch length of '" + taxon + "'");
          if (!(leaf_bl >= 0.0)) {
            throw ParseError("negative branch length for '" + taxon + "'");
          }
        }
        continue;
      }
      if (value.empty()) {
        ended = true;
        continue;
      }
      if (ended) {
        throw ParseError("lineage row '" + taxon + "' has a gap before '" + value + "'");
      }
      auto key = std::make_pair(cur, value);
      auto it = prefix_nodes.find(key);
      if (it == prefix_nodes.end()) {
        int made = tree.add_node(cur, value, rank_names[c - 1], 1.0);
        it = prefix_nodes.emplace(key, made).first;
      }
      cur = it->second;
    }
    int leaf = tree.add_node(cur, taxon, "", leaf_bl);
    tree.register_leaf(taxon, leaf);
  }
  tree.set_rank_names(std::move(rank_names));
  tree.check_structure();
  return tree;
}

TaxonomyTree parse_lineage_file(const std::string& path) {
  return parse_lineage_table(read_text_file(path));
}

TaxonomyTree parse_newick(const std::string& text) {
  TaxonomyTree tree;
  std::size_t pos = 0;
  auto peek = [&]() -> char {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\n' ||
                                 text[pos] == '\t' || text[pos] == '\r')) {
      ++pos;
    }
    if (pos >= text.size()) throw ParseError("unexpected end of newick text");
    return text[pos];
  };
  auto read_name = [&]() -> std::string {
    char c = peek();
    std::string name;
    if (c == '\'') {
      ++pos;
      while (pos < text.size()) {
        if (text[pos] == '\'') {
          if (pos + 1 < text.size() && text[pos + 1] == '\'') {
            name += '\'';
            pos += 2;
          } else {
            ++pos;
            return name;
          }
        } else {
          name += text[pos++];
        }
      }
      throw ParseError("unterminated quoted name in newick text");
    }
    while (pos < text.size() &&
           std::string("(),:;").find(text[pos]) == std::string::npos &&
           text[pos] != '\n' && text[pos] != '\r') {
      name += text[pos++];
    }
    return trim(name);
  };

  auto parse_node = [&](auto&& self, int parent) -> int {
    int id;
    if (peek() == '(') {
      id = tree.add_node(parent, "", "", 1.0);
      ++pos;  // '('
      while (true) {
        self(self, id);
        char c = peek();
        if (c == ',') {
          ++pos;
          continue;
        }
        if (c == ')') {
          ++pos;
          break;
        }
        throw ParseError("expected ',' or ')' in newick text");
      }
      tree.set_node_name(id, read_name());
    } else {
      std::string name = read_name();
      if (name.empty()) throw ParseError("newick leaf without a name");
      id = tree.add_node(parent, name, "", 1.0);
    }
    if (pos < text.size() && text[pos] == ':') {
      ++pos;
      std::string num;
      while (pos < text.size() &&
             std::string("(),;").find(text[pos]) == std::string::npos &&
             !std::isspace(static_cast<unsigned char>(text[pos]))) {
        num += text[pos++];
      }
      tree.set_branch_length(id, parse_double(num, "newick branch length"));
    }
    return id;
  };

  parse_node(parse_node, -1);
  if (peek() != ';') throw ParseError("newick text must end with ';'");
  std::vector<int> stack{tree.root()};
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    const TaxonomyNode& n = tree.node(cur);
    if (n.children.empty()) {
      tree.register_leaf(n.name, cur);
    } else {
      for (int c : n.children) stack.push_back(c);
    }
  }
  tree.check_structure();
  return tree;
}

TaxonomyTree load_taxonomy_file(const std::string& path) {
  std::string text = read_text_file(path);
  auto ends_with = [&](const char* suffix) {
    std::string s = suffix;
    return path.size() >= s.size() && path.compare(path.size() - s.size(), s.size(), s) == 0;
  };
  if (ends_with(".nwk") || ends_with(".newick") || ends_with(".tree")) {
    return parse_newick(text);
  }
  return parse_lineage_table(text);
}

TaxonomyTree reduce_after_merge(const TaxonomyTree& tree, const std::string& a,
                                const std::string& b) {
  TaxonomyTree copy = tree;
  copy.merge_leaves(a, b, a + "+" + b);
  return copy;
}

}  // namespace paa
