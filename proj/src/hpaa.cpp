#include "paa/hpaa.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <span>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "paa/common.hpp"

namespace paa {

namespace {

double phi(double v) { return v > 0.0 ? v * std::log(v) : 0.0; }

std::uint64_t pair_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

std::string quote_newick(const std::string& name) {
  if (!name.empty() && name.find_first_of(" \t(),:;'\"[]") == std::string::npos) {
    return name;
  }
  std::string out = "'";
  for (char c : name) {
    out += c;
    if (c == '\'') out += '\'';
  }
  out += '\'';
  return out;
}

}  // namespace

std::string level_name(ConstraintLevel level) {
  switch (level) {
    case ConstraintLevel::Unconstrained: return "none";
    case ConstraintLevel::WeakHierarchy: return "weak";
    case ConstraintLevel::StrongHierarchy: return "strong";
  }
  return "?";
}

ConstraintLevel level_from_name(const std::string& name) {
  std::string s;
  for (char c : name) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "none" || s == "unconstrained") return ConstraintLevel::Unconstrained;
  if (s == "weak") return ConstraintLevel::WeakHierarchy;
  if (s == "strong") return ConstraintLevel::StrongHierarchy;
  throw std::invalid_argument("unknown constraint level '" + name +
                              "' (expected none, weak or strong)");
}

std::string MergeTrace::label(int forest_id) const {
  if (forest_id < 0) throw std::invalid_argument("negative node id");
  auto p = static_cast<int>(initial_taxa.size());
  if (forest_id < p) return initial_taxa[static_cast<std::size_t>(forest_id)];
  auto t = static_cast<std::size_t>(forest_id - p);
  if (t >= steps.size()) throw std::invalid_argument("node id out of range");
  return steps[t].new_label;
}

std::vector<std::pair<std::size_t, std::size_t>> active_pairs(
    std::size_t count, const TaxonomyTree* tree,
    const std::vector<int>* position_leaves, ConstraintLevel level,
    std::vector<std::string>* notes) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (count < 2) return out;

  if (level == ConstraintLevel::Unconstrained) {
    for (std::size_t a = 0; a + 1 < count; ++a) {
      for (std::size_t b = a + 1; b < count; ++b) out.emplace_back(a, b);
    }
    return out;
  }
  if (tree == nullptr || position_leaves == nullptr ||
      position_leaves->size() != count) {
    throw std::invalid_argument("weak and strong levels need the taxonomy tree");
  }

  std::vector<int> anc(count);
  for (std::size_t i = 0; i < count; ++i) {
    anc[i] = tree->lowest_multichild_ancestor((*position_leaves)[i]);
  }
  auto weak_pairs = [&]() {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a + 1 < count; ++a) {
      for (std::size_t b = a + 1; b < count; ++b) {
        if (anc[a] == anc[b]) pairs.emplace_back(a, b);
      }
    }
    return pairs;
  };

  if (level == ConstraintLevel::WeakHierarchy) {
    out = weak_pairs();
  } else {
    std::vector<int> dep(count);
    for (std::size_t i = 0; i < count; ++i) dep[i] = tree->depth((*position_leaves)[i]);
    std::vector<int> strata = dep;
    std::sort(strata.begin(), strata.end(), std::greater<int>());
    strata.erase(std::unique(strata.begin(), strata.end()), strata.end());
    int max_depth = strata.front();
    for (int d : strata) {
      for (std::size_t a = 0; a + 1 < count; ++a) {
        for (std::size_t b = a + 1; b < count; ++b) {
          if (dep[a] == d && dep[b] == d && anc[a] == anc[b]) out.emplace_back(a, b);
        }
      }
      if (!out.empty()) {
        if (d != max_depth && notes != nullptr) {
          notes->push_back("no mergeable pair at depth " + std::to_string(max_depth) +
                           ", relaxed to depth " + std::to_string(d));
        }
        return out;
      }
    }
    out = weak_pairs();
    if (!out.empty() && notes != nullptr) {
      notes->push_back("no same-depth mergeable pair, relaxed to the weak set");
    }
  }

  if (out.empty()) {
    if (count == 2) {
      if (notes != nullptr) notes->push_back("final pair forced despite the constraint");
      out.emplace_back(0, 1);
    } else {
      throw std::invalid_argument(
          "empty active set with more than two nodes remaining (malformed tree)");
    }
  }
  return out;
}

double merge_cost(const HpaaState& state, std::size_t j, std::size_t jp,
                  const LossSpec& spec) {
  if (state.data == nullptr) throw std::invalid_argument("merge_cost needs data");
  const CompositionMatrix& X = *state.data;
  if (j == jp || j >= X.n_taxa || jp >= X.n_taxa) {
    throw std::invalid_argument("merge_cost column indices out of range");
  }
  std::size_t n = X.n_samples;

  switch (spec.kind) {
    case LossKind::SDI: {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += X.at(i, j) * X.at(i, jp);
      return s;
    }
    case LossKind::SWI: {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double a = X.at(i, j);
        double b = X.at(i, jp);
        s += phi(a + b) - phi(a) - phi(b);
      }
      if (spec.swi_log2) s /= std::log(2.0);
      return std::max(0.0, s);
    }
    case LossKind::BC: {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t i2 = i + 1; i2 < n; ++i2) {
          double before = std::min(X.at(i, j), X.at(i2, j)) +
                          std::min(X.at(i, jp), X.at(i2, jp));
          double after = std::min(X.at(i, j) + X.at(i, jp),
                                  X.at(i2, j) + X.at(i2, jp));
          double d = before - after;
          s += d * d;
        }
      }
      return s;
    }
    case LossKind::WUF: {
      if (state.tree == nullptr || state.column_leaves == nullptr ||
          state.column_leaves->size() != X.n_taxa) {
        throw std::invalid_argument("weighted UniFrac merge cost needs the tree");
      }
      const TaxonomyTree& tree = *state.tree;
      std::vector<double> l(X.n_taxa), L(X.n_taxa);
      for (std::size_t c = 0; c < X.n_taxa; ++c) {
        int leaf = (*state.column_leaves)[c];
        l[c] = tree.node(leaf).branch_length;
        L[c] = tree.root_path_length(leaf);
      }
      MergedLeafPlacement plan = tree.plan_merge(tree.node((*state.column_leaves)[j]).name,
                                                 tree.node((*state.column_leaves)[jp]).name);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t i2 = i + 1; i2 < n; ++i2) {
          double num = 0.0, den = 0.0;
          for (std::size_t c = 0; c < X.n_taxa; ++c) {
            if (c == j || c == jp) continue;
            num += l[c] * std::abs(X.at(i, c) - X.at(i2, c));
            den += L[c] * (X.at(i, c) + X.at(i2, c));
          }
          double dj = X.at(i, j) - X.at(i2, j);
          double djp = X.at(i, jp) - X.at(i2, jp);
          double sj = X.at(i, j) + X.at(i2, j);
          double sjp = X.at(i, jp) + X.at(i2, jp);
          double num_before = num + l[j] * std::abs(dj) + l[jp] * std::abs(djp);
          double den_before = den + L[j] * sj + L[jp] * sjp;
          double num_after = num + plan.branch_length * std::abs(dj + djp);
          double den_after = den + plan.root_path_length * (sj + sjp);
          double before = den_before > 0.0 ? num_before / den_before : 0.0;
          double after = den_after > 0.0 ? num_after / den_after : 0.0;
          double d = before - after;
          s += d * d;
        }
      }
      return s;
    }
  }
  throw std::invalid_argument("unknown loss kind");
}

namespace {

class Engine {
 public:
  Engine(const CompositionMatrix& X, const std::optional<TaxonomyTree>& tree,
         const LossSpec& spec, ConstraintLevel level, const HpaaOptions& opts)
      : spec_(spec), level_(level), opts_(opts) {
    if (X.n_taxa < 2) throw std::invalid_argument("need at least 2 columns to amalgamate");
    X.validate();
    const std::optional<TaxonomyTree>* guide = &tree;
    if (!tree.has_value() && spec.tree.has_value()) guide = &spec.tree;

    if (spec_.kind == LossKind::WUF) {
      if (level_ == ConstraintLevel::Unconstrained) {
        throw std::invalid_argument(
            "weighted UniFrac needs taxonomy-guided merges (weak or strong); "
            "unconstrained merges leave the merged branch lengths undefined");
      }
      if (!guide->has_value()) {
        throw std::invalid_argument("weighted UniFrac needs a taxonomy tree");
      }
    }
    if (level_ != ConstraintLevel::Unconstrained && !guide->has_value()) {
      throw std::invalid_argument("weak and strong levels need a taxonomy tree");
    }
    if (guide->has_value()) {
      if ((*guide)->leaf_count() != X.n_taxa) {
        throw std::invalid_argument("tree leaves do not match the data columns");
      }
      for (const auto& taxon : X.taxon_ids) {
        if (!(*guide)->has_taxon(taxon)) {
          throw std::invalid_argument("taxon '" + taxon + "' is missing from the tree");
        }
      }
      tree_ = **guide;
    }

    n_ = X.n_samples;
    p_ = X.n_taxa;
    threads_ = opts_.threads;

    cols_.resize(p_);
    for (std::size_t j = 0; j < p_; ++j) {
      cols_[j].resize(n_);
      for (std::size_t i = 0; i < n_; ++i) cols_[j][i] = X.at(i, j);
    }
    ents_.resize(p_);
    for (std::size_t j = 0; j < p_; ++j) {
      ents_[j] = {static_cast<int>(j), X.taxon_ids[j],
                  tree_ ? tree_->leaf_id(X.taxon_ids[j]) : -1};
      used_labels_.insert(X.taxon_ids[j]);
    }

    trace_.initial_taxa = X.taxon_ids;
    trace_.loss = spec_.kind;
    trace_.level = level_;
    trace_.swi_log2 = spec_.swi_log2;
    trace_.input = X;
    trace_.input_tree = tree_;

    if (is_alpha_loss(spec_.kind)) {
      init_alpha(X);
    } else {
      init_beta();
    }
  }

  MergeTrace run() {
    std::size_t total_steps = p_ - 1;
    for (std::size_t t = 1; t <= total_steps; ++t) step(static_cast<int>(t));
    return std::move(trace_);
  }

 private:
  void init_alpha(const CompositionMatrix& X) {
    total_alpha_ = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      std::span<const double> row(X.row(i), p_);
      total_alpha_ += spec_.kind == LossKind::SDI ? sdi(row) : swi(row, spec_.swi_log2);
    }
    trace_.initial_total = total_alpha_;
    if (spec_.kind == LossKind::SDI) {
      gram_.assign(p_, std::vector<double>(p_, 0.0));
      std::size_t pairs = p_ * (p_ + 1) / 2;
      parallel_for(pairs, threads_, [&](std::size_t begin, std::size_t end) {
        for (std::size_t idx = begin; idx < end; ++idx) {
          // Unrank (a, b) with a <= b from the upper triangle with diagonal.
          std::size_t a = 0;
          std::size_t rem = idx;
          std::size_t row_len = p_;
          while (rem >= row_len) {
            rem -= row_len;
            ++a;
            --row_len;
          }
          std::size_t b = a + rem;
          double s = 0.0;
          for (std::size_t i = 0; i < n_; ++i) s += cols_[a][i] * cols_[b][i];
          gram_[a][b] = s;
          gram_[b][a] = s;
        }
      });
    }
  }

  void init_beta() {
    std::size_t pairs = n_ > 1 ? n_ * (n_ - 1) / 2 : 0;
    d0_.assign(pairs, 0.0);
    if (spec_.kind == LossKind::BC) {
      overlap_.assign(pairs, 0.0);
    } else {
      wnum_.assign(pairs, 0.0);
      wden_.assign(pairs, 0.0);
      wl_.resize(p_);
      wL_.resize(p_);
      for (std::size_t c = 0; c < p_; ++c) {
        int leaf = ents_[c].leaf;
        wl_[c] = tree_->node(leaf).branch_length;
        wL_[c] = tree_->root_path_length(leaf);
      }
    }
    parallel_for(pairs, threads_, [&](std::size_t begin, std::size_t end) {
      for (std::size_t idx = begin; idx < end; ++idx) {
        std::size_t i = 0;
        std::size_t rem = idx;
        std::size_t row_len = n_ - 1;
        while (rem >= row_len) {
          rem -= row_len;
          ++i;
          --row_len;
        }
        std::size_t i2 = i + 1 + rem;
        if (spec_.kind == LossKind::BC) {
          double overlap = 0.0;
          for (std::size_t c = 0; c < p_; ++c) {
            overlap += std::min(cols_[c][i], cols_[c][i2]);
          }
          overlap_[idx] = overlap;
          d0_[idx] = 1.0 - overlap;
        } else {
          double num = 0.0, den = 0.0;
          for (std::size_t c = 0; c < p_; ++c) {
            num += wl_[c] * std::abs(cols_[c][i] - cols_[c][i2]);
            den += wL_[c] * (cols_[c][i] + cols_[c][i2]);
          }
          wnum_[idx] = num;
          wden_[idx] = den;
          d0_[idx] = den > 0.0 ? num / den : 0.0;
        }
      }
    });
    if (spec_.kind == LossKind::BC) overlap0_ = overlap_;
    double sq = 0.0;
    for (double d : d0_) sq += d * d;
    norm0_ = std::sqrt(sq);
    trace_.initial_total = norm0_;
  }

  double swi_cost(std::size_t a, std::size_t b) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double x = cols_[a][i];
      double y = cols_[b][i];
      s += phi(x + y) - phi(x) - phi(y);
    }
    if (spec_.swi_log2) s /= std::log(2.0);
    return std::max(0.0, s);
  }

  double bc_cost(std::size_t a, std::size_t b) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t i2 = i + 1; i2 < n_; ++i2) {
        double before = std::min(cols_[a][i], cols_[a][i2]) +
                        std::min(cols_[b][i], cols_[b][i2]);
        double after = std::min(cols_[a][i] + cols_[b][i], cols_[a][i2] + cols_[b][i2]);
        double d = before - after;
        s += d * d;
      }
    }
    return s;
  }

  double wuf_cost(std::size_t a, std::size_t b, const MergedLeafPlacement& plan) const {
    double s = 0.0;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t i2 = i + 1; i2 < n_; ++i2, ++idx) {
        double da = cols_[a][i] - cols_[a][i2];
        double db = cols_[b][i] - cols_[b][i2];
        double sa = cols_[a][i] + cols_[a][i2];
        double sb = cols_[b][i] + cols_[b][i2];
        double num_after = wnum_[idx] - wl_[a] * std::abs(da) - wl_[b] * std::abs(db) +
                           plan.branch_length * std::abs(da + db);
        double den_after = wden_[idx] - wL_[a] * sa - wL_[b] * sb +
                           plan.root_path_length * (sa + sb);
        num_after = std::max(0.0, num_after);
        double before = wden_[idx] > 0.0 ? wnum_[idx] / wden_[idx] : 0.0;
        double after = den_after > 0.0 ? num_after / den_after : 0.0;
        double d = before - after;
        s += d * d;
      }
    }
    return s;
  }

  void step(int t) {
    std::size_t m = ents_.size();
    std::vector<int> leaves;
    if (tree_) {
      leaves.resize(m);
      for (std::size_t i = 0; i < m; ++i) leaves[i] = ents_[i].leaf;
    }
    std::vector<std::string> local_notes;
    auto active = active_pairs(m, tree_ ? &*tree_ : nullptr,
                               tree_ ? &leaves : nullptr, level_, &local_notes);
    for (const auto& note : local_notes) {
      trace_.notes.push_back("step " + std::to_string(t) + ": " + note);
    }

    std::vector<double> costs(active.size(), 0.0);
    std::vector<MergedLeafPlacement> plans;
    switch (spec_.kind) {
      case LossKind::SDI:
        for (std::size_t c = 0; c < active.size(); ++c) {
          costs[c] = gram_[active[c].first][active[c].second];
        }
        break;
      case LossKind::SWI:
      case LossKind::BC: {
        std::vector<std::size_t> missing;
        for (std::size_t c = 0; c < active.size(); ++c) {
          auto key = pair_key(ents_[active[c].first].fid, ents_[active[c].second].fid);
          auto it = cost_cache_.find(key);
          if (it == cost_cache_.end()) {
            missing.push_back(c);
          } else {
            costs[c] = it->second;
          }
        }
        std::vector<double> fresh(missing.size());
        parallel_for(missing.size(), threads_, [&](std::size_t begin, std::size_t end) {
          for (std::size_t k = begin; k < end; ++k) {
            auto [a, b] = active[missing[k]];
            fresh[k] = spec_.kind == LossKind::SWI ? swi_cost(a, b) : bc_cost(a, b);
          }
        });
        for (std::size_t k = 0; k < missing.size(); ++k) {
          auto [a, b] = active[missing[k]];
          cost_cache_[pair_key(ents_[a].fid, ents_[b].fid)] = fresh[k];
          costs[missing[k]] = fresh[k];
        }
        break;
      }
      case LossKind::WUF: {
        plans.resize(active.size());
        for (std::size_t c = 0; c < active.size(); ++c) {
          plans[c] = tree_->plan_merge(ents_[active[c].first].label,
                                       ents_[active[c].second].label);
        }
        parallel_for(active.size(), threads_, [&](std::size_t begin, std::size_t end) {
          for (std::size_t c = begin; c < end; ++c) {
            costs[c] = wuf_cost(active[c].first, active[c].second, plans[c]);
          }
        });
        break;
      }
    }

    std::size_t chosen = 0;
    for (std::size_t c = 1; c < costs.size(); ++c) {
      if (costs[c] < costs[chosen]) chosen = c;
    }

    if (opts_.observer) {
      CompositionMatrix cur = materialize();
      StepInfo info;
      info.step = t;
      info.active = &active;
      info.costs = &costs;
      info.chosen = chosen;
      info.data = &cur;
      info.tree = tree_ ? &*tree_ : nullptr;
      info.column_leaves = tree_ ? &leaves : nullptr;
      opts_.observer(info);
    }

    apply(t, active[chosen].first, active[chosen].second, costs[chosen]);
  }

  void apply(int t, std::size_t a, std::size_t b, double cost) {
    MergeStep rec;
    rec.step = t;
    rec.left_id = ents_[a].fid;
    rec.right_id = ents_[b].fid;
    rec.new_id = static_cast<int>(p_) + t - 1;
    rec.left_label = ents_[a].label;
    rec.right_label = ents_[b].label;
    rec.new_label = fresh_label(t);

    // Branch data of both columns must be captured before the tree mutates.
    double la = 0.0, lb = 0.0, La = 0.0, Lb = 0.0;
    if (spec_.kind == LossKind::WUF) {
      la = wl_[a];
      lb = wl_[b];
      La = wL_[a];
      Lb = wL_[b];
    }
    MergedLeafPlacement placement;
    if (tree_) {
      placement = tree_->merge_leaves(rec.left_label, rec.right_label, rec.new_label);
    }

    if (spec_.kind == LossKind::SDI) {
      rec.step_loss = 2.0 * cost;
      cum_alpha_ += rec.step_loss;
    } else if (spec_.kind == LossKind::SWI) {
      rec.step_loss = cost;
      cum_alpha_ += rec.step_loss;
    } else {
      rec.step_loss = cost;
    }

    // Merge the β bookkeeping before the columns themselves.
    std::size_t pairs = d0_.size();
    if (spec_.kind == LossKind::BC) {
      std::size_t idx = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t i2 = i + 1; i2 < n_; ++i2, ++idx) {
          double gained = std::min(cols_[a][i] + cols_[b][i], cols_[a][i2] + cols_[b][i2]) -
                          std::min(cols_[a][i], cols_[a][i2]) -
                          std::min(cols_[b][i], cols_[b][i2]);
          overlap_[idx] += std::max(0.0, gained);
        }
      }
    } else if (spec_.kind == LossKind::WUF) {
      std::size_t idx = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t i2 = i + 1; i2 < n_; ++i2, ++idx) {
          double da = cols_[a][i] - cols_[a][i2];
          double db = cols_[b][i] - cols_[b][i2];
          double sa = cols_[a][i] + cols_[a][i2];
          double sb = cols_[b][i] + cols_[b][i2];
          wnum_[idx] = std::max(0.0, wnum_[idx] - la * std::abs(da) - lb * std::abs(db) +
                                         placement.branch_length * std::abs(da + db));
          wden_[idx] = std::max(0.0, wden_[idx] - La * sa - Lb * sb +
                                         placement.root_path_length * (sa + sb));
        }
      }
      wl_[a] = placement.branch_length;
      wL_[a] = placement.root_path_length;
      wl_.erase(wl_.begin() + static_cast<std::ptrdiff_t>(b));
      wL_.erase(wL_.begin() + static_cast<std::ptrdiff_t>(b));
    }

    // Merge the columns; the merged column keeps the smaller position.
    for (std::size_t i = 0; i < n_; ++i) cols_[a][i] += cols_[b][i];
    cols_.erase(cols_.begin() + static_cast<std::ptrdiff_t>(b));
    ents_[a] = {rec.new_id, rec.new_label, placement.merged_node};
    ents_.erase(ents_.begin() + static_cast<std::ptrdiff_t>(b));

    if (spec_.kind == LossKind::SDI) {
      // Row/column folding keeps every off-diagonal entry exact; diagonals go
      // stale but no cost lookup ever reads them.
      for (std::size_t k = 0; k < gram_.size(); ++k) {
        gram_[a][k] += gram_[b][k];
      }
      gram_.erase(gram_.begin() + static_cast<std::ptrdiff_t>(b));
      for (std::size_t k = 0; k < gram_.size(); ++k) {
        gram_[k].erase(gram_[k].begin() + static_cast<std::ptrdiff_t>(b));
        gram_[k][a] = gram_[a][k];
      }
    }

    if (is_alpha_loss(spec_.kind)) {
      rec.cumulative_loss = cum_alpha_;
      rec.percent_loss =
          total_alpha_ > 0.0 ? std::min(100.0, 100.0 * cum_alpha_ / total_alpha_) : 0.0;
    } else {
      double cum = 0.0;
      if (spec_.kind == LossKind::BC) {
        for (std::size_t idx = 0; idx < pairs; ++idx) {
          double diff = overlap_[idx] - overlap0_[idx];
          cum += diff * diff;
        }
      } else {
        for (std::size_t idx = 0; idx < pairs; ++idx) {
          double dt = wden_[idx] > 0.0 ? wnum_[idx] / wden_[idx] : 0.0;
          double diff = d0_[idx] - dt;
          cum += diff * diff;
        }
      }
      rec.cumulative_loss = cum;
      rec.percent_loss =
          norm0_ > 0.0 ? std::min(100.0, 100.0 * std::sqrt(cum) / norm0_) : 0.0;
    }
    trace_.steps.push_back(std::move(rec));
  }

  std::string fresh_label(int t) {
    std::string label = "m" + std::to_string(t);
    while (!used_labels_.insert(label).second) label += "_";
    return label;
  }

  CompositionMatrix materialize() const {
    CompositionMatrix cur;
    cur.n_samples = n_;
    cur.n_taxa = ents_.size();
    cur.sample_ids = trace_.input.sample_ids;
    cur.library_sizes = trace_.input.library_sizes;
    cur.taxon_ids.reserve(ents_.size());
    for (const auto& e : ents_) cur.taxon_ids.push_back(e.label);
    cur.values.resize(n_ * ents_.size());
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < ents_.size(); ++j) {
        cur.values[i * ents_.size() + j] = cols_[j][i];
      }
    }
    return cur;
  }

  struct Ent {
    int fid = -1;
    std::string label;
    int leaf = -1;
  };

  LossSpec spec_;
  ConstraintLevel level_;
  HpaaOptions opts_;
  int threads_ = 0;
  std::size_t n_ = 0, p_ = 0;
  std::vector<std::vector<double>> cols_;
  std::vector<Ent> ents_;
  std::optional<TaxonomyTree> tree_;
  std::vector<std::vector<double>> gram_;
  std::unordered_map<std::uint64_t, double> cost_cache_;
  std::vector<double> overlap_, overlap0_;
  std::vector<double> wnum_, wden_, wl_, wL_;
  std::vector<double> d0_;
  double norm0_ = 0.0;
  double total_alpha_ = 0.0;
  double cum_alpha_ = 0.0;
  MergeTrace trace_;
  std::unordered_set<std::string> used_labels_;
};

}  // namespace

MergeTrace run_hpaa(const CompositionMatrix& X,
                    const std::optional<TaxonomyTree>& tree, const LossSpec& spec,
                    ConstraintLevel level, const HpaaOptions& opts) {
  Engine engine(X, tree, spec, level, opts);
  return engine.run();
}

CutResult cut(const MergeTrace& trace, std::size_t k) {
  std::size_t p = trace.n_initial();
  if (k < 1 || k > p) throw std::invalid_argument("cut level k must be in [1, p]");
  if (trace.steps.size() != p - 1) throw std::invalid_argument("incomplete trace");

  struct Part {
    int fid;
    std::string label;
    std::vector<std::size_t> members;
  };
  std::vector<Part> parts(p);
  for (std::size_t j = 0; j < p; ++j) {
    parts[j] = {static_cast<int>(j), trace.initial_taxa[j], {j}};
  }
  std::optional<TaxonomyTree> tree = trace.input_tree;

  std::size_t merges = p - k;
  for (std::size_t t = 0; t < merges; ++t) {
    const MergeStep& s = trace.steps[t];
    auto find_part = [&](int fid) {
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i].fid == fid) return i;
      }
      throw std::invalid_argument("trace references an unknown node id");
    };
    std::size_t ia = find_part(s.left_id);
    std::size_t ib = find_part(s.right_id);
    if (ia > ib) std::swap(ia, ib);
    parts[ia].members.insert(parts[ia].members.end(), parts[ib].members.begin(),
                             parts[ib].members.end());
    parts[ia].fid = s.new_id;
    parts[ia].label = s.new_label;
    parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(ib));
    if (tree) tree->merge_leaves(s.left_label, s.right_label, s.new_label);
  }

  CutResult out;
  out.grouping.groups.reserve(parts.size());
  out.grouping.group_labels.reserve(parts.size());
  for (auto& part : parts) {
    std::sort(part.members.begin(), part.members.end());
    out.grouping.groups.push_back(std::move(part.members));
    out.grouping.group_labels.push_back(std::move(part.label));
  }
  out.scores = amalgamate(trace.input, out.grouping);
  out.tree = std::move(tree);
  return out;
}

std::vector<ScreePoint> scree(const MergeTrace& trace) {
  std::vector<ScreePoint> points;
  std::size_t p = trace.n_initial();
  points.push_back({p, 0.0});
  for (const MergeStep& s : trace.steps) {
    points.push_back({p - static_cast<std::size_t>(s.step), s.percent_loss});
  }
  return points;
}

std::vector<int> replay_max_depths(const MergeTrace& trace) {
  if (!trace.input_tree) {
    throw std::invalid_argument("trace has no tree to replay");
  }
  TaxonomyTree tree = *trace.input_tree;
  std::vector<int> depths;
  depths.reserve(trace.steps.size());
  for (const MergeStep& s : trace.steps) {
    tree.merge_leaves(s.left_label, s.right_label, s.new_label);
    depths.push_back(tree.max_leaf_depth());
  }
  return depths;
}

std::string trace_to_json(const MergeTrace& trace) {
  nlohmann::ordered_json doc;
  doc["loss"] = loss_name(trace.loss);
  doc["level"] = level_name(trace.level);
  doc["swi_log2"] = trace.swi_log2;
  doc["taxa"] = trace.initial_taxa;
  doc["initial_total"] = trace.initial_total;
  doc["steps"] = nlohmann::ordered_json::array();
  for (const MergeStep& s : trace.steps) {
    nlohmann::ordered_json step;
    step["t"] = s.step;
    step["pair"] = {s.left_label, s.right_label};
    step["pair_ids"] = {s.left_id, s.right_id};
    step["new"] = s.new_label;
    step["new_id"] = s.new_id;
    step["step_loss"] = s.step_loss;
    step["cumulative_loss"] = s.cumulative_loss;
    step["percent_loss"] = s.percent_loss;
    doc["steps"].push_back(std::move(step));
  }
  doc["notes"] = trace.notes;
  return doc.dump(2) + "\n";
}

std::string dendrogram_newick(const MergeTrace& trace) {
  std::size_t p = trace.n_initial();
  if (trace.steps.size() != p - 1) throw std::invalid_argument("incomplete trace");
  auto height = [&](int fid) {
    return fid < static_cast<int>(p)
               ? 0.0
               : trace.steps[static_cast<std::size_t>(fid) - p].percent_loss;
  };
  std::string text;
  auto emit = [&](auto&& self, int fid, double parent_height) -> void {
    if (fid >= static_cast<int>(p)) {
      const MergeStep& s = trace.steps[static_cast<std::size_t>(fid) - p];
      text += '(';
      self(self, s.left_id, height(fid));
      text += ',';
      self(self, s.right_id, height(fid));
      text += ')';
    }
    text += quote_newick(trace.label(fid));
    if (parent_height >= 0.0) {
      text += ':';
      text += format_double(parent_height - height(fid));
    }
  };
  int root = static_cast<int>(p + trace.steps.size() - 1);
  emit(emit, root, -1.0);
  text += ';';
  return text;
}

}  // namespace paa
