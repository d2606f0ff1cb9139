#include "paa/simbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

#include "paa/common.hpp"

namespace paa {

namespace {

std::vector<std::string> default_ids(const char* prefix, std::size_t count) {
  std::vector<std::string> ids;
  ids.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ids.push_back(prefix + std::to_string(i + 1));
  }
  return ids;
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return (values[mid - 1] + values[mid]) / 2.0;
}

}  // namespace

void SimConfig::validate() const {
  if (n < 1 || p < 1) throw std::invalid_argument("n and p must be at least 1");
  if (replicates < 1) throw std::invalid_argument("replicates must be at least 1");
  if (generator == Generator::Poisson) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  } else {
    if (total_count < 1) throw std::invalid_argument("total count must be at least 1");
    if (probs.size() != p) {
      throw std::invalid_argument("probs must have one entry per column");
    }
    double sum = 0.0;
    for (double q : probs) {
      if (q < 0.0) throw std::invalid_argument("probs must be nonnegative");
      sum += q;
    }
    if (std::abs(sum - 1.0) > 1e-8) {
      throw std::invalid_argument("probs must sum to 1 within 1e-8");
    }
  }
}

std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t r) {
  return seed ^ r;
}

CompositionMatrix gen_poisson_matrix(const SimConfig& cfg,
                                     std::vector<std::string>* events) {
  if (cfg.generator != Generator::Poisson) {
    throw std::invalid_argument("config does not select the Poisson generator");
  }
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::poisson_distribution<long long> draw(cfg.lambda);

  std::vector<double> body(cfg.n * cfg.p, 0.0);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    for (int attempt = 0;; ++attempt) {
      long long row_total = 0;
      for (std::size_t j = 0; j < cfg.p; ++j) {
        long long c = draw(rng);
        body[i * cfg.p + j] = static_cast<double>(c);
        row_total += c;
      }
      if (row_total > 0) break;
      if (events != nullptr) {
        events->push_back("row " + std::to_string(i + 1) +
                          " drew all zeros; redrawn (attempt " +
                          std::to_string(attempt + 1) + ")");
      }
    }
  }
  return make_composition(cfg.n, cfg.p, std::move(body), default_ids("s", cfg.n),
                          default_ids("t", cfg.p));
}

CompositionMatrix gen_multinomial_matrix(const SimConfig& cfg) {
  if (cfg.generator != Generator::Multinomial) {
    throw std::invalid_argument("config does not select the multinomial generator");
  }
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);

  std::vector<double> body(cfg.n * cfg.p, 0.0);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    long long remaining = cfg.total_count;
    double prob_left = 1.0;
    for (std::size_t j = 0; j + 1 < cfg.p; ++j) {
      long long c = 0;
      if (remaining > 0 && prob_left > 0.0) {
        double q = std::clamp(cfg.probs[j] / prob_left, 0.0, 1.0);
        std::binomial_distribution<long long> draw(remaining, q);
        c = draw(rng);
      }
      body[i * cfg.p + j] = static_cast<double>(c);
      remaining -= c;
      prob_left -= cfg.probs[j];
    }
    body[i * cfg.p + cfg.p - 1] = static_cast<double>(remaining);
  }
  return make_composition(cfg.n, cfg.p, std::move(body), default_ids("s", cfg.n),
                          default_ids("t", cfg.p));
}

CompositionMatrix prevalence_filter(const CompositionMatrix& X, std::size_t k,
                                    std::vector<std::string>* flagged) {
  if (k < 1 || k > X.n_taxa) {
    throw std::invalid_argument("k must be between 1 and the column count");
  }
  if (k == X.n_taxa) return X;

  std::vector<std::size_t> prevalence(X.n_taxa, 0);
  std::vector<double> mean(X.n_taxa, 0.0);
  for (std::size_t j = 0; j < X.n_taxa; ++j) {
    for (std::size_t i = 0; i < X.n_samples; ++i) {
      double v = X.at(i, j);
      if (v > 0.0) ++prevalence[j];
      mean[j] += v;
    }
    mean[j] /= static_cast<double>(X.n_samples);
  }
  std::vector<std::size_t> order(X.n_taxa);
  for (std::size_t j = 0; j < X.n_taxa; ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (prevalence[a] != prevalence[b]) return prevalence[a] > prevalence[b];
    if (mean[a] != mean[b]) return mean[a] > mean[b];
    return a < b;
  });
  std::vector<std::size_t> keep(order.begin(),
                                order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(keep.begin(), keep.end());

  CompositionMatrix out;
  out.n_samples = X.n_samples;
  out.n_taxa = k;
  out.sample_ids = X.sample_ids;
  out.library_sizes = X.library_sizes;
  out.taxon_ids.reserve(k);
  for (std::size_t j : keep) out.taxon_ids.push_back(X.taxon_ids[j]);
  out.values.resize(X.n_samples * k);
  for (std::size_t i = 0; i < X.n_samples; ++i) {
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) total += X.at(i, keep[c]);
    if (total > 0.0) {
      double sum = 0.0;
      std::size_t largest = 0;
      for (std::size_t c = 0; c < k; ++c) {
        double v = X.at(i, keep[c]) / total;
        out.values[i * k + c] = v;
        sum += v;
        if (v > out.values[i * k + largest]) largest = c;
      }
      out.values[i * k + largest] += 1.0 - sum;
    } else {
      for (std::size_t c = 0; c < k; ++c) {
        out.values[i * k + c] = 1.0 / static_cast<double>(k);
      }
      double sum = 0.0;
      for (std::size_t c = 0; c < k; ++c) sum += out.values[i * k + c];
      out.values[i * k] += 1.0 - sum;
      if (flagged != nullptr) {
        flagged->push_back("sample " + X.sample_ids[i] +
                           " had no mass on the retained taxa; set uniform");
      }
    }
  }
  return out;
}

Reducer prevalence_reducer(std::size_t k) {
  return Reducer{"Simple", true, [k](const CompositionMatrix& X) {
                   return prevalence_filter(X, k);
                 }};
}

Reducer hpaa_reducer(std::string name, LossSpec spec, ConstraintLevel level,
                     std::optional<TaxonomyTree> tree, std::size_t k,
                     int threads) {
  return Reducer{std::move(name), false,
                 [spec = std::move(spec), level, tree = std::move(tree), k,
                  threads](const CompositionMatrix& X) {
                   HpaaOptions opts;
                   opts.threads = threads;
                   MergeTrace trace = run_hpaa(X, tree, spec, level, opts);
                   return cut(trace, k).scores;
                 }};
}

std::string DistanceStudyReport::to_csv() const {
  std::string csv = "replicate,method,mse,rmse\n";
  for (const DistanceStudyRow& row : rows) {
    csv += std::to_string(row.replicate) + "," + row.method + "," +
           format_double(row.mse) + "," + format_double(row.rmse) + "\n";
  }
  return csv;
}

double DistanceStudyReport::median_mse(const std::string& method) const {
  std::vector<double> values;
  for (const DistanceStudyRow& row : rows) {
    if (row.method == method) values.push_back(row.mse);
  }
  return median_of(std::move(values));
}

double DistanceStudyReport::median_rmse(const std::string& method) const {
  std::vector<double> values;
  for (const DistanceStudyRow& row : rows) {
    if (row.method == method) values.push_back(row.rmse);
  }
  return median_of(std::move(values));
}

DistanceStudyReport distance_preservation_report(
    const CompositionMatrix& reference, const std::vector<Reducer>& methods,
    std::size_t k, std::size_t replicates, std::uint64_t seed,
    long long total_count, int threads) {
  reference.validate();
  if (reference.n_samples < 2) {
    throw std::invalid_argument("the study needs at least 2 samples");
  }
  if (methods.empty()) throw std::invalid_argument("no methods to compare");
  if (replicates < 1) throw std::invalid_argument("replicates must be at least 1");
  std::size_t baseline_count = 0;
  for (const Reducer& m : methods) {
    if (m.name.empty()) throw std::invalid_argument("method with an empty name");
    if (m.baseline) ++baseline_count;
  }
  if (baseline_count != 1) {
    throw std::invalid_argument("exactly one method must be the baseline");
  }
  (void)k;  // the reducers already close over their target size

  // Generator probabilities: the reference's average proportions, folded onto
  // the simplex exactly.
  std::size_t n = reference.n_samples;
  std::size_t p = reference.n_taxa;
  std::vector<double> probs(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) probs[j] += reference.at(i, j);
  }
  double sum = 0.0;
  std::size_t largest = 0;
  for (std::size_t j = 0; j < p; ++j) {
    probs[j] /= static_cast<double>(n);
    sum += probs[j];
    if (probs[j] > probs[largest]) largest = j;
  }
  probs[largest] += 1.0 - sum;

  LossSpec bc;
  bc.kind = LossKind::BC;

  DistanceStudyReport report;
  report.rows.reserve(replicates * methods.size());
  std::string baseline_name;
  for (const Reducer& m : methods) {
    if (m.baseline) baseline_name = m.name;
  }

  for (std::size_t r = 0; r < replicates; ++r) {
    SimConfig cfg;
    cfg.generator = Generator::Multinomial;
    cfg.total_count = total_count;
    cfg.probs = probs;
    cfg.n = n;
    cfg.p = p;
    cfg.seed = replicate_seed(seed, r);
    CompositionMatrix draw = gen_multinomial_matrix(cfg);
    // Column j of a draw is taxon j of the reference, so tree-guided
    // reducers can resolve the columns against the reference's taxonomy.
    draw.taxon_ids = reference.taxon_ids;

    DistanceMatrix ref_dist = distance_matrix(draw, bc, threads);
    for (const Reducer& m : methods) {
      CompositionMatrix reduced = m.reduce(draw);
      if (reduced.n_samples != n) {
        throw std::invalid_argument("reducer '" + m.name +
                                    "' changed the sample count");
      }
      DistanceMatrix red_dist = distance_matrix(reduced, bc, threads);
      double mse = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          double d = ref_dist.at(i, j) - red_dist.at(i, j);
          mse += d * d;
        }
      }
      mse /= static_cast<double>(n * (n - 1) / 2);
      report.rows.push_back({r, m.name, mse, 0.0});
    }
  }

  std::vector<double> baseline_mse;
  baseline_mse.reserve(replicates);
  for (const DistanceStudyRow& row : report.rows) {
    if (row.method == baseline_name) baseline_mse.push_back(row.mse);
  }
  double baseline_median = median_of(std::move(baseline_mse));
  for (DistanceStudyRow& row : report.rows) {
    row.rmse = row.mse / baseline_median;
  }
  return report;
}

std::string RuntimeReport::to_csv() const {
  std::string csv = "n,p,loss,mean_seconds,sd_seconds\n";
  for (const RuntimeRow& row : rows) {
    csv += std::to_string(row.n) + "," + std::to_string(row.p) + "," + row.loss +
           "," + format_double(row.mean_seconds) + "," +
           format_double(row.sd_seconds) + "\n";
  }
  return csv;
}

RuntimeReport runtime_scaling_report(
    const std::vector<std::pair<std::size_t, std::size_t>>& dims,
    const LossSpec& spec, ConstraintLevel level, std::size_t replicates,
    std::uint64_t seed, int threads) {
  if (dims.empty()) throw std::invalid_argument("no dimensions to time");
  if (replicates < 1) throw std::invalid_argument("replicates must be at least 1");

  bool needs_tree =
      spec.kind == LossKind::WUF || level != ConstraintLevel::Unconstrained;

  RuntimeReport report;
  report.rows.reserve(dims.size());
  for (std::size_t d = 0; d < dims.size(); ++d) {
    auto [n, p] = dims[d];
    std::uint64_t base = seed + (d + 1) * 0x9e3779b97f4a7c15ULL;
    std::vector<double> seconds;
    seconds.reserve(replicates);
    for (std::size_t r = 0; r < replicates; ++r) {
      SimConfig cfg;
      cfg.generator = Generator::Poisson;
      cfg.lambda = 100.0;
      cfg.n = n;
      cfg.p = p;
      cfg.seed = replicate_seed(base, r);
      CompositionMatrix X = gen_poisson_matrix(cfg);
      std::optional<TaxonomyTree> tree;
      if (needs_tree) tree = random_taxonomy(X.taxon_ids, cfg.seed ^ 0xA5A5A5A5ULL);

      HpaaOptions opts;
      opts.threads = threads;
      auto start = std::chrono::steady_clock::now();
      MergeTrace trace = run_hpaa(X, tree, spec, level, opts);
      auto stop = std::chrono::steady_clock::now();
      (void)trace;
      seconds.push_back(std::chrono::duration<double>(stop - start).count());
    }
    double mean = 0.0;
    for (double s : seconds) mean += s;
    mean /= static_cast<double>(seconds.size());
    double ss = 0.0;
    for (double s : seconds) ss += (s - mean) * (s - mean);
    double sd = seconds.size() > 1
                    ? std::sqrt(ss / static_cast<double>(seconds.size() - 1))
                    : 0.0;
    report.rows.push_back({n, p, loss_name(spec.kind), mean, sd});
  }
  return report;
}

TaxonomyTree random_taxonomy(const std::vector<std::string>& taxa,
                             std::uint64_t seed, std::size_t max_depth) {
  if (taxa.empty()) throw std::invalid_argument("no taxa for the taxonomy");
  std::mt19937_64 rng(seed);
  std::string body;
  std::size_t deepest = 0;
  for (const std::string& taxon : taxa) {
    body += taxon;
    auto length = static_cast<std::size_t>(rng() % (max_depth + 1));
    deepest = std::max(deepest, length);
    for (std::size_t j = 0; j < length; ++j) {
      // Pools widen with depth so deep levels split finer than shallow ones.
      std::uint64_t pool = 2 + 2 * j;
      body += "\tg" + std::to_string(j + 1) + "_" + std::to_string(rng() % pool);
    }
    body += '\n';
  }
  std::string table = "taxon";
  for (std::size_t j = 1; j <= deepest; ++j) {
    table += "\trank" + std::to_string(j);
  }
  table += '\n' + body;
  return parse_lineage_table(table);
}

}  // namespace paa
