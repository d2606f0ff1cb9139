#include "paa/ordination.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <tuple>

#include <Eigen/Dense>

#include "paa/common.hpp"

namespace paa {

namespace {

// Canonical double in [0, 1) from the top 53 bits; avoids the
// implementation-defined std::uniform_real_distribution sequence.
double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1p-53;
}

std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

void config_distances(const std::vector<double>& coords, std::size_t dim,
                      const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                      int threads, std::vector<double>& out) {
  out.resize(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      auto [i, j] = pairs[p];
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        double d = coords[i * dim + k] - coords[j * dim + k];
        s += d * d;
      }
      out[p] = std::sqrt(s);
    }
  });
}

void center(std::vector<double>& coords, std::size_t n, std::size_t dim) {
  for (std::size_t k = 0; k < dim; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += coords[i * dim + k];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) coords[i * dim + k] -= mean;
  }
}

struct FitResult {
  std::vector<double> dhat;  // disparities, indexed like the pair list
  double stress = 0.0;
};

// Isotonic disparities for the current configuration distances, with
// Kruskal's primary tie treatment: within a block of equal dissimilarities
// the distances are taken in their own ascending order, so ties never incur
// stress on their own.
FitResult fit_disparities(const std::vector<double>& delta,
                          const std::vector<double>& dist) {
  std::size_t m = delta.size();
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(delta[a], dist[a], a) < std::tie(delta[b], dist[b], b);
  });

  std::vector<double> sorted(m), weights(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) sorted[i] = dist[order[i]];
  std::vector<double> fit = isotonic_fit(sorted, weights);

  FitResult out;
  out.dhat.resize(m);
  for (std::size_t i = 0; i < m; ++i) out.dhat[order[i]] = fit[i];

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double r = dist[i] - out.dhat[i];
    num += r * r;
    den += dist[i] * dist[i];
  }
  out.stress = den > 0.0 ? std::sqrt(num / den) : 0.0;
  return out;
}

void guttman_update(const std::vector<double>& coords, std::size_t n,
                    std::size_t dim,
                    const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                    const std::vector<double>& dist,
                    const std::vector<double>& dhat, int threads,
                    std::vector<double>& out) {
  // Dense ratio matrix so each point's accumulation is one row scan.
  std::vector<double> ratio(n * n, 0.0);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    double r = dist[p] > 0.0 ? dhat[p] / dist[p] : 0.0;
    auto [i, j] = pairs[p];
    ratio[i * n + j] = r;
    ratio[j * n + i] = r;
  }
  out.resize(coords.size());
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t k = 0; k < dim; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          acc += ratio[i * n + j] * (coords[i * dim + k] - coords[j * dim + k]);
        }
        out[i * dim + k] = acc / static_cast<double>(n);
      }
    }
  });
}

struct RunResult {
  std::vector<double> coords;
  double stress = 0.0;
  std::size_t iterations = 0;
};

RunResult run_nmds(std::vector<double> coords, std::size_t n, std::size_t dim,
                   const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                   const std::vector<double>& delta, const NmdsOptions& options,
                   int threads) {
  center(coords, n, dim);
  std::vector<double> dist;
  config_distances(coords, dim, pairs, threads, dist);
  FitResult fit = fit_disparities(delta, dist);

  RunResult run;
  run.stress = fit.stress;
  std::vector<double> candidate, cand_dist;
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    if (run.stress < 1e-12) break;
    guttman_update(coords, n, dim, pairs, dist, fit.dhat, threads, candidate);

    double accepted_stress = std::numeric_limits<double>::quiet_NaN();
    FitResult cand_fit;
    for (double alpha : {1.0, 0.5, 0.25}) {
      std::vector<double> trial(coords.size());
      for (std::size_t c = 0; c < coords.size(); ++c) {
        trial[c] = coords[c] + alpha * (candidate[c] - coords[c]);
      }
      config_distances(trial, dim, pairs, threads, cand_dist);
      cand_fit = fit_disparities(delta, cand_dist);
      if (cand_fit.stress <= run.stress) {
        candidate = std::move(trial);
        accepted_stress = cand_fit.stress;
        break;
      }
    }
    if (std::isnan(accepted_stress)) break;  // no step keeps stress from rising

    double improvement = run.stress - accepted_stress;
    coords = std::move(candidate);
    center(coords, n, dim);
    dist = std::move(cand_dist);
    fit = std::move(cand_fit);
    run.stress = accepted_stress;
    run.iterations = iter + 1;
    if (improvement < options.rel_tol * std::max(run.stress, 1e-300)) break;
  }
  run.coords = std::move(coords);
  return run;
}

}  // namespace

std::vector<double> isotonic_fit(const std::vector<double>& y,
                                 const std::vector<double>& w) {
  if (y.size() != w.size()) {
    throw std::invalid_argument("isotonic fit needs matching value and weight counts");
  }
  struct Block {
    double wy = 0.0;
    double weight = 0.0;
    std::size_t count = 0;
    double mean() const { return wy / weight; }
  };
  std::vector<Block> blocks;
  blocks.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(w[i] > 0.0)) throw std::invalid_argument("isotonic weights must be positive");
    blocks.push_back({w[i] * y[i], w[i], 1});
    while (blocks.size() >= 2 &&
           blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
      Block top = blocks.back();
      blocks.pop_back();
      blocks.back().wy += top.wy;
      blocks.back().weight += top.weight;
      blocks.back().count += top.count;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const Block& b : blocks) {
    double v = b.mean();
    for (std::size_t c = 0; c < b.count; ++c) out.push_back(v);
  }
  return out;
}

std::vector<double> classical_mds_init(const DistanceMatrix& D, std::size_t dim) {
  std::size_t n = D.n;
  if (n < 3) throw std::invalid_argument("ordination needs at least 3 points");
  if (dim == 0 || dim >= n) {
    throw std::invalid_argument("embedding dimension must be in [1, points - 1]");
  }

  Eigen::MatrixXd d2(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double v = D.at(i, j);
      d2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v * v;
    }
  }
  Eigen::VectorXd row_mean = d2.rowwise().mean();
  double grand = row_mean.mean();
  Eigen::MatrixXd B(d2.rows(), d2.cols());
  for (Eigen::Index i = 0; i < B.rows(); ++i) {
    for (Eigen::Index j = 0; j < B.cols(); ++j) {
      B(i, j) = -0.5 * (d2(i, j) - row_mean(i) - row_mean(j) + grand);
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(B);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition failed");
  }

  std::vector<double> coords(n * dim, 0.0);
  for (std::size_t k = 0; k < dim; ++k) {
    Eigen::Index col = static_cast<Eigen::Index>(n - 1 - k);  // eigenvalues ascend
    double lambda = solver.eigenvalues()(col);
    double scale = std::sqrt(std::max(lambda, 0.0));
    Eigen::VectorXd vec = solver.eigenvectors().col(col);
    // Fix the sign so the largest-magnitude component is positive.
    Eigen::Index arg = 0;
    vec.cwiseAbs().maxCoeff(&arg);
    if (vec(arg) < 0.0) vec = -vec;
    for (std::size_t i = 0; i < n; ++i) {
      coords[i * dim + k] = vec(static_cast<Eigen::Index>(i)) * scale;
    }
  }
  return coords;
}

double stress1(const DistanceMatrix& D, const std::vector<double>& coords,
               std::size_t dim) {
  std::size_t n = D.n;
  if (coords.size() != n * dim) {
    throw std::invalid_argument("coordinate count does not match the matrix");
  }
  auto pairs = sample_pairs(n);
  std::vector<double> delta(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    delta[p] = D.at(pairs[p].first, pairs[p].second);
  }
  std::vector<double> dist;
  config_distances(coords, dim, pairs, 1, dist);
  return fit_disparities(delta, dist).stress;
}

Embedding nmds(const DistanceMatrix& D, const NmdsOptions& options, int threads) {
  std::size_t n = D.n;
  double max_entry = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double v = D.at(i, j);
      if (!std::isfinite(v)) {
        throw std::invalid_argument("dissimilarity matrix has a non-finite entry");
      }
      if (v < 0.0) {
        throw std::invalid_argument("dissimilarity matrix has a negative entry");
      }
      max_entry = std::max(max_entry, v);
    }
  }
  if (max_entry == 0.0) {
    throw std::invalid_argument("dissimilarity matrix is identically zero");
  }

  std::vector<double> init = classical_mds_init(D, options.dim);
  double rms = 0.0;
  for (double c : init) rms += c * c;
  rms = std::sqrt(rms / static_cast<double>(init.size()));
  if (rms == 0.0) {
    // Degenerate start (no positive eigenvalue); spread the points instead.
    std::mt19937_64 rng(options.seed);
    for (double& c : init) c = unit_double(rng) - 0.5;
    rms = 0.5;
  }

  auto pairs = sample_pairs(n);
  std::vector<double> delta(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    delta[p] = D.at(pairs[p].first, pairs[p].second);
  }

  RunResult best = run_nmds(init, n, options.dim, pairs, delta, options, threads);
  for (std::size_t r = 1; r <= options.restarts; ++r) {
    std::mt19937_64 rng(options.seed + r);
    std::vector<double> start = init;
    for (double& c : start) c += (unit_double(rng) - 0.5) * 0.2 * rms;
    RunResult alt = run_nmds(std::move(start), n, options.dim, pairs, delta,
                             options, threads);
    if (alt.stress < best.stress) best = std::move(alt);
  }

  Embedding out;
  out.n_points = n;
  out.dim = options.dim;
  out.coords = std::move(best.coords);
  out.stress = best.stress;
  out.iterations = best.iterations;
  out.point_ids = D.sample_ids;
  return out;
}

OrdinationCompare ordination_compare(const CompositionMatrix& X,
                                     const Grouping& grouping,
                                     const LossSpec& metric,
                                     const NmdsOptions& options, int threads) {
  if (is_alpha_loss(metric.kind)) {
    throw std::invalid_argument(
        "ordination comparison needs a between-sample metric (bc or wuf)");
  }
  grouping.validate(X.n_taxa);
  std::size_t n = X.n_samples;

  CompositionMatrix principals = amalgamate(X, grouping);

  CompositionMatrix stacked;
  stacked.n_samples = 2 * n;
  stacked.n_taxa = X.n_taxa;
  stacked.taxon_ids = X.taxon_ids;
  stacked.values.resize(2 * n * X.n_taxa);
  std::copy(X.values.begin(), X.values.end(), stacked.values.begin());
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(principals.row(i), principals.row(i) + principals.n_taxa);
    std::vector<double> spread = lift(row, grouping);
    std::copy(spread.begin(), spread.end(),
              stacked.values.begin() + static_cast<std::ptrdiff_t>((n + i) * X.n_taxa));
  }
  stacked.sample_ids.reserve(2 * n);
  for (const auto& id : X.sample_ids) stacked.sample_ids.push_back(id);
  for (const auto& id : X.sample_ids) stacked.sample_ids.push_back(id);

  DistanceMatrix D = distance_matrix(stacked, metric, threads);

  OrdinationCompare out;
  out.embedding = nmds(D, options, threads);

  out.pairing.reserve(n);
  out.pair_distance.reserve(n);
  out.radii.reserve(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.pairing.emplace_back(i, n + i);
    double s = 0.0;
    for (std::size_t k = 0; k < out.embedding.dim; ++k) {
      double d = out.embedding.at(i, k) - out.embedding.at(n + i, k);
      s += d * d;
    }
    double dist = std::sqrt(s);
    out.pair_distance.push_back(dist);
    out.radii.push_back(dist / 2.0);
    mean += dist;
  }
  mean /= static_cast<double>(n);
  out.mean_distance = mean;
  double ss = 0.0;
  for (double d : out.pair_distance) ss += (d - mean) * (d - mean);
  out.sd_distance = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  return out;
}

}  // namespace paa
