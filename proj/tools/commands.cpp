#include "commands.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "paa/common.hpp"
#include "paa/composition.hpp"
#include "paa/diversity.hpp"
#include "paa/hpaa.hpp"
#include "paa/ordination.hpp"
#include "paa/render.hpp"
#include "paa/simbench.hpp"
#include "paa/taxonomy.hpp"

namespace paa::cli {

namespace {

// Configuration problems found after flag parsing; mapped to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonArgs {
  std::string input;
  std::string tree;
  std::string loss = "sdi";
  std::string level = "none";
  long long k = -1;
  std::string out = ".";
  int threads = 0;
  std::uint64_t seed = 0;
  bool log_scale = false;
};

LossKind parse_loss(const std::string& name) {
  try {
    return loss_from_name(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ConstraintLevel parse_level(const std::string& name) {
  try {
    return level_from_name(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void check_loss_level(LossKind loss, ConstraintLevel level, bool have_tree) {
  if (loss == LossKind::WUF) {
    if (!have_tree) {
      throw ConfigError("--loss wuf needs --tree (weighted UniFrac is tree-based)");
    }
    if (level == ConstraintLevel::Unconstrained) {
      throw ConfigError(
          "--loss wuf needs --level weak or strong; unconstrained merges leave "
          "the merged branch lengths undefined");
    }
  }
  if (level != ConstraintLevel::Unconstrained && !have_tree) {
    throw ConfigError("--level " + level_name(level) + " needs --tree");
  }
}

std::optional<TaxonomyTree> load_tree_arg(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_taxonomy_file(path);
}

std::filesystem::path prepare_out_dir(const std::string& out) {
  std::filesystem::path dir(out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + out + "'");
  return dir;
}

void emit(const std::filesystem::path& dir, const std::string& name,
          const std::string& content) {
  auto path = (dir / name).string();
  write_text_file(path, content);
  std::cerr << "wrote " << path << "\n";
}

std::size_t checked_k(long long k, std::size_t p) {
  if (k < 1 || static_cast<std::size_t>(k) > p) {
    throw ConfigError("--k must be between 1 and the column count (" +
                      std::to_string(p) + ")");
  }
  return static_cast<std::size_t>(k);
}

std::string grouping_json(const Grouping& g,
                          const std::vector<std::string>& taxa) {
  nlohmann::ordered_json doc;
  doc["k"] = g.size();
  doc["groups"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < g.size(); ++i) {
    nlohmann::ordered_json entry;
    entry["label"] = g.group_labels[i];
    entry["members"] = nlohmann::ordered_json::array();
    for (std::size_t j : g.groups[i]) entry["members"].push_back(taxa[j]);
    doc["groups"].push_back(std::move(entry));
  }
  return doc.dump(2) + "\n";
}

int cmd_fit(const CommonArgs& args) {
  LossKind loss = parse_loss(args.loss);
  ConstraintLevel level = parse_level(args.level);
  check_loss_level(loss, level, !args.tree.empty());

  CompositionMatrix X = load_composition_file(args.input);
  std::optional<TaxonomyTree> tree = load_tree_arg(args.tree);
  if (args.k >= 0) checked_k(args.k, X.n_taxa);

  LossSpec spec;
  spec.kind = loss;
  HpaaOptions opts;
  opts.threads = args.threads;
  MergeTrace trace = run_hpaa(X, tree, spec, level, opts);

  auto dir = prepare_out_dir(args.out);
  emit(dir, "trace.json", trace_to_json(trace));
  emit(dir, "dendrogram.newick", dendrogram_newick(trace));
  PlotStyle style;
  style.log_scale = args.log_scale;
  emit(dir, "dendrogram.svg",
       render_dendrogram(trace, tree ? &*tree : nullptr, style));

  if (args.k >= 0) {
    CutResult cut_result = cut(trace, checked_k(args.k, X.n_taxa));
    emit(dir, "grouping.json",
         grouping_json(cut_result.grouping, trace.initial_taxa));
    emit(dir, "principal_compositions.tsv",
         composition_to_table(cut_result.scores));
  }
  return 0;
}

int cmd_scree(const CommonArgs& args, const std::string& levels) {
  LossKind loss = parse_loss(args.loss);
  std::vector<ConstraintLevel> run_levels;
  if (levels == "all") {
    if (loss == LossKind::WUF) {
      throw ConfigError(
          "--levels all cannot include the unconstrained level for wuf; pick "
          "--level weak or strong instead");
    }
    run_levels = {ConstraintLevel::Unconstrained, ConstraintLevel::WeakHierarchy,
                  ConstraintLevel::StrongHierarchy};
  } else if (levels.empty()) {
    run_levels = {parse_level(args.level)};
  } else {
    run_levels = {parse_level(levels)};
  }
  bool needs_tree = loss == LossKind::WUF;
  for (ConstraintLevel level : run_levels) {
    if (level != ConstraintLevel::Unconstrained) needs_tree = true;
    check_loss_level(loss, level, !args.tree.empty());
  }
  (void)needs_tree;

  CompositionMatrix X = load_composition_file(args.input);
  std::optional<TaxonomyTree> tree = load_tree_arg(args.tree);

  LossSpec spec;
  spec.kind = loss;
  HpaaOptions opts;
  opts.threads = args.threads;

  std::string csv = "k,percent_loss,level\n";
  std::vector<ScreeSeries> series;
  for (ConstraintLevel level : run_levels) {
    MergeTrace trace = run_hpaa(X, tree, spec, level, opts);
    ScreeSeries sr;
    sr.label = level_name(level);
    sr.points = scree(trace);
    for (const ScreePoint& pt : sr.points) {
      csv += std::to_string(pt.k) + "," + format_double(pt.percent_loss) + "," +
             sr.label + "\n";
    }
    series.push_back(std::move(sr));
  }

  auto dir = prepare_out_dir(args.out);
  emit(dir, "scree.csv", csv);
  PlotStyle style;
  style.log_scale = args.log_scale;
  emit(dir, "scree.svg", render_scree(series, style));
  return 0;
}

int cmd_ordinate(const CommonArgs& args, std::size_t restarts) {
  LossKind loss = parse_loss(args.loss);
  ConstraintLevel level = parse_level(args.level);
  check_loss_level(loss, level, !args.tree.empty());
  if (args.k < 0) throw ConfigError("ordinate needs --k");

  CompositionMatrix X = load_composition_file(args.input);
  std::optional<TaxonomyTree> tree = load_tree_arg(args.tree);
  std::size_t k = checked_k(args.k, X.n_taxa);
  if (X.n_samples < 2) {
    throw ConfigError("ordination needs at least 2 samples");
  }

  LossSpec spec;
  spec.kind = loss;
  HpaaOptions opts;
  opts.threads = args.threads;
  MergeTrace trace = run_hpaa(X, tree, spec, level, opts);
  CutResult cut_result = cut(trace, k);

  // Embed under the matching between-sample metric; alpha losses fall back
  // to Bray-Curtis for the ordination view.
  LossSpec metric;
  metric.kind = loss == LossKind::WUF ? LossKind::WUF : LossKind::BC;
  if (metric.kind == LossKind::WUF) metric.tree = tree;

  NmdsOptions nmds_opts;
  nmds_opts.restarts = restarts;
  nmds_opts.seed = args.seed;
  OrdinationCompare cmp = ordination_compare(X, cut_result.grouping, metric,
                                             nmds_opts, args.threads);

  std::string embedding_csv = "point_id,block,x,y\n";
  std::size_t n = X.n_samples;
  for (std::size_t i = 0; i < cmp.embedding.n_points; ++i) {
    embedding_csv += cmp.embedding.point_ids[i];
    embedding_csv += i < n ? ",original," : ",principal,";
    embedding_csv += format_double(cmp.embedding.at(i, 0)) + "," +
                     format_double(cmp.embedding.dim > 1 ? cmp.embedding.at(i, 1)
                                                         : 0.0) +
                     "\n";
  }

  std::string distortion_csv = "sample_id,radius,pair_distance\n";
  for (std::size_t i = 0; i < n; ++i) {
    distortion_csv += X.sample_ids[i] + "," + format_double(cmp.radii[i]) + "," +
                      format_double(cmp.pair_distance[i]) + "\n";
  }
  distortion_csv += "mean,," + format_double(cmp.mean_distance) + "\n";
  distortion_csv += "sd,," + format_double(cmp.sd_distance) + "\n";

  auto dir = prepare_out_dir(args.out);
  emit(dir, "embedding.csv", embedding_csv);
  emit(dir, "distortion.csv", distortion_csv);
  emit(dir, "ordination.svg", render_ordination(cmp, PlotStyle{}));
  return 0;
}

std::vector<std::pair<std::size_t, std::size_t>> parse_dims(
    const std::string& text) {
  std::vector<std::pair<std::size_t, std::size_t>> dims;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    std::string item = text.substr(start, end - start);
    std::size_t cross = item.find('x');
    if (item.empty() || cross == std::string::npos) {
      throw ConfigError("--dims expects a list like 100x25,100x50");
    }
    try {
      unsigned long n = std::stoul(item.substr(0, cross));
      unsigned long p = std::stoul(item.substr(cross + 1));
      if (n < 2 || p < 2) throw ConfigError("--dims entries need n,p >= 2");
      dims.emplace_back(n, p);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("--dims expects a list like 100x25,100x50");
    }
    start = end + 1;
  }
  if (dims.empty()) throw ConfigError("--dims expects a list like 100x25,100x50");
  return dims;
}

int cmd_bench(const CommonArgs& args, const std::string& study,
              const std::string& dims_text, std::size_t replicates) {
  auto dir = prepare_out_dir(args.out);
  if (study == "time") {
    if (dims_text.empty()) throw ConfigError("--study time needs --dims");
    LossKind loss = parse_loss(args.loss);
    ConstraintLevel level = parse_level(args.level);
    if (loss == LossKind::WUF && level == ConstraintLevel::Unconstrained) {
      throw ConfigError("--loss wuf needs --level weak or strong");
    }
    LossSpec spec;
    spec.kind = loss;
    RuntimeReport report =
        runtime_scaling_report(parse_dims(dims_text), spec, level, replicates,
                               args.seed, args.threads == 0 ? 1 : args.threads);
    emit(dir, "runtime_scaling.csv", report.to_csv());
    return 0;
  }
  if (study == "distance") {
    if (args.input.empty()) {
      throw ConfigError("--study distance needs --input for the reference "
                        "proportions");
    }
    if (args.k < 0) throw ConfigError("--study distance needs --k");
    CompositionMatrix reference = load_composition_file(args.input);
    std::size_t k = checked_k(args.k, reference.n_taxa);
    std::optional<TaxonomyTree> tree = load_tree_arg(args.tree);
    ConstraintLevel level =
        tree ? ConstraintLevel::WeakHierarchy : ConstraintLevel::Unconstrained;

    auto spec_of = [](LossKind kind) {
      LossSpec spec;
      spec.kind = kind;
      return spec;
    };
    std::vector<Reducer> methods;
    methods.push_back(prevalence_reducer(k));
    methods.push_back(hpaa_reducer("HPAA-BC", spec_of(LossKind::BC), level, tree,
                                   k, args.threads));
    methods.push_back(hpaa_reducer("HPAA-SDI", spec_of(LossKind::SDI), level,
                                   tree, k, args.threads));
    methods.push_back(hpaa_reducer("HPAA-SWI", spec_of(LossKind::SWI), level,
                                   tree, k, args.threads));

    DistanceStudyReport report = distance_preservation_report(
        reference, methods, k, replicates, args.seed, 10000, args.threads);
    emit(dir, "distance_study.csv", report.to_csv());
    return 0;
  }
  throw ConfigError("unknown study '" + study + "' (expected time or distance)");
}

void add_common(CLI::App* cmd, CommonArgs& args, bool input_required) {
  auto* input = cmd->add_option("--input", args.input,
                                "composition table, taxa across columns");
  if (input_required) input->required();
  cmd->add_option("--tree", args.tree,
                  "taxonomy file (lineage table, or Newick by extension)");
  cmd->add_option("--loss", args.loss, "information loss: sdi, swi, bc or wuf")
      ->capture_default_str();
  cmd->add_option("--level", args.level,
                  "merge constraint: none, weak or strong")
      ->capture_default_str();
  cmd->add_option("--k", args.k, "number of parts to cut the path at");
  cmd->add_option("--out", args.out, "output directory")->capture_default_str();
  cmd->add_option("--threads", args.threads,
                  "worker threads (0 = hardware)")
      ->envname("PAA_THREADS")
      ->capture_default_str();
  cmd->add_option("--seed", args.seed, "random seed")->capture_default_str();
  cmd->add_flag("--log-scale", args.log_scale,
                "log10(percent + 0.01) height axis on the dendrogram");
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Principal amalgamation analysis of compositional data"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "key = value file; subcommand options go in [fit]-style "
                 "sections");

  CommonArgs fit_args;
  auto* fit = app.add_subcommand(
      "fit", "run the merge path; write trace, dendrogram and optional cut");
  add_common(fit, fit_args, true);

  CommonArgs scree_args;
  std::string scree_levels;
  auto* scree_cmd = app.add_subcommand(
      "scree", "percent loss per number of parts, as CSV and SVG");
  add_common(scree_cmd, scree_args, true);
  scree_cmd->add_option("--levels", scree_levels,
                        "constraint levels to overlay: one name, or 'all'");

  CommonArgs ord_args;
  std::size_t restarts = 0;
  auto* ordinate = app.add_subcommand(
      "ordinate", "paired NMDS of originals and principals at --k");
  add_common(ordinate, ord_args, true);
  ordinate->add_option("--restarts", restarts,
                       "extra jittered NMDS starts beyond the metric one")
      ->capture_default_str();

  CommonArgs bench_args;
  std::string study, dims_text;
  std::size_t replicates = 10;
  auto* bench = app.add_subcommand(
      "bench", "simulation studies: runtime scaling or distance preservation");
  add_common(bench, bench_args, false);
  bench->add_option("--study", study, "time or distance")->required();
  bench->add_option("--dims", dims_text, "timing sizes, e.g. 100x25,100x50");
  bench->add_option("--replicates", replicates, "replicates per configuration")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (fit->parsed()) return cmd_fit(fit_args);
    if (scree_cmd->parsed()) return cmd_scree(scree_args, scree_levels);
    if (ordinate->parsed()) return cmd_ordinate(ord_args, restarts);
    if (bench->parsed()) return cmd_bench(bench_args, study, dims_text,
                                          replicates);
    std::cerr << "error: no subcommand selected\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace paa::cli
