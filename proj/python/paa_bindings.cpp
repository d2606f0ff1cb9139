#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <stdexcept>

#include "paa/common.hpp"
#include "paa/composition.hpp"
#include "paa/diversity.hpp"
#include "paa/hpaa.hpp"
#include "paa/ordination.hpp"
#include "paa/render.hpp"
#include "paa/taxonomy.hpp"

namespace py = pybind11;

namespace {

std::optional<paa::TaxonomyTree> tree_from(const py::object& obj) {
  if (obj.is_none()) return std::nullopt;
  return obj.cast<paa::TaxonomyTree>();
}

}  // namespace

PYBIND11_MODULE(_paa, m) {
  m.doc() = "Principal amalgamation analysis of compositional data";

  py::register_exception<paa::ParseError>(m, "ParseError");

  py::class_<paa::CompositionMatrix>(m, "CompositionMatrix")
      .def_readonly("n_samples", &paa::CompositionMatrix::n_samples)
      .def_readonly("n_taxa", &paa::CompositionMatrix::n_taxa)
      .def_readonly("sample_ids", &paa::CompositionMatrix::sample_ids)
      .def_readonly("taxon_ids", &paa::CompositionMatrix::taxon_ids)
      .def("row",
           [](const paa::CompositionMatrix& x, std::size_t i) {
             if (i >= x.n_samples) throw py::index_error("sample out of range");
             return std::vector<double>(x.row(i), x.row(i) + x.n_taxa);
           })
      .def("to_table",
           [](const paa::CompositionMatrix& x) {
             return paa::composition_to_table(x, '\t');
           });

  py::class_<paa::TaxonomyTree>(m, "TaxonomyTree")
      .def_property_readonly("leaf_count", &paa::TaxonomyTree::leaf_count)
      .def("leaf_taxa", &paa::TaxonomyTree::leaf_taxa)
      .def("rank_names",
           [](const paa::TaxonomyTree& t) { return t.rank_names(); })
      .def("to_newick", &paa::TaxonomyTree::to_newick);

  py::class_<paa::MergeTrace>(m, "MergeTrace")
      .def_readonly("initial_taxa", &paa::MergeTrace::initial_taxa)
      .def_readonly("notes", &paa::MergeTrace::notes)
      .def_property_readonly("loss",
                             [](const paa::MergeTrace& t) {
                               return paa::loss_name(t.loss);
                             })
      .def_property_readonly("level",
                             [](const paa::MergeTrace& t) {
                               return paa::level_name(t.level);
                             })
      .def_property_readonly(
          "steps",
          [](const paa::MergeTrace& t) {
            py::list out;
            for (const paa::MergeStep& s : t.steps) {
              py::dict d;
              d["step"] = s.step;
              d["pair"] = py::make_tuple(s.left_label, s.right_label);
              d["new"] = s.new_label;
              d["step_loss"] = s.step_loss;
              d["cumulative_loss"] = s.cumulative_loss;
              d["percent_loss"] = s.percent_loss;
              out.append(std::move(d));
            }
            return out;
          })
      .def("scree",
           [](const paa::MergeTrace& t) {
             std::vector<std::pair<std::size_t, double>> out;
             for (const paa::ScreePoint& pt : paa::scree(t)) {
               out.emplace_back(pt.k, pt.percent_loss);
             }
             return out;
           })
      .def("to_json", &paa::trace_to_json)
      .def("dendrogram_newick",
           [](const paa::MergeTrace& t) { return paa::dendrogram_newick(t); });

  m.def("load_composition", &paa::load_composition_table, py::arg("text"),
        "Parse a delimited composition table (taxa across columns).");
  m.def(
      "make_composition",
      [](const std::vector<std::vector<double>>& rows,
         const std::vector<std::string>& sample_ids,
         const std::vector<std::string>& taxon_ids) {
        std::size_t n = rows.size();
        std::size_t p = n > 0 ? rows[0].size() : 0;
        std::vector<double> body;
        body.reserve(n * p);
        for (const auto& row : rows) {
          if (row.size() != p) {
            throw std::invalid_argument("ragged row in the composition body");
          }
          body.insert(body.end(), row.begin(), row.end());
        }
        return paa::make_composition(n, p, std::move(body), sample_ids,
                                     taxon_ids);
      },
      py::arg("rows"), py::arg("sample_ids"), py::arg("taxon_ids"));
  m.def("parse_lineage_table", &paa::parse_lineage_table, py::arg("text"));
  m.def("parse_newick", &paa::parse_newick, py::arg("text"));

  m.def(
      "fit",
      [](const paa::CompositionMatrix& x, const std::string& loss,
         const std::string& level, const py::object& tree, int threads) {
        paa::LossSpec spec;
        spec.kind = paa::loss_from_name(loss);
        paa::HpaaOptions opts;
        opts.threads = threads;
        return paa::run_hpaa(x, tree_from(tree), spec,
                             paa::level_from_name(level), opts);
      },
      py::arg("x"), py::arg("loss") = "sdi", py::arg("level") = "none",
      py::arg("tree") = py::none(), py::arg("threads") = 0,
      "Run the full merge path and return its trace.");

  m.def(
      "cut",
      [](const paa::MergeTrace& trace, std::size_t k) {
        paa::CutResult result = paa::cut(trace, k);
        py::dict out;
        out["groups"] = result.grouping.groups;
        out["labels"] = result.grouping.group_labels;
        out["scores"] = result.scores;
        return out;
      },
      py::arg("trace"), py::arg("k"),
      "Grouping and principal compositions after cutting the path at k parts.");

  m.def(
      "distance_matrix",
      [](const paa::CompositionMatrix& x, const std::string& metric,
         const py::object& tree, int threads) {
        paa::LossSpec spec;
        spec.kind = paa::loss_from_name(metric);
        spec.tree = tree_from(tree);
        paa::DistanceMatrix d = paa::distance_matrix(x, spec, threads);
        std::vector<std::vector<double>> rows(d.n);
        for (std::size_t i = 0; i < d.n; ++i) {
          rows[i].assign(d.values.begin() + static_cast<std::ptrdiff_t>(i * d.n),
                         d.values.begin() +
                             static_cast<std::ptrdiff_t>((i + 1) * d.n));
        }
        return rows;
      },
      py::arg("x"), py::arg("metric") = "bc", py::arg("tree") = py::none(),
      py::arg("threads") = 0);

  m.def(
      "render_dendrogram",
      [](const paa::MergeTrace& trace, const py::object& tree, bool log_scale) {
        paa::PlotStyle style;
        style.log_scale = log_scale;
        auto t = tree_from(tree);
        return paa::render_dendrogram(trace, t ? &*t : nullptr, style);
      },
      py::arg("trace"), py::arg("tree") = py::none(),
      py::arg("log_scale") = false, "SVG text of the merge dendrogram.");
}
