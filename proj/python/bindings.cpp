#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fairdex/corpus_io.hpp"
#include "fairdex/distribution.hpp"
#include "fairdex/eval_engine.hpp"
#include "fairdex/kendall.hpp"
#include "fairdex/metrics.hpp"
#include "fairdex/report_io.hpp"
#include "fairdex/synth.hpp"

namespace py = pybind11;
using namespace fairdex;

namespace {

using Path = std::filesystem::path;
using OptPath = std::optional<Path>;

CategorySource load_source(const OptPath& categories, const OptPath& prefix_rules,
                           const OptPath& grade_map, CategoryOptions options, Diagnostics& diag) {
  const int given = int(categories.has_value()) + int(prefix_rules.has_value()) +
                    int(grade_map.has_value());
  if (given != 1) throw Error("exactly one of categories, prefix_rules or grade_map is required");
  if (categories) return read_category_source(CategoryMode::ExplicitFile, *categories, options, &diag);
  if (prefix_rules) return read_category_source(CategoryMode::DocIdPrefixRules, *prefix_rules, options);
  return read_category_source(CategoryMode::QrelsGradeMap, *grade_map, options);
}

CategoricalDistribution to_distribution(const std::map<std::string, double>& table,
                                        const std::vector<std::string>& order) {
  if (table.size() != order.size()) throw Error("distributions must share one category set");
  std::vector<double> mass;
  for (const auto& c : order) {
    auto it = table.find(c);
    if (it == table.end()) throw Error("category '" + c + "' missing from distribution");
    mass.push_back(it->second);
  }
  return CategoricalDistribution(order, std::move(mass));
}

std::vector<std::string> keys(const std::map<std::string, double>& table) {
  std::vector<std::string> out;
  for (const auto& [k, v] : table) out.push_back(k);
  return out;
}

std::string evaluate(const std::vector<Path>& runs, const Path& qrels_path,
                     const OptPath& categories, const OptPath& prefix_rules,
                     const OptPath& grade_map, const std::vector<std::string>& targets,
                     const std::string& cutoff, int threshold, const std::string& scope,
                     const std::string& aggregation, const std::vector<std::string>& interpolations,
                     bool lenient, bool include_unknown, bool raw_only, std::size_t top,
                     std::size_t threads) {
  ParseOptions parse_options;
  parse_options.strict = !lenient;
  Diagnostics diag;
  const Qrels qrels = read_qrels_file(qrels_path, parse_options, &diag);
  const CategorySource source = load_source(categories, prefix_rules, grade_map,
                                            CategoryOptions{!lenient, include_unknown}, diag);
  EvalConfig config;
  config.cutoff = Cutoff::parse(cutoff);
  config.relevance_threshold = threshold;
  config.results_scope = parse_results_scope(scope);
  config.aggregation = parse_aggregation(aggregation);
  config.raw_only = raw_only;
  config.leaderboard_size = top;
  config.threads = threads;
  config.targets.clear();
  for (const auto& t : targets) config.targets.push_back(target_from_argument(t, source.categories()));
  if (!interpolations.empty()) {
    config.interpolations.clear();
    for (const auto& label : interpolations) config.interpolations.push_back(Interpolation::parse(label));
  }
  std::vector<Run> loaded;
  for (const auto& p : runs) loaded.push_back(read_run_file(p, parse_options, &diag));
  BatchReport report = evaluate_batch(loaded, qrels, source, config);
  report.warnings.insert(report.warnings.begin(), diag.warnings.begin(), diag.warnings.end());
  return leaderboard_json(report).dump();
}

std::string bias(const Path& qrels_path, const OptPath& categories, const OptPath& prefix_rules,
                 const OptPath& grade_map, int threshold, double scarcity, bool lenient,
                 bool include_unknown) {
  ParseOptions parse_options;
  parse_options.strict = !lenient;
  Diagnostics diag;
  const Qrels qrels = read_qrels_file(qrels_path, parse_options, &diag);
  const CategorySource source = load_source(categories, prefix_rules, grade_map,
                                            CategoryOptions{!lenient, include_unknown}, diag);
  BiasOptions options;
  options.relevance_threshold = threshold;
  options.scarcity_threshold = scarcity;
  return bias_summary_json(bias_report(qrels, source, source.categories(), options)).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of fairdex";
  m.attr("SCHEMA_VERSION") = kSchemaVersion;

  py::register_exception<Error>(m, "FairdexError", PyExc_ValueError);

  m.def(
      "laplace_smooth",
      [](const std::map<std::string, std::uint64_t>& counts, std::vector<std::string> categories) {
        const auto d = laplace_smooth(counts, categories);
        std::map<std::string, double> out;
        for (std::size_t i = 0; i < d.size(); ++i) out[d.categories()[i]] = d[i];
        return out;
      },
      py::arg("counts"), py::arg("categories"));

  m.def(
      "kl_divergence",
      [](const std::map<std::string, double>& p, const std::map<std::string, double>& q) {
        const auto order = keys(p);
        return kl_divergence(to_distribution(p, order), to_distribution(q, order));
      },
      py::arg("p"), py::arg("q"));

  m.def(
      "minmax_normalize",
      [](const std::vector<double>& values) {
        auto n = minmax_normalize(values);
        return py::make_tuple(n.values, n.degenerate);
      },
      py::arg("values"));

  m.def(
      "fairness_scores",
      [](const std::vector<double>& kl) {
        auto n = fairness_scores(kl);
        return py::make_tuple(n.values, n.degenerate);
      },
      py::arg("kl_values"));

  m.def(
      "r_precision",
      [](const std::vector<std::string>& ranked, const std::set<std::string>& relevant) {
        return r_precision(ranked, DocSet(relevant.begin(), relevant.end()));
      },
      py::arg("ranked_docs"), py::arg("relevant"));

  m.def(
      "interpolate",
      [](double r, double f, const std::string& how) { return interpolate(r, f, Interpolation::parse(how)); },
      py::arg("relevance"), py::arg("fairness"), py::arg("how") = "mean");

  m.def(
      "kendall_tau_b",
      [](const std::vector<double>& x, const std::vector<double>& y) { return kendall_tau_b(x, y); },
      py::arg("x"), py::arg("y"));

  m.def("evaluate_json", &evaluate, py::call_guard<py::gil_scoped_release>(), py::arg("runs"),
        py::arg("qrels"), py::arg("categories") = py::none(), py::arg("prefix_rules") = py::none(),
        py::arg("grade_map") = py::none(), py::arg("targets") = std::vector<std::string>{"uniform"},
        py::arg("cutoff") = "100", py::arg("threshold") = 1, py::arg("scope") = "all",
        py::arg("aggregation") = "mean", py::arg("interpolations") = std::vector<std::string>{},
        py::arg("lenient") = false, py::arg("include_unknown") = false, py::arg("raw_only") = false,
        py::arg("top") = 3, py::arg("threads") = 0);

  m.def("bias_json", &bias, py::call_guard<py::gil_scoped_release>(), py::arg("qrels"),
        py::arg("categories") = py::none(), py::arg("prefix_rules") = py::none(),
        py::arg("grade_map") = py::none(), py::arg("threshold") = 1, py::arg("scarcity") = 0.05,
        py::arg("lenient") = false, py::arg("include_unknown") = false);

  m.def(
      "synthesize",
      [](const std::string& spec_json, std::uint64_t seed, const Path& out_dir) {
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(spec_json);
        } catch (const nlohmann::json::exception& e) {
          throw Error(std::string("invalid spec JSON: ") + e.what());
        }
        materialize(parse_synth_spec(j), seed, out_dir);
      },
      py::arg("spec_json"), py::arg("seed"), py::arg("out_dir"));
}
