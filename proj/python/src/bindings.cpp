#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "outbreak/esda.hpp"
#include "outbreak/features.hpp"
#include "outbreak/ingest.hpp"
#include "outbreak/learn.hpp"
#include "outbreak/parallel.hpp"
#include "outbreak/pipeline.hpp"
#include "outbreak/raster.hpp"
#include "outbreak/synth.hpp"
#include "outbreak/weights.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace outbreak;

namespace {

py::dict weights_dict(const SpatialWeights& w) {
  py::dict d;
  d["neighbors"] = w.neighbors;
  d["weights"] = w.weights;
  d["islands"] = w.islands;
  return d;
}

Dataset make_dataset(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                     std::vector<std::string> names) {
  if (x.size() != y.size()) throw DimensionMismatch("x and y differ in length");
  Dataset d;
  const std::size_t p = x.empty() ? names.size() : x.front().size();
  if (names.empty()) {
    for (std::size_t j = 0; j < p; ++j) names.push_back("f" + std::to_string(j));
  }
  d.feature_names = std::move(names);
  for (std::size_t i = 0; i < x.size(); ++i) d.append(x[i], y[i]);
  return d;
}

py::dict report_dict(const MetricsReport& m) {
  py::dict d;
  for (auto [k, v] : {std::pair{"accuracy", m.accuracy}, {"balanced_accuracy", m.balanced_accuracy},
                      {"mcc", m.mcc}, {"roc_auc", m.roc_auc}, {"f1", m.f1},
                      {"precision", m.precision}, {"recall", m.recall}}) {
    d[k] = v;
  }
  d["tp"] = m.tp;
  d["fp"] = m.fp;
  d["fn"] = m.fn;
  d["tn"] = m.tn;
  d["undefined"] = m.undefined;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Surveillance, spatial statistics and risk-model engine";

  auto base = py::register_exception<Error>(m, "EngineError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base.ptr());
  py::register_exception<ConstantField>(m, "ConstantField", base.ptr());
  py::register_exception<InsufficientRegions>(m, "InsufficientRegions", base.ptr());
  py::register_exception<SchemaMismatch>(m, "SchemaMismatch", base.ptr());

  m.def("set_threads", &set_thread_count, py::arg("n"));

  m.def("parse_surveillance_csv", [](const fs::path& path) {
    const auto parsed = parse_surveillance_csv(path);
    py::list rows;
    for (const auto& r : parsed.records) {
      py::dict d;
      d["year"] = r.year;
      d["week"] = r.week;
      d["country"] = r.country;
      d["province"] = r.province;
      d["district"] = r.district;
      d["disease"] = r.disease;
      d["cases"] = r.cases;
      d["deaths"] = r.deaths;
      rows.append(d);
    }
    return rows;
  }, py::arg("path"));

  m.def("parse_districts", [](const fs::path& path) {
    py::list out;
    for (const auto& r : parse_district_geojson(path)) {
      py::dict d;
      d["adm_id"] = r.adm_id;
      d["name"] = r.name;
      d["province"] = r.province;
      d["country"] = r.country;
      out.append(d);
    }
    return out;
  }, py::arg("path"));

  m.def("contiguity_weights", [](const fs::path& districts, const std::string& kind, double tolerance) {
    return weights_dict(build_contiguity_weights(parse_district_geojson(districts),
                                                 parse_contiguity(kind), tolerance));
  }, py::arg("districts"), py::arg("kind") = "queen", py::arg("tolerance") = 1e-9);

  m.def("morans_i", [](const std::vector<double>& x, std::vector<std::vector<std::size_t>> neighbors,
                       int n_perm, std::uint64_t seed) {
    const auto r = morans_i(x, weights_from_neighbors(std::move(neighbors)), n_perm, seed);
    py::dict d;
    d["I"] = r.I;
    d["expected_I"] = r.expected_I;
    d["p_value"] = r.p_value;
    d["n_permutations"] = r.n_permutations;
    d["n_used"] = r.n_used;
    d["permutation_mean"] = r.permutation_mean;
    d["permutation_sd"] = r.permutation_sd;
    return d;
  }, py::arg("x"), py::arg("neighbors"), py::arg("n_perm") = 999, py::arg("seed") = 12345);

  m.def("moran_statistic", [](const std::vector<double>& x, std::vector<std::vector<std::size_t>> neighbors) {
    return moran_statistic(x, weights_from_neighbors(std::move(neighbors)));
  }, py::arg("x"), py::arg("neighbors"));

  m.def("lisa", [](const std::vector<double>& x, std::vector<std::vector<std::size_t>> neighbors,
                   int n_perm, std::uint64_t seed, double alpha) {
    const auto r = lisa(x, weights_from_neighbors(std::move(neighbors)), n_perm, seed, alpha);
    std::vector<std::string> quadrants;
    for (auto q : r.quadrant) quadrants.emplace_back(to_string(q));
    py::dict d;
    d["local_I"] = r.local_I;
    d["p_value"] = r.p_value;
    d["z"] = r.z;
    d["lag"] = r.lag;
    d["quadrant"] = quadrants;
    return d;
  }, py::arg("x"), py::arg("neighbors"), py::arg("n_perm") = 999, py::arg("seed") = 12345,
     py::arg("alpha") = 0.05);

  m.def("zonal_mean", [](const fs::path& grid, const fs::path& districts) {
    py::list out;
    for (const auto& z : zonal_mean(parse_ascii_grid(grid), parse_district_geojson(districts))) {
      py::dict d;
      d["adm_id"] = z.adm_id;
      d["mean"] = z.mean ? py::cast(*z.mean) : py::none();
      d["sum"] = z.sum;
      d["cell_count"] = z.cell_count;
      d["nodata_count"] = z.nodata_count;
      out.append(d);
    }
    return out;
  }, py::arg("grid"), py::arg("districts"));

  m.def("tabulate_area", [](const fs::path& grid, const fs::path& districts, const std::vector<int>& classes) {
    py::list out;
    for (const auto& t : tabulate_area(parse_ascii_grid(grid), parse_district_geojson(districts), classes)) {
      py::dict d;
      d["adm_id"] = t.adm_id;
      d["counts"] = t.counts;
      d["fractions"] = t.fractions;
      d["other"] = t.other;
      d["covered"] = t.covered;
      out.append(d);
    }
    return out;
  }, py::arg("grid"), py::arg("districts"), py::arg("classes"));

  m.def("population_near_water", [](const fs::path& population, const fs::path& water, double buffer_km,
                                    const fs::path& districts) {
    std::map<AdmId, double> out;
    const auto r = population_near_water(parse_ascii_grid(population), parse_shapes_geojson(water),
                                         buffer_km, parse_district_geojson(districts));
    for (const auto& v : r.per_region) out[v.adm_id] = v.value;
    return out;
  }, py::arg("population"), py::arg("water"), py::arg("buffer_km"), py::arg("districts"));

  m.def("minmax_scale", [](const std::vector<double>& x) { return minmax_scale(x).values; }, py::arg("x"));
  m.def("robust_scale", [](const std::vector<double>& x) { return robust_scale(x).values; }, py::arg("x"));

  py::class_<ForestModel>(m, "Forest")
      .def_static("train",
                  [](const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                     std::vector<std::string> feature_names, int n_trees, int max_depth, int min_leaf,
                     int features_per_split, const std::string& criterion, std::uint64_t seed) {
                    ForestParams p;
                    p.n_trees = n_trees;
                    p.max_depth = max_depth;
                    p.min_leaf = min_leaf;
                    p.features_per_split = features_per_split;
                    p.criterion = parse_criterion(criterion);
                    p.seed = seed;
                    return train_forest(make_dataset(x, y, std::move(feature_names)), p);
                  },
                  py::arg("x"), py::arg("y"), py::arg("feature_names") = std::vector<std::string>{},
                  py::arg("n_trees") = 100, py::arg("max_depth") = 0, py::arg("min_leaf") = 1,
                  py::arg("features_per_split") = 0, py::arg("criterion") = "gini", py::arg("seed") = 0)
      .def_static("from_json",
                  [](const std::string& text) { return forest_from_json(nlohmann::json::parse(text)); })
      .def("to_json", [](const ForestModel& f) { return forest_to_json(f).dump(); })
      .def("predict_proba",
           [](const ForestModel& f, const std::vector<std::vector<double>>& x) {
             const std::vector<int> y(x.size(), 0);
             return predict(f, make_dataset(x, y, f.feature_names)).scores;
           })
      .def("predict",
           [](const ForestModel& f, const std::vector<std::vector<double>>& x) {
             const std::vector<int> y(x.size(), 0);
             return predict(f, make_dataset(x, y, f.feature_names)).labels;
           })
      .def("permutation_importance",
           [](const ForestModel& f, const std::vector<std::vector<double>>& x, const std::vector<int>& y,
              int n_repeats, std::uint64_t seed) {
             py::list out;
             for (const auto& r : permutation_importance(f, make_dataset(x, y, f.feature_names), n_repeats, seed)) {
               out.append(py::make_tuple(r.feature, r.importance, r.stddev));
             }
             return out;
           },
           py::arg("x"), py::arg("y"), py::arg("n_repeats") = 10, py::arg("seed") = 0)
      .def_property_readonly("feature_names", [](const ForestModel& f) { return f.feature_names; })
      .def_property_readonly("n_trees", [](const ForestModel& f) { return f.trees.size(); });

  m.def("evaluate", [](const std::vector<int>& truth, const std::vector<int>& predicted,
                       const std::vector<double>& scores) {
    return report_dict(evaluate(truth, predicted, scores));
  }, py::arg("truth"), py::arg("predicted"), py::arg("scores"));

  m.def("roc_auc", [](const std::vector<int>& truth, const std::vector<double>& scores) {
    return roc_auc(truth, scores);
  }, py::arg("truth"), py::arg("scores"));

  m.def("run_pipeline", [](const fs::path& config, const std::string& stage, bool force,
                           std::optional<std::uint64_t> seed, unsigned threads) {
    pipeline::RunOptions opts;
    opts.force = force;
    opts.seed = seed;
    opts.threads = threads;
    std::vector<pipeline::StageOutcome> outcomes;
    {
      py::gil_scoped_release release;
      outcomes = pipeline::run(pipeline::load_config(config), stage, opts);
    }
    py::list out;
    for (const auto& o : outcomes) {
      py::dict d;
      d["stage"] = pipeline::to_string(o.stage);
      d["skipped"] = o.skipped;
      d["outputs"] = o.outputs;
      d["warnings"] = o.warnings;
      out.append(d);
    }
    return out;
  }, py::arg("config"), py::arg("stage") = "all", py::arg("force") = false,
     py::arg("seed") = std::nullopt, py::arg("threads") = 0u);

  m.def("write_mini_region", [](const fs::path& dir, int cols, int rows, int n_weeks, std::uint64_t seed) {
    synth::MiniRegionSpec spec;
    spec.cols = cols;
    spec.rows = rows;
    spec.n_weeks = n_weeks;
    spec.seed = seed;
    return synth::write_mini_region(dir, spec);
  }, py::arg("dir"), py::arg("cols") = 12, py::arg("rows") = 10, py::arg("n_weeks") = 52,
     py::arg("seed") = 2024);
}
