#include "outbreak/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "outbreak/csv.hpp"
#include "outbreak/parallel.hpp"
#include "outbreak/raster.hpp"

namespace outbreak::pipeline {

using json = nlohmann::json;

namespace {

constexpr const char* kPanelFile = "panel.csv";
constexpr const char* kIngestReport = "ingest_report.json";
constexpr const char* kWeightsFile = "weights.csv";
constexpr const char* kMoranFile = "moran.json";
constexpr const char* kLisaGeojson = "lisa.geojson";
constexpr const char* kLisaCsv = "lisa.csv";
constexpr const char* kFeaturesCsv = "features.csv";
constexpr const char* kFeaturesJson = "features.json";
constexpr const char* kWaterBuffersCsv = "water_buffers.csv";
constexpr const char* kModelFile = "model.json";
constexpr const char* kMetricsJson = "metrics.json";
constexpr const char* kMetricsCsv = "metrics.csv";
constexpr const char* kImportanceCsv = "importance.csv";
constexpr const char* kImportanceJson = "importance.json";
constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kLockFile = ".outbreak.lock";

// Sub-seeds of the learning stages, so each consumer draws its own stream.
constexpr std::uint64_t kResampleSalt = 1;
constexpr std::uint64_t kForestSalt = 2;
constexpr std::uint64_t kImportanceSalt = 3;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

const char* scaler_name(ScalerKind kind) { return kind == ScalerKind::minmax ? "minmax" : "robust"; }

ScalerKind parse_scaler(const std::string& text) {
  const std::string t = csv::lower(text);
  if (t == "robust") return ScalerKind::robust;
  if (t == "minmax") return ScalerKind::minmax;
  throw ValidationError("unknown scaler '" + text + "'");
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ValidationError("config: '" + where + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ValidationError("config: unknown key '" + key + "' in " + where);
    }
  }
}

json section(const json& doc, const char* key) {
  return doc.contains(key) ? doc.at(key) : json::object();
}

RasterSource parse_source(const json& j, const std::string& name, const fs::path& base,
                          Cadence default_cadence) {
  RasterSource src;
  src.name = name;
  if (j.is_string()) {
    src.cadence = Cadence::static_value;
    src.grids.emplace_back(Date{}, resolve(base, j.get<std::string>()));
    return src;
  }
  check_keys(j, "inputs.rasters." + name, {"cadence", "aggregate", "grids", "path"});
  src.cadence = j.contains("cadence") ? parse_cadence(j.at("cadence").get<std::string>())
                                      : default_cadence;
  src.aggregate = parse_aggregate(j.value("aggregate", std::string("mean")));
  if (j.contains("path")) {
    src.grids.emplace_back(Date{}, resolve(base, j.at("path").get<std::string>()));
  }
  if (j.contains("grids")) {
    for (const auto& g : j.at("grids")) {
      check_keys(g, "inputs.rasters." + name + ".grids[]", {"date", "path"});
      src.grids.emplace_back(parse_date(g.at("date").get<std::string>()),
                             resolve(base, g.at("path").get<std::string>()));
    }
  }
  if (src.grids.empty()) throw ValidationError("config: raster '" + name + "' lists no grids");
  if (src.cadence == Cadence::static_value && src.grids.size() != 1) {
    throw ValidationError("config: static raster '" + name + "' must have exactly one grid");
  }
  return src;
}

void require_file(const fs::path& path, const std::string& role) {
  if (!fs::is_regular_file(path)) {
    throw ValidationError("config: " + role + " file not found: " + path.string());
  }
}

// ---------------------------------------------------------------------------

class Logger {
 public:
  explicit Logger(std::ostream* out) : out_(out) {}
  void event(json j) const {
    if (out_ == nullptr) return;
    *out_ << j.dump() << '\n';
    out_->flush();
  }

 private:
  std::ostream* out_;
};

class OutputLock {
 public:
  explicit OutputLock(fs::path path) : path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      throw Error("output directory is locked by another run (remove " + path_.string() +
                  " if no run is active)");
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd_, pid.data(), pid.size());
  }
  ~OutputLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

// What a stage reads and how it is parameterized; the fingerprint covers both.
struct StagePlan {
  json params;
  std::vector<std::pair<std::string, fs::path>> inputs;  // label, path
  std::vector<std::pair<Stage, std::string>> upstream;   // producer, artifact name
};

using Artifacts = std::vector<std::pair<std::string, std::string>>;  // name, content

class Runner {
 public:
  Runner(PipelineConfig cfg, const RunOptions& opt)
      : cfg_(std::move(cfg)), opt_(opt), log_(opt.log) {}

  std::vector<StageOutcome> run(std::string_view stage_name) {
    std::vector<Stage> stages;
    if (stage_name == "all") {
      stages.assign(kStageOrder.begin(), kStageOrder.end());
    } else {
      stages.push_back(parse_stage(stage_name));
    }
    fs::create_directories(cfg_.output_dir);
    OutputLock lock(cfg_.output_dir / kLockFile);
    load_manifest();
    std::vector<StageOutcome> outcomes;
    for (Stage s : stages) outcomes.push_back(run_stage(s));
    return outcomes;
  }

 private:
  fs::path out(const char* name) const { return cfg_.output_dir / name; }

  std::string label(const fs::path& p) const {
    const fs::path rel = p.lexically_relative(cfg_.base_dir);
    return rel.empty() || *rel.begin() == ".." ? p.string() : rel.generic_string();
  }

  void load_manifest() {
    manifest_ = {{"format", "outbreak-manifest"}, {"version", 1}, {"stages", json::object()}};
    const fs::path path = out(kManifestFile);
    if (!fs::exists(path)) return;
    try {
      json doc = json::parse(read_file(path));
      if (doc.value("format", "") == "outbreak-manifest" && doc.contains("stages")) {
        manifest_["stages"] = doc.at("stages");
      }
    } catch (const json::exception&) {
      log_.event({{"event", "manifest_ignored"}, {"reason", "unparsable manifest.json"}});
    }
  }

  void save_manifest() {
    write_file_atomic(out(kManifestFile), manifest_.dump(2) + "\n");
  }

  const std::vector<AdminRegion>& regions() {
    if (!regions_) regions_ = parse_district_geojson(cfg_.districts);
    return *regions_;
  }

  std::vector<AdmId> region_ids() {
    std::vector<AdmId> ids;
    for (const auto& r : regions()) ids.push_back(r.adm_id);
    return ids;
  }

  SurveillancePanel load_panel() {
    std::ifstream in(out(kPanelFile));
    if (!in) throw Error("cannot open " + out(kPanelFile).string());
    SurveillancePanel panel = read_panel_csv(in, region_ids(), cfg_.start, cfg_.n_weeks);
    panel.diseases = {cfg_.disease};
    return panel;
  }

  StagePlan plan(Stage s) const {
    StagePlan p;
    const auto add = [&](const fs::path& path) { p.inputs.emplace_back(label(path), path); };
    const auto add_source = [&](const RasterSource& src) {
      for (const auto& [d, path] : src.grids) add(path);
    };
    switch (s) {
      case Stage::ingest:
        p.params = {{"disease", cfg_.disease},
                    {"start", format_date(cfg_.start)},
                    {"n_weeks", cfg_.n_weeks}};
        add(cfg_.surveillance);
        add(cfg_.districts);
        break;
      case Stage::weights:
        p.params = {{"contiguity", to_string(cfg_.contiguity)}, {"tolerance", cfg_.tolerance}};
        add(cfg_.districts);
        break;
      case Stage::esda:
        p.params = {{"n_perm", cfg_.n_perm}, {"alpha", cfg_.alpha}, {"seed", cfg_.seed}};
        add(cfg_.districts);
        p.upstream = {{Stage::ingest, kPanelFile}, {Stage::weights, kWeightsFile}};
        break;
      case Stage::features: {
        json sources = json::array();
        for (const RasterSource* src : sources_()) {
          json grids = json::array();
          for (const auto& [d, path] : src->grids) {
            grids.push_back({{"date", format_date(d)}, {"path", label(path)}});
          }
          sources.push_back({{"name", src->name},
                             {"cadence", to_string(src->cadence)},
                             {"aggregate", to_string(src->aggregate)},
                             {"grids", grids}});
        }
        p.params = {{"buffer_km", cfg_.buffer_km},
                    {"landcover_codes", cfg_.landcover_codes},
                    {"rasters", sources}};
        add(cfg_.districts);
        for (const RasterSource* src : sources_()) add_source(*src);
        if (!cfg_.water.empty()) add(cfg_.water);
        add(cfg_.wealth);
        p.upstream = {{Stage::ingest, kPanelFile}};
        break;
      }
      case Stage::train:
        p.params = {{"seed", cfg_.seed},
                    {"test_fraction", cfg_.test_fraction},
                    {"stratified", cfg_.stratified},
                    {"resample", to_string(cfg_.resample)},
                    {"smote_k", cfg_.smote_k},
                    {"scaler", scaler_name(cfg_.scaler)},
                    {"criterion", to_string(cfg_.forest.criterion)},
                    {"n_trees", cfg_.forest.n_trees},
                    {"max_depth", cfg_.forest.max_depth},
                    {"min_leaf", cfg_.forest.min_leaf},
                    {"features_per_split", cfg_.forest.features_per_split}};
        p.upstream = {{Stage::features, kFeaturesCsv}};
        break;
      case Stage::importance:
        p.params = {{"seed", cfg_.seed}, {"n_repeats", cfg_.importance_repeats}};
        p.upstream = {{Stage::features, kFeaturesCsv}, {Stage::train, kModelFile}};
        break;
    }
    return p;
  }

  std::vector<const RasterSource*> sources_() const {
    return {&cfg_.precipitation, &cfg_.temperature, &cfg_.landcover, &cfg_.population,
            &cfg_.elevation};
  }

  StageOutcome run_stage(Stage s) {
    const std::string name = to_string(s);
    const auto t0 = std::chrono::steady_clock::now();
    log_.event({{"event", "stage_start"}, {"stage", name}});
    try {
      StagePlan p = plan(s);
      for (const auto& [producer, artifact] : p.upstream) {
        if (!fs::exists(out(artifact.c_str()))) {
          throw StageError(name, "dependency",
                           "stage '" + name + "' requires " + artifact + " from stage '" +
                               to_string(producer) + "'; run --stage " + to_string(producer) +
                               " first");
        }
        p.inputs.emplace_back(artifact, out(artifact.c_str()));
      }
      json input_hashes = json::object();
      for (const auto& [lbl, path] : p.inputs) {
        if (!fs::is_regular_file(path)) {
          throw StageError(name, "input", "input file not found: " + path.string());
        }
        input_hashes[lbl] = file_sha256(path);
      }
      const json fp_doc = {{"stage", name}, {"params", p.params}, {"inputs", input_hashes}};
      const std::string fingerprint = sha256_hex(fp_doc.dump());

      StageOutcome outcome;
      outcome.stage = s;
      json& stages = manifest_["stages"];
      if (!opt_.force && stages.contains(name) &&
          stages[name].value("fingerprint", "") == fingerprint && outputs_intact(stages[name])) {
        outcome.skipped = true;
        for (const auto& [file, _] : stages[name].at("outputs").items()) outcome.outputs.push_back(file);
        log_.event({{"event", "stage_skipped"}, {"stage", name}, {"fingerprint", fingerprint}});
        return outcome;
      }

      Artifacts artifacts = execute(s, outcome.warnings);
      json outputs = json::object();
      for (const auto& [file, content] : artifacts) {
        write_file_atomic(cfg_.output_dir / file, content);
        outputs[file] = sha256_hex(content);
        outcome.outputs.push_back(file);
      }
      for (const auto& w : outcome.warnings) {
        log_.event({{"event", "warning"}, {"stage", name}, {"message", w}});
      }
      stages[name] = {{"fingerprint", fingerprint},
                      {"params", p.params},
                      {"inputs", input_hashes},
                      {"outputs", outputs},
                      {"warnings", outcome.warnings}};
      save_manifest();
      const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
      log_.event({{"event", "stage_done"}, {"stage", name}, {"elapsed_ms", ms},
                  {"outputs", outcome.outputs}});
      return outcome;
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      std::string kind = "error";
      if (dynamic_cast<const ParseError*>(&e)) kind = "parse";
      else if (dynamic_cast<const ValidationError*>(&e)) kind = "validation";
      else if (dynamic_cast<const ConstantField*>(&e)) kind = "constant_field";
      else if (dynamic_cast<const InsufficientRegions*>(&e)) kind = "insufficient_regions";
      else if (dynamic_cast<const SchemaMismatch*>(&e)) kind = "schema_mismatch";
      else if (dynamic_cast<const DimensionMismatch*>(&e)) kind = "dimension_mismatch";
      throw StageError(name, kind, e.what());
    }
  }

  bool outputs_intact(const json& entry) const {
    if (!entry.contains("outputs")) return false;
    for (const auto& [file, hash] : entry.at("outputs").items()) {
      const fs::path path = cfg_.output_dir / file;
      if (!fs::is_regular_file(path) || file_sha256(path) != hash.get<std::string>()) return false;
    }
    return true;
  }

  Artifacts execute(Stage s, Warnings& warnings) {
    switch (s) {
      case Stage::ingest: return run_ingest(warnings);
      case Stage::weights: return run_weights(warnings);
      case Stage::esda: return run_esda(warnings);
      case Stage::features: return run_features(warnings);
      case Stage::train: return run_train(warnings);
      case Stage::importance: return run_importance(warnings);
    }
    return {};
  }

  // -------------------------------------------------------------------------

  Artifacts run_ingest(Warnings& warnings) {
    SurveillanceParse parsed = parse_surveillance_csv(cfg_.surveillance);
    PanelBuild built = build_panel(parsed.records, regions(), cfg_.start, cfg_.n_weeks, cfg_.disease);
    warnings.insert(warnings.end(), parsed.warnings.begin(), parsed.warnings.end());
    warnings.insert(warnings.end(), built.warnings.begin(), built.warnings.end());
    if (!parsed.errors.empty()) {
      warnings.push_back(std::to_string(parsed.errors.size()) + " malformed surveillance rows rejected");
    }

    std::ostringstream panel_csv;
    write_panel_csv(built.panel, panel_csv);

    std::int64_t total = 0;
    std::size_t positive = 0;
    for (auto c : built.panel.counts) {
      total += c;
      positive += c >= 1 ? 1 : 0;
    }
    json row_errors = json::array();
    for (const auto& e : parsed.errors) row_errors.push_back({{"line", e.line}, {"message", e.message}});
    const json report = {{"disease", cfg_.disease},
                         {"start", format_date(cfg_.start)},
                         {"n_weeks", cfg_.n_weeks},
                         {"districts", built.panel.districts.size()},
                         {"cells", built.panel.counts.size()},
                         {"records_parsed", parsed.records.size()},
                         {"row_errors", row_errors},
                         {"unmatched_districts", built.unmatched},
                         {"dropped_unmatched", built.dropped_unmatched},
                         {"dropped_out_of_range", built.dropped_out_of_range},
                         {"total_cases", total},
                         {"positive_cells", positive},
                         {"warnings", warnings}};
    return {{kPanelFile, panel_csv.str()}, {kIngestReport, report.dump(2) + "\n"}};
  }

  Artifacts run_weights(Warnings& warnings) {
    const SpatialWeights w =
        build_contiguity_weights(regions(), cfg_.contiguity, cfg_.tolerance, &warnings);
    std::ostringstream csv_out;
    write_weights_csv(w, csv_out);
    return {{kWeightsFile, csv_out.str()}};
  }

  Artifacts run_esda(Warnings& warnings) {
    const SurveillancePanel panel = load_panel();
    const std::vector<double> x = district_totals(panel);
    const SpatialWeights w = read_weights_csv(out(kWeightsFile), regions().size());
    const GlobalMoranResult g = morans_i(x, w, cfg_.n_perm, cfg_.seed);
    const LisaResult local = lisa(x, w, cfg_.n_perm, cfg_.seed, cfg_.alpha);

    std::map<std::string, int> counts = {{"HH", 0}, {"LL", 0}, {"HL", 0},
                                         {"LH", 0}, {"NS", 0}, {"ISLAND", 0}};
    for (Quadrant q : local.quadrant) ++counts[to_string(q)];
    if (!w.islands.empty()) {
      warnings.push_back(std::to_string(w.islands.size()) +
                         " island regions excluded from autocorrelation");
    }
    const json moran = {{"disease", cfg_.disease},
                        {"statistic", "total cases per district"},
                        {"contiguity", to_string(cfg_.contiguity)},
                        {"I", g.I},
                        {"expected_I", g.expected_I},
                        {"p_value", g.p_value},
                        {"n_permutations", g.n_permutations},
                        {"n_regions", w.n},
                        {"n_used", g.n_used},
                        {"islands", w.islands.size()},
                        {"permutation_mean", g.permutation_mean},
                        {"permutation_sd", g.permutation_sd},
                        {"seed", cfg_.seed},
                        {"lisa_alpha", cfg_.alpha},
                        {"lisa_quadrants", counts}};

    std::ostringstream lisa_csv;
    lisa_csv << "adm_id,local_I,p_value,quadrant,z,lag\n";
    const auto& rs = regions();
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const bool island = local.quadrant[i] == Quadrant::ISLAND;
      lisa_csv << rs[i].adm_id << ',' << (island ? "" : csv::format_double(local.local_I[i])) << ','
               << (island ? "" : csv::format_double(local.p_value[i])) << ','
               << to_string(local.quadrant[i]) << ',' << csv::format_double(local.z[i]) << ','
               << csv::format_double(local.lag[i]) << '\n';
    }
    std::ostringstream geo;
    export_lisa_geojson(rs, local, geo);
    return {{kMoranFile, moran.dump(2) + "\n"},
            {kLisaGeojson, geo.str()},
            {kLisaCsv, lisa_csv.str()}};
  }

  // Cell assignments depend only on grid geometry, so rasters sharing a grid
  // share one assignment.
  const CellAssignment& cells_for(const RasterGrid& g) {
    const auto key = std::make_tuple(g.ncols, g.nrows, g.xll, g.yll, g.cellsize);
    auto it = cells_.find(key);
    if (it == cells_.end()) it = cells_.emplace(key, assign_cells(g, regions())).first;
    return it->second;
  }

  DistrictSeries zonal_series(const RasterSource& src, bool use_sum, Warnings& warnings) {
    DistrictSeries series;
    series.name = src.name;
    series.cadence = src.cadence;
    series.aggregate = src.aggregate;
    for (const auto& [date, path] : src.grids) {
      const RasterGrid grid = parse_ascii_grid(path);
      Warnings local;
      const auto zv = zonal_mean(grid, regions(), cells_for(grid), &local);
      for (auto& msg : local) warnings.push_back(src.name + " " + format_date(date) + ": " + msg);
      for (const auto& z : zv) {
        if (!z.mean) continue;
        series.by_district[z.adm_id].push_back({date, use_sum ? z.sum : *z.mean});
      }
    }
    return series;
  }

  Artifacts run_features(Warnings& warnings) {
    const SurveillancePanel panel = load_panel();
    const auto& rs = regions();
    FeatureInputs in;
    in.precipitation = zonal_series(cfg_.precipitation, false, warnings);
    in.temperature = zonal_series(cfg_.temperature, false, warnings);
    in.elevation = zonal_series(cfg_.elevation, false, warnings);
    in.population_density = zonal_series(cfg_.population, true, warnings);
    in.population_density.name = "population_density";

    std::vector<Shape> water;
    if (cfg_.water.empty()) {
      warnings.push_back("no water geometries configured; population near water is 0");
    } else {
      water = parse_shapes_geojson(cfg_.water);
    }

    std::vector<std::pair<Date, RasterGrid>> pop_grids;
    for (const auto& [date, path] : cfg_.population.grids) pop_grids.emplace_back(date, parse_ascii_grid(path));

    in.population_near_water.name = "population_near_water";
    in.population_near_water.cadence = cfg_.population.cadence;
    in.population_near_water.aggregate = cfg_.population.aggregate;
    std::ostringstream buffers_csv;
    buffers_csv << "adm_id,buffer_km,date,population\n";
    for (const auto& [date, pop] : pop_grids) {
      for (std::size_t b = 0; b < cfg_.buffer_km.size(); ++b) {
        Warnings local;
        const WaterPopulation wp =
            population_near_water(pop, water, cfg_.buffer_km[b], rs, &local);
        if (b == 0) {
          for (auto& msg : local) warnings.push_back("population_near_water: " + msg);
          for (const auto& v : wp.per_region) {
            in.population_near_water.by_district[v.adm_id].push_back({date, v.value});
          }
        }
        for (const auto& v : wp.per_region) {
          buffers_csv << v.adm_id << ',' << csv::format_double(cfg_.buffer_km[b]) << ','
                      << format_date(date) << ',' << csv::format_double(v.value) << '\n';
        }
      }
    }

    static constexpr std::array<const char*, 5> kClassNames = {"trees", "crops", "built_up",
                                                               "bare_ground", "rangeland"};
    json composite_params = json::array();
    for (std::size_t k = 0; k < 5; ++k) {
      in.landcover[k].name = kClassNames[k];
      in.landcover[k].cadence = cfg_.landcover.cadence;
      in.landcover[k].aggregate = cfg_.landcover.aggregate;
    }
    const std::vector<int> codes(cfg_.landcover_codes.begin(), cfg_.landcover_codes.end());
    for (const auto& [date, path] : cfg_.landcover.grids) {
      const RasterGrid lc = parse_ascii_grid(path);
      Warnings local;
      const auto tab = tabulate_area(lc, rs, codes, &local);
      for (auto& msg : local) warnings.push_back("landcover " + format_date(date) + ": " + msg);
      // Population of the nearest population year, earlier on a tie.
      const auto nearest = std::min_element(
          pop_grids.begin(), pop_grids.end(), [&](const auto& a, const auto& b) {
            const long da = std::labs(days_between(date, a.first));
            const long db = std::labs(days_between(date, b.first));
            return da != db ? da < db : a.first < b.first;
          });
      for (std::size_t k = 0; k < 5; ++k) {
        std::vector<double> area(rs.size());
        std::vector<double> fraction(rs.size());
        for (std::size_t i = 0; i < rs.size(); ++i) {
          area[i] = static_cast<double>(tab[i].counts[k]);
          fraction[i] = tab[i].fractions[k];
        }
        const auto pop_in = population_in_class(nearest->second, lc, codes[k], rs);
        std::vector<double> pop(rs.size());
        for (std::size_t i = 0; i < rs.size(); ++i) pop[i] = pop_in[i].value;
        const auto comp = landcover_composite(area, fraction, pop);
        for (std::size_t i = 0; i < rs.size(); ++i) {
          in.landcover[k].by_district[rs[i].adm_id].push_back({date, comp[i]});
        }
        const auto a = minmax_scale(area).params;
        const auto f = minmax_scale(fraction).params;
        const auto p = minmax_scale(pop).params;
        composite_params.push_back({{"class", kClassNames[k]},
                                    {"code", codes[k]},
                                    {"date", format_date(date)},
                                    {"area_min", a.center[0]},
                                    {"area_range", a.scale[0]},
                                    {"fraction_min", f.center[0]},
                                    {"fraction_range", f.scale[0]},
                                    {"population_min", p.center[0]},
                                    {"population_range", p.scale[0]}});
      }
    }

    const PointAggregate wealth = aggregate_points(parse_point_csv(cfg_.wealth), rs);
    in.relative_wealth.name = "relative_wealth";
    for (std::size_t i = 0; i < rs.size(); ++i) {
      in.relative_wealth.by_district[rs[i].adm_id].push_back({cfg_.start, wealth.values[i]});
    }
    if (wealth.fallback_count > 0) {
      warnings.push_back(std::to_string(wealth.fallback_count) +
                         " districts without wealth points took the nearest point's value");
    }

    const std::vector<FeatureRow> rows = assemble_feature_table(panel, in);
    std::ostringstream features_csv;
    write_feature_csv(rows, features_csv);
    std::size_t positives = 0;
    for (const auto& r : rows) positives += static_cast<std::size_t>(r.label);

    json datasets = json::array();
    const auto describe = [&](const DistrictSeries& s, const char* source) {
      datasets.push_back({{"name", s.name},
                          {"source", source},
                          {"cadence", to_string(s.cadence)},
                          {"aggregate", to_string(s.aggregate)}});
    };
    describe(in.precipitation, "raster zonal mean");
    describe(in.temperature, "raster zonal mean");
    for (const auto& lc : in.landcover) describe(lc, "land cover composite");
    describe(in.population_density, "raster zonal sum");
    describe(in.population_near_water, "masked raster zonal sum");
    describe(in.relative_wealth, "point mean, nearest-point fallback");
    describe(in.elevation, "raster zonal mean");

    const json meta = {{"disease", cfg_.disease},
                       {"rows", rows.size()},
                       {"positives", positives},
                       {"districts", panel.districts.size()},
                       {"n_weeks", panel.n_weeks},
                       {"predictors", kPredictorNames},
                       {"datasets", datasets},
                       {"exported_buffer_km", cfg_.buffer_km.front()},
                       {"buffer_km", cfg_.buffer_km},
                       {"landcover_composite", composite_params},
                       {"wealth_fallback_districts", wealth.fallback_count}};
    return {{kFeaturesCsv, features_csv.str()},
            {kFeaturesJson, meta.dump(2) + "\n"},
            {kWaterBuffersCsv, buffers_csv.str()}};
  }

  SplitSpec split_spec() const { return {cfg_.test_fraction, cfg_.seed, cfg_.stratified}; }

  Artifacts run_train(Warnings& warnings) {
    const Dataset data = dataset_from_features(read_feature_csv(out(kFeaturesCsv)));
    TrainTestSplit split = random_split(data, split_spec(), &warnings);
    const ScalerParams scaler = fit_scaler(cfg_.scaler, split.train);
    apply_scaler(scaler, split.train);
    apply_scaler(scaler, split.test);
    const std::uint64_t resample_seed = cfg_.seed + kResampleSalt;
    Resampled balanced = resample(split.train, cfg_.resample, resample_seed, cfg_.smote_k);
    ForestParams fp = cfg_.forest;
    fp.seed = cfg_.seed + kForestSalt;
    const ForestModel model = train_forest(balanced.data, fp, &warnings);
    const Prediction pred = predict(model, split.test);
    const MetricsReport report = evaluate(split.test.y, pred.labels, pred.scores);

    const json model_doc = {
        {"format", "outbreak-model"},
        {"version", 1},
        {"disease", cfg_.disease},
        {"scaler", {{"kind", scaler_name(scaler.kind)}, {"center", scaler.center}, {"scale", scaler.scale}}},
        {"split",
         {{"test_fraction", cfg_.test_fraction},
          {"seed", cfg_.seed},
          {"stratified", cfg_.stratified},
          {"n_train", split.train.rows()},
          {"n_test", split.test.rows()}}},
        {"resample",
         {{"method", to_string(cfg_.resample)},
          {"k", cfg_.smote_k},
          {"seed", resample_seed},
          {"rows", balanced.data.rows()},
          {"positives", balanced.data.positives()}}},
        {"threshold", 0.5},
        {"forest", forest_to_json(model)}};

    json metrics = metrics_to_json(report);
    metrics["disease"] = cfg_.disease;
    metrics["n_train"] = balanced.data.rows();
    metrics["n_test"] = split.test.rows();
    metrics["test_positives"] = split.test.positives();

    std::ostringstream mcsv;
    mcsv << "metric,value\n";
    const std::pair<const char*, double> rows[] = {
        {"accuracy", report.accuracy},   {"balanced_accuracy", report.balanced_accuracy},
        {"mcc", report.mcc},             {"roc_auc", report.roc_auc},
        {"f1", report.f1},               {"precision", report.precision},
        {"recall", report.recall},       {"tp", static_cast<double>(report.tp)},
        {"fp", static_cast<double>(report.fp)}, {"fn", static_cast<double>(report.fn)},
        {"tn", static_cast<double>(report.tn)}};
    for (const auto& [k, v] : rows) mcsv << k << ',' << csv::format_double(v) << '\n';
    for (const auto& u : report.undefined) warnings.push_back("metric '" + u + "' undefined, reported as 0");
    return {{kModelFile, model_doc.dump() + "\n"},
            {kMetricsJson, metrics.dump(2) + "\n"},
            {kMetricsCsv, mcsv.str()}};
  }

  Artifacts run_importance(Warnings& warnings) {
    const Dataset data = dataset_from_features(read_feature_csv(out(kFeaturesCsv)));
    json doc;
    try {
      doc = json::parse(read_file(out(kModelFile)));
    } catch (const json::exception& e) {
      throw ParseError(std::string("model.json: ") + e.what());
    }
    if (doc.value("format", "") != "outbreak-model") throw ParseError("model.json is not an outbreak model");
    const json& sp = doc.at("split");
    SplitSpec spec{sp.at("test_fraction").get<double>(), sp.at("seed").get<std::uint64_t>(),
                   sp.at("stratified").get<bool>()};
    Warnings split_warnings;
    TrainTestSplit split = random_split(data, spec, &split_warnings);
    if (split.test.rows() != sp.at("n_test").get<std::size_t>()) {
      throw ValidationError("features.csv no longer matches the split recorded in model.json");
    }
    ScalerParams scaler;
    scaler.kind = parse_scaler(doc.at("scaler").at("kind").get<std::string>());
    scaler.center = doc.at("scaler").at("center").get<std::vector<double>>();
    scaler.scale = doc.at("scaler").at("scale").get<std::vector<double>>();
    apply_scaler(scaler, split.test);
    const ForestModel model = forest_from_json(doc.at("forest"));

    const std::uint64_t seed = cfg_.seed + kImportanceSalt;
    const auto ranked = permutation_importance(model, split.test, cfg_.importance_repeats, seed);
    const Prediction base = predict(model, split.test);
    const double baseline = f1_score(split.test.y, base.labels);
    if (split.test.positives() == 0) warnings.push_back("test split has no positives; F1 importance is 0");

    std::ostringstream icsv;
    icsv << "rank,feature,importance,stddev\n";
    json items = json::array();
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      icsv << r + 1 << ',' << ranked[r].feature << ',' << csv::format_double(ranked[r].importance)
           << ',' << csv::format_double(ranked[r].stddev) << '\n';
      items.push_back({{"rank", r + 1},
                       {"feature", ranked[r].feature},
                       {"importance", ranked[r].importance},
                       {"stddev", ranked[r].stddev}});
    }
    const json report = {{"disease", cfg_.disease},
                         {"metric", "f1"},
                         {"baseline", baseline},
                         {"n_repeats", cfg_.importance_repeats},
                         {"seed", seed},
                         {"n_test", split.test.rows()},
                         {"features", items}};
    return {{kImportanceCsv, icsv.str()}, {kImportanceJson, report.dump(2) + "\n"}};
  }

  PipelineConfig cfg_;
  RunOptions opt_;
  Logger log_;
  json manifest_;
  std::optional<std::vector<AdminRegion>> regions_;
  std::map<std::tuple<int, int, double, double, double>, CellAssignment> cells_;
};

json ring_json(const Ring& ring) {
  json coords = json::array();
  for (const auto& p : ring) coords.push_back({p.x, p.y});
  return coords;
}

json polygon_json(const Polygon& poly) {
  json rings = json::array();
  for (const auto& r : poly.rings) rings.push_back(ring_json(r));
  return rings;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

// ---------------------------------------------------------------------------

PipelineConfig parse_config(const json& doc, const fs::path& base_dir) {
  try {
    check_keys(doc, "config", {"disease", "output_dir", "seed", "panel", "inputs", "features",
                               "weights", "esda", "learn"});
    PipelineConfig c;
    c.base_dir = base_dir;
    c.document = doc;
    c.disease = csv::trim(doc.at("disease").get<std::string>());
    if (c.disease.empty()) throw ValidationError("config: disease must be non-empty");
    c.output_dir = resolve(base_dir, doc.value("output_dir", std::string("out")));
    c.seed = doc.value("seed", std::uint64_t{12345});

    const json panel = section(doc, "panel");
    check_keys(panel, "panel", {"start", "n_weeks"});
    c.start = parse_date(panel.value("start", std::string("2019-01-01")));
    c.n_weeks = panel.value("n_weeks", 52);
    if (c.n_weeks < 1) throw ValidationError("config: panel.n_weeks must be at least 1");

    const json inputs = doc.at("inputs");
    check_keys(inputs, "inputs", {"surveillance", "districts", "water", "wealth", "rasters"});
    c.surveillance = resolve(base_dir, inputs.at("surveillance").get<std::string>());
    c.districts = resolve(base_dir, inputs.at("districts").get<std::string>());
    c.wealth = resolve(base_dir, inputs.at("wealth").get<std::string>());
    if (inputs.contains("water")) c.water = resolve(base_dir, inputs.at("water").get<std::string>());
    const json rasters = inputs.at("rasters");
    check_keys(rasters, "inputs.rasters",
               {"elevation", "population", "landcover", "precipitation", "temperature"});
    c.elevation = parse_source(rasters.at("elevation"), "elevation", base_dir, Cadence::static_value);
    c.population = parse_source(rasters.at("population"), "population", base_dir, Cadence::yearly);
    c.landcover = parse_source(rasters.at("landcover"), "landcover", base_dir, Cadence::yearly);
    c.precipitation =
        parse_source(rasters.at("precipitation"), "precipitation", base_dir, Cadence::weekly);
    c.temperature = parse_source(rasters.at("temperature"), "temperature", base_dir, Cadence::weekly);

    const json features = section(doc, "features");
    check_keys(features, "features", {"buffer_km", "landcover_classes"});
    if (features.contains("buffer_km")) c.buffer_km = features.at("buffer_km").get<std::vector<double>>();
    if (c.buffer_km.empty()) throw ValidationError("config: features.buffer_km must not be empty");
    for (double b : c.buffer_km) {
      if (!(b >= 0.0) || !std::isfinite(b)) throw ValidationError("config: buffer_km must be >= 0");
    }
    if (features.contains("landcover_classes")) {
      const json& lc = features.at("landcover_classes");
      check_keys(lc, "features.landcover_classes",
                 {"trees", "crops", "built_up", "bare_ground", "rangeland"});
      const char* names[] = {"trees", "crops", "built_up", "bare_ground", "rangeland"};
      for (std::size_t k = 0; k < 5; ++k) {
        if (lc.contains(names[k])) c.landcover_codes[k] = lc.at(names[k]).get<int>();
      }
    }

    const json weights = section(doc, "weights");
    check_keys(weights, "weights", {"contiguity", "tolerance"});
    c.contiguity = parse_contiguity(weights.value("contiguity", std::string("queen")));
    c.tolerance = weights.value("tolerance", 1e-9);
    if (!(c.tolerance >= 0.0)) throw ValidationError("config: weights.tolerance must be >= 0");

    const json esda = section(doc, "esda");
    check_keys(esda, "esda", {"n_perm", "alpha"});
    c.n_perm = esda.value("n_perm", 999);
    c.alpha = esda.value("alpha", 0.05);
    if (c.n_perm < 1) throw ValidationError("config: esda.n_perm must be at least 1");
    if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw ValidationError("config: esda.alpha must lie in (0, 1]");

    const json learn = section(doc, "learn");
    check_keys(learn, "learn", {"test_fraction", "stratified", "resample", "smote_k", "scaler",
                                "forest", "importance_repeats"});
    c.test_fraction = learn.value("test_fraction", 0.2);
    if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) {
      throw ValidationError("config: learn.test_fraction must lie in (0, 1)");
    }
    c.stratified = learn.value("stratified", false);
    c.resample = parse_resample(learn.value("resample", std::string("none")));
    c.smote_k = learn.value("smote_k", 5);
    c.scaler = parse_scaler(learn.value("scaler", std::string("robust")));
    c.importance_repeats = learn.value("importance_repeats", 10);
    if (c.importance_repeats < 1) throw ValidationError("config: learn.importance_repeats must be >= 1");
    const json forest = section(learn, "forest");
    check_keys(forest, "learn.forest",
               {"criterion", "n_trees", "max_depth", "min_leaf", "features_per_split"});
    c.forest.criterion = parse_criterion(forest.value("criterion", std::string("gini")));
    c.forest.n_trees = forest.value("n_trees", 100);
    c.forest.max_depth = forest.value("max_depth", 0);
    c.forest.min_leaf = forest.value("min_leaf", 1);
    c.forest.features_per_split = forest.value("features_per_split", 0);

    require_file(c.surveillance, "surveillance");
    require_file(c.districts, "districts");
    require_file(c.wealth, "wealth");
    if (!c.water.empty()) require_file(c.water, "water");
    for (const RasterSource* src : {&c.elevation, &c.population, &c.landcover, &c.precipitation,
                                    &c.temperature}) {
      for (const auto& [d, path] : src->grids) require_file(path, src->name + " raster");
    }
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

PipelineConfig load_config(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc, fs::absolute(path).parent_path());
}

Stage parse_stage(std::string_view name) {
  for (Stage s : kStageOrder) {
    if (name == to_string(s)) return s;
  }
  throw ValidationError("unknown stage '" + std::string(name) + "'");
}

const char* to_string(Stage stage) {
  switch (stage) {
    case Stage::ingest: return "ingest";
    case Stage::weights: return "weights";
    case Stage::esda: return "esda";
    case Stage::features: return "features";
    case Stage::train: return "train";
    case Stage::importance: return "importance";
  }
  return "ingest";
}

std::vector<StageOutcome> run(PipelineConfig config, std::string_view stage,
                              const RunOptions& options) {
  if (options.seed) config.seed = *options.seed;
  if (options.threads > 0) set_thread_count(options.threads);
  Runner runner(std::move(config), options);
  return runner.run(stage);
}

// ---------------------------------------------------------------------------

void export_lisa_geojson(const std::vector<AdminRegion>& regions, const LisaResult& result,
                         std::ostream& out) {
  if (result.quadrant.size() != regions.size() || result.local_I.size() != regions.size()) {
    throw DimensionMismatch("LISA result has " + std::to_string(result.quadrant.size()) +
                            " regions, region list has " + std::to_string(regions.size()));
  }
  json features = json::array();
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const AdminRegion& r = regions[i];
    json geometry;
    if (r.geometry.parts.size() == 1) {
      geometry = {{"type", "Polygon"}, {"coordinates", polygon_json(r.geometry.parts[0])}};
    } else {
      json parts = json::array();
      for (const auto& p : r.geometry.parts) parts.push_back(polygon_json(p));
      geometry = {{"type", "MultiPolygon"}, {"coordinates", parts}};
    }
    features.push_back({{"type", "Feature"},
                        {"properties",
                         {{"adm_id", r.adm_id},
                          {"name", r.name},
                          {"province", r.province},
                          {"country", r.country},
                          {"quadrant", to_string(result.quadrant[i])},
                          {"local_I", number_or_null(result.local_I[i])},
                          {"p_value", number_or_null(result.p_value[i])},
                          {"z", number_or_null(result.z[i])},
                          {"lag", number_or_null(result.lag[i])}}},
                        {"geometry", geometry}});
  }
  const json doc = {{"type", "FeatureCollection"},
                    {"properties", {{"alpha", result.alpha}, {"n_permutations", result.n_permutations}}},
                    {"features", features}};
  out << doc.dump() << '\n';
}

void export_lisa_geojson(const std::vector<AdminRegion>& regions, const LisaResult& result,
                         const fs::path& path) {
  std::ostringstream ss;
  export_lisa_geojson(regions, result, ss);
  write_file_atomic(path, ss.str());
}

void write_panel_csv(const SurveillancePanel& panel, std::ostream& out) {
  out << "adm_id,week,week_start,disease,cases\n";
  const std::string disease = panel.diseases.empty() ? "" : csv::escape(panel.diseases[0]);
  for (std::size_t d = 0; d < panel.districts.size(); ++d) {
    for (std::size_t w = 0; w < static_cast<std::size_t>(panel.n_weeks); ++w) {
      out << panel.districts[d] << ',' << w + 1 << ',' << format_date(panel.week_start(w)) << ','
          << disease << ',' << panel.at(0, d, w) << '\n';
    }
  }
}

SurveillancePanel read_panel_csv(std::istream& in, const std::vector<AdmId>& districts,
                                 Date start, int n_weeks) {
  SurveillancePanel panel;
  panel.start = start;
  panel.n_weeks = n_weeks;
  panel.districts = districts;
  panel.counts.assign(districts.size() * static_cast<std::size_t>(n_weeks), 0);
  std::map<AdmId, std::size_t> index;
  for (std::size_t i = 0; i < districts.size(); ++i) index[districts[i]] = i;

  std::string line;
  if (!std::getline(in, line) || csv::trim(line) != "adm_id,week,week_start,disease,cases") {
    throw ParseError("panel.csv: unexpected header");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split_line(line);
    if (f.size() != 5) throw ParseError("panel.csv line " + std::to_string(line_no) + ": expected 5 fields");
    const AdmId id = csv::parse_int(f[0]);
    const long long week = csv::parse_int(f[1]);
    const auto it = index.find(id);
    if (it == index.end() || week < 1 || week > n_weeks) {
      throw ParseError("panel.csv line " + std::to_string(line_no) +
                       ": cell outside the configured panel");
    }
    if (panel.diseases.empty()) panel.diseases.push_back(f[3]);
    panel.counts[it->second * static_cast<std::size_t>(n_weeks) + static_cast<std::size_t>(week - 1)] =
        csv::parse_int(f[4]);
  }
  if (panel.diseases.empty()) panel.diseases.emplace_back();
  return panel;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return hex;
}

std::string file_sha256(const fs::path& path) { return sha256_hex(read_file(path)); }

}  // namespace outbreak::pipeline
