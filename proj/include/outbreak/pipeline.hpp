#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "outbreak/esda.hpp"
#include "outbreak/features.hpp"
#include "outbreak/ingest.hpp"
#include "outbreak/learn.hpp"
#include "outbreak/weights.hpp"

namespace outbreak::pipeline {

namespace fs = std::filesystem;

/// A raster dataset over time. `grids` holds (date, path) pairs; a static
/// source has exactly one grid and its date is ignored.
struct RasterSource {
  std::string name;
  Cadence cadence = Cadence::static_value;
  Aggregate aggregate = Aggregate::mean;
  std::vector<std::pair<Date, fs::path>> grids;
};

struct PipelineConfig {
  fs::path base_dir;    // relative paths resolve against this
  fs::path output_dir;  // resolved

  std::string disease;
  Date start = make_date(2019, 1, 1);
  int n_weeks = 52;

  fs::path surveillance;
  fs::path districts;
  fs::path water;
  fs::path wealth;
  RasterSource elevation;
  RasterSource population;
  RasterSource landcover;
  RasterSource precipitation;
  RasterSource temperature;
  // trees, crops, built_up, bare_ground, rangeland
  std::array<int, 5> landcover_codes = {2, 5, 7, 8, 11};
  std::vector<double> buffer_km = {3.0};

  Contiguity contiguity = Contiguity::queen;
  double tolerance = 1e-9;

  int n_perm = 999;
  double alpha = 0.05;
  std::uint64_t seed = 12345;

  double test_fraction = 0.2;
  bool stratified = false;
  ResampleMethod resample = ResampleMethod::none;
  int smote_k = 5;
  ScalerKind scaler = ScalerKind::robust;
  ForestParams forest;
  int importance_repeats = 10;

  /// The document as loaded, kept for the manifest.
  nlohmann::json document;
};

PipelineConfig load_config(const fs::path& path);
PipelineConfig parse_config(const nlohmann::json& doc, const fs::path& base_dir);

enum class Stage { ingest, weights, esda, features, train, importance };

inline constexpr std::array<Stage, 6> kStageOrder = {Stage::ingest,   Stage::weights,
                                                     Stage::esda,     Stage::features,
                                                     Stage::train,    Stage::importance};

Stage parse_stage(std::string_view name);
const char* to_string(Stage stage);

/// Raised for any failure inside a stage; carries the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, std::string kind, const std::string& message)
      : Error(message), stage_(std::move(stage)), kind_(std::move(kind)) {}
  const std::string& stage() const { return stage_; }
  const std::string& kind() const { return kind_; }

 private:
  std::string stage_;
  std::string kind_;
};

struct RunOptions {
  bool force = false;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;  // 0 keeps the current setting
  std::ostream* log = nullptr;  // JSON lines; nullptr silences logging
};

struct StageOutcome {
  Stage stage;
  bool skipped = false;
  std::vector<std::string> outputs;
  Warnings warnings;
};

/// Runs `stage` ("all" or a stage name). Single stages never run their
/// upstream stages; a missing upstream artifact raises StageError naming the
/// stage that produces it.
std::vector<StageOutcome> run(PipelineConfig config, std::string_view stage,
                              const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Artifacts

void export_lisa_geojson(const std::vector<AdminRegion>& regions, const LisaResult& result,
                         std::ostream& out);
void export_lisa_geojson(const std::vector<AdminRegion>& regions, const LisaResult& result,
                         const fs::path& path);

void write_panel_csv(const SurveillancePanel& panel, std::ostream& out);
/// Reads a single-disease panel back onto the given district order.
SurveillancePanel read_panel_csv(std::istream& in, const std::vector<AdmId>& districts,
                                 Date start, int n_weeks);

std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const fs::path& path);

}  // namespace outbreak::pipeline
