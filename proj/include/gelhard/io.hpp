#pragma once

// On-disk formats: PNG/PPM frames, the JSON dataset manifest with per-press
// metadata sidecars, INI configuration, report and loss-curve CSVs and SVG
// plots.
//
// Dataset layout:
//   <root>/manifest.json
//   <root>/<frame_dir>/frame_0000.png ... frame_NNNN.png
//   <root>/<frame_dir>/meta.json

#include <filesystem>
#include <string>
#include <vector>

#include "gelhard/dataset.hpp"
#include "gelhard/traineval.hpp"

namespace gelhard {

inline constexpr int kManifestVersion = 1;

// ---------------------------------------------------------------------------
// Images

void write_png(const std::filesystem::path& path, const TactileFrame& frame);
TactileFrame read_png(const std::filesystem::path& path);
/// Binary PPM (P6, maxval 255).
TactileFrame read_ppm(const std::filesystem::path& path);
/// Dispatches on the extension (.png, .ppm).
TactileFrame read_image(const std::filesystem::path& path);

/// Image files of a press directory ordered by the last number in their name.
/// Throws DataError when two files carry the same number.
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir);
std::vector<TactileFrame> read_frames(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Manifest

struct Manifest {
  int version = kManifestVersion;
  std::uint64_t seed = 0;
  std::vector<SequenceRecord> records;
};

std::string manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const std::string& text);
void write_manifest(const std::filesystem::path& root, const Manifest& manifest);
/// Reads <root>/manifest.json; rejects unknown versions, duplicate ids,
/// labels outside [0, 100] and missing frame directories.
Manifest read_manifest(const std::filesystem::path& root);

/// Per-press sidecar with the full profile parameters.
std::string press_metadata_json(const SequenceRecord& record, const PressProfile& profile,
                                const IndenterShape& shape);

/// Writes one synthetic press (frames + sidecar) below `root`.
void write_press(const std::filesystem::path& root, const SequenceRecord& record,
                 const PressSequence& seq);

/// Loads and reduces every listed press. Presses that never cross the start
/// threshold or are too short for a clip are skipped and counted.
struct LoadedDataset {
  std::vector<StoredSequence> sequences;
  std::vector<std::string> skipped;  // "id: reason"
};
LoadedDataset load_dataset(const std::filesystem::path& root, const Manifest& manifest,
                           const std::vector<std::size_t>& indices, double tau, FrameKeep keep);

/// Builds a manifest for a directory of real presses, one subdirectory per
/// press. `labels_csv` (id,label) may be empty; ids without a label are
/// admitted as unlabeled.
Manifest ingest_directory(const std::filesystem::path& raw_dir,
                          const std::filesystem::path& labels_csv,
                          std::vector<std::string>* warnings = nullptr);

// ---------------------------------------------------------------------------
// Configuration

/// Everything a CLI run needs; defaults equal configs/reference.ini.
struct AppConfig {
  std::uint64_t seed = 1;
  DatasetConfig dataset;
  SensorModel sensor;
  TrainConfig train;
  SplitConfig split;
  // Light rig parameters; `sensor.render.rig` is rebuilt from them.
  double light_elevation_deg = 30.0;
  double light_gain = 0.6;
  // Start threshold margin above the noise floor; a threshold <= 0 derives it.
  double start_margin = 0.001;
  double start_threshold = 0.0;

  double tau() const;
};

/// Reads an INI file; unknown sections or keys are configuration errors.
AppConfig load_config(const std::filesystem::path& path);
AppConfig config_from_ini(const std::string& text);
/// Canonical INI text listing every key.
std::string config_to_ini(const AppConfig& cfg);
/// Propagates `seed` into the dataset and training seeds.
void apply_seed(AppConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Reports

/// id,shape,group,label,prediction,y1..y5
std::string report_to_csv(const EvalReport& report);
void write_report_csv(const std::filesystem::path& path, const EvalReport& report);
/// Reads a report CSV (only id, label and prediction are required) and
/// recomputes the summary. A header without rows gives an empty report.
EvalReport read_report_csv(const std::filesystem::path& path);

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& losses);
std::vector<double> read_loss_csv(const std::filesystem::path& path);

/// Prediction-vs-label scatter with the identity line.
std::string scatter_svg(const EvalReport& report);
std::string loss_svg(const std::vector<double>& losses);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace gelhard
