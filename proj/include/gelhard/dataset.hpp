#pragma once

// Synthetic dataset plan (hardness levels x shapes x seeds, plus the gripper
// and complex-shape evaluation sets) and the compact in-memory store used by
// training and evaluation.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gelhard/pipeline.hpp"
#include "gelhard/simcam.hpp"

namespace gelhard {

/// One indenter of the shape grid, e.g. {"sphere", 10}.
struct ShapeSpec {
  std::string family;
  double radius_mm = 0.0;
};

struct DatasetConfig {
  std::uint64_t seed = 1;
  int levels = 16;
  double min_hardness = 8.0;
  double max_hardness = 87.0;
  std::vector<double> sphere_radii{5.0, 10.0, 20.0, 40.0};
  std::vector<double> cylinder_radii{5.0, 10.0, 20.0};
  bool include_flat = true;
  bool include_edge = true;
  bool include_corner = true;
  int seeds_per_cell = 10;
  // Share of each cell's presses replaced by bad-contact and complex-shape
  // presses, split evenly between the two.
  double mix_fraction = 0.2;
  int robot_seeds_per_cell = 2;
  int complex_test_per_level = 10;
  double texture_amplitude_mm = 0.05;
  double texture_period_mm = 1.5;
  RidgeParams train_ridges{};
  RidgeParams test_ridges{0.15, 0.3, 3.0, 6.0, 1.5, 3.0, 15.0, 40.0, 3};
};

/// The three sets a generated dataset contains.
inline constexpr const char* kMainSet = "main";
inline constexpr const char* kRobotSet = "robot";
inline constexpr const char* kComplexTestSet = "complex_test";

struct SequenceRecord {
  std::string id;
  std::string set;
  std::optional<double> label;  // Shore 00; empty for unlabeled real data
  std::string shape_tag;
  std::string shape_family;
  double shape_radius_mm = 0.0;
  GroupTag group = GroupTag::kBasic;
  ProfileKind profile = ProfileKind::kHuman;
  std::uint64_t seed = 0;
  int frame_count = 0;
  bool saturated = false;
  std::string frame_dir;  // relative to the manifest root
};

/// A planned press; `shape_index` indexes `shape_grid`, -1 means ridged.
struct GenItem {
  SequenceRecord record;
  double hardness = 0.0;
  int shape_index = -1;
};

std::vector<double> hardness_levels(const DatasetConfig& cfg);
std::vector<ShapeSpec> shape_grid(const DatasetConfig& cfg);

/// Full generation plan in a fixed order; ids are unique.
std::vector<GenItem> generation_plan(const DatasetConfig& cfg);

IndenterShape make_shape(const GenItem& item, const DatasetConfig& cfg, const GelSpec& gel);
PressSequence synth_item(const GenItem& item, const DatasetConfig& cfg, const SensorModel& sensor);

// ---------------------------------------------------------------------------
// In-memory store

std::vector<std::uint8_t> frame_to_bytes(const TactileFrame& frame);
TactileFrame frame_from_bytes(const std::vector<std::uint8_t>& bytes, int rows, int cols);

/// Which frames a stored sequence keeps.
enum class FrameKeep {
  kLoading,       // start .. end, enough for every truncation clip
  kStandardClip,  // only the five frames of the standard clip
};

/// A sequence reduced to what training/evaluation needs. `frames[i]` holds
/// source frame `kept_indices[i]` as 8-bit RGB.
struct StoredSequence {
  SequenceRecord record;
  int rows = 0;
  int cols = 0;
  std::vector<double> intensity;
  int start = 0;
  int end = 0;
  std::vector<int> kept_indices;
  std::vector<std::vector<std::uint8_t>> frames;

  /// Clip for the given source indices (all must be kept).
  SelectedClip clip(const ClipIndices& indices) const;
  SelectedClip standard_clip() const;
};

/// Reduces a full frame sequence. Throws NoContactError / ClipTooShortError
/// when the standard clip cannot be formed.
StoredSequence store_sequence(const SequenceRecord& record, const std::vector<TactileFrame>& frames,
                              double tau, FrameKeep keep);

}  // namespace gelhard
