#pragma once

// Press video synthesis: loading profiles for hand-held and gripper presses,
// and the per-frame mechanics -> render loop.

#include <cstdint>
#include <string>
#include <vector>

#include "gelhard/mechanics.hpp"
#include "gelhard/render.hpp"

namespace gelhard {

enum class ProfileKind { kHuman, kRobot };

enum class GroupTag { kBasic, kBadContact, kSimpleShape, kComplexShape };

std::string to_string(ProfileKind kind);
std::string to_string(GroupTag tag);
ProfileKind profile_kind_from_string(const std::string& s);
GroupTag group_tag_from_string(const std::string& s);

/// Loading trajectory of one press, sampled at the camera frame rate.
///
/// Hand-held presses are force driven: `force_fraction[t]` rises monotonically
/// from 0 to 1 and the approach at each frame is whatever reaches
/// `force_fraction[t] * max_force_n` on the pressed object. Gripper presses
/// are displacement driven: `delta_of_t[t]` (mm) grows at constant speed and
/// loading stops at the first frame whose force reaches `max_force_n`.
struct PressProfile {
  ProfileKind kind = ProfileKind::kHuman;
  std::vector<double> force_fraction;
  std::vector<double> delta_of_t;
  double max_force_n = 0.0;
  double speed_mm_per_s = 0.0;
  double tilt_rad = 0.0;
  double tilt_azimuth_rad = 0.0;
  double lateral_drift_mm_per_s = 0.0;
  double drift_direction_rad = 0.0;
  double offset_x_mm = 0.0;
  double offset_y_mm = 0.0;
  std::uint64_t seed = 0;

  int frame_count() const {
    return static_cast<int>(kind == ProfileKind::kHuman ? force_fraction.size()
                                                        : delta_of_t.size());
  }
};

struct SimConfig {
  double frame_rate_hz = 30.0;
  int human_min_frames = 20;
  int human_max_frames = 30;
  double human_min_force_n = 2.0;
  double human_max_force_n = 10.0;
  double human_max_tilt_rad = 0.1;
  double human_max_drift_mm_per_s = 0.5;
  double human_speed_jitter = 0.5;
  double robot_min_speed_mm_per_s = 5.0;
  double robot_max_speed_mm_per_s = 7.0;
  double robot_min_force_n = 5.0;
  double robot_max_force_n = 9.0;
  int robot_max_frames = 120;
  double bad_min_tilt_rad = 0.2;
  double bad_max_tilt_rad = 0.35;
  double bad_min_drift_mm_per_s = 2.0;
  double bad_max_drift_mm_per_s = 4.0;
  double bad_min_offset_mm = 5.0;
  double bad_max_offset_mm = 8.0;
  // Hand-held presses stop short of bottoming out the gel by this factor.
  double saturation_margin = 0.98;
};

/// Everything besides the object that determines how a press looks.
struct SensorModel {
  GelSpec gel;
  MaterialModel material;
  RenderConfig render;
  SimConfig sim;
};

PressProfile human_press_profile(std::uint64_t seed, const SimConfig& cfg = {});

/// Hand-held press under a bad contact condition: strong tilt, fast drift or
/// a contact centre near the sensor border (chosen from the seed).
PressProfile bad_contact_profile(std::uint64_t seed, const SimConfig& cfg = {});

PressProfile robot_press_profile(std::uint64_t seed, const SimConfig& cfg = {});

struct PressSequence {
  std::vector<TactileFrame> frames;
  std::vector<double> intensity_series;
  Shore00 label;
  IndenterShape shape;
  PressProfile profile;
  GroupTag group = GroupTag::kBasic;
  std::vector<double> approach_mm;
  std::vector<double> force_n;
  std::vector<ContactPose> poses;
  // Loading was cut short because the gel would have bottomed out.
  bool saturated = false;
};

/// Contact centre for frame `t` of a profile.
ContactPose pose_at(const PressProfile& profile, int t, const SensorModel& sensor);

/// Approach (mm) per frame for the given object, before any truncation.
/// For gripper profiles the result stops at the force threshold or at the
/// last frame before saturation; `saturated` reports the latter.
std::vector<double> loading_trajectory(const IndenterShape& shape, const ElasticBody& object,
                                       const PressProfile& profile, const SensorModel& sensor,
                                       bool* saturated = nullptr);

PressSequence synth_sequence(const IndenterShape& shape, Shore00 hardness,
                             const PressProfile& profile, const SensorModel& sensor,
                             GroupTag group = GroupTag::kBasic);

/// Same as `synth_sequence` for an object given directly by its elastic body
/// (used for rigid references). The label is left at 0.
PressSequence synth_sequence_for_body(const IndenterShape& shape, const ElasticBody& object,
                                      const PressProfile& profile, const SensorModel& sensor,
                                      GroupTag group = GroupTag::kBasic);

// ---------------------------------------------------------------------------
// Procedural indenters for the non-basic groups.

struct RidgeParams {
  double min_amplitude_mm = 0.05;
  double max_amplitude_mm = 0.15;
  double min_sharpness = 1.0;
  double max_sharpness = 2.0;
  double min_wavelength_mm = 2.0;
  double max_wavelength_mm = 5.0;
  double min_base_radius_mm = 15.0;
  double max_base_radius_mm = 40.0;
  int waves = 3;
};

/// Band-limited random ridged surface over a gentle dome. Higher sharpness
/// narrows the ridge crests.
IndenterShape make_ridged_indenter(std::uint64_t seed, const RidgeParams& params,
                                   const GelSpec& gel);

/// Truncated cone (measuring-cup like) with a flat top of the given radius.
IndenterShape make_frustum_indenter(double top_radius_mm, double side_slope, const GelSpec& gel);

}  // namespace gelhard
