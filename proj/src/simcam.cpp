#include "gelhard/simcam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gelhard/error.hpp"
#include "gelhard/rng.hpp"

namespace gelhard {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Monotone 0 -> 1 curve with a bell-shaped, jittered rate.
std::vector<double> jittered_ramp(int n, double jitter, Rng& rng) {
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  if (n <= 1) return out;
  const int steps = n - 1;
  std::vector<double> noise(static_cast<std::size_t>(steps));
  for (double& v : noise) v = rng.uniform(-1.0, 1.0);
  double total = 0.0;
  std::vector<double> rate(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    // three-tap smoothing keeps the speed changes gradual
    const double a = noise[static_cast<std::size_t>(std::max(0, i - 1))];
    const double b = noise[static_cast<std::size_t>(i)];
    const double c = noise[static_cast<std::size_t>(std::min(steps - 1, i + 1))];
    const double smooth = (a + 2.0 * b + c) / 4.0;
    const double bell = 0.35 + std::sin(std::numbers::pi * (i + 0.5) / steps);
    rate[static_cast<std::size_t>(i)] = bell * std::max(0.2, 1.0 + jitter * smooth);
    total += rate[static_cast<std::size_t>(i)];
  }
  double acc = 0.0;
  for (int i = 0; i < steps; ++i) {
    acc += rate[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i) + 1] = acc / total;
  }
  out.back() = 1.0;
  return out;
}

}  // namespace

std::string to_string(ProfileKind kind) { return kind == ProfileKind::kHuman ? "human" : "robot"; }

std::string to_string(GroupTag tag) {
  switch (tag) {
    case GroupTag::kBasic:
      return "basic";
    case GroupTag::kBadContact:
      return "bad_contact";
    case GroupTag::kSimpleShape:
      return "simple_shape";
    case GroupTag::kComplexShape:
      return "complex_shape";
  }
  return "basic";
}

ProfileKind profile_kind_from_string(const std::string& s) {
  if (s == "human") return ProfileKind::kHuman;
  if (s == "robot") return ProfileKind::kRobot;
  throw DataError("unknown profile kind '" + s + "'");
}

GroupTag group_tag_from_string(const std::string& s) {
  if (s == "basic") return GroupTag::kBasic;
  if (s == "bad_contact") return GroupTag::kBadContact;
  if (s == "simple_shape") return GroupTag::kSimpleShape;
  if (s == "complex_shape") return GroupTag::kComplexShape;
  throw DataError("unknown group tag '" + s + "'");
}

PressProfile human_press_profile(std::uint64_t seed, const SimConfig& cfg) {
  Rng rng(mix_seed(seed, 0x48554d));
  PressProfile p;
  p.kind = ProfileKind::kHuman;
  p.seed = seed;
  const int n = rng.uniform_int(cfg.human_min_frames, cfg.human_max_frames);
  p.max_force_n = rng.uniform(cfg.human_min_force_n, cfg.human_max_force_n);
  p.tilt_rad = rng.uniform(0.0, cfg.human_max_tilt_rad);
  p.tilt_azimuth_rad = rng.uniform(0.0, kTwoPi);
  p.lateral_drift_mm_per_s = rng.uniform(0.0, cfg.human_max_drift_mm_per_s);
  p.drift_direction_rad = rng.uniform(0.0, kTwoPi);
  p.force_fraction = jittered_ramp(n, cfg.human_speed_jitter, rng);
  return p;
}

PressProfile bad_contact_profile(std::uint64_t seed, const SimConfig& cfg) {
  PressProfile p = human_press_profile(seed, cfg);
  Rng rng(mix_seed(seed, 0x424144));
  switch (rng.uniform_int(0, 2)) {
    case 0:
      p.tilt_rad = rng.uniform(cfg.bad_min_tilt_rad, cfg.bad_max_tilt_rad);
      break;
    case 1:
      p.lateral_drift_mm_per_s =
          rng.uniform(cfg.bad_min_drift_mm_per_s, cfg.bad_max_drift_mm_per_s);
      break;
    default: {
      const double r = rng.uniform(cfg.bad_min_offset_mm, cfg.bad_max_offset_mm);
      const double phi = rng.uniform(0.0, kTwoPi);
      p.offset_x_mm = r * std::cos(phi);
      p.offset_y_mm = r * std::sin(phi);
      break;
    }
  }
  return p;
}

PressProfile robot_press_profile(std::uint64_t seed, const SimConfig& cfg) {
  Rng rng(mix_seed(seed, 0x524f42));
  PressProfile p;
  p.kind = ProfileKind::kRobot;
  p.seed = seed;
  p.speed_mm_per_s = rng.uniform(cfg.robot_min_speed_mm_per_s, cfg.robot_max_speed_mm_per_s);
  p.max_force_n = rng.uniform(cfg.robot_min_force_n, cfg.robot_max_force_n);
  p.delta_of_t.resize(static_cast<std::size_t>(cfg.robot_max_frames));
  for (int t = 0; t < cfg.robot_max_frames; ++t) {
    p.delta_of_t[static_cast<std::size_t>(t)] = p.speed_mm_per_s * t / cfg.frame_rate_hz;
  }
  return p;
}

ContactPose pose_at(const PressProfile& profile, int t, const SensorModel& sensor) {
  const double shift = std::tan(profile.tilt_rad) * sensor.gel.thickness_mm;
  const double travel = profile.lateral_drift_mm_per_s * t / sensor.sim.frame_rate_hz;
  ContactPose pose;
  pose.center_x_mm = profile.offset_x_mm + shift * std::cos(profile.tilt_azimuth_rad) +
                     travel * std::cos(profile.drift_direction_rad);
  pose.center_y_mm = profile.offset_y_mm + shift * std::sin(profile.tilt_azimuth_rad) +
                     travel * std::sin(profile.drift_direction_rad);
  return pose;
}

std::vector<double> loading_trajectory(const IndenterShape& shape, const ElasticBody& object,
                                       const PressProfile& profile, const SensorModel& sensor,
                                       bool* saturated) {
  const ElasticBody gel = shore00_to_modulus(sensor.gel.hardness, sensor.material);
  const double share = gel_share(gel, object);
  const double limit = saturation_approach(share, sensor.gel);
  bool sat = false;
  std::vector<double> out;

  if (profile.kind == ProfileKind::kHuman) {
    const double cap = sensor.sim.saturation_margin * limit;
    const double cap_force = contact_for_shape(shape, gel, object, sensor.gel, cap).force_n;
    const double target = std::min(profile.max_force_n, cap_force);
    sat = profile.max_force_n > cap_force;
    out.reserve(profile.force_fraction.size());
    for (double frac : profile.force_fraction) {
      out.push_back(frac <= 0.0
                        ? 0.0
                        : approach_for_force(shape, gel, object, sensor.gel, frac * target, cap));
    }
  } else {
    for (double d : profile.delta_of_t) {
      if (d > limit) {
        sat = true;
        break;
      }
      out.push_back(d);
      if (d > 0.0 &&
          contact_for_shape(shape, gel, object, sensor.gel, d).force_n >= profile.max_force_n) {
        break;
      }
    }
  }
  if (saturated != nullptr) *saturated = sat;
  return out;
}

PressSequence synth_sequence_for_body(const IndenterShape& shape, const ElasticBody& object,
                                      const PressProfile& profile, const SensorModel& sensor,
                                      GroupTag group) {
  validate(shape);
  validate(sensor.gel);
  PressSequence seq;
  seq.shape = shape;
  seq.profile = profile;
  seq.group = group;
  seq.approach_mm = loading_trajectory(shape, object, profile, sensor, &seq.saturated);

  const ElasticBody gel = shore00_to_modulus(sensor.gel.hardness, sensor.material);
  const MarkerGrid markers = make_marker_grid(sensor.gel, sensor.render.dot_radius_mm);
  Rng noise(mix_seed(profile.seed, 0x4e4f4953));

  for (std::size_t t = 0; t < seq.approach_mm.size(); ++t) {
    const double d = seq.approach_mm[t];
    ContactState state;
    state.gel_share = gel_share(gel, object);
    if (d > 0.0) state = contact_for_shape(shape, gel, object, sensor.gel, d);
    const ContactPose pose = pose_at(profile, static_cast<int>(t), sensor);
    seq.frames.push_back(
        render_contact(shape, state, sensor.gel, pose, sensor.render, markers, noise));
    seq.force_n.push_back(state.force_n);
    seq.poses.push_back(pose);
  }
  seq.intensity_series.reserve(seq.frames.size());
  for (const TactileFrame& f : seq.frames) {
    seq.intensity_series.push_back(mean_intensity_change(f, seq.frames.front()));
  }
  return seq;
}

PressSequence synth_sequence(const IndenterShape& shape, Shore00 hardness,
                             const PressProfile& profile, const SensorModel& sensor,
                             GroupTag group) {
  PressSequence seq = synth_sequence_for_body(shape, shore00_to_modulus(hardness, sensor.material),
                                              profile, sensor, group);
  seq.label = hardness;
  return seq;
}

IndenterShape make_ridged_indenter(std::uint64_t seed, const RidgeParams& params,
                                   const GelSpec& gel) {
  Rng rng(mix_seed(seed, 0x524944));
  const double pitch = gel.pixel_pitch_mm();
  const double margin = 3.0;
  const int cols = static_cast<int>(std::ceil((gel.width_mm + 2.0 * margin) / pitch)) | 1;
  const int rows = static_cast<int>(std::ceil((gel.height_mm + 2.0 * margin) / pitch)) | 1;

  const double base_radius = rng.uniform(params.min_base_radius_mm, params.max_base_radius_mm);
  const double amplitude = rng.uniform(params.min_amplitude_mm, params.max_amplitude_mm);
  const double sharpness = rng.uniform(params.min_sharpness, params.max_sharpness);
  struct Wave {
    double cx, cy, wavelength, phase;
  };
  std::vector<Wave> waves;
  for (int k = 0; k < params.waves; ++k) {
    const double angle = rng.uniform(0.0, std::numbers::pi);
    waves.push_back(Wave{std::cos(angle), std::sin(angle),
                         rng.uniform(params.min_wavelength_mm, params.max_wavelength_mm),
                         rng.uniform(0.0, std::numbers::pi)});
  }

  HeightField hf;
  hf.pitch_mm = pitch;
  hf.heights_mm = Grid(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const double y = (r - 0.5 * (rows - 1)) * pitch;
    for (int c = 0; c < cols; ++c) {
      const double x = (c - 0.5 * (cols - 1)) * pitch;
      double ridge = 0.0;
      for (const Wave& w : waves) {
        const double u = x * w.cx + y * w.cy;
        ridge +=
            std::pow(std::abs(std::cos(std::numbers::pi * u / w.wavelength + w.phase)), sharpness);
      }
      ridge /= static_cast<double>(waves.size());
      hf.heights_mm(r, c) = (x * x + y * y) / (2.0 * base_radius) + amplitude * (1.0 - ridge);
    }
  }
  return IndenterShape{hf, {}};
}

IndenterShape make_frustum_indenter(double top_radius_mm, double side_slope, const GelSpec& gel) {
  const double pitch = gel.pixel_pitch_mm();
  const double margin = 3.0;
  const int cols = static_cast<int>(std::ceil((gel.width_mm + 2.0 * margin) / pitch)) | 1;
  const int rows = static_cast<int>(std::ceil((gel.height_mm + 2.0 * margin) / pitch)) | 1;
  HeightField hf;
  hf.pitch_mm = pitch;
  hf.heights_mm = Grid(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double rad = std::hypot((c - 0.5 * (cols - 1)) * pitch, (r - 0.5 * (rows - 1)) * pitch);
      hf.heights_mm(r, c) = std::max(0.0, rad - top_radius_mm) * side_slope;
    }
  }
  return IndenterShape{hf, {}};
}

}  // namespace gelhard
