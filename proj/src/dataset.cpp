#include "gelhard/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "gelhard/error.hpp"
#include "gelhard/rng.hpp"

namespace gelhard {

namespace {

std::string padded_id(const std::string& set, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05d", index);
  return set + "-" + buf;
}

GroupTag shape_group(const ShapeSpec& s) {
  return s.family == "sphere" || s.family == "cylinder" ? GroupTag::kBasic : GroupTag::kSimpleShape;
}

std::uint64_t item_seed(std::uint64_t seed, std::uint64_t set_code, int level, int shape, int k) {
  const std::uint64_t key = (set_code << 48) | (static_cast<std::uint64_t>(level) << 32) |
                            (static_cast<std::uint64_t>(shape + 1) << 16) |
                            static_cast<std::uint64_t>(k);
  return mix_seed(seed, key);
}

}  // namespace

std::vector<double> hardness_levels(const DatasetConfig& cfg) {
  std::vector<double> out;
  if (cfg.levels <= 0) return out;
  if (cfg.levels == 1) return {cfg.min_hardness};
  for (int i = 0; i < cfg.levels; ++i) {
    out.push_back(cfg.min_hardness + (cfg.max_hardness - cfg.min_hardness) * i / (cfg.levels - 1));
  }
  return out;
}

std::vector<ShapeSpec> shape_grid(const DatasetConfig& cfg) {
  std::vector<ShapeSpec> out;
  for (double r : cfg.sphere_radii) out.push_back({"sphere", r});
  for (double r : cfg.cylinder_radii) out.push_back({"cylinder", r});
  if (cfg.include_flat) out.push_back({"flat", 0.0});
  if (cfg.include_edge) out.push_back({"edge", 0.0});
  if (cfg.include_corner) out.push_back({"corner", 0.0});
  return out;
}

std::vector<GenItem> generation_plan(const DatasetConfig& cfg) {
  if (cfg.levels < 0 || cfg.seeds_per_cell < 0 || cfg.robot_seeds_per_cell < 0 ||
      cfg.complex_test_per_level < 0) {
    throw ConfigError("dataset counts must be non-negative");
  }
  if (!(cfg.mix_fraction >= 0.0 && cfg.mix_fraction <= 1.0)) {
    throw ConfigError("mix_fraction must lie in [0, 1]");
  }
  const std::vector<double> levels = hardness_levels(cfg);
  for (double h : levels) {
    if (!(h >= 0.0 && h <= 100.0)) throw ConfigError("hardness levels must lie in [0, 100]");
  }
  const std::vector<ShapeSpec> shapes = shape_grid(cfg);
  const int n_mix = static_cast<int>(std::lround(cfg.seeds_per_cell * cfg.mix_fraction));
  const int n_bad = n_mix / 2;
  const int first_mixed = cfg.seeds_per_cell - n_mix;

  std::vector<GenItem> plan;
  auto add = [&](const std::string& set, int& counter, double h, int shape_index,
                 const std::string& family, double radius, GroupTag group, ProfileKind profile,
                 std::uint64_t seed) {
    GenItem item;
    item.hardness = h;
    item.shape_index = shape_index;
    SequenceRecord& r = item.record;
    r.id = padded_id(set, counter++);
    r.set = set;
    r.label = h;
    r.shape_family = family;
    r.shape_radius_mm = radius;
    r.shape_tag = family;
    if (radius > 0.0) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "_r%g", radius);
      r.shape_tag += buf;
    }
    r.group = group;
    r.profile = profile;
    r.seed = seed;
    r.frame_dir = r.id;
    plan.push_back(std::move(item));
  };

  int main_counter = 0;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    for (std::size_t si = 0; si < shapes.size(); ++si) {
      const ShapeSpec& s = shapes[si];
      for (int k = 0; k < cfg.seeds_per_cell; ++k) {
        const std::uint64_t seed =
            item_seed(cfg.seed, 1, static_cast<int>(li), static_cast<int>(si), k);
        if (k < first_mixed) {
          add(kMainSet, main_counter, levels[li], static_cast<int>(si), s.family, s.radius_mm,
              shape_group(s), ProfileKind::kHuman, seed);
        } else if (k < first_mixed + n_bad) {
          add(kMainSet, main_counter, levels[li], static_cast<int>(si), s.family, s.radius_mm,
              GroupTag::kBadContact, ProfileKind::kHuman, seed);
        } else {
          add(kMainSet, main_counter, levels[li], -1, "heightfield", 0.0, GroupTag::kComplexShape,
              ProfileKind::kHuman, seed);
        }
      }
    }
  }
  int robot_counter = 0;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    for (std::size_t si = 0; si < shapes.size(); ++si) {
      const ShapeSpec& s = shapes[si];
      for (int k = 0; k < cfg.robot_seeds_per_cell; ++k) {
        add(kRobotSet, robot_counter, levels[li], static_cast<int>(si), s.family, s.radius_mm,
            shape_group(s), ProfileKind::kRobot,
            item_seed(cfg.seed, 2, static_cast<int>(li), static_cast<int>(si), k));
      }
    }
  }
  int complex_counter = 0;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    for (int k = 0; k < cfg.complex_test_per_level; ++k) {
      add(kComplexTestSet, complex_counter, levels[li], -1, "heightfield", 0.0,
          GroupTag::kComplexShape, ProfileKind::kHuman,
          item_seed(cfg.seed, 3, static_cast<int>(li), -1, k));
    }
  }
  return plan;
}

IndenterShape make_shape(const GenItem& item, const DatasetConfig& cfg, const GelSpec& gel) {
  Rng rng(mix_seed(item.record.seed, 0x5348415045));
  const double axis = rng.uniform(0.0, std::numbers::pi);
  const SurfaceTexture texture{cfg.texture_amplitude_mm, cfg.texture_period_mm,
                               rng.uniform(0.0, std::numbers::pi)};
  if (item.shape_index < 0) {
    const RidgeParams& ridges =
        item.record.set == kComplexTestSet ? cfg.test_ridges : cfg.train_ridges;
    IndenterShape shape = make_ridged_indenter(mix_seed(item.record.seed, 0x52494447), ridges, gel);
    shape.texture = texture;
    return shape;
  }
  const std::vector<ShapeSpec> shapes = shape_grid(cfg);
  if (item.shape_index >= static_cast<int>(shapes.size())) {
    throw ConfigError("shape index outside the configured shape grid");
  }
  const ShapeSpec& s = shapes[static_cast<std::size_t>(item.shape_index)];
  IndenterShape shape;
  shape.texture = texture;
  if (s.family == "sphere") {
    shape.geometry = Sphere{s.radius_mm};
  } else if (s.family == "cylinder") {
    shape.geometry = Cylinder{s.radius_mm, axis};
  } else if (s.family == "flat") {
    shape.geometry = Flat{};
  } else if (s.family == "edge") {
    Edge e;
    e.axis_angle_rad = axis;
    shape.geometry = e;
  } else {
    shape.geometry = Corner{};
  }
  return shape;
}

PressSequence synth_item(const GenItem& item, const DatasetConfig& cfg, const SensorModel& sensor) {
  const SequenceRecord& r = item.record;
  PressProfile profile;
  if (r.profile == ProfileKind::kRobot) {
    profile = robot_press_profile(r.seed, sensor.sim);
  } else if (r.group == GroupTag::kBadContact) {
    profile = bad_contact_profile(r.seed, sensor.sim);
  } else {
    profile = human_press_profile(r.seed, sensor.sim);
  }
  return synth_sequence(make_shape(item, cfg, sensor.gel), Shore00(item.hardness), profile, sensor,
                        r.group);
}

// ---------------------------------------------------------------------------
// Store

std::vector<std::uint8_t> frame_to_bytes(const TactileFrame& frame) {
  std::vector<std::uint8_t> out(frame.rgb.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = std::clamp(static_cast<double>(frame.rgb[i]), 0.0, 1.0);
    out[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return out;
}

TactileFrame frame_from_bytes(const std::vector<std::uint8_t>& bytes, int rows, int cols) {
  TactileFrame f(rows, cols);
  if (f.rgb.size() != bytes.size()) throw DataError("frame byte count does not match its size");
  for (std::size_t i = 0; i < bytes.size(); ++i) f.rgb[i] = static_cast<float>(bytes[i] / 255.0);
  return f;
}

SelectedClip StoredSequence::clip(const ClipIndices& indices) const {
  std::vector<TactileFrame> picked;
  for (int idx : indices) {
    const auto it = std::lower_bound(kept_indices.begin(), kept_indices.end(), idx);
    if (it == kept_indices.end() || *it != idx) {
      throw DomainError("frame " + std::to_string(idx) + " of '" + record.id + "' was not kept");
    }
    picked.push_back(
        frame_from_bytes(frames[static_cast<std::size_t>(it - kept_indices.begin())], rows, cols));
  }
  SelectedClip c = make_clip(picked, ClipIndices{0, 1, 2, 3, 4});
  c.source_indices = indices;
  c.endpoint_index = indices.back();
  return c;
}

SelectedClip StoredSequence::standard_clip() const {
  return clip(select_indices(intensity, start, end));
}

StoredSequence store_sequence(const SequenceRecord& record, const std::vector<TactileFrame>& frames,
                              double tau, FrameKeep keep) {
  if (frames.empty()) throw ClipTooShortError("sequence '" + record.id + "' has no frames");
  StoredSequence s;
  s.record = record;
  s.record.frame_count = static_cast<int>(frames.size());
  s.rows = frames.front().rows;
  s.cols = frames.front().cols;
  for (const TactileFrame& f : frames)
    s.intensity.push_back(mean_intensity_change(f, frames.front()));
  s.start = find_start(s.intensity, tau);
  s.end = find_end(s.intensity);
  const ClipIndices standard = select_indices(s.intensity, s.start, s.end);
  if (keep == FrameKeep::kStandardClip) {
    s.kept_indices.assign(standard.begin(), standard.end());
  } else {
    for (int i = s.start; i <= s.end; ++i) s.kept_indices.push_back(i);
  }
  for (int i : s.kept_indices)
    s.frames.push_back(frame_to_bytes(frames[static_cast<std::size_t>(i)]));
  return s;
}

}  // namespace gelhard
