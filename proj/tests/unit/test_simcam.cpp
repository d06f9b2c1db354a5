#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "gelhard/error.hpp"
#include "gelhard/simcam.hpp"

using namespace gelhard;

namespace {

SensorModel clean_sensor() {
  SensorModel s;
  s.render.noise_sigma = 0.0;
  s.render.quantize = false;
  return s;
}

// Gripper-style press that ramps to `depth` and never reaches its force stop.
PressProfile displacement_profile(double depth, int frames) {
  PressProfile p;
  p.kind = ProfileKind::kRobot;
  p.max_force_n = 1e9;
  p.seed = 11;
  for (int t = 0; t < frames; ++t) p.delta_of_t.push_back(depth * t / (frames - 1));
  return p;
}

}  // namespace

TEST_CASE("profiles are reproducible from the seed") {
  const PressProfile a = human_press_profile(42);
  const PressProfile b = human_press_profile(42);
  CHECK(a.force_fraction == b.force_fraction);
  CHECK(a.max_force_n == b.max_force_n);
  CHECK(a.tilt_rad == b.tilt_rad);
  CHECK(human_press_profile(43).force_fraction != a.force_fraction);
  CHECK(robot_press_profile(5).delta_of_t == robot_press_profile(5).delta_of_t);
  CHECK(bad_contact_profile(5).tilt_rad == bad_contact_profile(5).tilt_rad);
}

TEST_CASE("human profiles over 1000 seeds stay inside the configured ranges") {
  const SimConfig cfg;
  std::set<int> lengths;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const PressProfile p = human_press_profile(seed, cfg);
    CHECK(p.kind == ProfileKind::kHuman);
    CHECK(p.frame_count() >= 20);
    CHECK(p.frame_count() <= 30);
    lengths.insert(p.frame_count());
    CHECK(p.tilt_rad >= 0.0);
    CHECK(p.tilt_rad <= cfg.human_max_tilt_rad);
    CHECK(p.lateral_drift_mm_per_s <= cfg.human_max_drift_mm_per_s);
    CHECK(p.max_force_n >= cfg.human_min_force_n);
    CHECK(p.max_force_n <= cfg.human_max_force_n);
    CHECK(p.force_fraction.front() == 0.0);
    CHECK(p.force_fraction.back() == 1.0);
    CHECK(std::is_sorted(p.force_fraction.begin(), p.force_fraction.end()));
  }
  CHECK(lengths.size() == 11u);
}

TEST_CASE("bad-contact profiles break at least one good-contact bound") {
  const SimConfig cfg;
  int tilted = 0;
  int drifting = 0;
  int offset = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const PressProfile p = bad_contact_profile(seed, cfg);
    CHECK(p.tilt_rad <= 0.35);
    CHECK(p.frame_count() >= 20);
    CHECK(p.frame_count() <= 30);
    const double r = std::hypot(p.offset_x_mm, p.offset_y_mm);
    const bool t = p.tilt_rad >= cfg.bad_min_tilt_rad;
    const bool d = p.lateral_drift_mm_per_s >= cfg.bad_min_drift_mm_per_s;
    const bool o = r >= cfg.bad_min_offset_mm;
    CHECK((t || d || o));
    tilted += t;
    drifting += d;
    offset += o;
  }
  CHECK(tilted > 50);
  CHECK(drifting > 50);
  CHECK(offset > 50);
}

TEST_CASE("robot profiles use the gripper speed and force intervals") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const PressProfile p = robot_press_profile(seed);
    CHECK(p.speed_mm_per_s >= 5.0);
    CHECK(p.speed_mm_per_s <= 7.0);
    CHECK(p.max_force_n >= 5.0);
    CHECK(p.max_force_n <= 9.0);
    CHECK(p.tilt_rad == 0.0);
    CHECK(p.lateral_drift_mm_per_s == 0.0);
  }
}

TEST_CASE("robot press on a rigid flat stops at the first frame over the force threshold") {
  SensorModel sensor;
  PressProfile p = robot_press_profile(9, sensor.sim);
  p.speed_mm_per_s = 6.0;
  for (std::size_t t = 0; t < p.delta_of_t.size(); ++t) p.delta_of_t[t] = 6.0 * t / 30.0;
  const ElasticBody rigid{1e15, 0.49};
  const IndenterShape flat{Flat{}, {}};
  bool saturated = true;
  const std::vector<double> d = loading_trajectory(flat, rigid, p, sensor, &saturated);
  CHECK_FALSE(saturated);
  for (std::size_t t = 1; t < d.size(); ++t)
    CHECK(d[t] - d[t - 1] == doctest::Approx(0.2).epsilon(1e-12));

  // Independent Hertz force for the gel dome against a rigid plane.
  const ElasticBody gel = shore00_to_modulus(sensor.gel.hardness);
  const double e_star_mpa = gel.youngs_modulus_pa / (1 - 0.49 * 0.49) * 1e-6;
  std::size_t stop = 0;
  for (std::size_t t = 0; t < p.delta_of_t.size(); ++t) {
    const double dt = p.delta_of_t[t];
    const double f =
        4.0 / 3.0 * e_star_mpa * std::sqrt(sensor.gel.dome_radius_mm) * std::pow(dt, 1.5);
    if (f >= p.max_force_n) {
      stop = t;
      break;
    }
  }
  REQUIRE(stop > 0);
  CHECK(d.size() == stop + 1);
}

TEST_CASE("zero-length press gives one flat frame") {
  PressProfile p = human_press_profile(3);
  p.force_fraction = {0.0};
  const PressSequence seq =
      synth_sequence(IndenterShape{Sphere{10.0}, {}}, Shore00(40), p, SensorModel{});
  REQUIRE(seq.frames.size() == 1);
  CHECK(seq.intensity_series == std::vector<double>{0.0});
}

TEST_CASE("sequence bookkeeping") {
  const PressProfile p = human_press_profile(17);
  const PressSequence seq = synth_sequence(IndenterShape{Cylinder{5.0, 0.2}, {}}, Shore00(30), p,
                                           SensorModel{}, GroupTag::kBasic);
  CHECK(static_cast<int>(seq.frames.size()) == p.frame_count());
  CHECK(seq.intensity_series.size() == seq.frames.size());
  CHECK(seq.intensity_series.front() == 0.0);
  CHECK(seq.label == Shore00(30));
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    CHECK(seq.intensity_series[t] == mean_intensity_change(seq.frames[t], seq.frames.front()));
  }
  CHECK(std::is_sorted(seq.approach_mm.begin(), seq.approach_mm.end()));
}

TEST_CASE("generation is deterministic") {
  const PressProfile p = bad_contact_profile(99);
  const IndenterShape shape{Edge{}, SurfaceTexture{0.03, 1.2, 1.0}};
  const PressSequence a = synth_sequence(shape, Shore00(55), p, SensorModel{});
  const PressSequence b = synth_sequence(shape, Shore00(55), p, SensorModel{});
  CHECK(a.frames == b.frames);
  CHECK(a.intensity_series == b.intensity_series);
}

TEST_CASE("at equal displacement the harder object gives the larger final intensity change") {
  const SensorModel sensor;
  const PressProfile p = displacement_profile(1.0, 25);
  for (const IndenterShape& shape :
       {IndenterShape{Sphere{10.0}, {}}, IndenterShape{Cylinder{20.0, 0.0}, {}},
        IndenterShape{Corner{}, {}}}) {
    CAPTURE(shape_tag(shape));
    const PressSequence soft = synth_sequence(shape, Shore00(10), p, sensor);
    const PressSequence hard = synth_sequence(shape, Shore00(80), p, sensor);
    REQUIRE(soft.frames.size() == 25);
    REQUIRE(hard.frames.size() == 25);
    CHECK(hard.intensity_series.back() > soft.intensity_series.back());
  }
}

TEST_CASE("noise-free loading gives a nondecreasing intensity series") {
  SensorModel sensor = clean_sensor();
  for (bool markers : {false, true}) {
    sensor.render.markers = markers;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      for (const IndenterShape& shape :
           {IndenterShape{Sphere{5.0}, {}}, IndenterShape{Sphere{40.0}, {}},
            IndenterShape{Flat{}, {}}, IndenterShape{Edge{}, {}}}) {
        PressProfile p = human_press_profile(seed, sensor.sim);
        p.lateral_drift_mm_per_s = 0.0;
        CAPTURE(markers);
        CAPTURE(seed);
        CAPTURE(shape_tag(shape));
        const PressSequence seq = synth_sequence(shape, Shore00(20 + 10 * seed), p, sensor);
        const ElasticBody gel = shore00_to_modulus(sensor.gel.hardness);
        const ElasticBody obj = shore00_to_modulus(Shore00(20 + 10 * seed));
        for (std::size_t t = 1; t < seq.intensity_series.size(); ++t) {
          const double a =
              contact_for_shape(shape, gel, obj, sensor.gel, seq.approach_mm[t]).contact_radius_mm;
          // Once the patch spills past the sensor edge, markers pushed out of
          // view can lower the series by a hair.
          const bool spills = a > 0.5 * sensor.gel.height_mm;
          const double slack = markers && spills ? 1e-3 * seq.intensity_series[t - 1] : 0.0;
          CHECK(seq.intensity_series[t] >= seq.intensity_series[t - 1] - slack);
        }
      }
    }
  }
}

TEST_CASE("tilted contact shifts the patch centroid by tan(tilt) times the gel thickness") {
  SensorModel sensor = clean_sensor();
  sensor.render.markers = false;
  PressProfile p = displacement_profile(0.8, 5);
  p.tilt_rad = 0.3;
  p.tilt_azimuth_rad = 0.0;
  const PressSequence seq = synth_sequence(IndenterShape{Sphere{20.0}, {}}, Shore00(60), p, sensor);
  const TactileFrame& last = seq.frames.back();
  const TactileFrame& ref = seq.frames.front();
  const GelSpec& g = sensor.gel;
  const double pitch = g.pixel_pitch_mm();
  double w = 0.0;
  double mx = 0.0;
  double my = 0.0;
  for (int r = 0; r < last.rows; ++r) {
    for (int c = 0; c < last.cols; ++c) {
      double v = 0.0;
      for (int ch = 0; ch < 3; ++ch) v += std::abs(last.at(r, c, ch) - ref.at(r, c, ch));
      w += v;
      mx += v * ((c + 0.5) * pitch - 0.5 * g.width_mm);
      my += v * ((r + 0.5) * pitch - 0.5 * g.height_mm);
    }
  }
  const double expected = std::tan(0.3) * g.thickness_mm;
  CHECK(mx / w == doctest::Approx(expected).epsilon(0.2));
  CHECK(std::abs(my / w) < 0.2 * expected);
}

TEST_CASE("hand-held presses stop short of bottoming out the gel") {
  const SensorModel sensor;
  PressProfile p = human_press_profile(4, sensor.sim);
  p.max_force_n = 1e4;
  const ElasticBody obj = shore00_to_modulus(Shore00(85));
  const IndenterShape shape{Sphere{40.0}, {}};
  bool saturated = false;
  const std::vector<double> d = loading_trajectory(shape, obj, p, sensor, &saturated);
  CHECK(saturated);
  const ElasticBody gel = shore00_to_modulus(sensor.gel.hardness);
  CHECK(d.back() <= saturation_approach(gel_share(gel, obj), sensor.gel));
  CHECK_NOTHROW(synth_sequence(shape, Shore00(85), p, sensor));
}

TEST_CASE("ridged indenters") {
  const GelSpec gel;
  const RidgeParams params;
  const IndenterShape a = make_ridged_indenter(5, params, gel);
  const IndenterShape b = make_ridged_indenter(5, params, gel);
  CHECK(std::get<HeightField>(a.geometry).heights_mm.data ==
        std::get<HeightField>(b.geometry).heights_mm.data);
  CHECK_NOTHROW(validate(a));
  CHECK(shape_family(a) == "heightfield");
  const ElasticBody g = shore00_to_modulus(gel.hardness);
  CHECK(contact_for_shape(a, g, shore00_to_modulus(Shore00(50)), gel, 0.5).force_n > 0.0);
}

TEST_CASE("group and profile names round-trip") {
  for (GroupTag t :
       {GroupTag::kBasic, GroupTag::kBadContact, GroupTag::kSimpleShape, GroupTag::kComplexShape}) {
    CHECK(group_tag_from_string(to_string(t)) == t);
  }
  CHECK(profile_kind_from_string("robot") == ProfileKind::kRobot);
  CHECK_THROWS_AS(group_tag_from_string("nope"), DataError);
}
