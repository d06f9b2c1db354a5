#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "gelhard/error.hpp"
#include "gelhard/pipeline.hpp"

using namespace gelhard;

namespace {

std::vector<double> ramp(int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(static_cast<double>(i) / (n - 1));
  return v;
}

// Nearest frame to each quartile target by brute force, ties to the smaller index.
std::array<int, 3> nearest_targets(const std::vector<double>& s, int start, int end) {
  std::array<int, 3> out{};
  for (int k = 1; k <= 3; ++k) {
    const double target = s[start] + (s[end] - s[start]) * k / 4.0;
    int best = -1;
    for (int i = start; i <= end; ++i) {
      if (best < 0 || std::abs(s[i] - target) < std::abs(s[best] - target)) best = i;
    }
    out[k - 1] = best;
  }
  return out;
}

void check_well_formed(const ClipIndices& idx, int start, int end) {
  CHECK(idx.front() == start);
  CHECK(idx.back() == end);
  for (int k = 1; k < kClipLength; ++k) CHECK(idx[k] > idx[k - 1]);
}

PressSequence press(std::uint64_t seed, const IndenterShape& shape, double hardness) {
  return synth_sequence(shape, Shore00(hardness), human_press_profile(seed), SensorModel{});
}

double tau() { return default_start_threshold(0.01, 0.001); }

}  // namespace

TEST_CASE("find_start") {
  CHECK(find_start(std::vector<double>{0, 0, 0.2, 0.5}, 0.1) == 2);
  CHECK_THROWS_AS(find_start(std::vector<double>{0, 0, 0, 0}, 0.1), NoContactError);
  CHECK(find_start(std::vector<double>{0, 0.01, 0.02, 0.5}, 0.0) == 1);
  // strict inequality
  CHECK(find_start(std::vector<double>{0, 0.1, 0.2}, 0.1) == 2);
}

TEST_CASE("find_end") {
  CHECK(find_end(std::vector<double>{0, .3, .5, .5, .4}) == 3);
  CHECK(find_end(ramp(9)) == 8);
  CHECK(find_end(std::vector<double>{0.2}) == 0);
  CHECK_THROWS_AS(find_end(std::vector<double>{}), DomainError);
}

TEST_CASE("linear ramp selects evenly spaced frames") {
  const std::vector<double> s = ramp(21);
  const ClipIndices idx = select_indices(s, 0, 20);
  CHECK(idx == ClipIndices{0, 5, 10, 15, 20});
  std::vector<double> padded(3, 0.0);
  for (double v : s) padded.push_back(v);
  CHECK(select_indices(padded, 3, 23) == ClipIndices{3, 8, 13, 18, 23});
}

TEST_CASE("five-frame loading uses every frame") {
  CHECK(select_indices(std::vector<double>{0.0, 0.01, 0.02, 0.9, 1.0}, 0, 4) ==
        ClipIndices{0, 1, 2, 3, 4});
  CHECK(select_indices(std::vector<double>{0.0, 0.7, 0.8, 0.9, 1.0}, 0, 4) ==
        ClipIndices{0, 1, 2, 3, 4});
}

TEST_CASE("too few frames or no rise is rejected") {
  CHECK_THROWS_AS(select_indices(ramp(4), 0, 3), ClipTooShortError);
  CHECK_THROWS_AS(select_indices(ramp(10), 5, 5), ClipTooShortError);
  CHECK_THROWS_AS(select_indices(std::vector<double>(8, 0.3), 0, 7), ClipTooShortError);
  CHECK_THROWS_AS(select_indices(ramp(10), 0, 10), ClipTooShortError);
}

TEST_CASE("convex curve skews middle frames late and matches the exhaustive search") {
  std::vector<double> s;
  for (int i = 0; i < 26; ++i) s.push_back(std::pow(i / 25.0, 3.0));
  const ClipIndices idx = select_indices(s, 0, 25);
  const std::array<int, 3> oracle = nearest_targets(s, 0, 25);
  CHECK(idx[1] == oracle[0]);
  CHECK(idx[2] == oracle[1]);
  CHECK(idx[3] == oracle[2]);
  CHECK(idx[2] > 12);
}

TEST_CASE("selection agrees with brute force on random monotone series") {
  Rng rng(2024);
  int agreed = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = rng.uniform_int(5, 40);
    std::vector<double> s{0.0};
    for (int i = 1; i < n; ++i) s.push_back(s.back() + std::pow(rng.uniform(), 3.0));
    const int start = rng.uniform_int(0, n - 5);
    const int end = rng.uniform_int(start + 4, n - 1);
    if (!(s[end] > s[start])) continue;
    const ClipIndices idx = select_indices(s, start, end);
    check_well_formed(idx, start, end);
    const std::array<int, 3> oracle = nearest_targets(s, start, end);
    const bool distinct =
        oracle[0] > start && oracle[0] < oracle[1] && oracle[1] < oracle[2] && oracle[2] < end;
    if (distinct) {
      CHECK(idx[1] == oracle[0]);
      CHECK(idx[2] == oracle[1]);
      CHECK(idx[3] == oracle[2]);
      ++agreed;
    }
  }
  CHECK(agreed > 500);
}

TEST_CASE("clips subtract the start frame") {
  const PressSequence seq = press(8, IndenterShape{Sphere{10.0}, {}}, 50);
  const ClipIndices idx = standard_indices(seq.intensity_series, tau());
  const SelectedClip clip = select_five(seq, idx.front(), idx.back());
  CHECK(clip.source_indices == idx);
  CHECK(clip.endpoint_index == idx.back());
  for (int k = 0; k < kClipLength; ++k) {
    const TactileFrame& raw = seq.frames[idx[k]];
    const TactileFrame& base = seq.frames[idx[0]];
    for (std::size_t i = 0; i < raw.rgb.size(); ++i) {
      CHECK(clip.frames[k].rgb[i] == raw.rgb[i] - base.rgb[i]);
      CHECK(clip.frames[k].rgb[i] >= -1.0f);
      CHECK(clip.frames[k].rgb[i] <= 1.0f);
    }
  }
  for (float v : clip.frames[0].rgb) CHECK(v == 0.0f);
}

TEST_CASE("a sequence without deformation gives an all-zero clip") {
  const GelSpec spec;
  const TactileFrame flat = flat_frame(spec, default_light_rig());
  const std::vector<TactileFrame> frames(7, flat);
  const SelectedClip clip = make_clip(frames, ClipIndices{0, 2, 3, 5, 6});
  for (const TactileFrame& f : clip.frames) {
    for (float v : f.rgb) CHECK(v == 0.0f);
  }
}

TEST_CASE("start threshold sits just above the noise floor") {
  const GelSpec spec;
  const TactileFrame flat = flat_frame(spec, default_light_rig());
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    TactileFrame a = flat;
    TactileFrame b = flat;
    add_noise(a, 0.01, rng);
    add_noise(b, 0.01, rng);
    quantize_8bit(a);
    quantize_8bit(b);
    const double change = mean_intensity_change(b, a);
    CHECK(change == doctest::Approx(2 * 0.01 / std::sqrt(std::numbers::pi)).epsilon(0.05));
    worst = std::max(worst, change);
  }
  CHECK(worst < tau());
}

TEST_CASE("gripper press ends at the force stop frame") {
  SensorModel sensor;
  sensor.render.noise_sigma = 0.0;
  sensor.render.quantize = false;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const PressProfile p = robot_press_profile(seed, sensor.sim);
    const IndenterShape shape{Sphere{10.0}, {}};
    const ElasticBody obj = shore00_to_modulus(Shore00(30 + 15 * seed));
    const PressSequence seq = synth_sequence(shape, Shore00(30 + 15 * seed), p, sensor);
    const ElasticBody gel = shore00_to_modulus(sensor.gel.hardness);
    const double limit = saturation_approach(gel_share(gel, obj), sensor.gel);
    int stop = -1;
    for (std::size_t t = 1; t < p.delta_of_t.size() && p.delta_of_t[t] <= limit; ++t) {
      if (contact_for_shape(shape, gel, obj, sensor.gel, p.delta_of_t[t]).force_n >=
          p.max_force_n) {
        stop = static_cast<int>(t);
        break;
      }
    }
    if (stop < 0) {
      CHECK(seq.saturated);
      stop = static_cast<int>(seq.frames.size()) - 1;
    }
    CHECK(find_end(seq) == stop);
  }
}

TEST_CASE("truncation endpoints") {
  SUBCASE("faint press gives none") {
    CHECK(
        truncate_endpoints(std::vector<double>{0, 0.005, 0.013, 0.014, 0.015, 0.016, 0.018}, tau())
            .empty());
    CHECK(truncate_endpoints(std::vector<double>(10, 0.0), tau()).empty());
  }
  SUBCASE("monotone press") {
    const PressSequence seq = press(21, IndenterShape{Sphere{20.0}, {}}, 40);
    const std::vector<double>& s = seq.intensity_series;
    const int start = find_start(seq, tau());
    int expected = 0;
    for (int e = start + 4; e < static_cast<int>(s.size()); ++e) expected += s[e] >= 2 * tau();
    const auto ends = truncate_endpoints(seq, tau());
    CHECK(static_cast<int>(ends.size()) <= expected);
    CHECK(static_cast<int>(ends.size()) >= expected - 2);
    CHECK(ends.size() >= 12);
    for (const auto& [st, e] : ends) {
      CHECK(st == start);
      CHECK(e > start + 3);
      CHECK(s[e] >= 2 * tau());
    }
  }
}

TEST_CASE("a truncated clip equals the clip of the press stopped at that frame") {
  for (std::uint64_t seed = 30; seed < 34; ++seed) {
    const IndenterShape shape{Cylinder{10.0, 0.5}, {}};
    const PressProfile full_profile = human_press_profile(seed);
    const PressSequence full = synth_sequence(shape, Shore00(60), full_profile, SensorModel{});
    for (const auto& [start, e] : truncate_endpoints(full, tau())) {
      PressProfile shorter = full_profile;
      shorter.force_fraction.resize(static_cast<std::size_t>(e) + 1);
      const PressSequence cut = synth_sequence(shape, Shore00(60), shorter, SensorModel{});
      const ClipIndices a = indices_for_endpoint(full.intensity_series, start, e);
      const ClipIndices b = standard_indices(cut.intensity_series, tau());
      CHECK(a == b);
      const SelectedClip ca = make_clip(full.frames, a);
      const SelectedClip cb = make_clip(cut.frames, b);
      for (int k = 0; k < kClipLength; ++k) CHECK(ca.frames[k] == cb.frames[k]);
    }
  }
}

TEST_CASE("doubling the frame rate moves selected intensities by at most one step") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const PressSequence seq = press(seed, IndenterShape{Sphere{5.0}, {}}, 25 + 7 * seed);
    const std::vector<double>& s = seq.intensity_series;
    std::vector<double> twice;
    for (double v : s) {
      twice.push_back(v);
      twice.push_back(v);
    }
    double step = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) step = std::max(step, std::abs(s[i] - s[i - 1]));
    const ClipIndices a = standard_indices(s, tau());
    const ClipIndices b = standard_indices(twice, tau());
    for (int k = 0; k < kClipLength; ++k) {
      CHECK(std::abs(twice[b[k]] - s[a[k]]) <= step + 1e-15);
    }
  }
}
