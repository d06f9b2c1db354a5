#pragma once

// Image formation for a gel-based tactile sensor: height map -> normals ->
// Lambertian shading under three coloured lights, then black markers and
// sensor noise.

#include <array>
#include <cstdint>
#include <vector>

#include "gelhard/mechanics.hpp"
#include "gelhard/rng.hpp"

namespace gelhard {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct NormalMap {
  int rows = 0;
  int cols = 0;
  std::vector<Vec3> normals;

  const Vec3& operator()(int r, int c) const {
    return normals[static_cast<std::size_t>(r) * cols + c];
  }
};

/// Interleaved RGB image, channels in [0, 1].
struct TactileFrame {
  int rows = 0;
  int cols = 0;
  std::vector<float> rgb;

  TactileFrame() = default;
  TactileFrame(int r, int c, float fill = 0.0f)
      : rows(r), cols(c), rgb(static_cast<std::size_t>(r) * c * 3, fill) {}

  float& at(int r, int c, int ch) { return rgb[(static_cast<std::size_t>(r) * cols + c) * 3 + ch]; }
  float at(int r, int c, int ch) const {
    return rgb[(static_cast<std::size_t>(r) * cols + c) * 3 + ch];
  }
  friend bool operator==(const TactileFrame&, const TactileFrame&) = default;
};

struct Light {
  Vec3 direction;  // unit vector from the surface towards the light
  std::array<double, 3> color{};
};

struct LightRig {
  std::array<Light, 3> lights{};
  std::array<double, 3> ambient{};
  double gain = 0.6;
};

/// Red, green and blue lights 120 degrees apart in azimuth at the given
/// elevation. Ambient is chosen so a flat gel renders as 0.5 grey.
LightRig default_light_rig(double elevation_rad = 0.5235987755982988, double gain = 0.6);

struct MarkerGrid {
  std::vector<Point2> rest_positions;  // mm, relative to the image centre
  double dot_radius_mm = 0.25;
};

/// Square lattice at the gel's marker pitch, centred in the sensing area.
MarkerGrid make_marker_grid(const GelSpec& spec, double dot_radius_mm = 0.25);

struct RenderConfig {
  LightRig rig = default_light_rig();
  bool markers = true;
  double marker_beta = 0.3;
  double dot_radius_mm = 0.25;
  double noise_sigma = 0.01;
  bool quantize = true;
};

NormalMap normals_from_height(const HeightMap& height);

TactileFrame shade(const NormalMap& normals, const LightRig& rig);

/// Pre-clamp shading, interleaved RGB.
std::vector<double> shade_unclamped(const NormalMap& normals, const LightRig& rig);

/// Frame of an undeformed gel (no markers, no noise).
TactileFrame flat_frame(const GelSpec& spec, const LightRig& rig);

/// Radial marker displacement u(r) = beta * share * d * (r/a) * exp(1 - (r/a)^2).
double marker_displacement(double r_mm, const ContactState& state, double beta);

std::vector<Point2> advect_markers(const MarkerGrid& grid, const ContactState& state,
                                   const IndenterShape& shape, const ContactPose& pose = {},
                                   double beta = 0.3);

/// Draws anti-aliased black dots over `frame`.
void rasterize_markers(TactileFrame& frame, const std::vector<Point2>& positions,
                       double dot_radius_mm, const GelSpec& spec);

void add_noise(TactileFrame& frame, double sigma, Rng& rng);

/// Rounds every channel to the nearest multiple of 1/255.
void quantize_8bit(TactileFrame& frame);

/// Mean over pixels and channels of |frame - reference|.
double mean_intensity_change(const TactileFrame& frame, const TactileFrame& reference);

/// Full image formation for one contact state.
TactileFrame render_contact(const IndenterShape& shape, const ContactState& state,
                            const GelSpec& spec, const ContactPose& pose, const RenderConfig& cfg,
                            const MarkerGrid& markers, Rng& noise_rng);

}  // namespace gelhard
