#include "gelhard/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gelhard/error.hpp"

namespace gelhard {

LightRig default_light_rig(double elevation_rad, double gain) {
  LightRig rig;
  rig.gain = gain;
  const double ce = std::cos(elevation_rad);
  const double se = std::sin(elevation_rad);
  for (int k = 0; k < 3; ++k) {
    const double az = 2.0 * std::numbers::pi * k / 3.0;
    rig.lights[k].direction = Vec3{ce * std::cos(az), ce * std::sin(az), se};
    rig.lights[k].color = {0.0, 0.0, 0.0};
    rig.lights[k].color[k] = 1.0;
  }
  for (int ch = 0; ch < 3; ++ch) {
    double flat = 0.0;
    for (const Light& l : rig.lights) flat += gain * l.color[ch] * std::max(0.0, l.direction.z);
    rig.ambient[ch] = 0.5 - flat;
  }
  return rig;
}

MarkerGrid make_marker_grid(const GelSpec& spec, double dot_radius_mm) {
  MarkerGrid grid;
  grid.dot_radius_mm = dot_radius_mm;
  const double pitch = spec.marker_pitch_mm;
  const int nx = static_cast<int>(std::floor(spec.width_mm / pitch));
  const int ny = static_cast<int>(std::floor(spec.height_mm / pitch));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      grid.rest_positions.push_back(
          Point2{(i - 0.5 * (nx - 1)) * pitch, (j - 0.5 * (ny - 1)) * pitch});
    }
  }
  return grid;
}

NormalMap normals_from_height(const HeightMap& height) {
  const Grid& h = height.grid;
  NormalMap out;
  out.rows = h.rows;
  out.cols = h.cols;
  out.normals.resize(h.data.size());
  const double p = height.pitch_mm;
  for (int r = 0; r < h.rows; ++r) {
    for (int c = 0; c < h.cols; ++c) {
      double gx = 0.0;
      double gy = 0.0;
      if (h.cols > 1) {
        if (c == 0) {
          gx = (h(r, 1) - h(r, 0)) / p;
        } else if (c == h.cols - 1) {
          gx = (h(r, c) - h(r, c - 1)) / p;
        } else {
          gx = (h(r, c + 1) - h(r, c - 1)) / (2.0 * p);
        }
      }
      if (h.rows > 1) {
        if (r == 0) {
          gy = (h(1, c) - h(0, c)) / p;
        } else if (r == h.rows - 1) {
          gy = (h(r, c) - h(r - 1, c)) / p;
        } else {
          gy = (h(r + 1, c) - h(r - 1, c)) / (2.0 * p);
        }
      }
      const double inv = 1.0 / std::sqrt(gx * gx + gy * gy + 1.0);
      out.normals[static_cast<std::size_t>(r) * h.cols + c] = Vec3{-gx * inv, -gy * inv, inv};
    }
  }
  return out;
}

std::vector<double> shade_unclamped(const NormalMap& normals, const LightRig& rig) {
  std::vector<double> out(normals.normals.size() * 3);
  for (std::size_t i = 0; i < normals.normals.size(); ++i) {
    const Vec3& n = normals.normals[i];
    for (int ch = 0; ch < 3; ++ch) out[i * 3 + ch] = rig.ambient[ch];
    for (const Light& l : rig.lights) {
      const double lambert = std::max(0.0, dot(n, l.direction));
      for (int ch = 0; ch < 3; ++ch) out[i * 3 + ch] += rig.gain * l.color[ch] * lambert;
    }
  }
  return out;
}

TactileFrame shade(const NormalMap& normals, const LightRig& rig) {
  const std::vector<double> raw = shade_unclamped(normals, rig);
  TactileFrame frame(normals.rows, normals.cols);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    frame.rgb[i] = static_cast<float>(std::clamp(raw[i], 0.0, 1.0));
  }
  return frame;
}

TactileFrame flat_frame(const GelSpec& spec, const LightRig& rig) {
  HeightMap flat;
  flat.pitch_mm = spec.pixel_pitch_mm();
  flat.grid = Grid(spec.height_px, spec.width_px, 0.0);
  return shade(normals_from_height(flat), rig);
}

double marker_displacement(double r_mm, const ContactState& state, double beta) {
  const double a = state.contact_radius_mm;
  if (state.approach_mm <= 0.0 || a <= 0.0) return 0.0;
  const double rho = r_mm / a;
  return beta * state.gel_share * state.approach_mm * rho * std::exp(1.0 - rho * rho);
}

std::vector<Point2> advect_markers(const MarkerGrid& grid, const ContactState& state,
                                   const IndenterShape& shape, const ContactPose& pose,
                                   double beta) {
  // Line contacts push markers away from the contact line, the rest radially.
  bool line_contact = false;
  double axis = 0.0;
  if (const auto* c = std::get_if<Cylinder>(&shape.geometry)) {
    line_contact = true;
    axis = c->axis_angle_rad;
  } else if (const auto* e = std::get_if<Edge>(&shape.geometry)) {
    line_contact = true;
    axis = e->axis_angle_rad;
  }
  const double ax = std::cos(axis);
  const double ay = std::sin(axis);

  std::vector<Point2> out;
  out.reserve(grid.rest_positions.size());
  for (const Point2& p : grid.rest_positions) {
    double dx = p.x - pose.center_x_mm;
    double dy = p.y - pose.center_y_mm;
    if (line_contact) {
      const double along = dx * ax + dy * ay;
      dx -= along * ax;
      dy -= along * ay;
    }
    const double r = std::hypot(dx, dy);
    const double u = r > 0.0 ? marker_displacement(r, state, beta) : 0.0;
    if (u == 0.0) {
      out.push_back(p);
    } else {
      out.push_back(Point2{p.x + u * dx / r, p.y + u * dy / r});
    }
  }
  return out;
}

void rasterize_markers(TactileFrame& frame, const std::vector<Point2>& positions,
                       double dot_radius_mm, const GelSpec& spec) {
  const double pitch = spec.pixel_pitch_mm();
  const double radius_px = dot_radius_mm / pitch;
  for (const Point2& p : positions) {
    // Pixel-space centre; pixel (r, c) has its centre at (c + 0.5, r + 0.5).
    const double cx = (p.x + 0.5 * spec.width_mm) / pitch;
    const double cy = (p.y + 0.5 * spec.height_mm) / pitch;
    const int c0 = std::max(0, static_cast<int>(std::floor(cx - radius_px - 1.0)));
    const int c1 = std::min(frame.cols - 1, static_cast<int>(std::ceil(cx + radius_px + 1.0)));
    const int r0 = std::max(0, static_cast<int>(std::floor(cy - radius_px - 1.0)));
    const int r1 = std::min(frame.rows - 1, static_cast<int>(std::ceil(cy + radius_px + 1.0)));
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const double dist = std::hypot(c + 0.5 - cx, r + 0.5 - cy);
        const double coverage = std::clamp(radius_px + 0.5 - dist, 0.0, 1.0);
        if (coverage <= 0.0) continue;
        for (int ch = 0; ch < 3; ++ch) {
          frame.at(r, c, ch) = static_cast<float>(frame.at(r, c, ch) * (1.0 - coverage));
        }
      }
    }
  }
}

void add_noise(TactileFrame& frame, double sigma, Rng& rng) {
  if (sigma <= 0.0) return;
  for (float& v : frame.rgb) {
    v = static_cast<float>(std::clamp(static_cast<double>(v) + rng.normal(0.0, sigma), 0.0, 1.0));
  }
}

void quantize_8bit(TactileFrame& frame) {
  for (float& v : frame.rgb) {
    const double q = std::round(std::clamp(static_cast<double>(v), 0.0, 1.0) * 255.0);
    v = static_cast<float>(q / 255.0);
  }
}

double mean_intensity_change(const TactileFrame& frame, const TactileFrame& reference) {
  if (frame.rows != reference.rows || frame.cols != reference.cols ||
      frame.rgb.size() != reference.rgb.size()) {
    throw DomainError("frame resolutions differ");
  }
  if (frame.rgb.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < frame.rgb.size(); ++i) {
    acc += std::abs(static_cast<double>(frame.rgb[i]) - static_cast<double>(reference.rgb[i]));
  }
  return acc / static_cast<double>(frame.rgb.size());
}

TactileFrame render_contact(const IndenterShape& shape, const ContactState& state,
                            const GelSpec& spec, const ContactPose& pose, const RenderConfig& cfg,
                            const MarkerGrid& markers, Rng& noise_rng) {
  const HeightMap height = gel_surface(shape, state, spec, pose);
  TactileFrame frame = shade(normals_from_height(height), cfg.rig);
  if (cfg.markers) {
    rasterize_markers(frame, advect_markers(markers, state, shape, pose, cfg.marker_beta),
                      cfg.dot_radius_mm, spec);
  }
  add_noise(frame, cfg.noise_sigma, noise_rng);
  if (cfg.quantize) quantize_8bit(frame);
  return frame;
}

}  // namespace gelhard
