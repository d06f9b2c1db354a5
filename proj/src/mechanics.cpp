#include "gelhard/mechanics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gelhard/error.hpp"

namespace gelhard {

namespace {

constexpr double kPaPerMpa = 1e6;
constexpr double kPi = std::numbers::pi;
// Gent's relation is zero at this Shore A value.
constexpr double kGentShoreAZero = -56.0 / 7.62336;

double gent_modulus_mpa(double shore_a) {
  return 0.0981 * (56.0 + 7.62336 * shore_a) / (0.137505 * (254.0 - 2.54 * shore_a));
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

// Half-width of the penetrated region of a rounded wedge/cone profile.
double rounded_half_width(double slope, double rounding, double approach) {
  const double knee = 0.5 * rounding * slope * slope;
  if (approach <= knee) return std::sqrt(2.0 * rounding * approach);
  return (approach + knee) / slope;
}

double rounded_profile(double slope, double rounding, double dist) {
  const double d = std::abs(dist);
  if (d <= rounding * slope) return d * d / (2.0 * rounding);
  return slope * d - 0.5 * rounding * slope * slope;
}

double edge_slope(const Edge& e) { return 1.0 / std::tan(0.5 * e.dihedral_rad); }

double corner_slope(const Corner& c) {
  const double cos_a = 1.0 - c.solid_angle_sr / (2.0 * kPi);
  const double sin_a = std::sqrt(std::max(0.0, 1.0 - cos_a * cos_a));
  return cos_a / sin_a;
}

// Evaluates an indenter profile repeatedly; caches the height-field minimum.
class ProfileEvaluator {
 public:
  ProfileEvaluator(const ShapeGeometry& geometry, double dome_radius_mm)
      : geometry_(geometry), dome_radius_(dome_radius_mm) {
    if (const auto* hf = std::get_if<HeightField>(&geometry_)) {
      min_height_ = *std::min_element(hf->heights_mm.data.begin(), hf->heights_mm.data.end());
    }
  }

  double operator()(double dx, double dy) const {
    return std::visit([&](const auto& g) { return eval(g, dx, dy); }, geometry_);
  }

 private:
  double eval(const Sphere& s, double dx, double dy) const {
    return (dx * dx + dy * dy) / (2.0 * s.radius_mm);
  }
  double eval(const Cylinder& c, double dx, double dy) const {
    const double d = -dx * std::sin(c.axis_angle_rad) + dy * std::cos(c.axis_angle_rad);
    return d * d / (2.0 * c.radius_mm);
  }
  double eval(const Flat&, double dx, double dy) const {
    return (dx * dx + dy * dy) / (2.0 * dome_radius_);
  }
  double eval(const Edge& e, double dx, double dy) const {
    const double d = -dx * std::sin(e.axis_angle_rad) + dy * std::cos(e.axis_angle_rad);
    return rounded_profile(edge_slope(e), e.tip_rounding_mm, d);
  }
  double eval(const Corner& c, double dx, double dy) const {
    return rounded_profile(corner_slope(c), c.tip_rounding_mm, std::hypot(dx, dy));
  }
  double eval(const HeightField& hf, double dx, double dy) const {
    const Grid& g = hf.heights_mm;
    const double fx = dx / hf.pitch_mm + 0.5 * (g.cols - 1);
    const double fy = dy / hf.pitch_mm + 0.5 * (g.rows - 1);
    if (fx < 0.0 || fy < 0.0 || fx > g.cols - 1 || fy > g.rows - 1) {
      return std::numeric_limits<double>::infinity();
    }
    const int x0 = std::min(static_cast<int>(fx), g.cols - 2 < 0 ? 0 : g.cols - 2);
    const int y0 = std::min(static_cast<int>(fy), g.rows - 2 < 0 ? 0 : g.rows - 2);
    const int x1 = std::min(x0 + 1, g.cols - 1);
    const int y1 = std::min(y0 + 1, g.rows - 1);
    const double tx = fx - x0;
    const double ty = fy - y0;
    const double top = g(y0, x0) * (1.0 - tx) + g(y0, x1) * tx;
    const double bot = g(y1, x0) * (1.0 - tx) + g(y1, x1) * tx;
    return top * (1.0 - ty) + bot * ty - min_height_;
  }

  const ShapeGeometry& geometry_;
  double dome_radius_;
  double min_height_ = 0.0;
};

double chord_length(const GelSpec& spec, double angle) {
  const double c = std::abs(std::cos(angle));
  const double s = std::abs(std::sin(angle));
  double len = std::numeric_limits<double>::infinity();
  if (c > 1e-12) len = std::min(len, spec.width_mm / c);
  if (s > 1e-12) len = std::min(len, spec.height_mm / s);
  return len;
}

// Force and contact radius without the saturation check.
ContactState raw_contact(const IndenterShape& shape, double e_star_pa, const GelSpec& spec,
                         double approach) {
  struct Visitor {
    double e_star_pa;
    const GelSpec& spec;
    double d;

    ContactState operator()(const Sphere& s) const {
      return hertz_sphere(s.radius_mm, e_star_pa, d);
    }
    ContactState operator()(const Flat&) const {
      return hertz_sphere(spec.dome_radius_mm, e_star_pa, d);
    }
    ContactState operator()(const Cylinder& c) const {
      ContactState st;
      st.approach_mm = d;
      const double length = std::min(c.length_mm, chord_length(spec, c.axis_angle_rad));
      st.force_n = 0.25 * kPi * (e_star_pa / kPaPerMpa) * length * d;
      st.contact_radius_mm = std::sqrt(c.radius_mm * d);
      return st;
    }
    ContactState operator()(const Edge& e) const {
      ContactState st = hertz_sphere(e.tip_rounding_mm, e_star_pa, d);
      st.contact_radius_mm =
          rounded_half_width(edge_slope(e), e.tip_rounding_mm, d) / std::numbers::sqrt2;
      return st;
    }
    ContactState operator()(const Corner& c) const {
      ContactState st = hertz_sphere(c.tip_rounding_mm, e_star_pa, d);
      st.contact_radius_mm =
          rounded_half_width(corner_slope(c), c.tip_rounding_mm, d) / std::numbers::sqrt2;
      return st;
    }
    ContactState operator()(const HeightField& hf) const {
      ContactState st;
      st.approach_mm = d;
      const double lo = *std::min_element(hf.heights_mm.data.begin(), hf.heights_mm.data.end());
      double volume = 0.0;
      std::size_t cells = 0;
      for (double h : hf.heights_mm.data) {
        const double pen = d - (h - lo);
        if (pen > 0.0) {
          volume += pen;
          ++cells;
        }
      }
      const double cell_area = hf.pitch_mm * hf.pitch_mm;
      st.force_n = (e_star_pa / kPaPerMpa) / spec.thickness_mm * volume * cell_area;
      st.contact_radius_mm =
          std::sqrt(static_cast<double>(cells) * cell_area / kPi) / std::numbers::sqrt2;
      return st;
    }
  };
  ContactState st = std::visit(Visitor{e_star_pa, spec, approach}, shape.geometry);
  st.contact_radius_mm = std::min(st.contact_radius_mm, spec.half_diagonal_mm());
  return st;
}

void gaussian_blur(Grid& g, double sigma_px) {
  if (sigma_px <= 0.0) return;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma_px));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma_px * sigma_px));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;

  Grid tmp(g.rows, g.cols);
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int cc = std::clamp(c + k, 0, g.cols - 1);
        acc += kernel[k + radius] * g(r, cc);
      }
      tmp(r, c) = acc;
    }
  }
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int rr = std::clamp(r + k, 0, g.rows - 1);
        acc += kernel[k + radius] * tmp(rr, c);
      }
      g(r, c) = acc;
    }
  }
}

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

Shore00::Shore00(double value) : value_(value) {
  if (!std::isfinite(value) || value < 0.0 || value > 100.0) {
    throw DomainError("Shore 00 value out of [0, 100]: " + format_number(value));
  }
}

double GelSpec::half_diagonal_mm() const { return 0.5 * std::hypot(width_mm, height_mm); }

void validate(const GelSpec& spec) {
  if (!finite_positive(spec.thickness_mm) || !finite_positive(spec.width_mm) ||
      !finite_positive(spec.height_mm) || !finite_positive(spec.marker_pitch_mm) ||
      !finite_positive(spec.dome_radius_mm) || spec.width_px <= 1 || spec.height_px <= 1) {
    throw DomainError("invalid gel spec");
  }
  const double px = spec.width_mm / spec.width_px;
  const double py = spec.height_mm / spec.height_px;
  if (std::abs(px - py) > 1e-6 * px) throw DomainError("gel spec pixels must be square");
}

double HeightMap::max() const {
  return grid.data.empty() ? 0.0 : *std::max_element(grid.data.begin(), grid.data.end());
}

std::string shape_family(const IndenterShape& shape) {
  struct V {
    std::string operator()(const Sphere&) const { return "sphere"; }
    std::string operator()(const Cylinder&) const { return "cylinder"; }
    std::string operator()(const Flat&) const { return "flat"; }
    std::string operator()(const Edge&) const { return "edge"; }
    std::string operator()(const Corner&) const { return "corner"; }
    std::string operator()(const HeightField&) const { return "heightfield"; }
  };
  return std::visit(V{}, shape.geometry);
}

double shape_radius(const IndenterShape& shape) {
  if (const auto* s = std::get_if<Sphere>(&shape.geometry)) return s->radius_mm;
  if (const auto* c = std::get_if<Cylinder>(&shape.geometry)) return c->radius_mm;
  return 0.0;
}

std::string shape_tag(const IndenterShape& shape) {
  const std::string family = shape_family(shape);
  const double r = shape_radius(shape);
  if (r > 0.0) return family + "_r" + format_number(r);
  return family;
}

void validate(const IndenterShape& shape) {
  struct V {
    void operator()(const Sphere& s) const {
      if (!finite_positive(s.radius_mm)) throw DomainError("sphere radius must be > 0");
    }
    void operator()(const Cylinder& c) const {
      if (!finite_positive(c.radius_mm) || !finite_positive(c.length_mm)) {
        throw DomainError("cylinder radius and length must be > 0");
      }
    }
    void operator()(const Flat&) const {}
    void operator()(const Edge& e) const {
      if (!finite_positive(e.tip_rounding_mm) || !(e.dihedral_rad > 0.0 && e.dihedral_rad < kPi)) {
        throw DomainError("edge needs rounding > 0 and dihedral in (0, pi)");
      }
    }
    void operator()(const Corner& c) const {
      if (!finite_positive(c.tip_rounding_mm) ||
          !(c.solid_angle_sr > 0.0 && c.solid_angle_sr < 2.0 * kPi)) {
        throw DomainError("corner needs rounding > 0 and solid angle in (0, 2 pi)");
      }
    }
    void operator()(const HeightField& hf) const {
      const Grid& g = hf.heights_mm;
      if (g.rows < 2 || g.cols < 2 || g.data.size() != static_cast<std::size_t>(g.rows) * g.cols ||
          !finite_positive(hf.pitch_mm)) {
        throw DomainError("height field must be a finite rectangular grid");
      }
      for (double h : g.data) {
        if (!std::isfinite(h)) throw DomainError("height field has non-finite entries");
      }
    }
  };
  std::visit(V{}, shape.geometry);
  const SurfaceTexture& t = shape.texture;
  if (!(t.amplitude_mm >= 0.0) || !finite_positive(t.period_mm)) {
    throw DomainError("surface texture needs amplitude >= 0 and period > 0");
  }
}

double indenter_height(const ShapeGeometry& geometry, double dx, double dy, double dome_radius_mm) {
  return ProfileEvaluator(geometry, dome_radius_mm)(dx, dy);
}

ElasticBody shore00_to_modulus(Shore00 hardness, const MaterialModel& model) {
  const double h = hardness.value();
  if (!(h > 0.0 && h < 100.0)) {
    throw DomainError("hardness must lie strictly inside (0, 100) Shore 00: " + format_number(h));
  }
  const double shore_a = model.shore_a_slope * h + model.shore_a_offset;
  if (shore_a <= kGentShoreAZero || shore_a >= 100.0) {
    throw DomainError("material model maps hardness outside Gent's valid range");
  }
  return ElasticBody{gent_modulus_mpa(shore_a) * kPaPerMpa, model.poisson_ratio};
}

Shore00 modulus_to_shore00(double youngs_modulus_pa, const MaterialModel& model) {
  double lo = 1e-9;
  double hi = 100.0 - 1e-9;
  const double e_lo = shore00_to_modulus(Shore00(lo), model).youngs_modulus_pa;
  const double e_hi = shore00_to_modulus(Shore00(hi), model).youngs_modulus_pa;
  if (!(youngs_modulus_pa >= e_lo && youngs_modulus_pa <= e_hi)) {
    throw DomainError("modulus outside the Shore 00 range: " + format_number(youngs_modulus_pa));
  }
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (shore00_to_modulus(Shore00(mid), model).youngs_modulus_pa < youngs_modulus_pa) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return Shore00(0.5 * (lo + hi));
}

double effective_modulus(const ElasticBody& gel, const ElasticBody& object) {
  return 1.0 / (gel.compliance() + object.compliance());
}

double gel_share(const ElasticBody& gel, const ElasticBody& object) {
  const double kg = gel.compliance();
  return kg / (kg + object.compliance());
}

ContactState hertz_sphere(double radius_mm, double e_star_pa, double approach_mm,
                          double max_approach_mm) {
  if (!finite_positive(radius_mm) || !finite_positive(e_star_pa)) {
    throw DomainError("hertz_sphere needs radius > 0 and E* > 0");
  }
  if (!(approach_mm >= 0.0) || !std::isfinite(approach_mm)) {
    throw DomainError("approach must be finite and >= 0");
  }
  if (approach_mm > max_approach_mm) {
    throw SaturationError("approach " + format_number(approach_mm) + " mm exceeds " +
                          format_number(max_approach_mm) + " mm");
  }
  ContactState st;
  st.approach_mm = approach_mm;
  st.force_n =
      4.0 / 3.0 * (e_star_pa / kPaPerMpa) * std::sqrt(radius_mm) * std::pow(approach_mm, 1.5);
  st.contact_radius_mm = std::sqrt(radius_mm * approach_mm);
  return st;
}

double saturation_approach(double share, const GelSpec& spec) { return spec.thickness_mm / share; }

ContactState contact_for_shape(const IndenterShape& shape, const ElasticBody& gel,
                               const ElasticBody& object, const GelSpec& spec, double approach_mm) {
  if (!(approach_mm >= 0.0) || !std::isfinite(approach_mm)) {
    throw DomainError("approach must be finite and >= 0");
  }
  const double share = gel_share(gel, object);
  const double limit = saturation_approach(share, spec);
  if (approach_mm > limit) {
    throw SaturationError("gel indentation " + format_number(share * approach_mm) +
                          " mm exceeds thickness " + format_number(spec.thickness_mm) + " mm");
  }
  ContactState st = raw_contact(shape, effective_modulus(gel, object), spec, approach_mm);
  st.gel_share = share;
  return st;
}

double approach_for_force(const IndenterShape& shape, const ElasticBody& gel,
                          const ElasticBody& object, const GelSpec& spec, double force_n,
                          double max_approach_mm) {
  const double e_star = effective_modulus(gel, object);
  if (raw_contact(shape, e_star, spec, max_approach_mm).force_n < force_n) return max_approach_mm;
  double lo = 0.0;
  double hi = max_approach_mm;
  for (int i = 0; i < 100 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (raw_contact(shape, e_star, spec, mid).force_n < force_n) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

HeightMap gel_surface(const IndenterShape& shape, const ContactState& state, const GelSpec& spec,
                      const ContactPose& pose) {
  validate(shape);
  if (!(state.gel_share > 0.0 && state.gel_share <= 1.0) || !(state.approach_mm >= 0.0)) {
    throw DomainError("contact state does not describe a valid contact");
  }
  if (state.approach_mm > 0.0 && state.force_n <= 0.0) {
    throw DomainError("contact state has approach but no force");
  }
  HeightMap map;
  map.pitch_mm = spec.pixel_pitch_mm();
  map.grid = Grid(spec.height_px, spec.width_px, 0.0);
  if (state.approach_mm == 0.0) return map;

  const ProfileEvaluator profile(shape.geometry, spec.dome_radius_mm);
  const SurfaceTexture& tex = shape.texture;
  const double tex_cos = std::cos(tex.orientation_rad);
  const double tex_sin = std::sin(tex.orientation_rad);
  const double pitch = map.pitch_mm;
  Grid& pen = map.grid;
  Grid cut(pen.rows, pen.cols, 0.0);
  for (int r = 0; r < pen.rows; ++r) {
    const double y = (r + 0.5) * pitch - 0.5 * spec.height_mm - pose.center_y_mm;
    for (int c = 0; c < pen.cols; ++c) {
      const double x = (c + 0.5) * pitch - 0.5 * spec.width_mm - pose.center_x_mm;
      pen(r, c) = std::max(0.0, state.approach_mm - profile(x, y));
      if (tex.amplitude_mm > 0.0) {
        const double u = x * tex_cos + y * tex_sin;
        const double depth =
            tex.amplitude_mm * 0.5 * (1.0 - std::cos(2.0 * kPi * u / tex.period_mm));
        cut(r, c) = depth * std::min(1.0, pen(r, c) / tex.amplitude_mm);
      }
    }
  }

  // Valleys are cut into the smoothed contact surface and fade in over the
  // first texture amplitude of penetration.
  Grid blurred = pen;
  gaussian_blur(blurred, spec.smoothing_width_mm() / pitch);
  for (std::size_t i = 0; i < pen.data.size(); ++i) {
    pen.data[i] = state.gel_share * (std::max(pen.data[i], blurred.data[i]) - cut.data[i]);
  }
  if (map.max() > spec.thickness_mm * (1.0 + 1e-12)) {
    throw SaturationError("gel displacement exceeds thickness");
  }
  return map;
}

}  // namespace gelhard
