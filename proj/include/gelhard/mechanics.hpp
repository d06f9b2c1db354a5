#pragma once

// Contact mechanics for a soft gel pressed against an elastic indenter.
//
// Units: lengths in mm, forces in N, moduli in Pa at the API boundary. Force
// laws work internally in N/mm^2 (MPa) so that mm lengths give newtons.

#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "gelhard/grid.hpp"

namespace gelhard {

/// Durometer reading on the Shore 00 scale, 0..100.
class Shore00 {
 public:
  Shore00() = default;
  explicit Shore00(double value);
  double value() const noexcept { return value_; }
  friend bool operator==(Shore00, Shore00) = default;

 private:
  double value_ = 0.0;
};

struct ElasticBody {
  double youngs_modulus_pa = 0.0;
  double poisson_ratio = 0.49;

  /// (1 - nu^2) / E, in 1/Pa.
  double compliance() const { return (1.0 - poisson_ratio * poisson_ratio) / youngs_modulus_pa; }
};

/// Constants of the Shore 00 -> Young's modulus conversion.
///
/// Shore 00 is first mapped to an approximate Shore A reading by a linear
/// offset (anchored so 87 Shore 00 lands on 45 Shore A), then Gent's relation
/// E[MPa] = 0.0981 (56 + 7.62336 S) / (0.137505 (254 - 2.54 S)) gives the
/// modulus. The offset keeps S above Gent's zero (-7.346) on the whole 0..100
/// Shore 00 range so E stays positive and strictly increasing.
struct MaterialModel {
  double shore_a_slope = 0.6;
  double shore_a_offset = -7.2;
  double poisson_ratio = 0.49;
};

// ---------------------------------------------------------------------------
// Indenter geometry

/// Fine surface relief carried by every cast sample (mold layer ridges).
/// Valleys of depth `amplitude_mm` are cut below the nominal surface, so the
/// apex of the shape still touches first.
struct SurfaceTexture {
  double amplitude_mm = 0.0;
  double period_mm = 1.2;
  double orientation_rad = 0.0;
};

struct Sphere {
  double radius_mm = 10.0;
};

struct Cylinder {
  double radius_mm = 10.0;
  double axis_angle_rad = 0.0;
  double length_mm = 25.0;
};

// Flat sample; the gel's dome supplies the curvature.
struct Flat {};

// Rounded wedge. `dihedral_rad` is the interior angle between the faces.
struct Edge {
  double dihedral_rad = 1.5707963267948966;
  double tip_rounding_mm = 0.5;
  double axis_angle_rad = 0.0;
};

// Rounded cone with the given solid angle at its apex.
struct Corner {
  double solid_angle_sr = 1.5707963267948966;
  double tip_rounding_mm = 0.5;
};

// Arbitrary indenter surface sampled on a regular grid; the minimum of the
// grid is the apex. The grid is centred on the contact centre.
struct HeightField {
  Grid heights_mm;
  double pitch_mm = 0.1;
};

using ShapeGeometry = std::variant<Sphere, Cylinder, Flat, Edge, Corner, HeightField>;

struct IndenterShape {
  ShapeGeometry geometry;
  SurfaceTexture texture;
};

/// Shape family name ("sphere", "cylinder", ...).
std::string shape_family(const IndenterShape& shape);
/// Characteristic radius for sphere/cylinder (mm), 0 otherwise.
double shape_radius(const IndenterShape& shape);
/// Compact tag such as "sphere_r10" used in manifests and reports.
std::string shape_tag(const IndenterShape& shape);

void validate(const IndenterShape& shape);

/// Height of the indenter surface above its apex at offset (dx, dy) from the
/// contact centre, texture excluded.
double indenter_height(const ShapeGeometry& geometry, double dx, double dy, double dome_radius_mm);

// ---------------------------------------------------------------------------
// Sensor

struct GelSpec {
  Shore00 hardness{17.0};
  double thickness_mm = 2.4;
  double width_mm = 18.4;
  double height_mm = 13.8;
  double marker_pitch_mm = 1.3;
  int width_px = 120;
  int height_px = 90;
  double dome_radius_mm = 56.0;

  double pixel_pitch_mm() const { return width_mm / width_px; }
  double smoothing_width_mm() const { return 0.5 * thickness_mm; }
  double half_diagonal_mm() const;
};

void validate(const GelSpec& spec);

struct ContactState {
  double approach_mm = 0.0;
  double force_n = 0.0;
  double contact_radius_mm = 0.0;
  double gel_share = 1.0;
};

/// Lateral position of the contact centre relative to the image centre.
struct ContactPose {
  double center_x_mm = 0.0;
  double center_y_mm = 0.0;
};

struct HeightMap {
  Grid grid;
  double pitch_mm = 0.0;

  double max() const;
};

// ---------------------------------------------------------------------------
// Operations

ElasticBody shore00_to_modulus(Shore00 hardness, const MaterialModel& model = {});

/// Numerical inverse of `shore00_to_modulus` by bisection.
Shore00 modulus_to_shore00(double youngs_modulus_pa, const MaterialModel& model = {});

/// Combined modulus E* in Pa: 1/E* = (1-nu_g^2)/E_g + (1-nu_o^2)/E_o.
double effective_modulus(const ElasticBody& gel, const ElasticBody& object);

/// Fraction of the mutual approach taken up by the gel, k_gel/(k_gel+k_obj).
double gel_share(const ElasticBody& gel, const ElasticBody& object);

/// Sphere on half-space: F = 4/3 E* sqrt(R) d^1.5, a = sqrt(R d).
/// Throws SaturationError when `approach_mm` exceeds `max_approach_mm`.
ContactState hertz_sphere(double radius_mm, double e_star_pa, double approach_mm,
                          double max_approach_mm = std::numeric_limits<double>::infinity());

/// Largest mutual approach before the gel's share exceeds its thickness.
double saturation_approach(double share, const GelSpec& spec);

/// Force law dispatch over every shape variant. Sphere, Flat (against the gel
/// dome), Edge and Corner (sphere law with R = tip rounding) are Hertzian;
/// Cylinder is a line contact F = pi/4 E* L d; HeightField uses an elastic
/// foundation F = E*/t * integral of penetration.
ContactState contact_for_shape(const IndenterShape& shape, const ElasticBody& gel,
                               const ElasticBody& object, const GelSpec& spec, double approach_mm);

/// Smallest approach at which `contact_for_shape` reaches `force_n`; the
/// search is capped at `max_approach_mm` (returned if the force is never met).
double approach_for_force(const IndenterShape& shape, const ElasticBody& gel,
                          const ElasticBody& object, const GelSpec& spec, double force_n,
                          double max_approach_mm);

/// Gel displacement field for a contact. Inside the patch the field follows
/// the indenter relative to the approach; outside it decays by a Gaussian of
/// width thickness/2. Texture valleys are then cut into the contact region,
/// fading in over the first texture amplitude of penetration. Scaled by the
/// gel's share.
HeightMap gel_surface(const IndenterShape& shape, const ContactState& state, const GelSpec& spec,
                      const ContactPose& pose = {});

}  // namespace gelhard
