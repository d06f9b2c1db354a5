#include "gelhard/io.hpp"

#include <png.h>

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "gelhard/error.hpp"

namespace gelhard {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const std::string s = trim(text);
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

}  // namespace

// ---------------------------------------------------------------------------
// Images

void write_png(const fs::path& path, const TactileFrame& frame) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.cols);
  image.height = static_cast<png_uint_32>(frame.rows);
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> bytes(frame.rgb.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(frame.rgb[i]);
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DataError("cannot write " + path.string() + ": " + msg);
  }
}

TactileFrame read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw DataError("cannot read " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DataError("cannot decode " + path.string() + ": " + msg);
  }
  TactileFrame frame(static_cast<int>(image.height), static_cast<int>(image.width));
  for (std::size_t i = 0; i < frame.rgb.size(); ++i) frame.rgb[i] = bytes[i] / 255.0f;
  return frame;
}

TactileFrame read_ppm(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  auto token = [&]() {
    std::string t;
    char c = 0;
    while (is.get(c)) {
      if (c == '#') {
        std::string rest;
        std::getline(is, rest);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) break;
        continue;
      }
      t.push_back(c);
    }
    return t;
  };
  if (token() != "P6") throw DataError(path.string() + " is not a binary PPM");
  int cols = 0, rows = 0, maxval = 0;
  if (!parse_number(token(), cols) || !parse_number(token(), rows) ||
      !parse_number(token(), maxval) || cols <= 0 || rows <= 0 || maxval != 255) {
    throw DataError(path.string() + " has an unsupported PPM header");
  }
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(rows) * cols * 3);
  if (!is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()))) {
    throw DataError(path.string() + " is truncated");
  }
  TactileFrame frame(rows, cols);
  for (std::size_t i = 0; i < bytes.size(); ++i) frame.rgb[i] = bytes[i] / 255.0f;
  return frame;
}

TactileFrame read_image(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm") return read_ppm(path);
  throw DataError("unsupported image type " + path.string());
}

std::vector<fs::path> list_frame_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("missing frame directory " + dir.string());
  std::vector<std::pair<long long, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext != ".png" && ext != ".ppm") continue;
    const std::string stem = entry.path().stem().string();
    const auto last = stem.find_last_of("0123456789");
    if (last == std::string::npos)
      throw DataError("frame file without a number: " + entry.path().string());
    auto first = last;
    while (first > 0 && std::isdigit(static_cast<unsigned char>(stem[first - 1]))) --first;
    long long n = 0;
    parse_number(stem.substr(first, last - first + 1), n);
    found.emplace_back(n, entry.path());
  }
  std::sort(found.begin(), found.end());
  for (std::size_t i = 1; i < found.size(); ++i) {
    if (found[i].first == found[i - 1].first) {
      throw DataError("duplicate frame number " + std::to_string(found[i].first) + " in " +
                      dir.string());
    }
  }
  std::vector<fs::path> out;
  out.reserve(found.size());
  for (auto& f : found) out.push_back(std::move(f.second));
  return out;
}

std::vector<TactileFrame> read_frames(const fs::path& dir) {
  std::vector<TactileFrame> frames;
  for (const fs::path& p : list_frame_files(dir)) {
    frames.push_back(read_image(p));
    if (frames.back().rows != frames.front().rows || frames.back().cols != frames.front().cols) {
      throw DataError("frame size changes within " + dir.string());
    }
  }
  if (frames.empty()) throw DataError("no frames in " + dir.string());
  return frames;
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

json record_to_json(const SequenceRecord& r) {
  json j;
  j["id"] = r.id;
  j["set"] = r.set;
  if (r.label) {
    j["label"] = *r.label;
  } else {
    j["label"] = "unknown";
  }
  j["shape"] = r.shape_tag;
  j["family"] = r.shape_family;
  j["radius_mm"] = r.shape_radius_mm;
  j["group"] = to_string(r.group);
  j["profile"] = to_string(r.profile);
  j["seed"] = r.seed;
  j["frames"] = r.frame_count;
  j["saturated"] = r.saturated;
  j["frame_dir"] = r.frame_dir;
  return j;
}

SequenceRecord record_from_json(const json& j) {
  SequenceRecord r;
  r.id = j.at("id").get<std::string>();
  r.set = j.value("set", std::string("real"));
  const json& label = j.at("label");
  if (label.is_number()) {
    r.label = label.get<double>();
  } else if (!(label.is_string() && label.get<std::string>() == "unknown")) {
    throw DataError("record " + r.id + " has an invalid label");
  }
  r.shape_tag = j.value("shape", std::string("unknown"));
  r.shape_family = j.value("family", std::string("unknown"));
  r.shape_radius_mm = j.value("radius_mm", 0.0);
  try {
    r.group = group_tag_from_string(j.value("group", std::string("basic")));
    r.profile = profile_kind_from_string(j.value("profile", std::string("human")));
  } catch (const Error& e) {
    throw DataError("record " + r.id + ": " + e.what());
  }
  r.seed = j.value("seed", std::uint64_t{0});
  r.frame_count = j.value("frames", 0);
  r.saturated = j.value("saturated", false);
  r.frame_dir = j.value("frame_dir", r.id);
  return r;
}

}  // namespace

std::string manifest_to_json(const Manifest& manifest) {
  json j;
  j["version"] = manifest.version;
  j["seed"] = manifest.seed;
  j["records"] = json::array();
  for (const SequenceRecord& r : manifest.records) j["records"].push_back(record_to_json(r));
  return j.dump(1) + "\n";
}

Manifest manifest_from_json(const std::string& text) {
  Manifest m;
  try {
    const json j = json::parse(text);
    m.version = j.at("version").get<int>();
    if (m.version < 1 || m.version > kManifestVersion) {
      throw DataError("unsupported manifest version " + std::to_string(m.version));
    }
    m.seed = j.value("seed", std::uint64_t{0});
    for (const json& r : j.at("records")) m.records.push_back(record_from_json(r));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  std::set<std::string> ids;
  for (const SequenceRecord& r : m.records) {
    if (!ids.insert(r.id).second) throw DataError("duplicate record id " + r.id);
    if (r.label && !(*r.label >= 0.0 && *r.label <= 100.0)) {
      throw DataError("record " + r.id + " has label " + fmt(*r.label) + " outside [0, 100]");
    }
  }
  return m;
}

void write_manifest(const fs::path& root, const Manifest& manifest) {
  fs::create_directories(root);
  write_text_file(root / "manifest.json", manifest_to_json(manifest));
}

Manifest read_manifest(const fs::path& root) {
  const fs::path file = fs::is_directory(root) ? root / "manifest.json" : root;
  if (!fs::exists(file)) throw DataError("missing manifest " + file.string());
  Manifest m = manifest_from_json(read_text_file(file));
  const fs::path base = file.parent_path();
  for (const SequenceRecord& r : m.records) {
    if (!fs::is_directory(base / r.frame_dir)) {
      throw DataError("record " + r.id + ": missing frame directory " +
                      (base / r.frame_dir).string());
    }
  }
  return m;
}

std::string press_metadata_json(const SequenceRecord& record, const PressProfile& profile,
                                const IndenterShape& shape) {
  json j = record_to_json(record);
  j["shape_family"] = shape_family(shape);
  j["texture"] = {{"amplitude_mm", shape.texture.amplitude_mm},
                  {"period_mm", shape.texture.period_mm},
                  {"orientation_rad", shape.texture.orientation_rad}};
  j["profile_params"] = {{"kind", to_string(profile.kind)},
                         {"max_force_n", profile.max_force_n},
                         {"speed_mm_per_s", profile.speed_mm_per_s},
                         {"tilt_rad", profile.tilt_rad},
                         {"tilt_azimuth_rad", profile.tilt_azimuth_rad},
                         {"drift_mm_per_s", profile.lateral_drift_mm_per_s},
                         {"drift_direction_rad", profile.drift_direction_rad},
                         {"offset_x_mm", profile.offset_x_mm},
                         {"offset_y_mm", profile.offset_y_mm},
                         {"seed", profile.seed}};
  return j.dump(1) + "\n";
}

void write_press(const fs::path& root, const SequenceRecord& record, const PressSequence& seq) {
  const fs::path dir = root / record.frame_dir;
  fs::create_directories(dir);
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.png", t);
    write_png(dir / name, seq.frames[t]);
  }
  write_text_file(dir / "meta.json", press_metadata_json(record, seq.profile, seq.shape));
}

LoadedDataset load_dataset(const fs::path& root, const Manifest& manifest,
                           const std::vector<std::size_t>& indices, double tau, FrameKeep keep) {
  LoadedDataset out;
  for (std::size_t i : indices) {
    const SequenceRecord& r = manifest.records.at(i);
    try {
      out.sequences.push_back(store_sequence(r, read_frames(root / r.frame_dir), tau, keep));
    } catch (const NoContactError& e) {
      out.skipped.push_back(r.id + ": " + e.what());
    } catch (const ClipTooShortError& e) {
      out.skipped.push_back(r.id + ": " + e.what());
    }
  }
  return out;
}

Manifest ingest_directory(const fs::path& raw_dir, const fs::path& labels_csv,
                          std::vector<std::string>* warnings) {
  if (!fs::is_directory(raw_dir)) throw DataError("missing directory " + raw_dir.string());
  std::map<std::string, double> labels;
  if (!labels_csv.empty()) {
    std::istringstream is(read_text_file(labels_csv));
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      const auto cells = split(line, ',');
      double value = 0.0;
      if (cells.size() != 2)
        throw DataError(labels_csv.string() + ":" + std::to_string(line_no) +
                        ": expected id,label");
      if (!parse_number(cells[1], value)) {
        if (line_no == 1) continue;  // header
        throw DataError(labels_csv.string() + ":" + std::to_string(line_no) + ": bad label '" +
                        cells[1] + "'");
      }
      if (!(value >= 0.0 && value <= 100.0)) {
        throw DataError("label for " + cells[0] + " outside [0, 100]");
      }
      if (!labels.emplace(cells[0], value).second)
        throw DataError("duplicate label for " + cells[0]);
    }
  }
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(raw_dir)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  Manifest m;
  for (const fs::path& d : dirs) {
    const auto files = list_frame_files(d);
    if (files.empty()) {
      if (warnings) warnings->push_back(d.filename().string() + ": no frames, skipped");
      continue;
    }
    SequenceRecord r;
    r.id = d.filename().string();
    r.set = "real";
    r.shape_tag = "unknown";
    r.shape_family = "unknown";
    r.frame_count = static_cast<int>(files.size());
    r.frame_dir = d.filename().string();
    if (auto it = labels.find(r.id); it != labels.end()) {
      r.label = it->second;
      labels.erase(it);
    }
    m.records.push_back(std::move(r));
  }
  if (warnings) {
    for (const auto& [id, value] : labels)
      warnings->push_back(id + ": label without a press directory");
  }
  return m;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

struct Binding {
  std::string section;
  std::string key;
  std::function<void(AppConfig&, const std::string&)> set;
  std::function<std::string(const AppConfig&)> get;
};

[[noreturn]] void bad_value(const Binding& b, const std::string& v, const std::string& what) {
  throw ConfigError("[" + b.section + "] " + b.key + " = '" + v + "': expected " + what);
}

template <typename T, typename Ref>
Binding number(std::string section, std::string key, Ref ref) {
  Binding b{std::move(section), std::move(key), {}, {}};
  b.set = [ref, b](AppConfig& c, const std::string& v) {
    T out{};
    if (!parse_number(v, out)) bad_value(b, v, "a number");
    ref(c) = out;
  };
  b.get = [ref](const AppConfig& c) {
    if constexpr (std::is_floating_point_v<T>) {
      return fmt(ref(const_cast<AppConfig&>(c)));
    } else {
      return std::to_string(ref(const_cast<AppConfig&>(c)));
    }
  };
  return b;
}

template <typename Ref>
Binding boolean(std::string section, std::string key, Ref ref) {
  Binding b{std::move(section), std::move(key), {}, {}};
  b.set = [ref, b](AppConfig& c, const std::string& v) {
    const std::string t = trim(v);
    if (t == "true" || t == "1") {
      ref(c) = true;
    } else if (t == "false" || t == "0") {
      ref(c) = false;
    } else {
      bad_value(b, v, "true or false");
    }
  };
  b.get = [ref](const AppConfig& c) { return ref(const_cast<AppConfig&>(c)) ? "true" : "false"; };
  return b;
}

template <typename Ref>
Binding number_list(std::string section, std::string key, Ref ref) {
  Binding b{std::move(section), std::move(key), {}, {}};
  b.set = [ref, b](AppConfig& c, const std::string& v) {
    std::vector<double> out;
    if (!trim(v).empty()) {
      for (const std::string& cell : split(v, ',')) {
        double x = 0.0;
        if (!parse_number(cell, x)) bad_value(b, v, "a comma-separated number list");
        out.push_back(x);
      }
    }
    ref(c) = out;
  };
  b.get = [ref](const AppConfig& c) {
    std::string s;
    for (double x : ref(const_cast<AppConfig&>(c))) s += (s.empty() ? "" : ",") + fmt(x);
    return s;
  };
  return b;
}

std::vector<Binding> ridge_bindings(const std::string& prefix,
                                    RidgeParams DatasetConfig::* member) {
  auto r = [member](AppConfig& c) -> RidgeParams& { return c.dataset.*member; };
  std::vector<Binding> out;
  auto add = [&](const std::string& name, double RidgeParams::* field) {
    out.push_back(number<double>("dataset", prefix + name,
                                 [r, field](AppConfig& c) -> double& { return r(c).*field; }));
  };
  add("min_amplitude_mm", &RidgeParams::min_amplitude_mm);
  add("max_amplitude_mm", &RidgeParams::max_amplitude_mm);
  add("min_sharpness", &RidgeParams::min_sharpness);
  add("max_sharpness", &RidgeParams::max_sharpness);
  add("min_wavelength_mm", &RidgeParams::min_wavelength_mm);
  add("max_wavelength_mm", &RidgeParams::max_wavelength_mm);
  add("min_base_radius_mm", &RidgeParams::min_base_radius_mm);
  add("max_base_radius_mm", &RidgeParams::max_base_radius_mm);
  out.push_back(
      number<int>("dataset", prefix + "waves", [r](AppConfig& c) -> int& { return r(c).waves; }));
  return out;
}

#define GH_REF(T, expr) [](AppConfig& c) -> T& { return expr; }

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = [] {
    std::vector<Binding> t;
    t.push_back(number<std::uint64_t>("general", "seed", GH_REF(std::uint64_t, c.seed)));

    t.push_back(number<int>("dataset", "levels", GH_REF(int, c.dataset.levels)));
    t.push_back(number<double>("dataset", "min_hardness", GH_REF(double, c.dataset.min_hardness)));
    t.push_back(number<double>("dataset", "max_hardness", GH_REF(double, c.dataset.max_hardness)));
    t.push_back(number_list("dataset", "sphere_radii",
                            GH_REF(std::vector<double>, c.dataset.sphere_radii)));
    t.push_back(number_list("dataset", "cylinder_radii",
                            GH_REF(std::vector<double>, c.dataset.cylinder_radii)));
    t.push_back(boolean("dataset", "include_flat", GH_REF(bool, c.dataset.include_flat)));
    t.push_back(boolean("dataset", "include_edge", GH_REF(bool, c.dataset.include_edge)));
    t.push_back(boolean("dataset", "include_corner", GH_REF(bool, c.dataset.include_corner)));
    t.push_back(number<int>("dataset", "seeds_per_cell", GH_REF(int, c.dataset.seeds_per_cell)));
    t.push_back(number<double>("dataset", "mix_fraction", GH_REF(double, c.dataset.mix_fraction)));
    t.push_back(number<int>("dataset", "robot_seeds_per_cell",
                            GH_REF(int, c.dataset.robot_seeds_per_cell)));
    t.push_back(number<int>("dataset", "complex_test_per_level",
                            GH_REF(int, c.dataset.complex_test_per_level)));
    t.push_back(number<double>("dataset", "texture_amplitude_mm",
                               GH_REF(double, c.dataset.texture_amplitude_mm)));
    t.push_back(number<double>("dataset", "texture_period_mm",
                               GH_REF(double, c.dataset.texture_period_mm)));
    for (Binding& b : ridge_bindings("train_ridge_", &DatasetConfig::train_ridges))
      t.push_back(std::move(b));
    for (Binding& b : ridge_bindings("test_ridge_", &DatasetConfig::test_ridges))
      t.push_back(std::move(b));

    {
      Binding b{"gel", "hardness", {}, {}};
      b.set = [b](AppConfig& c, const std::string& v) {
        double x = 0.0;
        if (!parse_number(v, x)) bad_value(b, v, "a number");
        try {
          c.sensor.gel.hardness = Shore00(x);
        } catch (const Error&) {
          bad_value(b, v, "a Shore 00 value in [0, 100]");
        }
      };
      b.get = [](const AppConfig& c) { return fmt(c.sensor.gel.hardness.value()); };
      t.push_back(std::move(b));
    }
    t.push_back(number<double>("gel", "thickness_mm", GH_REF(double, c.sensor.gel.thickness_mm)));
    t.push_back(number<double>("gel", "width_mm", GH_REF(double, c.sensor.gel.width_mm)));
    t.push_back(number<double>("gel", "height_mm", GH_REF(double, c.sensor.gel.height_mm)));
    t.push_back(
        number<double>("gel", "marker_pitch_mm", GH_REF(double, c.sensor.gel.marker_pitch_mm)));
    t.push_back(number<int>("gel", "width_px", GH_REF(int, c.sensor.gel.width_px)));
    t.push_back(number<int>("gel", "height_px", GH_REF(int, c.sensor.gel.height_px)));
    t.push_back(
        number<double>("gel", "dome_radius_mm", GH_REF(double, c.sensor.gel.dome_radius_mm)));

    t.push_back(number<double>("material", "shore_a_slope",
                               GH_REF(double, c.sensor.material.shore_a_slope)));
    t.push_back(number<double>("material", "shore_a_offset",
                               GH_REF(double, c.sensor.material.shore_a_offset)));
    t.push_back(number<double>("material", "poisson_ratio",
                               GH_REF(double, c.sensor.material.poisson_ratio)));

    t.push_back(
        number<double>("render", "light_elevation_deg", GH_REF(double, c.light_elevation_deg)));
    t.push_back(number<double>("render", "light_gain", GH_REF(double, c.light_gain)));
    t.push_back(boolean("render", "markers", GH_REF(bool, c.sensor.render.markers)));
    t.push_back(
        number<double>("render", "marker_beta", GH_REF(double, c.sensor.render.marker_beta)));
    t.push_back(
        number<double>("render", "dot_radius_mm", GH_REF(double, c.sensor.render.dot_radius_mm)));
    t.push_back(
        number<double>("render", "noise_sigma", GH_REF(double, c.sensor.render.noise_sigma)));
    t.push_back(boolean("render", "quantize", GH_REF(bool, c.sensor.render.quantize)));

    t.push_back(number<double>("sim", "frame_rate_hz", GH_REF(double, c.sensor.sim.frame_rate_hz)));
    t.push_back(number<int>("sim", "human_min_frames", GH_REF(int, c.sensor.sim.human_min_frames)));
    t.push_back(number<int>("sim", "human_max_frames", GH_REF(int, c.sensor.sim.human_max_frames)));
    t.push_back(
        number<double>("sim", "human_min_force_n", GH_REF(double, c.sensor.sim.human_min_force_n)));
    t.push_back(
        number<double>("sim", "human_max_force_n", GH_REF(double, c.sensor.sim.human_max_force_n)));
    t.push_back(number<double>("sim", "human_max_tilt_rad",
                               GH_REF(double, c.sensor.sim.human_max_tilt_rad)));
    t.push_back(number<double>("sim", "human_max_drift_mm_per_s",
                               GH_REF(double, c.sensor.sim.human_max_drift_mm_per_s)));
    t.push_back(number<double>("sim", "human_speed_jitter",
                               GH_REF(double, c.sensor.sim.human_speed_jitter)));
    t.push_back(number<double>("sim", "robot_min_speed_mm_per_s",
                               GH_REF(double, c.sensor.sim.robot_min_speed_mm_per_s)));
    t.push_back(number<double>("sim", "robot_max_speed_mm_per_s",
                               GH_REF(double, c.sensor.sim.robot_max_speed_mm_per_s)));
    t.push_back(
        number<double>("sim", "robot_min_force_n", GH_REF(double, c.sensor.sim.robot_min_force_n)));
    t.push_back(
        number<double>("sim", "robot_max_force_n", GH_REF(double, c.sensor.sim.robot_max_force_n)));
    t.push_back(number<int>("sim", "robot_max_frames", GH_REF(int, c.sensor.sim.robot_max_frames)));
    t.push_back(
        number<double>("sim", "bad_min_tilt_rad", GH_REF(double, c.sensor.sim.bad_min_tilt_rad)));
    t.push_back(
        number<double>("sim", "bad_max_tilt_rad", GH_REF(double, c.sensor.sim.bad_max_tilt_rad)));
    t.push_back(number<double>("sim", "bad_min_drift_mm_per_s",
                               GH_REF(double, c.sensor.sim.bad_min_drift_mm_per_s)));
    t.push_back(number<double>("sim", "bad_max_drift_mm_per_s",
                               GH_REF(double, c.sensor.sim.bad_max_drift_mm_per_s)));
    t.push_back(
        number<double>("sim", "bad_min_offset_mm", GH_REF(double, c.sensor.sim.bad_min_offset_mm)));
    t.push_back(
        number<double>("sim", "bad_max_offset_mm", GH_REF(double, c.sensor.sim.bad_max_offset_mm)));
    t.push_back(
        number<double>("sim", "saturation_margin", GH_REF(double, c.sensor.sim.saturation_margin)));

    t.push_back(number<double>("pipeline", "start_margin", GH_REF(double, c.start_margin)));
    t.push_back(number<double>("pipeline", "start_threshold", GH_REF(double, c.start_threshold)));

    t.push_back(number<double>("train", "learning_rate", GH_REF(double, c.train.learning_rate)));
    t.push_back(number<int>("train", "iterations", GH_REF(int, c.train.iterations)));
    t.push_back(number<int>("train", "lr_step", GH_REF(int, c.train.lr_step)));
    t.push_back(number<double>("train", "lr_decay", GH_REF(double, c.train.lr_decay)));
    t.push_back(number<int>("train", "batch_size", GH_REF(int, c.train.batch_size)));
    t.push_back(number<double>("train", "huber_kappa", GH_REF(double, c.train.huber_kappa)));
    t.push_back(boolean("train", "augment", GH_REF(bool, c.train.augment)));
    t.push_back(number<double>("train", "input_scale", GH_REF(double, c.train.input_scale)));
    {
      Binding b{"train", "optimizer", {}, {}};
      b.set = [b](AppConfig& c, const std::string& v) {
        try {
          c.train.optimizer.kind = optimizer_kind_from_string(trim(v));
        } catch (const Error&) {
          bad_value(b, v, "sgd or adam");
        }
      };
      b.get = [](const AppConfig& c) { return to_string(c.train.optimizer.kind); };
      t.push_back(std::move(b));
    }
    t.push_back(number<double>("train", "momentum", GH_REF(double, c.train.optimizer.momentum)));
    t.push_back(number<double>("train", "beta1", GH_REF(double, c.train.optimizer.beta1)));
    t.push_back(number<double>("train", "beta2", GH_REF(double, c.train.optimizer.beta2)));
    t.push_back(number<double>("train", "epsilon", GH_REF(double, c.train.optimizer.epsilon)));
    t.push_back(number<double>("train", "clip_norm", GH_REF(double, c.train.optimizer.clip_norm)));

    t.push_back(number<int>("model", "stem_pool", GH_REF(int, c.train.model.stem_pool)));
    t.push_back(number<int>("model", "first_stride", GH_REF(int, c.train.model.first_stride)));
    {
      Binding b{"model", "widths", {}, {}};
      b.set = [b](AppConfig& c, const std::string& v) {
        const auto cells = split(v, ',');
        if (cells.size() != 4) bad_value(b, v, "four comma-separated integers");
        for (std::size_t i = 0; i < 4; ++i) {
          if (!parse_number(cells[i], c.train.model.widths[i]))
            bad_value(b, v, "four comma-separated integers");
        }
      };
      b.get = [](const AppConfig& c) {
        const auto& w = c.train.model.widths;
        return std::to_string(w[0]) + "," + std::to_string(w[1]) + "," + std::to_string(w[2]) +
               "," + std::to_string(w[3]);
      };
      t.push_back(std::move(b));
    }
    t.push_back(number<int>("model", "embed_dim", GH_REF(int, c.train.model.embed_dim)));
    t.push_back(number<int>("model", "hidden_dim", GH_REF(int, c.train.model.hidden_dim)));
    t.push_back(
        number<double>("model", "output_scale", GH_REF(double, c.train.model.output_scale)));

    t.push_back(number<int>("split", "level_stride", GH_REF(int, c.split.level_stride)));
    t.push_back(number<int>("split", "level_offset", GH_REF(int, c.split.level_offset)));
    {
      Binding b{"split", "held_out_shapes", {}, {}};
      b.set = [b](AppConfig& c, const std::string& v) {
        std::vector<ShapeSpec> out;
        if (!trim(v).empty()) {
          for (const std::string& cell : split(v, ',')) {
            const auto colon = cell.find(':');
            ShapeSpec s;
            s.family = trim(cell.substr(0, colon));
            if (colon != std::string::npos && !parse_number(cell.substr(colon + 1), s.radius_mm)) {
              bad_value(b, v, "family:radius pairs");
            }
            if (s.family.empty()) bad_value(b, v, "family:radius pairs");
            out.push_back(s);
          }
        }
        c.split.held_out_shapes = out;
      };
      b.get = [](const AppConfig& c) {
        std::string s;
        for (const ShapeSpec& h : c.split.held_out_shapes) {
          s += (s.empty() ? "" : ",") + h.family + ":" + fmt(h.radius_mm);
        }
        return s;
      };
      t.push_back(std::move(b));
    }
    return t;
  }();
  return table;
}

#undef GH_REF

void finish_config(AppConfig& cfg) {
  if (!(cfg.light_elevation_deg > 0.0 && cfg.light_elevation_deg < 90.0)) {
    throw ConfigError("light_elevation_deg must lie in (0, 90)");
  }
  if (!(cfg.light_gain > 0.0)) throw ConfigError("light_gain must be positive");
  cfg.sensor.render.rig =
      default_light_rig(cfg.light_elevation_deg * std::numbers::pi / 180.0, cfg.light_gain);
  cfg.train.model.input_rows = cfg.sensor.gel.height_px;
  cfg.train.model.input_cols = cfg.sensor.gel.width_px;
  apply_seed(cfg, cfg.seed);
}

}  // namespace

double AppConfig::tau() const {
  if (start_threshold > 0.0) return start_threshold;
  return default_start_threshold(sensor.render.noise_sigma, start_margin);
}

void apply_seed(AppConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.dataset.seed = seed;
  cfg.train.seed = seed;
}

AppConfig config_from_ini(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  AppConfig cfg;
  std::map<std::pair<std::string, std::string>, const Binding*> index;
  std::set<std::string> sections;
  for (const Binding& b : bindings()) {
    index[{b.section, b.key}] = &b;
    sections.insert(b.section);
  }
  for (const auto& [section, body] : tree) {
    if (!sections.count(section)) {
      if (body.empty()) throw ConfigError("config key '" + section + "' outside a section");
      throw ConfigError("unknown config section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      auto it = index.find({section, key});
      if (it == index.end()) throw ConfigError("unknown config key [" + section + "] " + key);
      it->second->set(cfg, value.data());
    }
  }
  finish_config(cfg);
  return cfg;
}

AppConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("missing config file " + path.string());
  return config_from_ini(read_text_file(path));
}

std::string config_to_ini(const AppConfig& cfg) {
  std::string out;
  std::string current;
  for (const Binding& b : bindings()) {
    if (b.section != current) {
      if (!current.empty()) out += "\n";
      out += "[" + b.section + "]\n";
      current = b.section;
    }
    out += b.key + " = " + b.get(cfg) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

std::string report_to_csv(const EvalReport& report) {
  std::string out = "id,shape,group,label,prediction,y1,y2,y3,y4,y5\n";
  for (const Prediction& p : report.table) {
    out += p.id + "," + p.shape_tag + "," + to_string(p.group) + "," + fmt(p.label) + "," +
           fmt(p.prediction);
    for (double y : p.steps) out += "," + fmt(y);
    out += "\n";
  }
  return out;
}

void write_report_csv(const fs::path& path, const EvalReport& report) {
  write_text_file(path, report_to_csv(report));
}

EvalReport read_report_csv(const fs::path& path) {
  std::istringstream is(read_text_file(path));
  std::string line;
  if (!std::getline(is, line)) throw DataError(path.string() + " is empty");
  const auto header = split(line, ',');
  auto column = [&](const std::string& name) -> int {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int c_id = column("id"), c_label = column("label"), c_pred = column("prediction");
  const int c_shape = column("shape"), c_group = column("group");
  if (c_id < 0 || c_label < 0 || c_pred < 0) {
    throw DataError(path.string() + " needs id, label and prediction columns");
  }
  std::array<int, kClipLength> c_steps{};
  for (int k = 0; k < kClipLength; ++k) c_steps[k] = column("y" + std::to_string(k + 1));
  std::vector<Prediction> table;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": wrong number of columns");
    }
    Prediction p;
    p.id = cells[c_id];
    if (!parse_number(cells[c_label], p.label) || !parse_number(cells[c_pred], p.prediction)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad number");
    }
    if (c_shape >= 0) p.shape_tag = cells[c_shape];
    if (c_group >= 0) {
      try {
        p.group = group_tag_from_string(cells[c_group]);
      } catch (const Error& e) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    for (int k = 0; k < kClipLength; ++k) {
      p.steps[k] = p.prediction;
      if (c_steps[k] >= 0 && !parse_number(cells[c_steps[k]], p.steps[k])) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad number");
      }
    }
    table.push_back(std::move(p));
  }
  return summarize(std::move(table));
}

void write_loss_csv(const fs::path& path, const std::vector<double>& losses) {
  std::string out = "iteration,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i)
    out += std::to_string(i + 1) + "," + fmt(losses[i]) + "\n";
  write_text_file(path, out);
}

std::vector<double> read_loss_csv(const fs::path& path) {
  std::istringstream is(read_text_file(path));
  std::string line;
  std::getline(is, line);
  std::vector<double> out;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    double v = 0.0;
    if (cells.size() != 2 || !parse_number(cells[1], v))
      throw DataError(path.string() + ": bad loss row");
    out.push_back(v);
  }
  return out;
}

namespace {

constexpr double kPlotSize = 400.0;
constexpr double kMargin = 50.0;

std::string svg_open() {
  const std::string side = fmt(kPlotSize + 2 * kMargin);
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + side + "\" height=\"" + side +
         "\" viewBox=\"0 0 " + side + " " + side +
         "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string svg_axes(const std::string& x_label, const std::string& y_label, double x_max,
                     double y_lo, double y_hi) {
  const double x0 = kMargin, y0 = kMargin + kPlotSize, x1 = kMargin + kPlotSize, y1 = kMargin;
  std::string s = "<path d=\"M" + fmt(x0) + " " + fmt(y1) + " L" + fmt(x0) + " " + fmt(y0) + " L" +
                  fmt(x1) + " " + fmt(y0) + "\" stroke=\"black\" fill=\"none\"/>\n";
  s += "<text x=\"" + fmt(x0 + kPlotSize / 2) + "\" y=\"" + fmt(y0 + 35) +
       "\" text-anchor=\"middle\">" + x_label + "</text>\n";
  s += "<text x=\"15\" y=\"" + fmt(y1 + kPlotSize / 2) +
       "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " + fmt(y1 + kPlotSize / 2) + ")\">" +
       y_label + "</text>\n";
  s += "<text x=\"" + fmt(x1) + "\" y=\"" + fmt(y0 + 15) + "\" text-anchor=\"end\">" +
       fmt_fixed(x_max, 0) + "</text>\n";
  s += "<text x=\"" + fmt(x0 - 5) + "\" y=\"" + fmt(y1 + 5) + "\" text-anchor=\"end\">" +
       fmt_fixed(y_hi, 3) + "</text>\n";
  s += "<text x=\"" + fmt(x0 - 5) + "\" y=\"" + fmt(y0) + "\" text-anchor=\"end\">" +
       fmt_fixed(y_lo, 3) + "</text>\n";
  return s;
}

}  // namespace

std::string scatter_svg(const EvalReport& report) {
  auto px = [](double v) { return kMargin + std::clamp(v, 0.0, 100.0) / 100.0 * kPlotSize; };
  auto py = [](double v) {
    return kMargin + kPlotSize - std::clamp(v, 0.0, 100.0) / 100.0 * kPlotSize;
  };
  std::string s = svg_open();
  s += svg_axes("label (Shore 00)", "prediction (Shore 00)", 100.0, 0.0, 100.0);
  s += "<line x1=\"" + fmt(px(0)) + "\" y1=\"" + fmt(py(0)) + "\" x2=\"" + fmt(px(100)) +
       "\" y2=\"" + fmt(py(100)) + "\" stroke=\"grey\" stroke-dasharray=\"4 4\"/>\n";
  for (const Prediction& p : report.table) {
    s += "<circle cx=\"" + fmt_fixed(px(p.label), 2) + "\" cy=\"" + fmt_fixed(py(p.prediction), 2) +
         "\" r=\"2.5\" fill=\"steelblue\" fill-opacity=\"0.6\"/>\n";
  }
  s += "<text x=\"" + fmt(kMargin + 5) + "\" y=\"" + fmt(kMargin + 15) + "\">" +
       summary_line(report) + "</text>\n";
  s += "</svg>\n";
  return s;
}

std::string loss_svg(const std::vector<double>& losses) {
  std::string s = svg_open();
  double lo = 0.0, hi = 1.0;
  if (!losses.empty()) {
    lo = *std::min_element(losses.begin(), losses.end());
    hi = *std::max_element(losses.begin(), losses.end());
    if (hi <= lo) hi = lo + 1.0;
  }
  const double n = std::max<double>(1.0, static_cast<double>(losses.size()));
  s += svg_axes("iteration", "loss", n, lo, hi);
  if (!losses.empty()) {
    s += "<polyline fill=\"none\" stroke=\"firebrick\" points=\"";
    for (std::size_t i = 0; i < losses.size(); ++i) {
      const double x = kMargin + (losses.size() == 1 ? 0.0 : i / (n - 1.0)) * kPlotSize;
      const double y = kMargin + kPlotSize - (losses[i] - lo) / (hi - lo) * kPlotSize;
      s += fmt_fixed(x, 2) + "," + fmt_fixed(y, 2) + " ";
    }
    s += "\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  os << text;
  if (!os) throw DataError("write failed for " + path.string());
}

}  // namespace gelhard
