#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "gelhard/error.hpp"
#include "gelhard/io.hpp"

using namespace gelhard;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / ("gelhard_io_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

TactileFrame byte_frame(int rows, int cols, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  TactileFrame f(rows, cols);
  for (float& v : f.rgb) v = byte(gen) / 255.0f;
  return f;
}

void write_ppm_file(const fs::path& p, const TactileFrame& f,
                    const std::string& header_extra = "") {
  std::ofstream os(p, std::ios::binary);
  os << "P6\n" << header_extra << f.cols << " " << f.rows << "\n255\n";
  for (float v : f.rgb)
    os.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f))));
}

SequenceRecord record(const std::string& id, std::optional<double> label) {
  SequenceRecord r;
  r.id = id;
  r.set = "main";
  r.label = label;
  r.shape_tag = "sphere_r10";
  r.shape_family = "sphere";
  r.shape_radius_mm = 10.0;
  r.group = GroupTag::kBadContact;
  r.profile = ProfileKind::kRobot;
  r.seed = 12345678901234ULL;
  r.frame_count = 7;
  r.saturated = true;
  r.frame_dir = id;
  return r;
}

}  // namespace

TEST_CASE("png round trip is exact for 8-bit frames") {
  TempDir dir("png");
  const TactileFrame f = byte_frame(9, 13, 5);
  write_png(dir.path / "a.png", f);
  CHECK(read_png(dir.path / "a.png") == f);
  CHECK(read_image(dir.path / "a.png") == f);
}

TEST_CASE("ppm reader matches written bytes and accepts comments") {
  TempDir dir("ppm");
  const TactileFrame f = byte_frame(4, 6, 8);
  write_ppm_file(dir.path / "a.ppm", f, "# comment line\n");
  CHECK(read_ppm(dir.path / "a.ppm") == f);
  std::ofstream(dir.path / "bad.ppm") << "P3\n1 1\n255\n0 0 0\n";
  CHECK_THROWS_AS(read_ppm(dir.path / "bad.ppm"), DataError);
  std::ofstream(dir.path / "short.ppm", std::ios::binary) << "P6\n4 4\n255\nabc";
  CHECK_THROWS_AS(read_ppm(dir.path / "short.ppm"), DataError);
  CHECK_THROWS_AS(read_image(dir.path / "x.bmp"), DataError);
}

TEST_CASE("frame files are ordered numerically by their last number") {
  TempDir dir("order");
  const std::vector<std::string> names{"cam2_f10.ppm", "cam2_f9.ppm", "cam2_f100.ppm",
                                       "cam2_f0.ppm", "cam2_f11.ppm"};
  for (std::size_t i = 0; i < names.size(); ++i)
    write_ppm_file(dir.path / names[i], byte_frame(2, 2, i));
  std::ofstream(dir.path / "notes.txt") << "ignored";
  const auto files = list_frame_files(dir.path);
  std::vector<std::string> got;
  for (const auto& p : files) got.push_back(p.filename().string());
  // Oracle: strip the fixed prefix and sort by integer value.
  std::vector<std::string> expected = names;
  std::sort(expected.begin(), expected.end(), [](const std::string& a, const std::string& b) {
    return std::stoi(a.substr(6)) < std::stoi(b.substr(6));
  });
  CHECK(got == expected);
  CHECK(read_frames(dir.path).size() == names.size());

  write_ppm_file(dir.path / "cam2_f010.ppm", byte_frame(2, 2, 1));
  CHECK_THROWS_AS(list_frame_files(dir.path), DataError);
  CHECK_THROWS_AS(list_frame_files(dir.path / "missing"), DataError);
}

TEST_CASE("manifest json round trip keeps every field") {
  Manifest m;
  m.seed = 99;
  m.records = {record("main_0001", 42.5), record("real_a", std::nullopt)};
  const std::string text = manifest_to_json(m);
  const Manifest back = manifest_from_json(text);
  REQUIRE(back.records.size() == 2);
  CHECK(back.seed == 99);
  const SequenceRecord& a = back.records[0];
  CHECK(a.id == "main_0001");
  CHECK(*a.label == 42.5);
  CHECK(a.group == GroupTag::kBadContact);
  CHECK(a.profile == ProfileKind::kRobot);
  CHECK(a.seed == 12345678901234ULL);
  CHECK(a.frame_count == 7);
  CHECK(a.saturated);
  CHECK(a.shape_radius_mm == 10.0);
  CHECK_FALSE(back.records[1].label.has_value());
  CHECK(text.find("\"unknown\"") != std::string::npos);
  CHECK(manifest_to_json(back) == text);
}

TEST_CASE("manifest validation") {
  Manifest m;
  m.records = {record("a", 10.0)};
  std::string text = manifest_to_json(m);
  std::string v2 = text;
  v2.replace(v2.find("\"version\": 1"), 12, "\"version\": 2");
  CHECK_THROWS_AS(manifest_from_json(v2), DataError);
  CHECK_THROWS_AS(manifest_from_json("{not json"), DataError);

  m.records = {record("a", 10.0), record("a", 20.0)};
  CHECK_THROWS_AS(manifest_from_json(manifest_to_json(m)), DataError);
  m.records = {record("a", 100.5)};
  CHECK_THROWS_AS(manifest_from_json(manifest_to_json(m)), DataError);
  m.records = {record("a", -1.0)};
  CHECK_THROWS_AS(manifest_from_json(manifest_to_json(m)), DataError);

  TempDir dir("manifest");
  m.records = {record("a", 10.0)};
  write_manifest(dir.path, m);
  CHECK_THROWS_AS(read_manifest(dir.path), DataError);  // frame dir missing
  fs::create_directories(dir.path / "a");
  CHECK(read_manifest(dir.path).records.size() == 1);
  CHECK_THROWS_AS(read_manifest(dir.path / "nowhere"), DataError);
}

TEST_CASE("ingest builds a sorted manifest from press directories") {
  TempDir dir("ingest");
  const fs::path raw = dir.path / "raw";
  for (const std::string id : {"press_b", "press_a", "press_c"}) {
    fs::create_directories(raw / id);
    for (int t = 0; t < 3; ++t)
      write_ppm_file(raw / id / ("f" + std::to_string(t) + ".ppm"), byte_frame(2, 3, t));
  }
  fs::create_directories(raw / "empty");
  std::ofstream(dir.path / "labels.csv") << "id,label\npress_a,35\npress_c,80.5\nghost,12\n";
  std::vector<std::string> warnings;
  const Manifest m = ingest_directory(raw, dir.path / "labels.csv", &warnings);
  REQUIRE(m.records.size() == 3);
  CHECK(m.records[0].id == "press_a");
  CHECK(m.records[1].id == "press_b");
  CHECK(m.records[2].id == "press_c");
  CHECK(*m.records[0].label == 35.0);
  CHECK_FALSE(m.records[1].label.has_value());
  CHECK(*m.records[2].label == 80.5);
  CHECK(m.records[0].set == "real");
  CHECK(m.records[0].frame_count == 3);
  CHECK(warnings.size() == 2);

  std::ofstream(dir.path / "dup.csv") << "press_a,35\npress_a,36\n";
  CHECK_THROWS_AS(ingest_directory(raw, dir.path / "dup.csv"), DataError);
  std::ofstream(dir.path / "range.csv") << "press_a,135\n";
  CHECK_THROWS_AS(ingest_directory(raw, dir.path / "range.csv"), DataError);
  CHECK_NOTHROW(ingest_directory(raw, {}));
}

TEST_CASE("write_press and load_dataset") {
  TempDir dir("press");
  SensorModel sensor;
  sensor.render.noise_sigma = 0.0;
  PressProfile profile = robot_press_profile(3, sensor.sim);
  IndenterShape shape{Sphere{10.0}, {}};
  const PressSequence seq = synth_sequence(shape, Shore00(60.0), profile, sensor);
  SequenceRecord r = record("p0", 60.0);
  r.frame_count = static_cast<int>(seq.frames.size());
  write_press(dir.path, r, seq);
  CHECK(fs::exists(dir.path / "p0" / "meta.json"));
  const auto frames = read_frames(dir.path / "p0");
  REQUIRE(frames.size() == seq.frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) CHECK(frames[t] == seq.frames[t]);

  fs::create_directories(dir.path / "blank");
  for (int t = 0; t < 6; ++t)
    write_png(dir.path / "blank" / ("frame_" + std::to_string(t) + ".png"), seq.frames[0]);
  Manifest m;
  m.records = {r, record("blank", 10.0)};
  const LoadedDataset loaded = load_dataset(dir.path, m, {0, 1}, 0.0123, FrameKeep::kStandardClip);
  CHECK(loaded.sequences.size() == 1);
  REQUIRE(loaded.skipped.size() == 1);
  CHECK(loaded.skipped[0].rfind("blank:", 0) == 0);
}

TEST_CASE("reference config equals the built-in defaults") {
  const fs::path ref = fs::path(GELHARD_SOURCE_DIR) / "configs" / "reference.ini";
  REQUIRE(fs::exists(ref));
  const AppConfig defaults = config_from_ini("");
  CHECK(read_text_file(ref) == config_to_ini(defaults));
  CHECK(config_to_ini(load_config(ref)) == config_to_ini(defaults));
}

TEST_CASE("config parsing") {
  const AppConfig d = config_from_ini("");
  CHECK(d.tau() == doctest::Approx(2 * 0.01 / std::sqrt(std::acos(-1.0)) + 0.001));
  CHECK(d.train.seed == d.seed);

  const AppConfig c = config_from_ini(
      "[general]\nseed = 7\n[render]\nmarkers = false\nlight_elevation_deg = 45\n"
      "[model]\nwidths = 4,8,8,4\n[split]\nheld_out_shapes = sphere:5, flat:0\n"
      "[pipeline]\nstart_threshold = 0.02\n[train]\noptimizer = sgd\n");
  CHECK(c.seed == 7);
  CHECK(c.dataset.seed == 7);
  CHECK_FALSE(c.sensor.render.markers);
  CHECK(c.train.model.widths == std::array<int, 4>{4, 8, 8, 4});
  REQUIRE(c.split.held_out_shapes.size() == 2);
  CHECK(c.split.held_out_shapes[1].family == "flat");
  CHECK(c.tau() == 0.02);
  CHECK(c.train.optimizer.kind == OptimizerKind::kSgd);
  CHECK(c.sensor.render.rig.lights[0].direction.z ==
        doctest::Approx(std::sin(std::acos(-1.0) / 4)));
  CHECK(config_to_ini(config_from_ini(config_to_ini(c))) == config_to_ini(c));

  CHECK_THROWS_AS(config_from_ini("[train]\nlearning_rat = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(config_from_ini("[trainer]\niterations = 3\n"), ConfigError);
  CHECK_THROWS_AS(config_from_ini("[train]\niterations = many\n"), ConfigError);
  CHECK_THROWS_AS(config_from_ini("[render]\nmarkers = maybe\n"), ConfigError);
  CHECK_THROWS_AS(config_from_ini("[model]\nwidths = 1,2\n"), ConfigError);
  CHECK_THROWS_AS(config_from_ini("[gel]\nhardness = 140\n"), ConfigError);
  CHECK_THROWS_AS(config_from_ini("[train\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/x.ini"), ConfigError);
}

TEST_CASE("report csv round trip and summary line") {
  std::vector<Prediction> table;
  for (int i = 0; i < 6; ++i) {
    Prediction p;
    p.id = "s" + std::to_string(i);
    p.shape_tag = "corner";
    p.label = 10.0 * i + 5.0;
    p.prediction = p.label;
    p.steps.fill(p.label);
    table.push_back(p);
  }
  const EvalReport rep = summarize(table);
  CHECK(summary_line(rep) == "r2=1.000000 rmse=0.000000");
  TempDir dir("report");
  write_report_csv(dir.path / "r.csv", rep);
  const EvalReport back = read_report_csv(dir.path / "r.csv");
  CHECK(summary_line(back) == summary_line(rep));
  CHECK(report_to_csv(back) == report_to_csv(rep));

  std::ofstream(dir.path / "min.csv") << "label,prediction,id\n10,20,a\n30,30,b\n50,40,c\n";
  const EvalReport m = read_report_csv(dir.path / "min.csv");
  CHECK(m.n_videos == 3);
  CHECK(m.rmse == doctest::Approx(std::sqrt(200.0 / 3.0)));
  std::ofstream(dir.path / "bad.csv") << "id,label\na,1\n";
  CHECK_THROWS_AS(read_report_csv(dir.path / "bad.csv"), DataError);

  write_loss_csv(dir.path / "loss.csv", {0.5, 0.25, 0.125});
  CHECK(read_loss_csv(dir.path / "loss.csv") == std::vector<double>{0.5, 0.25, 0.125});
  const std::string svg = scatter_svg(rep);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(std::count(svg.begin(), svg.end(), '\n') > 6);
  CHECK(loss_svg({0.5, 0.25, 0.125}).find("polyline") != std::string::npos);
}
