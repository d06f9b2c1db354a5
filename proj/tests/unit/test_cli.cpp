#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "gelhard/error.hpp"
#include "gelhard/io.hpp"
#include "gelhard/workflow.hpp"

using namespace gelhard;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path path;
  explicit Scratch(const std::string& name) {
    path = fs::temp_directory_path() / ("gelhard_cli_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~Scratch() { fs::remove_all(path); }
};

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(const Scratch& s, const std::string& args) {
  const fs::path out = s.path / "stdout.txt";
  const fs::path err = s.path / "stderr.txt";
  const std::string cmd = std::string("'") + GELHARD_CLI_PATH + "' " + args + " > '" +
                          out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text_file(out);
  r.err = read_text_file(err);
  return r;
}

const char* kEmptyConfig =
    "[dataset]\nseeds_per_cell = 0\nrobot_seeds_per_cell = 0\ncomplex_test_per_level = 0\n";

}  // namespace

TEST_CASE("cli usage errors exit 2 with a coded line") {
  Scratch s("usage");
  Run r = run(s, "");
  CHECK(r.code == 2);
  CHECK(r.err.rfind("E_USAGE: ", 0) == 0);
  write_text_file(s.path / "bad.ini", "[train]\nlearnin_rate = 0.1\n");
  r = run(s, "gen-data --config '" + (s.path / "bad.ini").string() + "' --out '" +
                 (s.path / "d").string() + "'");
  CHECK(r.code == 2);
  CHECK(r.err.rfind("E_CONFIG: ", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
}

TEST_CASE("cli gen-data with zero presses writes an empty manifest") {
  Scratch s("empty");
  write_text_file(s.path / "c.ini", kEmptyConfig);
  const Run r = run(s, "gen-data --config '" + (s.path / "c.ini").string() + "' --out '" +
                           (s.path / "d").string() + "'");
  CHECK(r.code == 0);
  const Manifest m = read_manifest(s.path / "d");
  CHECK(m.records.empty());
}

TEST_CASE("cli eval of identity predictions prints a perfect summary") {
  Scratch s("eval");
  write_text_file(s.path / "p.csv", "id,label,prediction\na,10,10\nb,35.5,35.5\nc,80,80\n");
  const Run r = run(s, "eval --predictions '" + (s.path / "p.csv").string() + "'");
  CHECK(r.code == 0);
  CHECK(r.out.rfind("r2=1.000000 rmse=0.000000\n", 0) == 0);
}

TEST_CASE("cli plot of an empty report succeeds") {
  Scratch s("plot");
  write_text_file(s.path / "r.csv", "id,shape,group,label,prediction,y1,y2,y3,y4,y5\n");
  const Run r = run(s, "plot --report '" + (s.path / "r.csv").string() + "' --out '" +
                           (s.path / "p").string() + "'");
  CHECK(r.code == 0);
  CHECK(read_text_file(s.path / "p" / "scatter.svg").find("</svg>") != std::string::npos);
  write_text_file(s.path / "bad.csv", "id,label,prediction\na,x,1\n");
  const Run bad = run(s, "plot --report '" + (s.path / "bad.csv").string() + "' --out '" +
                             (s.path / "p").string() + "'");
  CHECK(bad.code == 3);
  CHECK(bad.err.rfind("E_DATA: ", 0) == 0);
}

TEST_CASE("cli ingest of one labeled press and of an empty directory") {
  Scratch s("ingest");
  fs::create_directories(s.path / "raw" / "cup");
  TactileFrame f(4, 5, 0.5f);
  for (int t : {2, 10, 1})
    write_png(s.path / "raw" / "cup" / ("img" + std::to_string(t) + ".png"), f);
  write_text_file(s.path / "labels.csv", "cup,35.0\n");
  Run r =
      run(s, "ingest '" + (s.path / "raw").string() + "' --labels '" +
                 (s.path / "labels.csv").string() + "' --out '" + (s.path / "m").string() + "'");
  CHECK(r.code == 0);
  const Manifest m = read_manifest(s.path / "m");
  REQUIRE(m.records.size() == 1);
  CHECK(*m.records[0].label == 35.0);
  CHECK(m.records[0].frame_dir == "../raw/cup");

  fs::create_directories(s.path / "none");
  r = run(s, "ingest '" + (s.path / "none").string() + "'");
  CHECK(r.code == 0);
  CHECK(r.err.find("warning:") != std::string::npos);
  CHECK(read_manifest(s.path / "none").records.empty());
}

TEST_CASE("cli rejects future manifests and surfaces no-contact presses") {
  Scratch s("errors");
  write_text_file(s.path / "d" / "manifest.json", "{\"version\": 2, \"seed\": 0, \"records\": []}");
  Run r = run(
      s, "train --data '" + (s.path / "d").string() + "' --out '" + (s.path / "r").string() + "'");
  CHECK(r.code == 3);
  CHECK(r.err.rfind("E_DATA: ", 0) == 0);

  Model model(ModelConfig{16, 16, 3, 1, 1, {2, 2, 2, 2}, 2, 2, 1.0, 100.0}, 3);
  model.save((s.path / "m.bin").string());
  fs::create_directories(s.path / "flat");
  const TactileFrame grey(16, 16, 0.5f);
  for (int t = 0; t < 8; ++t) write_png(s.path / "flat" / ("f" + std::to_string(t) + ".png"), grey);
  r = run(s, "predict --model '" + (s.path / "m.bin").string() + "' '" +
                 (s.path / "flat").string() + "'");
  CHECK(r.code == 3);
  CHECK(r.err.rfind("E_NO_CONTACT: ", 0) == 0);

  write_text_file(s.path / "broken.bin", "GHMODEL");
  r = run(s, "predict --model '" + (s.path / "broken.bin").string() + "' '" +
                 (s.path / "flat").string() + "'");
  CHECK(r.code == 3);
}

TEST_CASE("cli predict prints hardness and frame indices") {
  Scratch s("predict");
  SensorModel sensor;
  const PressSequence seq = synth_sequence(IndenterShape{Sphere{10.0}, {}}, Shore00(50.0),
                                           human_press_profile(4), sensor);
  SequenceRecord rec;
  rec.id = "p";
  rec.frame_dir = "p";
  write_press(s.path, rec, seq);
  Model model(ModelConfig{90, 120, 3, 2, 2, {2, 2, 2, 2}, 2, 2, 1.0, 100.0}, 5);
  model.save((s.path / "m.bin").string());
  const Run r = run(
      s, "predict --model '" + (s.path / "m.bin").string() + "' '" + (s.path / "p").string() + "'");
  CHECK(r.code == 0);
  const ClipIndices idx = standard_indices(seq.intensity_series, AppConfig{}.tau());
  char expected[64];
  std::snprintf(expected, sizeof expected, "frames=%d,%d,%d,%d,%d\n", idx[0], idx[1], idx[2],
                idx[3], idx[4]);
  CHECK(r.out.rfind("hardness=", 0) == 0);
  CHECK(r.out.find(expected) != std::string::npos);
}

TEST_CASE("parallel synthesis does not depend on the worker count") {
  AppConfig cfg = config_from_ini(
      "[dataset]\nlevels = 2\nsphere_radii = 10\ncylinder_radii =\n"
      "include_flat = false\ninclude_edge = false\nseeds_per_cell = 2\n");
  const std::vector<GenItem> items = plan_for_sets(cfg.dataset, {});
  const std::vector<StoredSequence> one = synthesize_store(cfg, items, 1);
  const std::vector<StoredSequence> three = synthesize_store(cfg, items, 3);
  REQUIRE(one.size() == three.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].record.id == three[i].record.id);
    CHECK(one[i].frames == three[i].frames);
    CHECK(one[i].intensity == three[i].intensity);
  }
  std::atomic<int> calls{0};
  const auto body = [&](std::size_t i) {
    ++calls;
    if (i == 3) throw DataError("boom");
  };
  CHECK_THROWS_AS(parallel_for(10, 2, body), DataError);
  CHECK(calls >= 4);
}
