// gelhard: dataset generation, training, evaluation, prediction, ingestion
// and plotting for tactile hardness estimation.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gelhard/error.hpp"
#include "gelhard/io.hpp"
#include "gelhard/workflow.hpp"

namespace fs = std::filesystem;
using namespace gelhard;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool out_required) {
  cmd->add_option("--config", c.config, "INI configuration (defaults to the built-in reference)");
  cmd->add_option("--seed", c.seed, "Overrides [general] seed");
  auto* out = cmd->add_option("--out", c.out, "Output path");
  if (out_required) out->required();
}

AppConfig load(const Common& c) {
  AppConfig cfg = c.config.empty() ? config_from_ini("") : load_config(c.config);
  if (c.seed) apply_seed(cfg, *c.seed);
  return cfg;
}

struct GenArgs {
  Common common;
  std::vector<std::string> sets{kMainSet, kRobotSet, kComplexTestSet};
  int jobs = 0;
};

int run_gen(const GenArgs& a) {
  const AppConfig cfg = load(a.common);
  for (const std::string& s : a.sets) {
    if (s != kMainSet && s != kRobotSet && s != kComplexTestSet)
      throw ConfigError("unknown set '" + s + "'");
  }
  const std::vector<GenItem> items = plan_for_sets(cfg.dataset, a.sets);
  const Manifest m = generate_dataset(cfg, items, a.common.out, a.jobs);
  std::printf("wrote %zu presses to %s\n", m.records.size(), a.common.out.c_str());
  return 0;
}

struct TrainArgs {
  Common common;
  std::string data;
  int mode = 1;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  const AppConfig cfg = load(a.common);
  const Manifest manifest = read_manifest(a.data);
  const Split split = make_splits(manifest.records, split_mode_from_int(a.mode), cfg.split);
  LoadedDataset loaded =
      load_dataset(a.data, manifest, split.train, cfg.tau(), FrameKeep::kLoading);
  for (const std::string& s : loaded.skipped) std::fprintf(stderr, "skipped %s\n", s.c_str());
  if (loaded.sequences.empty()) throw DataError("no usable training presses");
  std::vector<const StoredSequence*> train_split;
  for (const StoredSequence& s : loaded.sequences) train_split.push_back(&s);
  std::fprintf(stderr, "%s: %zu training presses\n", split.description.c_str(), train_split.size());
  TrainProgress progress;
  if (!a.quiet) {
    progress = [](int it, double loss) {
      if ((it + 1) % 100 == 0) std::fprintf(stderr, "iteration %d loss %.6f\n", it + 1, loss);
    };
  }
  const TrainResult result = train(cfg.train, train_split, cfg.tau(), progress);
  const fs::path out = a.common.out;
  fs::create_directories(out);
  result.model.save((out / "model.bin").string());
  write_loss_csv(out / "loss.csv", result.loss_curve);
  std::printf("final loss %.6f, checkpoint %s\n",
              result.loss_curve.empty() ? 0.0 : result.loss_curve.back(),
              (out / "model.bin").c_str());
  return 0;
}

struct EvalArgs {
  Common common;
  std::string data;
  std::string model;
  std::string predictions;
  std::string set;
  int mode = 1;
};

void print_report(const EvalReport& r) {
  std::printf("%s\n", summary_line(r).c_str());
  std::printf("n=%d spearman=%.6f mean_signed_error=%.6f high_n=%d high_rmse=%.6f\n", r.n_videos,
              r.spearman, r.mean_signed_error, r.high_n, r.high_rmse);
}

int run_eval(const EvalArgs& a) {
  if (!a.predictions.empty()) {
    const EvalReport r = read_report_csv(a.predictions);
    if (!a.common.out.empty()) write_report_csv(a.common.out, r);
    print_report(r);
    return 0;
  }
  if (a.data.empty() || a.model.empty())
    throw ConfigError("eval needs --data and --model, or --predictions");
  if (a.common.out.empty()) throw ConfigError("eval needs --out for the report CSV");
  const AppConfig cfg = load(a.common);
  const Model model = Model::load(a.model);
  const Manifest manifest = read_manifest(a.data);
  std::vector<std::size_t> indices;
  if (!a.set.empty()) {
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
      if (manifest.records[i].set == a.set && manifest.records[i].label) indices.push_back(i);
    }
    if (indices.empty()) throw DataError("no labeled presses in set '" + a.set + "'");
  } else {
    indices = make_splits(manifest.records, split_mode_from_int(a.mode), cfg.split).test;
  }
  const LoadedDataset loaded =
      load_dataset(a.data, manifest, indices, cfg.tau(), FrameKeep::kStandardClip);
  for (const std::string& s : loaded.skipped) std::fprintf(stderr, "skipped %s\n", s.c_str());
  std::vector<const StoredSequence*> test;
  for (const StoredSequence& s : loaded.sequences) test.push_back(&s);
  const EvalReport r = evaluate(model, test);
  write_report_csv(a.common.out, r);
  print_report(r);
  return 0;
}

struct PredictArgs {
  Common common;
  std::string model;
  std::string press_dir;
};

int run_predict(const PredictArgs& a) {
  const AppConfig cfg = load(a.common);
  const Model model = Model::load(a.model);
  const std::vector<TactileFrame> frames = read_frames(a.press_dir);
  SequenceRecord rec;
  rec.id = fs::path(a.press_dir).filename().string();
  const StoredSequence seq = store_sequence(rec, frames, cfg.tau(), FrameKeep::kStandardClip);
  const SelectedClip clip = seq.standard_clip();
  const ClipOutputs y = model.forward(clip);
  const ClipIndices& idx = clip.source_indices;
  std::printf("hardness=%.2f frames=%d,%d,%d,%d,%d\n", predict_hardness(y).value(), idx[0], idx[1],
              idx[2], idx[3], idx[4]);
  return 0;
}

struct IngestArgs {
  Common common;
  std::string raw_dir;
  std::string labels;
};

int run_ingest(const IngestArgs& a) {
  std::vector<std::string> warnings;
  Manifest m = ingest_directory(a.raw_dir, a.labels, &warnings);
  const fs::path out = a.common.out.empty() ? fs::path(a.raw_dir) : fs::path(a.common.out);
  fs::create_directories(out);
  for (SequenceRecord& r : m.records) {
    r.frame_dir = fs::relative(fs::absolute(fs::path(a.raw_dir) / r.frame_dir), fs::absolute(out))
                      .generic_string();
  }
  if (m.records.empty()) warnings.push_back("no press directories found in " + a.raw_dir);
  for (const std::string& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  write_manifest(out, m);
  std::printf("ingested %zu presses into %s\n", m.records.size(), (out / "manifest.json").c_str());
  return 0;
}

struct PlotArgs {
  Common common;
  std::string report;
  std::string loss;
};

int run_plot(const PlotArgs& a) {
  if (a.report.empty() && a.loss.empty()) throw ConfigError("plot needs --report and/or --loss");
  const fs::path out = a.common.out;
  fs::create_directories(out);
  if (!a.report.empty()) {
    write_text_file(out / "scatter.svg", scatter_svg(read_report_csv(a.report)));
    std::printf("wrote %s\n", (out / "scatter.svg").c_str());
  }
  if (!a.loss.empty()) {
    write_text_file(out / "loss.svg", loss_svg(read_loss_csv(a.loss)));
    std::printf("wrote %s\n", (out / "loss.svg").c_str());
  }
  return 0;
}

int fail(const std::string& code, const std::string& what, ExitCode exit) {
  std::fprintf(stderr, "%s: %s\n", code.c_str(), what.c_str());
  return static_cast<int>(exit);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tactile hardness estimation toolkit"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Synthesize a labeled press dataset");
  add_common(gen_cmd, gen.common, true);
  gen_cmd->add_option("--sets", gen.sets, "Sets to generate (main, robot, complex_test)")
      ->delimiter(',');
  gen_cmd->add_option("--jobs", gen.jobs, "Worker threads (0 = all cores)");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset split");
  add_common(train_cmd, tr.common, true);
  train_cmd->add_option("--data", tr.data, "Dataset root")->required();
  train_cmd->add_option("--split-mode", tr.mode, "1 seen shapes, 2 unseen shapes, 3 gripper test")
      ->check(CLI::Range(1, 3));
  train_cmd->add_flag("--quiet", tr.quiet, "No progress output");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint or a predictions CSV");
  add_common(eval_cmd, ev.common, false);
  eval_cmd->add_option("--data", ev.data, "Dataset root");
  eval_cmd->add_option("--model", ev.model, "Checkpoint");
  eval_cmd->add_option("--split-mode", ev.mode, "Test split of this mode")->check(CLI::Range(1, 3));
  eval_cmd->add_option("--set", ev.set, "Evaluate every labeled press of a set instead of a split");
  eval_cmd->add_option("--predictions", ev.predictions, "Report CSV to summarize");

  PredictArgs pr;
  auto* predict_cmd = app.add_subcommand("predict", "Estimate the hardness of one press");
  add_common(predict_cmd, pr.common, false);
  predict_cmd->add_option("--model", pr.model, "Checkpoint")->required();
  predict_cmd->add_option("press_dir", pr.press_dir, "Directory of numbered frames")->required();

  IngestArgs in;
  auto* ingest_cmd = app.add_subcommand("ingest", "Build a manifest for recorded presses");
  add_common(ingest_cmd, in.common, false);
  ingest_cmd->add_option("raw_dir", in.raw_dir, "One subdirectory of frames per press")->required();
  ingest_cmd->add_option("--labels", in.labels, "CSV of id,label");

  PlotArgs pl;
  auto* plot_cmd = app.add_subcommand("plot", "Write SVG plots of a report and a loss curve");
  add_common(plot_cmd, pl.common, true);
  plot_cmd->add_option("--report", pl.report, "Report CSV");
  plot_cmd->add_option("--loss", pl.loss, "Loss CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("E_USAGE", e.what(), ExitCode::kUsage);
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*train_cmd) return run_train(tr);
    if (*eval_cmd) return run_eval(ev);
    if (*predict_cmd) return run_predict(pr);
    if (*ingest_cmd) return run_ingest(in);
    if (*plot_cmd) return run_plot(pl);
  } catch (const Error& e) {
    return fail(e.code(), e.what(), e.exit_code());
  } catch (const fs::filesystem_error& e) {
    return fail("E_IO", e.what(), ExitCode::kData);
  } catch (const std::exception& e) {
    return fail("E_INTERNAL", e.what(), ExitCode::kData);
  }
  return 0;
}
