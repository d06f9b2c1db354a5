#pragma once

// Training loop (minibatch gradient descent with step-decayed learning rate
// and endpoint-truncation augmentation), evaluation metrics and the three
// train/test split modes.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gelhard/dataset.hpp"
#include "gelhard/net.hpp"

namespace gelhard {

struct TrainConfig {
  double learning_rate = 0.001;
  int iterations = 3000;
  int lr_step = 2000;
  double lr_decay = 0.1;
  int batch_size = 16;
  std::uint64_t seed = 1;
  double huber_kappa = 1.0;
  // Draw a random truncation endpoint for every sampled press.
  bool augment = true;
  // Input scale for the encoder; <= 0 picks 1 / RMS of the training clips.
  double input_scale = 0.0;
  OptimizerConfig optimizer{};
  ModelConfig model{};
};

void validate(const TrainConfig& cfg);

struct TrainResult {
  Model model;
  std::vector<double> loss_curve;  // one entry per iteration
};

/// Called after every iteration with (iteration, loss).
using TrainProgress = std::function<void(int, double)>;
/// Called after every iteration; returning true ends training early.
using TrainStop = std::function<bool(int, const Model&)>;

/// Trains from scratch. Throws DivergenceError on a non-finite loss.
TrainResult train(const TrainConfig& cfg, const std::vector<const StoredSequence*>& train_split,
                  double start_threshold, const TrainProgress& progress = {},
                  const TrainStop& stop = {});

// ---------------------------------------------------------------------------
// Evaluation

struct Prediction {
  std::string id;
  std::string shape_tag;
  GroupTag group = GroupTag::kBasic;
  double label = 0.0;
  double prediction = 0.0;
  ClipOutputs steps{};
};

struct EvalReport {
  double r_squared = 0.0;
  double rmse = 0.0;
  double spearman = 0.0;
  double mean_signed_error = 0.0;
  int n_videos = 0;
  // Presses labelled 70 or harder, where predictions are expected to compress.
  int high_n = 0;
  double high_rmse = 0.0;
  double high_mean_signed_error = 0.0;
  std::vector<Prediction> table;
};

double r_squared(const std::vector<double>& labels, const std::vector<double>& predictions);
double rmse(const std::vector<double>& labels, const std::vector<double>& predictions);
/// Pearson correlation of average ranks.
double spearman(const std::vector<double>& a, const std::vector<double>& b);
double mean_signed_error(const std::vector<double>& labels, const std::vector<double>& predictions);

/// Summary statistics for a filled prediction table.
EvalReport summarize(std::vector<Prediction> table);

EvalReport evaluate(const Model& model, const std::vector<const StoredSequence*>& test_split);

/// "r2=... rmse=..." with six decimals.
std::string summary_line(const EvalReport& report);

// ---------------------------------------------------------------------------
// Splits

enum class SplitMode { kSeenShape = 1, kUnseenShape = 2, kRobot = 3 };

SplitMode split_mode_from_int(int mode);

struct SplitConfig {
  // Mode 1: hardness level i is held out when i % level_stride == level_offset.
  int level_stride = 4;
  int level_offset = 2;
  // Mode 2: (family, radius) pairs kept out of training.
  std::vector<ShapeSpec> held_out_shapes{
      {"sphere", 10.0}, {"sphere", 40.0}, {"cylinder", 10.0}, {"cylinder", 20.0}};
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::string description;
};

/// Indices into `records`. Throws ConfigError if either side is empty.
Split make_splits(const std::vector<SequenceRecord>& records, SplitMode mode,
                  const SplitConfig& cfg = {});

}  // namespace gelhard
