#include "gelhard/traineval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "gelhard/error.hpp"
#include "gelhard/rng.hpp"

namespace gelhard {

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw ConfigError("learning_rate must be >= 0");
  }
  if (cfg.iterations < 0) throw ConfigError("iterations must be >= 0");
  if (cfg.lr_step <= 0) throw ConfigError("lr_step must be > 0");
  if (!(cfg.lr_decay > 0.0 && cfg.lr_decay <= 1.0))
    throw ConfigError("lr_decay must lie in (0, 1]");
  if (cfg.batch_size <= 0) throw ConfigError("batch_size must be > 0");
  if (!(cfg.huber_kappa > 0.0)) throw ConfigError("huber_kappa must be > 0");
}

namespace {

double clip_rms(const std::vector<const StoredSequence*>& seqs) {
  double sq = 0.0;
  double n = 0.0;
  for (const StoredSequence* s : seqs) {
    const SelectedClip c = s->standard_clip();
    for (int k = 1; k < kClipLength; ++k) {
      for (float v : c.frames[static_cast<std::size_t>(k)].rgb) sq += static_cast<double>(v) * v;
      n += static_cast<double>(c.frames[static_cast<std::size_t>(k)].rgb.size());
    }
  }
  return n > 0.0 ? std::sqrt(sq / n) : 0.0;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::vector<const StoredSequence*>& train_split,
                  double start_threshold, const TrainProgress& progress, const TrainStop& stop) {
  validate(cfg);
  if (train_split.empty()) throw ConfigError("training split is empty");

  ModelConfig mcfg = cfg.model;
  mcfg.input_rows = train_split.front()->rows;
  mcfg.input_cols = train_split.front()->cols;
  if (cfg.input_scale > 0.0) {
    mcfg.input_scale = cfg.input_scale;
  } else {
    const double rms = clip_rms(train_split);
    mcfg.input_scale = rms > 0.0 ? 1.0 / rms : 1.0;
  }

  TrainResult result;
  result.model = Model(mcfg, mix_seed(cfg.seed, 0x4d4f44454c));
  Model& model = result.model;

  std::vector<double> labels;
  std::vector<std::vector<int>> endpoints;
  for (const StoredSequence* s : train_split) {
    if (!s->record.label) throw DataError("training press '" + s->record.id + "' has no label");
    labels.push_back(*s->record.label);
    std::vector<int> ends;
    if (cfg.augment) {
      for (const auto& [start, e] : truncate_endpoints(s->intensity, start_threshold)) {
        if (start == s->start) ends.push_back(e);
      }
    }
    if (ends.empty()) ends.push_back(s->end);
    endpoints.push_back(std::move(ends));
  }
  const double mean_label = std::accumulate(labels.begin(), labels.end(), 0.0) / labels.size();
  model.param("head.b")[0] = mean_label / mcfg.output_scale;

  Optimizer opt(cfg.optimizer, model.params());
  Rng rng(mix_seed(cfg.seed, 0x545241494e));
  const int n = static_cast<int>(train_split.size());
  std::vector<SelectedClip> clips(static_cast<std::size_t>(cfg.batch_size));
  std::vector<const SelectedClip*> ptrs;
  std::vector<double> targets;
  std::vector<Tensor> grads;
  for (int it = 0; it < cfg.iterations; ++it) {
    ptrs.clear();
    targets.clear();
    for (int b = 0; b < cfg.batch_size; ++b) {
      const int i = rng.uniform_int(0, n - 1);
      const StoredSequence& s = *train_split[static_cast<std::size_t>(i)];
      const std::vector<int>& ends = endpoints[static_cast<std::size_t>(i)];
      const int e =
          ends[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(ends.size()) - 1))];
      clips[static_cast<std::size_t>(b)] = s.clip(indices_for_endpoint(s.intensity, s.start, e));
      ptrs.push_back(&clips[static_cast<std::size_t>(b)]);
      targets.push_back(labels[static_cast<std::size_t>(i)]);
    }
    const double loss = model.loss_and_grad(ptrs, targets, cfg.huber_kappa, grads);
    if (!std::isfinite(loss)) {
      throw DivergenceError("training loss became non-finite at iteration " + std::to_string(it));
    }
    const double lr = cfg.learning_rate * std::pow(cfg.lr_decay, it / cfg.lr_step);
    opt.step(model.params(), grads, lr);
    result.loss_curve.push_back(loss);
    if (progress) progress(it, loss);
    if (stop && stop(it, model)) break;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Metrics

namespace {

void check_pair(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DomainError("metric inputs differ in length");
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double r_squared(const std::vector<double>& labels, const std::vector<double>& predictions) {
  check_pair(labels, predictions);
  if (labels.empty()) return 0.0;
  const double mean = std::accumulate(labels.begin(), labels.end(), 0.0) / labels.size();
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ss_res += (labels[i] - predictions[i]) * (labels[i] - predictions[i]);
    ss_tot += (labels[i] - mean) * (labels[i] - mean);
  }
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

double rmse(const std::vector<double>& labels, const std::vector<double>& predictions) {
  check_pair(labels, predictions);
  if (labels.empty()) return 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    ss += (labels[i] - predictions[i]) * (labels[i] - predictions[i]);
  return std::sqrt(ss / labels.size());
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  check_pair(a, b);
  if (a.size() < 2) return 0.0;
  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  const double mean = (a.size() + 1) / 2.0;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - mean) * (rb[i] - mean);
    saa += (ra[i] - mean) * (ra[i] - mean);
    sbb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double mean_signed_error(const std::vector<double>& labels,
                         const std::vector<double>& predictions) {
  check_pair(labels, predictions);
  if (labels.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) acc += predictions[i] - labels[i];
  return acc / labels.size();
}

EvalReport summarize(std::vector<Prediction> table) {
  EvalReport r;
  std::vector<double> labels, preds, high_labels, high_preds;
  for (const Prediction& p : table) {
    labels.push_back(p.label);
    preds.push_back(p.prediction);
    if (p.label >= 70.0) {
      high_labels.push_back(p.label);
      high_preds.push_back(p.prediction);
    }
  }
  r.n_videos = static_cast<int>(table.size());
  r.r_squared = r_squared(labels, preds);
  r.rmse = rmse(labels, preds);
  r.spearman = spearman(labels, preds);
  r.mean_signed_error = mean_signed_error(labels, preds);
  r.high_n = static_cast<int>(high_labels.size());
  r.high_rmse = rmse(high_labels, high_preds);
  r.high_mean_signed_error = mean_signed_error(high_labels, high_preds);
  r.table = std::move(table);
  return r;
}

EvalReport evaluate(const Model& model, const std::vector<const StoredSequence*>& test_split) {
  constexpr std::size_t kBatch = 16;
  std::vector<Prediction> table;
  for (std::size_t lo = 0; lo < test_split.size(); lo += kBatch) {
    const std::size_t hi = std::min(test_split.size(), lo + kBatch);
    std::vector<SelectedClip> clips;
    for (std::size_t i = lo; i < hi; ++i) clips.push_back(test_split[i]->standard_clip());
    std::vector<const SelectedClip*> ptrs;
    for (const SelectedClip& c : clips) ptrs.push_back(&c);
    const std::vector<ClipOutputs> ys = model.forward(ptrs);
    for (std::size_t i = lo; i < hi; ++i) {
      const SequenceRecord& rec = test_split[i]->record;
      if (!rec.label) throw DataError("test press '" + rec.id + "' has no label");
      Prediction p;
      p.id = rec.id;
      p.shape_tag = rec.shape_tag;
      p.group = rec.group;
      p.label = *rec.label;
      p.steps = ys[i - lo];
      p.prediction = predict_hardness(p.steps).value();
      table.push_back(std::move(p));
    }
  }
  return summarize(std::move(table));
}

std::string summary_line(const EvalReport& report) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "r2=%.6f rmse=%.6f", report.r_squared, report.rmse);
  return buf;
}

// ---------------------------------------------------------------------------
// Splits

SplitMode split_mode_from_int(int mode) {
  if (mode < 1 || mode > 3) throw ConfigError("split mode must be 1, 2 or 3");
  return static_cast<SplitMode>(mode);
}

Split make_splits(const std::vector<SequenceRecord>& records, SplitMode mode,
                  const SplitConfig& cfg) {
  Split s;
  auto is_main_human = [](const SequenceRecord& r) {
    return r.set == kMainSet && r.profile == ProfileKind::kHuman && r.label.has_value();
  };
  switch (mode) {
    case SplitMode::kSeenShape: {
      if (cfg.level_stride <= 0) throw ConfigError("level_stride must be > 0");
      std::set<double> level_set;
      for (const SequenceRecord& r : records) {
        if (is_main_human(r)) level_set.insert(*r.label);
      }
      const std::vector<double> levels(level_set.begin(), level_set.end());
      std::set<double> held;
      for (std::size_t i = 0; i < levels.size(); ++i) {
        if (static_cast<int>(i) % cfg.level_stride == cfg.level_offset) held.insert(levels[i]);
      }
      for (std::size_t i = 0; i < records.size(); ++i) {
        const SequenceRecord& r = records[i];
        if (!is_main_human(r)) continue;
        if (held.count(*r.label) == 0) {
          s.train.push_back(i);
        } else if (r.group == GroupTag::kBasic) {
          s.test.push_back(i);
        }
      }
      s.description = "seen shapes, " + std::to_string(levels.size() - held.size()) +
                      " training levels, " + std::to_string(held.size()) + " held-out levels";
      break;
    }
    case SplitMode::kUnseenShape: {
      auto held = [&](const SequenceRecord& r) {
        for (const ShapeSpec& h : cfg.held_out_shapes) {
          if (h.family == r.shape_family && std::abs(h.radius_mm - r.shape_radius_mm) < 1e-9)
            return true;
        }
        return false;
      };
      for (std::size_t i = 0; i < records.size(); ++i) {
        const SequenceRecord& r = records[i];
        if (!is_main_human(r)) continue;
        if (!held(r)) {
          s.train.push_back(i);
        } else if (r.group == GroupTag::kBasic) {
          s.test.push_back(i);
        }
      }
      s.description =
          "unseen shapes, " + std::to_string(cfg.held_out_shapes.size()) + " held-out shapes";
      break;
    }
    case SplitMode::kRobot: {
      for (std::size_t i = 0; i < records.size(); ++i) {
        const SequenceRecord& r = records[i];
        if (is_main_human(r)) {
          s.train.push_back(i);
        } else if (r.set == kRobotSet && r.profile == ProfileKind::kRobot && r.label) {
          s.test.push_back(i);
        }
      }
      s.description = "hand-held presses for training, gripper presses for testing";
      break;
    }
  }
  if (s.train.empty() || s.test.empty()) {
    throw ConfigError("split mode " + std::to_string(static_cast<int>(mode)) + " leaves an empty " +
                      (s.train.empty() ? "training" : "test") + " set");
  }
  return s;
}

}  // namespace gelhard
