#include "gelhard/workflow.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "gelhard/error.hpp"

namespace gelhard {

int default_jobs() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 0) jobs = default_jobs();
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n && !failed; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<GenItem> plan_for_sets(const DatasetConfig& cfg, const std::vector<std::string>& sets) {
  std::vector<GenItem> out;
  for (GenItem& item : generation_plan(cfg)) {
    if (sets.empty() || std::find(sets.begin(), sets.end(), item.record.set) != sets.end()) {
      out.push_back(std::move(item));
    }
  }
  return out;
}

std::vector<StoredSequence> synthesize_store(const AppConfig& cfg,
                                             const std::vector<GenItem>& items, int jobs,
                                             std::vector<std::string>* skipped) {
  const double tau = cfg.tau();
  std::vector<std::optional<StoredSequence>> slots(items.size());
  std::vector<std::string> reasons(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const GenItem& item = items[i];
    const PressSequence seq = synth_item(item, cfg.dataset, cfg.sensor);
    SequenceRecord rec = item.record;
    rec.frame_count = static_cast<int>(seq.frames.size());
    rec.saturated = seq.saturated;
    const FrameKeep keep = rec.set == kMainSet ? FrameKeep::kLoading : FrameKeep::kStandardClip;
    try {
      slots[i] = store_sequence(rec, seq.frames, tau, keep);
    } catch (const NoContactError& e) {
      reasons[i] = rec.id + ": " + e.what();
    } catch (const ClipTooShortError& e) {
      reasons[i] = rec.id + ": " + e.what();
    }
  });
  std::vector<StoredSequence> out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i]) {
      out.push_back(std::move(*slots[i]));
    } else if (skipped) {
      skipped->push_back(reasons[i]);
    }
  }
  return out;
}

Manifest generate_dataset(const AppConfig& cfg, const std::vector<GenItem>& items,
                          const std::filesystem::path& root, int jobs) {
  std::filesystem::create_directories(root);
  Manifest manifest;
  manifest.seed = cfg.dataset.seed;
  manifest.records.resize(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const PressSequence seq = synth_item(items[i], cfg.dataset, cfg.sensor);
    SequenceRecord rec = items[i].record;
    rec.frame_count = static_cast<int>(seq.frames.size());
    rec.saturated = seq.saturated;
    write_press(root, rec, seq);
    manifest.records[i] = std::move(rec);
  });
  write_manifest(root, manifest);
  return manifest;
}

std::vector<const StoredSequence*> select(const std::vector<StoredSequence>& store,
                                          const std::vector<std::size_t>& indices) {
  std::vector<const StoredSequence*> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(&store.at(i));
  return out;
}

std::vector<SequenceRecord> records_of(const std::vector<StoredSequence>& store) {
  std::vector<SequenceRecord> out;
  out.reserve(store.size());
  for (const StoredSequence& s : store) out.push_back(s.record);
  return out;
}

}  // namespace gelhard
