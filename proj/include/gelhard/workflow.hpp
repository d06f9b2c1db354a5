#pragma once

// End-to-end steps shared by the command-line tool and the acceptance suite:
// parallel dataset synthesis (in memory or on disk), split loading and
// training runs driven by an AppConfig.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gelhard/io.hpp"

namespace gelhard {

/// Worker count used when a caller passes 0.
int default_jobs();

/// Runs `fn(i)` for i in [0, n) on `jobs` threads. The first exception is
/// rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

/// Items of the generation plan belonging to the given sets (all if empty).
std::vector<GenItem> plan_for_sets(const DatasetConfig& cfg, const std::vector<std::string>& sets);

/// Synthesizes and reduces presses in memory. Main-set presses keep every
/// loading frame (for truncation); other sets keep only the standard clip.
/// Presses without a usable clip are dropped and listed in `skipped`.
std::vector<StoredSequence> synthesize_store(const AppConfig& cfg,
                                             const std::vector<GenItem>& items, int jobs,
                                             std::vector<std::string>* skipped = nullptr);

/// Writes frames, sidecars and the manifest under `root`. Output bytes do
/// not depend on `jobs`.
Manifest generate_dataset(const AppConfig& cfg, const std::vector<GenItem>& items,
                          const std::filesystem::path& root, int jobs);

/// Stored presses of `records[indices]`, in index order.
std::vector<const StoredSequence*> select(const std::vector<StoredSequence>& store,
                                          const std::vector<std::size_t>& indices);

/// Records of a store, for split construction.
std::vector<SequenceRecord> records_of(const std::vector<StoredSequence>& store);

}  // namespace gelhard
