#include "gelhard/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gelhard/error.hpp"

namespace gelhard {

int find_start(std::span<const double> intensity, double tau) {
  for (std::size_t i = 0; i < intensity.size(); ++i) {
    if (intensity[i] > tau) return static_cast<int>(i);
  }
  throw NoContactError("no frame exceeds the start threshold " + std::to_string(tau));
}

int find_start(const PressSequence& seq, double tau) {
  return find_start(seq.intensity_series, tau);
}

int find_end(std::span<const double> intensity) {
  if (intensity.empty()) throw DomainError("find_end on an empty sequence");
  int best = 0;
  for (std::size_t i = 1; i < intensity.size(); ++i) {
    if (intensity[i] >= intensity[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

int find_end(const PressSequence& seq) { return find_end(seq.intensity_series); }

ClipIndices select_indices(std::span<const double> intensity, int start, int end) {
  const int n = static_cast<int>(intensity.size());
  if (start < 0 || end >= n || start >= end) {
    throw ClipTooShortError("clip bounds [" + std::to_string(start) + ", " + std::to_string(end) +
                            "] are empty");
  }
  if (end - start + 1 < kClipLength) {
    throw ClipTooShortError("only " + std::to_string(end - start + 1) +
                            " frames between start and end");
  }
  const double lo = intensity[static_cast<std::size_t>(start)];
  const double hi = intensity[static_cast<std::size_t>(end)];
  if (!(hi > lo)) throw ClipTooShortError("intensity does not rise between start and end");

  ClipIndices idx{};
  idx[0] = start;
  idx[kClipLength - 1] = end;
  for (int k = 1; k < kClipLength - 1; ++k) {
    const double target = lo + (hi - lo) * k / (kClipLength - 1);
    int best = start;
    double best_err = std::abs(intensity[static_cast<std::size_t>(start)] - target);
    for (int i = start + 1; i <= end; ++i) {
      const double err = std::abs(intensity[static_cast<std::size_t>(i)] - target);
      if (err < best_err) {
        best = i;
        best_err = err;
      }
    }
    best = std::max(best, idx[static_cast<std::size_t>(k - 1)] + 1);
    best = std::min(best, end - (kClipLength - 1 - k));
    idx[static_cast<std::size_t>(k)] = best;
  }
  return idx;
}

SelectedClip make_clip(std::span<const TactileFrame> frames, const ClipIndices& indices) {
  SelectedClip clip;
  clip.source_indices = indices;
  clip.endpoint_index = indices.back();
  const TactileFrame& base = frames[static_cast<std::size_t>(indices[0])];
  for (int k = 0; k < kClipLength; ++k) {
    const TactileFrame& src =
        frames[static_cast<std::size_t>(indices[static_cast<std::size_t>(k)])];
    if (src.rows != base.rows || src.cols != base.cols)
      throw DomainError("frame resolutions differ");
    TactileFrame out(src.rows, src.cols);
    for (std::size_t i = 0; i < out.rgb.size(); ++i) out.rgb[i] = src.rgb[i] - base.rgb[i];
    clip.frames[static_cast<std::size_t>(k)] = std::move(out);
  }
  return clip;
}

SelectedClip select_five(const PressSequence& seq, int start, int end) {
  return make_clip(seq.frames, select_indices(seq.intensity_series, start, end));
}

ClipIndices indices_for_endpoint(std::span<const double> intensity, int start, int endpoint) {
  if (endpoint < 0 || endpoint >= static_cast<int>(intensity.size())) {
    throw DomainError("endpoint outside the sequence");
  }
  const int end = find_end(intensity.first(static_cast<std::size_t>(endpoint) + 1));
  return select_indices(intensity, start, end);
}

std::vector<std::pair<int, int>> truncate_endpoints(std::span<const double> intensity, double tau) {
  std::vector<std::pair<int, int>> out;
  int start = 0;
  try {
    start = find_start(intensity, tau);
  } catch (const NoContactError&) {
    return out;
  }
  for (int e = start + kClipLength - 1; e < static_cast<int>(intensity.size()); ++e) {
    if (intensity[static_cast<std::size_t>(e)] < 2.0 * tau) continue;
    try {
      indices_for_endpoint(intensity, start, e);
    } catch (const ClipTooShortError&) {
      continue;
    }
    out.emplace_back(start, e);
  }
  return out;
}

std::vector<std::pair<int, int>> truncate_endpoints(const PressSequence& seq, double tau) {
  return truncate_endpoints(seq.intensity_series, tau);
}

ClipIndices standard_indices(std::span<const double> intensity, double tau) {
  const int start = find_start(intensity, tau);
  return select_indices(intensity, start, find_end(intensity));
}

double default_start_threshold(double noise_sigma, double margin) {
  return 2.0 * noise_sigma / std::sqrt(std::numbers::pi) + margin;
}

}  // namespace gelhard
