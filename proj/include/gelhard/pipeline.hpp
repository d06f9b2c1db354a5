#pragma once

// Turns a raw press video into the fixed 5-frame, baseline-subtracted network
// input: start at the first threshold crossing of the intensity change, end at
// the (last) intensity peak, and fill the middle at intensity quartiles.

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "gelhard/render.hpp"
#include "gelhard/simcam.hpp"

namespace gelhard {

inline constexpr int kClipLength = 5;

using ClipIndices = std::array<int, kClipLength>;

/// Five frames with the first selected frame subtracted; values in [-1, 1].
struct SelectedClip {
  std::array<TactileFrame, kClipLength> frames;
  ClipIndices source_indices{};
  int endpoint_index = 0;
};

/// Smallest i with intensity[i] > tau. Throws NoContactError if none.
int find_start(std::span<const double> intensity, double tau);
int find_start(const PressSequence& seq, double tau);

/// Largest index attaining max(intensity).
int find_end(std::span<const double> intensity);
int find_end(const PressSequence& seq);

/// Indices of the five frames: `start`, three frames nearest the 1/4, 2/4,
/// 3/4 points of [intensity(start), intensity(end)], and `end`. Collisions
/// advance to the next unused frame. Throws ClipTooShortError when fewer
/// than five frames lie in [start, end].
ClipIndices select_indices(std::span<const double> intensity, int start, int end);

SelectedClip select_five(const PressSequence& seq, int start, int end);

/// `frames[idx[k]] - frames[idx[0]]` for each k.
SelectedClip make_clip(std::span<const TactileFrame> frames, const ClipIndices& indices);

/// Augmentation endpoints: every e > start + 3 with intensity(e) >= 2 tau,
/// each paired with the common start. A clip built for endpoint e equals the
/// clip of the same press stopped at frame e.
std::vector<std::pair<int, int>> truncate_endpoints(std::span<const double> intensity, double tau);
std::vector<std::pair<int, int>> truncate_endpoints(const PressSequence& seq, double tau);

/// Clip indices for the press truncated after frame `endpoint`.
ClipIndices indices_for_endpoint(std::span<const double> intensity, int start, int endpoint);

/// Standard clip for a full press: find_start, find_end, select_indices.
ClipIndices standard_indices(std::span<const double> intensity, double tau);

/// Default start threshold: the expected noise floor of the mean absolute
/// change between two independently noisy frames plus a fixed margin.
double default_start_threshold(double noise_sigma, double margin);

}  // namespace gelhard
