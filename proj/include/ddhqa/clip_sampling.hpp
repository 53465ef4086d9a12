#pragma once

#include <cstddef>
#include <vector>

namespace ddhqa {

inline constexpr std::size_t kDefaultClipTarget = 6;

/// Clip positions used for one video: the first `target` clips when enough
/// exist, otherwise the available clips repeated cyclically up to `target`.
/// Throws Error{InvalidArgument} when `n_clips_available` or `target` is 0.
std::vector<std::size_t> cyclic_clip_sample(std::size_t n_clips_available,
                                            std::size_t target = kDefaultClipTarget);

}  // namespace ddhqa
