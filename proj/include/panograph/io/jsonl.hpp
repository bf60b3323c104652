#pragma once

// Pose detection streams, one JSON object per line:
//   {"t": 0, "id": 7, "conf": 0.93, "bbox": [cx, cy, w, h], "kpts": [[x, y, v], ...]}
//   {"t": 0, "obj": 0, "kpt": [x, y, v]}        object keypoint (e.g. the ball)
// Records must be ordered by "t"; records of one frame are grouped.

#include <string>
#include <string_view>
#include <vector>

#include "panograph/reassign.hpp"

namespace panograph::io {

/// Throws FormatError "<source>:<line>: ..." on malformed records, including a
/// keypoint count different from `joints` or an object slot >= `objects`.
std::vector<reassign::PoseFrame> parse_detections(std::string_view text, std::size_t joints, std::size_t objects,
                                                  const std::string& source);

std::string format_detections(const std::vector<reassign::PoseFrame>& frames);

}  // namespace panograph::io
