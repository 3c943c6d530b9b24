#pragma once

#include <optional>
#include <vector>

#include "geneoh/hand.hpp"
#include "geneoh/object.hpp"

namespace geneoh {

// One interaction clip: K frames of hand keypoints plus the object shape and
// its per-frame poses. Hand parameters are carried when known (synthetic data,
// fitted output) so parameter-space noise can be injected.
struct HOISequence {
  int frame_count = 0;
  std::vector<JointMat> keypoints;              // [K] x 21 x 3, meters
  std::optional<std::vector<HandParams>> hand_params;  // [K] when present
  ObjectShape object;
  std::vector<ObjectPose> object_poses;         // [K]

  void validate() const {
    if (frame_count < 2) throw InvalidInputError("HOISequence: K must be >= 2");
    if (static_cast<int>(keypoints.size()) != frame_count ||
        static_cast<int>(object_poses.size()) != frame_count)
      throw ShapeError("HOISequence: per-frame array sizes disagree with K");
    for (const auto& kp : keypoints)
      if (!kp.allFinite()) throw InvalidInputError("HOISequence: non-finite keypoints");
    if (hand_params && static_cast<int>(hand_params->size()) != frame_count)
      throw ShapeError("HOISequence: hand_params size disagrees with K");
  }
};

}  // namespace geneoh
