#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "dynmarker/errors.hpp"
#include "dynmarker/geometry.hpp"
#include "dynmarker/marker_model.hpp"
#include "dynmarker/perception.hpp"

namespace dynmarker {

struct MarkerCommand {
  MarkerConfig new_config;
  double issued_at = 0.0;
};

struct SwitchPolicy {
  double switch_to_full_pose_below = 1.2;   // meters
  double switch_to_long_range_above = 1.4;  // meters
  double scale_fraction = 0.5;
  double rescale_deadband = 0.15;
  double gap_fraction = 0.1;
  Eq3Variant eq3_variant = Eq3Variant::Consistent;

  void validate() const {
    if (!(switch_to_full_pose_below < switch_to_long_range_above)) {
      throw DomainError("SwitchPolicy: full-pose threshold must be below the long-range threshold");
    }
    if (!(scale_fraction > 0.0 && scale_fraction <= 1.0)) throw DomainError("SwitchPolicy: scale_fraction must be in (0, 1]");
    if (!(rescale_deadband >= 0.0)) throw DomainError("SwitchPolicy: rescale_deadband must be >= 0");
    if (!(gap_fraction >= 0.0 && gap_fraction < 1.0)) throw DomainError("SwitchPolicy: gap_fraction must be in [0, 1)");
  }
};

/// The two families the controller chooses between.
struct FamilySet {
  MarkerFamily long_range = long_range_family();
  MarkerFamily full_pose = full_pose_family();

  const MarkerFamily& get(FamilyKind k) const {
    return k == FamilyKind::LongRangePositionOnly ? long_range : full_pose;
  }
};

inline MarkerConfig make_config(std::uint64_t id, const MarkerFamily& family, double size,
                                std::vector<BoardCell> board, const Screen& screen) {
  if (board.empty()) board.push_back(BoardCell{Vec2::Zero(), size});
  return MarkerConfig{id, family, size, std::move(board), screen.limit()};
}

/// Long-range marker at full screen size; shown before anything is detected.
inline MarkerConfig bootstrap_config(std::uint64_t id, const FamilySet& families, const Screen& screen) {
  return make_config(id, families.long_range, screen.limit(), {}, screen);
}

/// Chooses the next marker from the latest valid estimate. Family follows a
/// hysteresis band on camera-marker distance (strict inequalities, ties keep
/// the current family); size follows the field-of-view law clamped to the
/// screen; small full-pose markers are replicated into a board.
inline std::optional<MarkerCommand> select_marker(const std::optional<PoseEstimate>& estimate,
                                                  const SwitchPolicy& policy, const CameraIntrinsics& k,
                                                  const Screen& screen, const FamilySet& families,
                                                  const std::optional<MarkerConfig>& current, double now) {
  if (!current) return MarkerCommand{bootstrap_config(1, families, screen), now};
  if (!estimate) {
    const bool is_bootstrap = current->family.kind == FamilyKind::LongRangePositionOnly &&
                              current->marker_size == screen.limit() && !current->is_board();
    if (is_bootstrap) return std::nullopt;
    return MarkerCommand{bootstrap_config(current->config_id + 1, families, screen), now};
  }

  const double h = estimate->distance();
  FamilyKind kind = current->family.kind;
  if (h < policy.switch_to_full_pose_below) kind = FamilyKind::ShortRangeFullPose;
  else if (h > policy.switch_to_long_range_above) kind = FamilyKind::LongRangePositionOnly;

  const double phi_max = 2.0 * fov_half_angle(k);
  const double size = clamp_to_screen(optimal_marker_size(phi_max, h, policy.scale_fraction, policy.eq3_variant), screen);
  if (!(size > 0.0)) return std::nullopt;

  if (kind == current->family.kind &&
      std::abs(size - current->marker_size) / current->marker_size < policy.rescale_deadband) {
    return std::nullopt;
  }

  // Fill-in needs room for a full ring of cells around the center one; an
  // even grid would leave the optical axis on a gap.
  std::vector<BoardCell> board;
  if (kind == FamilyKind::ShortRangeFullPose && screen.limit() >= 3.0 * size * (1.0 + policy.gap_fraction)) {
    board = board_layout(screen, size, policy.gap_fraction, true);
  }
  return MarkerCommand{make_config(current->config_id + 1, families.get(kind), size, std::move(board), screen), now};
}

/// Replace the detector's believed model. Ids must advance by exactly one.
inline DetectorParams apply_update(DetectorParams detector, const MarkerCommand& cmd) {
  const auto have = detector.believed_config.config_id;
  const auto got = cmd.new_config.config_id;
  if (got != have + 1) {
    throw ProtocolViolation("apply_update: detector holds config " + std::to_string(have) +
                            ", received " + std::to_string(got));
  }
  detector.believed_config = cmd.new_config;
  return detector;
}

}  // namespace dynmarker
