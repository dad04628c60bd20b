#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dynmarker/errors.hpp"
#include "dynmarker/geometry.hpp"

namespace dynmarker {

enum class FamilyKind { LongRangePositionOnly, ShortRangeFullPose };

constexpr std::string_view to_string(FamilyKind k) {
  return k == FamilyKind::LongRangePositionOnly ? "long-range" : "full-pose";
}

/// Standard deviation that grows with distance as sigma_at_1m * h^range_exponent.
struct NoiseProfile {
  double sigma_at_1m = 0.0;
  double range_exponent = 0.0;

  double sigma(double h) const { return sigma_at_1m * std::pow(h, range_exponent); }

  void validate() const {
    if (!(sigma_at_1m >= 0.0)) throw DomainError("NoiseProfile: sigma_at_1m must be >= 0");
    if (!(range_exponent >= 0.0)) throw DomainError("NoiseProfile: range_exponent must be >= 0");
  }
};

struct MarkerFamily {
  FamilyKind kind = FamilyKind::LongRangePositionOnly;
  double max_detection_range = 1.0;  // meters
  double min_pixel_footprint = 20.0; // pixels
  bool yields_yaw = false;
  NoiseProfile position_noise;
  std::optional<NoiseProfile> yaw_noise;

  void validate() const {
    if (!(max_detection_range > 0.0)) throw DomainError("MarkerFamily: max_detection_range must be > 0");
    if (!(min_pixel_footprint >= 1.0)) throw DomainError("MarkerFamily: min_pixel_footprint must be >= 1");
    if (!yields_yaw && yaw_noise) throw DomainError("MarkerFamily: yaw noise given for a family without yaw");
    position_noise.validate();
    if (yaw_noise) yaw_noise->validate();
  }
};

// Measured with a fixed camera: full-pose square markers reach 4.4 m and
// degrade with distance; the long-range circle reaches 13.181 m with
// roughly constant accuracy but no usable yaw.
inline MarkerFamily full_pose_family() {
  return MarkerFamily{FamilyKind::ShortRangeFullPose, 4.4, 20.0, true,
                      NoiseProfile{0.004, 1.0}, NoiseProfile{0.01, 1.0}};
}

inline MarkerFamily long_range_family() {
  return MarkerFamily{FamilyKind::LongRangePositionOnly, 13.181, 20.0, false,
                      NoiseProfile{0.01, 0.0}, std::nullopt};
}

struct Screen {
  double width = 0.15;   // meters
  double height = 0.15;  // meters
  double refresh_delay = 0.0;

  double limit() const { return std::min(width, height); }

  void validate() const {
    if (!(width > 0.0 && height > 0.0)) throw DomainError("Screen: width and height must be > 0");
    if (!(refresh_delay >= 0.0)) throw DomainError("Screen: refresh_delay must be >= 0");
  }
};

/// One marker of a board, in screen coordinates (meters, origin at center).
struct BoardCell {
  Vec2 center = Vec2::Zero();
  double size = 0.0;
};

/// The displayed marker and the 3D-model half of the detector parameters.
/// A single marker is a board of one centered cell.
struct MarkerConfig {
  std::uint64_t config_id = 0;
  MarkerFamily family;
  double marker_size = 0.0;
  std::vector<BoardCell> board;
  double screen_limit = 0.0;

  bool is_board() const { return board.size() > 1; }

  void validate(const Screen& screen) const {
    family.validate();
    if (!(marker_size > 0.0 && marker_size <= screen_limit + 1e-12)) {
      throw DomainError("MarkerConfig: marker_size must be in (0, screen_limit]");
    }
    if (board.empty()) throw DomainError("MarkerConfig: board has no cells");
    for (std::size_t i = 0; i < board.size(); ++i) {
      const auto& c = board[i];
      const double half = 0.5 * c.size;
      if (std::abs(c.center.x()) + half > 0.5 * screen.width + 1e-12 ||
          std::abs(c.center.y()) + half > 0.5 * screen.height + 1e-12) {
        throw DomainError("MarkerConfig: board cell outside the screen");
      }
      for (std::size_t j = i + 1; j < board.size(); ++j) {
        const auto& d = board[j];
        const double reach = 0.5 * (c.size + d.size) - 1e-12;
        if (std::abs(c.center.x() - d.center.x()) < reach && std::abs(c.center.y() - d.center.y()) < reach) {
          throw DomainError("MarkerConfig: board cells overlap");
        }
      }
    }
  }
};

enum class Eq3Variant { Consistent, Verbatim };

constexpr std::string_view to_string(Eq3Variant v) {
  return v == Eq3Variant::Consistent ? "consistent" : "verbatim";
}

/// Marker edge that fills the reduced field of view at distance h.
///
/// `phi_max` is the full camera vision angle. The consistent form
/// 2h*tan(s*phi_max/2) fills the field of view exactly at s = 1, which is
/// what camera_freedom_angle() assumes. The verbatim form 2h*tan(phi_max*s)
/// overflows it by a factor of two in angle and is kept for comparison runs.
inline double optimal_marker_size(double phi_max, double h, double scale_fraction,
                                  Eq3Variant variant = Eq3Variant::Consistent) {
  if (!(scale_fraction > 0.0 && scale_fraction <= 1.0)) {
    throw DomainError("optimal_marker_size: scale_fraction must be in (0, 1]");
  }
  if (!(h >= 0.0)) throw DomainError("optimal_marker_size: distance must be >= 0");
  if (!(phi_max > 0.0 && phi_max < std::numbers::pi)) {
    throw DomainError("optimal_marker_size: phi_max must be in (0, pi)");
  }
  if (variant == Eq3Variant::Verbatim) {
    if (phi_max * scale_fraction >= 0.5 * std::numbers::pi) {
      throw DomainError("optimal_marker_size: phi_max * s reaches the tangent pole");
    }
    return 2.0 * h * std::tan(phi_max * scale_fraction);
  }
  return 2.0 * h * std::tan(0.5 * scale_fraction * phi_max);
}

/// Angular margin left in the field of view once the marker is sized.
/// Negative means the marker already overflows the half field of view.
inline double camera_freedom_angle(double phi_max, double marker_size, double h) {
  if (!(h > 0.0)) throw DomainError("camera_freedom_angle: distance must be > 0");
  return 0.5 * phi_max - std::atan(marker_size / (2.0 * h));
}

inline double clamp_to_screen(double desired_size, const Screen& screen, double fill_factor = 1.0) {
  return std::max(0.0, std::min(desired_size, screen.limit() * fill_factor));
}

/// Centered regular grid of equally sized cells sharing one coordinate frame.
/// With `odd_grid` the per-axis count is rounded down to an odd number so a
/// cell always sits on the screen center.
inline std::vector<BoardCell> board_layout(const Screen& screen, double cell_size, double gap_fraction,
                                           bool odd_grid = false) {
  if (!(cell_size > 0.0)) throw DomainError("board_layout: cell_size must be > 0");
  if (cell_size > screen.limit() + 1e-12) throw DomainError("board_layout: cell larger than the screen");
  if (!(gap_fraction >= 0.0 && gap_fraction < 1.0)) throw DomainError("board_layout: gap_fraction must be in [0, 1)");

  const double pitch = cell_size * (1.0 + gap_fraction);
  // Tolerance absorbs 0.15 / 0.05 = 2.9999999999999996.
  const auto count = [&](double extent) {
    int n = std::max(1, static_cast<int>(std::floor(extent / pitch + 1e-9)));
    if (odd_grid && n % 2 == 0) --n;
    return n;
  };
  const int nx = count(screen.width);
  const int ny = count(screen.height);

  std::vector<BoardCell> cells;
  cells.reserve(static_cast<std::size_t>(nx * ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      cells.push_back(BoardCell{Vec2{(i - 0.5 * (nx - 1)) * pitch, (j - 0.5 * (ny - 1)) * pitch}, cell_size});
    }
  }
  return cells;
}

}  // namespace dynmarker
