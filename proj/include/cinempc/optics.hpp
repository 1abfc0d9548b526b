#pragma once

// Thin-lens depth-of-field model. All lengths are meters.

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cinempc {

/// Fixed lens and sensor constants of the cinematographic camera.
struct LensConstants {
  double circle_of_confusion = 3.0e-5;  // m
  double sensor_width = 0.036;          // m
  double sensor_height = 0.02025;       // m
  int image_width = 1920;               // px
  int image_height = 1080;              // px
  double skew = 0.0;                    // px
  Eigen::Vector2d principal_point{960.0, 540.0};

  /// Pixels per meter on the sensor.
  double beta() const { return image_height / sensor_height; }

  bool operator==(const LensConstants&) const = default;
};

/// Throws std::invalid_argument when the constants are unusable.
void validate(const LensConstants& lens);

template <typename Scalar>
struct CameraIntrinsicsT {
  Scalar focal_length{};    // m
  Scalar focus_distance{};  // m
  Scalar aperture{};        // f-stop number

  bool operator==(const CameraIntrinsicsT&) const = default;
};
using CameraIntrinsics = CameraIntrinsicsT<double>;

/// Depth of field [near, far]. `far` is +inf when focus is at or beyond the
/// hyperfocal distance.
template <typename Scalar>
struct DofIntervalT {
  Scalar near{};
  Scalar far{};

  bool bounded() const { return std::isfinite(static_cast<double>(far)); }
};
using DofInterval = DofIntervalT<double>;

/// Partial derivatives of the near and far limits with respect to
/// (focal_length, focus_distance, aperture).
struct DofPartials {
  Eigen::Vector3d near;
  Eigen::Vector3d far;
};

namespace detail {

// f^2 / (A c), i.e. hyperfocal distance minus focal length. Keeping this term
// separate avoids the H - f cancellation in the near/far formulas.
template <typename Scalar>
Scalar hyperfocal_excess(const CameraIntrinsicsT<Scalar>& intr, double coc) {
  if (!(intr.focal_length > 0) || !(intr.aperture > 0) || !(coc > 0)) {
    throw std::domain_error("hyperfocal: focal length, aperture and circle of confusion must be positive");
  }
  return intr.focal_length * intr.focal_length / (intr.aperture * Scalar(coc));
}

template <typename Scalar>
void require_focus_beyond_focal_length(const CameraIntrinsicsT<Scalar>& intr) {
  if (!(intr.focus_distance > intr.focal_length)) {
    throw std::domain_error("focus distance must exceed focal length");
  }
}

}  // namespace detail

template <typename Scalar>
Scalar hyperfocal(const CameraIntrinsicsT<Scalar>& intr, const LensConstants& lens) {
  return detail::hyperfocal_excess(intr, lens.circle_of_confusion) + intr.focal_length;
}

template <typename Scalar>
Scalar near_distance(const CameraIntrinsicsT<Scalar>& intr, const LensConstants& lens) {
  const Scalar excess = detail::hyperfocal_excess(intr, lens.circle_of_confusion);
  detail::require_focus_beyond_focal_length(intr);
  const Scalar& focus = intr.focus_distance;
  return focus * excess / (excess + (focus - intr.focal_length));
}

/// Returns +inf when focus_distance >= hyperfocal distance.
template <typename Scalar>
Scalar far_distance(const CameraIntrinsicsT<Scalar>& intr, const LensConstants& lens) {
  const Scalar excess = detail::hyperfocal_excess(intr, lens.circle_of_confusion);
  detail::require_focus_beyond_focal_length(intr);
  const Scalar& focus = intr.focus_distance;
  const Scalar denom = excess - (focus - intr.focal_length);
  if (!(focus < excess + intr.focal_length) || !(denom > 0)) return std::numeric_limits<Scalar>::infinity();
  return focus * excess / denom;
}

/// Signed reciprocal of the far limit, (H - F) / (F (H - f)). Smooth in all
/// three intrinsics, zero at the hyperfocal distance and negative beyond it.
template <typename Scalar>
Scalar inverse_far_distance(const CameraIntrinsicsT<Scalar>& intr, const LensConstants& lens) {
  const Scalar excess = detail::hyperfocal_excess(intr, lens.circle_of_confusion);
  detail::require_focus_beyond_focal_length(intr);
  const Scalar& focus = intr.focus_distance;
  return (excess - (focus - intr.focal_length)) / (focus * excess);
}

template <typename Scalar>
DofIntervalT<Scalar> dof_interval(const CameraIntrinsicsT<Scalar>& intr, const LensConstants& lens) {
  return {near_distance(intr, lens), far_distance(intr, lens)};
}

/// Analytic gradients of the near/far limits. Throws std::domain_error when
/// the far limit is unbounded.
DofPartials dof_partials(const CameraIntrinsics& intr, const LensConstants& lens);

/// Near-limit gradient only; valid on the whole domain focus > focal length.
Eigen::Vector3d near_partials(const CameraIntrinsics& intr, const LensConstants& lens);

/// Gradient of inverse_far_distance; valid on the whole domain.
Eigen::Vector3d inverse_far_partials(const CameraIntrinsics& intr, const LensConstants& lens);

}  // namespace cinempc
