#include "cinempc/optics.hpp"

#include <cmath>

namespace cinempc {

void validate(const LensConstants& lens) {
  if (!(lens.circle_of_confusion > 0)) throw std::invalid_argument("circle_of_confusion must be positive");
  if (!(lens.sensor_width > 0) || !(lens.sensor_height > 0)) {
    throw std::invalid_argument("sensor dimensions must be positive");
  }
  if (lens.image_width <= 0 || lens.image_height <= 0) {
    throw std::invalid_argument("image dimensions must be positive");
  }
  const double beta_h = lens.image_height / lens.sensor_height;
  const double beta_w = lens.image_width / lens.sensor_width;
  if (std::abs(beta_h - beta_w) > 1e-9 * std::max(beta_h, beta_w)) {
    throw std::invalid_argument("image and sensor aspect ratios differ; pixels-per-meter is ambiguous");
  }
  if (!std::isfinite(lens.skew) || !lens.principal_point.allFinite()) {
    throw std::invalid_argument("skew and principal point must be finite");
  }
}

namespace {

struct ExcessPartials {
  double value;
  double d_focal;
  double d_aperture;
};

ExcessPartials excess_with_partials(const CameraIntrinsics& intr, const LensConstants& lens) {
  const double excess = detail::hyperfocal_excess(intr, lens.circle_of_confusion);
  return {excess, 2.0 * excess / intr.focal_length, -excess / intr.aperture};
}

}  // namespace

Eigen::Vector3d near_partials(const CameraIntrinsics& intr, const LensConstants& lens) {
  const auto h = excess_with_partials(intr, lens);
  detail::require_focus_beyond_focal_length(intr);
  const double f = intr.focal_length;
  const double F = intr.focus_distance;
  const double den = h.value + (F - f);
  const double den2 = den * den;
  // D_n = F h / (h + F - f)
  const double d_h = F * (F - f) / den2;
  const double d_F = h.value * (h.value - f) / den2;
  const double d_f_explicit = F * h.value / den2;
  return {d_h * h.d_focal + d_f_explicit, d_F, d_h * h.d_aperture};
}

Eigen::Vector3d inverse_far_partials(const CameraIntrinsics& intr, const LensConstants& lens) {
  const auto h = excess_with_partials(intr, lens);
  detail::require_focus_beyond_focal_length(intr);
  const double f = intr.focal_length;
  const double F = intr.focus_distance;
  // 1/D_f = 1/F + (f - F) / (F h)
  const double d_h = -(f - F) / (F * h.value * h.value);
  const double d_F = -1.0 / (F * F) - f / (F * F * h.value);
  const double d_f_explicit = 1.0 / (F * h.value);
  return {d_h * h.d_focal + d_f_explicit, d_F, d_h * h.d_aperture};
}

DofPartials dof_partials(const CameraIntrinsics& intr, const LensConstants& lens) {
  const auto h = excess_with_partials(intr, lens);
  detail::require_focus_beyond_focal_length(intr);
  const double f = intr.focal_length;
  const double F = intr.focus_distance;
  const double den = h.value - (F - f);
  if (!(F < h.value + f) || !(den > 0)) throw std::domain_error("dof_partials: far limit unbounded at or beyond the hyperfocal distance");
  const double den2 = den * den;
  // D_f = F h / (h + f - F)
  const double d_h = F * (f - F) / den2;
  const double d_F = h.value * (h.value + f) / den2;
  const double d_f_explicit = -F * h.value / den2;
  return {near_partials(intr, lens), {d_h * h.d_focal + d_f_explicit, d_F, d_h * h.d_aperture}};
}

}  // namespace cinempc
