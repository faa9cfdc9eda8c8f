#include "priorsens/calibration.hpp"

#include "priorsens/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace priorsens {

double calibrate(double h) {
    if (!(h >= 0.0) || !(h < 1.0)) {
        throw DomainError(fmt::format("calibration needs 0 <= h < 1, got {}", h));
    }
    // log(1 - h^2) split so h^2 is never rounded near h = 1.
    return std::sqrt(-8.0 * (std::log1p(-h) + std::log1p(h)));
}

double inverse_calibrate(double mu) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
        throw DomainError(fmt::format("inverse calibration needs a finite mu >= 0, got {}", mu));
    }
    return std::sqrt(-std::expm1(-mu * mu / 8.0));
}

CalibratedValue calibrate_saturating(double h) {
    if (!(h >= 0.0) || h > 1.0) throw DomainError(fmt::format("calibration needs 0 <= h <= 1, got {}", h));
    if (h >= saturation_threshold) return {h, calibrate(saturation_threshold), true};
    return {h, calibrate(h), false};
}

CalibratedRatio calibrated_ratio(double h_post, double epsilon) {
    if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
        throw DomainError(fmt::format("calibrated ratio needs 0 < epsilon < 1, got {}", epsilon));
    }
    const CalibratedValue post = calibrate_saturating(h_post);
    return {post.mu / calibrate(epsilon), h_post / epsilon, post.saturated};
}

}  // namespace priorsens
