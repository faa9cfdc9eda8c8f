#pragma once

namespace priorsens {

// Hellinger distances at or above this value are reported as saturated.
inline constexpr double saturation_threshold = 1.0 - 1e-15;

/// Mean shift mu such that H(N(0,1), N(mu,1)) = h, i.e. sqrt(-8 log(1 - h^2)).
/// Throws DomainError unless 0 <= h < 1.
[[nodiscard]] double calibrate(double h);

/// Hellinger distance between N(0,1) and N(mu,1): sqrt(1 - exp(-mu^2 / 8)).
/// Throws DomainError for mu < 0.
[[nodiscard]] double inverse_calibrate(double mu);

struct CalibratedValue {
    double h = 0.0;
    double mu = 0.0;
    // h reached rounding-level 1; mu is then the calibration of the threshold.
    bool saturated = false;
};

// Like calibrate(), but accepts h up to 1 and flags saturation instead of
// failing. Negative h still throws.
[[nodiscard]] CalibratedValue calibrate_saturating(double h);

struct CalibratedRatio {
    double exact = 0.0;   // mu(h_post) / mu(epsilon)
    double approx = 0.0;  // h_post / epsilon
    bool saturated = false;
};

[[nodiscard]] CalibratedRatio calibrated_ratio(double h_post, double epsilon);

}  // namespace priorsens
