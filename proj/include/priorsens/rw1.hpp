#pragma once

// Conjugate first-order random-walk smoothing model with a gamma prior on the
// random-walk precision tau:
//
//   x | tau     ~ N_n(0, (tau R)^-1)      R: RW1 structure matrix, rank n - 1
//   y | x, tau  ~ N_n(x, (kappa I)^-1)    kappa fixed
//   tau         ~ G(alpha, beta)
//
// With Q = tau R + kappa I the posterior of tau is known up to a constant:
//
//   pi(tau | y) ∝ tau^(alpha + (n-1)/2 - 1) |Q|^(-1/2) exp(-beta tau + 1/2 kappa^2 y' Q^-1 y)
//
// which makes exact posterior Hellinger distances available through three
// one-dimensional normalizing constants. This module is the ground truth the
// generic reweighting engine is checked against.

#include "priorsens/density.hpp"
#include "priorsens/posterior_update.hpp"
#include "priorsens/sensitivity.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace priorsens::rw1 {

struct Model {
    std::vector<double> y;
    double kappa = 1.0;
    ParamPoint prior{1.0, 0.005};  // gamma (shape, rate) for tau

    Model() = default;
    // Throws DomainError on n < 2, kappa <= 0 or an invalid gamma prior.
    Model(std::vector<double> observations, double noise_precision, ParamPoint gamma_prior);

    [[nodiscard]] std::size_t n() const noexcept { return y.size(); }
};

/// lambda_i = 2 - 2 cos(pi (i - 1) / n), i = 1..n, evaluated as
/// 4 sin^2(pi (i - 1) / (2n)); lambda_1 is exactly 0.
[[nodiscard]] std::vector<double> eigenvalues(std::size_t n);

/// log |tau R + kappa I| from the eigenvalue product.
[[nodiscard]] double logdet_q(double tau, double kappa, std::size_t n);

/// Dense structure matrix R (row-major n x n); test and diagnostic use.
[[nodiscard]] std::vector<double> structure_matrix(std::size_t n);

struct Tridiagonal {
    std::vector<double> lower;  // size n - 1, sub-diagonal
    std::vector<double> diag;   // size n
    std::vector<double> upper;  // size n - 1, super-diagonal
};

// Q = tau R + kappa I.
[[nodiscard]] Tridiagonal precision_matrix(double tau, double kappa, std::size_t n);

/// Thomas algorithm without pivoting; valid for diagonally dominant systems.
[[nodiscard]] std::vector<double> solve_tridiagonal(const Tridiagonal& m, std::span<const double> rhs);

[[nodiscard]] std::vector<double> multiply(const Tridiagonal& m, std::span<const double> v);

/// Solves (tau R + kappa I) v = rhs with pivots tracked as their excess over
/// tau, which removes the cancellation in the last pivot when tau >> kappa.
[[nodiscard]] std::vector<double> solve_precision(double tau, double kappa, std::span<const double> rhs);

/// 1/2 mu' Q mu = 1/2 kappa^2 y' Q^-1 y, in linear time.
[[nodiscard]] double quad_term(const Model& model, double tau);

/// tau-dependent part of the marginal likelihood: -1/2 log|Q| + quad_term.
[[nodiscard]] double log_marginal_likelihood_term(const Model& model, double tau);

/// (alpha + (n-1)/2 - 1) log tau - 1/2 log|Q| - beta tau + quad_term, using
/// the model's prior. Throws DomainError for tau <= 0.
[[nodiscard]] double log_unnormalized_posterior(const Model& model, double tau);

/// Composite Simpson quadrature over z = log tau on a window covering the
/// posterior mass of every reference prior. The marginal likelihood term is
/// cached on the nodes, so every constant computed by one integrator shares
/// the same nodes and their quadrature errors largely cancel in ratios.
class Integrator {
public:
    Integrator(const Model& model, std::span<const ParamPoint> references,
               double relative_tolerance = 1e-10, std::size_t min_intervals = 256);

    /// log C(alpha, beta) = log int_0^inf tau^(alpha+(n-1)/2-1) |Q|^-1/2 exp(-beta tau + quad) dtau.
    [[nodiscard]] double log_normconst(double alpha, double beta) const;

    /// sqrt(1 - C(mid) / sqrt(C(p0) C(p1))) with mid the parameter midpoint.
    [[nodiscard]] double hellinger(const ParamPoint& p0, const ParamPoint& p1) const;

    /// Same window, twice the intervals.
    [[nodiscard]] Integrator refined() const;

    [[nodiscard]] std::size_t intervals() const noexcept { return z_.size() - 1; }
    [[nodiscard]] double z_lo() const noexcept { return z_.front(); }
    [[nodiscard]] double z_hi() const noexcept { return z_.back(); }

private:
    Integrator(const Model& model, double z_lo, double z_hi, std::size_t intervals);
    void build(std::size_t intervals);
    // log integrand on the nodes for the given prior; includes the tau Jacobian.
    [[nodiscard]] std::vector<double> log_integrand(double alpha, double beta) const;
    [[nodiscard]] double log_sum(std::span<const double> g, double shift) const;

    Model model_;
    double lo_ = 0.0;
    double hi_ = 0.0;
    std::vector<double> z_;
    std::vector<double> weights_;
    std::vector<double> likelihood_;
};

/// Stand-alone log C(alpha, beta) for the model's data.
[[nodiscard]] double log_normconst(const Model& model, double alpha, double beta);

/// Exact Hellinger distance between the posteriors of tau under two gamma priors.
[[nodiscard]] double exact_posterior_hellinger(const Model& model, const ParamPoint& p0,
                                               const ParamPoint& p1);

/// Circular sensitivity of the tau posterior with exact distances on the
/// given contour (whose base must be the model's prior).
[[nodiscard]] SensitivityResult exact_sensitivity(const Model& model, const PolarGrid& grid);
[[nodiscard]] SensitivityResult exact_sensitivity(const Model& model, double epsilon,
                                                  std::size_t n_angles = default_n_angles);

inline constexpr std::size_t default_posterior_points = 2001;

/// Normalized posterior of log tau at the model's prior on a window whose
/// boundary density is below 1e-12 of the peak, ready for reweighting.
[[nodiscard]] PosteriorInput tabulate_posterior(const Model& model,
                                                std::size_t n_points = default_posterior_points);

// --- data ------------------------------------------------------------------

enum class Window { Full, Last96 };

[[nodiscard]] Window parse_window(const std::string& text);

struct MonthlySeries {
    std::vector<double> counts;
    std::vector<int> months;  // calendar month 1..12 per observation
};

/// Reads a single `count` column (months assigned cyclically from the first
/// row) or `date,count` rows with YYYY-MM[-DD] or decimal-year dates.
[[nodiscard]] MonthlySeries read_monthly_csv(std::istream& in);
[[nodiscard]] MonthlySeries read_monthly_csv(const std::string& path);

/// sqrt-transformed counts minus their calendar-month means, then centered.
[[nodiscard]] std::vector<double> seasonal_residuals(const MonthlySeries& series);

/// 1 / sample variance. Throws IngestionError for a (numerically) constant series.
[[nodiscard]] double kappa_from_residual_variance(std::span<const double> y);

struct IngestOptions {
    Window window = Window::Full;
    std::optional<double> kappa;  // defaults to the residual-variance estimate
    ParamPoint prior{1.0, 0.005};
};

/// Subsets the window first, then removes the seasonal effect.
[[nodiscard]] Model ingest_timeseries(const MonthlySeries& series, const IngestOptions& options);
[[nodiscard]] Model ingest_timeseries(const std::string& path, const IngestOptions& options);

/// Random walk with increment precision tau observed with noise precision
/// kappa, centered. Deterministic for a given seed.
[[nodiscard]] std::vector<double> simulate(std::size_t n, double tau, double kappa, std::uint64_t seed);

}  // namespace priorsens::rw1
