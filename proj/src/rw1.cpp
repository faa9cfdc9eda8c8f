#include "priorsens/rw1.hpp"

#include "priorsens/errors.hpp"
#include "text_util.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <random>

namespace priorsens::rw1 {

Model::Model(std::vector<double> observations, double noise_precision, ParamPoint gamma_prior)
    : y(std::move(observations)), kappa(noise_precision), prior(gamma_prior) {
    if (y.size() < 2) throw DomainError(fmt::format("RW1 model needs n >= 2, got {}", y.size()));
    if (!(kappa > 0.0) || !std::isfinite(kappa)) {
        throw DomainError(fmt::format("noise precision kappa must be positive, got {}", kappa));
    }
    for (double v : y) {
        if (!std::isfinite(v)) throw DomainError("RW1 observations must be finite");
    }
    require_domain(Family::Gamma, prior);
}

// --- linear algebra ------------------------------------------------------

std::vector<double> eigenvalues(std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = std::sin(std::numbers::pi * static_cast<double>(i) / (2.0 * static_cast<double>(n)));
        out[i] = 4.0 * s * s;
    }
    return out;
}

double logdet_q(double tau, double kappa, std::size_t n) {
    if (!(tau >= 0.0) || !(kappa > 0.0)) {
        throw DomainError(fmt::format("log|Q| needs tau >= 0 and kappa > 0, got ({}, {})", tau, kappa));
    }
    double sum = static_cast<double>(n) * std::log(kappa);
    for (double lambda : eigenvalues(n)) sum += std::log1p(tau * lambda / kappa);
    return sum;
}

std::vector<double> structure_matrix(std::size_t n) {
    std::vector<double> r(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        r[i * n + i] = (i == 0 || i == n - 1) ? 1.0 : 2.0;
        if (i + 1 < n) {
            r[i * n + i + 1] = -1.0;
            r[(i + 1) * n + i] = -1.0;
        }
    }
    return r;
}

Tridiagonal precision_matrix(double tau, double kappa, std::size_t n) {
    Tridiagonal q;
    q.diag.assign(n, 2.0 * tau + kappa);
    q.diag.front() = tau + kappa;
    q.diag.back() = tau + kappa;
    q.lower.assign(n - 1, -tau);
    q.upper.assign(n - 1, -tau);
    return q;
}

std::vector<double> solve_tridiagonal(const Tridiagonal& m, std::span<const double> rhs) {
    const std::size_t n = m.diag.size();
    if (rhs.size() != n || m.lower.size() + 1 != n || m.upper.size() + 1 != n) {
        throw DomainError("tridiagonal system has inconsistent dimensions");
    }
    std::vector<double> c(n);
    std::vector<double> d(n);
    double pivot = m.diag[0];
    c[0] = n > 1 ? m.upper[0] / pivot : 0.0;
    d[0] = rhs[0] / pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = m.diag[i] - m.lower[i - 1] * c[i - 1];
        if (pivot == 0.0) throw NumericalError("zero pivot in tridiagonal solve");
        c[i] = i + 1 < n ? m.upper[i] / pivot : 0.0;
        d[i] = (rhs[i] - m.lower[i - 1] * d[i - 1]) / pivot;
    }
    std::vector<double> x(n);
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

std::vector<double> multiply(const Tridiagonal& m, std::span<const double> v) {
    const std::size_t n = m.diag.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = m.diag[i] * v[i];
        if (i > 0) s += m.lower[i - 1] * v[i - 1];
        if (i + 1 < n) s += m.upper[i] * v[i + 1];
        out[i] = s;
    }
    return out;
}

std::vector<double> solve_precision(double tau, double kappa, std::span<const double> rhs) {
    const std::size_t n = rhs.size();
    if (n < 2) throw DomainError("precision solve needs n >= 2");
    if (!(tau >= 0.0) || !(kappa > 0.0)) throw DomainError("precision solve needs tau >= 0, kappa > 0");
    // LU with unit lower factor. Interior pivots are tau + e_i and the last
    // pivot is e_n, where e_1 = kappa and e_i = kappa + tau e_{i-1} / (tau + e_{i-1}).
    std::vector<double> pivot(n);
    double excess = kappa;
    pivot[0] = tau + kappa;
    for (std::size_t i = 1; i < n; ++i) {
        excess = kappa + tau * excess / (tau + excess);
        pivot[i] = i + 1 < n ? tau + excess : excess;
    }
    std::vector<double> w(n);
    w[0] = rhs[0];
    for (std::size_t i = 1; i < n; ++i) w[i] = rhs[i] + tau / pivot[i - 1] * w[i - 1];
    std::vector<double> v(n);
    v[n - 1] = w[n - 1] / pivot[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) v[i] = (w[i] + tau * v[i + 1]) / pivot[i];
    return v;
}

double quad_term(const Model& model, double tau) {
    const std::vector<double> v = solve_precision(tau, model.kappa, model.y);
    double dot = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) dot += model.y[i] * v[i];
    return 0.5 * model.kappa * model.kappa * dot;
}

double log_marginal_likelihood_term(const Model& model, double tau) {
    return -0.5 * logdet_q(tau, model.kappa, model.n()) + quad_term(model, tau);
}

double log_unnormalized_posterior(const Model& model, double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw DomainError(fmt::format("posterior of tau needs tau > 0, got {}", tau));
    }
    const double shape = model.prior.gamma1 + 0.5 * static_cast<double>(model.n() - 1) - 1.0;
    return shape * std::log(tau) - model.prior.gamma2 * tau + log_marginal_likelihood_term(model, tau);
}

// --- quadrature ----------------------------------------------------------

namespace {

constexpr double kScanLo = -50.0;
constexpr double kScanHi = 50.0;
constexpr double kScanStep = 0.25;
// Window cut: integrand below exp(-60) of its peak is dropped.
constexpr double kWindowDrop = 60.0;
// Endpoints must sit this far below the peak for a constant to be trusted.
constexpr double kEndpointDrop = 30.0;
constexpr std::size_t kMaxIntervals = std::size_t{1} << 20;

struct Scan {
    std::vector<double> z;
    std::vector<double> likelihood;
};

Scan scan_likelihood(const Model& model) {
    Scan s;
    for (double z = kScanLo; z <= kScanHi + 1e-12; z += kScanStep) {
        const double l = log_marginal_likelihood_term(model, std::exp(z));
        if (!std::isfinite(l)) {
            throw NumericalError(fmt::format("non-finite marginal likelihood at tau = {}", std::exp(z)));
        }
        s.z.push_back(z);
        s.likelihood.push_back(l);
    }
    return s;
}

double log_kernel(const Model& model, double alpha, double beta, double z, double likelihood) {
    return (alpha + 0.5 * static_cast<double>(model.n() - 1)) * z - beta * std::exp(z) + likelihood;
}

// [lo, hi] holding every scan point within `drop` of the peak, padded by one
// scan step on each side.
std::pair<double, double> mass_window(const Model& model, const Scan& s, const ParamPoint& p,
                                      double drop) {
    std::vector<double> g(s.z.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = log_kernel(model, p.gamma1, p.gamma2, s.z[i], s.likelihood[i]);
    }
    const double peak = *std::ranges::max_element(g);
    std::size_t first = g.size();
    std::size_t last = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g[i] >= peak - drop) {
            first = std::min(first, i);
            last = i;
        }
    }
    if (first == 0 || last + 1 == g.size()) {
        throw NumericalError(fmt::format(
            "posterior of tau for prior ({}, {}) not contained in tau in [exp({}), exp({})]", p.gamma1,
            p.gamma2, kScanLo, kScanHi));
    }
    return {s.z[first - 1], s.z[last + 1]};
}

}  // namespace

Integrator::Integrator(const Model& model, double z_lo, double z_hi, std::size_t intervals)
    : model_(model), lo_(z_lo), hi_(z_hi) {
    build(intervals);
}

Integrator::Integrator(const Model& model, std::span<const ParamPoint> references,
                       double relative_tolerance, std::size_t min_intervals)
    : model_(model) {
    if (references.empty()) throw DomainError("integrator needs at least one reference prior");
    const Scan scan = scan_likelihood(model_);
    lo_ = std::numeric_limits<double>::infinity();
    hi_ = -std::numeric_limits<double>::infinity();
    for (const ParamPoint& p : references) {
        require_domain(Family::Gamma, p);
        const auto [lo, hi] = mass_window(model_, scan, p, kWindowDrop);
        lo_ = std::min(lo_, lo);
        hi_ = std::max(hi_, hi);
    }

    std::size_t m = std::max<std::size_t>(min_intervals + min_intervals % 2, 2);
    build(m);
    auto estimates = [&] {
        std::vector<double> out;
        for (const ParamPoint& p : references) out.push_back(log_normconst(p.gamma1, p.gamma2));
        return out;
    };
    std::vector<double> previous = estimates();
    while (true) {
        if (2 * m > kMaxIntervals) throw NumericalError("normalizing constant quadrature did not converge");
        m *= 2;
        build(m);
        const std::vector<double> current = estimates();
        double change = 0.0;
        for (std::size_t i = 0; i < current.size(); ++i) {
            change = std::max(change, std::abs(current[i] - previous[i]));
        }
        if (change <= relative_tolerance) break;
        previous = current;
    }
}

void Integrator::build(std::size_t intervals) {
    z_ = linspace(lo_, hi_, intervals + 1);
    const double h = (hi_ - lo_) / static_cast<double>(intervals);
    weights_.assign(intervals + 1, 0.0);
    for (std::size_t i = 0; i <= intervals; ++i) {
        const double c = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        weights_[i] = c * h / 3.0;
    }
    likelihood_.resize(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i) {
        const double tau = std::exp(z_[i]);
        likelihood_[i] = log_marginal_likelihood_term(model_, tau);
        if (!std::isfinite(likelihood_[i])) {
            throw NumericalError(fmt::format("non-finite posterior integrand at tau = {}", tau));
        }
    }
}

std::vector<double> Integrator::log_integrand(double alpha, double beta) const {
    require_domain(Family::Gamma, {alpha, beta});
    std::vector<double> g(z_.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = log_kernel(model_, alpha, beta, z_[i], likelihood_[i]);
        if (!std::isfinite(g[i])) {
            throw NumericalError(fmt::format("non-finite posterior integrand at tau = {}", std::exp(z_[i])));
        }
    }
    const double peak = *std::ranges::max_element(g);
    if (g.front() > peak - kEndpointDrop || g.back() > peak - kEndpointDrop) {
        throw NumericalError(fmt::format(
            "quadrature window [{}, {}] in log tau does not cover the posterior for prior ({}, {})",
            z_.front(), z_.back(), alpha, beta));
    }
    return g;
}

double Integrator::log_sum(std::span<const double> g, double shift) const {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += weights_[i] * std::exp(g[i] - shift);
    return std::log(s);
}

double Integrator::log_normconst(double alpha, double beta) const {
    const std::vector<double> g = log_integrand(alpha, beta);
    const double shift = *std::ranges::max_element(g);
    return shift + log_sum(g, shift);
}

double Integrator::hellinger(const ParamPoint& p0, const ParamPoint& p1) const {
    const std::vector<double> g0 = log_integrand(p0.gamma1, p0.gamma2);
    const std::vector<double> g1 = log_integrand(p1.gamma1, p1.gamma2);
    const std::vector<double> gm =
        log_integrand(0.5 * (p0.gamma1 + p1.gamma1), 0.5 * (p0.gamma2 + p1.gamma2));
    // One shift for all three sums keeps the log ratio free of large offsets.
    const double shift = std::max(*std::ranges::max_element(g0), *std::ranges::max_element(g1));
    const double log_ratio = log_sum(gm, shift) - 0.5 * (log_sum(g0, shift) + log_sum(g1, shift));
    return hellinger_from_log_bc(log_ratio);
}

Integrator Integrator::refined() const { return Integrator(model_, lo_, hi_, 2 * intervals()); }

double log_normconst(const Model& model, double alpha, double beta) {
    const ParamPoint p{alpha, beta};
    return Integrator(model, std::span(&p, 1)).log_normconst(alpha, beta);
}

double exact_posterior_hellinger(const Model& model, const ParamPoint& p0, const ParamPoint& p1) {
    const ParamPoint mid{0.5 * (p0.gamma1 + p1.gamma1), 0.5 * (p0.gamma2 + p1.gamma2)};
    const std::vector<ParamPoint> refs{p0, p1, mid};
    return Integrator(model, refs).hellinger(p0, p1);
}

SensitivityResult exact_sensitivity(const Model& model, const PolarGrid& grid) {
    if (grid.base.family != Family::Gamma || !(grid.base.point == model.prior)) {
        throw DomainError("contour must be centred at the model's gamma prior");
    }
    std::vector<ParamPoint> refs{model.prior};
    for (const auto& cp : grid.points) refs.push_back(cp.point);
    const Integrator integrator(model, refs);
    return assemble_sensitivity(
        grid, [&](const ParamPoint& p) { return integrator.hellinger(model.prior, p); });
}

SensitivityResult exact_sensitivity(const Model& model, double epsilon, std::size_t n_angles) {
    return exact_sensitivity(model, compute_grid(PriorSpec(Family::Gamma, model.prior), epsilon, n_angles));
}

PosteriorInput tabulate_posterior(const Model& model, std::size_t n_points) {
    // Window where the log-tau density stays within exp(-30) ~ 1e-13 of its peak.
    const Scan scan = scan_likelihood(model);
    const auto [lo, hi] = mass_window(model, scan, model.prior, 30.0);
    std::vector<double> z = linspace(lo, hi, n_points);
    std::vector<double> g(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        g[i] = log_kernel(model, model.prior.gamma1, model.prior.gamma2, z[i],
                          log_marginal_likelihood_term(model, std::exp(z[i])));
        if (!std::isfinite(g[i])) {
            throw NumericalError(fmt::format("non-finite posterior density at tau = {}", std::exp(z[i])));
        }
    }
    const double peak = *std::ranges::max_element(g);
    std::vector<double> values(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) values[i] = std::exp(g[i] - peak);
    return PosteriorInput(DensityGrid(std::move(z), std::move(values), Scale::LogParameter),
                          PriorSpec(Family::Gamma, model.prior), Scale::LogParameter);
}

// --- data ----------------------------------------------------------------

Window parse_window(const std::string& text) {
    const std::string t = detail::to_lower(text);
    if (t == "full") return Window::Full;
    if (t == "last96") return Window::Last96;
    throw DomainError(fmt::format("unknown window '{}' (expected full or last96)", text));
}

namespace {

int month_from_date(std::string_view date, std::size_t line_no) {
    const auto dash = date.find('-');
    if (dash != std::string_view::npos) {
        const auto rest = date.substr(dash + 1);
        const auto month = detail::parse_double(rest.substr(0, rest.find('-')));
        if (month && *month >= 1 && *month <= 12 && *month == std::floor(*month)) {
            return static_cast<int>(*month);
        }
    } else if (const auto year = detail::parse_double(date)) {
        // Decimal year, e.g. 1969.0833 for February 1969.
        const double frac = *year - std::floor(*year);
        return static_cast<int>(std::lround(frac * 12.0)) % 12 + 1;
    }
    throw IngestionError(fmt::format("line {}: cannot read a month from date '{}'", line_no, date));
}

}  // namespace

MonthlySeries read_monthly_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IngestionError("time series CSV is empty");
    const std::size_t columns = detail::split_csv_line(line).size();
    if (columns != 1 && columns != 2) {
        throw IngestionError("time series CSV needs a `count` or `date,count` header");
    }
    MonthlySeries s;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != columns) {
            throw IngestionError(fmt::format("line {}: expected {} columns", line_no, columns));
        }
        const auto count = detail::parse_double(cells.back());
        if (!count) throw IngestionError(fmt::format("line {}: count is not a number", line_no));
        if (!(*count > 0.0)) throw IngestionError(fmt::format("line {}: counts must be positive", line_no));
        s.counts.push_back(*count);
        s.months.push_back(columns == 2 ? month_from_date(cells[0], line_no)
                                        : static_cast<int>(s.counts.size() - 1) % 12 + 1);
    }
    if (s.counts.empty()) throw IngestionError("time series CSV has no observations");
    return s;
}

MonthlySeries read_monthly_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError(fmt::format("cannot open time series '{}'", path));
    return read_monthly_csv(in);
}

std::vector<double> seasonal_residuals(const MonthlySeries& series) {
    if (series.counts.size() != series.months.size()) {
        throw IngestionError("time series counts and months differ in length");
    }
    std::array<double, 12> sum{};
    std::array<int, 12> count{};
    std::vector<double> root(series.counts.size());
    for (std::size_t i = 0; i < root.size(); ++i) {
        if (!(series.counts[i] > 0.0)) throw IngestionError("counts must be positive");
        root[i] = std::sqrt(series.counts[i]);
        const int m = series.months[i] - 1;
        if (m < 0 || m > 11) throw IngestionError("calendar month outside 1..12");
        sum[m] += root[i];
        ++count[m];
    }
    std::vector<double> y(root.size());
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const int m = series.months[i] - 1;
        y[i] = root[i] - sum[m] / count[m];
        total += y[i];
    }
    const double mean = total / static_cast<double>(y.size());
    for (double& v : y) v -= mean;
    return y;
}

double kappa_from_residual_variance(std::span<const double> y) {
    if (y.size() < 2) throw IngestionError("need at least two residuals to estimate kappa");
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss = 0.0;
    double scale = 0.0;
    for (double v : y) {
        ss += (v - mean) * (v - mean);
        scale = std::max(scale, std::abs(v));
    }
    const double var = ss / static_cast<double>(y.size() - 1);
    if (!(var > 0.0) || scale < 1e-12) {
        throw IngestionError("residuals have zero variance; kappa is undefined");
    }
    return 1.0 / var;
}

Model ingest_timeseries(const MonthlySeries& series, const IngestOptions& options) {
    MonthlySeries s = series;
    if (options.window == Window::Last96) {
        if (s.counts.size() < 96) {
            throw IngestionError(fmt::format("window last96 needs 96 observations, got {}", s.counts.size()));
        }
        const auto skip = static_cast<std::ptrdiff_t>(s.counts.size() - 96);
        s.counts.erase(s.counts.begin(), s.counts.begin() + skip);
        s.months.erase(s.months.begin(), s.months.begin() + skip);
    }
    if (s.counts.size() < 24 || s.counts.size() % 12 != 0) {
        throw IngestionError(fmt::format(
            "monthly series must cover whole years (a multiple of 12, at least 24), got {}",
            s.counts.size()));
    }
    std::vector<double> y = seasonal_residuals(s);
    const double kappa = options.kappa ? *options.kappa : kappa_from_residual_variance(y);
    try {
        return Model(std::move(y), kappa, options.prior);
    } catch (const DomainError& e) {
        throw IngestionError(e.what());
    }
}

Model ingest_timeseries(const std::string& path, const IngestOptions& options) {
    return ingest_timeseries(read_monthly_csv(path), options);
}

std::vector<double> simulate(std::size_t n, double tau, double kappa, std::uint64_t seed) {
    if (n < 2 || !(tau > 0.0) || !(kappa > 0.0)) throw DomainError("simulate needs n >= 2, tau, kappa > 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> step(0.0, 1.0 / std::sqrt(tau));
    std::normal_distribution<double> noise(0.0, 1.0 / std::sqrt(kappa));
    std::vector<double> y(n);
    double x = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) x += step(rng);
        y[i] = x + noise(rng);
        total += y[i];
    }
    for (double& v : y) v -= total / static_cast<double>(n);
    return y;
}

}  // namespace priorsens::rw1
