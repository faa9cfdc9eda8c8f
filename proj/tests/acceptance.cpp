// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Criterion 7 prints SKIP when the drivers series is absent.

#include "oracles.hpp"

#include "priorsens/calibration.hpp"
#include "priorsens/density.hpp"
#include "priorsens/grid_search.hpp"
#include "priorsens/posterior_update.hpp"
#include "priorsens/rw1.hpp"
#include "priorsens/sensitivity.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

using namespace priorsens;

namespace {

enum class Outcome { Pass, Fail, Skip };

struct Verdict {
    Outcome outcome;
    std::string detail;
};

Verdict verdict(bool ok, std::string detail) { return {ok ? Outcome::Pass : Outcome::Fail, std::move(detail)}; }

// Synthetic RW1 series shared by criteria 4 to 6.
constexpr std::size_t synthetic_n = 192;
constexpr std::uint64_t synthetic_seed = 20240517;
constexpr ParamPoint base_prior{1.0, 0.005};

std::vector<double> synthetic_series() { return rw1::simulate(synthetic_n, 25.0, 1.0 / (1.9 * 1.9), synthetic_seed); }

rw1::Model model_from(std::vector<double> y) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    for (double& v : y) v -= mean;
    const double kappa = rw1::kappa_from_residual_variance(y);
    return rw1::Model(std::move(y), kappa, base_prior);
}

rw1::Model synthetic_model() { return model_from(synthetic_series()); }

rw1::Model synthetic_model_last(std::size_t n) {
    const auto y = synthetic_series();
    return model_from(std::vector<double>(y.end() - static_cast<std::ptrdiff_t>(n), y.end()));
}

Verdict calibration() {
    const double h = inverse_calibrate(0.01);
    const double mu = calibrate(0.00354);
    const bool ok = h >= 0.003530 && h <= 0.003541 && mu >= 0.0099 && mu <= 0.0101;
    return verdict(ok, fmt::format("inverse_calibrate(0.01) = {:.7f}, calibrate(0.00354) = {:.7f}", h, mu));
}

// Shared support: both default grids merged, so each density is resolved on
// its own scale even when the two are far apart.
std::vector<double> merged_support(const PriorSpec& a, const PriorSpec& b, Scale scale) {
    constexpr std::size_t per_side = 20001;
    const auto [la, ha] = default_range(a, scale);
    const auto [lb, hb] = default_range(b, scale);
    std::vector<double> x = linspace(la, ha, per_side);
    const auto xb = linspace(lb, hb, per_side);
    x.insert(x.end(), xb.begin(), xb.end());
    std::ranges::sort(x);
    const auto dup = std::ranges::unique(x);
    x.erase(dup.begin(), dup.end());
    return x;
}

Verdict analytic_vs_grid() {
    oracle::Gen gen(101);
    double worst_normal = 0.0, worst_gamma = 0.0;
    for (int t = 0; t < 200; ++t) {
        const PriorSpec p0(Family::Normal, {gen.log_uniform(0.01, 100), gen.log_uniform(0.01, 100)});
        const PriorSpec p1(Family::Normal, {gen.log_uniform(0.01, 100), gen.log_uniform(0.01, 100)});
        const auto x = merged_support(p0, p1, Scale::Natural);
        const double hg = hellinger_grid(tabulate(p0, Scale::Natural, x), tabulate(p1, Scale::Natural, x));
        worst_normal = std::max(worst_normal, std::abs(hg - hellinger_normal(p0.point, p1.point)));
    }
    for (int t = 0; t < 200; ++t) {
        const PriorSpec p0(Family::Gamma, {gen.log_uniform(0.01, 100), gen.log_uniform(0.01, 100)});
        const PriorSpec p1(Family::Gamma, {gen.log_uniform(0.01, 100), gen.log_uniform(0.01, 100)});
        const auto z = merged_support(p0, p1, Scale::LogParameter);
        const double hg =
            hellinger_grid(tabulate(p0, Scale::LogParameter, z), tabulate(p1, Scale::LogParameter, z));
        worst_gamma = std::max(worst_gamma, std::abs(hg - hellinger_gamma(p0.point, p1.point)));
    }
    return verdict(std::max(worst_normal, worst_gamma) <= 1e-5,
                   fmt::format("max |analytic - grid|: normal {:.2e}, gamma {:.2e}", worst_normal, worst_gamma));
}

Verdict contours() {
    std::string detail;
    bool ok = true;
    for (const PriorSpec& base : {PriorSpec(Family::Gamma, {1, 0.34}), PriorSpec(Family::Normal, {0, 0.001})}) {
        const PolarGrid g = compute_grid(base, default_epsilon, default_n_angles);
        double worst = 0.0;
        bool domain = g.complete() && g.points.size() == default_n_angles;
        for (const auto& p : g.points) {
            domain = domain && in_domain(base.family, p.point);
            worst = std::max(worst, std::abs(hellinger_family(base.family, p.point, base.point) - default_epsilon));
        }
        ok = ok && domain && worst <= default_epsilon * 1e-4;
        detail += fmt::format("{}{}: max |H - eps| = {:.2e}{}", detail.empty() ? "" : "; ", to_string(base.family),
                              worst, domain ? "" : ", domain violated");
    }
    return verdict(ok, detail);
}

Verdict oracle_equivalence() {
    const rw1::Model m = synthetic_model();
    const PolarGrid g = compute_grid(PriorSpec(Family::Gamma, m.prior), default_epsilon, default_n_angles);
    const SensitivityResult ex = rw1::exact_sensitivity(m, g);
    const SensitivityResult rw = circular_sensitivity(rw1::tabulate_posterior(m), g);
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < ex.entries.size(); ++i) {
        const double d = rw.entries[i].ratio - ex.entries[i].ratio;
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return verdict(std::max(-lo, hi) <= 1e-4,
                   fmt::format("n = {}, kappa = {:.4f}, reweight - exact in ({:.2e}, {:.2e})", m.n(), m.kappa, lo,
                               hi));
}

Verdict epsilon_stability() {
    const rw1::Model m = synthetic_model();
    std::vector<double> worst;
    for (double eps : {1e-4, 5e-4, 1e-3, 5e-3, 1e-2}) worst.push_back(rw1::exact_sensitivity(m, eps).worst_case);
    const auto [mn, mx] = std::ranges::minmax(worst);
    bool monotone = true;
    for (std::size_t i = 1; i < worst.size(); ++i) monotone = monotone && worst[i] >= worst[i - 1] - 0.005;
    return verdict(mx - mn <= 0.03 && monotone,
                   fmt::format("worst case {:.4f}, range {:.4f}{}", fmt::join(worst, " "), mx - mn,
                               monotone ? "" : ", not nondecreasing"));
}

Verdict sample_size() {
    const double w192 = rw1::exact_sensitivity(synthetic_model(), 1e-3).worst_case;
    const double w96 = rw1::exact_sensitivity(synthetic_model_last(96), 1e-3).worst_case;
    return verdict(w96 > w192, fmt::format("worst case n = 96: {:.4f}, n = 192: {:.4f}", w96, w192));
}

Verdict drivers(const std::string& path) {
    if (!std::filesystem::exists(path)) return {Outcome::Skip, "drivers series not found at " + path};
    // Noise precision fixed at the reference value 0.274; the seasonal adjustment
    // behind it is not reproducible from per-month means.
    rw1::IngestOptions full;
    full.kappa = 0.274;
    rw1::IngestOptions last = full;
    last.window = rw1::Window::Last96;
    const double w192 = rw1::exact_sensitivity(rw1::ingest_timeseries(path, full), 1e-3).worst_case;
    const double w96 = rw1::exact_sensitivity(rw1::ingest_timeseries(path, last), 1e-3).worst_case;
    const bool ok = std::abs(w192 - 0.48) <= 0.05 && std::abs(w96 - 0.71) <= 0.05;
    return verdict(ok, fmt::format("kappa = 0.274, eps = 1e-3: n = 192 {:.4f}, n = 96 {:.4f}", w192, w96));
}

Verdict flat_likelihood() {
    double worst = 0.0;
    for (const PriorSpec& base : {PriorSpec(Family::Gamma, {1, 0.34}), PriorSpec(Family::Normal, {0, 1})}) {
        const Scale s = base.family == Family::Gamma ? Scale::LogParameter : Scale::Natural;
        const PosteriorInput in(tabulate(base, s), base, s);
        const SensitivityResult r = circular_sensitivity(in, compute_grid(base, default_epsilon, default_n_angles));
        if (r.entries.size() != default_n_angles) return verdict(false, "wrong number of angles");
        for (const auto& e : r.entries) worst = std::max(worst, std::abs(e.ratio - 1.0));
    }
    return verdict(worst <= 5e-5, fmt::format("max |ratio - 1| = {:.2e} over 2 x {} angles", worst,
                                              default_n_angles));
}

Verdict linear_algebra() {
    double det_err = 0.0;
    for (std::size_t n = 2; n <= 50; ++n) {
        for (double tau : {1e-3, 0.1, 1.0, 25.0, 1e3}) {
            for (double kappa : {1e-2, 0.274, 1.0, 10.0}) {
                const double ref = oracle::Lu(oracle::rw1_precision(tau, kappa, n)).logabsdet();
                det_err = std::max(det_err, std::abs(rw1::logdet_q(tau, kappa, n) - ref));
            }
        }
    }
    oracle::Gen gen(103);
    double residual = 0.0;
    for (std::size_t n : {2u, 10u, 100u, 1000u, 10000u}) {
        for (int k = 0; k < 5; ++k) {
            const double tau = gen.log_uniform(1e-3, 1e4), kappa = gen.log_uniform(1e-3, 1e3);
            const auto y = gen.normals(n);
            const rw1::Tridiagonal q = rw1::precision_matrix(tau, kappa, n);
            for (const auto& v : {rw1::solve_tridiagonal(q, y), rw1::solve_precision(tau, kappa, y)}) {
                const auto qv = rw1::multiply(q, v);
                for (std::size_t i = 0; i < n; ++i) residual = std::max(residual, std::abs(qv[i] - y[i]));
            }
        }
    }
    return verdict(det_err <= 1e-8 && residual <= 1e-10,
                   fmt::format("log det error {:.2e} (n <= 50), solve residual {:.2e} (n <= 10000)", det_err,
                               residual));
}

}  // namespace

int main(int argc, char** argv) {
    const std::string data = argc > 1 ? argv[1] : std::string(PRIORSENS_DATA_DIR) + "/drivers.csv";
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"calibration pairing", calibration},
        {"analytic vs quadrature Hellinger", analytic_vs_grid},
        {"contour correctness", contours},
        {"reweighting vs exact RW1 oracle", oracle_equivalence},
        {"epsilon stability", epsilon_stability},
        {"sample-size monotonicity", sample_size},
        {"drivers table", [&] { return drivers(data); }},
        {"flat likelihood", flat_likelihood},
        {"linear-algebra oracles", linear_algebra},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {Outcome::Fail, fmt::format("threw: {}", e.what())};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const char* tag = v.outcome == Outcome::Pass ? "PASS" : v.outcome == Outcome::Fail ? "FAIL" : "SKIP";
        if (v.outcome == Outcome::Fail) ++failures;
        fmt::print("{} {} {}: {} [{:.2f}s]\n", tag, i + 1, criteria[i].first, v.detail, secs);
    }
    return failures == 0 ? 0 : 1;
}
