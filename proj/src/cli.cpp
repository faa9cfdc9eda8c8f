#include "priorsens/cli.hpp"

#include "priorsens/calibration.hpp"
#include "priorsens/density.hpp"
#include "priorsens/errors.hpp"
#include "priorsens/grid_search.hpp"
#include "priorsens/posterior_update.hpp"
#include "priorsens/rw1.hpp"
#include "priorsens/sensitivity.hpp"
#include "text_util.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

namespace priorsens::cli {

namespace {

namespace fs = std::filesystem;

struct RunConfig {
    double epsilon = default_epsilon;
    std::size_t n_angles = default_n_angles;
    std::string family = "gamma";
    std::string gamma0;
    bool log_scale = false;
    bool allow_partial = false;
    std::string posterior_path;
    std::string output_dir = ".";
    std::string name;
    std::optional<double> h;
    std::optional<double> mu;
    // rw1
    std::string data_path;
    std::string window = "full";
    std::optional<double> kappa;
    std::string prior = "1,0.005";
    std::string engine = "exact";
    std::string config_path;
};

ParamPoint parse_point(const std::string& text, const char* what) {
    const auto cells = detail::split_csv_line(text);
    if (cells.size() == 2) {
        const auto a = detail::parse_double(cells[0]);
        const auto b = detail::parse_double(cells[1]);
        if (a && b) return {*a, *b};
    }
    throw DomainError(fmt::format("{} must be two comma-separated numbers, got '{}'", what, text));
}

// Writes next to the target and renames, so readers never see partial files.
void write_atomically(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IngestionError(fmt::format("cannot write '{}'", tmp.string()));
        body(f);
        f.flush();
        if (!f) throw IngestionError(fmt::format("failed writing '{}'", tmp.string()));
    }
    fs::rename(tmp, path);
}

void write_text(const fs::path& path, const std::string& text) {
    write_atomically(path, [&](std::ostream& o) { o << text << '\n'; });
}

void emit_sensitivity(const RunConfig& cfg, const SensitivityResult& result, std::ostream& out,
                      std::ostream& err) {
    const fs::path dir(cfg.output_dir);
    write_text(dir / (cfg.name + ".json"), to_json(result));
    const PlotTables tables = export_plot_data(result);
    write_atomically(dir / (cfg.name + "_polar.csv"), [&](std::ostream& o) { write_polar_csv(o, tables); });
    write_atomically(dir / (cfg.name + "_rolled.csv"), [&](std::ostream& o) { write_rolled_csv(o, tables); });
    out << summarize(result);
    out << "wrote " << (dir / (cfg.name + ".json")).string() << '\n';
    for (const auto& w : result.warnings) err << "warning: " << w << '\n';
    if (classify(result.worst_case) == SensitivityStatus::SuperSensitive) {
        err << fmt::format("warning: super-sensitivity, worst case {:.4f} exceeds 1\n", result.worst_case);
    }
}

PolarGrid contour(const RunConfig& cfg, const PriorSpec& base, std::ostream& err) {
    try {
        return compute_grid(base, cfg.epsilon, cfg.n_angles);
    } catch (const PartialGridError& e) {
        if (!cfg.allow_partial) throw;
        err << "warning: " << e.what() << "; continuing with the partial grid\n";
        return e.grid();
    }
}

std::string grid_json(const PolarGrid& g) {
    nlohmann::ordered_json j;
    j["family"] = to_string(g.base.family);
    j["gamma1"] = g.base.point.gamma1;
    j["gamma2"] = g.base.point.gamma2;
    j["epsilon"] = g.epsilon;
    j["n_angles"] = g.n_angles;
    j["cardinal_moduli"] = {{"minus_half_pi", g.cardinal.minus_half_pi},
                            {"zero", g.cardinal.zero},
                            {"half_pi", g.cardinal.half_pi},
                            {"pi", g.cardinal.pi}};
    j["failed_angles"] = g.failed_angles;
    return j.dump(2);
}

void run_grid(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const PriorSpec base(parse_family(cfg.family), parse_point(cfg.gamma0, "--gamma0"));
    const PolarGrid g = contour(cfg, base, err);
    const fs::path dir(cfg.output_dir);
    write_atomically(dir / (cfg.name + ".csv"), [&](std::ostream& o) {
        o << "phi,gamma1,gamma2,hellinger_residual\n"
          << std::setprecision(std::numeric_limits<double>::max_digits10);
        for (const auto& p : g.points) {
            o << p.phi << ',' << p.point.gamma1 << ',' << p.point.gamma2 << ',' << p.residual << '\n';
        }
    });
    write_text(dir / (cfg.name + ".json"), grid_json(g));
    out << fmt::format("{} contour points at epsilon = {} written to {}\n", g.points.size(), g.epsilon,
                       (dir / (cfg.name + ".csv")).string());
}

void run_sensitivity(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.posterior_path.empty()) throw IngestionError("--posterior is required");
    const Scale scale = cfg.log_scale ? Scale::LogParameter : Scale::Natural;
    const PriorSpec base(parse_family(cfg.family), parse_point(cfg.gamma0, "--gamma0"));
    const PosteriorInput input(read_grid_csv(cfg.posterior_path, scale), base, scale);
    const PolarGrid g = contour(cfg, base, err);
    emit_sensitivity(cfg, circular_sensitivity(input, g), out, err);
}

void run_calibrate(const RunConfig& cfg, std::ostream& out) {
    if (cfg.h.has_value() == cfg.mu.has_value()) throw DomainError("give exactly one of --h or --mu");
    if (cfg.h) {
        if (!(*cfg.h < 1.0)) throw DomainError(fmt::format("calibration needs 0 <= h < 1, got {}", *cfg.h));
        const CalibratedValue c = calibrate_saturating(*cfg.h);
        out << fmt::format("h = {:.10g}\nmu = {:.10g}{}\n", *cfg.h, c.mu,
                           c.saturated ? " (saturated)" : "");
    } else {
        out << fmt::format("mu = {:.10g}\nh = {:.10g}\n", *cfg.mu, inverse_calibrate(*cfg.mu));
    }
}

void run_rw1(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.data_path.empty()) throw IngestionError("--data is required");
    rw1::IngestOptions opts;
    opts.window = rw1::parse_window(cfg.window);
    opts.kappa = cfg.kappa;
    opts.prior = parse_point(cfg.prior, "--prior");
    const rw1::Model model = rw1::ingest_timeseries(cfg.data_path, opts);
    err << fmt::format("rw1: n = {}, kappa = {:.6g}{}\n", model.n(), model.kappa,
                       cfg.kappa ? " (override)" : " (residual variance)");
    const PolarGrid g = contour(cfg, PriorSpec(Family::Gamma, model.prior), err);
    if (cfg.engine == "exact") {
        emit_sensitivity(cfg, rw1::exact_sensitivity(model, g), out, err);
    } else if (cfg.engine == "reweight") {
        emit_sensitivity(cfg, circular_sensitivity(rw1::tabulate_posterior(model), g), out, err);
    } else {
        throw DomainError(fmt::format("unknown engine '{}' (expected exact or reweight)", cfg.engine));
    }
}

void add_contour_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--epsilon", cfg.epsilon, "prior Hellinger distance of the contour")
        ->capture_default_str()
        ->check(CLI::Range(std::numeric_limits<double>::min(), 0.5));
    sub->add_option("--n-angles", cfg.n_angles, "number of polar directions")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{8}, std::numeric_limits<std::size_t>::max()));
    sub->add_flag("--allow-partial", cfg.allow_partial,
                  "continue with a partial contour when some directions are unreachable");
}

void add_output_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--output-dir", cfg.output_dir, "directory for reports and tables")
        ->envname(output_dir_env)
        ->capture_default_str();
    sub->add_option("--name", cfg.name, "base name of the emitted files (default: the subcommand)");
}

// Fills options the command line and environment left unset from a
// `key = value` file; keys are flag names without the leading dashes.
void apply_config_file(CLI::App* sub, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError(fmt::format("cannot open config file '{}'", path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = std::string(detail::trim(line));
        if (t.empty() || t.front() == '#' || t.front() == ';') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw IngestionError(fmt::format("{}:{}: expected key = value", path, line_no));
        }
        const std::string key = std::string(detail::trim(std::string_view(t).substr(0, eq)));
        std::string value = std::string(detail::trim(std::string_view(t).substr(eq + 1)));
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
            value = value.substr(1, value.size() - 2);
        }
        if (key == "config") throw IngestionError(fmt::format("{}:{}: config files do not nest", path, line_no));
        CLI::Option* opt = nullptr;
        try {
            opt = sub->get_option("--" + key);
        } catch (const CLI::OptionNotFound&) {
            throw IngestionError(fmt::format("{}:{}: unknown key '{}' for {}", path, line_no, key, sub->get_name()));
        }
        if (opt->count() > 0) continue;
        opt->add_result(value);
        try {
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw DomainError(fmt::format("{}:{}: {}", path, line_no, e.what()));
        }
    }
}

void require_arg(const std::string& value, const char* flag) {
    if (value.empty()) throw DomainError(fmt::format("{} is required", flag));
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ContourUnreachableError*>(&e) || dynamic_cast<const PartialGridError*>(&e)) {
        return contour_error;
    }
    if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const ReweightError*>(&e)) {
        return numerical_error;
    }
    if (dynamic_cast<const IngestionError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
        dynamic_cast<const AlignmentError*>(&e)) {
        return input_error;
    }
    if (dynamic_cast<const fs::filesystem_error*>(&e)) return input_error;
    return unexpected;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Local prior sensitivity analysis in Hellinger geometry", "priorsens"};
    app.require_subcommand(1);

    auto* grid = app.add_subcommand("grid", "compute the epsilon contour around a base prior");
    grid->add_option("--config", cfg.config_path, "key = value file mirroring the flag names; flags win");
    grid->add_option("--family", cfg.family, "prior family: normal or gamma")->capture_default_str();
    grid->add_option("--gamma0", cfg.gamma0, "base prior parameters, e.g. 1,0.34");
    add_contour_options(grid, cfg);
    add_output_options(grid, cfg);

    auto* sens = app.add_subcommand("sensitivity", "circular and worst-case sensitivity of a posterior");
    sens->add_option("--config", cfg.config_path, "key = value file mirroring the flag names; flags win");
    sens->add_option("--family", cfg.family, "prior family: normal or gamma")->capture_default_str();
    sens->add_option("--gamma0", cfg.gamma0, "base prior parameters");
    sens->add_option("--posterior", cfg.posterior_path, "x,density CSV of the base posterior");
    sens->add_flag("--log-scale", cfg.log_scale, "posterior is tabulated over log(theta)");
    add_contour_options(sens, cfg);
    add_output_options(sens, cfg);

    auto* cal = app.add_subcommand("calibrate", "map a Hellinger distance to a normal mean shift");
    cal->set_help_flag("--help", "print this help message and exit");
    cal->add_option("--h", cfg.h, "Hellinger distance in [0, 1)");
    cal->add_option("--mu", cfg.mu, "unit-variance normal mean shift (inverse mapping)");

    auto* rw = app.add_subcommand("rw1", "sensitivity of the RW1 smoothing precision");
    rw->add_option("--config", cfg.config_path, "key = value file mirroring the flag names; flags win");
    rw->add_option("--data", cfg.data_path, "monthly counts CSV (count or date,count)");
    rw->add_option("--window", cfg.window, "full or last96")->capture_default_str();
    rw->add_option("--kappa", cfg.kappa, "fixed noise precision (default: 1 / residual variance)");
    rw->add_option("--prior", cfg.prior, "gamma prior (shape,rate) for tau")->capture_default_str();
    rw->add_option("--engine", cfg.engine, "exact or reweight")->capture_default_str();
    add_contour_options(rw, cfg);
    add_output_options(rw, cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return input_error;
    }

    for (const auto* sub : {grid, sens, rw}) {
        if (sub->parsed() && cfg.name.empty()) cfg.name = sub->get_name();
    }

    try {
        for (auto* sub : {grid, sens, rw}) {
            if (sub->parsed() && !cfg.config_path.empty()) apply_config_file(sub, cfg.config_path);
        }
        if (grid->parsed() || sens->parsed()) require_arg(cfg.gamma0, "--gamma0");
        if (sens->parsed()) require_arg(cfg.posterior_path, "--posterior");
        if (rw->parsed()) require_arg(cfg.data_path, "--data");
        if (grid->parsed()) run_grid(cfg, out, err);
        if (sens->parsed()) run_sensitivity(cfg, out, err);
        if (cal->parsed()) run_calibrate(cfg, out);
        if (rw->parsed()) run_rw1(cfg, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return ok;
}

}  // namespace priorsens::cli
