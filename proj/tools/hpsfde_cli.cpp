#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hpsfde/certificates.hpp"
#include "hpsfde/config.hpp"
#include "hpsfde/error.hpp"
#include "hpsfde/estimators.hpp"
#include "hpsfde/integrator.hpp"
#include "hpsfde/lyapunov.hpp"

namespace fs = std::filesystem;
using namespace hpsfde;

namespace {

struct Overrides {
    std::optional<std::size_t> paths;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<double> T;
    std::optional<double> dt;

    void apply(SimulationSettings& s) const {
        if (paths) s.paths = *paths;
        if (seed) s.seed = *seed;
        if (workers) s.workers = *workers;
        if (T) s.T = *T;
        if (dt) s.dt = *dt;
    }
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--paths", o.paths, "Override the number of paths");
    cmd->add_option("--seed", o.seed, "Override the root seed");
    cmd->add_option("--workers", o.workers, "Worker threads (0 = hardware concurrency)");
    cmd->add_option("--T", o.T, "Override the horizon");
    cmd->add_option("--dt", o.dt, "Override the step size");
}

SimulationBatch simulate(const ExperimentConfig& cfg) {
    const auto& s = cfg.simulation;
    return run_batch(cfg.model, s.integrator(cfg.model), s.paths, s.initial_regime, s.seed, s.workers);
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
    return out;
}

const char* outcome_name(PathOutcome o) {
    switch (o) {
        case PathOutcome::Completed: return "completed";
        case PathOutcome::BlowUp: return "blowup";
        case PathOutcome::NonFinite: return "nonfinite";
    }
    return "unknown";
}

int run_simulate(const std::string& config_path, const fs::path& out_dir, const Overrides& o) {
    ExperimentConfig cfg = load_config(config_path);
    o.apply(cfg.simulation);
    const SimulationBatch batch = simulate(cfg);
    fs::create_directories(out_dir);
    {
        auto out = open_out(out_dir / "summary.csv");
        write_batch_summary(batch, cfg.simulation.moments, out);
    }
    {
        auto out = open_out(out_dir / "outcomes.csv");
        out << "path,seed,outcome,exploded_at\n";
        char buf[64];
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const auto& r = batch.results[i];
            const auto at = r.path.exploded_at();
            std::snprintf(buf, sizeof buf, "%.17g", at ? *at : NAN);
            out << i << "," << r.seed << "," << outcome_name(r.outcome) << "," << (at ? buf : "") << "\n";
        }
    }
    if (cfg.simulation.write_paths) {
        fs::create_directories(out_dir / "paths");
        char name[32];
        for (std::size_t i = 0; i < batch.size(); ++i) {
            std::snprintf(name, sizeof name, "path_%05zu.csv", i);
            auto out = open_out(out_dir / "paths" / name);
            batch.results[i].path.write_csv(out);
        }
    }
    std::printf("%s: %zu paths, %zu exploded, T=%g, dt=%g -> %s\n", cfg.name.c_str(), batch.size(),
                batch.exploded_count(), cfg.simulation.T, cfg.simulation.dt, out_dir.string().c_str());
    return 0;
}

int run_check_ito(const std::string& config_path, const std::optional<fs::path>& out_path, Overrides o) {
    ExperimentConfig cfg = load_config(config_path);
    if (!cfg.lyapunov) throw Error(ErrorCode::ConfigError, "check-ito needs a Lyapunov family");
    const double t_end = cfg.ito_t_end.value_or(cfg.model.t0 + 1.0);
    if (!o.T) o.T = t_end;
    o.apply(cfg.simulation);
    const SimulationBatch batch = simulate(cfg);
    const MartingaleResidual r = martingale_residual(*cfg.lyapunov, batch, t_end, cfg.simulation.workers);
    const bool pass = r.passes();
    char line[512];
    std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%zu,%zu,%s\n", cfg.name.c_str(), t_end,
                  r.residual, r.standard_error, r.z, r.bias_allowance(), r.n_used, r.n_excluded,
                  pass ? "pass" : "fail");
    const char* header = "preset,t_end,residual,stderr,z,bias_allowance,n_used,n_excluded,verdict\n";
    std::fputs(header, stdout);
    std::fputs(line, stdout);
    if (out_path) {
        auto out = open_out(*out_path);
        out << header << line;
    }
    return pass ? 0 : 1;
}

void print_verdict(const char* label, const CertificateVerdict& v) {
    std::printf("[%s] %s\n", label, v.holds ? "HOLDS" : "FAILS");
    for (std::size_t k = 0; k < v.margins.size(); ++k) std::printf("  margin[%zu] = %.12g\n", k, v.margins[k]);
    if (v.epsilon_sup) std::printf("  sup epsilon = %.12g\n", *v.epsilon_sup);
    if (v.epsilon) std::printf("  epsilon = %.12g\n", *v.epsilon);
    for (const auto& d : v.detail) std::printf("  %s\n", d.c_str());
    for (const auto& n : v.notes) std::printf("  note: %s\n", n.c_str());
}

int run_certify(const std::string& config_path) {
    const ExperimentConfig cfg = load_config(config_path);
    if (!cfg.certificate) throw Error(ErrorCode::ConfigError, "certify needs a certificate");
    if (cfg.checks.empty()) throw Error(ErrorCode::ConfigError, "no checks requested");
    const CertificateData& c = *cfg.certificate;
    bool all = true;
    for (const auto& check : cfg.checks) {
        if (check == "existence") {
            const auto v = check_existence(c);
            print_verdict("existence", v);
            all = all && v.holds;
        } else if (check == "exponential") {
            try {
                const auto v = solve_epsilon_exponential(c);
                print_verdict("exponential", v);
                all = all && v.holds;
                if (v.holds) {
                    std::printf("  moment bound a0/epsilon = %.12g\n", moment_bound(c, *v.epsilon));
                    for (int k = 1; k <= static_cast<int>(c.families.size()); ++k) {
                        std::printf("  time-average denominator[k=%d] = %.12g\n", k, time_average_denominator(c, k));
                    }
                }
                if (cfg.epsilon) {
                    const auto given = certify_exponential(c, *cfg.epsilon);
                    print_verdict("exponential-given", given);
                    all = all && given.holds;
                }
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NotApplicable) throw;
                std::printf("[exponential] FAILS\n  %s\n", e.what());
                all = false;
            }
        } else if (check == "polynomial") {
            try {
                const auto v = solve_epsilon_polynomial(c);
                print_verdict("polynomial", v);
                all = all && v.holds;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NotApplicable) throw;
                std::printf("[polynomial] FAILS\n  %s\n", e.what());
                all = false;
            }
        }
    }
    std::printf("%s\n", all ? "ALL CERTIFICATES HOLD" : "SOME CERTIFICATES FAIL");
    return all ? 0 : 1;
}

int run_estimate(const std::string& config_path, const std::string& kind, int power, const fs::path& out_path,
                 const Overrides& o) {
    ExperimentConfig cfg = load_config(config_path);
    o.apply(cfg.simulation);
    const SimulationBatch batch = simulate(cfg);
    if (cfg.max_exploded_fraction) enforce_explosion_budget(batch, *cfg.max_exploded_fraction);
    EstimatorOptions opts;
    opts.workers = cfg.simulation.workers;
    RateReport rep;
    if (kind == "moment") {
        rep = estimate_moment_rate(batch, power, opts);
    } else if (kind == "as") {
        rep = estimate_as_rate(batch, power, opts);
    } else if (kind == "avg") {
        rep = estimate_time_average(batch, power, opts);
    } else {
        rep = estimate_polynomial_rate(batch, power, opts);
    }
    auto out = open_out(out_path);
    rep.write_csv(out);
    std::printf("%s %s p=%d: fitted_rate=%.10g stderr=%.3g window=[%g, %g] used=%zu exploded=%zu\n",
                cfg.name.c_str(), std::string(to_string(rep.kind)).c_str(), power, rep.fitted_rate,
                rep.standard_error, rep.window_start, rep.window_end, rep.n_paths_used, rep.n_exploded);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator and stability toolkit for hybrid pantograph stochastic functional equations"};
    app.require_subcommand(1);

    std::string config;
    fs::path out_dir;
    Overrides sim_o, ito_o, est_o;
    auto* sim = app.add_subcommand("simulate", "Simulate a batch and write summary CSVs");
    sim->add_option("--config", config, "Experiment JSON")->required()->check(CLI::ExistingFile);
    sim->add_option("--out", out_dir, "Output directory")->required();
    add_overrides(sim, sim_o);

    std::optional<fs::path> ito_out;
    auto* ito = app.add_subcommand("check-ito", "Martingale residual of the hybrid Ito formula");
    ito->add_option("--config", config, "Experiment JSON")->required()->check(CLI::ExistingFile);
    ito->add_option("--out", ito_out, "Optional CSV with the residual table");
    add_overrides(ito, ito_o);

    auto* cert = app.add_subcommand("certify", "Check the stability certificates");
    cert->add_option("--config", config, "Experiment JSON")->required()->check(CLI::ExistingFile);

    std::string kind;
    int power = 2;
    fs::path report;
    auto* est = app.add_subcommand("estimate", "Estimate a decay rate by Monte Carlo");
    est->add_option("--config", config, "Experiment JSON")->required()->check(CLI::ExistingFile);
    est->add_option("--kind", kind, "moment | as | avg | poly")
        ->required()
        ->check(CLI::IsMember({"moment", "as", "avg", "poly"}));
    est->add_option("--power", power, "Power p of |x|^p")->check(CLI::PositiveNumber);
    est->add_option("--out", report, "Report CSV")->required();
    add_overrides(est, est_o);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*sim) return run_simulate(config, out_dir, sim_o);
        if (*ito) return run_check_ito(config, ito_out, ito_o);
        if (*cert) return run_certify(config);
        if (*est) return run_estimate(config, kind, power, report, est_o);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
