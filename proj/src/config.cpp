#include "hpsfde/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "hpsfde/error.hpp"
#include "hpsfde/stats.hpp"

namespace hpsfde {

using json = nlohmann::json;

IntegratorConfig SimulationSettings::integrator(const ModelSpec& model) const {
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.T = T;
    cfg.blowup_threshold = blowup_threshold;
    cfg.brownian_dim = model.brownian_dim;
    return cfg;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::ConfigError, where + ": " + what);
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) fail(where, std::string("missing key '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(where + "." + key, e.what());
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
    return j.contains(key) ? get<T>(j, key, where) : fallback;
}

Measure parse_measure(const json& j, double theta_lower, const std::string& where) {
    const auto type = get<std::string>(j, "type", where);
    const int intervals = get_or<int>(j, "intervals", Measure::kDefaultIntervals, where);
    if (type == "uniform") {
        return Measure::uniform(get_or<double>(j, "lo", theta_lower, where), get_or<double>(j, "hi", 1.0, where),
                                intervals);
    }
    if (type == "dirac") return Measure::dirac(get_or<double>(j, "theta", 1.0, where));
    if (type == "atoms") {
        std::vector<Atom> atoms;
        for (const auto& a : get<std::vector<std::vector<double>>>(j, "atoms", where)) {
            if (a.size() != 2) fail(where + ".atoms", "each atom is [theta, weight]");
            atoms.push_back({a[0], a[1]});
        }
        return Measure::atoms(std::move(atoms));
    }
    if (type == "piecewise") {
        return Measure::piecewise_density(get<std::vector<double>>(j, "breakpoints", where),
                                          get<std::vector<double>>(j, "densities", where), intervals);
    }
    fail(where + ".type", "unknown measure type '" + type + "'");
}

CoefficientTerm parse_term(const json& j, const std::string& where) {
    const auto type = get<std::string>(j, "type", where);
    const int column = get_or<int>(j, "column", 0, where);
    if (type == "poly") {
        PointPolynomialTerm term;
        for (const auto& m : get<json>(j, "monomials", where)) {
            if (m.is_array()) {
                const auto v = m.get<std::vector<double>>();
                if (v.size() != 2) fail(where + ".monomials", "each monomial is [coeff, power]");
                term.monomials.push_back({v[0], v[1], false});
            } else {
                term.monomials.push_back({get<double>(m, "coeff", where), get<double>(m, "power", where),
                                          get_or<bool>(m, "absolute", false, where)});
            }
        }
        return {term, column};
    }
    if (type == "pantograph") {
        PantographTerm term;
        term.coeff = get<double>(j, "coeff", where);
        term.measure = get_or<int>(j, "measure", 0, where);
        term.kernel = get_or<int>(j, "kernel", -1, where);
        term.point_exponent = get_or<double>(j, "point_exponent", 0.0, where);
        term.delay_exponent = get_or<double>(j, "delay_exponent", 1.0, where);
        term.signed_delay = get_or<bool>(j, "signed", false, where);
        return {term, column};
    }
    fail(where + ".type", "unknown term type '" + type + "'");
}

std::vector<std::vector<CoefficientTerm>> parse_coefficients(const json& j, const std::string& where) {
    std::vector<std::vector<CoefficientTerm>> out;
    if (!j.is_array()) fail(where, "expected one term list per regime");
    for (std::size_t i = 0; i < j.size(); ++i) {
        std::vector<CoefficientTerm> terms;
        for (std::size_t k = 0; k < j[i].size(); ++k) {
            terms.push_back(parse_term(j[i][k], where + "[" + std::to_string(i) + "][" + std::to_string(k) + "]"));
        }
        out.push_back(std::move(terms));
    }
    return out;
}

InitialSegment parse_initial(const json& j, int dim, const std::string& where) {
    if (j.is_number()) return InitialSegment::constant_value(std::vector<double>(static_cast<std::size_t>(dim), j.get<double>()));
    if (j.is_array()) return InitialSegment::constant_value(j.get<std::vector<double>>());
    InitialSegment xi;
    xi.table_times = get<std::vector<double>>(j, "times", where);
    xi.table_values = get<std::vector<std::vector<double>>>(j, "values", where);
    return xi;
}

ModelSpec parse_model(const json& j) {
    const std::string where = "model";
    ModelSpec m;
    m.name = get_or<std::string>(j, "name", "custom", where);
    m.dim = get_or<int>(j, "dim", 1, where);
    m.brownian_dim = get_or<int>(j, "brownian_dim", 1, where);
    m.theta_lower = get<double>(j, "theta_lower", where);
    m.t0 = get_or<double>(j, "t0", 1.0, where);
    m.generator = make_generator(get<std::vector<std::vector<double>>>(j, "generator", where));
    if (j.contains("measures")) {
        for (std::size_t k = 0; k < j["measures"].size(); ++k) {
            m.measures.push_back(parse_measure(j["measures"][k], m.theta_lower, where + ".measures[" + std::to_string(k) + "]"));
        }
    }
    if (j.contains("kernels")) {
        for (const auto& k : j["kernels"]) {
            const double beta = get<double>(k, "beta", where + ".kernels");
            m.kernels.push_back({beta, get_or<double>(k, "rate", beta, where + ".kernels")});
        }
    }
    m.drift = parse_coefficients(get<json>(j, "drift", where), where + ".drift");
    m.diffusion = parse_coefficients(get<json>(j, "diffusion", where), where + ".diffusion");
    m.initial_segment = j.contains("xi") ? parse_initial(j["xi"], m.dim, where + ".xi")
                                         : InitialSegment::constant_value(std::vector<double>(static_cast<std::size_t>(m.dim), 0.0));
    m.validate();
    return m;
}

LyapunovFamily parse_lyapunov(const json& j) {
    const std::string where = "lyapunov";
    LyapunovFamily family;
    for (const auto& regime : get<json>(j, "regimes", where)) {
        std::vector<LyapunovTerm> terms;
        for (const auto& t : regime) {
            const auto v = t.get<std::vector<double>>();
            if (v.size() < 2 || v.size() > 3) fail(where + ".regimes", "each term is [coeff, power(, time_rate)]");
            const int power = static_cast<int>(v[1]);
            if (static_cast<double>(power) != v[1]) fail(where + ".regimes", "powers must be integers");
            terms.push_back({v[0], power, v.size() == 3 ? v[2] : 0.0});
        }
        family.per_regime.push_back(std::move(terms));
    }
    family.u0_power = get<int>(j, "u0", where);
    family.u_powers = get<std::vector<int>>(j, "u", where);
    try {
        family.validate();
    } catch (const Error& e) {
        fail(where, e.what());
    }
    return family;
}

CertificateData parse_certificate(const json& j) {
    const std::string where = "certificate";
    CertificateData c;
    const auto form = get<std::string>(j, "form", where);
    if (form == "kernel") {
        c.form = HypothesisForm::Kernel;
    } else if (form == "plain") {
        c.form = HypothesisForm::Plain;
    } else {
        fail(where + ".form", "expected 'kernel' or 'plain'");
    }
    c.a0 = get_or<double>(j, "a0", 0.0, where);
    c.theta_lower = get<double>(j, "theta_lower", where);
    if (j.contains("beta")) c.beta = get<double>(j, "beta", where);
    c.t0 = get_or<double>(j, "t0", 1.0, where);
    for (const auto& f : get<json>(j, "families", where)) {
        CertificateFamily family;
        family.a = get<double>(f, "a", where + ".families");
        family.power = get_or<int>(f, "power", 2, where + ".families");
        for (const auto& t : get<std::vector<std::vector<double>>>(f, "terms", where + ".families")) {
            if (t.size() != 2) fail(where + ".families.terms", "each term is [b, alpha]");
            family.terms.push_back({t[0], t[1]});
        }
        c.families.push_back(std::move(family));
    }
    try {
        c.validate();
    } catch (const Error& e) {
        fail(where, e.what());
    }
    return c;
}

SimulationSettings parse_simulation(const json& j) {
    const std::string where = "simulation";
    SimulationSettings s;
    s.dt = get_or<double>(j, "dt", s.dt, where);
    s.T = get_or<double>(j, "T", s.T, where);
    s.paths = get_or<std::size_t>(j, "paths", s.paths, where);
    s.initial_regime = get_or<int>(j, "initial_regime", s.initial_regime, where);
    s.seed = get_or<std::uint64_t>(j, "seed", s.seed, where);
    s.workers = get_or<int>(j, "workers", s.workers, where);
    s.blowup_threshold = get_or<double>(j, "blowup_threshold", s.blowup_threshold, where);
    s.write_paths = get_or<bool>(j, "write_paths", s.write_paths, where);
    s.moments = get_or<std::vector<int>>(j, "moments", s.moments, where);
    return s;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        fail("config", e.what());
    }
    ExperimentConfig cfg;
    try {
        if (j.contains("preset") == j.contains("model")) fail("config", "give exactly one of 'preset' or 'model'");
        if (j.contains("preset")) {
            const auto name = get<std::string>(j, "preset", "config");
            const auto p = parse_preset(name);
            if (!p) fail("preset", "unknown preset '" + name + "'");
            cfg.preset = *p;
            const double t0 = get_or<double>(j, "t0", 1.0, "config");
            const double xi = get_or<double>(j, "xi", 0.5, "config");
            const double theta_lower = preset_theta_lower(*p);
            const Measure nu = j.contains("measure") ? parse_measure(j["measure"], theta_lower, "measure")
                                                     : Measure::uniform(theta_lower, 1.0);
            cfg.model = preset(*p, nu, t0, xi);
            cfg.lyapunov = preset_lyapunov(*p);
            CertificateData c = preset_certificate(*p);
            c.t0 = t0;
            cfg.certificate = c;
            if (*p == Preset::Example37) {
                cfg.checks = {"existence", "polynomial"};
            } else {
                cfg.checks = {"existence", "exponential"};
                cfg.epsilon = *p == Preset::Example34 ? 0.05 : 0.1;
            }
            cfg.max_exploded_fraction = 0.01;
        } else {
            cfg.model = parse_model(j["model"]);
        }
        if (j.contains("subsystem")) {
            const int regime = get<int>(j, "subsystem", "config");
            cfg.model = subsystem(cfg.model, regime);
            if (cfg.lyapunov) {
                LyapunovFamily sub = *cfg.lyapunov;
                sub.per_regime = {cfg.lyapunov->per_regime.at(static_cast<std::size_t>(regime - 1))};
                cfg.lyapunov = sub;
            }
            cfg.certificate.reset();
            cfg.checks.clear();
            cfg.epsilon.reset();
            cfg.max_exploded_fraction.reset();
        }
        cfg.name = get_or<std::string>(j, "name", cfg.model.name, "config");
        if (j.contains("simulation")) cfg.simulation = parse_simulation(j["simulation"]);
        if (j.contains("lyapunov")) cfg.lyapunov = parse_lyapunov(j["lyapunov"]);
        if (j.contains("ito_t_end")) cfg.ito_t_end = get<double>(j, "ito_t_end", "config");
        if (j.contains("certificate")) cfg.certificate = parse_certificate(j["certificate"]);
        if (j.contains("checks")) cfg.checks = get<std::vector<std::string>>(j, "checks", "config");
        if (j.contains("epsilon")) cfg.epsilon = get<double>(j, "epsilon", "config");
        if (j.contains("max_exploded_fraction")) {
            if (j["max_exploded_fraction"].is_null()) {
                cfg.max_exploded_fraction.reset();
            } else {
                cfg.max_exploded_fraction = get<double>(j, "max_exploded_fraction", "config");
            }
        }
        for (const auto& check : cfg.checks) {
            if (check != "existence" && check != "exponential" && check != "polynomial") {
                fail("checks", "unknown check '" + check + "'");
            }
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        throw Error(ErrorCode::ConfigError, e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

void write_batch_summary(const SimulationBatch& batch, const std::vector<int>& moments, std::ostream& os) {
    const std::vector<double> grid = batch.shared_grid();
    const int n_regimes = batch.model.regimes();
    std::vector<const PathResult*> usable;
    for (const auto& r : batch.results) {
        if (!r.exploded()) usable.push_back(&r);
    }
    os << "time";
    for (int i = 1; i <= n_regimes; ++i) os << ",occupancy_" << i;
    for (int p : moments) os << ",moment_" << p;
    os << "\n";
    const auto n = static_cast<double>(usable.size());
    std::vector<double> x(static_cast<std::size_t>(batch.model.dim));
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_regimes));
    std::vector<stats::CompensatedSum> sums(moments.size());
    char buf[64];
    for (double t : grid) {
        std::fill(counts.begin(), counts.end(), 0);
        std::fill(sums.begin(), sums.end(), stats::CompensatedSum{});
        for (const PathResult* r : usable) {
            const DensePath& path = r->path;
            const int regime = path.regime_at(path.locate(t));
            if (regime >= 1) ++counts[static_cast<std::size_t>(regime - 1)];
            path.eval(t, x);
            double r2 = 0.0;
            for (double v : x) r2 += v * v;
            for (std::size_t m = 0; m < moments.size(); ++m) sums[m].add(std::pow(std::sqrt(r2), moments[m]));
        }
        std::snprintf(buf, sizeof buf, "%.17g", t);
        os << buf;
        for (std::size_t c : counts) {
            std::snprintf(buf, sizeof buf, ",%.17g", n > 0 ? static_cast<double>(c) / n : 0.0);
            os << buf;
        }
        for (auto& s : sums) {
            std::snprintf(buf, sizeof buf, ",%.17g", n > 0 ? s.value() / n : NAN);
            os << buf;
        }
        os << "\n";
    }
}

}  // namespace hpsfde
