#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hpsfde/certificates.hpp"
#include "hpsfde/integrator.hpp"
#include "hpsfde/lyapunov.hpp"
#include "hpsfde/models.hpp"

namespace hpsfde {

struct SimulationSettings {
    double dt = 0.01;
    double T = 10.0;
    std::size_t paths = 1000;
    int initial_regime = 1;
    std::uint64_t seed = 1;
    int workers = 0;
    double blowup_threshold = 1e8;
    bool write_paths = false;
    /// Moment powers reported by the batch summary.
    std::vector<int> moments{2};

    [[nodiscard]] IntegratorConfig integrator(const ModelSpec& model) const;
};

/// One experiment: a model (preset or explicit), simulation settings, and the
/// optional Lyapunov family and certificate used by check-ito and certify.
struct ExperimentConfig {
    std::string name;
    std::optional<Preset> preset;
    ModelSpec model;
    SimulationSettings simulation;
    std::optional<LyapunovFamily> lyapunov;
    std::optional<double> ito_t_end;
    std::optional<CertificateData> certificate;
    /// Requested checks: "existence", "exponential", "polynomial".
    std::vector<std::string> checks;
    /// Rate to certify in addition to solving for the best one.
    std::optional<double> epsilon;
    /// Explosion budget enforced by estimators; unset disables the check.
    std::optional<double> max_exploded_fraction;
};

/// Parses JSON text. Throws Error(ConfigError) with the offending key.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Mean |x|^p per requested power and regime occupancy on the shared grid,
/// over non-exploded paths. Columns: time, occupancy_1..N, moment_p...
void write_batch_summary(const SimulationBatch& batch, const std::vector<int>& moments, std::ostream& os);

}  // namespace hpsfde
