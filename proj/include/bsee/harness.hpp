#pragma once

// Experiment runner behind the command-line tool: a JSON config describes a
// refinement matrix (case x scheme x J), each cell is solved and measured,
// and a rate is fitted per scheme over the asymptotic part of the J list.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bsee/backend.hpp"
#include "bsee/forward_sde.hpp"
#include "bsee/lattice_backend.hpp"
#include "bsee/rate_fit.hpp"
#include "bsee/regression_backend.hpp"
#include "bsee/schemes.hpp"
#include "bsee/stochastic_grid.hpp"

namespace bsee {

enum class ExperimentKind { bsee, lq };

struct BackendSpec {
    std::string kind = "lattice";
    LatticeOptions lattice;
    RegressionOptions regression;
};

struct OperatorSpec {
    std::string preset = "laplacian_1d";
    long modes = 16;
    double diffusivity = 1.0;
    /// Overrides the preset when non-empty.
    std::vector<double> eigenvalues;

    Operator build() const;
};

/// Which error the rate is fitted to.
enum class RateTarget { combined, p, z };

struct Thresholds {
    double min_rate = 0.45;
    /// Upper bound on the fitted error at the finest J.
    double max_error = std::numeric_limits<double>::infinity();
};

struct LQSpec {
    double nu = 1.0;
    CoefficientSet coeffs = CoefficientSet::constants(0.2, 1.0, 0.5, 0.3);
    std::vector<std::string> coeff_names{"0.2", "1", "0.5", "0.3"};
    /// "cos_markov" or "sin_deterministic".
    std::string target = "cos_markov";
    double tol = 1e-10;
};

struct ExperimentConfig {
    std::string name = "experiment";
    ExperimentKind kind = ExperimentKind::bsee;
    std::string case_id;
    std::vector<int> schemes{1};
    long substeps = 1;
    int quadrature = 2;
    double horizon = 1.0;
    std::vector<long> J;
    OperatorSpec op;
    BackendSpec backend;
    RateTarget rate_of = RateTarget::combined;
    Thresholds thresholds;
    SchemeOptions fixed_point;
    LQSpec lq;

    /// Every field after defaults are applied, for the summary.
    nlohmann::json echo() const;
};

/// Throws ConfigError with a path-qualified message on any invalid entry.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

std::unique_ptr<StochasticBackend> make_backend(const ExperimentConfig& config);

/// Markovian LQ targets by id; throws ConfigError for an unknown id.
MarkovFunction lq_target(const std::string& id, Eigen::Index modes);

struct CellResult {
    std::string case_id;
    int scheme = 0;
    std::string backend;
    long J = 0;
    double tau = 0.0;
    double err_p = 0.0;
    double err_z = 0.0;
    /// ||(I - P_tau) z|| for closed-form cases, NaN otherwise.
    double gap = std::numeric_limits<double>::quiet_NaN();
    int fp_iters_max = 0;
    double wall_ms = 0.0;
};

struct SchemeReport {
    int scheme = 0;
    std::vector<CellResult> cells;
    std::size_t asymptotic_from = 0;
    std::optional<RateFit> fit;
    bool pass = false;
    std::string reason;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<SchemeReport> schemes;
    long reference_J = 0;

    bool pass() const;
};

struct RunSettings {
    unsigned threads = 1;
    bool timing = true;
    std::optional<std::uint64_t> seed;
};

/// Runs the matrix. Solver failures are rethrown with the failing cell in the message,
/// keeping their type (ConvergenceError, PreconditionError, BackendError).
ExperimentReport run_experiment(ExperimentConfig config, const RunSettings& settings = {});

/// Header "case,scheme,backend,J,tau,errP_inf,errZ,fp_iters_max,wall_ms" and one row per cell.
void write_csv(std::ostream& out, const ExperimentReport& report);
nlohmann::json summary_json(const ExperimentReport& report);

/// Rate fits of a CSV written by write_csv, one per (case, scheme, backend).
nlohmann::json fit_csv(std::istream& in, RateTarget target = RateTarget::combined);

/// Exit codes of the command-line tool.
enum ExitCode : int { exit_pass = 0, exit_threshold = 1, exit_config = 2, exit_solver = 3 };

/// Loads, runs and writes <out_dir>/<name>.csv and <out_dir>/<name>.json. Diagnostics go to `log`.
int run_command(const std::string& config_path, const std::string& out_dir, const RunSettings& settings,
                std::ostream& log);

}  // namespace bsee
