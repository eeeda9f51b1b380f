#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "poynting/grid.hpp"
#include "poynting/materials.hpp"
#include "poynting/stepper.hpp"
#include "poynting/trace.hpp"

namespace poynting {

enum class Scenario { cavity_te101, damped_cavity, driven_pulse, zero_data, custom };

[[nodiscard]] std::string to_string(Scenario s);
/// Throws ParseError naming the "scenario" key.
[[nodiscard]] Scenario parse_scenario(const std::string& name);

struct VerifyOptions {
    bool weakform{false};
    std::size_t bank_size{5};
    double weakform_tol{1e-2};
    bool steklov{false};
    std::vector<double> lambda;  ///< empty selects 8 snapshot intervals
    double steklov_tol{1e-2};
    bool uniqueness{false};
    double delta{1e-8};
    bool gauss{false};
    double gauss_tol{1e-12};          ///< on the relative div(mu h) defect
    std::optional<double> balance_tol;  ///< unset: 1e-10 midpoint, 1e-3 leapfrog

    friend bool operator==(const VerifyOptions&, const VerifyOptions&) = default;
};

struct OutputOptions {
    std::string dir{"."};
    std::string energy_csv{"energy.csv"};
    std::string report_json{"report.json"};
    std::string config{"config.effective"};
    std::string trace;  ///< empty writes no trace file
    int stride{1};

    friend bool operator==(const OutputOptions&, const OutputOptions&) = default;
};

/// Fully resolved run description. Scenario presets are already folded into
/// materials, source and initial-data selection, and dt == T / steps.
struct SimConfig {
    Index3 n{};
    Real3 extent{1.0, 1.0, 1.0};
    double T{0.0};
    long steps{0};
    double dt{0.0};
    Scheme scheme{Scheme::midpoint};
    double cg_tol{1e-12};
    int cg_maxit{2000};
    Scenario scenario{Scenario::custom};
    SymTensor eps{SymTensor::isotropic(1.0)};
    SymTensor mu{SymTensor::isotropic(1.0)};
    SymTensor sigma{};
    std::string material_file;  ///< overrides the homogeneous tensors when set
    SourceSpec source;
    OutputOptions output;
    std::uint64_t seed{1};
    bool deterministic{true};
    int threads{0};
    VerifyOptions verify;

    [[nodiscard]] StepperConfig stepper() const;
    [[nodiscard]] double balance_tol() const;

    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// Flat "key = value" lines, '#' starts a comment. Required: grid.n,
/// time.T, scenario and time.dt or time.steps (both only if consistent).
/// Throws ParseError carrying the offending key.
[[nodiscard]] SimConfig parse_config(const std::string& text);
[[nodiscard]] SimConfig load_config(const std::filesystem::path& path);
/// Every key with its resolved value; parse_config(emit_config(c)) == c.
[[nodiscard]] std::string emit_config(const SimConfig& c);

/// Ordered numeric metrics and named pass/fail checks.
class Report {
public:
    void metric(std::string name, double value);
    void check(std::string name, bool ok);
    void note(std::string name, std::string text);

    [[nodiscard]] const std::vector<std::pair<std::string, double>>& metrics() const noexcept { return metrics_; }
    [[nodiscard]] const std::vector<std::pair<std::string, bool>>& checks() const noexcept { return checks_; }
    [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& notes() const noexcept { return notes_; }
    [[nodiscard]] bool passed() const noexcept;
    [[nodiscard]] std::optional<double> find_metric(const std::string& name) const;
    [[nodiscard]] std::optional<bool> find_check(const std::string& name) const;
    /// Flat JSON object: notes, metrics, checks, then "passed".
    [[nodiscard]] std::string to_json() const;

private:
    std::vector<std::pair<std::string, double>> metrics_;
    std::vector<std::pair<std::string, bool>> checks_;
    std::vector<std::pair<std::string, std::string>> notes_;
};

/// Closed-form standing mode e_z = sin(pi x / Lx) sin(pi y / Ly) cos(w t)
/// in a homogeneous lossless isotropic medium, w = pi sqrt(1/Lx^2 + 1/Ly^2) / sqrt(eps mu).
struct CavityMode {
    Real3 extent;
    double eps{1.0};
    double mu{1.0};

    [[nodiscard]] double omega() const noexcept;
    [[nodiscard]] EdgeField e(const Grid& g, double t) const;
    [[nodiscard]] FaceField h(const Grid& g, double t) const;
};

struct CavityReport {
    double omega_analytic{0.0};
    double omega_discrete{0.0};
    double omega_relative_error{0.0};
    double max_field_error{0.0};  ///< max over steps of the pointwise e and h error
    int zero_crossings{0};
};

struct ScenarioResult {
    Grid grid;
    MaterialSet materials;
    RunResult run;
    std::optional<CavityReport> cavity;
    Report report;
};

/// Materials of the run: the material file when given, else the homogeneous tensors, with the source attached.
[[nodiscard]] MaterialSet scenario_materials(const SimConfig& c, const Grid& g);
/// Initial (e0, h0) selected by the scenario.
[[nodiscard]] std::pair<EdgeField, FaceField> scenario_initial_data(const SimConfig& c, const Grid& g);

/// Runs the scenario and every enabled check. Errors from the stepper,
/// materials and verification hypotheses propagate.
[[nodiscard]] ScenarioResult run_scenario(const SimConfig& c);

/// Weak-form, Steklov and Gauss audits of a stored trace into `report`.
void verify_trace(const SolutionTrace& tr, const VerifyOptions& opts, std::uint64_t seed, Report& report);

/// Writes the energy CSV, JSON report, effective config and optional trace
/// under c.output.dir. Throws ConfigError on an unwritable path.
void emit_outputs(const ScenarioResult& r, const SimConfig& c);

/// "t,E,flux,joule_cum,source_cum,residual" with %.17g rows.
[[nodiscard]] std::string energy_csv(const EnergyLedger& ledger);

}  // namespace poynting
