#pragma once

#include <functional>
#include <string>

#include "poynting/grid.hpp"
#include "poynting/materials.hpp"

namespace poynting {

enum class Scheme { leapfrog, midpoint };

[[nodiscard]] std::string to_string(Scheme s);
/// Accepts "leapfrog" and "midpoint".
[[nodiscard]] Scheme parse_scheme(const std::string& name);

struct StepperConfig {
    Scheme scheme{Scheme::midpoint};
    double dt{0.0};
    double cg_tol{1e-12};
    int cg_maxit{2000};
};

/// e at time t; h at time t - h_lag (h_lag = dt/2 for leapfrog, 0 otherwise).
struct FieldState {
    EdgeField e;
    FaceField h;
    double t{0.0};
    double h_lag{0.0};
    long step{0};
};

struct CgResult {
    EdgeField x;
    int iterations{0};
    double residual{0.0};  ///< true relative residual |b - A x| / |b|
};

using LinearOperator = std::function<void(const EdgeField&, EdgeField&)>;

/// Preconditioned conjugate gradients in the discrete inner product.
/// `diag_inv` (optional) is the Jacobi preconditioner; `x0` (optional) the
/// starting guess. b = 0 returns x = 0 after zero iterations. Throws
/// SolverError when the relative residual is still above tol after maxit
/// iterations.
[[nodiscard]] CgResult cg_solve(const LinearOperator& apply_a, const EdgeField& b, const Grid& g, double tol, int maxit,
                                const EdgeField* diag_inv = nullptr, const EdgeField* x0 = nullptr);

/// Largest stable leapfrog step: 0.95 / (c_max sqrt(sum 1/d_i^2)).
[[nodiscard]] double cfl_limit(const MaterialSet& m, const Grid& g);

/// Time integrator bound to one grid and material set.
///
/// Midpoint: e-system  (eps + dt/2 sigma + dt^2/4 K mu^-1 C) e1 = rhs,
/// then h1 = h0 - dt/2 mu^-1 C (e0 + e1), with C = curl_e, K = curl_h.
/// Leapfrog: h first, then e with the averaged sigma term.
class Stepper {
public:
    /// Requires diagonal tensors with eps > 0, mu > 0 and dt > 0; leapfrog
    /// additionally dt <= cfl_limit. Throws ConfigError / UnsupportedLayout.
    Stepper(const Grid& g, const MaterialSet& m, const StepperConfig& cfg);

    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] const StepperConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const SampledMaterials& sampled() const noexcept { return sampled_; }
    [[nodiscard]] const CurrentSource& source() const noexcept { return source_; }

    /// State at t0 from initial data. Leapfrog shifts h to t0 - dt/2 with a
    /// backward midpoint half step. Throws ContractViolation when e0 is not
    /// PEC-conforming.
    [[nodiscard]] FieldState initialize(const EdgeField& e0, const FaceField& h0, double t0 = 0.0);

    /// Advances s by one step in place. Throws BlowUpError on NaN/Inf.
    void advance(FieldState& s);
    [[nodiscard]] FieldState step(const FieldState& s);

    /// h at the time of e: the mean of the two adjacent half levels for
    /// leapfrog, h itself otherwise.
    [[nodiscard]] FaceField synchronized_h(const FieldState& s) const;

    /// Iterations used by the last midpoint solve.
    [[nodiscard]] int last_iterations() const noexcept { return last_iterations_; }
    [[nodiscard]] double last_residual() const noexcept { return last_residual_; }

    /// Applies the midpoint e-system matrix for step size dt.
    void apply_system(const EdgeField& x, EdgeField& out, double dt) const;

private:
    void midpoint_update(FieldState& s, double dt);
    void leapfrog_update(FieldState& s);
    void apply_mu_inv_curl(const EdgeField& e, FaceField& out) const;

    Grid grid_;
    StepperConfig cfg_;
    SampledMaterials sampled_;
    CurrentSource source_;
    FaceField mu_inv_;
    EdgeField curl_curl_diag_;  ///< diagonal of K mu^-1 C, zero on masked edges
    int last_iterations_{0};
    double last_residual_{0.0};
};

[[nodiscard]] FieldState step_leapfrog(const FieldState& s, const MaterialSet& m, const Grid& g, double dt);
[[nodiscard]] FieldState step_midpoint(const FieldState& s, const MaterialSet& m, const Grid& g,
                                       const StepperConfig& cfg);

}  // namespace poynting
