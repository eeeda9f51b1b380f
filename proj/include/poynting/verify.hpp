#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "poynting/grid.hpp"
#include "poynting/materials.hpp"
#include "poynting/stepper.hpp"
#include "poynting/trace.hpp"

namespace poynting {

/// Scalar time profile zeta of a separable test function.
class TimeProfile {
public:
    using Fn = std::function<double(double)>;

    TimeProfile(std::string name, Fn value, Fn derivative)
        : name_(std::move(name)), value_(std::move(value)), derivative_(std::move(derivative)) {}

    /// 1 - t/T
    [[nodiscard]] static TimeProfile linear(double T);
    /// cos^2(pi t / 2T)
    [[nodiscard]] static TimeProfile cos2(double T);
    /// exp(1 - 1/(1 - s^2)) on (0.1 T, 0.9 T), s the centered coordinate; 0 elsewhere.
    [[nodiscard]] static TimeProfile bump(double T);

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] double operator()(double t) const { return value_(t); }
    [[nodiscard]] double derivative(double t) const { return derivative_(t); }

private:
    std::string name_;
    Fn value_;
    Fn derivative_;
};

/// phi(x, t) = phi_hat(x) zeta(t), psi(x, t) = psi_hat(x) zeta(t).
struct TestPair {
    EdgeField phi;
    FaceField psi;
    TimeProfile zeta;
};

struct TestFunctionBank {
    std::vector<TestPair> pairs;

    /// Smooth spatial parts: random combinations of low sine/cosine modes,
    /// phi_hat masked; profiles cycle linear, cos2, bump. Resolution
    /// independent for a fixed seed.
    [[nodiscard]] static TestFunctionBank smooth(const Grid& g, double T, std::size_t size, std::uint64_t seed);
    /// Uniform random interior edge data (masked) and face data.
    [[nodiscard]] static TestFunctionBank random(const Grid& g, double T, std::size_t size, std::uint64_t seed);
};

/// Throws PreconditionError when |zeta(T)| > 1e-14, or phi_hat is not
/// PEC-conforming, or it fails the V0 adjointness criterion.
void validate_test_pair(const TestPair& pair, const Grid& g, double T);

struct WeakFormResidual {
    double lhs{0.0};       ///< -int (a zeta') + int (b zeta)
    double rhs{0.0};       ///< a(0) zeta(0)
    double residual{0.0};  ///< lhs - rhs
    double scale{0.0};     ///< Cauchy-Schwarz bound of the terms + |rhs| + 1e-30
    double scaled{0.0};    ///< |residual| / scale
};

/// Integral identity against each bank pair, trapezoid rule in time over
/// the trace snapshots, with
///   a(t) = inner(eps e, phi_hat) + inner(mu h, psi_hat)
///   b(t) = -inner(h, curl_e phi_hat) + inner(e, curl_h psi_hat) + inner(j, phi_hat).
[[nodiscard]] std::vector<WeakFormResidual> weakform_residual(const SolutionTrace& tr, const TestFunctionBank& bank);
[[nodiscard]] WeakFormResidual weakform_residual(const SolutionTrace& tr, const TestPair& pair);

struct SemidiscreteResidual {
    double r_e{0.0};       ///< max |D(eps e) . phi - h_l . curl phi + j_l . phi| / scale_e
    double r_h{0.0};       ///< max |D(mu h) . psi + e_l . curl psi| / scale_h
    double r_energy{0.0};  ///< max |d/dt E_l + inner(j_l, e_l)| / scale_energy
    double raw_e{0.0};
    double raw_h{0.0};
    double raw_energy{0.0};
    double scale_e{0.0};       ///< max Cauchy-Schwarz bound of the e terms
    double scale_h{0.0};       ///< max Cauchy-Schwarz bound of the h terms
    double scale_energy{0.0};  ///< max sum of the absolute energy terms
    std::vector<double> times;  ///< evaluation times
    std::vector<double> series_e;
    std::vector<double> series_h;
    std::vector<double> series_energy;
};

struct SteklovWindow {
    double t0_fraction{0.1};
    double t1_fraction{0.8};
};

/// Steklov-regularized identities evaluated at every snapshot time in
/// [0.1 T, 0.8 T]; D is the Steklov difference quotient and _l the Steklov
/// mean with parameter lambda. Requires 0 < lambda < T - 0.8 T.
[[nodiscard]] SemidiscreteResidual semidiscrete_residual(const SolutionTrace& tr, double lambda, const EdgeField& phi,
                                                         const FaceField& psi, SteklovWindow window = {});

/// The same identities without mollification, at the interval midpoints of
/// the window: divided differences against trapezoid averages.
[[nodiscard]] SemidiscreteResidual lambda_free_residual(const SolutionTrace& tr, const EdgeField& phi,
                                                        const FaceField& psi, SteklovWindow window = {});

struct UniquenessConfig {
    MaterialSet materials;
    StepperConfig stepper;
    long steps{100};
    double delta{1e-8};
    std::uint64_t seed{1};
    double eps_star{0.0};  ///< 0 selects the smallest eps eigenvalue
    double mu_star{0.0};   ///< 0 selects the smallest mu eigenvalue
    EdgeField e0;          ///< zero-data run initial data; empty means zero
    FaceField h0;
};

struct UniquenessReport {
    // zero-data run
    double zero_run_max{0.0};
    bool zero_run_exact{false};
    // perturbed run
    double initial_energy{0.0};
    double max_hat_energy{0.0};
    double identity_residual{0.0};  ///< max |H - D + S|, S by trapezoid
    double identity_bound{0.0};     ///< dt^2/4 T (max sigma / eps_star) 2 max E
    bool identity_ok{false};
    double monotone_violation{0.0};  ///< max increase of H - D per step over scale
    bool monotone_ok{false};
    double gronwall_rate{0.0};      ///< L = 2 max sigma / eps_star
    double gronwall_constant{0.0};  ///< C with envelope C delta^2 exp(L t)
    double envelope_margin{0.0};    ///< min over steps of (G - H) / G
    bool envelope_ok{false};
    bool deterministic{false};      ///< repeat run bitwise identical
    std::vector<double> times;
    std::vector<double> hat_energy;
    std::vector<double> envelope;

    [[nodiscard]] bool passed() const noexcept {
        return zero_run_exact && identity_ok && monotone_ok && envelope_ok && deterministic;
    }
};

/// Hat-field experiment with j = sigma e. Throws HypothesisError when the
/// given initial data is nonzero or j1 is not the zero preset, and
/// CoercivityError when eps or mu falls below its bound.
[[nodiscard]] UniquenessReport uniqueness_experiment(const Grid& g, const UniquenessConfig& cfg);

struct GaussReport {
    std::vector<double> times;
    std::vector<double> magnetic_defect;  ///< max cellwise |div(mu h)(t) - div(mu h)(0)|
    std::vector<double> charge_defect;    ///< max nodal |div(eps e)(t) - div(eps e)(0) - rho(t)|
    std::vector<double> max_charge;       ///< max nodal |rho(t)|
    double magnetic_scale{0.0};           ///< max |mu h| sum 1/d_i, floored
    double charge_scale{0.0};             ///< max |eps e| sum 1/d_i, floored
    double max_magnetic_relative{0.0};
    double max_charge_defect{0.0};
    double max_charge_relative{0.0};
};

/// rho(t) = -int_0^t div j (trapezoid over snapshots) at interior nodes.
[[nodiscard]] GaussReport gauss_check(const SolutionTrace& tr);

}  // namespace poynting
