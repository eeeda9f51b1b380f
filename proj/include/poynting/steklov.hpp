#pragma once

// Steklov temporal mollification of uniformly sampled histories.
//
// A TimeSeries is the continuous piecewise-linear interpolant of its samples
// on [t0, T], T = t0 + (count - 1) dt, extended by zero outside [t0, T].
// All integrals below are exact for that interpolant up to roundoff.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace poynting {

class TimeSeries {
public:
    TimeSeries() = default;
    /// `samples` holds count * dim values, sample-major. Throws
    /// PreconditionError unless dt > 0, dim >= 1 and count >= 2.
    TimeSeries(double t0, double dt, std::size_t dim, std::vector<double> samples);
    [[nodiscard]] static TimeSeries scalar(double t0, double dt, std::vector<double> samples);

    [[nodiscard]] double t0() const noexcept { return t0_; }
    [[nodiscard]] double dt() const noexcept { return dt_; }
    [[nodiscard]] double t_end() const noexcept { return t0_ + static_cast<double>(count_ - 1) * dt_; }
    [[nodiscard]] std::size_t count() const noexcept { return count_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] double time(std::size_t k) const noexcept { return t0_ + static_cast<double>(k) * dt_; }

    [[nodiscard]] std::span<const double> sample(std::size_t k) const noexcept {
        return std::span<const double>(samples_).subspan(k * dim_, dim_);
    }
    [[nodiscard]] double value(std::size_t k, std::size_t c = 0) const noexcept { return samples_[k * dim_ + c]; }
    [[nodiscard]] const std::vector<double>& samples() const noexcept { return samples_; }

    /// Zero-extended interpolant of component c at time t.
    [[nodiscard]] double at(double t, std::size_t c = 0) const noexcept;

    /// Exact integral of component c over [a, b] (a <= b), summed segment
    /// by segment.
    [[nodiscard]] double integrate(double a, double b, std::size_t c = 0) const noexcept;

private:
    double t0_{0.0};
    double dt_{1.0};
    std::size_t dim_{1};
    std::size_t count_{0};
    std::vector<double> samples_;
};

/// Fast exact evaluator of t -> f_lambda(t) = (1/lambda) int_t^{t+lambda} f.
/// Running integrals are kept as compensated (hi, lo) pairs so the difference
/// of two prefixes does not lose digits for small lambda.
class SteklovEvaluator {
public:
    /// Throws PreconditionError unless lambda > 0. Keeps a reference to f.
    SteklovEvaluator(const TimeSeries& f, double lambda);
    SteklovEvaluator(TimeSeries&&, double) = delete;

    [[nodiscard]] double lambda() const noexcept { return lambda_; }
    [[nodiscard]] double mean(double t, std::size_t c = 0) const noexcept;
    /// (f(t + lambda) - f(t)) / lambda with the zero-extended interpolant.
    [[nodiscard]] double derivative(double t, std::size_t c = 0) const noexcept;
    /// int_{t0}^{t} f for component c.
    [[nodiscard]] double primitive(double t, std::size_t c = 0) const noexcept;

private:
    const TimeSeries* f_;
    double lambda_;
    std::vector<double> hi_;
    std::vector<double> lo_;
};

/// f_lambda sampled on the time grid of f.
[[nodiscard]] TimeSeries steklov_mean(const TimeSeries& f, double lambda);
/// (f(t + lambda) - f(t)) / lambda sampled on the time grid of f.
[[nodiscard]] TimeSeries steklov_derivative(const TimeSeries& f, double lambda);

enum class LpNorm { one, two, inf };

/// ||f||_p on [t0, T]. Components count as separate space points:
/// (sum_c int |f_c|^p)^(1/p), max_c sup |f_c| for p = inf.
[[nodiscard]] double lp_norm(const TimeSeries& f, LpNorm p);
/// ||f_lambda||_p on [t0, T].
[[nodiscard]] double steklov_lp_norm(const TimeSeries& f, double lambda, LpNorm p);
/// ||f_lambda - f||_p on [t0, T].
[[nodiscard]] double steklov_error_norm(const TimeSeries& f, double lambda, LpNorm p);

struct NonexpansiveResult {
    bool holds{false};
    double lhs{0.0};  ///< ||f_lambda||_p
    double rhs{0.0};  ///< ||f||_p
};

/// ||f_lambda||_p <= ||f||_p (1 + 1e-12).
[[nodiscard]] NonexpansiveResult check_nonexpansive(const TimeSeries& f, double lambda, LpNorm p);

struct AdjointIdentityResult {
    double lhs{0.0};       ///< (1/lambda) int f(t) int_{t-lambda}^t alpha
    double rhs{0.0};       ///< int f_lambda alpha
    double residual{0.0};  ///< |lhs - rhs|
    double scale{0.0};     ///< ||f||_2 ||alpha||_2
    bool holds{false};     ///< residual <= 1e-12 scale
};

/// Scalar f and alpha. alpha must vanish at its first and last sample and be
/// supported in [s0, s1] with t0 < s0 and s1 < T; requires 0 < lambda < T - s1.
/// Throws PreconditionError otherwise.
[[nodiscard]] AdjointIdentityResult check_adjoint_identity(const TimeSeries& f, const TimeSeries& alpha,
                                                           double lambda);

struct WeakDerivativeResult {
    double lhs{0.0};  ///< int f_lambda zeta'
    double rhs{0.0};  ///< -int D_lambda f zeta
    double residual{0.0};
    double scale{0.0};
};

/// Integration by parts against zeta(t) = (t - a)^2 (b - t)^2 on [a, b]
/// inside [t0, T]. Scalar f.
[[nodiscard]] WeakDerivativeResult check_weak_derivative(const TimeSeries& f, double lambda, double a, double b);

/// ||f_lambda - f||_p for each lambda. Requires a strictly decreasing
/// sequence with last element >= dt.
[[nodiscard]] std::vector<double> check_convergence(const TimeSeries& f, const std::vector<double>& lambdas,
                                                    LpNorm p);

/// lambda_m = lambda0 2^-m for every m with lambda_m >= floor.
[[nodiscard]] std::vector<double> halving_sequence(double lambda0, double floor);

/// Running trapezoid integral int_{t0}^{t_k} f; hat(t0) = 0.
[[nodiscard]] TimeSeries hat_field(const TimeSeries& f);

struct PropertyTally {
    std::string name;
    int trials{0};
    int failures{0};
    double worst{0.0};  ///< largest relative defect seen

    [[nodiscard]] bool passed() const noexcept { return trials > 0 && failures == 0; }
};

/// Randomized trials of non-expansiveness, the weak-derivative identity,
/// closed-form means of linear data, the adjoint identity and convergence
/// as lambda -> 0 (norm sequence non-increasing, final value <= 10% of the
/// first). Deterministic for a fixed seed.
[[nodiscard]] std::vector<PropertyTally> steklov_property_suite(int trials, std::uint64_t seed);

}  // namespace poynting
