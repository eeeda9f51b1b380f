#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "poynting/error.hpp"
#include "poynting/steklov.hpp"

using namespace poynting;

namespace {

std::vector<double> random_samples(std::size_t count, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(count);
    for (double& x : v) {
        x = u(rng);
    }
    return v;
}

// Independent zero-extended linear interpolant.
double interp(const std::vector<double>& s, double t0, double dt, double t) {
    const double T = t0 + static_cast<double>(s.size() - 1) * dt;
    if (t < t0 || t > T) {
        return 0.0;
    }
    const double x = (t - t0) / dt;
    const std::size_t k = std::min(static_cast<std::size_t>(x), s.size() - 2);
    const double w = x - static_cast<double>(k);
    return (1.0 - w) * s[k] + w * s[k + 1];
}

// int_a^b of the interpolant: split at every sample time, two-point Gauss on
// each piece (exact for linear pieces).
double brute_integral(const std::vector<double>& s, double t0, double dt, double a, double b) {
    const double T = t0 + static_cast<double>(s.size() - 1) * dt;
    std::vector<double> cuts{a, b};
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double tk = t0 + static_cast<double>(k) * dt;
        if (tk > a && tk < b) {
            cuts.push_back(tk);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    const double g = 0.5 / std::sqrt(3.0);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = std::max(cuts[i], t0);
        const double hi = std::min(cuts[i + 1], T);
        if (hi <= lo) {
            continue;
        }
        const double mid = 0.5 * (lo + hi);
        const double h = hi - lo;
        sum += 0.5 * h * (interp(s, t0, dt, mid - g * h) + interp(s, t0, dt, mid + g * h));
    }
    return sum;
}

}  // namespace

TEST_CASE("time series preconditions") {
    CHECK_THROWS_AS((void)TimeSeries::scalar(0.0, 0.0, {1.0, 2.0}), PreconditionError);
    CHECK_THROWS_AS((void)TimeSeries::scalar(0.0, 0.1, {1.0}), PreconditionError);
    CHECK_THROWS_AS(TimeSeries(0.0, 0.1, 0, {1.0, 2.0}), PreconditionError);
    const TimeSeries f = TimeSeries::scalar(0.0, 0.1, {1.0, 2.0, 3.0});
    CHECK_THROWS_AS(SteklovEvaluator(f, 0.0), PreconditionError);
    CHECK_THROWS_AS(SteklovEvaluator(f, -0.1), PreconditionError);
}

TEST_CASE("mean agrees with a brute-force integral of the interpolant") {
    std::mt19937_64 rng(11);
    const double t0 = 0.3;
    const double dt = 0.01;
    const std::vector<double> s = random_samples(120, rng);
    const TimeSeries f = TimeSeries::scalar(t0, dt, s);
    const double lambda = 3.7 * dt;
    const SteklovEvaluator ev(f, lambda);
    double worst = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double t = f.time(k);
        const double expected = brute_integral(s, t0, dt, t, t + lambda) / lambda;
        worst = std::max(worst, std::abs(ev.mean(t) - expected));
    }
    CHECK(worst <= 1e-12);

    // off-grid evaluation points
    std::uniform_real_distribution<double> u(t0, f.t_end());
    for (int trial = 0; trial < 50; ++trial) {
        const double t = u(rng);
        CHECK(std::abs(ev.mean(t) - brute_integral(s, t0, dt, t, t + lambda) / lambda) <= 1e-12);
    }
}

TEST_CASE("closed forms for linear data") {
    const double a = 0.7;
    const double b = -1.3;
    const double dt = 0.02;
    std::vector<double> s(51);
    for (std::size_t k = 0; k < s.size(); ++k) {
        s[k] = a + b * dt * static_cast<double>(k);
    }
    const TimeSeries f = TimeSeries::scalar(0.0, dt, s);
    const double lambda = 0.13;
    const SteklovEvaluator ev(f, lambda);
    for (double t : {0.0, 0.1, 0.333, 0.8}) {
        REQUIRE(t + lambda <= f.t_end());
        CHECK(ev.mean(t) == doctest::Approx(a + b * (t + 0.5 * lambda)).epsilon(1e-13));
        CHECK(ev.derivative(t) == doctest::Approx(b).epsilon(1e-12));
        CHECK(ev.primitive(t) == doctest::Approx(a * t + 0.5 * b * t * t).epsilon(1e-13));
    }
}

TEST_CASE("zero extension past the end") {
    const TimeSeries f = TimeSeries::scalar(0.0, 0.1, std::vector<double>(11, 2.0));
    const SteklovEvaluator ev(f, 0.4);
    // half the window lies beyond T = 1
    CHECK(ev.mean(0.8) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ev.mean(1.0) == doctest::Approx(0.0));
    CHECK(ev.derivative(0.8) == doctest::Approx(-2.0 / 0.4).epsilon(1e-14));
    CHECK(f.at(1.05) == 0.0);
    CHECK(f.at(-0.05) == 0.0);
}

TEST_CASE("mean of a sine against the analytic mean") {
    const double dt = 1e-3;
    std::vector<double> s(2001);
    for (std::size_t k = 0; k < s.size(); ++k) {
        s[k] = std::sin(3.0 * dt * static_cast<double>(k));
    }
    const TimeSeries f = TimeSeries::scalar(0.0, dt, s);
    const double lambda = 0.05;
    const SteklovEvaluator ev(f, lambda);
    for (double t : {0.1, 0.77, 1.5}) {
        const double exact = (std::cos(3.0 * t) - std::cos(3.0 * (t + lambda))) / (3.0 * lambda);
        // interpolation error of a C2 function: dt^2 |f''| / 8
        CHECK(std::abs(ev.mean(t) - exact) <= dt * dt * 9.0 / 8.0);
    }
}

TEST_CASE("derivative is the time derivative of the mean") {
    std::mt19937_64 rng(12);
    const double dt = 0.01;
    const TimeSeries f = TimeSeries::scalar(0.0, dt, random_samples(200, rng));
    const double lambda = 5.5 * dt;
    const SteklovEvaluator ev(f, lambda);
    std::uniform_real_distribution<double> u(0.1, 1.3);
    const double h = 1e-5 * dt;
    for (int trial = 0; trial < 40; ++trial) {
        const double t = u(rng);
        // the mean is quadratic between breakpoints, so the centered difference is exact up to roundoff
        const double fd = (ev.mean(t + h) - ev.mean(t - h)) / (2.0 * h);
        CHECK(std::abs(fd - ev.derivative(t)) <= 1e-5 * (1.0 + std::abs(ev.derivative(t))));
    }
}

TEST_CASE("sampled mean and derivative series") {
    std::mt19937_64 rng(13);
    const TimeSeries f(0.0, 0.05, 3, random_samples(3 * 30, rng));
    const double lambda = 0.12;
    const TimeSeries m = steklov_mean(f, lambda);
    const TimeSeries d = steklov_derivative(f, lambda);
    const SteklovEvaluator ev(f, lambda);
    REQUIRE(m.count() == f.count());
    REQUIRE(m.dim() == 3);
    for (std::size_t k = 0; k < f.count(); ++k) {
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(m.value(k, c) == ev.mean(f.time(k), c));
            CHECK(d.value(k, c) == ev.derivative(f.time(k), c));
        }
    }
}

TEST_CASE("mean is linear in the data") {
    std::mt19937_64 rng(14);
    const std::vector<double> a = random_samples(80, rng);
    const std::vector<double> b = random_samples(80, rng);
    std::vector<double> mix(80);
    for (std::size_t k = 0; k < mix.size(); ++k) {
        mix[k] = 2.5 * a[k] - 0.75 * b[k];
    }
    const double lambda = 0.07;
    const TimeSeries fa = TimeSeries::scalar(0.0, 0.01, a);
    const TimeSeries fb = TimeSeries::scalar(0.0, 0.01, b);
    const SteklovEvaluator ea(fa, lambda);
    const SteklovEvaluator eb(fb, lambda);
    const TimeSeries fm = TimeSeries::scalar(0.0, 0.01, mix);
    const SteklovEvaluator em(fm, lambda);
    for (std::size_t k = 0; k < mix.size(); ++k) {
        const double t = fm.time(k);
        CHECK(std::abs(em.mean(t) - (2.5 * ea.mean(t) - 0.75 * eb.mean(t))) <= 1e-13);
    }
}

TEST_CASE("Lp norms of simple interpolants") {
    const TimeSeries c = TimeSeries::scalar(0.0, 0.25, {3.0, 3.0, 3.0, 3.0, 3.0});
    CHECK(lp_norm(c, LpNorm::one) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(lp_norm(c, LpNorm::two) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(lp_norm(c, LpNorm::inf) == 3.0);
    const TimeSeries ramp = TimeSeries::scalar(0.0, 0.5, {0.0, 0.5, 1.0});
    CHECK(lp_norm(ramp, LpNorm::one) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(lp_norm(ramp, LpNorm::two) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
}

TEST_CASE("non-expansiveness") {
    std::mt19937_64 rng(15);
    for (LpNorm p : {LpNorm::one, LpNorm::two, LpNorm::inf}) {
        for (int trial = 0; trial < 20; ++trial) {
            const TimeSeries f = TimeSeries::scalar(0.0, 0.01, random_samples(100, rng));
            const NonexpansiveResult r = check_nonexpansive(f, 0.01 * (1 + trial), p);
            CHECK(r.holds);
            CHECK(r.lhs <= r.rhs * (1.0 + 1e-12));
        }
    }
    SUBCASE("isolated spike") {
        std::vector<double> s(50, 0.0);
        s[25] = 1.0;
        const TimeSeries f = TimeSeries::scalar(0.0, 0.02, s);
        for (LpNorm p : {LpNorm::one, LpNorm::two, LpNorm::inf}) {
            const NonexpansiveResult r = check_nonexpansive(f, 0.1, p);
            CHECK(r.holds);
            CHECK(r.lhs < r.rhs);
        }
        // the L1 mass of the spike sits fully inside the window-averaged support
        CHECK(steklov_lp_norm(f, 0.1, LpNorm::one) == doctest::Approx(lp_norm(f, LpNorm::one)).epsilon(1e-12));
    }
}

TEST_CASE("adjoint identity") {
    std::mt19937_64 rng(16);
    const double dt = 0.01;
    for (int trial = 0; trial < 20; ++trial) {
        const TimeSeries f = TimeSeries::scalar(0.0, dt, random_samples(150, rng));
        std::vector<double> a(150, 0.0);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (std::size_t k = 20; k < 90; ++k) {
            a[k] = u(rng);
        }
        const TimeSeries alpha = TimeSeries::scalar(0.0, dt, a);
        const AdjointIdentityResult r = check_adjoint_identity(f, alpha, 0.1 + 0.01 * trial);
        CHECK(r.holds);
        CHECK(r.residual <= 1e-12 * r.scale);
    }
    const TimeSeries f = TimeSeries::scalar(0.0, dt, std::vector<double>(100, 1.0));
    std::vector<double> late(100, 0.0);
    late[90] = 1.0;
    // support ends at 0.91; lambda 0.1 reaches past T = 0.99
    CHECK_THROWS_AS((void)check_adjoint_identity(f, TimeSeries::scalar(0.0, dt, late), 0.1), PreconditionError);
    std::vector<double> edge(100, 0.0);
    edge[0] = 1.0;
    CHECK_THROWS_AS((void)check_adjoint_identity(f, TimeSeries::scalar(0.0, dt, edge), 0.05), PreconditionError);
}

TEST_CASE("weak derivative identity") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const TimeSeries f = TimeSeries::scalar(0.0, 0.01, random_samples(200, rng));
        const WeakDerivativeResult r = check_weak_derivative(f, 0.05, 0.2, 1.5);
        CHECK(r.residual <= 1e-12 * r.scale);
    }
}

TEST_CASE("convergence as lambda shrinks for a smooth history") {
    const double dt = 5e-4;
    std::vector<double> s(2001);
    for (std::size_t k = 0; k < s.size(); ++k) {
        s[k] = std::sin(4.0 * dt * static_cast<double>(k)) + 0.3;
    }
    const TimeSeries f = TimeSeries::scalar(0.0, dt, s);
    const std::vector<double> lambdas = halving_sequence(0.25, dt);
    REQUIRE(lambdas.size() >= 5);
    for (LpNorm p : {LpNorm::one, LpNorm::two}) {
        const std::vector<double> err = check_convergence(f, lambdas, p);
        for (std::size_t i = 1; i < err.size(); ++i) {
            CHECK(err[i] <= err[i - 1]);
        }
        CHECK(err.back() <= 0.1 * err.front());
    }
    CHECK_THROWS_AS((void)check_convergence(f, {0.1, 0.2}, LpNorm::two), PreconditionError);
    CHECK_THROWS_AS((void)check_convergence(f, {0.1, 0.5 * dt}, LpNorm::two), PreconditionError);
}

TEST_CASE("halving sequence") {
    const std::vector<double> l = halving_sequence(1.0, 0.1);
    REQUIRE(l.size() == 4);
    CHECK(l[0] == 1.0);
    CHECK(l[3] == 0.125);
}

TEST_CASE("hat field is the running trapezoid integral") {
    const TimeSeries f(1.0, 0.5, 2, {2.0, 0.0, 2.0, 1.0, 2.0, 2.0});
    const TimeSeries hat = hat_field(f);
    REQUIRE(hat.count() == 3);
    CHECK(hat.t0() == 1.0);
    CHECK(hat.value(0, 0) == 0.0);
    CHECK(hat.value(1, 0) == 1.0);
    CHECK(hat.value(2, 0) == 2.0);
    CHECK(hat.value(1, 1) == 0.25);
    CHECK(hat.value(2, 1) == 1.0);
}

TEST_CASE("property suite passes and is reproducible") {
    const std::vector<PropertyTally> a = steklov_property_suite(40, 7);
    const std::vector<PropertyTally> b = steklov_property_suite(40, 7);
    REQUIRE(a.size() == 5);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK_MESSAGE(a[i].passed(), a[i].name);
        CHECK(a[i].trials == 40);
        CHECK(a[i].worst == b[i].worst);
    }
}
