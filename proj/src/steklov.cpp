#include "poynting/steklov.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "poynting/error.hpp"

namespace poynting {

namespace {

// four-point Gauss-Legendre on [-1, 1]; exact through degree 7
constexpr std::array<double, 4> kNodes{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                       0.8611363115940526};
constexpr std::array<double, 4> kWeights{0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                         0.3478548451374538};

using Fn = std::function<double(double)>;

double gauss(double a, double b, const Fn& q) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
        s += kWeights[i] * q(mid + half * kNodes[i]);
    }
    return s * half;
}

// sorted, deduplicated breakpoints clipped to [lo, hi], always containing lo and hi
std::vector<double> merge_breaks(std::vector<double> pts, double lo, double hi) {
    pts.push_back(lo);
    pts.push_back(hi);
    std::vector<double> out;
    out.reserve(pts.size());
    for (double p : pts) {
        if (p >= lo && p <= hi) {
            out.push_back(p);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<double> grid_points(const TimeSeries& f, double shift) {
    std::vector<double> pts(f.count());
    for (std::size_t k = 0; k < f.count(); ++k) {
        pts[k] = f.time(k) + shift;
    }
    return pts;
}

// q is a polynomial of degree <= 2 on each piece; fitted from interior values
struct Quadratic {
    double c0, c1, c2;  // q(a + u (b - a)) = c0 + c1 u + c2 u^2, u in [0, 1]

    static Quadratic fit(double a, double b, const Fn& q) {
        const double h = b - a;
        const double y1 = q(a + 0.25 * h);
        const double y2 = q(a + 0.5 * h);
        const double y3 = q(a + 0.75 * h);
        const double c2 = 8.0 * (y1 - 2.0 * y2 + y3);
        const double c1 = 2.0 * (y3 - y1) - c2;
        const double c0 = y2 - 0.5 * c1 - 0.25 * c2;
        return {c0, c1, c2};
    }
    [[nodiscard]] double operator()(double u) const noexcept { return c0 + u * (c1 + u * c2); }
    [[nodiscard]] double antiderivative(double u) const noexcept {
        return u * (c0 + u * (0.5 * c1 + u * c2 / 3.0));
    }
};

double abs_integral(double a, double b, const Fn& q) {
    const Quadratic p = Quadratic::fit(a, b, q);
    std::vector<double> cuts{0.0, 1.0};
    const double scale = std::abs(p.c0) + std::abs(p.c1) + std::abs(p.c2);
    if (std::abs(p.c2) > 1e-14 * scale) {
        const double disc = p.c1 * p.c1 - 4.0 * p.c2 * p.c0;
        if (disc > 0.0) {
            const double sq = std::sqrt(disc);
            const double qq = -0.5 * (p.c1 + std::copysign(sq, p.c1));
            cuts.push_back(qq / p.c2);
            if (qq != 0.0) {
                cuts.push_back(p.c0 / qq);
            }
        }
    } else if (p.c1 != 0.0) {
        cuts.push_back(-p.c0 / p.c1);
    }
    std::sort(cuts.begin(), cuts.end());
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double u0 = std::clamp(cuts[i], 0.0, 1.0);
        const double u1 = std::clamp(cuts[i + 1], 0.0, 1.0);
        if (u1 > u0) {
            s += std::abs(p.antiderivative(u1) - p.antiderivative(u0));
        }
    }
    return s * (b - a);
}

double abs_max(double a, double b, const Fn& q) {
    const Quadratic p = Quadratic::fit(a, b, q);
    double m = std::max(std::abs(p(0.0)), std::abs(p(1.0)));
    if (p.c2 != 0.0) {
        const double u = -p.c1 / (2.0 * p.c2);
        if (u > 0.0 && u < 1.0) {
            m = std::max(m, std::abs(p(u)));
        }
    }
    return m;
}

// ||q||_p over the pieces of `breaks`; q of degree <= 2 per piece
double piecewise_norm(const std::vector<double>& breaks, LpNorm p, const Fn& q) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double a = breaks[i];
        const double b = breaks[i + 1];
        if (!(b > a)) {
            continue;
        }
        switch (p) {
            case LpNorm::one:
                acc += abs_integral(a, b, q);
                break;
            case LpNorm::two:
                acc += gauss(a, b, [&](double t) {
                    const double v = q(t);
                    return v * v;
                });
                break;
            case LpNorm::inf:
                acc = std::max(acc, abs_max(a, b, q));
                break;
        }
    }
    return acc;
}

double finish_norm(double acc, LpNorm p) { return p == LpNorm::two ? std::sqrt(acc) : acc; }

double piecewise_integral(const std::vector<double>& breaks, const Fn& q) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (breaks[i + 1] > breaks[i]) {
            s += gauss(breaks[i], breaks[i + 1], q);
        }
    }
    return s;
}

void two_sum(double a, double b, double& s, double& err) {
    s = a + b;
    const double bb = s - a;
    err = (a - (s - bb)) + (b - bb);
}

}  // namespace

TimeSeries::TimeSeries(double t0, double dt, std::size_t dim, std::vector<double> samples)
    : t0_(t0), dt_(dt), dim_(dim), samples_(std::move(samples)) {
    if (!(dt > 0.0) || !std::isfinite(dt) || !std::isfinite(t0)) {
        throw PreconditionError("time series needs a positive finite dt");
    }
    if (dim == 0 || samples_.size() % dim != 0) {
        throw PreconditionError("time series sample buffer is not a multiple of its dimension");
    }
    count_ = samples_.size() / dim;
    if (count_ < 2) {
        throw PreconditionError("time series needs at least two samples");
    }
}

TimeSeries TimeSeries::scalar(double t0, double dt, std::vector<double> samples) {
    return TimeSeries(t0, dt, 1, std::move(samples));
}

double TimeSeries::at(double t, std::size_t c) const noexcept {
    const double s = (t - t0_) / dt_;
    const double last = static_cast<double>(count_ - 1);
    constexpr double snap = 1e-9;
    if (s < -snap || s > last + snap) {
        return 0.0;
    }
    if (s <= 0.0) {
        return value(0, c);
    }
    if (s >= last) {
        return value(count_ - 1, c);
    }
    const auto k = std::min(static_cast<std::size_t>(s), count_ - 2);
    const double u = s - static_cast<double>(k);
    return value(k, c) + u * (value(k + 1, c) - value(k, c));
}

double TimeSeries::integrate(double a, double b, std::size_t c) const noexcept {
    a = std::max(a, t0_);
    b = std::min(b, t_end());
    if (!(b > a)) {
        return 0.0;
    }
    const auto seg = [&](double x) {
        return std::min(static_cast<std::size_t>(std::max(0.0, (x - t0_) / dt_)), count_ - 2);
    };
    const std::size_t ka = seg(a);
    const std::size_t kb = seg(b);
    double s = 0.0;
    for (std::size_t k = ka; k <= kb; ++k) {
        const double lo = std::max(a, time(k));
        const double hi = std::min(b, time(k + 1));
        if (hi > lo) {
            s += 0.5 * (hi - lo) * (at(lo, c) + at(hi, c));
        }
    }
    return s;
}

SteklovEvaluator::SteklovEvaluator(const TimeSeries& f, double lambda) : f_(&f), lambda_(lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw PreconditionError("Steklov parameter lambda must be positive");
    }
    const std::size_t n = f.count();
    const std::size_t d = f.dim();
    hi_.assign(n * d, 0.0);
    lo_.assign(n * d, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        for (std::size_t c = 0; c < d; ++c) {
            const double inc = 0.5 * f.dt() * (f.value(k, c) + f.value(k + 1, c));
            double s = 0.0;
            double err = 0.0;
            two_sum(hi_[k * d + c], inc, s, err);
            hi_[(k + 1) * d + c] = s;
            lo_[(k + 1) * d + c] = lo_[k * d + c] + err;
        }
    }
}

namespace {

struct Prefix {
    double hi{0.0};
    double lo{0.0};
    double partial{0.0};
};

Prefix prefix_at(const TimeSeries& f, const std::vector<double>& hi, const std::vector<double>& lo, double t,
                 std::size_t c) {
    const std::size_t n = f.count();
    const std::size_t d = f.dim();
    const double s = (t - f.t0()) / f.dt();
    if (s <= 0.0) {
        return {};
    }
    if (s >= static_cast<double>(n - 1)) {
        return {hi[(n - 1) * d + c], lo[(n - 1) * d + c], 0.0};
    }
    const auto k = std::min(static_cast<std::size_t>(s), n - 2);
    const double u = s - static_cast<double>(k);
    const double a = f.value(k, c);
    const double b = f.value(k + 1, c);
    return {hi[k * d + c], lo[k * d + c], f.dt() * u * (a + 0.5 * u * (b - a))};
}

}  // namespace

double SteklovEvaluator::primitive(double t, std::size_t c) const noexcept {
    const Prefix p = prefix_at(*f_, hi_, lo_, t, c);
    return p.hi + (p.lo + p.partial);
}

double SteklovEvaluator::mean(double t, std::size_t c) const noexcept {
    const Prefix a = prefix_at(*f_, hi_, lo_, t, c);
    const Prefix b = prefix_at(*f_, hi_, lo_, t + lambda_, c);
    return ((b.hi - a.hi) + (b.lo - a.lo) + (b.partial - a.partial)) / lambda_;
}

double SteklovEvaluator::derivative(double t, std::size_t c) const noexcept {
    return (f_->at(t + lambda_, c) - f_->at(t, c)) / lambda_;
}

TimeSeries steklov_mean(const TimeSeries& f, double lambda) {
    const SteklovEvaluator ev(f, lambda);
    std::vector<double> out(f.samples().size());
    for (std::size_t k = 0; k < f.count(); ++k) {
        const double t = f.time(k);
        for (std::size_t c = 0; c < f.dim(); ++c) {
            out[k * f.dim() + c] = ev.mean(t, c);
        }
    }
    return TimeSeries(f.t0(), f.dt(), f.dim(), std::move(out));
}

TimeSeries steklov_derivative(const TimeSeries& f, double lambda) {
    const SteklovEvaluator ev(f, lambda);
    std::vector<double> out(f.samples().size());
    for (std::size_t k = 0; k < f.count(); ++k) {
        const double t = f.time(k);
        for (std::size_t c = 0; c < f.dim(); ++c) {
            out[k * f.dim() + c] = ev.derivative(t, c);
        }
    }
    return TimeSeries(f.t0(), f.dt(), f.dim(), std::move(out));
}

namespace {

double combine(double total, double piece, LpNorm p) { return p == LpNorm::inf ? std::max(total, piece) : total + piece; }

}  // namespace

double lp_norm(const TimeSeries& f, LpNorm p) {
    const std::vector<double> breaks = merge_breaks(grid_points(f, 0.0), f.t0(), f.t_end());
    double total = 0.0;
    for (std::size_t c = 0; c < f.dim(); ++c) {
        total = combine(total, piecewise_norm(breaks, p, [&](double t) { return f.at(t, c); }), p);
    }
    return finish_norm(total, p);
}

double steklov_lp_norm(const TimeSeries& f, double lambda, LpNorm p) {
    const SteklovEvaluator ev(f, lambda);
    std::vector<double> pts = grid_points(f, 0.0);
    const std::vector<double> shifted = grid_points(f, -lambda);
    pts.insert(pts.end(), shifted.begin(), shifted.end());
    const std::vector<double> breaks = merge_breaks(std::move(pts), f.t0(), f.t_end());
    double total = 0.0;
    for (std::size_t c = 0; c < f.dim(); ++c) {
        total = combine(total, piecewise_norm(breaks, p, [&](double t) { return ev.mean(t, c); }), p);
    }
    return finish_norm(total, p);
}

double steklov_error_norm(const TimeSeries& f, double lambda, LpNorm p) {
    const SteklovEvaluator ev(f, lambda);
    std::vector<double> pts = grid_points(f, 0.0);
    const std::vector<double> shifted = grid_points(f, -lambda);
    pts.insert(pts.end(), shifted.begin(), shifted.end());
    const std::vector<double> breaks = merge_breaks(std::move(pts), f.t0(), f.t_end());
    double total = 0.0;
    for (std::size_t c = 0; c < f.dim(); ++c) {
        total = combine(total, piecewise_norm(breaks, p, [&](double t) { return ev.mean(t, c) - f.at(t, c); }), p);
    }
    return finish_norm(total, p);
}

NonexpansiveResult check_nonexpansive(const TimeSeries& f, double lambda, LpNorm p) {
    NonexpansiveResult r;
    r.lhs = steklov_lp_norm(f, lambda, p);
    r.rhs = lp_norm(f, p);
    r.holds = r.lhs <= r.rhs + 1e-12 * r.rhs;
    return r;
}

AdjointIdentityResult check_adjoint_identity(const TimeSeries& f, const TimeSeries& alpha, double lambda) {
    if (f.dim() != 1 || alpha.dim() != 1) {
        throw PreconditionError("adjoint identity check takes scalar series");
    }
    if (!(lambda > 0.0)) {
        throw PreconditionError("Steklov parameter lambda must be positive");
    }
    if (alpha.value(0) != 0.0 || alpha.value(alpha.count() - 1) != 0.0) {
        throw PreconditionError("alpha must vanish at both ends of its sample range");
    }
    AdjointIdentityResult r;
    std::size_t first = alpha.count();
    std::size_t last = 0;
    for (std::size_t k = 0; k < alpha.count(); ++k) {
        if (alpha.value(k) != 0.0) {
            first = std::min(first, k);
            last = k;
        }
    }
    const double T = f.t_end();
    if (first == alpha.count()) {
        r.holds = true;
        return r;
    }
    const double s0 = alpha.time(first - 1);
    const double s1 = alpha.time(last + 1);
    if (s0 < f.t0() || s1 >= T) {
        throw PreconditionError("alpha must be supported strictly inside the time interval of f");
    }
    if (lambda >= T - s1) {
        throw PreconditionError("lambda must be smaller than T - t1 (support end of alpha)");
    }

    const SteklovEvaluator fl(f, lambda);
    const SteklovEvaluator al(alpha, lambda);
    std::vector<double> pts = grid_points(f, 0.0);
    for (double shift : {-lambda}) {
        const auto s = grid_points(f, shift);
        pts.insert(pts.end(), s.begin(), s.end());
    }
    for (double shift : {0.0, lambda}) {
        const auto s = grid_points(alpha, shift);
        pts.insert(pts.end(), s.begin(), s.end());
    }
    const std::vector<double> breaks = merge_breaks(std::move(pts), s0, s1 + lambda);
    // int_{t-lambda}^t alpha / lambda = alpha_lambda(t - lambda)
    r.lhs = piecewise_integral(breaks, [&](double t) { return f.at(t) * al.mean(t - lambda); });
    r.rhs = piecewise_integral(breaks, [&](double t) { return fl.mean(t) * alpha.at(t); });
    r.residual = std::abs(r.lhs - r.rhs);
    r.scale = lp_norm(f, LpNorm::two) * lp_norm(alpha, LpNorm::two);
    r.holds = r.residual <= 1e-12 * r.scale;
    return r;
}

WeakDerivativeResult check_weak_derivative(const TimeSeries& f, double lambda, double a, double b) {
    if (f.dim() != 1) {
        throw PreconditionError("weak derivative check takes a scalar series");
    }
    if (!(a < b) || a < f.t0() || b > f.t_end()) {
        throw PreconditionError("bump support must be a nonempty subinterval of [t0, T]");
    }
    const SteklovEvaluator ev(f, lambda);
    std::vector<double> pts = grid_points(f, 0.0);
    const auto shifted = grid_points(f, -lambda);
    pts.insert(pts.end(), shifted.begin(), shifted.end());
    const std::vector<double> breaks = merge_breaks(std::move(pts), a, b);
    const auto zeta = [&](double t) { return (t - a) * (t - a) * (b - t) * (b - t); };
    const auto dzeta = [&](double t) { return 2.0 * (t - a) * (b - t) * ((b - t) - (t - a)); };
    WeakDerivativeResult r;
    r.lhs = piecewise_integral(breaks, [&](double t) { return ev.mean(t) * dzeta(t); });
    r.rhs = -piecewise_integral(breaks, [&](double t) { return ev.derivative(t) * zeta(t); });
    r.residual = std::abs(r.lhs - r.rhs);
    const double dz2 = piecewise_integral({a, b}, [&](double t) { return dzeta(t) * dzeta(t); });
    r.scale = lp_norm(f, LpNorm::two) * std::sqrt(dz2);
    return r;
}

std::vector<double> check_convergence(const TimeSeries& f, const std::vector<double>& lambdas, LpNorm p) {
    if (lambdas.empty()) {
        throw PreconditionError("empty lambda sequence");
    }
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0.0) || (i > 0 && !(lambdas[i] < lambdas[i - 1]))) {
            throw PreconditionError("lambda sequence must be positive and strictly decreasing");
        }
    }
    if (lambdas.back() < f.dt() * (1.0 - 1e-12)) {
        throw PreconditionError("lambda sequence must stay at or above the sample spacing");
    }
    std::vector<double> out;
    out.reserve(lambdas.size());
    for (double l : lambdas) {
        out.push_back(steklov_error_norm(f, l, p));
    }
    return out;
}

std::vector<double> halving_sequence(double lambda0, double floor) {
    if (!(lambda0 > 0.0) || !(floor > 0.0)) {
        throw PreconditionError("halving sequence needs positive start and floor");
    }
    std::vector<double> out;
    for (double l = lambda0; l >= floor * (1.0 - 1e-12); l *= 0.5) {
        out.push_back(l);
    }
    return out;
}

TimeSeries hat_field(const TimeSeries& f) {
    const std::size_t d = f.dim();
    std::vector<double> out(f.samples().size(), 0.0);
    for (std::size_t k = 0; k + 1 < f.count(); ++k) {
        for (std::size_t c = 0; c < d; ++c) {
            out[(k + 1) * d + c] = out[k * d + c] + 0.5 * f.dt() * (f.value(k, c) + f.value(k + 1, c));
        }
    }
    return TimeSeries(f.t0(), f.dt(), d, std::move(out));
}

namespace {

// sum of a few random sine modes with random phases on [0, T]
std::vector<double> smooth_samples(std::mt19937_64& rng, std::size_t count, double dt) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const double T = dt * static_cast<double>(count - 1);
    std::array<double, 4> amp{};
    std::array<double, 4> ph{};
    for (std::size_t m = 0; m < amp.size(); ++m) {
        amp[m] = u(rng);
        ph[m] = phase(rng);
    }
    std::vector<double> v(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double t = dt * static_cast<double>(k);
        for (std::size_t m = 0; m < amp.size(); ++m) {
            v[k] += amp[m] * std::sin(static_cast<double>(m + 1) * std::numbers::pi * t / T + ph[m]);
        }
    }
    return v;
}

void tally(PropertyTally& t, double defect, bool ok) {
    ++t.trials;
    t.failures += ok ? 0 : 1;
    t.worst = std::max(t.worst, defect);
}

}  // namespace

std::vector<PropertyTally> steklov_property_suite(int trials, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> count_dist(20, 200);
    std::uniform_int_distribution<int> norm_dist(0, 2);
    constexpr std::array<LpNorm, 3> norms{LpNorm::one, LpNorm::two, LpNorm::inf};

    PropertyTally nonexp{"nonexpansive"};
    PropertyTally weak{"weak_derivative"};
    PropertyTally closed{"closed_form"};
    PropertyTally adjoint{"adjoint_identity"};
    PropertyTally conv{"convergence"};

    for (int trial = 0; trial < trials; ++trial) {
        const std::size_t count = count_dist(rng);
        const double dt = 0.5 + unit(rng);
        const double T = dt * static_cast<double>(count - 1);

        std::vector<double> raw(count);
        for (double& v : raw) {
            v = u(rng);
        }
        const TimeSeries f = TimeSeries::scalar(0.0, dt, raw);

        {
            const LpNorm p = norms[static_cast<std::size_t>(norm_dist(rng))];
            const double lambda = T * (0.001 + 0.5 * unit(rng));
            const NonexpansiveResult r = check_nonexpansive(f, lambda, p);
            tally(nonexp, r.rhs > 0.0 ? std::max(0.0, r.lhs / r.rhs - 1.0) : r.lhs, r.holds);
        }
        {
            const double a = T * 0.4 * unit(rng);
            const double b = a + (T - a) * (0.1 + 0.9 * unit(rng));
            const double lambda = T * (0.001 + 0.3 * unit(rng));
            const WeakDerivativeResult r = check_weak_derivative(f, lambda, a, b);
            const double rel = r.residual / std::max(r.scale, 1e-300);
            tally(weak, rel, rel <= 1e-12);
        }
        {
            // f(t) = a + b t has f_lambda(t) = a + b (t + lambda / 2) and D_lambda f = b away from T
            const double a = u(rng);
            const double b = u(rng);
            std::vector<double> lin(count);
            for (std::size_t k = 0; k < count; ++k) {
                lin[k] = a + b * dt * static_cast<double>(k);
            }
            const TimeSeries g = TimeSeries::scalar(0.0, dt, lin);
            const double lambda = T * (0.001 + 0.5 * unit(rng));
            const SteklovEvaluator ev(g, lambda);
            const double scale = std::abs(a) + std::abs(b) * T;
            double defect = 0.0;
            for (int s = 0; s < 8; ++s) {
                const double t = (T - lambda) * unit(rng);
                defect = std::max(defect, std::abs(ev.mean(t) - (a + b * (t + 0.5 * lambda))) / scale);
                defect = std::max(defect, std::abs(ev.derivative(t) - b) * T / scale);
            }
            tally(closed, defect, defect <= 1e-12);
        }
        {
            std::vector<double> alpha(count, 0.0);
            const std::size_t lo = 1 + count / 10;
            const std::size_t hi = count / 2;
            for (std::size_t k = lo; k < hi; ++k) {
                alpha[k] = u(rng);
            }
            const TimeSeries al = TimeSeries::scalar(0.0, dt, alpha);
            const double s1 = dt * static_cast<double>(hi);
            const double lambda = (T - s1) * (0.01 + 0.98 * unit(rng));
            const AdjointIdentityResult r = check_adjoint_identity(f, al, lambda);
            tally(adjoint, r.residual / std::max(r.scale, 1e-300), r.holds);
        }
        {
            const std::size_t fine = 2001;
            const double fdt = 1.0 / static_cast<double>(fine - 1);
            const TimeSeries g = TimeSeries::scalar(0.0, fdt, smooth_samples(rng, fine, fdt));
            const LpNorm p = unit(rng) < 0.5 ? LpNorm::one : LpNorm::two;
            const std::vector<double> err = check_convergence(g, halving_sequence(0.25, fdt), p);
            bool ok = err.back() <= 0.1 * err.front();
            for (std::size_t m = 1; m < err.size(); ++m) {
                ok = ok && err[m] <= err[m - 1] * (1.0 + 1e-12);
            }
            tally(conv, err.back() / err.front(), ok);
        }
    }
    return {nonexp, weak, closed, adjoint, conv};
}

}  // namespace poynting
