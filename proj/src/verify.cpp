#include "poynting/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "poynting/energy.hpp"
#include "poynting/error.hpp"
#include "poynting/steklov.hpp"

namespace poynting {

namespace {

constexpr double kFloor = 1e-30;

}  // namespace

TimeProfile TimeProfile::linear(double T) {
    return TimeProfile(
        "linear", [T](double t) { return 1.0 - t / T; }, [T](double) { return -1.0 / T; });
}

TimeProfile TimeProfile::cos2(double T) {
    const double w = std::numbers::pi / (2.0 * T);
    return TimeProfile(
        "cos2",
        [w](double t) {
            const double c = std::cos(w * t);
            return c * c;
        },
        [w](double t) { return -w * std::sin(2.0 * w * t); });
}

TimeProfile TimeProfile::bump(double T) {
    const double a = 0.1 * T;
    const double b = 0.9 * T;
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    return TimeProfile(
        "bump",
        [=](double t) {
            const double s = (t - mid) / half;
            return std::abs(s) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0;
        },
        [=](double t) {
            const double s = (t - mid) / half;
            if (std::abs(s) >= 1.0) {
                return 0.0;
            }
            const double q = 1.0 - s * s;
            return std::exp(1.0 - 1.0 / q) * (-2.0 * s / (q * q)) / half;
        });
}

namespace {

TimeProfile profile_for(std::size_t i, double T) {
    switch (i % 3) {
        case 0:
            return TimeProfile::linear(T);
        case 1:
            return TimeProfile::cos2(T);
        default:
            return TimeProfile::bump(T);
    }
}

}  // namespace

TestFunctionBank TestFunctionBank::smooth(const Grid& g, double T, std::size_t size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::uniform_int_distribution<int> sine_mode(1, 3);
    std::uniform_int_distribution<int> cos_mode(0, 2);
    constexpr int kModes = 2;
    const double pi = std::numbers::pi;
    const Real3& L = g.extent();

    TestFunctionBank bank;
    for (std::size_t p = 0; p < size; ++p) {
        EdgeField phi(g);
        FaceField psi(g);
        for (int c = 0; c < 3; ++c) {
            for (int m = 0; m < kModes; ++m) {
                // edge component c: cosine along c, sine across, so it vanishes on the walls it is tangent to
                const double a = coef(rng);
                Index3 q{};
                for (int ax = 0; ax < 3; ++ax) {
                    q[ax] = ax == c ? cos_mode(rng) : sine_mode(rng);
                }
                const Index3& ext = phi.extents(c);
                for (int k = 0; k < ext[2]; ++k) {
                    for (int j = 0; j < ext[1]; ++j) {
                        for (int i = 0; i < ext[0]; ++i) {
                            const Real3 x = edge_position(g, c, i, j, k);
                            double v = a;
                            for (int ax = 0; ax < 3; ++ax) {
                                const double arg = q[ax] * pi * x[ax] / L[ax];
                                v *= ax == c ? std::cos(arg) : std::sin(arg);
                            }
                            phi.at(c, i, j, k) += v;
                        }
                    }
                }
            }
            for (int m = 0; m < kModes; ++m) {
                const double a = coef(rng);
                const Index3 q{cos_mode(rng), cos_mode(rng), cos_mode(rng)};
                const Index3& ext = psi.extents(c);
                for (int k = 0; k < ext[2]; ++k) {
                    for (int j = 0; j < ext[1]; ++j) {
                        for (int i = 0; i < ext[0]; ++i) {
                            const Real3 x = face_position(g, c, i, j, k);
                            double v = a;
                            for (int ax = 0; ax < 3; ++ax) {
                                v *= std::cos(q[ax] * pi * x[ax] / L[ax]);
                            }
                            psi.at(c, i, j, k) += v;
                        }
                    }
                }
            }
        }
        apply_pec_mask(phi);
        bank.pairs.push_back(TestPair{std::move(phi), std::move(psi), profile_for(p, T)});
    }
    return bank;
}

TestFunctionBank TestFunctionBank::random(const Grid& g, double T, std::size_t size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TestFunctionBank bank;
    for (std::size_t p = 0; p < size; ++p) {
        EdgeField phi(g);
        FaceField psi(g);
        for (double& v : phi.values()) {
            v = u(rng);
        }
        for (double& v : psi.values()) {
            v = u(rng);
        }
        apply_pec_mask(phi);
        bank.pairs.push_back(TestPair{std::move(phi), std::move(psi), profile_for(p, T)});
    }
    return bank;
}

void validate_test_pair(const TestPair& pair, const Grid& g, double T) {
    const double end = pair.zeta(T);
    if (!(std::abs(end) <= 1e-14)) {
        throw PreconditionError("time profile '" + pair.zeta.name() + "' does not vanish at T (zeta(T) = " +
                                std::to_string(end) + ")");
    }
    if (pair.phi.n() != g.n() || pair.psi.n() != g.n()) {
        throw PreconditionError("test pair does not match the trace grid");
    }
    if (!is_pec_conforming(pair.phi)) {
        throw PreconditionError("test function phi has a nonzero tangential boundary entry");
    }
    const V0Membership v0 = v0_membership(pair.phi, pair.psi, g);
    if (!v0.member) {
        throw PreconditionError("test function phi fails the adjointness criterion (defect " +
                                std::to_string(v0.defect) + ", threshold " + std::to_string(v0.threshold) + ")");
    }
}

namespace {

double weighted_dot(const EdgeField& w, const EdgeField& a, const EdgeField& b, const Grid& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += w[i] * a[i] * b[i];
    }
    return s * g.cell_volume();
}

double weighted_dot(const FaceField& w, const FaceField& a, const FaceField& b, const Grid& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += w[i] * a[i] * b[i];
    }
    return s * g.cell_volume();
}

double weighted_norm(const EdgeField& w, const EdgeField& a, const Grid& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += (w[i] * a[i]) * (w[i] * a[i]);
    }
    return std::sqrt(s * g.cell_volume());
}

double weighted_norm(const FaceField& w, const FaceField& a, const Grid& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += (w[i] * a[i]) * (w[i] * a[i]);
    }
    return std::sqrt(s * g.cell_volume());
}

// scalar pairings of the trace with one spatial test pair
struct Pairings {
    std::vector<double> a_e;  // inner(eps e, phi)
    std::vector<double> b_h;  // inner(h, curl_e phi)
    std::vector<double> c_j;  // inner(j, phi)
    std::vector<double> a_h;  // inner(mu h, psi)
    std::vector<double> b_e;  // inner(e, curl_h psi)
};

Pairings pairings(const SolutionTrace& tr, const SampledMaterials& sm, const EdgeField& phi, const FaceField& psi) {
    const Grid& g = tr.grid();
    FaceField cphi(g);
    apply_curl_e(phi, g, cphi);
    EdgeField kpsi(g);
    apply_curl_h(psi, g, kpsi);
    Pairings p;
    for (const Snapshot& s : tr.snapshots()) {
        p.a_e.push_back(weighted_dot(sm.eps, s.e, phi, g));
        p.b_h.push_back(inner(s.h, cphi, g));
        p.c_j.push_back(inner(s.j, phi, g));
        p.a_h.push_back(weighted_dot(sm.mu, s.h, psi, g));
        p.b_e.push_back(inner(s.e, kpsi, g));
    }
    return p;
}

}  // namespace

WeakFormResidual weakform_residual(const SolutionTrace& tr, const TestPair& pair) {
    if (tr.size() < 2) {
        throw PreconditionError("weak-form audit needs at least two snapshots");
    }
    const Grid& g = tr.grid();
    const double T = tr.t_end();
    validate_test_pair(pair, g, T);
    const SampledMaterials sm = sample_materials(tr.materials(), g);
    const Pairings p = pairings(tr, sm, pair.phi, pair.psi);

    FaceField cphi(g);
    apply_curl_e(pair.phi, g, cphi);
    EdgeField kpsi(g);
    apply_curl_h(pair.psi, g, kpsi);
    const double n_phi = norm(pair.phi, g);
    const double n_psi = norm(pair.psi, g);
    const double n_cphi = norm(cphi, g);
    const double n_kpsi = norm(kpsi, g);

    const double dt = tr.snapshot_dt();
    WeakFormResidual r;
    double scale = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const Snapshot& s = tr[k];
        const double w = (k == 0 || k + 1 == tr.size()) ? 0.5 * dt : dt;
        const double z = pair.zeta(s.t);
        const double dz = pair.zeta.derivative(s.t);
        const double a = p.a_e[k] + p.a_h[k];
        const double b = -p.b_h[k] + p.b_e[k] + p.c_j[k];
        r.lhs += w * (-a * dz + b * z);
        const double bound_a = weighted_norm(sm.eps, s.e, g) * n_phi + weighted_norm(sm.mu, s.h, g) * n_psi;
        const double bound_b = norm(s.h, g) * n_cphi + norm(s.e, g) * n_kpsi + norm(s.j, g) * n_phi;
        scale += w * (bound_a * std::abs(dz) + bound_b * std::abs(z));
    }
    r.rhs = (p.a_e[0] + p.a_h[0]) * pair.zeta(tr[0].t);
    r.residual = r.lhs - r.rhs;
    r.scale = scale + std::abs(r.rhs) + kFloor;
    r.scaled = std::abs(r.residual) / r.scale;
    return r;
}

std::vector<WeakFormResidual> weakform_residual(const SolutionTrace& tr, const TestFunctionBank& bank) {
    std::vector<WeakFormResidual> out;
    out.reserve(bank.pairs.size());
    for (const TestPair& pair : bank.pairs) {
        out.push_back(weakform_residual(tr, pair));
    }
    return out;
}

namespace {

// (index, weight) pairs with f_lambda(t) = sum w_m f_m for the zero-extended interpolant
std::vector<std::pair<std::size_t, double>> mean_weights(double t, double lambda, double dt, std::size_t count) {
    std::vector<std::pair<std::size_t, double>> w;
    const double a = t;
    const double b = std::min(t + lambda, dt * static_cast<double>(count - 1));
    if (!(b > a)) {
        return w;
    }
    const auto first = static_cast<std::size_t>(std::max(0.0, std::floor(a / dt)));
    for (std::size_t k = first; k + 1 < count; ++k) {
        const double tk = dt * static_cast<double>(k);
        if (tk >= b) {
            break;
        }
        const double lo = std::max(a, tk);
        const double hi = std::min(b, tk + dt);
        if (!(hi > lo)) {
            continue;
        }
        const double u_mean = 0.5 * ((lo - tk) + (hi - tk)) / dt;
        const double len = (hi - lo) / lambda;
        w.emplace_back(k, len * (1.0 - u_mean));
        w.emplace_back(k + 1, len * u_mean);
    }
    return w;
}

std::vector<std::pair<std::size_t, double>> point_weights(double t, double dt, std::size_t count) {
    std::vector<std::pair<std::size_t, double>> w;
    const double s = t / dt;
    const double last = static_cast<double>(count - 1);
    if (s < -1e-9 || s > last + 1e-9) {
        return w;
    }
    if (s >= last) {
        w.emplace_back(count - 1, 1.0);
        return w;
    }
    const auto k = static_cast<std::size_t>(std::max(0.0, s));
    const double u = std::max(0.0, s - static_cast<double>(k));
    w.emplace_back(k, 1.0 - u);
    w.emplace_back(k + 1, u);
    return w;
}

template <class Field, class Get>
Field combine(const SolutionTrace& tr, const std::vector<std::pair<std::size_t, double>>& w, Get get) {
    Field out(tr.grid());
    for (const auto& [k, c] : w) {
        out.axpy(c, get(tr[k]));
    }
    return out;
}

struct Window {
    std::vector<std::size_t> samples;
};

Window window_samples(const SolutionTrace& tr, SteklovWindow win) {
    const double T = tr.t_end();
    Window w;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const double t = tr[k].t;
        if (t >= win.t0_fraction * T - 1e-12 * T && t <= win.t1_fraction * T + 1e-12 * T) {
            w.samples.push_back(k);
        }
    }
    return w;
}

void finalize(SemidiscreteResidual& r) {
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        r.raw_e = std::max(r.raw_e, std::abs(r.series_e[i]));
        r.raw_h = std::max(r.raw_h, std::abs(r.series_h[i]));
        r.raw_energy = std::max(r.raw_energy, std::abs(r.series_energy[i]));
    }
    r.scale_e = std::max(r.scale_e, kFloor);
    r.scale_h = std::max(r.scale_h, kFloor);
    r.scale_energy = std::max(r.scale_energy, kFloor);
    r.r_e = r.raw_e / r.scale_e;
    r.r_h = r.raw_h / r.scale_h;
    r.r_energy = r.raw_energy / r.scale_energy;
}

struct TestNorms {
    double phi{0.0};
    double psi{0.0};
    double curl_phi{0.0};
    double curl_psi{0.0};
};

TestNorms test_norms(const EdgeField& phi, const FaceField& psi, const Grid& g) {
    FaceField cphi(g);
    apply_curl_e(phi, g, cphi);
    EdgeField kpsi(g);
    apply_curl_h(psi, g, kpsi);
    return TestNorms{norm(phi, g), norm(psi, g), norm(cphi, g), norm(kpsi, g)};
}

// Cauchy-Schwarz bounds of the e and h identity terms at one evaluation time
void accumulate_scales(SemidiscreteResidual& r, const SampledMaterials& sm, const Grid& g, const TestNorms& tn,
                       const EdgeField& de, const FaceField& dh, const EdgeField& e_l, const FaceField& h_l,
                       const EdgeField& j_l) {
    r.scale_e = std::max(r.scale_e, weighted_norm(sm.eps, de, g) * tn.phi + norm(h_l, g) * tn.curl_phi +
                                        norm(j_l, g) * tn.phi);
    r.scale_h = std::max(r.scale_h, weighted_norm(sm.mu, dh, g) * tn.psi + norm(e_l, g) * tn.curl_psi);
}

}  // namespace

SemidiscreteResidual semidiscrete_residual(const SolutionTrace& tr, double lambda, const EdgeField& phi,
                                           const FaceField& psi, SteklovWindow window) {
    if (tr.size() < 2) {
        throw PreconditionError("Steklov audit needs at least two snapshots");
    }
    const Grid& g = tr.grid();
    const double T = tr.t_end();
    const double t1 = window.t1_fraction * T;
    if (!(lambda > 0.0) || !(lambda < T - t1)) {
        throw PreconditionError("lambda must satisfy 0 < lambda < T - t1 = " + std::to_string(T - t1));
    }
    if (!is_pec_conforming(phi)) {
        throw PreconditionError("test function phi has a nonzero tangential boundary entry");
    }
    const SampledMaterials sm = sample_materials(tr.materials(), g);
    const Pairings p = pairings(tr, sm, phi, psi);
    const TestNorms tn = test_norms(phi, psi, g);
    const double dt = tr.snapshot_dt();
    const double t_start = tr[0].t;
    const auto series = [&](const std::vector<double>& v) { return TimeSeries::scalar(t_start, dt, v); };
    const TimeSeries a_e = series(p.a_e), b_h = series(p.b_h), c_j = series(p.c_j);
    const TimeSeries a_h = series(p.a_h), b_e = series(p.b_e);
    const SteklovEvaluator ea(a_e, lambda), eb(b_h, lambda), ec(c_j, lambda), ha(a_h, lambda), hb(b_e, lambda);

    SemidiscreteResidual r;
    for (std::size_t k : window_samples(tr, window).samples) {
        const double t = tr[k].t;
        const double da = ea.derivative(t);
        const double mb = eb.mean(t);
        const double mc = ec.mean(t);
        const double dh = ha.derivative(t);
        const double me = hb.mean(t);
        r.times.push_back(t);
        r.series_e.push_back(da - mb + mc);
        r.series_h.push_back(dh + me);

        // field-level means for the energy identity
        const double rel = t - t_start;
        const auto mw = mean_weights(rel, lambda, dt, tr.size());
        auto dw = point_weights(rel + lambda, dt, tr.size());
        for (auto& [idx, c] : dw) {
            c /= lambda;
        }
        for (const auto& [idx, c] : point_weights(rel, dt, tr.size())) {
            dw.emplace_back(idx, -c / lambda);
        }
        const EdgeField e_l = combine<EdgeField>(tr, mw, [](const Snapshot& s) -> const EdgeField& { return s.e; });
        const FaceField h_l = combine<FaceField>(tr, mw, [](const Snapshot& s) -> const FaceField& { return s.h; });
        const EdgeField j_l = combine<EdgeField>(tr, mw, [](const Snapshot& s) -> const EdgeField& { return s.j; });
        const EdgeField de = combine<EdgeField>(tr, dw, [](const Snapshot& s) -> const EdgeField& { return s.e; });
        const FaceField dh_f = combine<FaceField>(tr, dw, [](const Snapshot& s) -> const FaceField& { return s.h; });
        const double t1e = weighted_dot(sm.eps, de, e_l, g);
        const double t2h = weighted_dot(sm.mu, dh_f, h_l, g);
        const double t3j = inner(j_l, e_l, g);
        accumulate_scales(r, sm, g, tn, de, dh_f, e_l, h_l, j_l);
        r.series_energy.push_back(t1e + t2h + t3j);
        r.scale_energy = std::max(r.scale_energy, std::abs(t1e) + std::abs(t2h) + std::abs(t3j));
    }
    finalize(r);
    return r;
}

SemidiscreteResidual lambda_free_residual(const SolutionTrace& tr, const EdgeField& phi, const FaceField& psi,
                                          SteklovWindow window) {
    if (tr.size() < 2) {
        throw PreconditionError("audit needs at least two snapshots");
    }
    const Grid& g = tr.grid();
    const SampledMaterials sm = sample_materials(tr.materials(), g);
    const Pairings p = pairings(tr, sm, phi, psi);
    const TestNorms tn = test_norms(phi, psi, g);
    const double dt = tr.snapshot_dt();
    const double T = tr.t_end();
    SemidiscreteResidual r;
    for (std::size_t k = 0; k + 1 < tr.size(); ++k) {
        const double t = 0.5 * (tr[k].t + tr[k + 1].t);
        if (t < window.t0_fraction * T || t > window.t1_fraction * T) {
            continue;
        }
        const double da = (p.a_e[k + 1] - p.a_e[k]) / dt;
        const double mb = 0.5 * (p.b_h[k] + p.b_h[k + 1]);
        const double mc = 0.5 * (p.c_j[k] + p.c_j[k + 1]);
        const double dh = (p.a_h[k + 1] - p.a_h[k]) / dt;
        const double me = 0.5 * (p.b_e[k] + p.b_e[k + 1]);
        r.times.push_back(t);
        r.series_e.push_back(da - mb + mc);
        r.series_h.push_back(dh + me);

        const std::vector<std::pair<std::size_t, double>> avg{{k, 0.5}, {k + 1, 0.5}};
        const std::vector<std::pair<std::size_t, double>> diff{{k, -1.0 / dt}, {k + 1, 1.0 / dt}};
        const EdgeField e_m = combine<EdgeField>(tr, avg, [](const Snapshot& s) -> const EdgeField& { return s.e; });
        const FaceField h_m = combine<FaceField>(tr, avg, [](const Snapshot& s) -> const FaceField& { return s.h; });
        const EdgeField j_m = combine<EdgeField>(tr, avg, [](const Snapshot& s) -> const EdgeField& { return s.j; });
        const EdgeField de = combine<EdgeField>(tr, diff, [](const Snapshot& s) -> const EdgeField& { return s.e; });
        const FaceField dh_f = combine<FaceField>(tr, diff, [](const Snapshot& s) -> const FaceField& { return s.h; });
        const double t1e = weighted_dot(sm.eps, de, e_m, g);
        const double t2h = weighted_dot(sm.mu, dh_f, h_m, g);
        const double t3j = inner(j_m, e_m, g);
        accumulate_scales(r, sm, g, tn, de, dh_f, e_m, h_m, j_m);
        r.series_energy.push_back(t1e + t2h + t3j);
        r.scale_energy = std::max(r.scale_energy, std::abs(t1e) + std::abs(t2h) + std::abs(t3j));
    }
    finalize(r);
    return r;
}

namespace {

struct HatRun {
    std::vector<double> times;
    std::vector<double> hat_energy;      // H
    std::vector<double> data_term;       // D
    std::vector<double> sigma_integral;  // S (trapezoid)
    std::vector<double> energy;          // E(t)
    EdgeField final_e;
    FaceField final_h;
    double max_abs{0.0};
};

HatRun run_hat(const Grid& g, const UniquenessConfig& cfg, const EdgeField& e0, const FaceField& h0) {
    Stepper stepper(g, cfg.materials, cfg.stepper);
    const SampledMaterials& sm = stepper.sampled();
    FieldState s = stepper.initialize(e0, h0);
    const double dt = cfg.stepper.dt;

    EdgeField e_hat(g);
    FaceField h_hat(g);
    EdgeField eps_e0 = apply_tensor(sm.eps, e0);
    FaceField mu_h0 = apply_tensor(sm.mu, h0);

    HatRun out;
    double data = 0.0;
    double sig = 0.0;
    double sig_prev = 0.0;
    FaceField h_prev = stepper.synchronized_h(s);
    out.times.push_back(0.0);
    out.hat_energy.push_back(0.0);
    out.data_term.push_back(0.0);
    out.sigma_integral.push_back(0.0);
    out.energy.push_back(energy(s.e, h_prev, sm, g));
    out.max_abs = std::max(s.e.max_abs(), h_prev.max_abs());
    for (long n = 0; n < cfg.steps; ++n) {
        const EdgeField e_prev = s.e;
        stepper.advance(s);
        s.t = static_cast<double>(n + 1) * dt;
        const FaceField h_now = stepper.synchronized_h(s);

        EdgeField e_hat_next = e_hat;
        e_hat_next.axpy(0.5 * dt, e_prev);
        e_hat_next.axpy(0.5 * dt, s.e);
        FaceField h_hat_next = h_hat;
        h_hat_next.axpy(0.5 * dt, h_prev);
        h_hat_next.axpy(0.5 * dt, h_now);

        EdgeField e_hat_mid = e_hat;
        e_hat_mid += e_hat_next;
        e_hat_mid *= 0.5;
        FaceField h_hat_mid = h_hat;
        h_hat_mid += h_hat_next;
        h_hat_mid *= 0.5;
        data += dt * (inner(eps_e0, e_hat_mid, g) + inner(mu_h0, h_hat_mid, g));

        const double sig_next = inner(apply_tensor(sm.sigma, e_hat_next), e_hat_next, g);
        sig += 0.5 * dt * (sig_prev + sig_next);
        sig_prev = sig_next;

        e_hat = std::move(e_hat_next);
        h_hat = std::move(h_hat_next);
        h_prev = h_now;

        out.times.push_back(s.t);
        out.hat_energy.push_back(energy(e_hat, h_hat, sm, g));
        out.data_term.push_back(data);
        out.sigma_integral.push_back(sig);
        out.energy.push_back(energy(s.e, h_now, sm, g));
        out.max_abs = std::max({out.max_abs, s.e.max_abs(), h_now.max_abs()});
    }
    out.final_e = s.e;
    out.final_h = s.h;
    return out;
}

bool is_zero(const EdgeField& e) { return e.empty() || e.max_abs() == 0.0; }
bool is_zero(const FaceField& h) { return h.empty() || h.max_abs() == 0.0; }

}  // namespace

UniquenessReport uniqueness_experiment(const Grid& g, const UniquenessConfig& cfg) {
    if (cfg.materials.source.kind != SourceKind::zero) {
        throw HypothesisError("uniqueness experiment requires j = sigma e (no impressed current)");
    }
    if (!is_zero(cfg.e0) || !is_zero(cfg.h0)) {
        throw HypothesisError("uniqueness experiment requires zero initial data e0 = h0 = 0");
    }
    if (!(cfg.delta > 0.0)) {
        throw ConfigError("perturbation size delta must be positive");
    }
    if (cfg.steps < 1) {
        throw ConfigError("uniqueness experiment needs at least one step");
    }
    const ValidationReport weak = validate(cfg.materials, ValidationMode::weak);
    const double eps_star = cfg.eps_star > 0.0 ? cfg.eps_star : weak.eps.min;
    const double mu_star = cfg.mu_star > 0.0 ? cfg.mu_star : weak.mu.min;
    if (!(eps_star > 0.0) || !(mu_star > 0.0)) {
        throw CoercivityError("eps and mu must be bounded below by a positive constant");
    }
    validate(cfg.materials, ValidationMode::uniqueness, eps_star, mu_star);

    UniquenessReport rep;
    const double dt = cfg.stepper.dt;
    const double T = static_cast<double>(cfg.steps) * dt;

    // zero data
    const HatRun zero = run_hat(g, cfg, EdgeField(g), FaceField(g));
    rep.zero_run_max = zero.max_abs;
    rep.zero_run_exact = zero.max_abs == 0.0;

    // perturbed data of size delta
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    EdgeField e0(g);
    FaceField h0(g);
    for (double& v : e0.values()) {
        v = cfg.delta * u(rng);
    }
    for (double& v : h0.values()) {
        v = cfg.delta * u(rng);
    }
    apply_pec_mask(e0);
    const HatRun run = run_hat(g, cfg, e0, h0);
    const HatRun again = run_hat(g, cfg, e0, h0);
    rep.deterministic = run.final_e == again.final_e && run.final_h == again.final_h &&
                        run.hat_energy == again.hat_energy && run.energy == again.energy;

    const double sigma_max = validate(cfg.materials, ValidationMode::weak).sigma.max;
    rep.initial_energy = run.energy.front();
    const double e_max = *std::max_element(run.energy.begin(), run.energy.end());

    double scale = 0.0;
    for (std::size_t n = 0; n < run.times.size(); ++n) {
        scale = std::max({scale, run.hat_energy[n], std::abs(run.data_term[n]), run.sigma_integral[n]});
    }
    scale = std::max(scale, std::numeric_limits<double>::min());

    // the midpoint rule for S would make H - D + S vanish; the trapezoid rule leaves this quadrature bound
    rep.identity_bound = 0.25 * dt * dt * T * (sigma_max / eps_star) * 2.0 * e_max + 1e-10 * scale;
    rep.gronwall_rate = 2.0 * sigma_max / eps_star;
    rep.gronwall_constant = 2.0 * rep.initial_energy * T * T / (cfg.delta * cfg.delta);
    rep.envelope_margin = 1.0;
    rep.monotone_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < run.times.size(); ++n) {
        const double H = run.hat_energy[n];
        rep.max_hat_energy = std::max(rep.max_hat_energy, H);
        rep.identity_residual = std::max(rep.identity_residual, std::abs(H - run.data_term[n] + run.sigma_integral[n]));
        const double G = rep.gronwall_constant * cfg.delta * cfg.delta * std::exp(rep.gronwall_rate * run.times[n]);
        rep.times.push_back(run.times[n]);
        rep.hat_energy.push_back(H);
        rep.envelope.push_back(G);
        rep.envelope_margin = std::min(rep.envelope_margin, G > 0.0 ? (G - H) / G : (H > 0.0 ? -1.0 : 1.0));
        if (n > 0) {
            const double step = (H - run.data_term[n]) - (run.hat_energy[n - 1] - run.data_term[n - 1]);
            rep.monotone_violation = std::max(rep.monotone_violation, step / scale);
        }
    }
    rep.identity_ok = rep.identity_residual <= rep.identity_bound;
    rep.monotone_ok = rep.monotone_violation <= 1e-12;
    rep.envelope_ok = rep.envelope_margin >= 0.0;
    return rep;
}

GaussReport gauss_check(const SolutionTrace& tr) {
    const Grid& g = tr.grid();
    const SampledMaterials sm = sample_materials(tr.materials(), g);
    const Real3& d = g.spacing();
    const double inv_sum = 1.0 / d[0] + 1.0 / d[1] + 1.0 / d[2];
    GaussReport rep;
    if (tr.size() == 0) {
        return rep;
    }
    const double dt = tr.snapshot_dt();

    const FaceField b0 = apply_tensor(sm.mu, tr[0].h);
    const EdgeField d0 = apply_tensor(sm.eps, tr[0].e);
    const std::vector<double> div_b0 = cell_divergence(b0, g);
    const std::vector<double> div_d0 = nodal_divergence(d0, g);
    std::vector<double> rho(g.node_count(), 0.0);
    std::vector<double> div_j_prev = nodal_divergence(tr[0].j, g);

    double b_max = 0.0;
    double d_max = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const Snapshot& s = tr[k];
        const FaceField b = apply_tensor(sm.mu, s.h);
        const EdgeField dfield = apply_tensor(sm.eps, s.e);
        b_max = std::max(b_max, b.max_abs());
        d_max = std::max(d_max, dfield.max_abs());
        const std::vector<double> div_b = cell_divergence(b, g);
        double mag = 0.0;
        for (std::size_t c = 0; c < div_b.size(); ++c) {
            mag = std::max(mag, std::abs(div_b[c] - div_b0[c]));
        }
        if (k > 0) {
            const std::vector<double> div_j = nodal_divergence(s.j, g);
            for (std::size_t n = 0; n < rho.size(); ++n) {
                rho[n] -= 0.5 * dt * (div_j_prev[n] + div_j[n]);
            }
            div_j_prev = div_j;
        }
        const std::vector<double> div_d = nodal_divergence(dfield, g);
        double charge = 0.0;
        double rho_max = 0.0;
        for (std::size_t n = 0; n < rho.size(); ++n) {
            charge = std::max(charge, std::abs(div_d[n] - div_d0[n] - rho[n]));
            rho_max = std::max(rho_max, std::abs(rho[n]));
        }
        rep.times.push_back(s.t);
        rep.magnetic_defect.push_back(mag);
        rep.charge_defect.push_back(charge);
        rep.max_charge.push_back(rho_max);
        rep.max_charge_defect = std::max(rep.max_charge_defect, charge);
    }
    rep.magnetic_scale = std::max(b_max * inv_sum, kFloor);
    rep.charge_scale = std::max(d_max * inv_sum, kFloor);
    for (double m : rep.magnetic_defect) {
        rep.max_magnetic_relative = std::max(rep.max_magnetic_relative, m / rep.magnetic_scale);
    }
    rep.max_charge_relative = rep.max_charge_defect / rep.charge_scale;
    return rep;
}

}  // namespace poynting
