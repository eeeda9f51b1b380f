#include "poynting/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "poynting/error.hpp"
#include "poynting/parallel.hpp"

namespace poynting {

std::string to_string(Scheme s) { return s == Scheme::leapfrog ? "leapfrog" : "midpoint"; }

Scheme parse_scheme(const std::string& name) {
    if (name == "leapfrog") return Scheme::leapfrog;
    if (name == "midpoint") return Scheme::midpoint;
    throw ConfigError("unknown stepper scheme '" + name + "'");
}

CgResult cg_solve(const LinearOperator& apply_a, const EdgeField& b, const Grid& g, double tol, int maxit,
                  const EdgeField* diag_inv, const EdgeField* x0) {
    if (!(tol > 0.0 && tol < 1.0)) {
        throw ConfigError("cg tolerance must lie in (0, 1)");
    }
    if (maxit < 1) {
        throw ConfigError("cg iteration cap must be positive");
    }
    CgResult out;
    const double b_norm = norm(b, g);
    if (b_norm == 0.0) {
        out.x = b;
        out.x.fill(0.0);
        return out;
    }
    const std::size_t n = b.size();
    auto precondition = [&](const EdgeField& r, EdgeField& z) {
        if (diag_inv == nullptr) {
            z = r;
            return;
        }
        for (std::size_t i = 0; i < n; ++i) {
            z[i] = r[i] * (*diag_inv)[i];
        }
    };

    EdgeField x = x0 != nullptr ? *x0 : b;
    if (x0 == nullptr) {
        x.fill(0.0);
    }
    EdgeField r = b;
    EdgeField ap = b;
    EdgeField z = b;
    EdgeField p = b;

    auto true_residual = [&] {
        apply_a(x, ap);
        r = b;
        r -= ap;
        return norm(r, g);
    };

    double r_norm = x0 != nullptr ? true_residual() : b_norm;
    int it = 0;
    while (it < maxit) {
        if (r_norm <= tol * b_norm) {
            break;
        }
        precondition(r, z);
        p = z;
        double rz = inner(r, z, g);
        // inner loop on the recursive residual; left on convergence or breakdown
        while (it < maxit) {
            apply_a(p, ap);
            const double pap = inner(p, ap, g);
            if (!(pap > 0.0)) {
                throw SolverError("cg: operator is not positive definite along the search direction", it,
                                  r_norm / b_norm);
            }
            const double alpha = rz / pap;
            x.axpy(alpha, p);
            r.axpy(-alpha, ap);
            ++it;
            r_norm = norm(r, g);
            if (r_norm <= tol * b_norm) {
                break;
            }
            precondition(r, z);
            const double rz_next = inner(r, z, g);
            const double beta = rz_next / rz;
            rz = rz_next;
            for (std::size_t i = 0; i < n; ++i) {
                p[i] = z[i] + beta * p[i];
            }
        }
        // recursive residual can drift from the true one; restart from it
        r_norm = true_residual();
    }
    out.iterations = it;
    out.residual = r_norm / b_norm;
    if (!(out.residual <= tol)) {
        throw SolverError("cg did not converge in " + std::to_string(it) + " iterations (relative residual " +
                              std::to_string(out.residual) + ")",
                          it, out.residual);
    }
    out.x = std::move(x);
    return out;
}

namespace {

void require_positive(const TensorField& t, const char* name) {
    for (const SymTensor& s : t) {
        if (!(s.xx > 0.0 && s.yy > 0.0 && s.zz > 0.0)) {
            throw ConfigError(std::string("stepper requires strictly positive ") + name);
        }
    }
}

double max_diag_inverse(const SymTensor& s) { return 1.0 / std::min({s.xx, s.yy, s.zz}); }

}  // namespace

double cfl_limit(const MaterialSet& m, const Grid& g) {
    require_positive(m.eps, "eps");
    require_positive(m.mu, "mu");
    double c2 = 0.0;
    for (std::size_t c = 0; c < m.eps.size(); ++c) {
        c2 = std::max(c2, max_diag_inverse(m.eps[c]) * max_diag_inverse(m.mu[c]));
    }
    const Real3& d = g.spacing();
    const double s = std::sqrt(1.0 / (d[0] * d[0]) + 1.0 / (d[1] * d[1]) + 1.0 / (d[2] * d[2]));
    return 0.95 / (std::sqrt(c2) * s);
}

Stepper::Stepper(const Grid& g, const MaterialSet& m, const StepperConfig& cfg) : grid_(g), cfg_(cfg) {
    if (!(cfg_.dt > 0.0) || !std::isfinite(cfg_.dt)) {
        throw ConfigError("time step must be positive and finite");
    }
    if (!(cfg_.cg_tol > 0.0 && cfg_.cg_tol < 1.0)) {
        throw ConfigError("cg_tol must lie in (0, 1)");
    }
    if (cfg_.cg_maxit < 1) {
        throw ConfigError("cg_maxit must be positive");
    }
    validate(m, ValidationMode::weak);
    sampled_ = sample_materials(m, g);
    require_positive(m.eps, "eps");
    require_positive(m.mu, "mu");
    if (cfg_.scheme == Scheme::leapfrog) {
        const double limit = cfl_limit(m, g);
        if (cfg_.dt > limit) {
            throw ConfigError("leapfrog time step " + std::to_string(cfg_.dt) + " exceeds the CFL limit " +
                              std::to_string(limit));
        }
    }
    source_ = CurrentSource(m.source, g);

    mu_inv_ = sampled_.mu;
    for (std::size_t i = 0; i < mu_inv_.size(); ++i) {
        mu_inv_[i] = 1.0 / mu_inv_[i];
    }

    // diag(K mu^-1 C): the four faces around an unmasked edge
    curl_curl_diag_ = EdgeField(g);
    const Real3& d = g.spacing();
    for (int c = 0; c < 3; ++c) {
        const int a1 = (c + 1) % 3;
        const int a2 = (c + 2) % 3;
        const Index3& ext = curl_curl_diag_.extents(c);
        for (int k = 0; k < ext[2]; ++k) {
            for (int j = 0; j < ext[1]; ++j) {
                for (int i = 0; i < ext[0]; ++i) {
                    if (is_tangential_boundary_edge(g, c, i, j, k)) {
                        continue;
                    }
                    const Index3 idx{i, j, k};
                    double sum = 0.0;
                    for (int shift = 0; shift <= 1; ++shift) {
                        Index3 f = idx;
                        f[a1] -= shift;
                        sum += mu_inv_.at(a2, f[0], f[1], f[2]) / (d[a1] * d[a1]);
                        f = idx;
                        f[a2] -= shift;
                        sum += mu_inv_.at(a1, f[0], f[1], f[2]) / (d[a2] * d[a2]);
                    }
                    curl_curl_diag_.at(c, i, j, k) = sum;
                }
            }
        }
    }
}

void Stepper::apply_mu_inv_curl(const EdgeField& e, FaceField& out) const {
    apply_curl_e(e, grid_, out);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= mu_inv_[i];
    }
}

void Stepper::apply_system(const EdgeField& x, EdgeField& out, double dt) const {
    FaceField w(grid_);
    apply_mu_inv_curl(x, w);
    apply_curl_h(w, grid_, out);
    const double c2 = 0.25 * dt * dt;
    const double c1 = 0.5 * dt;
    const EdgeField& eps = sampled_.eps;
    const EdgeField& sig = sampled_.sigma;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (eps[i] + c1 * sig[i]) * x[i] + c2 * out[i];
    }
    apply_pec_mask(out);
}

FieldState Stepper::initialize(const EdgeField& e0, const FaceField& h0, double t0) {
    if (e0.n() != grid_.n() || h0.n() != grid_.n()) {
        throw ContractViolation("initial data does not match grid");
    }
    if (!is_pec_conforming(e0)) {
        throw ContractViolation("initial electric field violates the PEC condition");
    }
    if (!e0.all_finite() || !h0.all_finite()) {
        throw ContractViolation("initial data is not finite");
    }
    FieldState s{e0, h0, t0, 0.0, 0};
    if (cfg_.scheme == Scheme::leapfrog) {
        FieldState back = s;
        midpoint_update(back, -0.5 * cfg_.dt);
        s.h = std::move(back.h);
        s.h_lag = 0.5 * cfg_.dt;
    }
    return s;
}

void Stepper::midpoint_update(FieldState& s, double dt) {
    const Grid& g = grid_;
    const EdgeField& eps = sampled_.eps;
    const EdgeField& sig = sampled_.sigma;

    // rhs = (eps - dt/2 sigma) e0 - dt^2/4 K mu^-1 C e0 + dt K h0 - dt j1(t + dt/2)
    FaceField w(g);
    apply_mu_inv_curl(s.e, w);
    EdgeField kw(g);
    apply_curl_h(w, g, kw);
    EdgeField kh(g);
    apply_curl_h(s.h, g, kh);
    EdgeField rhs(g);
    const double c1 = 0.5 * dt;
    const double c2 = 0.25 * dt * dt;
    for (std::size_t i = 0; i < rhs.size(); ++i) {
        rhs[i] = (eps[i] - c1 * sig[i]) * s.e[i] - c2 * kw[i] + dt * kh[i];
    }
    source_.accumulate(s.t + 0.5 * dt, -dt, rhs);
    apply_pec_mask(rhs);

    EdgeField diag_inv(g);
    for (std::size_t i = 0; i < diag_inv.size(); ++i) {
        const double a = eps[i] + c1 * sig[i] + c2 * curl_curl_diag_[i];
        diag_inv[i] = a > 0.0 ? 1.0 / a : 0.0;
    }
    apply_pec_mask(diag_inv);

    const auto op = [this, dt](const EdgeField& x, EdgeField& out) { apply_system(x, out, dt); };
    CgResult sol = cg_solve(op, rhs, g, cfg_.cg_tol, cfg_.cg_maxit, &diag_inv, &s.e);
    last_iterations_ = sol.iterations;
    last_residual_ = sol.residual;
    apply_pec_mask(sol.x);

    // h1 = h0 - dt/2 mu^-1 C (e0 + e1)
    EdgeField sum = s.e;
    sum += sol.x;
    apply_mu_inv_curl(sum, w);
    s.h.axpy(-c1, w);
    s.e = std::move(sol.x);
    s.t += dt;
}

void Stepper::leapfrog_update(FieldState& s) {
    const Grid& g = grid_;
    const double dt = cfg_.dt;
    FaceField w(g);
    apply_mu_inv_curl(s.e, w);
    s.h.axpy(-dt, w);

    EdgeField kh(g);
    apply_curl_h(s.h, g, kh);
    source_.accumulate(s.t + 0.5 * dt, -1.0, kh);
    const EdgeField& eps = sampled_.eps;
    const EdgeField& sig = sampled_.sigma;
    const double idt = 1.0 / dt;
    for (std::size_t i = 0; i < kh.size(); ++i) {
        s.e[i] = ((eps[i] * idt - 0.5 * sig[i]) * s.e[i] + kh[i]) / (eps[i] * idt + 0.5 * sig[i]);
    }
    apply_pec_mask(s.e);
    s.t += dt;
}

void Stepper::advance(FieldState& s) {
    if (s.e.n() != grid_.n() || s.h.n() != grid_.n()) {
        throw ContractViolation("state does not match grid");
    }
    if (cfg_.scheme == Scheme::leapfrog) {
        if (std::abs(s.h_lag - 0.5 * cfg_.dt) > 1e-12 * cfg_.dt) {
            throw ContractViolation("leapfrog state must carry h at t - dt/2");
        }
        leapfrog_update(s);
    } else {
        if (s.h_lag != 0.0) {
            throw ContractViolation("midpoint state must carry h at the time of e");
        }
        midpoint_update(s, cfg_.dt);
    }
    ++s.step;
    if (!s.e.all_finite() || !s.h.all_finite()) {
        throw BlowUpError("non-finite field value at step " + std::to_string(s.step), s.step);
    }
}

FieldState Stepper::step(const FieldState& s) {
    FieldState next = s;
    advance(next);
    return next;
}

FaceField Stepper::synchronized_h(const FieldState& s) const {
    if (s.h_lag == 0.0) {
        return s.h;
    }
    // h(t) ~ (h(t - dt/2) + h(t + dt/2)) / 2 = h(t - dt/2) - dt/2 mu^-1 C e(t)
    FaceField w(grid_);
    apply_mu_inv_curl(s.e, w);
    FaceField out = s.h;
    out.axpy(-s.h_lag, w);
    return out;
}

FieldState step_leapfrog(const FieldState& s, const MaterialSet& m, const Grid& g, double dt) {
    Stepper stepper(g, m, StepperConfig{Scheme::leapfrog, dt, 1e-12, 2000});
    return stepper.step(s);
}

FieldState step_midpoint(const FieldState& s, const MaterialSet& m, const Grid& g, const StepperConfig& cfg) {
    StepperConfig c = cfg;
    c.scheme = Scheme::midpoint;
    Stepper stepper(g, m, c);
    return stepper.step(s);
}

}  // namespace poynting
