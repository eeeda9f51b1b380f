#include "poynting/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "poynting/error.hpp"
#include "poynting/parallel.hpp"

namespace poynting {

namespace {

template <class Field>
double weighted_inner(const Field& w, const Field& a, const Field& b, const Grid& g) {
    if (!w.same_layout(a) || !a.same_layout(b) || a.n() != g.n()) {
        throw ContractViolation("weighted inner product layout mismatch");
    }
    const auto wv = w.values();
    const auto av = a.values();
    const auto bv = b.values();
    const double s = parallel::reduce_sum(av.size(), [&](std::size_t begin, std::size_t end) {
        double acc = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            acc += wv[i] * av[i] * bv[i];
        }
        return acc;
    });
    return s * g.cell_volume();
}

}  // namespace

double energy(const EdgeField& e, const FaceField& h, const SampledMaterials& sm, const Grid& g) {
    return 0.5 * (weighted_inner(sm.eps, e, e, g) + weighted_inner(sm.mu, h, h, g));
}

FaceField synchronized_h(const FieldState& s, const FaceField& mu, const Grid& g) {
    if (s.h_lag == 0.0) {
        return s.h;
    }
    FaceField w(g);
    apply_curl_e(s.e, g, w);
    FaceField out = s.h;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] -= s.h_lag * w[i] / mu[i];
    }
    return out;
}

double energy(const FieldState& s, const MaterialSet& m, const Grid& g) {
    const SampledMaterials sm = sample_materials(m, g);
    return energy(s.e, synchronized_h(s, sm.mu, g), sm, g);
}

double joule_power(const FieldState& s, const EdgeField& j, const Grid& g) { return inner(j, s.e, g); }

std::array<double, 6> poynting_flux_faces(const EdgeField& e, const FaceField& h, const Grid& g) {
    if (e.n() != g.n() || h.n() != g.n()) {
        throw ContractViolation("poynting_flux: layout mismatch");
    }
    std::array<double, 6> out{};
    const Index3& n = g.n();
    const Real3& d = g.spacing();
    for (int a = 0; a < 3; ++a) {
        const int b = (a + 1) % 3;
        const int c = (a + 2) % 3;
        const double area = d[b] * d[c];
        for (int side = 0; side < 2; ++side) {
            const int node_a = side == 0 ? 0 : n[a];
            const int cell_a = side == 0 ? 0 : n[a] - 1;
            const double normal = side == 0 ? -1.0 : 1.0;
            double sum = 0.0;
            for (int mc = 0; mc < n[c]; ++mc) {
                for (int mb = 0; mb < n[b]; ++mb) {
                    // e_b and h_c sit on the c-nodes mc, mc+1; e_c and h_b on the b-nodes mb, mb+1
                    auto at = [&](int comp, int ia, int ib, int ic) {
                        Index3 idx{};
                        idx[a] = ia;
                        idx[b] = ib;
                        idx[c] = ic;
                        return std::array<int, 4>{comp, idx[0], idx[1], idx[2]};
                    };
                    auto ev = [&](std::array<int, 4> p) { return e.at(p[0], p[1], p[2], p[3]); };
                    auto hv = [&](std::array<int, 4> p) { return h.at(p[0], p[1], p[2], p[3]); };
                    const double eb = 0.5 * (ev(at(b, node_a, mb, mc)) + ev(at(b, node_a, mb, mc + 1)));
                    const double ec = 0.5 * (ev(at(c, node_a, mb, mc)) + ev(at(c, node_a, mb + 1, mc)));
                    const double hc = 0.5 * (hv(at(c, cell_a, mb, mc)) + hv(at(c, cell_a, mb, mc + 1)));
                    const double hb = 0.5 * (hv(at(b, cell_a, mb, mc)) + hv(at(b, cell_a, mb + 1, mc)));
                    sum += eb * hc - ec * hb;
                }
            }
            out[2 * a + side] = normal * sum * area;
        }
    }
    return out;
}

double poynting_flux(const EdgeField& e, const FaceField& h, const Grid& g) {
    const auto faces = poynting_flux_faces(e, h, g);
    double total = 0.0;
    for (double f : faces) {
        total += f;
    }
    return total;
}

double poynting_flux(const FieldState& s, const Grid& g) { return poynting_flux(s.e, s.h, g); }

void EnergyLedger::append(const LedgerRow& row) {
    if (!rows_.empty() && !(row.t > rows_.back().t)) {
        throw ContractViolation("ledger times must be strictly increasing");
    }
    rows_.push_back(row);
}

double balance_residual(const EnergyLedger& ledger) {
    if (ledger.empty()) {
        throw ContractViolation("balance_residual: empty ledger");
    }
    const double e0 = ledger.front().energy;
    const double scale = std::max(e0, EnergyLedger::energy_floor);
    double worst = 0.0;
    for (const LedgerRow& r : ledger.rows()) {
        worst = std::max(worst, std::abs(r.energy - e0 + r.joule_cum + r.source_cum) / scale);
    }
    return worst;
}

double balance_residual_scaled(const EnergyLedger& ledger) {
    if (ledger.empty()) {
        throw ContractViolation("balance_residual_scaled: empty ledger");
    }
    const double e0 = ledger.front().energy;
    double scale = std::max(e0, EnergyLedger::energy_floor);
    double worst = 0.0;
    for (const LedgerRow& r : ledger.rows()) {
        scale = std::max({scale, r.energy, std::abs(r.joule_cum), std::abs(r.source_cum)});
        worst = std::max(worst, std::abs(r.energy - e0 + r.joule_cum + r.source_cum));
    }
    return worst / scale;
}

double max_energy_increase(const EnergyLedger& ledger) {
    if (ledger.size() < 2) {
        return 0.0;
    }
    const double scale = std::max(ledger.front().energy, EnergyLedger::energy_floor);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < ledger.size(); ++i) {
        worst = std::max(worst, (ledger[i].energy - ledger[i - 1].energy) / scale);
    }
    return worst;
}

EnergyBound energy_bound_check(const EnergyLedger& ledger, double j_norm, double e_norm) {
    if (ledger.empty()) {
        throw ContractViolation("energy_bound_check: empty ledger");
    }
    EnergyBound out;
    const double e0 = ledger.front().energy;
    for (const LedgerRow& r : ledger.rows()) {
        out.max_energy = std::max(out.max_energy, r.energy);
    }
    out.bound = e0 + j_norm * e_norm + 1e-10 * e0;
    out.margin = out.bound - out.max_energy;
    out.holds = out.max_energy <= out.bound;
    return out;
}

EnergyRecorder::EnergyRecorder(const Stepper& stepper, const FieldState& initial) : stepper_(&stepper) {
    LedgerRow row = row_for(initial);
    e0_ = row.energy;
    ledger_.append(row);
}

LedgerRow EnergyRecorder::row_for(const FieldState& s) const {
    const Grid& g = stepper_->grid();
    const FaceField h = stepper_->synchronized_h(s);
    LedgerRow row;
    row.t = s.t;
    row.energy = energy(s.e, h, stepper_->sampled(), g);
    row.flux = poynting_flux(s.e, h, g);
    return row;
}

void EnergyRecorder::record(const FieldState& prev, const FieldState& next) {
    const Grid& g = stepper_->grid();
    const SampledMaterials& sm = stepper_->sampled();
    const CurrentSource& j1 = stepper_->source();
    const double dt = next.t - prev.t;
    if (stepper_->config().scheme == Scheme::midpoint) {
        EdgeField e_mid = prev.e;
        e_mid += next.e;
        e_mid *= 0.5;
        const double t_mid = prev.t + 0.5 * dt;
        const EdgeField j = ohm_current(sm, j1, e_mid, t_mid);
        joule_ += dt * weighted_inner(sm.sigma, e_mid, e_mid, g);
        if (!j1.is_zero()) {
            source_ += dt * inner(j1.evaluate(t_mid), e_mid, g);
        }
        j_norm2_ += dt * inner(j, j, g);
        e_norm2_ += dt * inner(e_mid, e_mid, g);
    } else {
        const auto endpoint = [&](const FieldState& s, double& joule, double& source, double& jj, double& ee) {
            joule = weighted_inner(sm.sigma, s.e, s.e, g);
            source = j1.is_zero() ? 0.0 : inner(j1.evaluate(s.t), s.e, g);
            const EdgeField j = ohm_current(sm, j1, s.e, s.t);
            jj = inner(j, j, g);
            ee = inner(s.e, s.e, g);
        };
        double ja = 0.0, sa = 0.0, jja = 0.0, eea = 0.0;
        double jb = 0.0, sb = 0.0, jjb = 0.0, eeb = 0.0;
        endpoint(prev, ja, sa, jja, eea);
        endpoint(next, jb, sb, jjb, eeb);
        joule_ += 0.5 * dt * (ja + jb);
        source_ += 0.5 * dt * (sa + sb);
        j_norm2_ += 0.5 * dt * (jja + jjb);
        e_norm2_ += 0.5 * dt * (eea + eeb);
    }
    LedgerRow row = row_for(next);
    row.joule_cum = joule_;
    row.source_cum = source_;
    row.residual = (row.energy - e0_ + joule_ + source_) / std::max(e0_, EnergyLedger::energy_floor);
    ledger_.append(row);
}

double EnergyRecorder::j_norm() const { return std::sqrt(j_norm2_); }
double EnergyRecorder::e_norm() const { return std::sqrt(e_norm2_); }

}  // namespace poynting
