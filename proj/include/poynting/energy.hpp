#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "poynting/grid.hpp"
#include "poynting/materials.hpp"
#include "poynting/stepper.hpp"

namespace poynting {

/// E = 1/2 (inner(eps e, e) + inner(mu h, h)) with coefficients already
/// sampled on the DOFs; h must be at the time of e.
[[nodiscard]] double energy(const EdgeField& e, const FaceField& h, const SampledMaterials& sm, const Grid& g);
/// Same, synchronizing a staggered h first (h_lag != 0).
[[nodiscard]] double energy(const FieldState& s, const MaterialSet& m, const Grid& g);

/// h moved from t - h_lag to t: h - h_lag mu^-1 curl_e e.
[[nodiscard]] FaceField synchronized_h(const FieldState& s, const FaceField& mu, const Grid& g);

/// inner(j, e).
[[nodiscard]] double joule_power(const FieldState& s, const EdgeField& j, const Grid& g);

/// Outward flux of e x h through the six box faces, ordered
/// (x-, x+, y-, y+, z-, z+). Tangential e is averaged to face-patch centers
/// on the wall; tangential h is taken from the first half-cell layer inside.
[[nodiscard]] std::array<double, 6> poynting_flux_faces(const EdgeField& e, const FaceField& h, const Grid& g);
[[nodiscard]] double poynting_flux(const EdgeField& e, const FaceField& h, const Grid& g);
[[nodiscard]] double poynting_flux(const FieldState& s, const Grid& g);

struct LedgerRow {
    double t{0.0};
    double energy{0.0};
    double flux{0.0};
    double joule_cum{0.0};   ///< int sigma e . e
    double source_cum{0.0};  ///< int j1 . e
    double residual{0.0};    ///< (E - E0 + joule_cum + source_cum) / max(E0, floor)
};

/// Time-ordered energy balance rows. t is strictly increasing.
class EnergyLedger {
public:
    static constexpr double energy_floor = 1e-30;

    /// Throws ContractViolation when row.t does not exceed the last time.
    void append(const LedgerRow& row);

    [[nodiscard]] const std::vector<LedgerRow>& rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t size() const noexcept { return rows_.size(); }
    [[nodiscard]] bool empty() const noexcept { return rows_.empty(); }
    [[nodiscard]] const LedgerRow& operator[](std::size_t i) const { return rows_[i]; }
    [[nodiscard]] const LedgerRow& front() const { return rows_.front(); }
    [[nodiscard]] const LedgerRow& back() const { return rows_.back(); }

private:
    std::vector<LedgerRow> rows_;
};

/// max_n |E_n - E_0 + joule_cum_n + source_cum_n| / max(E_0, 1e-30).
/// Throws ContractViolation on an empty ledger.
[[nodiscard]] double balance_residual(const EnergyLedger& ledger);

/// Same numerator over max(E_0, max E_n, max |joule_cum_n|, max |source_cum_n|, 1e-30);
/// stays meaningful for runs starting from zero data.
[[nodiscard]] double balance_residual_scaled(const EnergyLedger& ledger);

/// max_n (E_{n+1} - E_n) / max(E_0, 1e-30); negative for strictly decaying runs.
[[nodiscard]] double max_energy_increase(const EnergyLedger& ledger);

struct EnergyBound {
    bool holds{false};
    double max_energy{0.0};
    double bound{0.0};   ///< E0 + j_norm e_norm + 1e-10 E0
    double margin{0.0};  ///< bound - max_energy
};

/// max_n E_n <= E_0 + j_norm e_norm + 1e-10 E_0.
[[nodiscard]] EnergyBound energy_bound_check(const EnergyLedger& ledger, double j_norm, double e_norm);

/// Builds the ledger while a Stepper runs. Time integrals use the midpoint
/// rule for the midpoint scheme and the trapezoid rule for leapfrog;
/// j_norm and e_norm are the matching space-time L2 norms of the total
/// current and of e.
class EnergyRecorder {
public:
    EnergyRecorder(const Stepper& stepper, const FieldState& initial);

    /// Appends the row for `next`, reached from `prev` by one step.
    void record(const FieldState& prev, const FieldState& next);

    [[nodiscard]] const EnergyLedger& ledger() const noexcept { return ledger_; }
    [[nodiscard]] double j_norm() const;
    [[nodiscard]] double e_norm() const;

private:
    LedgerRow row_for(const FieldState& s) const;

    const Stepper* stepper_;
    EnergyLedger ledger_;
    double e0_{0.0};
    double joule_{0.0};
    double source_{0.0};
    double j_norm2_{0.0};
    double e_norm2_{0.0};
};

}  // namespace poynting
