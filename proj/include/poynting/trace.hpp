#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "poynting/energy.hpp"
#include "poynting/grid.hpp"
#include "poynting/materials.hpp"
#include "poynting/stepper.hpp"

namespace poynting {

/// Fields at one time level; h is synchronized with e and j = sigma e + j1(t).
struct Snapshot {
    double t{0.0};
    EdgeField e;
    FaceField h;
    EdgeField j;
};

/// Snapshots of a run at every `stride`-th step, starting with the initial data.
class SolutionTrace {
public:
    SolutionTrace(const Grid& g, MaterialSet m, double dt, Scheme scheme, int stride);

    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] const MaterialSet& materials() const noexcept { return materials_; }
    [[nodiscard]] double dt() const noexcept { return dt_; }
    [[nodiscard]] Scheme scheme() const noexcept { return scheme_; }
    [[nodiscard]] int stride() const noexcept { return stride_; }
    [[nodiscard]] double snapshot_dt() const noexcept { return dt_ * stride_; }

    [[nodiscard]] const std::vector<Snapshot>& snapshots() const noexcept { return snapshots_; }
    [[nodiscard]] std::size_t size() const noexcept { return snapshots_.size(); }
    [[nodiscard]] const Snapshot& operator[](std::size_t i) const { return snapshots_[i]; }
    /// Time of the last snapshot.
    [[nodiscard]] double t_end() const;

    /// Throws ContractViolation unless the snapshot continues the uniform
    /// time grid and matches the layout.
    void push(Snapshot s);

private:
    Grid grid_;
    MaterialSet materials_;
    double dt_;
    Scheme scheme_;
    int stride_;
    std::vector<Snapshot> snapshots_;
};

struct RunResult {
    EnergyLedger ledger;
    double j_norm{0.0};
    double e_norm{0.0};
    FieldState final_state;
    std::optional<SolutionTrace> trace;
    int max_cg_iterations{0};
};

/// Called with the initial state and after every step (s.t already advanced).
using StepObserver = std::function<void(const Stepper&, const FieldState&)>;

/// Runs `steps` steps from (e0, h0) at t = 0. stride > 0 keeps a trace of
/// every stride-th step (steps must then be a multiple of stride);
/// stride == 0 keeps none.
[[nodiscard]] RunResult simulate(const Grid& g, const MaterialSet& m, const StepperConfig& cfg, const EdgeField& e0,
                                 const FaceField& h0, long steps, int stride, const StepObserver& observe = {});

/// Binary trace file: magic, grid, scheme, dt, stride, per-cell materials,
/// source parameters, then t, e, h, j per snapshot; little-endian float64.
void write_trace(const std::filesystem::path& path, const SolutionTrace& tr);
/// Throws ParseError on a malformed or truncated file.
[[nodiscard]] SolutionTrace read_trace(const std::filesystem::path& path);

}  // namespace poynting
