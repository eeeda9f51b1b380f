#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "poynting/grid.hpp"

namespace poynting {

/// Symmetric 3x3 tensor, one per cell.
struct SymTensor {
    double xx{0.0}, yy{0.0}, zz{0.0};
    double xy{0.0}, yz{0.0}, xz{0.0};

    [[nodiscard]] static SymTensor isotropic(double v) noexcept { return {v, v, v, 0.0, 0.0, 0.0}; }
    [[nodiscard]] static SymTensor diagonal(double x, double y, double z) noexcept { return {x, y, z, 0.0, 0.0, 0.0}; }

    [[nodiscard]] bool is_diagonal() const noexcept { return xy == 0.0 && yz == 0.0 && xz == 0.0; }
    [[nodiscard]] double diag(int c) const noexcept { return c == 0 ? xx : (c == 1 ? yy : zz); }
    [[nodiscard]] bool all_finite() const noexcept;
    /// Smallest and largest eigenvalue.
    [[nodiscard]] std::pair<double, double> eigen_range() const;

    friend bool operator==(const SymTensor&, const SymTensor&) = default;
};

using TensorField = std::vector<SymTensor>;

enum class SourceKind { zero, constant, gaussian_pulse, modulated };

[[nodiscard]] std::string to_string(SourceKind kind);
/// Accepts "zero", "constant", "gaussian-pulse", "modulated".
[[nodiscard]] SourceKind parse_source_kind(const std::string& name);

/// Impressed current j1(x, t) = amplitude * direction * S(x) * g(t).
///
///   constant        S = 1,                 g = 1
///   gaussian-pulse  S = exp(-|x-c|^2/w^2), g = exp(-((t-t0)/tau)^2)
///   modulated       S = exp(-|x-c|^2/w^2), g = cos(omega t)
///
/// The spatial part is sampled at edge midpoints and PEC-masked.
struct SourceSpec {
    SourceKind kind{SourceKind::zero};
    double amplitude{1.0};
    Real3 direction{1.0, 0.0, 0.0};
    std::optional<Real3> center;  ///< defaults to the box center
    double width{0.15};
    double t0{0.0};
    double tau{1.0};
    double omega{1.0};

    friend bool operator==(const SourceSpec&, const SourceSpec&) = default;
};

/// Per-cell eps, mu, sigma and the impressed current parameters.
struct MaterialSet {
    Index3 n{};
    TensorField eps;
    TensorField mu;
    TensorField sigma;
    SourceSpec source;

    [[nodiscard]] static MaterialSet homogeneous(const Grid& g, SymTensor eps, SymTensor mu, SymTensor sigma);
};

enum class ValidationMode { weak, uniqueness };

struct TensorRange {
    double min{0.0};
    double max{0.0};
};

struct ValidationReport {
    TensorRange eps;
    TensorRange mu;
    TensorRange sigma;
    bool diagonal{true};
};

/// Checks finiteness and non-negativity of every tensor (eigenvalues >= 0).
/// In uniqueness mode eps >= eps_star and mu >= mu_star are also required.
/// Throws AdmissibilityError or CoercivityError naming the cell and tensor.
ValidationReport validate(const MaterialSet& m, ValidationMode mode, double eps_star = 0.0, double mu_star = 0.0);

/// Diagonal material coefficients sampled at the DOF locations.
///
/// Edge DOF of component c takes the mean of the c-th diagonal entry over
/// the (up to four) cells sharing the edge; face DOF of component c takes
/// the mean over the (one or two) cells sharing the face.
struct SampledMaterials {
    EdgeField eps;
    EdgeField sigma;
    FaceField mu;
};

/// Throws UnsupportedLayout when any tensor carries off-diagonal entries.
[[nodiscard]] SampledMaterials sample_materials(const MaterialSet& m, const Grid& g);
[[nodiscard]] EdgeField sample_on_edges(const TensorField& t, const Grid& g);
[[nodiscard]] FaceField sample_on_faces(const TensorField& t, const Grid& g);

/// d = eps e (or b = mu h) for a diagonal tensor field.
[[nodiscard]] EdgeField apply_tensor(const TensorField& t, const EdgeField& f, const Grid& g);
[[nodiscard]] FaceField apply_tensor(const TensorField& t, const FaceField& f, const Grid& g);
/// Componentwise product with already sampled coefficients.
[[nodiscard]] EdgeField apply_tensor(const EdgeField& weights, const EdgeField& f);
[[nodiscard]] FaceField apply_tensor(const FaceField& weights, const FaceField& f);

/// Evaluator for the impressed current on a fixed grid.
class CurrentSource {
public:
    CurrentSource() = default;
    CurrentSource(const SourceSpec& spec, const Grid& g);

    [[nodiscard]] const SourceSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] bool is_zero() const noexcept { return spec_.kind == SourceKind::zero; }
    /// amplitude * direction * S(x), masked.
    [[nodiscard]] const EdgeField& profile() const noexcept { return profile_; }
    [[nodiscard]] double temporal(double t) const noexcept;
    [[nodiscard]] EdgeField evaluate(double t) const;
    /// out += alpha * j1(t)
    void accumulate(double t, double alpha, EdgeField& out) const;

private:
    SourceSpec spec_;
    EdgeField profile_;
};

/// j = sigma e + j1(t).
[[nodiscard]] EdgeField ohm_current(const SampledMaterials& sm, const CurrentSource& j1, const EdgeField& e, double t);
[[nodiscard]] EdgeField ohm_current(const MaterialSet& m, const Grid& g, const EdgeField& e, double t);

/// Reads per-cell diagonal triples "epsx epsy epsz mux muy muz sigx sigy sigz",
/// x fastest. Files ending in ".csv" are text (comma or blank separated,
/// '#' comments, an optional non-numeric header line); anything else is raw
/// little-endian float64.
[[nodiscard]] MaterialSet load_material_file(const std::filesystem::path& path, const Grid& g);
void save_material_file(const std::filesystem::path& path, const MaterialSet& m);

}  // namespace poynting
