#pragma once

// Rectilinear staggered (Yee) grid and the discrete curl pair.
//
// Cells are indexed (i, j, k) with x fastest. Electric unknowns live on cell
// edges, magnetic unknowns on cell faces:
//
//   Ex(i+1/2, j, k)   extents (nx,   ny+1, nz+1)     Hx(i, j+1/2, k+1/2)  (nx+1, ny,   nz  )
//   Ey(i, j+1/2, k)   extents (nx+1, ny,   nz+1)     Hy(i+1/2, j, k+1/2)  (nx,   ny+1, nz  )
//   Ez(i, j, k+1/2)   extents (nx+1, ny+1, nz  )     Hz(i+1/2, j+1/2, k)  (nx,   ny,   nz+1)
//
// Perfect electric conductor walls are represented by holding the tangential
// boundary edges at zero (they stay in the layout).

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace poynting {

using Index3 = std::array<int, 3>;
using Real3 = std::array<double, 3>;

class Grid {
public:
    /// Throws ConfigError unless every n_i >= 2 and every extent is positive and finite.
    Grid(Index3 n, Real3 extent);

    [[nodiscard]] const Index3& n() const noexcept { return n_; }
    [[nodiscard]] const Real3& extent() const noexcept { return extent_; }
    [[nodiscard]] const Real3& spacing() const noexcept { return spacing_; }

    [[nodiscard]] int nx() const noexcept { return n_[0]; }
    [[nodiscard]] int ny() const noexcept { return n_[1]; }
    [[nodiscard]] int nz() const noexcept { return n_[2]; }
    [[nodiscard]] double dx() const noexcept { return spacing_[0]; }
    [[nodiscard]] double dy() const noexcept { return spacing_[1]; }
    [[nodiscard]] double dz() const noexcept { return spacing_[2]; }

    [[nodiscard]] double cell_volume() const noexcept { return spacing_[0] * spacing_[1] * spacing_[2]; }
    [[nodiscard]] std::size_t cell_count() const noexcept {
        return static_cast<std::size_t>(n_[0]) * n_[1] * n_[2];
    }
    [[nodiscard]] std::size_t cell_index(int i, int j, int k) const noexcept {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(n_[0]) * (j + static_cast<std::size_t>(n_[1]) * k);
    }
    [[nodiscard]] std::size_t node_count() const noexcept {
        return static_cast<std::size_t>(n_[0] + 1) * (n_[1] + 1) * (n_[2] + 1);
    }
    [[nodiscard]] std::size_t node_index(int i, int j, int k) const noexcept {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(n_[0] + 1) * (j + static_cast<std::size_t>(n_[1] + 1) * k);
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    Index3 n_;
    Real3 extent_;
    Real3 spacing_;
};

/// Grid with spacing extent_i / n_i.
[[nodiscard]] Grid build_grid(Index3 n, Real3 extent);

enum class Staggering { edge, face };

/// Three component arrays stored back to back in one buffer, each sized to
/// the Yee layout of its staggering.
template <Staggering S>
class StaggeredField {
public:
    StaggeredField() = default;
    explicit StaggeredField(const Grid& g);

    [[nodiscard]] const Index3& n() const noexcept { return n_; }
    [[nodiscard]] const Index3& extents(int c) const noexcept { return extents_[c]; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] std::size_t component_size(int c) const noexcept { return offsets_[c + 1] - offsets_[c]; }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] std::span<double> values() noexcept { return data_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return data_; }
    [[nodiscard]] std::span<double> component(int c) noexcept {
        return std::span<double>(data_).subspan(offsets_[c], component_size(c));
    }
    [[nodiscard]] std::span<const double> component(int c) const noexcept {
        return std::span<const double>(data_).subspan(offsets_[c], component_size(c));
    }

    [[nodiscard]] std::size_t index(int c, int i, int j, int k) const noexcept {
        const Index3& e = extents_[c];
        return offsets_[c] + static_cast<std::size_t>(i) +
               static_cast<std::size_t>(e[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(e[1]) * k);
    }
    [[nodiscard]] double& at(int c, int i, int j, int k) noexcept { return data_[index(c, i, j, k)]; }
    [[nodiscard]] double at(int c, int i, int j, int k) const noexcept { return data_[index(c, i, j, k)]; }
    [[nodiscard]] double& operator[](std::size_t idx) noexcept { return data_[idx]; }
    [[nodiscard]] double operator[](std::size_t idx) const noexcept { return data_[idx]; }

    /// (i, j, k) of flat index idx within component c.
    [[nodiscard]] Index3 coordinates(int c, std::size_t idx) const noexcept;
    /// Component owning flat index idx.
    [[nodiscard]] int component_of(std::size_t idx) const noexcept;

    [[nodiscard]] bool same_layout(const StaggeredField& other) const noexcept { return n_ == other.n_; }

    void fill(double value);
    StaggeredField& operator+=(const StaggeredField& other);
    StaggeredField& operator-=(const StaggeredField& other);
    StaggeredField& operator*=(double alpha);
    /// this += alpha * x
    void axpy(double alpha, const StaggeredField& x);

    [[nodiscard]] bool all_finite() const noexcept;
    [[nodiscard]] double max_abs() const noexcept;

    friend bool operator==(const StaggeredField&, const StaggeredField&) = default;

private:
    Index3 n_{};
    std::array<Index3, 3> extents_{};
    std::array<std::size_t, 4> offsets_{};
    std::vector<double> data_;
};

using EdgeField = StaggeredField<Staggering::edge>;
using FaceField = StaggeredField<Staggering::face>;

extern template class StaggeredField<Staggering::edge>;
extern template class StaggeredField<Staggering::face>;

/// Physical position of a DOF (edge midpoint or face center).
[[nodiscard]] Real3 edge_position(const Grid& g, int c, int i, int j, int k) noexcept;
[[nodiscard]] Real3 face_position(const Grid& g, int c, int i, int j, int k) noexcept;

/// True if edge (c, i, j, k) lies on the boundary and is tangential to it.
[[nodiscard]] bool is_tangential_boundary_edge(const Grid& g, int c, int i, int j, int k) noexcept;

/// Zeroes every tangential boundary edge.
void apply_pec_mask(EdgeField& e);
/// True when every tangential boundary edge is exactly zero.
[[nodiscard]] bool is_pec_conforming(const EdgeField& e);

/// Circulation-per-area curl, edges -> faces. Throws ContractViolation when e
/// has a nonzero tangential boundary entry.
[[nodiscard]] FaceField curl_e(const EdgeField& e, const Grid& g);
/// Same stencil without the conformity check, written into `out`.
void apply_curl_e(const EdgeField& e, const Grid& g, FaceField& out);

/// Faces -> edges; the transpose of curl_e with tangential boundary rows zeroed.
[[nodiscard]] EdgeField curl_h(const FaceField& h, const Grid& g);
void apply_curl_h(const FaceField& h, const Grid& g, EdgeField& out);

/// Discrete L2 product sum(a_i b_i) * dx dy dz. Throws ContractViolation on
/// layout mismatch.
[[nodiscard]] double inner(const EdgeField& a, const EdgeField& b, const Grid& g);
[[nodiscard]] double inner(const FaceField& a, const FaceField& b, const Grid& g);
[[nodiscard]] double norm(const EdgeField& a, const Grid& g);
[[nodiscard]] double norm(const FaceField& a, const Grid& g);

/// inner(curl_e e, h) - inner(e, curl_h h). Evaluated on e as given, so an
/// unmasked e returns the discrete boundary term.
[[nodiscard]] double adjointness_defect(const EdgeField& e, const FaceField& h, const Grid& g);

struct V0Membership {
    double defect{0.0};
    double threshold{0.0};
    bool member{false};
};

/// Discrete V0 test: |defect| <= 1e-13 (|e| |curl_h h| + |h| |curl_e e| + tiny).
[[nodiscard]] V0Membership v0_membership(const EdgeField& e, const FaceField& h, const Grid& g);

/// Cellwise divergence of a face field; sized cell_count().
[[nodiscard]] std::vector<double> cell_divergence(const FaceField& f, const Grid& g);
/// Nodal divergence of an edge field at interior nodes; boundary nodes are 0.
/// Sized node_count().
[[nodiscard]] std::vector<double> nodal_divergence(const EdgeField& e, const Grid& g);

namespace detail {

/// Nodal scalar -> edge gradient. Used to check curl_e o grad = 0.
[[nodiscard]] EdgeField discrete_gradient(std::span<const double> nodal, const Grid& g);

}  // namespace detail

}  // namespace poynting
