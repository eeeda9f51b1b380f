#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "poynting/error.hpp"
#include "poynting/grid.hpp"
#include "poynting/parallel.hpp"

namespace poynting {

Grid::Grid(Index3 n, Real3 extent) : n_(n), extent_(extent), spacing_{} {
    for (int a = 0; a < 3; ++a) {
        if (n[a] < 2) {
            throw ConfigError("grid dimension " + std::to_string(a) + " must be >= 2, got " + std::to_string(n[a]));
        }
        if (!(extent[a] > 0.0) || !std::isfinite(extent[a])) {
            throw ConfigError("grid extent " + std::to_string(a) + " must be positive and finite");
        }
        spacing_[a] = extent[a] / n[a];
    }
}

Grid build_grid(Index3 n, Real3 extent) { return Grid(n, extent); }

template <Staggering S>
StaggeredField<S>::StaggeredField(const Grid& g) : n_(g.n()) {
    offsets_[0] = 0;
    for (int c = 0; c < 3; ++c) {
        for (int a = 0; a < 3; ++a) {
            const bool along = (a == c);
            // edges are short along their own axis, faces are long along their normal
            extents_[c][a] = n_[a] + ((S == Staggering::edge) ? (along ? 0 : 1) : (along ? 1 : 0));
        }
        offsets_[c + 1] = offsets_[c] + static_cast<std::size_t>(extents_[c][0]) * extents_[c][1] * extents_[c][2];
    }
    data_.assign(offsets_[3], 0.0);
}

template <Staggering S>
Index3 StaggeredField<S>::coordinates(int c, std::size_t idx) const noexcept {
    std::size_t local = idx - offsets_[c];
    const Index3& e = extents_[c];
    const int i = static_cast<int>(local % e[0]);
    local /= e[0];
    const int j = static_cast<int>(local % e[1]);
    const int k = static_cast<int>(local / e[1]);
    return {i, j, k};
}

template <Staggering S>
int StaggeredField<S>::component_of(std::size_t idx) const noexcept {
    if (idx < offsets_[1]) {
        return 0;
    }
    return idx < offsets_[2] ? 1 : 2;
}

template <Staggering S>
void StaggeredField<S>::fill(double value) {
    std::fill(data_.begin(), data_.end(), value);
}

template <Staggering S>
StaggeredField<S>& StaggeredField<S>::operator+=(const StaggeredField& other) {
    if (!same_layout(other)) {
        throw ContractViolation("field layout mismatch in +=");
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] += other.data_[i];
    }
    return *this;
}

template <Staggering S>
StaggeredField<S>& StaggeredField<S>::operator-=(const StaggeredField& other) {
    if (!same_layout(other)) {
        throw ContractViolation("field layout mismatch in -=");
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] -= other.data_[i];
    }
    return *this;
}

template <Staggering S>
StaggeredField<S>& StaggeredField<S>::operator*=(double alpha) {
    for (double& v : data_) {
        v *= alpha;
    }
    return *this;
}

template <Staggering S>
void StaggeredField<S>::axpy(double alpha, const StaggeredField& x) {
    if (!same_layout(x)) {
        throw ContractViolation("field layout mismatch in axpy");
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] += alpha * x.data_[i];
    }
}

template <Staggering S>
bool StaggeredField<S>::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

template <Staggering S>
double StaggeredField<S>::max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

template class StaggeredField<Staggering::edge>;
template class StaggeredField<Staggering::face>;

Real3 edge_position(const Grid& g, int c, int i, int j, int k) noexcept {
    Real3 p{i * g.dx(), j * g.dy(), k * g.dz()};
    p[c] += 0.5 * g.spacing()[c];
    return p;
}

Real3 face_position(const Grid& g, int c, int i, int j, int k) noexcept {
    Real3 p{(i + 0.5) * g.dx(), (j + 0.5) * g.dy(), (k + 0.5) * g.dz()};
    p[c] -= 0.5 * g.spacing()[c];
    return p;
}

bool is_tangential_boundary_edge(const Grid& g, int c, int i, int j, int k) noexcept {
    const Index3 idx{i, j, k};
    for (int a = 0; a < 3; ++a) {
        if (a != c && (idx[a] == 0 || idx[a] == g.n()[a])) {
            return true;
        }
    }
    return false;
}

namespace {

// Visits every tangential boundary edge of component c.
template <class Fn>
void for_each_masked_edge(const Index3& n, const Index3& ext, int c, Fn&& fn) {
    for (int k = 0; k < ext[2]; ++k) {
        const bool kb = (c != 2) && (k == 0 || k == n[2]);
        for (int j = 0; j < ext[1]; ++j) {
            const bool jb = (c != 1) && (j == 0 || j == n[1]);
            if (kb || jb) {
                for (int i = 0; i < ext[0]; ++i) {
                    fn(i, j, k);
                }
            } else if (c != 0) {
                fn(0, j, k);
                fn(n[0], j, k);
            }
        }
    }
}

template <class Field>
double inner_impl(const Field& a, const Field& b, const Grid& g) {
    if (!a.same_layout(b) || a.n() != g.n()) {
        throw ContractViolation("inner product layout mismatch");
    }
    const auto av = a.values();
    const auto bv = b.values();
    const double sum = parallel::reduce_sum(av.size(), [&](std::size_t begin, std::size_t end) {
        double s = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            s += av[i] * bv[i];
        }
        return s;
    });
    return sum * g.cell_volume();
}

}  // namespace

void apply_pec_mask(EdgeField& e) {
    for (int c = 0; c < 3; ++c) {
        for_each_masked_edge(e.n(), e.extents(c), c, [&](int i, int j, int k) { e.at(c, i, j, k) = 0.0; });
    }
}

bool is_pec_conforming(const EdgeField& e) {
    bool ok = true;
    for (int c = 0; c < 3 && ok; ++c) {
        for_each_masked_edge(e.n(), e.extents(c), c, [&](int i, int j, int k) {
            if (e.at(c, i, j, k) != 0.0) {
                ok = false;
            }
        });
    }
    return ok;
}

void apply_curl_e(const EdgeField& e, const Grid& g, FaceField& out) {
    if (e.n() != g.n()) {
        throw ContractViolation("curl_e: edge field does not match grid");
    }
    if (out.n() != g.n()) {
        out = FaceField(g);
    }
    const int nx = g.nx();
    const int ny = g.ny();
    const int nz = g.nz();
    const double idx = 1.0 / g.dx();
    const double idy = 1.0 / g.dy();
    const double idz = 1.0 / g.dz();
    parallel::for_range(static_cast<std::size_t>(nz + 1), [&](std::size_t kb, std::size_t ke) {
        for (int k = static_cast<int>(kb); k < static_cast<int>(ke); ++k) {
            if (k < nz) {
                for (int j = 0; j < ny; ++j) {
                    for (int i = 0; i <= nx; ++i) {
                        out.at(0, i, j, k) = (e.at(2, i, j + 1, k) - e.at(2, i, j, k)) * idy -
                                             (e.at(1, i, j, k + 1) - e.at(1, i, j, k)) * idz;
                    }
                }
                for (int j = 0; j <= ny; ++j) {
                    for (int i = 0; i < nx; ++i) {
                        out.at(1, i, j, k) = (e.at(0, i, j, k + 1) - e.at(0, i, j, k)) * idz -
                                             (e.at(2, i + 1, j, k) - e.at(2, i, j, k)) * idx;
                    }
                }
            }
            for (int j = 0; j < ny; ++j) {
                for (int i = 0; i < nx; ++i) {
                    out.at(2, i, j, k) = (e.at(1, i + 1, j, k) - e.at(1, i, j, k)) * idx -
                                         (e.at(0, i, j + 1, k) - e.at(0, i, j, k)) * idy;
                }
            }
        }
    });
}

FaceField curl_e(const EdgeField& e, const Grid& g) {
    if (!is_pec_conforming(e)) {
        throw ContractViolation("curl_e: electric field has a nonzero tangential boundary entry");
    }
    FaceField out(g);
    apply_curl_e(e, g, out);
    return out;
}

void apply_curl_h(const FaceField& h, const Grid& g, EdgeField& out) {
    if (h.n() != g.n()) {
        throw ContractViolation("curl_h: face field does not match grid");
    }
    if (out.n() != g.n()) {
        out = EdgeField(g);
    }
    const int nx = g.nx();
    const int ny = g.ny();
    const int nz = g.nz();
    const double idx = 1.0 / g.dx();
    const double idy = 1.0 / g.dy();
    const double idz = 1.0 / g.dz();
    parallel::for_range(static_cast<std::size_t>(nz + 1), [&](std::size_t kb, std::size_t ke) {
        for (int k = static_cast<int>(kb); k < static_cast<int>(ke); ++k) {
            const bool k_wall = (k == 0 || k == nz);
            // Ex
            for (int j = 0; j <= ny; ++j) {
                const bool wall = k_wall || j == 0 || j == ny;
                for (int i = 0; i < nx; ++i) {
                    out.at(0, i, j, k) = wall ? 0.0
                                              : (h.at(2, i, j, k) - h.at(2, i, j - 1, k)) * idy -
                                                    (h.at(1, i, j, k) - h.at(1, i, j, k - 1)) * idz;
                }
            }
            // Ey
            for (int j = 0; j < ny; ++j) {
                for (int i = 0; i <= nx; ++i) {
                    const bool wall = k_wall || i == 0 || i == nx;
                    out.at(1, i, j, k) = wall ? 0.0
                                              : (h.at(0, i, j, k) - h.at(0, i, j, k - 1)) * idz -
                                                    (h.at(2, i, j, k) - h.at(2, i - 1, j, k)) * idx;
                }
            }
            // Ez
            if (k < nz) {
                for (int j = 0; j <= ny; ++j) {
                    for (int i = 0; i <= nx; ++i) {
                        const bool wall = i == 0 || i == nx || j == 0 || j == ny;
                        out.at(2, i, j, k) = wall ? 0.0
                                                  : (h.at(1, i, j, k) - h.at(1, i - 1, j, k)) * idx -
                                                        (h.at(0, i, j, k) - h.at(0, i, j - 1, k)) * idy;
                    }
                }
            }
        }
    });
}

EdgeField curl_h(const FaceField& h, const Grid& g) {
    EdgeField out(g);
    apply_curl_h(h, g, out);
    return out;
}

double inner(const EdgeField& a, const EdgeField& b, const Grid& g) { return inner_impl(a, b, g); }
double inner(const FaceField& a, const FaceField& b, const Grid& g) { return inner_impl(a, b, g); }
double norm(const EdgeField& a, const Grid& g) { return std::sqrt(inner_impl(a, a, g)); }
double norm(const FaceField& a, const Grid& g) { return std::sqrt(inner_impl(a, a, g)); }

double adjointness_defect(const EdgeField& e, const FaceField& h, const Grid& g) {
    FaceField ce(g);
    apply_curl_e(e, g, ce);
    EdgeField ch(g);
    apply_curl_h(h, g, ch);
    return inner(ce, h, g) - inner(e, ch, g);
}

V0Membership v0_membership(const EdgeField& e, const FaceField& h, const Grid& g) {
    FaceField ce(g);
    apply_curl_e(e, g, ce);
    EdgeField ch(g);
    apply_curl_h(h, g, ch);
    V0Membership out;
    out.defect = inner(ce, h, g) - inner(e, ch, g);
    constexpr double tiny = std::numeric_limits<double>::min();
    out.threshold = 1e-13 * (norm(e, g) * norm(ch, g) + norm(h, g) * norm(ce, g) + tiny);
    out.member = std::abs(out.defect) <= out.threshold;
    return out;
}

std::vector<double> cell_divergence(const FaceField& f, const Grid& g) {
    if (f.n() != g.n()) {
        throw ContractViolation("cell_divergence: layout mismatch");
    }
    std::vector<double> div(g.cell_count(), 0.0);
    const double idx = 1.0 / g.dx();
    const double idy = 1.0 / g.dy();
    const double idz = 1.0 / g.dz();
    for (int k = 0; k < g.nz(); ++k) {
        for (int j = 0; j < g.ny(); ++j) {
            for (int i = 0; i < g.nx(); ++i) {
                div[g.cell_index(i, j, k)] = (f.at(0, i + 1, j, k) - f.at(0, i, j, k)) * idx +
                                             (f.at(1, i, j + 1, k) - f.at(1, i, j, k)) * idy +
                                             (f.at(2, i, j, k + 1) - f.at(2, i, j, k)) * idz;
            }
        }
    }
    return div;
}

std::vector<double> nodal_divergence(const EdgeField& e, const Grid& g) {
    if (e.n() != g.n()) {
        throw ContractViolation("nodal_divergence: layout mismatch");
    }
    std::vector<double> div(g.node_count(), 0.0);
    const double idx = 1.0 / g.dx();
    const double idy = 1.0 / g.dy();
    const double idz = 1.0 / g.dz();
    for (int k = 1; k < g.nz(); ++k) {
        for (int j = 1; j < g.ny(); ++j) {
            for (int i = 1; i < g.nx(); ++i) {
                div[g.node_index(i, j, k)] = (e.at(0, i, j, k) - e.at(0, i - 1, j, k)) * idx +
                                             (e.at(1, i, j, k) - e.at(1, i, j - 1, k)) * idy +
                                             (e.at(2, i, j, k) - e.at(2, i, j, k - 1)) * idz;
            }
        }
    }
    return div;
}

namespace detail {

EdgeField discrete_gradient(std::span<const double> nodal, const Grid& g) {
    if (nodal.size() != g.node_count()) {
        throw ContractViolation("discrete_gradient: nodal array has wrong size");
    }
    EdgeField out(g);
    const double idx = 1.0 / g.dx();
    const double idy = 1.0 / g.dy();
    const double idz = 1.0 / g.dz();
    for (int c = 0; c < 3; ++c) {
        const Index3& ext = out.extents(c);
        const double inv = c == 0 ? idx : (c == 1 ? idy : idz);
        for (int k = 0; k < ext[2]; ++k) {
            for (int j = 0; j < ext[1]; ++j) {
                for (int i = 0; i < ext[0]; ++i) {
                    Index3 hi{i, j, k};
                    hi[c] += 1;
                    out.at(c, i, j, k) = (nodal[g.node_index(hi[0], hi[1], hi[2])] - nodal[g.node_index(i, j, k)]) * inv;
                }
            }
        }
    }
    return out;
}

}  // namespace detail

}  // namespace poynting
