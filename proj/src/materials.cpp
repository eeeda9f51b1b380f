#include "poynting/materials.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "poynting/error.hpp"

namespace poynting {

bool SymTensor::all_finite() const noexcept {
    return std::isfinite(xx) && std::isfinite(yy) && std::isfinite(zz) && std::isfinite(xy) &&
           std::isfinite(yz) && std::isfinite(xz);
}

std::pair<double, double> SymTensor::eigen_range() const {
    if (is_diagonal()) {
        return {std::min({xx, yy, zz}), std::max({xx, yy, zz})};
    }
    Eigen::Matrix3d a;
    a << xx, xy, xz, xy, yy, yz, xz, yz, zz;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver;
    solver.computeDirect(a, Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();
    return {ev.minCoeff(), ev.maxCoeff()};
}

std::string to_string(SourceKind kind) {
    switch (kind) {
        case SourceKind::zero:
            return "zero";
        case SourceKind::constant:
            return "constant";
        case SourceKind::gaussian_pulse:
            return "gaussian-pulse";
        case SourceKind::modulated:
            return "modulated";
    }
    return "zero";
}

SourceKind parse_source_kind(const std::string& name) {
    if (name == "zero") return SourceKind::zero;
    if (name == "constant") return SourceKind::constant;
    if (name == "gaussian-pulse") return SourceKind::gaussian_pulse;
    if (name == "modulated") return SourceKind::modulated;
    throw ConfigError("unknown source preset '" + name + "'");
}

MaterialSet MaterialSet::homogeneous(const Grid& g, SymTensor eps, SymTensor mu, SymTensor sigma) {
    MaterialSet m;
    m.n = g.n();
    m.eps.assign(g.cell_count(), eps);
    m.mu.assign(g.cell_count(), mu);
    m.sigma.assign(g.cell_count(), sigma);
    return m;
}

namespace {

std::string cell_label(const Index3& n, std::size_t cell) {
    const auto nx = static_cast<std::size_t>(n[0]);
    const auto ny = static_cast<std::size_t>(n[1]);
    std::ostringstream os;
    os << "(" << cell % nx << "," << (cell / nx) % ny << "," << cell / (nx * ny) << ")";
    return os.str();
}

TensorRange check_tensor(const TensorField& t, const Index3& n, const char* name, double lower_bound,
                         bool coercive, bool& diagonal) {
    const std::size_t cells = static_cast<std::size_t>(n[0]) * n[1] * n[2];
    if (t.size() != cells) {
        throw AdmissibilityError(std::string(name) + ": expected " + std::to_string(cells) + " cells, got " +
                                 std::to_string(t.size()));
    }
    TensorRange range{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (std::size_t c = 0; c < cells; ++c) {
        const SymTensor& s = t[c];
        if (!s.all_finite()) {
            throw AdmissibilityError(std::string(name) + " has a non-finite entry in cell " + cell_label(n, c));
        }
        diagonal = diagonal && s.is_diagonal();
        const auto [lo, hi] = s.eigen_range();
        if (lo < 0.0) {
            throw AdmissibilityError(std::string(name) + " is not non-negative in cell " + cell_label(n, c) +
                                     " (smallest eigenvalue " + std::to_string(lo) + ")");
        }
        if (coercive && lo < lower_bound) {
            throw CoercivityError(std::string(name) + " falls below the coercivity bound " +
                                  std::to_string(lower_bound) + " in cell " + cell_label(n, c));
        }
        range.min = std::min(range.min, lo);
        range.max = std::max(range.max, hi);
    }
    return range;
}

}  // namespace

ValidationReport validate(const MaterialSet& m, ValidationMode mode, double eps_star, double mu_star) {
    const bool uniq = mode == ValidationMode::uniqueness;
    if (uniq && (!(eps_star > 0.0) || !(mu_star > 0.0))) {
        throw ConfigError("uniqueness validation needs positive eps_star and mu_star");
    }
    ValidationReport report;
    report.eps = check_tensor(m.eps, m.n, "eps", eps_star, uniq, report.diagonal);
    report.mu = check_tensor(m.mu, m.n, "mu", mu_star, uniq, report.diagonal);
    report.sigma = check_tensor(m.sigma, m.n, "sigma", 0.0, false, report.diagonal);
    return report;
}

EdgeField sample_on_edges(const TensorField& t, const Grid& g) {
    if (t.size() != g.cell_count()) {
        throw ContractViolation("tensor field does not match grid");
    }
    EdgeField out(g);
    const Index3& n = g.n();
    for (int c = 0; c < 3; ++c) {
        const int a1 = (c + 1) % 3;
        const int a2 = (c + 2) % 3;
        const Index3& ext = out.extents(c);
        for (int k = 0; k < ext[2]; ++k) {
            for (int j = 0; j < ext[1]; ++j) {
                for (int i = 0; i < ext[0]; ++i) {
                    const Index3 node{i, j, k};
                    double sum = 0.0;
                    int count = 0;
                    // cells on either side along the two transverse axes
                    for (int d1 = -1; d1 <= 0; ++d1) {
                        for (int d2 = -1; d2 <= 0; ++d2) {
                            Index3 cell = node;
                            cell[a1] += d1;
                            cell[a2] += d2;
                            if (cell[a1] < 0 || cell[a1] >= n[a1] || cell[a2] < 0 || cell[a2] >= n[a2]) {
                                continue;
                            }
                            sum += t[g.cell_index(cell[0], cell[1], cell[2])].diag(c);
                            ++count;
                        }
                    }
                    out.at(c, i, j, k) = sum / count;
                }
            }
        }
    }
    return out;
}

FaceField sample_on_faces(const TensorField& t, const Grid& g) {
    if (t.size() != g.cell_count()) {
        throw ContractViolation("tensor field does not match grid");
    }
    FaceField out(g);
    const Index3& n = g.n();
    for (int c = 0; c < 3; ++c) {
        const Index3& ext = out.extents(c);
        for (int k = 0; k < ext[2]; ++k) {
            for (int j = 0; j < ext[1]; ++j) {
                for (int i = 0; i < ext[0]; ++i) {
                    const Index3 face{i, j, k};
                    double sum = 0.0;
                    int count = 0;
                    for (int d = -1; d <= 0; ++d) {
                        Index3 cell = face;
                        cell[c] += d;
                        if (cell[c] < 0 || cell[c] >= n[c]) {
                            continue;
                        }
                        sum += t[g.cell_index(cell[0], cell[1], cell[2])].diag(c);
                        ++count;
                    }
                    out.at(c, i, j, k) = sum / count;
                }
            }
        }
    }
    return out;
}

namespace {

void require_diagonal(const TensorField& t, const char* name) {
    for (const SymTensor& s : t) {
        if (!s.is_diagonal()) {
            throw UnsupportedLayout(std::string(name) +
                                    ": off-diagonal tensor entries are not supported by the staggered discretization");
        }
    }
}

}  // namespace

SampledMaterials sample_materials(const MaterialSet& m, const Grid& g) {
    if (m.n != g.n()) {
        throw ContractViolation("material set does not match grid");
    }
    require_diagonal(m.eps, "eps");
    require_diagonal(m.mu, "mu");
    require_diagonal(m.sigma, "sigma");
    return SampledMaterials{sample_on_edges(m.eps, g), sample_on_edges(m.sigma, g), sample_on_faces(m.mu, g)};
}

EdgeField apply_tensor(const EdgeField& weights, const EdgeField& f) {
    if (!weights.same_layout(f)) {
        throw ContractViolation("apply_tensor: layout mismatch");
    }
    EdgeField out = f;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= weights[i];
    }
    return out;
}

FaceField apply_tensor(const FaceField& weights, const FaceField& f) {
    if (!weights.same_layout(f)) {
        throw ContractViolation("apply_tensor: layout mismatch");
    }
    FaceField out = f;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= weights[i];
    }
    return out;
}

EdgeField apply_tensor(const TensorField& t, const EdgeField& f, const Grid& g) {
    require_diagonal(t, "tensor");
    return apply_tensor(sample_on_edges(t, g), f);
}

FaceField apply_tensor(const TensorField& t, const FaceField& f, const Grid& g) {
    require_diagonal(t, "tensor");
    return apply_tensor(sample_on_faces(t, g), f);
}

CurrentSource::CurrentSource(const SourceSpec& spec, const Grid& g) : spec_(spec), profile_(g) {
    if (spec_.kind == SourceKind::zero) {
        return;
    }
    if ((spec_.kind == SourceKind::gaussian_pulse || spec_.kind == SourceKind::modulated) && !(spec_.width > 0.0)) {
        throw ConfigError("source width must be positive");
    }
    if (spec_.kind == SourceKind::gaussian_pulse && !(spec_.tau > 0.0)) {
        throw ConfigError("source tau must be positive");
    }
    const Real3 center = spec_.center.value_or(Real3{0.5 * g.extent()[0], 0.5 * g.extent()[1], 0.5 * g.extent()[2]});
    const double inv_w2 = 1.0 / (spec_.width * spec_.width);
    for (int c = 0; c < 3; ++c) {
        const double dir = spec_.amplitude * spec_.direction[c];
        const Index3& ext = profile_.extents(c);
        for (int k = 0; k < ext[2]; ++k) {
            for (int j = 0; j < ext[1]; ++j) {
                for (int i = 0; i < ext[0]; ++i) {
                    double shape = 1.0;
                    if (spec_.kind != SourceKind::constant) {
                        const Real3 p = edge_position(g, c, i, j, k);
                        double r2 = 0.0;
                        for (int a = 0; a < 3; ++a) {
                            r2 += (p[a] - center[a]) * (p[a] - center[a]);
                        }
                        shape = std::exp(-r2 * inv_w2);
                    }
                    profile_.at(c, i, j, k) = dir * shape;
                }
            }
        }
    }
    apply_pec_mask(profile_);
}

double CurrentSource::temporal(double t) const noexcept {
    switch (spec_.kind) {
        case SourceKind::zero:
            return 0.0;
        case SourceKind::constant:
            return 1.0;
        case SourceKind::gaussian_pulse: {
            const double s = (t - spec_.t0) / spec_.tau;
            return std::exp(-s * s);
        }
        case SourceKind::modulated:
            return std::cos(spec_.omega * t);
    }
    return 0.0;
}

EdgeField CurrentSource::evaluate(double t) const {
    EdgeField out = profile_;
    out *= temporal(t);
    return out;
}

void CurrentSource::accumulate(double t, double alpha, EdgeField& out) const {
    if (is_zero()) {
        return;
    }
    out.axpy(alpha * temporal(t), profile_);
}

EdgeField ohm_current(const SampledMaterials& sm, const CurrentSource& j1, const EdgeField& e, double t) {
    EdgeField j = apply_tensor(sm.sigma, e);
    j1.accumulate(t, 1.0, j);
    return j;
}

EdgeField ohm_current(const MaterialSet& m, const Grid& g, const EdgeField& e, double t) {
    return ohm_current(sample_materials(m, g), CurrentSource(m.source, g), e, t);
}

namespace {

constexpr std::size_t kColumns = 9;

void assign_row(MaterialSet& m, std::size_t cell, const double* row) {
    m.eps[cell] = SymTensor::diagonal(row[0], row[1], row[2]);
    m.mu[cell] = SymTensor::diagonal(row[3], row[4], row[5]);
    m.sigma[cell] = SymTensor::diagonal(row[6], row[7], row[8]);
}

}  // namespace

MaterialSet load_material_file(const std::filesystem::path& path, const Grid& g) {
    MaterialSet m = MaterialSet::homogeneous(g, {}, {}, {});
    const std::size_t cells = g.cell_count();
    if (path.extension() == ".csv") {
        std::ifstream in(path);
        if (!in) {
            throw ConfigError("cannot open material file " + path.string());
        }
        std::string line;
        std::size_t cell = 0;
        bool first = true;
        while (std::getline(in, line)) {
            if (const auto hash = line.find('#'); hash != std::string::npos) {
                line.erase(hash);
            }
            std::replace(line.begin(), line.end(), ',', ' ');
            if (line.find_first_not_of(" \t\r") == std::string::npos) {
                continue;
            }
            std::istringstream row(line);
            double values[kColumns];
            std::size_t count = 0;
            while (count < kColumns && row >> values[count]) {
                ++count;
            }
            if (count == 0 && first) {
                first = false;  // header line
                continue;
            }
            first = false;
            std::string extra;
            if (count != kColumns || (row >> extra)) {
                throw ConfigError("material file " + path.string() + ": row " + std::to_string(cell) +
                                  " does not have 9 numeric columns");
            }
            if (cell >= cells) {
                throw ConfigError("material file " + path.string() + " has more rows than grid cells");
            }
            assign_row(m, cell++, values);
        }
        if (cell != cells) {
            throw ConfigError("material file " + path.string() + " has " + std::to_string(cell) + " rows, expected " +
                              std::to_string(cells));
        }
        return m;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open material file " + path.string());
    }
    std::vector<double> buffer(cells * kColumns);
    in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(buffer.size() * sizeof(double)) || in.peek() != EOF) {
        throw ConfigError("binary material file " + path.string() + " must hold exactly " +
                          std::to_string(cells * kColumns) + " float64 values");
    }
    static_assert(std::endian::native == std::endian::little, "binary material files are little-endian");
    for (std::size_t c = 0; c < cells; ++c) {
        assign_row(m, c, buffer.data() + c * kColumns);
    }
    return m;
}

void save_material_file(const std::filesystem::path& path, const MaterialSet& m) {
    const std::size_t cells = m.eps.size();
    std::vector<double> rows;
    rows.reserve(cells * kColumns);
    for (std::size_t c = 0; c < cells; ++c) {
        for (const TensorField* t : {&m.eps, &m.mu, &m.sigma}) {
            const SymTensor& s = (*t)[c];
            if (!s.is_diagonal()) {
                throw UnsupportedLayout("material files store diagonal tensors only");
            }
            rows.insert(rows.end(), {s.xx, s.yy, s.zz});
        }
    }
    if (path.extension() == ".csv") {
        std::ofstream out(path);
        if (!out) {
            throw ConfigError("cannot write material file " + path.string());
        }
        out << "epsx,epsy,epsz,mux,muy,muz,sigx,sigy,sigz\n";
        char buf[32];
        for (std::size_t c = 0; c < cells; ++c) {
            for (std::size_t k = 0; k < kColumns; ++k) {
                std::snprintf(buf, sizeof buf, "%.17g", rows[c * kColumns + k]);
                out << buf << (k + 1 == kColumns ? '\n' : ',');
            }
        }
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write material file " + path.string());
    }
    out.write(reinterpret_cast<const char*>(rows.data()), static_cast<std::streamsize>(rows.size() * sizeof(double)));
}

}  // namespace poynting
