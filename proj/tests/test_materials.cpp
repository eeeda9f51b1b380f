#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "poynting/error.hpp"
#include "poynting/materials.hpp"

using namespace poynting;

namespace {

TensorField random_diagonal(const Grid& g, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    TensorField t(g.cell_count());
    for (SymTensor& s : t) {
        s = SymTensor::diagonal(u(rng), u(rng), u(rng));
    }
    return t;
}

// mean of component c over the cells touching the DOF; `edge` picks the neighbor rule
double dof_mean(const TensorField& t, const Grid& g, bool edge, int c, int i, int j, int k) {
    const int p[3] = {i, j, k};
    int lo[3];
    int hi[3];
    for (int a = 0; a < 3; ++a) {
        const bool spread = edge ? (a != c) : (a == c);
        lo[a] = spread ? std::max(p[a] - 1, 0) : p[a];
        hi[a] = spread ? std::min(p[a], g.n()[a] - 1) : p[a];
    }
    double sum = 0.0;
    int count = 0;
    for (int z = lo[2]; z <= hi[2]; ++z) {
        for (int y = lo[1]; y <= hi[1]; ++y) {
            for (int x = lo[0]; x <= hi[0]; ++x) {
                sum += t[g.cell_index(x, y, z)].diag(c);
                ++count;
            }
        }
    }
    return sum / count;
}

template <class Field>
Field naive_apply(const TensorField& t, const Field& f, const Grid& g, bool edge) {
    Field out(g);
    for (int c = 0; c < 3; ++c) {
        const Index3& ext = f.extents(c);
        for (int k = 0; k < ext[2]; ++k) {
            for (int j = 0; j < ext[1]; ++j) {
                for (int i = 0; i < ext[0]; ++i) {
                    out.at(c, i, j, k) = dof_mean(t, g, edge, c, i, j, k) * f.at(c, i, j, k);
                }
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("unit materials are valid in both modes") {
    const Grid g({3, 3, 3}, {1.0, 1.0, 1.0});
    const MaterialSet m = MaterialSet::homogeneous(g, SymTensor::isotropic(1.0), SymTensor::isotropic(1.0), SymTensor{});
    const ValidationReport weak = validate(m, ValidationMode::weak);
    CHECK(weak.eps.min == 1.0);
    CHECK(weak.mu.max == 1.0);
    CHECK(weak.sigma.max == 0.0);
    CHECK_NOTHROW((void)validate(m, ValidationMode::uniqueness, 1.0, 1.0));
}

TEST_CASE("negative sigma entry is inadmissible and named") {
    const Grid g({3, 3, 3}, {1.0, 1.0, 1.0});
    MaterialSet m = MaterialSet::homogeneous(g, SymTensor::isotropic(1.0), SymTensor::isotropic(1.0), SymTensor{});
    m.sigma[g.cell_index(1, 2, 0)].xx = -0.1;
    try {
        (void)validate(m, ValidationMode::weak);
        FAIL("expected AdmissibilityError");
    } catch (const AdmissibilityError& e) {
        const std::string what = e.what();
        CHECK(what.find("sigma") != std::string::npos);
        CHECK(what.find("(1,2,0)") != std::string::npos);
    }
}

TEST_CASE("zero eps passes weak mode and fails coercivity") {
    const Grid g({3, 3, 3}, {1.0, 1.0, 1.0});
    MaterialSet m = MaterialSet::homogeneous(g, SymTensor::isotropic(1.0), SymTensor::isotropic(1.0), SymTensor{});
    m.eps[4].xx = 0.0;
    CHECK_NOTHROW((void)validate(m, ValidationMode::weak));
    CHECK_THROWS_AS((void)validate(m, ValidationMode::uniqueness, 0.5, 0.5), CoercivityError);
}

TEST_CASE("non-finite entries are inadmissible") {
    const Grid g({2, 2, 2}, {1.0, 1.0, 1.0});
    MaterialSet m = MaterialSet::homogeneous(g, SymTensor::isotropic(1.0), SymTensor::isotropic(1.0), SymTensor{});
    m.mu[0].yy = std::nan("");
    CHECK_THROWS_AS((void)validate(m, ValidationMode::weak), AdmissibilityError);
}

TEST_CASE("eigen_range of a symmetric tensor") {
    // rotation of diag(1, 3) in the xy-plane: [[2, 1], [1, 2]] has eigenvalues 1 and 3
    const SymTensor t{2.0, 2.0, 5.0, 1.0, 0.0, 0.0};
    const auto [lo, hi] = t.eigen_range();
    CHECK(lo == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(hi == doctest::Approx(5.0).epsilon(1e-14));
    const SymTensor indefinite{1.0, 1.0, 1.0, 2.0, 0.0, 0.0};
    CHECK(indefinite.eigen_range().first == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("off-diagonal tensors are rejected by sampling") {
    const Grid g({2, 2, 2}, {1.0, 1.0, 1.0});
    MaterialSet m = MaterialSet::homogeneous(g, SymTensor::isotropic(2.0), SymTensor::isotropic(1.0), SymTensor{});
    m.eps[3].xy = 0.5;
    CHECK_NOTHROW((void)validate(m, ValidationMode::weak));
    CHECK_THROWS_AS((void)sample_materials(m, g), UnsupportedLayout);
}

TEST_CASE("apply_tensor on simple tensors") {
    const Grid g({4, 4, 4}, {1.0, 1.0, 1.0});
    std::mt19937_64 rng(2);
    const EdgeField e = oracle::random_field<EdgeField>(g, rng);
    const TensorField identity(g.cell_count(), SymTensor::isotropic(1.0));
    CHECK(apply_tensor(identity, e, g) == e);

    EdgeField ones(g);
    for (double& v : ones.component(0)) {
        v = 1.0;
    }
    const TensorField d(g.cell_count(), SymTensor::diagonal(2.0, 1.0, 1.0));
    const EdgeField out = apply_tensor(d, ones, g);
    for (double v : out.component(0)) {
        CHECK(v == 2.0);
    }
    CHECK(out.component(1)[0] == 0.0);
}

TEST_CASE("apply_tensor agrees with a naive per-DOF loop") {
    const Grid g({4, 4, 4}, {1.0, 1.0, 1.0});
    std::mt19937_64 rng(8);
    const TensorField t = random_diagonal(g, rng, 0.5, 3.0);
    const EdgeField e = oracle::random_field<EdgeField>(g, rng);
    const FaceField h = oracle::random_field<FaceField>(g, rng);
    CHECK(oracle::max_diff(apply_tensor(t, e, g), naive_apply(t, e, g, true)) <= 1e-15 * 3.0);
    CHECK(oracle::max_diff(apply_tensor(t, h, g), naive_apply(t, h, g, false)) <= 1e-15 * 3.0);
}

TEST_CASE("apply_tensor is self-adjoint and non-negative") {
    const Grid g({5, 4, 3}, {1.0, 1.0, 1.0});
    std::mt19937_64 rng(21);
    const TensorField t = random_diagonal(g, rng, 0.0, 2.0);
    for (int trial = 0; trial < 5; ++trial) {
        const EdgeField a = oracle::random_field<EdgeField>(g, rng);
        const EdgeField b = oracle::random_field<EdgeField>(g, rng);
        const double lhs = inner(apply_tensor(t, a, g), b, g);
        const double rhs = inner(a, apply_tensor(t, b, g), g);
        CHECK(std::abs(lhs - rhs) <= 1e-14 * norm(apply_tensor(t, a, g), g) * norm(b, g));
        CHECK(inner(apply_tensor(t, a, g), a, g) >= 0.0);

        const FaceField p = oracle::random_field<FaceField>(g, rng);
        const FaceField q = oracle::random_field<FaceField>(g, rng);
        CHECK(std::abs(inner(apply_tensor(t, p, g), q, g) - inner(p, apply_tensor(t, q, g), g)) <=
              1e-14 * norm(apply_tensor(t, p, g), g) * norm(q, g));
    }
}

TEST_CASE("sampling is mirror symmetric") {
    // a tensor field symmetric under x -> Lx - x samples to a symmetric DOF field, up to summation order
    const Grid g({6, 4, 4}, {1.0, 1.0, 1.0});
    std::mt19937_64 rng(4);
    TensorField t = random_diagonal(g, rng, 1.0, 2.0);
    for (int k = 0; k < g.nz(); ++k) {
        for (int j = 0; j < g.ny(); ++j) {
            for (int i = 0; i < g.nx() / 2; ++i) {
                t[g.cell_index(g.nx() - 1 - i, j, k)] = t[g.cell_index(i, j, k)];
            }
        }
    }
    const EdgeField s = sample_on_edges(t, g);
    const int nx = g.nx();
    for (int k = 0; k <= g.nz(); ++k) {
        for (int j = 0; j <= g.ny(); ++j) {
            for (int i = 0; i < nx; ++i) {
                CHECK(std::abs(s.at(0, i, j, k) - s.at(0, nx - 1 - i, j, k)) <= 1e-15 * 2.0);
            }
            for (int i = 0; i <= nx; ++i) {
                if (j < g.ny()) {
                    CHECK(std::abs(s.at(1, i, j, k) - s.at(1, nx - i, j, k)) <= 1e-15 * 2.0);
                }
            }
        }
    }
}

TEST_CASE("ohm_current") {
    const Grid g({4, 4, 4}, {1.0, 1.0, 1.0});
    std::mt19937_64 rng(6);
    const EdgeField e = oracle::random_conforming(g, rng);
    SUBCASE("sigma = 0 and no source gives zero") {
        const MaterialSet m = MaterialSet::homogeneous(g, SymTensor::isotropic(1.0), SymTensor::isotropic(1.0), SymTensor{});
        CHECK(ohm_current(m, g, e, 0.3).max_abs() == 0.0);
    }
    SUBCASE("sigma = I gives j = e") {
        const MaterialSet m =
            MaterialSet::homogeneous(g, SymTensor::isotropic(1.0), SymTensor::isotropic(1.0), SymTensor::isotropic(1.0));
        CHECK(ohm_current(m, g, e, 0.3) == e);
    }
    SUBCASE("cosine-modulated preset at t = 0 equals its amplitude field") {
        MaterialSet m = MaterialSet::homogeneous(g, SymTensor::isotropic(1.0), SymTensor::isotropic(1.0), SymTensor{});
        m.source.kind = SourceKind::modulated;
        m.source.amplitude = 2.5;
        m.source.direction = {0.0, 1.0, 0.0};
        m.source.width = 0.3;
        m.source.omega = 7.0;
        const EdgeField j = ohm_current(m, g, EdgeField(g), 0.0);
        EdgeField expected(g);
        const Index3& ext = expected.extents(1);
        for (int k = 0; k < ext[2]; ++k) {
            for (int jj = 0; jj < ext[1]; ++jj) {
                for (int i = 0; i < ext[0]; ++i) {
                    const double x = i * g.dx() - 0.5;
                    const double y = (jj + 0.5) * g.dy() - 0.5;
                    const double z = k * g.dz() - 0.5;
                    expected.at(1, i, jj, k) = 2.5 * std::exp(-(x * x + y * y + z * z) / (0.3 * 0.3));
                }
            }
        }
        apply_pec_mask(expected);
        CHECK(oracle::max_diff(j, expected) <= 1e-15);
        // a quarter period later the current vanishes
        const double t = 0.5 * M_PI / 7.0;
        CHECK(ohm_current(m, g, EdgeField(g), t).max_abs() <= 1e-15);
    }
    SUBCASE("Joule term is dissipative") {
        std::mt19937_64 r2(13);
        MaterialSet m = MaterialSet::homogeneous(g, SymTensor::isotropic(1.0), SymTensor::isotropic(1.0), SymTensor{});
        m.sigma = random_diagonal(g, r2, 0.0, 1.0);
        CHECK(inner(ohm_current(m, g, e, 0.0), e, g) >= 0.0);
    }
}

TEST_CASE("gaussian pulse temporal envelope") {
    const Grid g({3, 3, 3}, {1.0, 1.0, 1.0});
    SourceSpec s;
    s.kind = SourceKind::gaussian_pulse;
    s.t0 = 0.4;
    s.tau = 0.2;
    const CurrentSource src(s, g);
    CHECK(src.temporal(0.4) == 1.0);
    CHECK(src.temporal(0.6) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(parse_source_kind("gaussian-pulse") == SourceKind::gaussian_pulse);
    CHECK(to_string(SourceKind::modulated) == "modulated");
    CHECK_THROWS((void)parse_source_kind("square"));
}

TEST_CASE("material files round-trip") {
    const Grid g({3, 2, 2}, {1.0, 1.0, 1.0});
    std::mt19937_64 rng(30);
    MaterialSet m = MaterialSet::homogeneous(g, SymTensor{}, SymTensor{}, SymTensor{});
    m.eps = random_diagonal(g, rng, 1.0, 4.0);
    m.mu = random_diagonal(g, rng, 1.0, 2.0);
    m.sigma = random_diagonal(g, rng, 0.0, 0.5);
    const auto dir = std::filesystem::temp_directory_path() / "poynting_material_test";
    std::filesystem::create_directories(dir);
    for (const char* name : {"m.csv", "m.bin"}) {
        const auto path = dir / name;
        save_material_file(path, m);
        const MaterialSet back = load_material_file(path, g);
        CHECK(back.eps == m.eps);
        CHECK(back.mu == m.mu);
        CHECK(back.sigma == m.sigma);
    }

    std::ofstream(dir / "short.csv") << "1 1 1 1 1 1 0 0 0\n";
    CHECK_THROWS_AS((void)load_material_file(dir / "short.csv", g), ConfigError);
    std::filesystem::remove_all(dir);
}
