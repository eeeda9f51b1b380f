#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "poynting/error.hpp"
#include "poynting/grid.hpp"

using namespace poynting;

TEST_CASE("build_grid spacing") {
    const Grid g = build_grid({8, 8, 8}, {1.0, 1.0, 1.0});
    CHECK(g.dx() == 0.125);
    CHECK(g.dy() == 0.125);
    CHECK(g.dz() == 0.125);

    const Grid h = build_grid({4, 8, 16}, {1.0, 2.0, 1.0});
    CHECK(h.dx() == 0.25);
    CHECK(h.dy() == 0.25);
    CHECK(h.dz() == 0.0625);
}

TEST_CASE("build_grid rejects bad dimensions") {
    CHECK_THROWS_AS((void)build_grid({0, 4, 4}, {1.0, 1.0, 1.0}), ConfigError);
    CHECK_THROWS_AS((void)build_grid({4, 4, 4}, {1.0, -1.0, 1.0}), ConfigError);
    CHECK_THROWS_AS((void)build_grid({4, 4, 4}, {1.0, 0.0, 1.0}), ConfigError);
}

TEST_CASE("field layout counts") {
    const Grid g({2, 3, 4}, {1.0, 1.0, 1.0});
    const EdgeField e(g);
    const FaceField h(g);
    CHECK(e.component_size(0) == 2u * 4u * 5u);
    CHECK(e.component_size(1) == 3u * 3u * 5u);
    CHECK(e.component_size(2) == 3u * 4u * 4u);
    CHECK(h.component_size(0) == 3u * 3u * 4u);
    CHECK(h.component_size(1) == 2u * 4u * 4u);
    CHECK(h.component_size(2) == 2u * 3u * 5u);
}

TEST_CASE("curl of zero is zero") {
    const Grid g({3, 3, 3}, {1.0, 1.0, 1.0});
    CHECK(curl_e(EdgeField(g), g).max_abs() == 0.0);
    CHECK(curl_h(FaceField(g), g).max_abs() == 0.0);
}

TEST_CASE("curl_e matches the dense assembly on 2^3") {
    const Grid g({2, 2, 2}, {1.0, 1.5, 0.75});
    const Eigen::MatrixXd C = oracle::dense_curl(g);
    EdgeField e(g);
    FaceField out(g);
    for (std::size_t col = 0; col < e.size(); ++col) {
        e.fill(0.0);
        e[col] = 1.0;
        apply_curl_e(e, g, out);
        const Eigen::VectorXd expected = C.col(static_cast<Eigen::Index>(col));
        CHECK((oracle::to_vec(out) - expected).cwiseAbs().maxCoeff() <= 1e-15 * expected.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("curl_h is the masked transpose of curl_e on 2^3") {
    const Grid g({2, 2, 2}, {1.0, 1.5, 0.75});
    const Eigen::MatrixXd K = oracle::dense_curl_h(g);
    FaceField h(g);
    EdgeField out(g);
    for (std::size_t col = 0; col < h.size(); ++col) {
        h.fill(0.0);
        h[col] = 1.0;
        apply_curl_h(h, g, out);
        const Eigen::VectorXd expected = K.col(static_cast<Eigen::Index>(col));
        CHECK((oracle::to_vec(out) - expected).cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + expected.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("curl_e rejects a non-conforming field") {
    const Grid g({3, 3, 3}, {1.0, 1.0, 1.0});
    EdgeField e(g);
    e.at(0, 1, 0, 1) = 1.0;  // x-edge on the y = 0 wall
    CHECK_FALSE(is_pec_conforming(e));
    CHECK_THROWS_AS((void)curl_e(e, g), ContractViolation);
    apply_pec_mask(e);
    CHECK(is_pec_conforming(e));
}

namespace {

std::vector<double> interior_nodal(const Grid& g, std::mt19937_64& rng, bool integers) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> n(-1000, 1000);
    std::vector<double> phi(g.node_count(), 0.0);
    for (int k = 1; k < g.nz(); ++k) {
        for (int j = 1; j < g.ny(); ++j) {
            for (int i = 1; i < g.nx(); ++i) {
                phi[g.node_index(i, j, k)] = integers ? n(rng) : u(rng);
            }
        }
    }
    return phi;
}

}  // namespace

TEST_CASE("curl of a masked gradient vanishes") {
    std::mt19937_64 rng(11);
    SUBCASE("bitwise with integer data on dyadic spacing") {
        const Grid g({4, 4, 8}, {1.0, 1.0, 1.0});
        const EdgeField grad = detail::discrete_gradient(interior_nodal(g, rng, true), g);
        CHECK(is_pec_conforming(grad));
        CHECK(curl_e(grad, g).max_abs() == 0.0);
    }
    SUBCASE("to roundoff on a general grid") {
        const Grid g({5, 4, 6}, {1.0, 0.8, 1.3});
        const EdgeField grad = detail::discrete_gradient(interior_nodal(g, rng, false), g);
        CHECK(is_pec_conforming(grad));
        CHECK(curl_e(grad, g).max_abs() <= 1e-13 * grad.max_abs() / g.dx());
    }
}

TEST_CASE("constant h: curl_h vanishes away from the boundary") {
    const Grid g({3, 3, 3}, {1.0, 1.0, 1.0});
    FaceField h(g);
    h.fill(1.0);
    EdgeField raw(g);
    // unmasked transpose, straight from the dense oracle
    const Eigen::VectorXd full = oracle::dense_curl(g).transpose() * oracle::to_vec(h);
    const EdgeField masked = curl_h(h, g);
    bool interior_zero = true;
    bool boundary_nonzero = false;
    for (int c = 0; c < 3; ++c) {
        const Index3& ext = raw.extents(c);
        for (int k = 0; k < ext[2]; ++k) {
            for (int j = 0; j < ext[1]; ++j) {
                for (int i = 0; i < ext[0]; ++i) {
                    const auto idx = masked.index(c, i, j, k);
                    if (oracle::tangential(g, c, i, j, k)) {
                        boundary_nonzero = boundary_nonzero || full(static_cast<Eigen::Index>(idx)) != 0.0;
                        interior_zero = interior_zero && masked[idx] == 0.0;
                    } else {
                        const bool near_wall = [&] {
                            const int p[3] = {i, j, k};
                            for (int a = 0; a < 3; ++a) {
                                if (a != c && (p[a] == 1 || p[a] == g.n()[a] - 1)) {
                                    return true;
                                }
                            }
                            return false;
                        }();
                        if (!near_wall) {
                            interior_zero = interior_zero && std::abs(masked[idx]) < 1e-13;
                        }
                    }
                }
            }
        }
    }
    CHECK(interior_zero);
    CHECK(boundary_nonzero);
}

TEST_CASE("inner agrees with a naive loop") {
    const Grid g({4, 4, 4}, {1.0, 2.0, 0.5});
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const EdgeField a = oracle::random_field<EdgeField>(g, rng);
        const EdgeField b = oracle::random_field<EdgeField>(g, rng);
        const double ref = oracle::naive_inner(a, b, g);
        CHECK(std::abs(inner(a, b, g) - ref) <= 1e-14 * oracle::naive_inner(a, a, g));
        const FaceField p = oracle::random_field<FaceField>(g, rng);
        const FaceField q = oracle::random_field<FaceField>(g, rng);
        CHECK(std::abs(inner(p, q, g) - oracle::naive_inner(p, q, g)) <= 1e-14 * oracle::naive_inner(p, p, g));
    }
    CHECK(inner(EdgeField(g), oracle::random_field<EdgeField>(g, rng), g) == 0.0);
    const EdgeField a = oracle::random_field<EdgeField>(g, rng);
    CHECK(inner(a, a, g) > 0.0);
}

TEST_CASE("inner rejects mismatched layouts") {
    const Grid g({4, 4, 4}, {1.0, 1.0, 1.0});
    const Grid h({4, 5, 4}, {1.0, 1.0, 1.0});
    CHECK_THROWS_AS((void)inner(EdgeField(g), EdgeField(h), g), ContractViolation);
    CHECK_THROWS_AS((void)inner(FaceField(g), FaceField(h), g), ContractViolation);
}

TEST_CASE("adjointness defect") {
    std::mt19937_64 rng(5);
    SUBCASE("zero inputs") {
        const Grid g({4, 4, 4}, {1.0, 1.0, 1.0});
        CHECK(adjointness_defect(EdgeField(g), oracle::random_field<FaceField>(g, rng), g) == 0.0);
        CHECK(adjointness_defect(oracle::random_conforming(g, rng), FaceField(g), g) == 0.0);
    }
    SUBCASE("conforming e on 8^3 is a V0 member") {
        const Grid g({8, 8, 8}, {1.0, 1.0, 1.0});
        for (int trial = 0; trial < 10; ++trial) {
            const EdgeField e = oracle::random_conforming(g, rng);
            const FaceField h = oracle::random_field<FaceField>(g, rng);
            const V0Membership m = v0_membership(e, h, g);
            CHECK(m.member);
            CHECK(std::abs(m.defect) <= m.threshold);
        }
    }
    SUBCASE("unmasked e reproduces the boundary term on 2^3") {
        const Grid g({2, 2, 2}, {1.0, 1.0, 1.0});
        const EdgeField e = oracle::random_field<EdgeField>(g, rng);
        const FaceField h = oracle::random_field<FaceField>(g, rng);
        const Eigen::MatrixXd C = oracle::dense_curl(g);
        const Eigen::VectorXd ev = oracle::to_vec(e);
        const Eigen::VectorXd hv = oracle::to_vec(h);
        const Eigen::VectorXd boundary = (Eigen::VectorXd::Ones(ev.size()) - oracle::free_edges(g));
        const double expected = g.cell_volume() * ev.dot(boundary.asDiagonal() * (C.transpose() * hv));
        const double defect = adjointness_defect(e, h, g);
        CHECK(std::abs(expected) > 1e-3);
        CHECK(defect == doctest::Approx(expected).epsilon(1e-12));
        CHECK_FALSE(v0_membership(e, h, g).member);
    }
}

TEST_CASE("curl_h curl_e is symmetric positive semidefinite on 2^3") {
    const Grid g({2, 2, 2}, {1.0, 1.0, 1.0});
    const EdgeField probe(g);
    const auto n = static_cast<Eigen::Index>(probe.size());
    Eigen::MatrixXd A(n, n);
    EdgeField e(g);
    for (Eigen::Index col = 0; col < n; ++col) {
        e.fill(0.0);
        if (oracle::free_edges(g)(col) == 0.0) {
            A.col(col).setZero();
            continue;
        }
        e[static_cast<std::size_t>(col)] = 1.0;
        A.col(col) = oracle::to_vec(curl_h(curl_e(e, g), g));
    }
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (A + A.transpose()));
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
}

TEST_CASE("curls are linear") {
    const Grid g({5, 5, 5}, {1.0, 1.0, 1.0});
    std::mt19937_64 rng(9);
    const EdgeField a = oracle::random_conforming(g, rng);
    const EdgeField b = oracle::random_conforming(g, rng);
    EdgeField comb = a;
    comb *= 2.5;
    comb.axpy(-0.75, b);
    FaceField expected = curl_e(a, g);
    expected *= 2.5;
    expected.axpy(-0.75, curl_e(b, g));
    CHECK(oracle::max_diff(curl_e(comb, g), expected) <= 1e-12);
}

TEST_CASE("divergences annihilate curls") {
    const Grid g({4, 5, 3}, {1.0, 1.2, 0.9});
    std::mt19937_64 rng(17);
    const FaceField b = curl_e(oracle::random_conforming(g, rng), g);
    for (double d : cell_divergence(b, g)) {
        CHECK(std::abs(d) <= 1e-12);
    }
    const EdgeField k = curl_h(oracle::random_field<FaceField>(g, rng), g);
    for (double d : nodal_divergence(k, g)) {
        CHECK(std::abs(d) <= 1e-12);
    }
}
