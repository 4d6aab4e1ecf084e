#include <doctest.h>

#include <cstring>
#include <random>
#include <vector>

#include "tubefit/simd/kernels.hpp"

using namespace tubefit::simd;

namespace {

std::vector<const KernelTable*> vector_tables() {
    std::vector<const KernelTable*> out;
    if (const auto* t = avx2_kernels()) {
        out.push_back(t);
    }
    if (const auto* t = neon_kernels()) {
        out.push_back(t);
    }
    return out;
}

bool same_bits(double a, double b) {
    return std::memcmp(&a, &b, sizeof a) == 0;
}

} // namespace

TEST_CASE("active kernel table is one of the compiled variants") {
    const KernelTable& k = active_kernels();
    bool known = &k == &scalar_kernels();
    for (const auto* t : vector_tables()) {
        known = known || &k == t;
    }
    CHECK(known);
    MESSAGE("active kernels: " << k.name);
}

TEST_CASE("scalar nearest sample: ties go to the smallest index") {
    const double xs[] = {1.0, -1.0, 1.0, 0.0};
    const double ys[] = {0.0, 0.0, 0.0, 5.0};
    const double zs[] = {0.0, 0.0, 0.0, 0.0};
    CHECK(scalar_kernels().nearest_sample(xs, ys, zs, 4, 0.0, 0.0, 0.0) == 0);
    CHECK(scalar_kernels().nearest_sample(xs, ys, zs, 4, 0.9, 0.0, 0.0) == 0);
    CHECK(scalar_kernels().nearest_sample(xs, ys, zs, 4, 0.0, 4.0, 0.0) == 3);
}

TEST_CASE("vector nearest sample matches scalar on random and tied inputs") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const auto* t : vector_tables()) {
        for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 33u, 1001u}) {
            std::vector<double> x(n), y(n), z(n);
            for (int rep = 0; rep < 50; ++rep) {
                for (std::size_t i = 0; i < n; ++i) {
                    // Coarse values so exact distance ties are common.
                    x[i] = std::round(u(rng) * 3.0);
                    y[i] = std::round(u(rng) * 3.0);
                    z[i] = rep % 2 ? u(rng) : 0.0;
                }
                const double px = std::round(u(rng) * 3.0), py = std::round(u(rng) * 3.0), pz = 0.0;
                REQUIRE(t->nearest_sample(x.data(), y.data(), z.data(), n, px, py, pz) ==
                        scalar_kernels().nearest_sample(x.data(), y.data(), z.data(), n, px, py, pz));
            }
        }
    }
}

TEST_CASE("vector quadform row is bit-identical to scalar") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (const auto* t : vector_tables()) {
        for (std::size_t n : {1u, 3u, 4u, 5u, 8u, 13u, 512u, 515u}) {
            std::vector<double> xs(n), a(n), b(n);
            for (auto& v : xs) {
                v = u(rng);
            }
            const QuadForm q{u(rng), u(rng), 1.3, -0.4, 0.7};
            const double y = u(rng);
            scalar_kernels().quadform_row(xs.data(), n, y, q, a.data());
            t->quadform_row(xs.data(), n, y, q, b.data());
            for (std::size_t i = 0; i < n; ++i) {
                REQUIRE(same_bits(a[i], b[i]));
            }
        }
    }
}

TEST_CASE("quadform row against direct evaluation") {
    const double xs[] = {0.0, 1.0, 2.0};
    const QuadForm q{1.0, 1.0, 2.0, 1.0, 3.0};
    double out[3];
    scalar_kernels().quadform_row(xs, 3, 2.0, q, out);
    // dx = -1, 0, 1 and dy = 1: 2 dx² + dx dy + 3 dy².
    CHECK(out[0] == doctest::Approx(2 - 1 + 3));
    CHECK(out[1] == doctest::Approx(3));
    CHECK(out[2] == doctest::Approx(2 + 1 + 3));
}

TEST_CASE("vector count below matches scalar, including the level boundary") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> level_pick(0, 8);
    for (const auto* t : vector_tables()) {
        for (std::size_t n : {1u, 3u, 4u, 5u, 8u, 31u, 512u, 517u}) {
            std::vector<double> v(n);
            std::vector<std::uint8_t> m(n);
            for (std::size_t i = 0; i < n; ++i) {
                v[i] = level_pick(rng) * 0.5;
                m[i] = static_cast<std::uint8_t>(level_pick(rng) % 2);
            }
            for (double level : {-1.0, 0.0, 1.0, 2.0, 10.0}) {
                const MaskCounts a = scalar_kernels().count_below(v.data(), m.data(), n, level);
                const MaskCounts b = t->count_below(v.data(), m.data(), n, level);
                REQUIRE(a.inside_g == b.inside_g);
                REQUIRE(a.outside_g == b.outside_g);
            }
        }
    }
}

TEST_CASE("count below counts values at the level as inside") {
    const double v[] = {0.5, 1.0, 1.5, 1.0};
    const std::uint8_t m[] = {1, 0, 1, 1};
    const MaskCounts c = scalar_kernels().count_below(v, m, 4, 1.0);
    CHECK(c.inside_g == 2);
    CHECK(c.outside_g == 1);
}
