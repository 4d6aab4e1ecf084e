#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "test_support.hpp"
#include "tubefit/cross_section.hpp"
#include "tubefit/error.hpp"

using namespace tubefit;
using tubefit::testing::curve_from_function;
using tubefit::testing::ellipse_normal_mass;
using tubefit::testing::random_unit;

namespace {

constexpr double kPi = std::numbers::pi;

Point3 z_axis(double t) { return {0.0, 0.0, 10.0 * t}; }

// Points uniform in a cylinder of the given radius around z in [0, 10].
PointCloud cylinder(std::size_t n, double radius, std::uint64_t seed,
                    double (*radius_at)(double) = nullptr) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point3> pts;
    while (pts.size() < n) {
        const double x = 2 * u(rng) - 1, y = 2 * u(rng) - 1, z = 10 * u(rng);
        const double r = radius_at ? radius_at(z / 10.0) : radius;
        if (x * x + y * y <= 1.0) {
            pts.emplace_back(r * x, r * y, z);
        }
    }
    return PointCloud(std::move(pts));
}

PrincipalCurve fitted_axis(const PointCloud& cloud) {
    return curve_from_function(z_axis, 4, assign_latent_times(z_axis, cloud, 1000));
}

} // namespace

TEST_CASE("t_window examples") {
    const std::vector<double> times{0.1, 0.5, 0.9};
    CHECK(t_window(times, 0.5, 0.2) == std::vector<std::size_t>{1});
    CHECK(t_window(times, 0.5, 0.45) == std::vector<std::size_t>{0, 1, 2});
    try {
        t_window(times, 0.3, 0.1);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyNeighborhood);
    }
    CHECK_THROWS_AS(t_window(times, 0.5, 0.0), Error);

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> many(1000);
    for (auto& t : many) {
        t = u(rng);
    }
    const auto idx = t_window(many, 0.5, 0.1);
    std::size_t direct = 0;
    for (double t : many) {
        direct += std::abs(t - 0.5) < 0.1;
    }
    CHECK(idx.size() == direct);
    CHECK(std::abs(static_cast<int>(idx.size()) - 200) <= 40);
}

TEST_CASE("project_to_plane examples") {
    auto line = [](double t) { return Point3(4 * t, 0, 0); };
    const auto c = curve_from_function(line, 4);
    const Point2 q = project_to_plane(Point3(2, 1.2, -1.6), 0.5, c);
    CHECK(q.norm() == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(project_to_plane(c.point(0.3), 0.3, c).norm() < 1e-12);
}

TEST_CASE("property: projection preserves distance to the foot") {
    auto f = [](double t) { return Point3(std::cos(3 * t), std::sin(3 * t), t); };
    const auto c = curve_from_function(f, 10);
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double t = u(rng);
        // Offset orthogonal to the tangent at t, so the point's foot is f(t).
        Vec3 d = random_unit(rng);
        const Vec3 tan = c.tangent(t);
        d = (d - d.dot(tan) * tan).normalized() * (0.05 + 0.5 * u(rng));
        const Point3 p = c.point(t) + d;
        const Point2 q = project_to_plane(p, t, c);
        REQUIRE(std::abs(q.norm() - d.norm()) < 1e-6);
        const Vec3 full = minimal_rotation_to_z(tan).apply(p - c.point(t));
        REQUIRE(std::abs(full.z()) < 1e-3);
    }
}

TEST_CASE("arc projection keeps radial distance where a fixed plane distorts it") {
    // Quarter arc of radius 5 in the xy plane.
    auto arc = [](double t) {
        const double a = 0.5 * kPi * t;
        return Point3(5 * std::cos(a), 5 * std::sin(a), 0);
    };
    const auto c = curve_from_function(arc, 12);
    const double t_point = 0.6, t0 = 0.5;
    const double a = 0.5 * kPi * (t_point - t0);
    const Point3 foot = c.point(t_point);
    const Vec3 radial = Vec3(foot.x(), foot.y(), 0).normalized();
    const Vec3 n = c.tangent(t0);

    // Outside the bend the fixed plane at t0 sees 6 cos a - 5 < 1; inside it
    // sees 5 - 4 cos a > 1. Projecting at the point's own time gives 1 both ways.
    for (double side : {1.0, -1.0}) {
        const Point3 p = foot + side * radial;
        CHECK(project_to_plane(p, t_point, c).norm() == doctest::Approx(1.0).epsilon(1e-6));
        const Vec3 d = p - c.point(t0);
        const double fixed = (d - d.dot(n) * n).norm();
        const double want = side > 0 ? 6 * std::cos(a) - 5 : 5 - 4 * std::cos(a);
        CHECK(fixed == doctest::Approx(want).epsilon(1e-4));
        CHECK(std::abs(fixed - 1.0) > 0.04);
    }
}

TEST_CASE("cosine weights") {
    CHECK(cosine_weights(std::vector<double>{0.4}, 0.4, 0.1) == std::vector<double>{1.0});
    const auto two = cosine_weights(std::vector<double>{0.45, 0.55}, 0.5, 0.1);
    CHECK(two[0] == doctest::Approx(0.5));
    CHECK(two[1] == doctest::Approx(0.5));
    const auto skew = cosine_weights(std::vector<double>{0.5, 0.55}, 0.5, 0.1);
    CHECK(skew[0] == doctest::Approx(2.0 / 3.0));
    CHECK(skew[1] == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(cosine_weights(std::vector<double>{0.7}, 0.5, 0.1), Error);
}

TEST_CASE("property: cosine weights are normalized and decrease away from t0") {
    std::mt19937_64 rng(52);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double r = 0.05 + 0.2 * (u(rng) + 1);
        std::vector<double> ts;
        for (int i = 0; i < 30; ++i) {
            ts.push_back(0.5 + 0.999 * r * u(rng));
        }
        const auto w = cosine_weights(ts, 0.5, r);
        double s = 0.0;
        for (double x : w) {
            REQUIRE(x >= 0.0);
            s += x;
        }
        REQUIRE(std::abs(s - 1.0) < 1e-12);
        for (std::size_t i = 0; i < ts.size(); ++i) {
            for (std::size_t j = 0; j < ts.size(); ++j) {
                if (std::abs(ts[i] - 0.5) < std::abs(ts[j] - 0.5)) {
                    REQUIRE(w[i] >= w[j]);
                }
            }
        }
    }
}

TEST_CASE("weighted gaussian") {
    const std::vector<Point2> pts{{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    const std::vector<double> w(4, 0.25);
    const auto g = weighted_gaussian(pts, w);
    CHECK(g.mu.norm() < 1e-15);
    CHECK((g.sigma - Mat2::Identity() * 0.5).norm() < 1e-15);

    CHECK_THROWS_AS(weighted_gaussian(std::vector<Point2>{{0, 0}, {1, 1}}, std::vector<double>{1, 0}), Error);
    try {
        weighted_gaussian(std::vector<Point2>{{0, 0}, {1, 1}, {2, 2}}, std::vector<double>(3, 1.0 / 3));
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateCovariance);
    }

    std::mt19937_64 rng(53);
    std::normal_distribution<double> n(0.0, 1.0);
    Mat2 s;
    s << 2, 0.5, 0.5, 1;
    const Mat2 l = s.llt().matrixL();
    std::vector<Point2> mc;
    for (int i = 0; i < 10000; ++i) {
        mc.push_back(Point2(1, 2) + l * Point2(n(rng), n(rng)));
    }
    const auto e = weighted_gaussian(mc, std::vector<double>(mc.size(), 1e-4));
    CHECK((e.mu - Point2(1, 2)).cwiseAbs().maxCoeff() < 0.1);
    CHECK((e.sigma - s).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("level set scale") {
    CHECK(level_set_scale(0.999999) < 1e-5);
    CHECK(level_set_scale(std::exp(-1.0)) == doctest::Approx(2.0));
    CHECK(level_set_scale(0.15) == doctest::Approx(3.794).epsilon(1e-3));
    try {
        level_set_scale(1.0);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Domain);
    }
    CHECK_THROWS_AS(level_set_scale(0.0), Error);

    // Radial quadrature of the standard normal over the disk.
    const double c = level_set_scale(0.15);
    const double rmax = std::sqrt(c);
    const int n = 100000;
    double mass = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = (i + 0.5) * rmax / n;
        mass += r * std::exp(-0.5 * r * r) * rmax / n;
    }
    CHECK(std::abs(mass - 0.85) < 1e-3);
}

TEST_CASE("property: fitted ellipse carries normal mass 1 - alpha") {
    std::mt19937_64 rng(54);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Mat2 a = Mat2::Random();
        const Mat2 s = a * a.transpose() + 0.1 * Mat2::Identity();
        const Point2 mu(u(rng), -u(rng));
        for (double alpha : {0.05, 0.1, 0.15, 0.5}) {
            const auto e = ellipse_from_covariance(mu, s, level_set_scale(alpha));
            REQUIRE(std::abs(ellipse_normal_mass(mu, s, e) - (1 - alpha)) < 2e-3);
        }
    }
}

TEST_CASE("cylinder cross section") {
    const auto cloud = cylinder(20000, 1.0, 55);
    const auto c = fitted_axis(cloud);
    const auto cs = fit_cross_section(c, cloud, 0.5, 0.1, 0.12);
    CHECK(cs.ellipse.semi_major >= 0.85);
    CHECK(cs.ellipse.semi_major <= 1.05);
    CHECK(cs.ellipse.semi_minor >= 0.85);
    CHECK(cs.ellipse.semi_minor <= 1.05);
    double s = 0.0;
    for (double w : cs.weights) {
        s += w;
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
    CHECK(cs.member_indices.size() == cs.weights.size());

    const Mat2 scaled = level_set_scale(0.12) * cs.sigma;
    Eigen::SelfAdjointEigenSolver<Mat2> es(scaled);
    CHECK(cs.ellipse.semi_major == doctest::Approx(std::sqrt(es.eigenvalues()(1))));
    CHECK(cs.ellipse.semi_minor == doctest::Approx(std::sqrt(es.eigenvalues()(0))));

    const auto lower = cs.with_alpha(0.5);
    CHECK(lower.ellipse.semi_major < cs.ellipse.semi_major);
    CHECK(lower.sigma == cs.sigma);
}

TEST_CASE("points on the centerline give a degenerate covariance") {
    std::vector<Point3> pts;
    for (int i = 0; i <= 200; ++i) {
        pts.push_back(z_axis(i / 200.0));
    }
    const PointCloud cloud(pts);
    const auto c = fitted_axis(cloud);
    try {
        fit_cross_section(c, cloud, 0.5, 0.1, 0.1);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateCovariance);
        CHECK(std::string(e.what()).find("t0 = 0.5") != std::string::npos);
    }
}

TEST_CASE("embed_ellipse examples") {
    CrossSection cs;
    cs.center = Point3(1, 2, 3);
    cs.sigma = Mat2::Identity() * 0.3;
    cs.ellipse = ellipse_from_covariance(Point2::Zero(), cs.sigma, level_set_scale(0.1));
    for (const auto& p : embed_ellipse(cs, 17)) {
        CHECK(std::abs((p - cs.center).norm() - cs.ellipse.semi_major) < 1e-9);
        CHECK(std::abs(p.z() - 3.0) < 1e-9);
    }

    Mat2 d = Mat2::Zero();
    d(0, 0) = 4.0;
    d(1, 1) = 1.0;
    cs.center = Point3::Zero();
    cs.sigma = d;
    const double c = level_set_scale(0.2);
    cs.ellipse = ellipse_from_covariance(Point2::Zero(), d, c);
    const auto four = embed_ellipse(cs, 4);
    CHECK((four[0] - Point3(std::sqrt(4 * c), 0, 0)).norm() < 1e-9);
    CHECK((four[1] - Point3(0, std::sqrt(c), 0)).norm() < 1e-9);
    CHECK((four[2] - Point3(-std::sqrt(4 * c), 0, 0)).norm() < 1e-9);
    CHECK((four[3] - Point3(0, -std::sqrt(c), 0)).norm() < 1e-9);
}

TEST_CASE("embedded boundary lies in the section plane and round-trips") {
    const auto cloud = cylinder(5000, 1.0, 56);
    auto bent = [](double t) { return Point3(std::sin(2 * t), 0.5 * t * t, 10 * t); };
    const auto c = curve_from_function(bent, 6, assign_latent_times(bent, cloud, 1000));
    const auto cs = fit_cross_section(c, cloud, 0.4, 0.1, 0.1);
    const Vec3 tan = c.tangent(0.4);
    const auto ring = embed_ellipse(cs, 32);
    for (int j = 0; j < 32; ++j) {
        CHECK(std::abs((ring[j] - cs.center).dot(tan)) < 1e-9);
        const Vec3 back = cs.rotation.apply(ring[j] - cs.center);
        CHECK((back.head<2>() - cs.ellipse.boundary(2 * kPi * j / 32)).norm() < 1e-9);
    }
}

// With a straight centerline every point shares one frame, so the section is
// exactly equivariant. Along a bent centerline the per-point minimal rotations
// pick up a roll that depends on the global orientation, and the in-plane
// stack changes slightly.
TEST_CASE("property: rigid motion leaves the section unchanged") {
    std::mt19937_64 rng(58);
    auto bent = [](double t) { return Point3(std::sin(2 * t), 0.5 * t * t, 10 * t); };
    for (bool straight : {true, false}) {
        const auto cloud = cylinder(5000, 1.0, 57);
        std::function<Point3(double)> f = straight ? std::function<Point3(double)>(z_axis)
                                                   : std::function<Point3(double)>(bent);
        const auto times = assign_latent_times(f, cloud, 1000);
        const auto c = curve_from_function(f, 6, times);
        const auto cs = fit_cross_section(c, cloud, 0.5, 0.1, 0.1);
        const double tol = straight ? 1e-6 : 5e-3;
        for (int trial = 0; trial < 3; ++trial) {
            const Mat3 r = Eigen::AngleAxisd(0.7 + trial, random_unit(rng)).toRotationMatrix();
            const Vec3 shift(1, -2, 0.5 * trial);
            auto moved_f = [&](double t) { return Point3(r * f(t) + shift); };
            std::vector<Point3> moved;
            for (const auto& p : cloud.points()) {
                moved.push_back(r * p + shift);
            }
            const PointCloud mc(moved);
            const auto mcurve = curve_from_function(moved_f, 6, times);
            const auto ms = fit_cross_section(mcurve, mc, 0.5, 0.1, 0.1);
            CHECK(std::abs(ms.ellipse.semi_major - cs.ellipse.semi_major) < tol);
            CHECK(std::abs(ms.ellipse.semi_minor - cs.ellipse.semi_minor) < tol);
            CHECK((ms.center - (r * cs.center + shift)).norm() < 1e-6);
        }
    }
}

TEST_CASE("property: area varies smoothly along a dense tube") {
    const auto cloud = cylinder(60000, 1.0, 59, [](double t) { return 1.0 + 0.5 * t; });
    const auto c = fitted_axis(cloud);
    double prev = -1.0;
    for (int k = 20; k <= 180; ++k) {
        const double area = ellipse_area(fit_cross_section(c, cloud, k * 0.005, 0.1, 0.12).ellipse);
        if (prev > 0) {
            REQUIRE(std::abs(area - prev) / prev < 0.25);
        }
        prev = area;
    }
}
