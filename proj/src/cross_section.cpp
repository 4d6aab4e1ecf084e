#include "tubefit/cross_section.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace tubefit {

CrossSection CrossSection::with_alpha(double new_alpha) const {
    CrossSection out = *this;
    out.alpha = new_alpha;
    out.ellipse = ellipse_from_covariance(mu, sigma, level_set_scale(new_alpha));
    return out;
}

double CrossSection::mahalanobis2(const Point2& p) const {
    const Point2 d = p - mu;
    return d.dot(sigma.ldlt().solve(d));
}

Vec3 CrossSection::to_frame(const Point3& p) const {
    return rotation.apply(p - center);
}

std::vector<std::size_t> t_window(std::span<const double> latent_times, double t0, double t_r) {
    if (!(t_r > 0.0)) {
        fail(ErrorCode::Precondition, "time window half-width must be positive");
    }
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < latent_times.size(); ++i) {
        if (std::abs(t0 - latent_times[i]) < t_r) {
            idx.push_back(i);
        }
    }
    if (idx.empty()) {
        std::ostringstream msg;
        msg << "no points within " << t_r << " of t0 = " << t0;
        fail(ErrorCode::EmptyNeighborhood, msg.str());
    }
    return idx;
}

Point2 project_to_plane(const Point3& point, double t_point, const PrincipalCurve& curve) {
    const Rotation3 a = minimal_rotation_to_z(curve.tangent(t_point));
    const Vec3 local = a.apply(point - curve.point(t_point));
    return local.head<2>();
}

std::vector<double> cosine_weights(std::span<const double> window_times, double t0, double r) {
    if (!(r > 0.0)) {
        fail(ErrorCode::Precondition, "window half-width must be positive");
    }
    std::vector<double> w(window_times.size());
    double total = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        const double d = window_times[j] - t0;
        if (!(std::abs(d) < r)) {
            fail(ErrorCode::Precondition, "time outside the window passed to cosine_weights");
        }
        w[j] = std::cos(d * std::numbers::pi / r) + 1.0;
        total += w[j];
    }
    if (!(total > 0.0)) {
        fail(ErrorCode::DegenerateWeights, "all window weights are zero");
    }
    for (double& x : w) {
        x /= total;
    }
    return w;
}

Gaussian2D weighted_gaussian(std::span<const Point2> points, std::span<const double> weights) {
    if (points.size() != weights.size()) {
        fail(ErrorCode::Precondition, "points and weights differ in length");
    }
    std::size_t nonzero = 0;
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) {
            fail(ErrorCode::Precondition, "weights must be nonnegative");
        }
        nonzero += w > 0.0 ? 1 : 0;
        total += w;
    }
    if (nonzero < 3) {
        fail(ErrorCode::Precondition, "at least three points with nonzero weight are required");
    }
    if (std::abs(total - 1.0) > 1e-9) {
        fail(ErrorCode::Precondition, "weights must sum to one");
    }
    Point2 mu = Point2::Zero();
    for (std::size_t j = 0; j < points.size(); ++j) {
        mu += weights[j] * points[j];
    }
    Mat2 sigma = Mat2::Zero();
    for (std::size_t j = 0; j < points.size(); ++j) {
        const Point2 d = points[j] - mu;
        sigma += weights[j] * (d * d.transpose());
    }
    sigma(0, 1) = sigma(1, 0) = 0.5 * (sigma(0, 1) + sigma(1, 0));
    const Eigen::SelfAdjointEigenSolver<Mat2> eig(sigma, Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues()(0) >= kTolerances.min_eigenvalue)) {
        std::ostringstream msg;
        msg << "covariance eigenvalue " << eig.eigenvalues()(0) << " below "
            << kTolerances.min_eigenvalue;
        fail(ErrorCode::DegenerateCovariance, msg.str());
    }
    return {mu, sigma};
}

double level_set_scale(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        fail(ErrorCode::Domain, "alpha must lie in (0, 1)");
    }
    return -2.0 * std::log(alpha);
}

CrossSection fit_cross_section(const PrincipalCurve& curve, const PointCloud& cloud, double t0,
                               double t_r, double alpha) {
    const auto& times = curve.latent_times();
    if (times.size() != cloud.size()) {
        fail(ErrorCode::Precondition, "cloud does not match the curve's latent times");
    }
    const double scale = level_set_scale(alpha);
    CrossSection cs;
    cs.t0 = t0;
    cs.alpha = alpha;
    cs.center = curve.point(t0);
    cs.rotation = minimal_rotation_to_z(curve.tangent(t0));
    cs.member_indices = t_window(times, t0, t_r);

    std::vector<double> wt;
    std::vector<Point2> projected;
    wt.reserve(cs.member_indices.size());
    projected.reserve(cs.member_indices.size());
    for (std::size_t i : cs.member_indices) {
        wt.push_back(times[i]);
        projected.push_back(project_to_plane(cloud[i], times[i], curve));
    }
    cs.weights = cosine_weights(wt, t0, t_r);
    try {
        const Gaussian2D g = weighted_gaussian(projected, cs.weights);
        cs.mu = g.mu;
        cs.sigma = g.sigma;
    } catch (const Error& e) {
        std::ostringstream msg;
        msg << "cross section at t0 = " << t0 << ": " << e.what();
        fail(e.code() == ErrorCode::Precondition ? ErrorCode::InsufficientData : e.code(), msg.str());
    }
    cs.ellipse = ellipse_from_covariance(cs.mu, cs.sigma, scale);
    return cs;
}

std::vector<Point3> embed_ellipse(const CrossSection& cs, int n_boundary) {
    if (n_boundary < 1) {
        fail(ErrorCode::Precondition, "boundary point count must be positive");
    }
    std::vector<Point3> out;
    out.reserve(static_cast<std::size_t>(n_boundary));
    for (int j = 0; j < n_boundary; ++j) {
        const double theta = 2.0 * std::numbers::pi * j / n_boundary;
        const Point2 q = cs.ellipse.boundary(theta);
        out.push_back(cs.center + cs.rotation.apply_inverse(Vec3(q.x(), q.y(), 0.0)));
    }
    return out;
}

} // namespace tubefit
