#pragma once

#include <span>
#include <vector>

#include "tubefit/core.hpp"
#include "tubefit/principal_curve.hpp"

namespace tubefit {

/// One tube slice estimated at latent time t0.
struct CrossSection {
    double t0 = 0.0;
    Point3 center = Point3::Zero();  ///< f(t0)
    Rotation3 rotation;              ///< minimal rotation taking the tangent at t0 to +z
    Point2 mu = Point2::Zero();
    Mat2 sigma = Mat2::Identity();
    double alpha = 0.1;
    Ellipse2D ellipse;               ///< level set with normal mass 1 - alpha
    std::vector<std::size_t> member_indices;
    std::vector<double> weights;

    /// Same slice with the level recomputed for another alpha.
    CrossSection with_alpha(double new_alpha) const;
    /// Squared Mahalanobis distance of an in-plane point from mu.
    double mahalanobis2(const Point2& p) const;
    /// Plane coordinates (x, y) and axial offset z of a 3D point in this frame.
    Vec3 to_frame(const Point3& p) const;
};

/// Indices i with |t0 - t_i| < t_r, ascending. Throws EmptyNeighborhood.
std::vector<std::size_t> t_window(std::span<const double> latent_times, double t0, double t_r);

/// A * (P - f(t_point)) with A the minimal rotation for the tangent at
/// t_point; the axial coordinate is dropped.
Point2 project_to_plane(const Point3& point, double t_point, const PrincipalCurve& curve);

/// Normalized raised-cosine weights cos((t - t0) pi / r) + 1.
std::vector<double> cosine_weights(std::span<const double> window_times, double t0, double r);

struct Gaussian2D {
    Point2 mu;
    Mat2 sigma;
};

/// Weighted mean and covariance of in-plane points; weights must sum to 1.
Gaussian2D weighted_gaussian(std::span<const Point2> points, std::span<const double> weights);

/// Mahalanobis-squared radius enclosing normal mass 1 - alpha in 2D: -2 ln(alpha).
double level_set_scale(double alpha);

/// Window selection, per-point projection, cosine weighting, Gaussian fit and
/// level-set ellipse at t0.
CrossSection fit_cross_section(const PrincipalCurve& curve, const PointCloud& cloud, double t0,
                               double t_r, double alpha);

/// n points on the ellipse boundary mapped back to 3D.
std::vector<Point3> embed_ellipse(const CrossSection& cs, int n_boundary);

} // namespace tubefit
