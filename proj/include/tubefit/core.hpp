#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tubefit/error.hpp"

namespace tubefit {

using Point3 = Eigen::Vector3d;
using Point2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Geometric tolerances shared by every module.
struct Tolerances {
    double unit_norm = 1e-8;         ///< accepted deviation of |tangent| from 1
    double antipodal = 1e-9;         ///< tangent·z below -1 + this uses the fixed flip
    double orthogonality = 1e-10;    ///< Rotation3 checks
    double singular_gradient = 1e-10;
    double min_eigenvalue = 1e-12;   ///< covariance eigenvalue floor
    double knot_spacing = 1e-6;      ///< minimal spacing between tied quantile knots
    double ridge = 1e-10;            ///< normal-equation jitter after a failed factorization
};

inline constexpr Tolerances kTolerances{};

/// Observed image sample: points with optional nonnegative intensities.
class PointCloud {
public:
    PointCloud() = default;
    explicit PointCloud(std::vector<Point3> points);
    PointCloud(std::vector<Point3> points, std::vector<double> intensities);

    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }
    bool has_intensities() const noexcept { return intensities_.has_value(); }

    const std::vector<Point3>& points() const noexcept { return points_; }
    const Point3& operator[](std::size_t i) const { return points_[i]; }
    /// Empty span when the cloud carries no intensities.
    std::span<const double> intensities() const noexcept;

    /// Sub-cloud in the given index order.
    PointCloud select(std::span<const std::size_t> indices) const;

private:
    std::vector<Point3> points_;
    std::optional<std::vector<double>> intensities_;
};

/// Proper rotation of R^3.
class Rotation3 {
public:
    Rotation3() : m_(Mat3::Identity()) {}
    /// Throws Precondition when the matrix is not orthogonal with det +1.
    explicit Rotation3(const Mat3& m);

    const Mat3& matrix() const noexcept { return m_; }
    Vec3 apply(const Vec3& v) const { return m_ * v; }
    Vec3 apply_inverse(const Vec3& v) const { return m_.transpose() * v; }
    Rotation3 inverse() const { return Rotation3(m_.transpose(), Unchecked{}); }

private:
    struct Unchecked {};
    Rotation3(const Mat3& m, Unchecked) : m_(m) {}
    Mat3 m_;
};

struct Ellipse2D {
    Point2 center = Point2::Zero();
    double semi_major = 1.0;
    double semi_minor = 1.0;
    double orientation = 0.0;  ///< major-axis angle in [0, pi)

    double eccentricity() const;
    Point2 major_axis() const;
    Point2 minor_axis() const;
    /// Boundary point at parameter angle theta.
    Point2 boundary(double theta) const;
    bool contains(const Point2& p) const;
};

/// Rotation taking `tangent` onto +z by the smallest angle. A tangent
/// (anti)parallel to -z maps through the half-turn about x.
Rotation3 minimal_rotation_to_z(const Vec3& tangent);

double ellipse_area(const Ellipse2D& e);

/// Ellipse {p : (p - mean)^T cov^-1 (p - mean) <= scale}. Requires cov
/// positive definite.
Ellipse2D ellipse_from_covariance(const Point2& mean, const Mat2& cov, double scale);

} // namespace tubefit
