#include "tubefit/core.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace tubefit {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::Precondition: return "precondition";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::DegenerateFit: return "degenerate_fit";
    case ErrorCode::InsufficientData: return "insufficient_data";
    case ErrorCode::SingularTangent: return "singular_tangent";
    case ErrorCode::EmptyNeighborhood: return "empty_neighborhood";
    case ErrorCode::DegenerateWeights: return "degenerate_weights";
    case ErrorCode::DegenerateCovariance: return "degenerate_covariance";
    case ErrorCode::TubeFitFailed: return "tube_fit_failed";
    case ErrorCode::Export: return "export";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::EmptyInput: return "empty_input";
    case ErrorCode::UnsupportedVersion: return "unsupported_version";
    case ErrorCode::Input: return "input";
    case ErrorCode::Io: return "io";
    }
    return "unknown";
}

namespace {

void check_points(const std::vector<Point3>& points) {
    if (points.empty()) {
        fail(ErrorCode::EmptyInput, "point cloud is empty");
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!points[i].allFinite()) {
            fail(ErrorCode::Input, "point " + std::to_string(i) + " has a non-finite coordinate");
        }
    }
}

} // namespace

PointCloud::PointCloud(std::vector<Point3> points) : points_(std::move(points)) {
    check_points(points_);
}

PointCloud::PointCloud(std::vector<Point3> points, std::vector<double> intensities)
    : points_(std::move(points)) {
    check_points(points_);
    if (intensities.size() != points_.size()) {
        fail(ErrorCode::Input, "intensity count " + std::to_string(intensities.size()) +
                                   " does not match point count " + std::to_string(points_.size()));
    }
    for (std::size_t i = 0; i < intensities.size(); ++i) {
        if (!std::isfinite(intensities[i]) || intensities[i] < 0.0) {
            fail(ErrorCode::Input, "intensity " + std::to_string(i) + " is negative or non-finite");
        }
    }
    intensities_ = std::move(intensities);
}

std::span<const double> PointCloud::intensities() const noexcept {
    if (!intensities_) {
        return {};
    }
    return *intensities_;
}

PointCloud PointCloud::select(std::span<const std::size_t> indices) const {
    std::vector<Point3> pts;
    pts.reserve(indices.size());
    for (std::size_t i : indices) {
        pts.push_back(points_.at(i));
    }
    if (!intensities_) {
        return PointCloud(std::move(pts));
    }
    std::vector<double> c;
    c.reserve(indices.size());
    for (std::size_t i : indices) {
        c.push_back((*intensities_)[i]);
    }
    return PointCloud(std::move(pts), std::move(c));
}

Rotation3::Rotation3(const Mat3& m) : m_(m) {
    const double tol = kTolerances.orthogonality;
    const Mat3 gram = m.transpose() * m;
    if (!m.allFinite() || (gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol ||
        std::abs(m.determinant() - 1.0) > tol) {
        fail(ErrorCode::Precondition, "matrix is not a proper rotation");
    }
}

Rotation3 minimal_rotation_to_z(const Vec3& tangent) {
    const double norm = tangent.norm();
    if (!tangent.allFinite() || std::abs(norm - 1.0) > kTolerances.unit_norm) {
        std::ostringstream msg;
        msg << "tangent must be a unit vector (norm " << norm << ")";
        fail(ErrorCode::Precondition, msg.str());
    }
    const Vec3 u = tangent / norm;
    const Vec3 z = Vec3::UnitZ();
    const double c = u.dot(z);
    if (c < -1.0 + kTolerances.antipodal) {
        Mat3 flip = Mat3::Zero();
        flip(0, 0) = 1.0;
        flip(1, 1) = -1.0;
        flip(2, 2) = -1.0;
        return Rotation3(flip);
    }
    // Rodrigues form: R = I + [v]x + [v]x^2 / (1 + c), v = u x z.
    const Vec3 v = u.cross(z);
    Mat3 vx;
    vx << 0.0, -v.z(), v.y(),
          v.z(), 0.0, -v.x(),
          -v.y(), v.x(), 0.0;
    Mat3 r = Mat3::Identity() + vx + (vx * vx) / (1.0 + c);
    // Re-orthonormalize to absorb rounding near the antipodal threshold.
    Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    r = svd.matrixU() * svd.matrixV().transpose();
    return Rotation3(r);
}

double Ellipse2D::eccentricity() const {
    return std::sqrt((semi_major * semi_major - semi_minor * semi_minor) /
                     (semi_major * semi_major));
}

Point2 Ellipse2D::major_axis() const {
    return {std::cos(orientation), std::sin(orientation)};
}

Point2 Ellipse2D::minor_axis() const {
    return {-std::sin(orientation), std::cos(orientation)};
}

Point2 Ellipse2D::boundary(double theta) const {
    return center + semi_major * std::cos(theta) * major_axis() +
           semi_minor * std::sin(theta) * minor_axis();
}

bool Ellipse2D::contains(const Point2& p) const {
    const Point2 d = p - center;
    const double u = d.dot(major_axis()) / semi_major;
    const double v = d.dot(minor_axis()) / semi_minor;
    return u * u + v * v <= 1.0;
}

double ellipse_area(const Ellipse2D& e) {
    return std::numbers::pi * e.semi_major * e.semi_minor;
}

Ellipse2D ellipse_from_covariance(const Point2& mean, const Mat2& cov, double scale) {
    const double a = cov(0, 0);
    const double b = 0.5 * (cov(0, 1) + cov(1, 0));
    const double c = cov(1, 1);
    const double mid = 0.5 * (a + c);
    const double rad = std::hypot(0.5 * (a - c), b);
    const double l1 = mid + rad;
    const double l2 = mid - rad;
    if (!(l2 > 0.0) || !(scale > 0.0)) {
        fail(ErrorCode::DegenerateCovariance, "covariance is not positive definite");
    }
    double angle = 0.5 * std::atan2(2.0 * b, a - c);
    if (angle < 0.0) {
        angle += std::numbers::pi;
    }
    if (angle >= std::numbers::pi) {
        angle -= std::numbers::pi;
    }
    Ellipse2D e;
    e.center = mean;
    e.semi_major = std::sqrt(scale * l1);
    e.semi_minor = std::sqrt(scale * l2);
    e.orientation = angle;
    return e;
}

} // namespace tubefit
