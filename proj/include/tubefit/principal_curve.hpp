#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tubefit/core.hpp"
#include "tubefit/spline.hpp"

namespace tubefit {

struct CurveFitConfig {
    Point3 start = Point3::Zero();
    Point3 end = Point3::UnitX();
    int final_df = 5;
    /// Strictly increasing, ending at final_df. Empty means 4, 5, ..., final_df.
    std::vector<int> df_schedule;
    int grid_resolution = 1000;
    /// Exponent on normalized intensities. Defaults to 1 with intensities, else 0.
    std::optional<double> intensity_exponent;
    double rel_mse_tol = 1e-4;
    int max_iter_per_stage = 50;
    /// Fit on m points drawn uniformly without replacement.
    std::optional<std::size_t> subsample;
    std::uint64_t seed = 0;

    std::vector<int> resolved_schedule() const;
    void validate() const;
};

struct StageIteration {
    int df = 0;
    int iteration = 0;
    double mse = 0.0;
};

/// Curve sampled on the uniform grid {0, 1/G, ..., 1}, stored as SoA.
struct CurveSamples {
    int resolution = 0;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> z;

    double t(std::size_t k) const { return static_cast<double>(k) / resolution; }
    Point3 point(std::size_t k) const { return {x[k], y[k], z[k]}; }
    std::size_t size() const noexcept { return x.size(); }
};

CurveSamples sample_curve(const std::function<Point3(double)>& f, int grid_resolution);

/// Fitted centerline f(t) = (fx(t), fy(t), fz(t)) over t in [0, 1].
class PrincipalCurve {
public:
    PrincipalCurve(CoordinateSpline fx, CoordinateSpline fy, CoordinateSpline fz,
                   std::vector<double> latent_times, int grid_resolution);

    const CoordinateSpline& fx() const noexcept { return fx_; }
    const CoordinateSpline& fy() const noexcept { return fy_; }
    const CoordinateSpline& fz() const noexcept { return fz_; }
    const std::vector<double>& latent_times() const noexcept { return latent_times_; }
    int final_df() const noexcept { return fx_.df(); }
    int grid_resolution() const noexcept { return grid_resolution_; }

    Point3 point(double t) const;
    Vec3 derivative(double t) const;
    /// Unit tangent; throws SingularTangent when the derivative vanishes.
    Vec3 tangent(double t) const;

    /// Grid samples at the curve's own resolution, cached at construction.
    const CurveSamples& samples() const noexcept { return samples_; }

    /// True when some coordinate derivative exceeds `eps` at every grid t.
    bool is_allowable(int grid = 1000, double eps = 1e-8) const;

    // Fit provenance.
    std::vector<std::size_t> sample_indices;  ///< empty when every input point was used
    std::vector<StageIteration> history;
    std::uint64_t seed = 0;

private:
    CoordinateSpline fx_;
    CoordinateSpline fy_;
    CoordinateSpline fz_;
    std::vector<double> latent_times_;
    int grid_resolution_;
    CurveSamples samples_;
};

/// Grid argmin of |f(t) - p| for each point, ties toward the smaller t.
std::vector<double> assign_latent_times(const CurveSamples& samples, std::span<const Point3> points);
std::vector<double> assign_latent_times(const std::function<Point3(double)>& f,
                                        const PointCloud& cloud, int grid_resolution);

/// Blocked fit alternating latent-time assignment and constrained spline
/// refits over the df schedule.
PrincipalCurve fit_principal_curve(const PointCloud& cloud, const CurveFitConfig& config);

/// The points the curve was fitted on (the subsample, or the whole cloud).
PointCloud fitted_cloud(const PrincipalCurve& curve, const PointCloud& original);

inline Point3 curve_point(const PrincipalCurve& curve, double t) { return curve.point(t); }
inline Vec3 curve_tangent(const PrincipalCurve& curve, double t) { return curve.tangent(t); }

} // namespace tubefit
