#include "tubefit/principal_curve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "tubefit/parallel.hpp"
#include "tubefit/simd/kernels.hpp"

namespace tubefit {

std::vector<int> CurveFitConfig::resolved_schedule() const {
    if (!df_schedule.empty()) {
        return df_schedule;
    }
    std::vector<int> schedule;
    for (int k = std::min(4, final_df); k <= final_df; ++k) {
        schedule.push_back(k);
    }
    return schedule;
}

void CurveFitConfig::validate() const {
    if (!start.allFinite() || !end.allFinite()) {
        fail(ErrorCode::Precondition, "curve endpoints must be finite");
    }
    if (final_df < 4) {
        fail(ErrorCode::Precondition, "final df must be at least 4");
    }
    const std::vector<int> schedule = resolved_schedule();
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (schedule[i] < 2 || (i > 0 && schedule[i] <= schedule[i - 1])) {
            fail(ErrorCode::Precondition, "df schedule must be strictly increasing and >= 2");
        }
    }
    if (schedule.back() != final_df) {
        fail(ErrorCode::Precondition, "df schedule must end at the final df");
    }
    if (grid_resolution < 100) {
        fail(ErrorCode::Precondition, "grid resolution must be at least 100");
    }
    if (!(rel_mse_tol > 0.0)) {
        fail(ErrorCode::Precondition, "relative MSE tolerance must be positive");
    }
    if (max_iter_per_stage < 1) {
        fail(ErrorCode::Precondition, "max iterations per stage must be positive");
    }
    if (intensity_exponent && !(*intensity_exponent >= 0.0)) {
        fail(ErrorCode::Precondition, "intensity exponent must be nonnegative");
    }
    if (subsample && *subsample == 0) {
        fail(ErrorCode::Precondition, "subsample size must be positive");
    }
}

CurveSamples sample_curve(const std::function<Point3(double)>& f, int grid_resolution) {
    CurveSamples s;
    s.resolution = grid_resolution;
    const auto n = static_cast<std::size_t>(grid_resolution) + 1;
    s.x.resize(n);
    s.y.resize(n);
    s.z.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Point3 p = f(s.t(k));
        s.x[k] = p.x();
        s.y[k] = p.y();
        s.z[k] = p.z();
    }
    return s;
}

PrincipalCurve::PrincipalCurve(CoordinateSpline fx, CoordinateSpline fy, CoordinateSpline fz,
                               std::vector<double> latent_times, int grid_resolution)
    : fx_(std::move(fx)), fy_(std::move(fy)), fz_(std::move(fz)),
      latent_times_(std::move(latent_times)), grid_resolution_(grid_resolution) {
    if (grid_resolution_ < 1) {
        fail(ErrorCode::Precondition, "grid resolution must be positive");
    }
    for (double t : latent_times_) {
        if (!(t >= 0.0 && t <= 1.0)) {
            fail(ErrorCode::Precondition, "latent times must lie in [0, 1]");
        }
    }
    samples_ = sample_curve([this](double t) { return point(t); }, grid_resolution_);
}

Point3 PrincipalCurve::point(double t) const {
    return {fx_.value(t), fy_.value(t), fz_.value(t)};
}

Vec3 PrincipalCurve::derivative(double t) const {
    return {fx_.derivative(t), fy_.derivative(t), fz_.derivative(t)};
}

Vec3 PrincipalCurve::tangent(double t) const {
    const Vec3 d = derivative(t);
    const double norm = d.norm();
    if (!(norm > kTolerances.singular_gradient)) {
        fail(ErrorCode::SingularTangent, "curve gradient vanishes at t = " + std::to_string(t));
    }
    return d / norm;
}

bool PrincipalCurve::is_allowable(int grid, double eps) const {
    for (int k = 0; k <= grid; ++k) {
        if (derivative(static_cast<double>(k) / grid).cwiseAbs().maxCoeff() <= eps) {
            return false;
        }
    }
    return true;
}

std::vector<double> assign_latent_times(const CurveSamples& samples, std::span<const Point3> points) {
    std::vector<double> ts(points.size());
    const simd::NearestSampleFn nearest = simd::active_kernels().nearest_sample;
    parallel_for(points.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Point3& p = points[i];
            const std::size_t k = nearest(samples.x.data(), samples.y.data(), samples.z.data(),
                                          samples.size(), p.x(), p.y(), p.z());
            ts[i] = samples.t(k);
        }
    });
    return ts;
}

std::vector<double> assign_latent_times(const std::function<Point3(double)>& f,
                                        const PointCloud& cloud, int grid_resolution) {
    if (grid_resolution < 1) {
        fail(ErrorCode::Precondition, "grid resolution must be positive");
    }
    return assign_latent_times(sample_curve(f, grid_resolution), cloud.points());
}

namespace {

std::vector<double> spline_weights(const PointCloud& cloud, double gamma) {
    std::vector<double> w(cloud.size(), 1.0);
    if (!cloud.has_intensities() || gamma == 0.0) {
        return w;
    }
    const auto c = cloud.intensities();
    const double mean = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
    if (!(mean > 0.0)) {
        fail(ErrorCode::Input, "intensity weighting needs a positive mean intensity");
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = std::pow(c[i] / mean, gamma);
    }
    return w;
}

double weighted_mse(const CurveSamples& samples, std::span<const Point3> points,
                    std::span<const double> ts, std::span<const double> w) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto k = static_cast<std::size_t>(std::llround(ts[i] * samples.resolution));
        num += w[i] * (samples.point(k) - points[i]).squaredNorm();
        den += w[i];
    }
    return num / den;
}

} // namespace

PrincipalCurve fit_principal_curve(const PointCloud& full_cloud, const CurveFitConfig& config) {
    config.validate();
    const std::vector<int> schedule = config.resolved_schedule();

    std::vector<std::size_t> chosen;
    if (config.subsample && *config.subsample < full_cloud.size()) {
        std::vector<std::size_t> all(full_cloud.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        chosen.reserve(*config.subsample);
        std::mt19937_64 rng(config.seed);
        std::sample(all.begin(), all.end(), std::back_inserter(chosen), *config.subsample, rng);
    }
    const PointCloud cloud = chosen.empty() ? full_cloud : full_cloud.select(chosen);
    const std::size_t n = cloud.size();
    if (n < static_cast<std::size_t>(config.final_df + 2)) {
        fail(ErrorCode::InsufficientData, "cloud of " + std::to_string(n) + " points cannot support df " +
                                              std::to_string(config.final_df));
    }

    const double gamma = config.intensity_exponent.value_or(cloud.has_intensities() ? 1.0 : 0.0);
    const std::vector<double> weights = spline_weights(cloud, gamma);
    const auto& pts = cloud.points();

    std::vector<double> xs(n), ys(n), zs(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = pts[i].x();
        ys[i] = pts[i].y();
        zs[i] = pts[i].z();
    }

    // Start from the chord between the endpoints.
    const Vec3 chord = config.end - config.start;
    const double chord2 = chord.squaredNorm();
    std::vector<double> ts(n, 0.5);
    if (chord2 > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            ts[i] = std::clamp((pts[i] - config.start).dot(chord) / chord2, 0.0, 1.0);
        }
    }

    const EndpointValues ex{config.start.x(), config.end.x()};
    const EndpointValues ey{config.start.y(), config.end.y()};
    const EndpointValues ez{config.start.z(), config.end.z()};

    std::vector<StageIteration> history;
    std::optional<CoordinateSpline> fx, fy, fz;
    for (int df : schedule) {
        // Knots stay fixed within a stage so each refit is optimal over one space.
        const SplineBasis basis = SplineBasis::from_quantiles(ts, weights, df);
        double prev_mse = 0.0;
        for (int it = 1; it <= config.max_iter_per_stage; ++it) {
            fx = basis.fit(ts, xs, weights, ex);
            fy = basis.fit(ts, ys, weights, ey);
            fz = basis.fit(ts, zs, weights, ez);
            const CurveSamples samples = sample_curve(
                [&](double t) { return Point3(fx->value(t), fy->value(t), fz->value(t)); },
                config.grid_resolution);
            ts = assign_latent_times(samples, pts);
            const double mse = weighted_mse(samples, pts, ts, weights);
            history.push_back({df, it, mse});
            if (mse == 0.0) {
                break;
            }
            if (it > 1 && std::abs(prev_mse - mse) / prev_mse < config.rel_mse_tol) {
                break;
            }
            prev_mse = mse;
        }
    }

    PrincipalCurve curve(std::move(*fx), std::move(*fy), std::move(*fz), std::move(ts),
                         config.grid_resolution);
    curve.sample_indices = std::move(chosen);
    curve.history = std::move(history);
    curve.seed = config.seed;
    return curve;
}

PointCloud fitted_cloud(const PrincipalCurve& curve, const PointCloud& original) {
    if (curve.sample_indices.empty()) {
        if (original.size() != curve.latent_times().size()) {
            fail(ErrorCode::Input, "cloud size does not match the curve's latent times");
        }
        return original;
    }
    for (std::size_t i : curve.sample_indices) {
        if (i >= original.size()) {
            fail(ErrorCode::Input, "curve sample index exceeds the cloud size");
        }
    }
    return original.select(curve.sample_indices);
}

} // namespace tubefit
