#include "tubefit/evalsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "tubefit/cross_section.hpp"
#include "tubefit/parallel.hpp"
#include "tubefit/simd/kernels.hpp"

namespace tubefit {

namespace {

constexpr double kPi = std::numbers::pi;

struct Box {
    double xmin, xmax, ymin, ymax;
};

simd::QuadForm quadform_from_inverse(const Point2& center, const Mat2& inv) {
    return {center.x(), center.y(), inv(0, 0), 2.0 * inv(0, 1), inv(1, 1)};
}

// Counts of G cells and of Ĝ cells inside/outside G for each level.
std::vector<Overlap> raster_overlaps(const Region& g, const simd::QuadForm& q, const Box& ghat_box,
                                     std::span<const double> levels, int resolution) {
    if (!(g.area > 0.0)) {
        fail(ErrorCode::Domain, "region G has zero area");
    }
    if (resolution < 256) {
        fail(ErrorCode::Precondition, "raster resolution must be at least 256");
    }
    const Box box{std::min(g.xmin, ghat_box.xmin), std::max(g.xmax, ghat_box.xmax),
                  std::min(g.ymin, ghat_box.ymin), std::max(g.ymax, ghat_box.ymax)};
    const auto n = static_cast<std::size_t>(resolution);
    const double hx = (box.xmax - box.xmin) / resolution;
    const double hy = (box.ymax - box.ymin) / resolution;
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = box.xmin + (static_cast<double>(i) + 0.5) * hx;
    }
    const auto& kern = simd::active_kernels();
    const std::size_t nl = levels.size();
    std::vector<std::uint64_t> g_rows(n, 0);
    std::vector<simd::MaskCounts> counts(n * nl);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        std::vector<double> values(n);
        std::vector<std::uint8_t> mask(n);
        for (std::size_t j = begin; j < end; ++j) {
            const double y = box.ymin + (static_cast<double>(j) + 0.5) * hy;
            std::uint64_t gc = 0;
            for (std::size_t i = 0; i < n; ++i) {
                mask[i] = g.contains(xs[i], y) ? 1 : 0;
                gc += mask[i];
            }
            g_rows[j] = gc;
            kern.quadform_row(xs.data(), n, y, q, values.data());
            for (std::size_t l = 0; l < nl; ++l) {
                counts[j * nl + l] = kern.count_below(values.data(), mask.data(), n, levels[l]);
            }
        }
    }, 16);
    const std::uint64_t g_cells = std::accumulate(g_rows.begin(), g_rows.end(), std::uint64_t{0});
    if (g_cells == 0) {
        fail(ErrorCode::Domain, "region G covers no raster cell");
    }
    std::vector<Overlap> out(nl);
    for (std::size_t l = 0; l < nl; ++l) {
        std::uint64_t in = 0;
        std::uint64_t outside = 0;
        for (std::size_t j = 0; j < n; ++j) {
            in += counts[j * nl + l].inside_g;
            outside += counts[j * nl + l].outside_g;
        }
        out[l] = {static_cast<double>(in) / static_cast<double>(g_cells),
                  static_cast<double>(outside) / static_cast<double>(g_cells)};
    }
    return out;
}

Box ellipse_box(const Point2& center, const Mat2& shape, double level) {
    // {d : dᵀ shape⁻¹ d <= level} spans ±sqrt(level * shape_ii) on each axis.
    const double ex = std::sqrt(level * shape(0, 0));
    const double ey = std::sqrt(level * shape(1, 1));
    return {center.x() - ex, center.x() + ex, center.y() - ey, center.y() + ey};
}

Point2 sample_in_region(const Region& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ux(g.xmin, g.xmax);
    std::uniform_real_distribution<double> uy(g.ymin, g.ymax);
    for (;;) {
        const double x = ux(rng);
        const double y = uy(rng);
        if (g.contains(x, y)) {
            return {x, y};
        }
    }
}

} // namespace

Region ellipse_region(const Ellipse2D& e) {
    if (!(e.semi_major > 0.0 && e.semi_minor > 0.0)) {
        fail(ErrorCode::Domain, "ellipse region needs positive semi-axes");
    }
    const double c = std::cos(e.orientation);
    const double s = std::sin(e.orientation);
    const double ex = std::hypot(e.semi_major * c, e.semi_minor * s);
    const double ey = std::hypot(e.semi_major * s, e.semi_minor * c);
    return {[e](double x, double y) { return e.contains({x, y}); },
            e.center.x() - ex, e.center.x() + ex, e.center.y() - ey, e.center.y() + ey, ellipse_area(e)};
}

Region square_region(double side) {
    const double h = 0.5 * side;
    return {[h](double x, double y) { return std::abs(x) <= h && std::abs(y) <= h; }, -h, h, -h, h, side * side};
}

Region u_region(double side) {
    const double h = 0.5 * side;
    const double notch_half = 0.25 * side;
    const double notch_bottom = h - 0.75 * side;
    return {[h, notch_half, notch_bottom](double x, double y) {
                if (std::abs(x) > h || std::abs(y) > h) {
                    return false;
                }
                return !(std::abs(x) < notch_half && y > notch_bottom);
            },
            -h, h, -h, h, side * side - 0.5 * side * 0.75 * side};
}

Region circle_region(double radius) {
    const double r2 = radius * radius;
    return {[r2](double x, double y) { return x * x + y * y <= r2; }, -radius, radius, -radius, radius,
            kPi * r2};
}

Overlap region_overlap(const Region& g, const Ellipse2D& ghat, int resolution) {
    const double a = ghat.semi_major;
    const double b = ghat.semi_minor;
    if (!(a > 0.0 && b > 0.0)) {
        fail(ErrorCode::Domain, "estimated ellipse needs positive semi-axes");
    }
    const Point2 u = ghat.major_axis();
    const Point2 v = ghat.minor_axis();
    const Mat2 inv = u * u.transpose() / (a * a) + v * v.transpose() / (b * b);
    const Mat2 shape = a * a * u * u.transpose() + b * b * v * v.transpose();
    const double level = 1.0;
    return raster_overlaps(g, quadform_from_inverse(ghat.center, inv), ellipse_box(ghat.center, shape, level),
                           std::span<const double>(&level, 1), resolution)[0];
}

std::vector<Overlap> gaussian_overlaps(const Region& g, const Point2& mu, const Mat2& sigma,
                                       std::span<const double> alphas, int resolution) {
    if (alphas.empty()) {
        return {};
    }
    std::vector<double> levels;
    levels.reserve(alphas.size());
    for (double a : alphas) {
        levels.push_back(level_set_scale(a));
    }
    const double det = sigma.determinant();
    if (!(det > 0.0)) {
        fail(ErrorCode::DegenerateCovariance, "covariance is not positive definite");
    }
    const Mat2 inv = sigma.inverse();
    const double top = *std::max_element(levels.begin(), levels.end());
    return raster_overlaps(g, quadform_from_inverse(mu, inv), ellipse_box(mu, sigma, top), levels, resolution);
}

void AlphaSimConfig::validate() const {
    if (!(semi_minor > 0.0 && semi_major >= semi_minor)) {
        fail(ErrorCode::Precondition, "need semi_major >= semi_minor > 0");
    }
    if (!(sigma >= 0.0)) {
        fail(ErrorCode::Precondition, "noise sigma must be nonnegative");
    }
    if (n_points < 3 || n_replicates < 1) {
        fail(ErrorCode::Precondition, "need at least 3 points and 1 replicate");
    }
    if (alpha_grid.empty()) {
        fail(ErrorCode::Precondition, "alpha grid is empty");
    }
    for (double a : alpha_grid) {
        level_set_scale(a);
    }
    if (resolution < 256) {
        fail(ErrorCode::Precondition, "raster resolution must be at least 256");
    }
}

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

TPFPCurve run_alpha_sim(const AlphaSimConfig& config) {
    config.validate();
    const Region g = ellipse_region(Ellipse2D{Point2::Zero(), config.semi_major, config.semi_minor, 0.0});
    const std::size_t na = config.alpha_grid.size();
    const auto reps = static_cast<std::size_t>(config.n_replicates);
    std::vector<std::vector<Overlap>> results(reps);

    parallel_for(reps, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            std::mt19937_64 rng(stream_seed(config.seed, r));
            std::normal_distribution<double> noise(0.0, 1.0);
            std::vector<Point2> pts(static_cast<std::size_t>(config.n_points));
            for (auto& p : pts) {
                p = sample_in_region(g, rng);
                if (config.sigma > 0.0) {
                    p.x() += config.sigma * noise(rng);
                    p.y() += config.sigma * noise(rng);
                }
            }
            const std::vector<double> w(pts.size(), 1.0 / static_cast<double>(pts.size()));
            try {
                const Gaussian2D fit = weighted_gaussian(pts, w);
                results[r] = gaussian_overlaps(g, fit.mu, fit.sigma, config.alpha_grid, config.resolution);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::DegenerateCovariance) {
                    throw;
                }
            }
        }
    }, 1);

    TPFPCurve curve;
    curve.alpha_grid = config.alpha_grid;
    curve.mean_tp.assign(na, 0.0);
    curve.mean_fp.assign(na, 0.0);
    curve.se_tp.assign(na, 0.0);
    curve.se_fp.assign(na, 0.0);
    for (const auto& r : results) {
        if (r.empty()) {
            ++curve.replicates_skipped;
            continue;
        }
        ++curve.replicates_used;
        for (std::size_t l = 0; l < na; ++l) {
            curve.mean_tp[l] += r[l].tp;
            curve.mean_fp[l] += r[l].fp;
        }
    }
    if (curve.replicates_used == 0) {
        fail(ErrorCode::DegenerateCovariance, "every replicate had a degenerate covariance");
    }
    const double n = curve.replicates_used;
    for (std::size_t l = 0; l < na; ++l) {
        curve.mean_tp[l] /= n;
        curve.mean_fp[l] /= n;
    }
    if (curve.replicates_used > 1) {
        for (const auto& r : results) {
            if (r.empty()) {
                continue;
            }
            for (std::size_t l = 0; l < na; ++l) {
                curve.se_tp[l] += (r[l].tp - curve.mean_tp[l]) * (r[l].tp - curve.mean_tp[l]);
                curve.se_fp[l] += (r[l].fp - curve.mean_fp[l]) * (r[l].fp - curve.mean_fp[l]);
            }
        }
        for (std::size_t l = 0; l < na; ++l) {
            curve.se_tp[l] = std::sqrt(curve.se_tp[l] / (n - 1.0) / n);
            curve.se_fp[l] = std::sqrt(curve.se_fp[l] / (n - 1.0) / n);
        }
    }
    return curve;
}

std::string_view to_string(Shape shape) {
    switch (shape) {
    case Shape::Square: return "square";
    case Shape::UShape: return "u_shape";
    case Shape::Circle: return "circle";
    }
    return "unknown";
}

Shape parse_shape(std::string_view name) {
    for (auto s : {Shape::Square, Shape::UShape, Shape::Circle}) {
        if (to_string(s) == name) {
            return s;
        }
    }
    fail(ErrorCode::Input, "unknown shape '" + std::string(name) + "'");
}

Region canonical_region(Shape shape) {
    switch (shape) {
    case Shape::Square: return square_region(2.0);
    case Shape::UShape: return u_region(2.0);
    case Shape::Circle: return circle_region(1.0);
    }
    fail(ErrorCode::Precondition, "unknown shape");
}

void ShapeSimConfig::validate() const {
    level_set_scale(alpha);
    if (points_per_layer < 1 || n_layers < 2) {
        fail(ErrorCode::Precondition, "shape stack needs points and at least two layers");
    }
    if (!(raster_pitch > 0.0)) {
        fail(ErrorCode::Precondition, "raster pitch must be positive");
    }
}

ShapeSimResult run_shape_sim(const ShapeSimConfig& config) {
    config.validate();
    const Region g = canonical_region(config.shape);
    std::mt19937_64 rng(stream_seed(config.seed, 0));
    std::vector<Point3> pts;
    pts.reserve(static_cast<std::size_t>(config.points_per_layer) * static_cast<std::size_t>(config.n_layers));
    Point2 first_centroid = Point2::Zero();
    Point2 last_centroid = Point2::Zero();
    for (int l = 0; l < config.n_layers; ++l) {
        Point2 centroid = Point2::Zero();
        for (int i = 0; i < config.points_per_layer; ++i) {
            const Point2 p = sample_in_region(g, rng);
            centroid += p;
            pts.emplace_back(p.x(), p.y(), static_cast<double>(l));
        }
        centroid /= config.points_per_layer;
        if (l == 0) {
            first_centroid = centroid;
        }
        if (l == config.n_layers - 1) {
            last_centroid = centroid;
        }
    }
    const PointCloud cloud(std::move(pts));

    CurveFitConfig cc;
    cc.start = Point3(first_centroid.x(), first_centroid.y(), 0.0);
    cc.end = Point3(last_centroid.x(), last_centroid.y(), config.n_layers - 1.0);
    cc.final_df = config.final_df;
    cc.seed = config.seed;
    const PrincipalCurve curve = fit_principal_curve(cloud, cc);
    TubeConfig tc = config.tube;
    tc.alpha = config.alpha;
    const Tube tube = fit_tube(curve, cloud, tc);

    // In-plane raster of every layer, padded so over-coverage is counted.
    const double pad = 1.0;
    const auto nx = static_cast<std::size_t>(std::ceil((g.xmax - g.xmin + 2 * pad) / config.raster_pitch));
    const auto ny = static_cast<std::size_t>(std::ceil((g.ymax - g.ymin + 2 * pad) / config.raster_pitch));
    std::vector<Point3> cells;
    std::vector<std::uint8_t> truth;
    cells.reserve(nx * ny * static_cast<std::size_t>(config.n_layers));
    for (int l = 0; l < config.n_layers; ++l) {
        for (std::size_t j = 0; j < ny; ++j) {
            const double y = g.ymin - pad + (static_cast<double>(j) + 0.5) * config.raster_pitch;
            for (std::size_t i = 0; i < nx; ++i) {
                const double x = g.xmin - pad + (static_cast<double>(i) + 0.5) * config.raster_pitch;
                cells.emplace_back(x, y, static_cast<double>(l));
                truth.push_back(g.contains(x, y) ? 1 : 0);
            }
        }
    }
    const std::vector<TubeScore> scores = TubeScorer(tube).score(cells);
    return {classify_scores(scores, truth, config.alpha, tube.slots.size()), tube.valid_count()};
}

void PhantomConfig::validate() const {
    if (!(coil_radius >= 0.0) || !(tube_radius >= 0.0) || !(height > 0.0) || !(pitch > 0.0)) {
        fail(ErrorCode::Precondition, "phantom geometry must be nonnegative with positive height and pitch");
    }
    if (tube_radius_end && !(*tube_radius_end >= 0.0)) {
        fail(ErrorCode::Precondition, "tube radius ramp end must be nonnegative");
    }
    if (coil_radius > 0.0 && !(turns > 0.0)) {
        fail(ErrorCode::Precondition, "coil needs a positive number of turns");
    }
    if (sample_size < 1) {
        fail(ErrorCode::Precondition, "sample size must be positive");
    }
    if (noise == NoiseModel::Poisson && !(noise_level > 0.0 && blur_sigma >= 0.0)) {
        fail(ErrorCode::Precondition, "Poisson noise needs a positive mean level and nonnegative blur");
    }
}

double PhantomConfig::radius_at(double s) const {
    return tube_radius_end ? tube_radius + s * (*tube_radius_end - tube_radius) : tube_radius;
}

Point3 PhantomConfig::helix(double s) const {
    const double phi = 2.0 * kPi * turns * s;
    // + 0.0 keeps a zero coil radius from printing as -0.
    return {coil_radius * std::cos(phi) + 0.0, coil_radius * std::sin(phi) + 0.0, height * s};
}

Vec3 PhantomConfig::helix_derivative(double s) const {
    const double w = 2.0 * kPi * turns;
    const double phi = w * s;
    return {-coil_radius * w * std::sin(phi), coil_radius * w * std::cos(phi), height};
}

double PhantomConfig::helix_length() const {
    return std::hypot(2.0 * kPi * turns * coil_radius, height);
}

std::size_t Phantom::truth_count() const {
    return static_cast<std::size_t>(std::count(truth.begin(), truth.end(), std::uint8_t{1}));
}

namespace {

// Separable Gaussian blur of a lattice volume, sigma in voxels, zero outside.
std::vector<double> blur(const Lattice& lat, std::vector<double> v, double sigma) {
    if (sigma <= 0.0) {
        return v;
    }
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int d = -radius; d <= radius; ++d) {
        const double k = std::exp(-0.5 * d * d / (sigma * sigma));
        kernel[static_cast<std::size_t>(d + radius)] = k;
        total += k;
    }
    for (auto& k : kernel) {
        k /= total;
    }
    std::vector<double> tmp(v.size());
    for (int axis = 0; axis < 3; ++axis) {
        const int len = lat.dims[static_cast<std::size_t>(axis)];
        for (std::size_t idx = 0; idx < v.size(); ++idx) {
            auto c = lat.coords(idx);
            const int c0 = c[static_cast<std::size_t>(axis)];
            double acc = 0.0;
            for (int d = -radius; d <= radius; ++d) {
                const int p = c0 + d;
                if (p < 0 || p >= len) {
                    continue;
                }
                c[static_cast<std::size_t>(axis)] = p;
                acc += kernel[static_cast<std::size_t>(d + radius)] * v[lat.index(c[0], c[1], c[2])];
            }
            tmp[idx] = acc;
        }
        v.swap(tmp);
    }
    return v;
}

} // namespace

Phantom generate_coil_phantom(const PhantomConfig& config) {
    config.validate();
    const double rmax = std::max(config.tube_radius, config.tube_radius_end.value_or(config.tube_radius));
    const double margin = rmax + config.pitch * (2.0 + 3.0 * config.blur_sigma);
    Point3 lo = Point3::Constant(std::numeric_limits<double>::infinity());
    Point3 hi = -lo;

    // Dense centreline samples: coarse nearest-sample search, then a local refine.
    const int n_dense = std::max(2000, static_cast<int>(std::ceil(4.0 * config.helix_length() / config.pitch)));
    const CurveSamples dense = sample_curve([&](double s) { return config.helix(s); }, n_dense);
    for (std::size_t k = 0; k < dense.size(); ++k) {
        lo = lo.cwiseMin(dense.point(k));
        hi = hi.cwiseMax(dense.point(k));
    }
    lo.array() -= margin;
    hi.array() += margin;
    lo = (lo / config.pitch).array().floor() * config.pitch;

    Phantom ph;
    ph.lattice.pitch = config.pitch;
    ph.lattice.origin = lo;
    for (int a = 0; a < 3; ++a) {
        ph.lattice.dims[static_cast<std::size_t>(a)] =
            static_cast<int>(std::floor((hi[a] - lo[a]) / config.pitch)) + 1;
    }
    ph.start = config.helix(0.0);
    ph.end = config.helix(1.0);
    const std::size_t nvox = ph.lattice.size();
    ph.truth.assign(nvox, 0);

    const auto& kern = simd::active_kernels();
    const Vec3 d0 = config.helix_derivative(0.0);
    const Vec3 d1 = config.helix_derivative(1.0);
    parallel_for(nvox, [&](std::size_t begin, std::size_t end) {
        for (std::size_t idx = begin; idx < end; ++idx) {
            const Point3 v = ph.lattice.center(idx);
            const std::size_t k = kern.nearest_sample(dense.x.data(), dense.y.data(), dense.z.data(),
                                                      dense.size(), v.x(), v.y(), v.z());
            // Golden-section refine of |v - h(s)|² on the neighbouring cells.
            double a = std::max(0.0, dense.t(k) - 1.0 / n_dense);
            double b = std::min(1.0, dense.t(k) + 1.0 / n_dense);
            const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
            auto dist2 = [&](double s) { return (v - config.helix(s)).squaredNorm(); };
            double c = b - gr * (b - a);
            double d = a + gr * (b - a);
            double fc = dist2(c);
            double fd = dist2(d);
            for (int it = 0; it < 40; ++it) {
                if (fc <= fd) {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - gr * (b - a);
                    fc = dist2(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + gr * (b - a);
                    fd = dist2(d);
                }
            }
            const double s = 0.5 * (a + b);
            const double r = config.radius_at(s);
            // Flat caps: a foot at either end only counts on the inner side.
            const double end_zone = 2.0 / n_dense;
            if ((s < end_zone && (v - ph.start).dot(d0) < 0.0) ||
                (s > 1.0 - end_zone && (v - ph.end).dot(d1) > 0.0)) {
                continue;
            }
            if (dist2(s) <= r * r) {
                ph.truth[idx] = 1;
            }
        }
    }, 1024);
    if (ph.truth_count() == 0) {
        fail(ErrorCode::Domain, "phantom truth is empty; tube radius too small for the pitch");
    }

    if (config.noise == NoiseModel::None) {
        ph.observed = ph.truth;
        ph.image.assign(ph.truth.begin(), ph.truth.end());
    } else {
        std::vector<double> expected(ph.truth.begin(), ph.truth.end());
        expected = blur(ph.lattice, std::move(expected), config.blur_sigma);
        std::mt19937_64 rng(stream_seed(config.seed, 1));
        ph.image.resize(nvox);
        ph.observed.resize(nvox);
        for (std::size_t i = 0; i < nvox; ++i) {
            const double mean = config.noise_level * expected[i];
            double count = 0.0;
            if (mean > 0.0) {
                std::poisson_distribution<long> pois(mean);
                count = static_cast<double>(pois(rng));
            }
            ph.image[i] = count / config.noise_level;
            ph.observed[i] = ph.image[i] >= 0.5 ? 1 : 0;
        }
    }

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < nvox; ++i) {
        if (ph.observed[i]) {
            candidates.push_back(i);
        }
    }
    if (candidates.empty()) {
        fail(ErrorCode::EmptyInput, "noisy phantom image has no voxel above threshold");
    }
    std::mt19937_64 rng(stream_seed(config.seed, 0));
    std::sample(candidates.begin(), candidates.end(), std::back_inserter(ph.sampled_voxels),
                config.sample_size, rng);
    std::vector<Point3> pts;
    std::vector<double> values;
    for (std::size_t i : ph.sampled_voxels) {
        pts.push_back(ph.lattice.center(i));
        values.push_back(ph.image[i]);
    }
    ph.cloud = PointCloud(std::move(pts), std::move(values));
    return ph;
}

std::vector<std::uint8_t> boundary_band(const Lattice& lattice, std::span<const std::uint8_t> truth,
                                        int radius) {
    if (truth.size() != lattice.size()) {
        fail(ErrorCode::Precondition, "truth mask does not match the lattice");
    }
    std::vector<std::array<int, 3>> offsets;
    for (int dz = -radius; dz <= radius; ++dz) {
        for (int dy = -radius; dy <= radius; ++dy) {
            for (int dx = -radius; dx <= radius; ++dx) {
                if (dx * dx + dy * dy + dz * dz <= radius * radius) {
                    offsets.push_back({dx, dy, dz});
                }
            }
        }
    }
    std::vector<std::uint8_t> band(truth.size(), 0);
    parallel_for(truth.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t idx = begin; idx < end; ++idx) {
            const auto c = lattice.coords(idx);
            for (const auto& o : offsets) {
                const int i = c[0] + o[0];
                const int j = c[1] + o[1];
                const int k = c[2] + o[2];
                if (i < 0 || j < 0 || k < 0 || i >= lattice.dims[0] || j >= lattice.dims[1] ||
                    k >= lattice.dims[2]) {
                    continue;
                }
                if (truth[lattice.index(i, j, k)] != truth[idx]) {
                    band[idx] = 1;
                    break;
                }
            }
        }
    }, 1024);
    return band;
}

CurveFitConfig default_phantom_curve_config(std::uint64_t seed) {
    CurveFitConfig c;
    c.final_df = 10;
    c.df_schedule = {8, 9, 10};
    c.seed = seed;
    return c;
}

TubeConfig default_phantom_tube_config() {
    TubeConfig t;
    t.t_r = 0.05;
    t.alpha = 0.1;
    return t;
}

PhantomValidation run_phantom_validation(const Phantom& phantom, CurveFitConfig curve_config,
                                         TubeConfig tube_config, std::span<const double> alpha_grid) {
    if (alpha_grid.empty()) {
        fail(ErrorCode::Precondition, "alpha grid is empty");
    }
    curve_config.start = phantom.start;
    curve_config.end = phantom.end;
    const PrincipalCurve curve = fit_principal_curve(phantom.cloud, curve_config);
    tube_config.alpha = alpha_grid.front();
    const Tube tube = fit_tube(curve, fitted_cloud(curve, phantom.cloud), tube_config);

    std::vector<Point3> centers(phantom.lattice.size());
    for (std::size_t i = 0; i < centers.size(); ++i) {
        centers[i] = phantom.lattice.center(i);
    }
    const std::vector<TubeScore> scores = TubeScorer(tube).score(centers);
    const std::vector<std::uint8_t> band = boundary_band(phantom.lattice, phantom.truth);

    PhantomValidation out;
    out.truth_count = phantom.truth_count();
    out.valid_sections = tube.valid_count();
    for (double alpha : alpha_grid) {
        PhantomValidationRow row;
        row.alpha = alpha;
        row.result = classify_scores(scores, phantom.truth, alpha, tube.slots.size());
        const double level = level_set_scale(alpha);
        std::size_t wrong = 0;
        std::size_t near = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const bool inside = scores[i].mahalanobis2 <= level;
            if (inside != (phantom.truth[i] != 0)) {
                ++wrong;
                near += band[i];
            }
        }
        row.boundary_fraction = wrong == 0 ? 1.0 : static_cast<double>(near) / static_cast<double>(wrong);
        out.rows.push_back(std::move(row));
    }
    return out;
}

} // namespace tubefit
