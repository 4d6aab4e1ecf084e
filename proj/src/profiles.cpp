#include "tubefit/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tubefit/parallel.hpp"

namespace tubefit {

std::string_view to_string(ProfileKind kind) {
    switch (kind) {
    case ProfileKind::Sum: return "sum";
    case ProfileKind::AreaNormalized: return "area_normalized";
    case ProfileKind::WeightedMean: return "weighted_mean";
    case ProfileKind::VoxelNeighborhood: return "voxel_neighborhood";
    case ProfileKind::Slice: return "slice";
    }
    return "unknown";
}

ProfileKind parse_profile_kind(std::string_view name) {
    for (auto k : {ProfileKind::Sum, ProfileKind::AreaNormalized, ProfileKind::WeightedMean,
                   ProfileKind::VoxelNeighborhood, ProfileKind::Slice}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    fail(ErrorCode::Input, "unknown profile kind '" + std::string(name) + "'");
}

namespace {

void check_grid(int grid_resolution) {
    if (grid_resolution < 1) {
        fail(ErrorCode::Precondition, "arc length grid resolution must be positive");
    }
}

void check_time(double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        fail(ErrorCode::Domain, "arc length time must lie in [0, 1]");
    }
}

// Table lookup shared by the single and batch queries so both agree exactly.
double lookup(const std::vector<double>& cum, const std::function<Point3(double)>& f, double t, int g) {
    auto k = static_cast<std::size_t>(std::floor(t * g));
    k = std::min(k, static_cast<std::size_t>(g));
    while (k > 0 && static_cast<double>(k) / g > t) {
        --k;
    }
    const double tk = static_cast<double>(k) / g;
    if (tk == t) {
        return cum[k];
    }
    return cum[k] + (f(t) - f(tk)).norm();
}

} // namespace

std::vector<double> chord_lengths(const std::function<Point3(double)>& f, int grid_resolution) {
    check_grid(grid_resolution);
    std::vector<double> cum(static_cast<std::size_t>(grid_resolution) + 1, 0.0);
    Point3 prev = f(0.0);
    for (int k = 1; k <= grid_resolution; ++k) {
        const Point3 cur = f(static_cast<double>(k) / grid_resolution);
        cum[static_cast<std::size_t>(k)] = cum[static_cast<std::size_t>(k) - 1] + (cur - prev).norm();
        prev = cur;
    }
    return cum;
}

double arc_length(const std::function<Point3(double)>& f, double t, int grid_resolution) {
    check_time(t);
    return lookup(chord_lengths(f, grid_resolution), f, t, grid_resolution);
}

double arc_length(const PrincipalCurve& curve, double t, int grid_resolution) {
    return arc_length([&curve](double s) { return curve.point(s); }, t, grid_resolution);
}

std::vector<double> arc_lengths(const PrincipalCurve& curve, std::span<const double> ts,
                                int grid_resolution) {
    for (double t : ts) {
        check_time(t);
    }
    const std::function<Point3(double)> f = [&curve](double s) { return curve.point(s); };
    const std::vector<double> cum = chord_lengths(f, grid_resolution);
    std::vector<double> out;
    out.reserve(ts.size());
    for (double t : ts) {
        out.push_back(lookup(cum, f, t, grid_resolution));
    }
    return out;
}

Profile concentration_profile(const Tube& tube, const PointCloud& cloud, ProfileKind kind,
                              int grid_resolution) {
    if (kind != ProfileKind::Sum && kind != ProfileKind::AreaNormalized && kind != ProfileKind::WeightedMean) {
        fail(ErrorCode::Precondition, "concentration profile kind must be sum, area_normalized or weighted_mean");
    }
    if (!cloud.has_intensities()) {
        fail(ErrorCode::Input, "concentration profile needs intensities");
    }
    if (cloud.size() != tube.curve.latent_times().size()) {
        fail(ErrorCode::Precondition, "cloud does not match the curve's latent times");
    }
    const auto c = cloud.intensities();
    Profile p;
    p.kind = kind;
    for (const auto& slot : tube.slots) {
        p.t0s.push_back(slot.t0);
    }
    p.distances = arc_lengths(tube.curve, p.t0s, grid_resolution);
    p.values.resize(tube.slots.size());
    parallel_for(tube.slots.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const auto& s = tube.slots[k].section;
            if (!s) {
                continue;
            }
            double v = 0.0;
            for (std::size_t j = 0; j < s->member_indices.size(); ++j) {
                const double cj = c[s->member_indices[j]];
                v += kind == ProfileKind::WeightedMean ? s->weights[j] * cj : cj;
            }
            if (kind == ProfileKind::AreaNormalized) {
                v /= ellipse_area(s->ellipse);
            }
            p.values[k] = v;
        }
    }, 1);
    return p;
}

Profile voxel_neighborhood_profile(const PrincipalCurve& curve, const PointCloud& cloud, double edge,
                                   int n_points, int grid_resolution) {
    if (!(edge > 0.0)) {
        fail(ErrorCode::Precondition, "cube edge must be positive");
    }
    if (n_points < 1) {
        fail(ErrorCode::Precondition, "profile needs at least one point");
    }
    const auto c = cloud.intensities();
    Profile p;
    p.kind = ProfileKind::VoxelNeighborhood;
    for (int k = 0; k < n_points; ++k) {
        p.t0s.push_back(n_points == 1 ? 0.5 : static_cast<double>(k) / (n_points - 1));
    }
    p.distances = arc_lengths(curve, p.t0s, grid_resolution);
    p.values.resize(p.t0s.size());
    const double half = 0.5 * edge;
    parallel_for(p.t0s.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const Point3 centre = curve.point(p.t0s[k]);
            double v = 0.0;
            for (std::size_t i = 0; i < cloud.size(); ++i) {
                const Vec3 d = (cloud[i] - centre).cwiseAbs();
                if (d.x() <= half && d.y() <= half && d.z() <= half) {
                    v += c.empty() ? 1.0 : c[i];
                }
            }
            p.values[k] = v;
        }
    }, 1);
    return p;
}

Profile slice_profile(const PointCloud& cloud, int axis, double window) {
    if (cloud.empty()) {
        fail(ErrorCode::EmptyInput, "slice profile needs a nonempty cloud");
    }
    if (axis < 0 || axis > 2) {
        fail(ErrorCode::Precondition, "slice axis must be 0, 1 or 2");
    }
    if (!(window > 0.0)) {
        fail(ErrorCode::Precondition, "slice window must be positive");
    }
    const auto c = cloud.intensities();
    double lo = cloud[0][axis];
    double hi = lo;
    for (const auto& q : cloud.points()) {
        lo = std::min(lo, q[axis]);
        hi = std::max(hi, q[axis]);
    }
    const auto n_slabs = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi - lo) / window)));
    std::vector<double> sum(n_slabs, 0.0);
    std::vector<std::size_t> count(n_slabs, 0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        auto b = static_cast<std::size_t>((cloud[i][axis] - lo) / window);
        b = std::min(b, n_slabs - 1);
        sum[b] += c.empty() ? 1.0 : c[i];
        ++count[b];
    }
    Profile p;
    p.kind = ProfileKind::Slice;
    for (std::size_t b = 0; b < n_slabs; ++b) {
        const double centre = lo + window * (static_cast<double>(b) + 0.5);
        p.t0s.push_back(centre);
        p.distances.push_back(centre);
        if (count[b] > 0) {
            p.values.emplace_back(sum[b] / static_cast<double>(count[b]));
        } else {
            p.values.emplace_back(std::nullopt);
        }
    }
    return p;
}

Profile normalize_max(Profile profile) {
    double m = 0.0;
    for (const auto& v : profile.values) {
        if (v) {
            m = std::max(m, *v);
        }
    }
    if (m > 0.0) {
        for (auto& v : profile.values) {
            if (v) {
                *v /= m;
            }
        }
    }
    profile.normalized = true;
    return profile;
}

} // namespace tubefit
