#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tubefit/principal_curve.hpp"
#include "tubefit/tube.hpp"

namespace tubefit {

enum class ProfileKind { Sum, AreaNormalized, WeightedMean, VoxelNeighborhood, Slice };

std::string_view to_string(ProfileKind kind);
/// Accepts sum, area_normalized, weighted_mean, voxel_neighborhood, slice.
ProfileKind parse_profile_kind(std::string_view name);

/// Scalar along the curve; values[k] is empty at a gap.
struct Profile {
    ProfileKind kind = ProfileKind::Sum;
    std::vector<double> t0s;
    std::vector<double> distances;
    std::vector<std::optional<double>> values;
    bool normalized = false;

    std::size_t size() const noexcept { return t0s.size(); }
};

/// Cumulative chord lengths of f over the grid {0, 1/G, ..., 1}.
std::vector<double> chord_lengths(const std::function<Point3(double)>& f, int grid_resolution);

/// Chord-sum length of f on [0, t]: whole grid cells below t plus the last
/// partial chord.
double arc_length(const std::function<Point3(double)>& f, double t, int grid_resolution);
double arc_length(const PrincipalCurve& curve, double t, int grid_resolution);

/// Arc length at many times with one pass over the grid.
std::vector<double> arc_lengths(const PrincipalCurve& curve, std::span<const double> ts,
                                int grid_resolution);

/// Per-section sum, area-normalized sum, or cosine-weighted mean of the
/// intensities of the cloud the tube was fitted on.
Profile concentration_profile(const Tube& tube, const PointCloud& cloud, ProfileKind kind,
                              int grid_resolution = 1000);

/// Intensity summed over the axis-aligned cube of side `edge` centred at
/// f(t0), for n_points equally spaced t0.
Profile voxel_neighborhood_profile(const PrincipalCurve& curve, const PointCloud& cloud, double edge,
                                   int n_points, int grid_resolution = 1000);

/// Mean intensity over consecutive slabs of width `window` along one axis
/// (0, 1, 2 for x, y, z). Distances are slab-centre coordinates.
Profile slice_profile(const PointCloud& cloud, int axis, double window);

/// Divides by the largest present value; a zero maximum leaves values alone.
Profile normalize_max(Profile profile);

} // namespace tubefit
