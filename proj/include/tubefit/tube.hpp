#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tubefit/cross_section.hpp"
#include "tubefit/principal_curve.hpp"

namespace tubefit {

struct TubeConfig {
    int n_sections = 50;
    double t_r = 0.1;
    double alpha = 0.12;

    void validate() const;
    /// Equally spaced section times over [0, 1].
    std::vector<double> section_times() const;
};

/// A section position with either a fitted slice or the reason it failed.
struct SectionSlot {
    double t0 = 0.0;
    std::optional<CrossSection> section;
    ErrorCode gap_code = ErrorCode::EmptyNeighborhood;
    std::string gap_reason;

    bool valid() const noexcept { return section.has_value(); }
};

/// Support estimate: the centerline plus slices at increasing t0.
struct Tube {
    PrincipalCurve curve;
    std::vector<SectionSlot> slots;
    TubeConfig config;

    std::size_t valid_count() const;
    /// Same tube with every ellipse rescaled to another alpha.
    Tube with_alpha(double alpha) const;
};

Tube fit_tube(const PrincipalCurve& curve, const PointCloud& cloud, const TubeConfig& config);

/// Squared Mahalanobis distance of a point in the slice nearest its latent
/// time, with the slot index. Points whose nearest slot is a gap, or that lie
/// beyond the plane of an end slice further than the curve extends, get +inf.
struct TubeScore {
    double mahalanobis2 = 0.0;
    std::size_t slot = 0;
};

/// Batch scorer; precomputes the curve grid and section lookup once.
class TubeScorer {
public:
    explicit TubeScorer(const Tube& tube);

    TubeScore score(const Point3& p) const;
    std::vector<TubeScore> score(std::span<const Point3> points) const;

private:
    const Tube* tube_;
    std::vector<std::size_t> valid_;   // slot indices, in t0 order
    std::vector<double> valid_t0_;
    double start_cap_ = 0.0;
    double end_cap_ = 0.0;
};

bool point_in_tube(const Tube& tube, const Point3& p);

/// Regular voxel lattice; voxel (i, j, k) is centred at origin + pitch * (i, j, k)
/// and stored at index (k * ny + j) * nx + i.
struct Lattice {
    std::array<int, 3> dims{0, 0, 0};
    double pitch = 1.0;
    Point3 origin = Point3::Zero();

    std::size_t size() const noexcept;
    std::size_t index(int i, int j, int k) const noexcept;
    std::array<int, 3> coords(std::size_t index) const noexcept;
    Point3 center(std::size_t index) const noexcept;
    void validate() const;
};

struct SectionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
};

struct ClassificationResult {
    double true_positive_rate = 0.0;
    double false_positive_rate = 0.0;  ///< normalized by the truth size; may exceed 1
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;
    std::vector<SectionCounts> per_section;  ///< indexed by slot
};

/// Voxelwise comparison of the tube against a truth mask over the lattice.
ClassificationResult classify_against_truth(const Tube& tube, std::span<const std::uint8_t> truth,
                                            const Lattice& lattice);

/// Classification from precomputed scores at the level for `alpha`.
ClassificationResult classify_scores(std::span<const TubeScore> scores,
                                     std::span<const std::uint8_t> truth, double alpha,
                                     std::size_t n_slots);

struct SurfaceMesh {
    std::vector<Point3> vertices;
    std::vector<std::array<std::size_t, 4>> quads;
    std::vector<double> scalars;  ///< per vertex; empty when no attribute was given
};

/// Rings of embedded ellipse boundaries joined by quads. `n_rings` caps the
/// number of rings (0 = one per valid section); gaps break connectivity.
/// `section_scalars`, when given, holds one value per slot.
SurfaceMesh export_surface(const Tube& tube, int n_boundary, int n_rings = 0,
                           std::span<const double> section_scalars = {});

} // namespace tubefit
