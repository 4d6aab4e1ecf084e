#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tubefit/principal_curve.hpp"
#include "tubefit/tube.hpp"

namespace tubefit {

// ---- area engine ---------------------------------------------------------

/// Planar indicator with a bounding box and its exact area.
struct Region {
    std::function<bool(double, double)> contains;
    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
    double area = 0.0;
};

Region ellipse_region(const Ellipse2D& e);
/// Axis-aligned square centred at the origin.
Region square_region(double side);
/// side x side square minus a centred notch of width side/2 opening upward
/// through the top edge, 3/4 of the side deep.
Region u_region(double side);
Region circle_region(double radius);

struct Overlap {
    double tp = 0.0;  ///< A(G ∩ Ĝ) / A(G)
    double fp = 0.0;  ///< A(Gᶜ ∩ Ĝ) / A(G)
};

/// TP/FP by rasterizing the union bounding box at resolution² cells.
Overlap region_overlap(const Region& g, const Ellipse2D& ghat, int resolution = 512);

/// Overlaps for the level sets {q <= -2 ln alpha} of N(mu, sigma), one per
/// alpha, sharing a single raster.
std::vector<Overlap> gaussian_overlaps(const Region& g, const Point2& mu, const Mat2& sigma,
                                       std::span<const double> alphas, int resolution = 512);

// ---- alpha calibration ---------------------------------------------------

struct AlphaSimConfig {
    double semi_major = 1.0;
    double semi_minor = 1.0;
    double sigma = 0.1;
    int n_points = 100;
    int n_replicates = 100;
    std::vector<double> alpha_grid{0.12};
    int resolution = 512;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TPFPCurve {
    std::vector<double> alpha_grid;
    std::vector<double> mean_tp;
    std::vector<double> mean_fp;
    std::vector<double> se_tp;
    std::vector<double> se_fp;
    int replicates_used = 0;
    int replicates_skipped = 0;  ///< degenerate covariance
};

TPFPCurve run_alpha_sim(const AlphaSimConfig& config);

/// Independent generator for replicate `index` of a run seeded with `master`.
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index);

// ---- shape misspecification ----------------------------------------------

enum class Shape { Square, UShape, Circle };

std::string_view to_string(Shape shape);
Shape parse_shape(std::string_view name);
/// Canonical dimensions: square side 2, U cut from the same square, circle radius 1.
Region canonical_region(Shape shape);

struct ShapeSimConfig {
    Shape shape = Shape::Square;
    double alpha = 0.12;
    int points_per_layer = 400;
    int n_layers = 50;
    TubeConfig tube{};
    int final_df = 5;
    double raster_pitch = 0.05;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ShapeSimResult {
    ClassificationResult classification;
    std::size_t valid_sections = 0;
};

/// Stacks copies of the shape along z, fits curve and tube, and classifies
/// an in-plane raster of every layer against the shape.
ShapeSimResult run_shape_sim(const ShapeSimConfig& config);

// ---- coil phantom --------------------------------------------------------

enum class NoiseModel { None, Poisson };

struct PhantomConfig {
    double coil_radius = 12.0;   ///< 0 gives a straight cylinder along z
    double tube_radius = 4.0;
    std::optional<double> tube_radius_end;  ///< linear ramp when set
    double turns = 2.0;
    double height = 40.0;
    double pitch = 0.7;
    NoiseModel noise = NoiseModel::None;
    double noise_level = 4.0;    ///< Poisson mean at full signal; lower is noisier
    double blur_sigma = 1.0;     ///< point-spread width in voxels
    std::size_t sample_size = 1000;
    std::uint64_t seed = 0;

    void validate() const;
    double radius_at(double s) const;
    /// Centreline for s in [0, 1].
    Point3 helix(double s) const;
    Vec3 helix_derivative(double s) const;
    double helix_length() const;
};

struct Phantom {
    Lattice lattice;
    std::vector<std::uint8_t> truth;
    std::vector<std::uint8_t> observed;  ///< voxels the sample was drawn from
    std::vector<double> image;           ///< observed intensity per voxel
    PointCloud cloud;
    std::vector<std::size_t> sampled_voxels;
    Point3 start = Point3::Zero();
    Point3 end = Point3::Zero();

    std::size_t truth_count() const;
};

/// Voxelized capped tube around the helix plus m voxels sampled from the
/// (optionally noisy) image.
Phantom generate_coil_phantom(const PhantomConfig& config);

/// Voxels within `radius` lattice steps of a voxel with the other truth label.
std::vector<std::uint8_t> boundary_band(const Lattice& lattice, std::span<const std::uint8_t> truth,
                                        int radius = 2);

struct PhantomValidationRow {
    double alpha = 0.0;
    ClassificationResult result;
    double boundary_fraction = 0.0;  ///< misclassified voxels inside the band
};

struct PhantomValidation {
    std::vector<PhantomValidationRow> rows;
    std::size_t truth_count = 0;
    std::size_t valid_sections = 0;
};

/// Curve settings that track the default two-turn coil: df 8 through 10.
CurveFitConfig default_phantom_curve_config(std::uint64_t seed = 0);
/// Narrow window (t_r = 0.05) so each slice spans a short stretch of coil.
TubeConfig default_phantom_tube_config();

/// Fits curve and tube once on the phantom sample, then classifies every
/// lattice voxel for each alpha. The curve endpoints come from the phantom.
PhantomValidation run_phantom_validation(const Phantom& phantom, CurveFitConfig curve_config,
                                         TubeConfig tube_config, std::span<const double> alpha_grid);

} // namespace tubefit
