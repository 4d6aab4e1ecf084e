#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tubefit/evalsim.hpp"
#include "tubefit/profiles.hpp"
#include "tubefit/tube.hpp"

namespace tubefit {

/// Ordered key/value pairs written into every output (config and seed).
using Provenance = std::vector<std::pair<std::string, std::string>>;

/// Shortest text that parses back to the same double.
std::string format_double(double v);

// Point clouds: CSV rows "x,y,z" or "x,y,z,c". Lines starting with '#' and a
// leading header row beginning with 'x' are skipped.
PointCloud parse_csv_cloud(std::istream& in, std::string_view source = "<stream>");
PointCloud read_csv_cloud(const std::filesystem::path& path);
void write_csv_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                     const Provenance& provenance = {});

/// Plain-text voxel volume:
///   dims NX NY NZ
///   pitch P
///   origin OX OY OZ
///   values
///   v0 v1 ...   (x fastest, then y, then z)
struct VoxelGrid {
    Lattice lattice;
    std::vector<double> values;
};

VoxelGrid parse_voxel_grid(std::istream& in, std::string_view source = "<stream>");
VoxelGrid read_voxel_grid(const std::filesystem::path& path);
void write_voxel_grid(const VoxelGrid& grid, const std::filesystem::path& path,
                      const Provenance& provenance = {});

/// Voxel centres with value strictly above `threshold`, values kept as
/// intensities. Throws EmptyInput when nothing survives.
PointCloud voxel_grid_to_cloud(const VoxelGrid& grid, double threshold);

enum class CloudFormat { Csv, VoxelGrid };
CloudFormat parse_cloud_format(std::string_view name);
PointCloud read_point_cloud(const std::filesystem::path& path, CloudFormat format, double threshold = 0.0);

// Versioned JSON documents.
inline constexpr int kTubeFormatVersion = 1;

std::string curve_to_json(const PrincipalCurve& curve, const Provenance& provenance = {});
PrincipalCurve curve_from_json(std::string_view text, std::string_view source = "<string>");
void write_curve(const PrincipalCurve& curve, const std::filesystem::path& path,
                 const Provenance& provenance = {});
PrincipalCurve read_curve(const std::filesystem::path& path);

std::string tube_to_json(const Tube& tube, const Provenance& provenance = {});
Tube tube_from_json(std::string_view text, std::string_view source = "<string>");
void write_tube(const Tube& tube, const std::filesystem::path& path, const Provenance& provenance = {});
Tube read_tube(const std::filesystem::path& path);

/// Wavefront OBJ: "v x y z" lines, "vt s 0" per vertex when scalars are
/// present, and one "f" line per quad (1-based).
void write_obj(std::ostream& out, const SurfaceMesh& mesh, const Provenance& provenance = {});
void write_obj(const SurfaceMesh& mesh, const std::filesystem::path& path, const Provenance& provenance = {});

/// CSV t0,distance,semi_major,semi_minor,area,gap; gap rows leave the
/// geometry empty and name the error.
void write_section_table(std::ostream& out, const Tube& tube, const Provenance& provenance = {},
                         int grid_resolution = 1000);
void write_section_table(const Tube& tube, const std::filesystem::path& path,
                         const Provenance& provenance = {}, int grid_resolution = 1000);

/// CSV kind,t0,distance,value,gap for one or more profiles.
void write_profiles(std::ostream& out, const std::vector<Profile>& profiles, const Provenance& provenance = {});
void write_profiles(const std::vector<Profile>& profiles, const std::filesystem::path& path,
                    const Provenance& provenance = {});

/// CSV alpha,one_minus_alpha,mean_tp,se_tp,mean_fp,se_fp.
void write_alpha_report(std::ostream& out, const TPFPCurve& curve, const Provenance& provenance = {});

struct ShapeReportRow {
    Shape shape = Shape::Square;
    double alpha = 0.0;
    ShapeSimResult result;
};
/// CSV shape,alpha,tp_rate,fp_rate,tp,fp,fn,tn,valid_sections.
void write_shape_report(std::ostream& out, const std::vector<ShapeReportRow>& rows,
                        const Provenance& provenance = {});

/// CSV label,alpha,one_minus_alpha,tp_rate,fp_rate,tp,fp,fn,tn,boundary_fraction.
struct ValidationRow {
    std::string label;
    double alpha = 0.0;
    ClassificationResult result;
    double boundary_fraction = -1.0;  ///< negative when not computed
};
void write_validation_table(std::ostream& out, const std::vector<ValidationRow>& rows,
                            const Provenance& provenance = {});

/// Writes text to a file, throwing Io on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

} // namespace tubefit
