#include "tubefit/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tubefit/evalsim.hpp"
#include "tubefit/io.hpp"
#include "tubefit/parallel.hpp"
#include "tubefit/profiles.hpp"
#include "tubefit/tube.hpp"

namespace tubefit {

ExitCode exit_code_for(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::Precondition:
    case ErrorCode::Domain:
    case ErrorCode::Input:
        return ExitCode::InvalidConfig;
    case ErrorCode::Io:
        return ExitCode::Io;
    case ErrorCode::Parse:
    case ErrorCode::EmptyInput:
    case ErrorCode::UnsupportedVersion:
        return ExitCode::Parse;
    case ErrorCode::DegenerateFit:
    case ErrorCode::InsufficientData:
    case ErrorCode::SingularTangent:
    case ErrorCode::EmptyNeighborhood:
    case ErrorCode::DegenerateWeights:
    case ErrorCode::DegenerateCovariance:
        return ExitCode::Numerical;
    case ErrorCode::TubeFitFailed:
        return ExitCode::TubeFitFailed;
    case ErrorCode::Export:
        return ExitCode::Export;
    }
    return ExitCode::Internal;
}

namespace {

namespace fs = std::filesystem;

constexpr const char* kExitCodeHelp =
    "Exit codes:\n"
    "  0  success\n"
    "  1  internal error\n"
    "  2  usage error (unknown flag, missing or malformed argument)\n"
    "  3  invalid configuration (precondition, domain, bad option value)\n"
    "  4  file could not be opened or written\n"
    "  5  input could not be parsed (bad row, empty input, unsupported version)\n"
    "  6  numerical failure (degenerate fit, singular tangent, empty window)\n"
    "  7  tube fit failed (more than half the cross sections are gaps)\n"
    "  8  export failed\n"
    "Failures print one line: error: code=<name> exit=<n> message=\"...\"";

struct Common {
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string out = ".";
    std::string preset;
};

struct InputOpts {
    std::string path;
    std::string format = "csv";
    double threshold = 0.0;
};

struct CurveOpts {
    std::vector<double> start;
    std::vector<double> end;
    int df = 5;
    std::vector<int> schedule;
    int grid = 1000;
    double gamma = 1.0;
    double tol = 1e-4;
    int max_iter = 50;
    std::size_t subsample = 0;
    CLI::Option* df_opt = nullptr;
    CLI::Option* gamma_opt = nullptr;
};

struct TubeOpts {
    int sections = 50;
    double t_r = 0.1;
    double alpha = 0.12;
    int boundary = 32;
    int rings = 0;
    std::string shade = "none";
    CLI::Option* t_r_opt = nullptr;
    CLI::Option* alpha_opt = nullptr;
};

struct PhantomOpts {
    PhantomConfig config;
    std::string noise = "none";
    double tube_radius_end = -1.0;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--seed", c.seed, "Seed for every random draw")->capture_default_str();
    app->add_option("--threads", c.threads, "Worker thread cap (0 = hardware)")->capture_default_str();
    app->add_option("--out", c.out, "Output directory")->capture_default_str();
    app->add_option("--preset", c.preset, "Published parameter set")
        ->check(CLI::IsMember({"spect-colon", "dti-cst"}));
}

void add_input(CLI::App* app, InputOpts& in) {
    app->add_option("--input", in.path, "Point cloud file")->required();
    app->add_option("--format", in.format, "csv or voxel_grid")
        ->check(CLI::IsMember({"csv", "voxel_grid"}))
        ->capture_default_str();
    app->add_option("--threshold", in.threshold, "Voxel grid histogram threshold")->capture_default_str();
}

void add_curve(CLI::App* app, CurveOpts& c) {
    app->add_option("--start", c.start, "Curve start point x y z")->expected(3)->required();
    app->add_option("--end", c.end, "Curve end point x y z")->expected(3)->required();
    c.df_opt = app->add_option("--df", c.df, "Final spline degrees of freedom K")->capture_default_str();
    app->add_option("--schedule", c.schedule, "df stages (default 4..K)");
    app->add_option("--grid", c.grid, "Latent-time grid resolution")->capture_default_str();
    c.gamma_opt = app->add_option("--gamma", c.gamma, "Intensity weight exponent (default 1 with intensities)");
    app->add_option("--tol", c.tol, "Relative MSE stopping tolerance")->capture_default_str();
    app->add_option("--max-iter", c.max_iter, "Iteration cap per stage")->capture_default_str();
    app->add_option("--subsample", c.subsample, "Fit on this many points drawn with --seed (0 = all)");
}

void add_tube(CLI::App* app, TubeOpts& t) {
    app->add_option("--sections", t.sections, "Number of cross sections")->capture_default_str();
    t.t_r_opt = app->add_option("--t-r", t.t_r, "Time window half-width")->capture_default_str();
    t.alpha_opt = app->add_option("--alpha", t.alpha, "Level-set alpha")->capture_default_str();
}

void add_phantom(CLI::App* app, PhantomOpts& p) {
    auto& c = p.config;
    app->add_option("--coil-radius", c.coil_radius, "Helix radius (0 = straight cylinder)")->capture_default_str();
    app->add_option("--tube-radius", c.tube_radius, "Tube radius")->capture_default_str();
    app->add_option("--tube-radius-end", p.tube_radius_end, "Tube radius at the far end (linear ramp)");
    app->add_option("--turns", c.turns, "Helix turns")->capture_default_str();
    app->add_option("--height", c.height, "Helix height")->capture_default_str();
    app->add_option("--pitch", c.pitch, "Voxel pitch")->capture_default_str();
    app->add_option("--noise", p.noise, "none or poisson")
        ->check(CLI::IsMember({"none", "poisson"}))
        ->capture_default_str();
    app->add_option("--noise-level", c.noise_level, "Poisson mean at full signal (lower is noisier)")
        ->capture_default_str();
    app->add_option("--blur", c.blur_sigma, "Point-spread width in voxels")->capture_default_str();
    app->add_option("--samples", c.sample_size, "Voxels sampled into the cloud")->capture_default_str();
}

PhantomConfig resolve_phantom(const PhantomOpts& p, std::uint64_t seed) {
    PhantomConfig c = p.config;
    c.noise = p.noise == "poisson" ? NoiseModel::Poisson : NoiseModel::None;
    if (p.tube_radius_end >= 0.0) {
        c.tube_radius_end = p.tube_radius_end;
    }
    c.seed = seed;
    return c;
}

void apply_preset(const Common& common, CurveOpts* curve, TubeOpts* tube) {
    if (common.preset.empty()) {
        return;
    }
    const bool colon = common.preset == "spect-colon";
    if (curve && curve->df_opt->count() == 0) {
        curve->df = colon ? 5 : 8;
    }
    if (tube) {
        if (tube->t_r_opt->count() == 0) {
            tube->t_r = colon ? 0.2 : 0.4;
        }
        if (tube->alpha_opt->count() == 0) {
            tube->alpha = colon ? 0.15 : 0.1;
        }
    }
}

CurveFitConfig resolve_curve(const CurveOpts& o, const Common& common) {
    CurveFitConfig c;
    c.start = Point3(o.start[0], o.start[1], o.start[2]);
    c.end = Point3(o.end[0], o.end[1], o.end[2]);
    c.final_df = o.df;
    c.df_schedule = o.schedule;
    c.grid_resolution = o.grid;
    if (o.gamma_opt->count() > 0) {
        c.intensity_exponent = o.gamma;
    }
    c.rel_mse_tol = o.tol;
    c.max_iter_per_stage = o.max_iter;
    if (o.subsample > 0) {
        c.subsample = o.subsample;
    }
    c.seed = common.seed;
    return c;
}

TubeConfig resolve_tube(const TubeOpts& o) {
    TubeConfig t;
    t.n_sections = o.sections;
    t.t_r = o.t_r;
    t.alpha = o.alpha;
    return t;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? " " : "") + format_double(v[i]);
    }
    return s;
}

std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? " " : "") + std::to_string(v[i]);
    }
    return s;
}

std::string join_point(const Point3& v) {
    return join(std::vector<double>{v.x(), v.y(), v.z()});
}

Provenance base_provenance(const std::string& command, const Common& c) {
    Provenance p{{"tool", "tubefit"}, {"command", command}, {"seed", std::to_string(c.seed)}};
    if (!c.preset.empty()) {
        p.emplace_back("preset", c.preset);
    }
    return p;
}

void add_curve_provenance(Provenance& p, const CurveFitConfig& c) {
    p.emplace_back("start", join_point(c.start));
    p.emplace_back("end", join_point(c.end));
    p.emplace_back("df_schedule", join(c.resolved_schedule()));
    p.emplace_back("grid_resolution", std::to_string(c.grid_resolution));
    if (c.intensity_exponent) {
        p.emplace_back("intensity_exponent", format_double(*c.intensity_exponent));
    }
    p.emplace_back("rel_mse_tol", format_double(c.rel_mse_tol));
    p.emplace_back("max_iter_per_stage", std::to_string(c.max_iter_per_stage));
    if (c.subsample) {
        p.emplace_back("subsample", std::to_string(*c.subsample));
    }
}

void add_tube_provenance(Provenance& p, const TubeConfig& t) {
    p.emplace_back("n_sections", std::to_string(t.n_sections));
    p.emplace_back("t_r", format_double(t.t_r));
    p.emplace_back("alpha", format_double(t.alpha));
}

void add_phantom_provenance(Provenance& p, const PhantomConfig& c) {
    p.emplace_back("coil_radius", format_double(c.coil_radius));
    p.emplace_back("tube_radius", format_double(c.tube_radius));
    if (c.tube_radius_end) {
        p.emplace_back("tube_radius_end", format_double(*c.tube_radius_end));
    }
    p.emplace_back("turns", format_double(c.turns));
    p.emplace_back("height", format_double(c.height));
    p.emplace_back("pitch", format_double(c.pitch));
    p.emplace_back("noise", c.noise == NoiseModel::Poisson ? "poisson" : "none");
    p.emplace_back("noise_level", format_double(c.noise_level));
    p.emplace_back("blur_sigma", format_double(c.blur_sigma));
    p.emplace_back("sample_size", std::to_string(c.sample_size));
}

void add_input_provenance(Provenance& p, const InputOpts& in) {
    p.emplace_back("input", in.path);
    p.emplace_back("format", in.format);
    if (in.format == "voxel_grid") {
        p.emplace_back("threshold", format_double(in.threshold));
    }
}

fs::path prepare_out(const Common& c) {
    const fs::path dir(c.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        fail(ErrorCode::Io, "cannot create output directory '" + c.out + "'");
    }
    return dir;
}

template <typename Fn>
void write_stream(const fs::path& path, Fn&& fn) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        fail(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    }
    fn(f);
    f.flush();
    if (!f) {
        fail(ErrorCode::Io, "failed writing '" + path.string() + "'");
    }
}

void write_history(const fs::path& path, const PrincipalCurve& curve, const Provenance& p) {
    write_stream(path, [&](std::ostream& f) {
        for (const auto& [k, v] : p) {
            f << "# " << k << ": " << v << '\n';
        }
        f << "df,iteration,mse\n";
        for (const auto& h : curve.history) {
            f << h.df << ',' << h.iteration << ',' << format_double(h.mse) << '\n';
        }
    });
}

PointCloud load_cloud(const InputOpts& in) {
    return read_point_cloud(in.path, parse_cloud_format(in.format), in.threshold);
}

std::vector<double> default_alpha_grid() {
    std::vector<double> a;
    for (int k = 1; k <= 19; ++k) {
        a.push_back(0.05 * k);
    }
    return a;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tube fitting for tubular structures in point clouds", "tubefit"};
    app.footer(kExitCodeHelp);
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    Common common;

    // fit-curve
    InputOpts fc_in;
    CurveOpts fc_curve;
    auto* fit_curve = app.add_subcommand("fit-curve", "Fit the centerline; writes curve.json and curve_mse.csv");
    add_common(fit_curve, common);
    add_input(fit_curve, fc_in);
    add_curve(fit_curve, fc_curve);

    // fit-tube
    InputOpts ft_in;
    CurveOpts ft_curve;
    TubeOpts ft_tube;
    auto* fit_tube_cmd = app.add_subcommand(
        "fit-tube", "Fit centerline and tube; writes tube.json, tube.obj, sections.csv and curve_mse.csv");
    add_common(fit_tube_cmd, common);
    add_input(fit_tube_cmd, ft_in);
    add_curve(fit_tube_cmd, ft_curve);
    add_tube(fit_tube_cmd, ft_tube);
    fit_tube_cmd->add_option("--boundary", ft_tube.boundary, "Boundary points per mesh ring")->capture_default_str();
    fit_tube_cmd->add_option("--rings", ft_tube.rings, "Mesh ring cap (0 = every valid section)")
        ->capture_default_str();
    fit_tube_cmd->add_option("--shade", ft_tube.shade, "Mesh scalar: none, sum, area_normalized, weighted_mean")
        ->check(CLI::IsMember({"none", "sum", "area_normalized", "weighted_mean"}))
        ->capture_default_str();

    // profile
    InputOpts pr_in;
    std::string pr_tube;
    std::vector<std::string> pr_kinds{"area_normalized"};
    double pr_edge = 3.0;
    int pr_points = 0;
    bool pr_normalize = false;
    std::string pr_axis = "z";
    double pr_window = 1.0;
    auto* profile = app.add_subcommand("profile", "Along-tube scalar profiles; writes profile.csv");
    add_common(profile, common);
    add_input(profile, pr_in);
    profile->add_option("--tube", pr_tube, "Tube file from fit-tube (not needed for slice)");
    profile->add_option("--kind", pr_kinds, "sum, area_normalized, weighted_mean, voxel_neighborhood, slice")
        ->check(CLI::IsMember({"sum", "area_normalized", "weighted_mean", "voxel_neighborhood", "slice"}))
        ->capture_default_str();
    profile->add_option("--edge", pr_edge, "Cube edge for voxel_neighborhood")->capture_default_str();
    profile->add_option("--points", pr_points, "Profile points for voxel_neighborhood (0 = one per section)");
    profile->add_flag("--normalize", pr_normalize, "Divide each profile by its maximum");
    profile->add_option("--axis", pr_axis, "Slice axis")->check(CLI::IsMember({"x", "y", "z"}))->capture_default_str();
    profile->add_option("--window", pr_window, "Slice slab width")->capture_default_str();

    // validate
    std::string va_tube;
    std::string va_truth;
    double va_truth_threshold = 0.5;
    std::vector<double> va_alphas;
    std::vector<double> va_noise_levels{4.0, 1.5};
    PhantomOpts va_phantom;
    auto* validate = app.add_subcommand(
        "validate", "Voxelwise TP/FP table; writes validation.csv. Without --tube, runs the coil phantom study");
    add_common(validate, common);
    validate->add_option("--tube", va_tube, "Tube file to classify against --truth");
    validate->add_option("--truth", va_truth, "Voxel grid whose values above --truth-threshold form the truth");
    validate->add_option("--truth-threshold", va_truth_threshold, "Truth cut-off")->capture_default_str();
    validate->add_option("--alpha", va_alphas, "Alpha values (default 0.05, 0.10, ..., 0.95)");
    validate->add_option("--noise-levels", va_noise_levels, "Poisson levels for the phantom study")
        ->capture_default_str();
    add_phantom(validate, va_phantom);

    // simulate-alpha
    AlphaSimConfig sa;
    sa.alpha_grid.clear();
    auto* sim_alpha = app.add_subcommand("simulate-alpha", "Alpha calibration simulation; writes alpha_report.csv");
    add_common(sim_alpha, common);
    sim_alpha->add_option("--A", sa.semi_major, "Semi-major axis of G")->capture_default_str();
    sim_alpha->add_option("--B", sa.semi_minor, "Semi-minor axis of G")->capture_default_str();
    sim_alpha->add_option("--sigma", sa.sigma, "Noise standard deviation")->capture_default_str();
    sim_alpha->add_option("--alpha", sa.alpha_grid, "Alpha values (default 0.05, 0.10, ..., 0.95)");
    sim_alpha->add_option("--points", sa.n_points, "Points per replicate")->capture_default_str();
    sim_alpha->add_option("--replicates", sa.n_replicates, "Replicates")->capture_default_str();
    sim_alpha->add_option("--resolution", sa.resolution, "Raster cells per side")->capture_default_str();

    // simulate-shape
    std::vector<std::string> ss_shapes{"square", "u_shape", "circle"};
    ShapeSimConfig ss;
    auto* sim_shape = app.add_subcommand("simulate-shape", "Cross-section shape study; writes shape_report.csv");
    add_common(sim_shape, common);
    sim_shape->add_option("--shape", ss_shapes, "square, u_shape, circle")
        ->check(CLI::IsMember({"square", "u_shape", "circle"}))
        ->capture_default_str();
    sim_shape->add_option("--alpha", ss.alpha, "Level-set alpha")->capture_default_str();
    sim_shape->add_option("--points-per-layer", ss.points_per_layer, "Points per layer")->capture_default_str();
    sim_shape->add_option("--layers", ss.n_layers, "Stacked layers")->capture_default_str();
    sim_shape->add_option("--t-r", ss.tube.t_r, "Time window half-width")->capture_default_str();

    // phantom
    PhantomOpts ph_opts;
    auto* phantom = app.add_subcommand("phantom", "Coil phantom; writes truth.txt, image.txt and cloud.csv");
    add_common(phantom, common);
    add_phantom(phantom, ph_opts);

    try {
        try {
            std::vector<std::string> args;
            for (int i = argc - 1; i > 0; --i) {
                args.emplace_back(argv[i]);
            }
            app.parse(args);
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return 0;
        } catch (const CLI::CallForAllHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return 0;
        } catch (const CLI::ParseError& e) {
            err << "error: code=usage exit=" << static_cast<int>(ExitCode::Usage) << " message=\"" << e.what()
                << "\"\n";
            return static_cast<int>(ExitCode::Usage);
        }
        set_max_threads(common.threads);

        if (fit_curve->parsed()) {
            apply_preset(common, &fc_curve, nullptr);
            const CurveFitConfig cc = resolve_curve(fc_curve, common);
            const PointCloud cloud = load_cloud(fc_in);
            const PrincipalCurve curve = fit_principal_curve(cloud, cc);
            Provenance p = base_provenance("fit-curve", common);
            add_input_provenance(p, fc_in);
            add_curve_provenance(p, cc);
            const fs::path dir = prepare_out(common);
            write_curve(curve, dir / "curve.json", p);
            write_history(dir / "curve_mse.csv", curve, p);
        } else if (fit_tube_cmd->parsed()) {
            apply_preset(common, &ft_curve, &ft_tube);
            const CurveFitConfig cc = resolve_curve(ft_curve, common);
            const TubeConfig tc = resolve_tube(ft_tube);
            tc.validate();
            const PointCloud cloud = load_cloud(ft_in);
            const PrincipalCurve curve = fit_principal_curve(cloud, cc);
            const PointCloud used = fitted_cloud(curve, cloud);
            const Tube tube = fit_tube(curve, used, tc);
            Provenance p = base_provenance("fit-tube", common);
            add_input_provenance(p, ft_in);
            add_curve_provenance(p, cc);
            add_tube_provenance(p, tc);
            std::vector<double> scalars;
            if (ft_tube.shade != "none") {
                const Profile shade = concentration_profile(tube, used, parse_profile_kind(ft_tube.shade));
                for (const auto& v : shade.values) {
                    scalars.push_back(v.value_or(0.0));
                }
                p.emplace_back("shade", ft_tube.shade);
            }
            const SurfaceMesh mesh = export_surface(tube, ft_tube.boundary, ft_tube.rings, scalars);
            const fs::path dir = prepare_out(common);
            write_history(dir / "curve_mse.csv", curve, p);
            write_tube(tube, dir / "tube.json", p);
            write_obj(mesh, dir / "tube.obj", p);
            write_section_table(tube, dir / "sections.csv", p, cc.grid_resolution);
        } else if (profile->parsed()) {
            const PointCloud cloud = load_cloud(pr_in);
            std::optional<Tube> tube;
            std::optional<PointCloud> used;
            std::vector<Profile> profiles;
            Provenance p = base_provenance("profile", common);
            add_input_provenance(p, pr_in);
            for (const auto& name : pr_kinds) {
                const ProfileKind kind = parse_profile_kind(name);
                Profile prof;
                if (kind == ProfileKind::Slice) {
                    prof = slice_profile(cloud, pr_axis == "x" ? 0 : pr_axis == "y" ? 1 : 2, pr_window);
                    p.emplace_back("slice", "axis " + pr_axis + " window " + format_double(pr_window));
                } else {
                    if (!tube) {
                        if (pr_tube.empty()) {
                            fail(ErrorCode::Input, "--tube is required for profile kind " + name);
                        }
                        tube = read_tube(pr_tube);
                        used = fitted_cloud(tube->curve, cloud);
                        p.emplace_back("tube", pr_tube);
                    }
                    if (kind == ProfileKind::VoxelNeighborhood) {
                        const int n = pr_points > 0 ? pr_points : tube->config.n_sections;
                        prof = voxel_neighborhood_profile(tube->curve, cloud, pr_edge, n,
                                                          tube->curve.grid_resolution());
                        p.emplace_back("voxel_neighborhood", "edge " + format_double(pr_edge) + " points " +
                                                                 std::to_string(n));
                    } else {
                        prof = concentration_profile(*tube, *used, kind, tube->curve.grid_resolution());
                    }
                }
                profiles.push_back(pr_normalize ? normalize_max(std::move(prof)) : std::move(prof));
            }
            if (pr_normalize) {
                p.emplace_back("normalize", "max");
            }
            const fs::path dir = prepare_out(common);
            write_profiles(profiles, dir / "profile.csv", p);
        } else if (validate->parsed()) {
            const std::vector<double> alphas = va_alphas.empty() ? default_alpha_grid() : va_alphas;
            std::vector<ValidationRow> rows;
            Provenance p = base_provenance("validate", common);
            if (!va_tube.empty() || !va_truth.empty()) {
                if (va_tube.empty() || va_truth.empty()) {
                    fail(ErrorCode::Input, "--tube and --truth must be given together");
                }
                const Tube tube = read_tube(va_tube);
                const VoxelGrid grid = read_voxel_grid(va_truth);
                std::vector<std::uint8_t> truth(grid.values.size());
                for (std::size_t i = 0; i < truth.size(); ++i) {
                    truth[i] = grid.values[i] > va_truth_threshold ? 1 : 0;
                }
                std::vector<Point3> centers(grid.lattice.size());
                for (std::size_t i = 0; i < centers.size(); ++i) {
                    centers[i] = grid.lattice.center(i);
                }
                const std::vector<TubeScore> scores = TubeScorer(tube).score(centers);
                const std::vector<std::uint8_t> band = boundary_band(grid.lattice, truth);
                for (double a : alphas) {
                    ValidationRow row{"tube", a, classify_scores(scores, truth, a, tube.slots.size()), -1.0};
                    const double level = level_set_scale(a);
                    std::size_t wrong = 0, near = 0;
                    for (std::size_t i = 0; i < scores.size(); ++i) {
                        if ((scores[i].mahalanobis2 <= level) != (truth[i] != 0)) {
                            ++wrong;
                            near += band[i];
                        }
                    }
                    row.boundary_fraction = wrong == 0 ? 1.0 : static_cast<double>(near) / static_cast<double>(wrong);
                    rows.push_back(std::move(row));
                }
                p.emplace_back("tube", va_tube);
                p.emplace_back("truth", va_truth);
                p.emplace_back("truth_threshold", format_double(va_truth_threshold));
            } else {
                PhantomConfig base = resolve_phantom(va_phantom, common.seed);
                base.noise = NoiseModel::None;
                add_phantom_provenance(p, base);
                p.emplace_back("noise_levels", join(va_noise_levels));
                const CurveFitConfig cc = default_phantom_curve_config(common.seed);
                const TubeConfig tc = default_phantom_tube_config();
                add_curve_provenance(p, cc);
                add_tube_provenance(p, tc);
                std::vector<std::pair<std::string, PhantomConfig>> runs{{"noiseless", base}};
                for (double level : va_noise_levels) {
                    PhantomConfig noisy = base;
                    noisy.noise = NoiseModel::Poisson;
                    noisy.noise_level = level;
                    runs.emplace_back("poisson_" + format_double(level), noisy);
                }
                for (const auto& [label, config] : runs) {
                    const Phantom ph = generate_coil_phantom(config);
                    const PhantomValidation v = run_phantom_validation(ph, cc, tc, alphas);
                    for (const auto& r : v.rows) {
                        rows.push_back({label, r.alpha, r.result, r.boundary_fraction});
                    }
                }
            }
            p.emplace_back("alphas", join(alphas));
            const fs::path dir = prepare_out(common);
            write_stream(dir / "validation.csv", [&](std::ostream& f) { write_validation_table(f, rows, p); });
        } else if (sim_alpha->parsed()) {
            if (sa.alpha_grid.empty()) {
                sa.alpha_grid = default_alpha_grid();
            }
            sa.seed = common.seed;
            const TPFPCurve curve = run_alpha_sim(sa);
            Provenance p = base_provenance("simulate-alpha", common);
            p.emplace_back("A", format_double(sa.semi_major));
            p.emplace_back("B", format_double(sa.semi_minor));
            p.emplace_back("sigma", format_double(sa.sigma));
            p.emplace_back("n_points", std::to_string(sa.n_points));
            p.emplace_back("n_replicates", std::to_string(sa.n_replicates));
            p.emplace_back("resolution", std::to_string(sa.resolution));
            const fs::path dir = prepare_out(common);
            write_stream(dir / "alpha_report.csv", [&](std::ostream& f) { write_alpha_report(f, curve, p); });
        } else if (sim_shape->parsed()) {
            std::vector<ShapeReportRow> rows;
            for (const auto& name : ss_shapes) {
                ShapeSimConfig c = ss;
                c.shape = parse_shape(name);
                c.seed = common.seed;
                rows.push_back({c.shape, c.alpha, run_shape_sim(c)});
            }
            Provenance p = base_provenance("simulate-shape", common);
            p.emplace_back("alpha", format_double(ss.alpha));
            p.emplace_back("points_per_layer", std::to_string(ss.points_per_layer));
            p.emplace_back("n_layers", std::to_string(ss.n_layers));
            p.emplace_back("t_r", format_double(ss.tube.t_r));
            const fs::path dir = prepare_out(common);
            write_stream(dir / "shape_report.csv", [&](std::ostream& f) { write_shape_report(f, rows, p); });
        } else if (phantom->parsed()) {
            const PhantomConfig config = resolve_phantom(ph_opts, common.seed);
            const Phantom ph = generate_coil_phantom(config);
            Provenance p = base_provenance("phantom", common);
            add_phantom_provenance(p, config);
            p.emplace_back("curve_start", join_point(ph.start));
            p.emplace_back("curve_end", join_point(ph.end));
            const fs::path dir = prepare_out(common);
            write_voxel_grid({ph.lattice, std::vector<double>(ph.truth.begin(), ph.truth.end())}, dir / "truth.txt", p);
            write_voxel_grid({ph.lattice, ph.image}, dir / "image.txt", p);
            write_csv_cloud(ph.cloud, dir / "cloud.csv", p);
        }
        return 0;
    } catch (const Error& e) {
        const ExitCode code = exit_code_for(e.code());
        std::string msg = e.what();
        for (auto& ch : msg) {
            if (ch == '"' || ch == '\n') {
                ch = '\'';
            }
        }
        err << "error: code=" << to_string(e.code()) << " exit=" << static_cast<int>(code) << " message=\"" << msg
            << "\"\n";
        return static_cast<int>(code);
    } catch (const std::exception& e) {
        err << "error: code=internal exit=1 message=\"" << e.what() << "\"\n";
        return static_cast<int>(ExitCode::Internal);
    }
}

} // namespace tubefit
