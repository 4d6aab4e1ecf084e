#include "tubefit/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tubefit {

using Json = nlohmann::ordered_json;

namespace {

[[noreturn]] void parse_fail(std::string_view source, std::size_t line, const std::string& what) {
    std::ostringstream msg;
    msg << source << ":" << line << ": " << what;
    fail(ErrorCode::Parse, msg.str());
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_number(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) {
        return false;
    }
    if (s.front() == '+') {
        s.remove_prefix(1);
    }
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

void write_provenance_lines(std::ostream& out, const Provenance& p) {
    for (const auto& [k, v] : p) {
        out << "# " << k << ": " << v << "\n";
    }
}

Json provenance_json(const Provenance& p) {
    Json j = Json::object();
    for (const auto& [k, v] : p) {
        j[k] = v;
    }
    return j;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    }
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
    }
    return in;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) {
        fail(ErrorCode::Io, "failed writing '" + path.string() + "'");
    }
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) {
        fail(ErrorCode::Export, "cannot format number");
    }
    return std::string(buf, ptr);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    finish(out, path);
}

std::string read_text_file(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- point clouds --------------------------------------------------------

PointCloud parse_csv_cloud(std::istream& in, std::string_view source) {
    std::vector<Point3> pts;
    std::vector<double> c;
    int columns = 0;
    std::string raw;
    std::size_t lineno = 0;
    bool seen_data = false;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (!seen_data && (line.front() == 'x' || line.front() == 'X')) {
            seen_data = true;  // header row
            continue;
        }
        seen_data = true;
        const auto fields = split(line, ',');
        const int n = static_cast<int>(fields.size());
        if (n != 3 && n != 4) {
            parse_fail(source, lineno, "expected 3 or 4 columns, got " + std::to_string(n));
        }
        if (columns == 0) {
            columns = n;
        } else if (n != columns) {
            parse_fail(source, lineno, "column count changed from " + std::to_string(columns));
        }
        double v[4] = {0, 0, 0, 0};
        for (int k = 0; k < n; ++k) {
            if (!parse_number(fields[static_cast<std::size_t>(k)], v[k]) || !std::isfinite(v[k])) {
                parse_fail(source, lineno, "bad number '" + std::string(trim(fields[static_cast<std::size_t>(k)])) + "'");
            }
        }
        if (n == 4 && v[3] < 0.0) {
            parse_fail(source, lineno, "negative intensity");
        }
        pts.emplace_back(v[0], v[1], v[2]);
        if (n == 4) {
            c.push_back(v[3]);
        }
    }
    if (pts.empty()) {
        fail(ErrorCode::EmptyInput, std::string(source) + ": no points");
    }
    return columns == 4 ? PointCloud(std::move(pts), std::move(c)) : PointCloud(std::move(pts));
}

PointCloud read_csv_cloud(const std::filesystem::path& path) {
    auto in = open_in(path);
    return parse_csv_cloud(in, path.string());
}

void write_csv_cloud(const PointCloud& cloud, const std::filesystem::path& path, const Provenance& provenance) {
    auto out = open_out(path);
    write_provenance_lines(out, provenance);
    const auto c = cloud.intensities();
    out << (c.empty() ? "x,y,z\n" : "x,y,z,c\n");
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        out << format_double(cloud[i].x()) << ',' << format_double(cloud[i].y()) << ','
            << format_double(cloud[i].z());
        if (!c.empty()) {
            out << ',' << format_double(c[i]);
        }
        out << '\n';
    }
    finish(out, path);
}

// ---- voxel grids ---------------------------------------------------------

VoxelGrid parse_voxel_grid(std::istream& in, std::string_view source) {
    VoxelGrid g;
    std::string raw;
    std::size_t lineno = 0;
    bool have_dims = false, have_pitch = false, have_origin = false, in_values = false;
    std::size_t expected = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        std::istringstream ls{std::string(line)};
        if (in_values) {
            std::string tok;
            while (ls >> tok) {
                double v = 0.0;
                if (!parse_number(tok, v) || !std::isfinite(v)) {
                    parse_fail(source, lineno, "bad voxel value '" + tok + "'");
                }
                if (g.values.size() == expected) {
                    parse_fail(source, lineno, "more values than dims allow");
                }
                g.values.push_back(v);
            }
            continue;
        }
        std::string key;
        ls >> key;
        if (key == "dims") {
            if (!(ls >> g.lattice.dims[0] >> g.lattice.dims[1] >> g.lattice.dims[2]) ||
                g.lattice.dims[0] < 1 || g.lattice.dims[1] < 1 || g.lattice.dims[2] < 1) {
                parse_fail(source, lineno, "dims needs three positive integers");
            }
            have_dims = true;
        } else if (key == "pitch") {
            if (!(ls >> g.lattice.pitch) || !(g.lattice.pitch > 0.0)) {
                parse_fail(source, lineno, "pitch needs a positive number");
            }
            have_pitch = true;
        } else if (key == "origin") {
            if (!(ls >> g.lattice.origin.x() >> g.lattice.origin.y() >> g.lattice.origin.z())) {
                parse_fail(source, lineno, "origin needs three numbers");
            }
            have_origin = true;
        } else if (key == "values") {
            if (!have_dims || !have_pitch || !have_origin) {
                parse_fail(source, lineno, "values before dims, pitch and origin");
            }
            expected = g.lattice.size();
            g.values.reserve(expected);
            in_values = true;
        } else {
            parse_fail(source, lineno, "unknown header key '" + key + "'");
        }
        std::string extra;
        if (ls >> extra) {
            parse_fail(source, lineno, "trailing text '" + extra + "'");
        }
    }
    if (!in_values) {
        parse_fail(source, lineno, "missing values section");
    }
    if (g.values.size() != expected) {
        parse_fail(source, lineno, "expected " + std::to_string(expected) + " values, got " +
                                       std::to_string(g.values.size()));
    }
    return g;
}

VoxelGrid read_voxel_grid(const std::filesystem::path& path) {
    auto in = open_in(path);
    return parse_voxel_grid(in, path.string());
}

void write_voxel_grid(const VoxelGrid& grid, const std::filesystem::path& path, const Provenance& provenance) {
    if (grid.values.size() != grid.lattice.size()) {
        fail(ErrorCode::Export, "voxel values do not match the lattice");
    }
    auto out = open_out(path);
    write_provenance_lines(out, provenance);
    const auto& l = grid.lattice;
    out << "dims " << l.dims[0] << ' ' << l.dims[1] << ' ' << l.dims[2] << '\n';
    out << "pitch " << format_double(l.pitch) << '\n';
    out << "origin " << format_double(l.origin.x()) << ' ' << format_double(l.origin.y()) << ' '
        << format_double(l.origin.z()) << '\n';
    out << "values\n";
    const auto nx = static_cast<std::size_t>(l.dims[0]);
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        out << format_double(grid.values[i]) << ((i + 1) % nx == 0 ? '\n' : ' ');
    }
    finish(out, path);
}

PointCloud voxel_grid_to_cloud(const VoxelGrid& grid, double threshold) {
    std::vector<Point3> pts;
    std::vector<double> c;
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        if (grid.values[i] > threshold) {
            pts.push_back(grid.lattice.center(i));
            c.push_back(grid.values[i]);
        }
    }
    if (pts.empty()) {
        fail(ErrorCode::EmptyInput, "no voxel above threshold " + format_double(threshold));
    }
    return PointCloud(std::move(pts), std::move(c));
}

CloudFormat parse_cloud_format(std::string_view name) {
    if (name == "csv") {
        return CloudFormat::Csv;
    }
    if (name == "voxel_grid" || name == "voxel") {
        return CloudFormat::VoxelGrid;
    }
    fail(ErrorCode::Input, "unknown input format '" + std::string(name) + "'");
}

PointCloud read_point_cloud(const std::filesystem::path& path, CloudFormat format, double threshold) {
    if (format == CloudFormat::Csv) {
        return read_csv_cloud(path);
    }
    return voxel_grid_to_cloud(read_voxel_grid(path), threshold);
}

// ---- JSON documents ------------------------------------------------------

namespace {

Json spline_json(const CoordinateSpline& s) {
    Json j;
    j["df"] = s.df();
    j["interior_knots"] = s.interior_knots();
    j["coefficients"] = s.coefficients();
    if (s.endpoints()) {
        j["endpoints"] = {s.endpoints()->at_start, s.endpoints()->at_end};
    } else {
        j["endpoints"] = nullptr;
    }
    return j;
}

CoordinateSpline spline_from(const Json& j) {
    std::optional<EndpointValues> ends;
    if (!j.at("endpoints").is_null()) {
        const auto& e = j.at("endpoints");
        ends = EndpointValues{e.at(0).get<double>(), e.at(1).get<double>()};
    }
    return CoordinateSpline::from_parts(j.at("interior_knots").get<std::vector<double>>(),
                                        j.at("coefficients").get<std::vector<double>>(), j.at("df").get<int>(),
                                        ends);
}

Json curve_body(const PrincipalCurve& c) {
    Json j;
    j["seed"] = c.seed;
    j["grid_resolution"] = c.grid_resolution();
    j["x"] = spline_json(c.fx());
    j["y"] = spline_json(c.fy());
    j["z"] = spline_json(c.fz());
    j["latent_times"] = c.latent_times();
    j["sample_indices"] = c.sample_indices;
    Json hist = Json::array();
    for (const auto& h : c.history) {
        hist.push_back({h.df, h.iteration, h.mse});
    }
    j["history"] = hist;
    return j;
}

PrincipalCurve curve_from(const Json& j) {
    PrincipalCurve c(spline_from(j.at("x")), spline_from(j.at("y")), spline_from(j.at("z")),
                     j.at("latent_times").get<std::vector<double>>(), j.at("grid_resolution").get<int>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.sample_indices = j.at("sample_indices").get<std::vector<std::size_t>>();
    for (const auto& h : j.at("history")) {
        c.history.push_back({h.at(0).get<int>(), h.at(1).get<int>(), h.at(2).get<double>()});
    }
    return c;
}

Json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

Json header(std::string_view format, const Provenance& provenance) {
    Json j;
    j["format"] = format;
    j["version"] = kTubeFormatVersion;
    j["provenance"] = provenance_json(provenance);
    return j;
}

Json parse_document(std::string_view text, std::string_view source, std::string_view format) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::exception& e) {
        fail(ErrorCode::Parse, std::string(source) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("format") || j["format"] != format) {
        fail(ErrorCode::Parse, std::string(source) + ": not a " + std::string(format) + " document");
    }
    if (!j.contains("version") || !j["version"].is_number_integer()) {
        fail(ErrorCode::Parse, std::string(source) + ": missing version");
    }
    if (j["version"].get<int>() != kTubeFormatVersion) {
        fail(ErrorCode::UnsupportedVersion, std::string(source) + ": unsupported version " +
                                                j["version"].dump() + " (expected " +
                                                std::to_string(kTubeFormatVersion) + ")");
    }
    return j;
}

template <typename Fn>
auto guarded(std::string_view source, Fn&& fn) {
    try {
        return fn();
    } catch (const Json::exception& e) {
        fail(ErrorCode::Parse, std::string(source) + ": " + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Precondition || e.code() == ErrorCode::Domain) {
            fail(ErrorCode::Parse, std::string(source) + ": " + e.what());
        }
        throw;
    }
}

} // namespace

std::string curve_to_json(const PrincipalCurve& curve, const Provenance& provenance) {
    Json j = header("tubefit-curve", provenance);
    j["curve"] = curve_body(curve);
    return j.dump(1) + "\n";
}

PrincipalCurve curve_from_json(std::string_view text, std::string_view source) {
    const Json j = parse_document(text, source, "tubefit-curve");
    return guarded(source, [&] { return curve_from(j.at("curve")); });
}

void write_curve(const PrincipalCurve& curve, const std::filesystem::path& path, const Provenance& provenance) {
    write_text_file(path, curve_to_json(curve, provenance));
}

PrincipalCurve read_curve(const std::filesystem::path& path) {
    return curve_from_json(read_text_file(path), path.string());
}

std::string tube_to_json(const Tube& tube, const Provenance& provenance) {
    Json j = header("tubefit-tube", provenance);
    j["config"] = {{"n_sections", tube.config.n_sections}, {"t_r", tube.config.t_r}, {"alpha", tube.config.alpha}};
    j["curve"] = curve_body(tube.curve);
    Json sections = Json::array();
    for (const auto& slot : tube.slots) {
        Json s;
        s["t0"] = slot.t0;
        s["gap"] = !slot.valid();
        if (!slot.valid()) {
            s["gap_code"] = to_string(slot.gap_code);
            s["gap_reason"] = slot.gap_reason;
        } else {
            const CrossSection& cs = *slot.section;
            const Mat3& r = cs.rotation.matrix();
            s["center"] = vec_json(cs.center);
            s["rotation"] = {r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2), r(2, 0), r(2, 1), r(2, 2)};
            s["mu"] = vec_json(cs.mu);
            s["sigma"] = {cs.sigma(0, 0), cs.sigma(0, 1), cs.sigma(1, 1)};
            s["alpha"] = cs.alpha;
            s["member_indices"] = cs.member_indices;
            s["weights"] = cs.weights;
        }
        sections.push_back(std::move(s));
    }
    j["sections"] = std::move(sections);
    return j.dump(1) + "\n";
}

namespace {

ErrorCode code_from_name(const std::string& name) {
    for (int k = 0; k <= static_cast<int>(ErrorCode::Io); ++k) {
        const auto code = static_cast<ErrorCode>(k);
        if (to_string(code) == name) {
            return code;
        }
    }
    fail(ErrorCode::Parse, "unknown gap code '" + name + "'");
}

Point3 point3_from(const Json& j) {
    if (j.size() != 3) {
        fail(ErrorCode::Parse, "expected 3 numbers");
    }
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

} // namespace

Tube tube_from_json(std::string_view text, std::string_view source) {
    const Json j = parse_document(text, source, "tubefit-tube");
    return guarded(source, [&] {
        TubeConfig config;
        config.n_sections = j.at("config").at("n_sections").get<int>();
        config.t_r = j.at("config").at("t_r").get<double>();
        config.alpha = j.at("config").at("alpha").get<double>();
        config.validate();
        PrincipalCurve curve = curve_from(j.at("curve"));
        std::vector<SectionSlot> slots;
        for (const auto& s : j.at("sections")) {
            SectionSlot slot;
            slot.t0 = s.at("t0").get<double>();
            if (s.at("gap").get<bool>()) {
                slot.gap_code = code_from_name(s.at("gap_code").get<std::string>());
                slot.gap_reason = s.at("gap_reason").get<std::string>();
            } else {
                CrossSection cs;
                cs.t0 = slot.t0;
                cs.center = point3_from(s.at("center"));
                const auto& r = s.at("rotation");
                if (r.size() != 9) {
                    fail(ErrorCode::Parse, "rotation needs 9 entries");
                }
                Mat3 m;
                for (int a = 0; a < 3; ++a) {
                    for (int b = 0; b < 3; ++b) {
                        m(a, b) = r.at(static_cast<std::size_t>(3 * a + b)).get<double>();
                    }
                }
                cs.rotation = Rotation3(m);
                cs.mu = Point2(s.at("mu").at(0).get<double>(), s.at("mu").at(1).get<double>());
                const auto& sg = s.at("sigma");
                cs.sigma << sg.at(0).get<double>(), sg.at(1).get<double>(), sg.at(1).get<double>(),
                    sg.at(2).get<double>();
                cs.alpha = s.at("alpha").get<double>();
                cs.ellipse = ellipse_from_covariance(cs.mu, cs.sigma, level_set_scale(cs.alpha));
                cs.member_indices = s.at("member_indices").get<std::vector<std::size_t>>();
                cs.weights = s.at("weights").get<std::vector<double>>();
                if (cs.weights.size() != cs.member_indices.size()) {
                    fail(ErrorCode::Parse, "weights and member indices differ in length");
                }
                slot.section = std::move(cs);
            }
            slots.push_back(std::move(slot));
        }
        if (static_cast<int>(slots.size()) != config.n_sections) {
            fail(ErrorCode::Parse, "section count does not match config");
        }
        return Tube{std::move(curve), std::move(slots), config};
    });
}

void write_tube(const Tube& tube, const std::filesystem::path& path, const Provenance& provenance) {
    write_text_file(path, tube_to_json(tube, provenance));
}

Tube read_tube(const std::filesystem::path& path) {
    return tube_from_json(read_text_file(path), path.string());
}

// ---- plot-ready text -----------------------------------------------------

void write_obj(std::ostream& out, const SurfaceMesh& mesh, const Provenance& provenance) {
    write_provenance_lines(out, provenance);
    for (const auto& v : mesh.vertices) {
        out << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
    }
    const bool tex = !mesh.scalars.empty();
    for (double s : mesh.scalars) {
        out << "vt " << format_double(s) << " 0\n";
    }
    for (const auto& q : mesh.quads) {
        out << 'f';
        for (std::size_t idx : q) {
            out << ' ' << idx + 1;
            if (tex) {
                out << '/' << idx + 1;
            }
        }
        out << '\n';
    }
}

void write_obj(const SurfaceMesh& mesh, const std::filesystem::path& path, const Provenance& provenance) {
    auto out = open_out(path);
    write_obj(out, mesh, provenance);
    finish(out, path);
}

void write_section_table(std::ostream& out, const Tube& tube, const Provenance& provenance, int grid_resolution) {
    write_provenance_lines(out, provenance);
    std::vector<double> t0s;
    for (const auto& s : tube.slots) {
        t0s.push_back(s.t0);
    }
    const std::vector<double> d = arc_lengths(tube.curve, t0s, grid_resolution);
    out << "t0,distance,semi_major,semi_minor,area,gap\n";
    for (std::size_t k = 0; k < tube.slots.size(); ++k) {
        const auto& slot = tube.slots[k];
        out << format_double(slot.t0) << ',' << format_double(d[k]) << ',';
        if (slot.valid()) {
            const Ellipse2D& e = slot.section->ellipse;
            out << format_double(e.semi_major) << ',' << format_double(e.semi_minor) << ','
                << format_double(ellipse_area(e)) << ",\n";
        } else {
            out << ",,," << to_string(slot.gap_code) << '\n';
        }
    }
}

void write_section_table(const Tube& tube, const std::filesystem::path& path, const Provenance& provenance,
                         int grid_resolution) {
    auto out = open_out(path);
    write_section_table(out, tube, provenance, grid_resolution);
    finish(out, path);
}

void write_profiles(std::ostream& out, const std::vector<Profile>& profiles, const Provenance& provenance) {
    write_provenance_lines(out, provenance);
    out << "kind,t0,distance,value,gap\n";
    for (const auto& p : profiles) {
        for (std::size_t k = 0; k < p.size(); ++k) {
            out << to_string(p.kind) << ',' << format_double(p.t0s[k]) << ',' << format_double(p.distances[k]) << ',';
            if (p.values[k]) {
                out << format_double(*p.values[k]) << ",0\n";
            } else {
                out << ",1\n";
            }
        }
    }
}

void write_profiles(const std::vector<Profile>& profiles, const std::filesystem::path& path,
                    const Provenance& provenance) {
    auto out = open_out(path);
    write_profiles(out, profiles, provenance);
    finish(out, path);
}

void write_alpha_report(std::ostream& out, const TPFPCurve& curve, const Provenance& provenance) {
    write_provenance_lines(out, provenance);
    out << "# replicates_used: " << curve.replicates_used << "\n# replicates_skipped: " << curve.replicates_skipped
        << '\n';
    out << "alpha,one_minus_alpha,mean_tp,se_tp,mean_fp,se_fp\n";
    for (std::size_t l = 0; l < curve.alpha_grid.size(); ++l) {
        out << format_double(curve.alpha_grid[l]) << ',' << format_double(1.0 - curve.alpha_grid[l]) << ','
            << format_double(curve.mean_tp[l]) << ',' << format_double(curve.se_tp[l]) << ','
            << format_double(curve.mean_fp[l]) << ',' << format_double(curve.se_fp[l]) << '\n';
    }
}

void write_shape_report(std::ostream& out, const std::vector<ShapeReportRow>& rows, const Provenance& provenance) {
    write_provenance_lines(out, provenance);
    out << "shape,alpha,tp_rate,fp_rate,tp,fp,fn,tn,valid_sections\n";
    for (const auto& r : rows) {
        const auto& c = r.result.classification;
        out << to_string(r.shape) << ',' << format_double(r.alpha) << ',' << format_double(c.true_positive_rate)
            << ',' << format_double(c.false_positive_rate) << ',' << c.tp << ',' << c.fp << ',' << c.fn << ','
            << c.tn << ',' << r.result.valid_sections << '\n';
    }
}

void write_validation_table(std::ostream& out, const std::vector<ValidationRow>& rows, const Provenance& provenance) {
    write_provenance_lines(out, provenance);
    out << "label,alpha,one_minus_alpha,tp_rate,fp_rate,tp,fp,fn,tn,boundary_fraction\n";
    for (const auto& r : rows) {
        const auto& c = r.result;
        out << r.label << ',' << format_double(r.alpha) << ',' << format_double(1.0 - r.alpha) << ','
            << format_double(c.true_positive_rate) << ',' << format_double(c.false_positive_rate) << ',' << c.tp
            << ',' << c.fp << ',' << c.fn << ',' << c.tn << ',';
        if (r.boundary_fraction >= 0.0) {
            out << format_double(r.boundary_fraction);
        }
        out << '\n';
    }
}

} // namespace tubefit
