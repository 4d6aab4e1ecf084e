#include "tubefit/tube.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tubefit/parallel.hpp"
#include "tubefit/simd/kernels.hpp"

namespace tubefit {

void TubeConfig::validate() const {
    if (n_sections < 1) {
        fail(ErrorCode::Precondition, "tube needs at least one section");
    }
    if (!(t_r > 0.0)) {
        fail(ErrorCode::Precondition, "time window half-width must be positive");
    }
    level_set_scale(alpha);
}

std::vector<double> TubeConfig::section_times() const {
    std::vector<double> t(static_cast<std::size_t>(n_sections));
    for (int k = 0; k < n_sections; ++k) {
        t[static_cast<std::size_t>(k)] = n_sections == 1 ? 0.5 : static_cast<double>(k) / (n_sections - 1);
    }
    return t;
}

std::size_t Tube::valid_count() const {
    return static_cast<std::size_t>(
        std::count_if(slots.begin(), slots.end(), [](const SectionSlot& s) { return s.valid(); }));
}

Tube Tube::with_alpha(double new_alpha) const {
    level_set_scale(new_alpha);
    Tube out = *this;
    out.config.alpha = new_alpha;
    for (auto& slot : out.slots) {
        if (slot.section) {
            slot.section = slot.section->with_alpha(new_alpha);
        }
    }
    return out;
}

Tube fit_tube(const PrincipalCurve& curve, const PointCloud& cloud, const TubeConfig& config) {
    config.validate();
    if (cloud.size() != curve.latent_times().size()) {
        fail(ErrorCode::Precondition, "cloud does not match the curve's latent times");
    }
    const std::vector<double> times = config.section_times();
    std::vector<SectionSlot> slots(times.size());
    parallel_for(times.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            slots[k].t0 = times[k];
            try {
                slots[k].section = fit_cross_section(curve, cloud, times[k], config.t_r, config.alpha);
            } catch (const Error& e) {
                slots[k].gap_code = e.code();
                slots[k].gap_reason = e.what();
            }
        }
    }, 1);
    Tube tube{curve, std::move(slots), config};
    const std::size_t failed = tube.slots.size() - tube.valid_count();
    if (2 * failed > tube.slots.size()) {
        std::ostringstream msg;
        msg << failed << " of " << tube.slots.size() << " cross sections failed";
        for (const auto& s : tube.slots) {
            if (!s.valid()) {
                msg << "; first failure: " << s.gap_reason;
                break;
            }
        }
        fail(ErrorCode::TubeFitFailed, msg.str());
    }
    return tube;
}

TubeScorer::TubeScorer(const Tube& tube) : tube_(&tube) {
    for (std::size_t k = 0; k < tube.slots.size(); ++k) {
        valid_t0_.push_back(tube.slots[k].t0);
        valid_.push_back(k);
    }
    if (tube.valid_count() == 0) {
        fail(ErrorCode::Precondition, "tube has no valid cross sections");
    }
    // The end slices reach to the curve's own endpoints and no further.
    const auto& c = tube.curve;
    const double slack = 1e-9 * (1.0 + (c.point(1.0) - c.point(0.0)).norm());
    start_cap_ = (c.point(tube.slots.front().t0) - c.point(0.0)).norm() + slack;
    end_cap_ = (c.point(1.0) - c.point(tube.slots.back().t0)).norm() + slack;
}

TubeScore TubeScorer::score(const Point3& p) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const CurveSamples& g = tube_->curve.samples();
    const std::size_t k = simd::active_kernels().nearest_sample(g.x.data(), g.y.data(), g.z.data(),
                                                                g.size(), p.x(), p.y(), p.z());
    const double tp = g.t(k);
    // Nearest slot by t0, ties toward the smaller t0. A gap there means outside.
    auto it = std::lower_bound(valid_t0_.begin(), valid_t0_.end(), tp);
    std::size_t pos = static_cast<std::size_t>(it - valid_t0_.begin());
    if (pos == valid_t0_.size()) {
        pos = valid_t0_.size() - 1;
    } else if (pos > 0 && tp - valid_t0_[pos - 1] <= valid_t0_[pos] - tp) {
        pos = pos - 1;
    }
    const std::size_t slot = valid_[pos];
    const SectionSlot& s = tube_->slots[slot];
    if (!s.section) {
        return {inf, slot};
    }
    const Vec3 local = s.section->to_frame(p);
    if (slot == 0 && local.z() < -start_cap_) {
        return {inf, slot};
    }
    if (slot == tube_->slots.size() - 1 && local.z() > end_cap_) {
        return {inf, slot};
    }
    return {s.section->mahalanobis2(local.head<2>()), slot};
}

std::vector<TubeScore> TubeScorer::score(std::span<const Point3> points) const {
    std::vector<TubeScore> out(points.size());
    parallel_for(points.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            out[i] = score(points[i]);
        }
    });
    return out;
}

bool point_in_tube(const Tube& tube, const Point3& p) {
    const TubeScore s = TubeScorer(tube).score(p);
    return s.mahalanobis2 <= level_set_scale(tube.config.alpha);
}

std::size_t Lattice::size() const noexcept {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
}

std::size_t Lattice::index(int i, int j, int k) const noexcept {
    return (static_cast<std::size_t>(k) * static_cast<std::size_t>(dims[1]) + static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(dims[0]) +
           static_cast<std::size_t>(i);
}

std::array<int, 3> Lattice::coords(std::size_t index) const noexcept {
    const auto nx = static_cast<std::size_t>(dims[0]);
    const auto ny = static_cast<std::size_t>(dims[1]);
    return {static_cast<int>(index % nx), static_cast<int>((index / nx) % ny),
            static_cast<int>(index / (nx * ny))};
}

Point3 Lattice::center(std::size_t index) const noexcept {
    const auto c = coords(index);
    return origin + pitch * Point3(c[0], c[1], c[2]);
}

void Lattice::validate() const {
    if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) {
        fail(ErrorCode::Precondition, "lattice dimensions must be positive");
    }
    if (!(pitch > 0.0) || !origin.allFinite()) {
        fail(ErrorCode::Precondition, "lattice pitch must be positive and origin finite");
    }
}

ClassificationResult classify_scores(std::span<const TubeScore> scores,
                                     std::span<const std::uint8_t> truth, double alpha,
                                     std::size_t n_slots) {
    if (scores.size() != truth.size()) {
        fail(ErrorCode::Precondition, "scores and truth mask differ in size");
    }
    const double level = level_set_scale(alpha);
    ClassificationResult r;
    r.per_section.assign(n_slots, SectionCounts{});
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool inside = scores[i].mahalanobis2 <= level;
        const bool in_truth = truth[i] != 0;
        if (inside && in_truth) {
            ++r.tp;
            if (scores[i].slot < n_slots) {
                ++r.per_section[scores[i].slot].tp;
            }
        } else if (inside) {
            ++r.fp;
            if (scores[i].slot < n_slots) {
                ++r.per_section[scores[i].slot].fp;
            }
        } else if (in_truth) {
            ++r.fn;
        } else {
            ++r.tn;
        }
    }
    const std::uint64_t truth_size = r.tp + r.fn;
    if (truth_size == 0) {
        fail(ErrorCode::Domain, "truth set is empty");
    }
    r.true_positive_rate = static_cast<double>(r.tp) / static_cast<double>(truth_size);
    r.false_positive_rate = static_cast<double>(r.fp) / static_cast<double>(truth_size);
    return r;
}

ClassificationResult classify_against_truth(const Tube& tube, std::span<const std::uint8_t> truth,
                                            const Lattice& lattice) {
    lattice.validate();
    if (truth.size() != lattice.size()) {
        fail(ErrorCode::Precondition, "truth mask does not match the lattice");
    }
    if (std::none_of(truth.begin(), truth.end(), [](std::uint8_t v) { return v != 0; })) {
        fail(ErrorCode::Domain, "truth set is empty");
    }
    std::vector<Point3> centers(lattice.size());
    for (std::size_t i = 0; i < centers.size(); ++i) {
        centers[i] = lattice.center(i);
    }
    const std::vector<TubeScore> scores = TubeScorer(tube).score(centers);
    return classify_scores(scores, truth, tube.config.alpha, tube.slots.size());
}

SurfaceMesh export_surface(const Tube& tube, int n_boundary, int n_rings,
                           std::span<const double> section_scalars) {
    if (n_boundary < 3) {
        fail(ErrorCode::Export, "surface export needs at least 3 boundary points per ring");
    }
    if (!section_scalars.empty() && section_scalars.size() != tube.slots.size()) {
        fail(ErrorCode::Export, "section scalars must have one value per section");
    }
    std::vector<std::size_t> valid;
    for (std::size_t k = 0; k < tube.slots.size(); ++k) {
        if (tube.slots[k].valid()) {
            valid.push_back(k);
        }
    }
    if (valid.size() < 2) {
        fail(ErrorCode::Export, "surface export needs at least two valid cross sections");
    }
    std::vector<std::size_t> chosen = valid;
    if (n_rings > 0 && static_cast<std::size_t>(n_rings) < valid.size()) {
        chosen.clear();
        const std::size_t m = static_cast<std::size_t>(std::max(n_rings, 2));
        for (std::size_t r = 0; r < m; ++r) {
            const std::size_t pick = (r * (valid.size() - 1) + (m - 1) / 2) / (m - 1);
            if (chosen.empty() || chosen.back() != valid[pick]) {
                chosen.push_back(valid[pick]);
            }
        }
    }

    SurfaceMesh mesh;
    const auto nb = static_cast<std::size_t>(n_boundary);
    std::vector<Point3> previous;
    std::size_t prev_slot = 0;
    for (std::size_t r = 0; r < chosen.size(); ++r) {
        const std::size_t slot = chosen[r];
        std::vector<Point3> ring = embed_ellipse(*tube.slots[slot].section, n_boundary);
        const bool connect =
            !previous.empty() &&
            std::all_of(tube.slots.begin() + static_cast<std::ptrdiff_t>(prev_slot),
                        tube.slots.begin() + static_cast<std::ptrdiff_t>(slot) + 1,
                        [](const SectionSlot& s) { return s.valid(); });
        if (connect) {
            // Rotate the ring start so consecutive rings do not twist.
            std::size_t best_shift = 0;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t shift = 0; shift < nb; ++shift) {
                double d = 0.0;
                for (std::size_t j = 0; j < nb; ++j) {
                    d += (ring[(j + shift) % nb] - previous[j]).squaredNorm();
                }
                if (d < best) {
                    best = d;
                    best_shift = shift;
                }
            }
            std::rotate(ring.begin(), ring.begin() + static_cast<std::ptrdiff_t>(best_shift), ring.end());
        }
        const std::size_t base = mesh.vertices.size();
        mesh.vertices.insert(mesh.vertices.end(), ring.begin(), ring.end());
        if (!section_scalars.empty()) {
            mesh.scalars.insert(mesh.scalars.end(), nb, section_scalars[slot]);
        }
        if (connect) {
            const std::size_t prev_base = base - nb;
            for (std::size_t j = 0; j < nb; ++j) {
                const std::size_t j1 = (j + 1) % nb;
                mesh.quads.push_back({prev_base + j, prev_base + j1, base + j1, base + j});
            }
        }
        previous = std::move(ring);
        prev_slot = slot;
    }
    return mesh;
}

} // namespace tubefit
