#include "tubefit/spline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "tubefit/core.hpp"

namespace tubefit {

namespace {

constexpr int kMaxDegree = 3;

int degree_for(int df) { return std::min(kMaxDegree, df - 1); }

std::vector<double> clamped_knots(const std::vector<double>& interior, int degree) {
    std::vector<double> u;
    u.reserve(interior.size() + 2 * static_cast<std::size_t>(degree + 1));
    u.insert(u.end(), static_cast<std::size_t>(degree + 1), 0.0);
    u.insert(u.end(), interior.begin(), interior.end());
    u.insert(u.end(), static_cast<std::size_t>(degree + 1), 1.0);
    return u;
}

void check_interior(const std::vector<double>& interior, int df) {
    if (df < 2) {
        fail(ErrorCode::Precondition, "spline df must be at least 2, got " + std::to_string(df));
    }
    const int expected = df - degree_for(df) - 1;
    if (static_cast<int>(interior.size()) != expected) {
        fail(ErrorCode::Precondition, "df " + std::to_string(df) + " needs " +
                                          std::to_string(expected) + " interior knots, got " +
                                          std::to_string(interior.size()));
    }
    double prev = 0.0;
    for (double k : interior) {
        if (!(k > prev) || !(k < 1.0)) {
            fail(ErrorCode::Precondition, "interior knots must be strictly increasing in (0, 1)");
        }
        prev = k;
    }
}

// Knot span index s with u[s] <= t < u[s+1]; t = 1 maps to the last nonempty span.
int find_span(const std::vector<double>& u, int n_basis, int degree, double t) {
    if (t >= u[static_cast<std::size_t>(n_basis)]) {
        return n_basis - 1;
    }
    const auto it = std::upper_bound(u.begin() + degree, u.begin() + n_basis + 1, t);
    return static_cast<int>(it - u.begin()) - 1;
}

// Nonzero basis functions of degree q at span s: out[r] = N_{s-q+r, q}(t).
void basis_functions(const std::vector<double>& u, int s, int q, double t,
                     std::array<double, kMaxDegree + 1>& out) {
    std::array<double, kMaxDegree + 1> left{};
    std::array<double, kMaxDegree + 1> right{};
    out[0] = 1.0;
    for (int j = 1; j <= q; ++j) {
        left[static_cast<std::size_t>(j)] = t - u[static_cast<std::size_t>(s + 1 - j)];
        right[static_cast<std::size_t>(j)] = u[static_cast<std::size_t>(s + j)] - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
            const double temp = out[static_cast<std::size_t>(r)] / denom;
            out[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
            saved = left[static_cast<std::size_t>(j - r)] * temp;
        }
        out[static_cast<std::size_t>(j)] = saved;
    }
}

void check_t(double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        fail(ErrorCode::Domain, "spline evaluated outside [0, 1] at t = " + std::to_string(t));
    }
}

double greville(const std::vector<double>& u, int j, int degree) {
    double sum = 0.0;
    for (int k = 1; k <= degree; ++k) {
        sum += u[static_cast<std::size_t>(j + k)];
    }
    return sum / degree;
}

} // namespace

CoordinateSpline CoordinateSpline::from_parts(std::vector<double> interior_knots,
                                              std::vector<double> coefficients, int df,
                                              std::optional<EndpointValues> endpoints) {
    check_interior(interior_knots, df);
    if (static_cast<int>(coefficients.size()) != df) {
        fail(ErrorCode::Precondition, "spline needs one coefficient per degree of freedom");
    }
    for (double c : coefficients) {
        if (!std::isfinite(c)) {
            fail(ErrorCode::Precondition, "spline coefficient is not finite");
        }
    }
    CoordinateSpline s;
    s.df_ = df;
    s.degree_ = degree_for(df);
    s.interior_ = std::move(interior_knots);
    s.knots_ = clamped_knots(s.interior_, s.degree_);
    s.coefficients_ = std::move(coefficients);
    s.endpoints_ = endpoints;
    return s;
}

CoordinateSpline CoordinateSpline::constant(double value, int df) {
    const SplineBasis basis = [&] {
        std::vector<double> interior;
        const int m = df - degree_for(df) - 1;
        for (int j = 1; j <= m; ++j) {
            interior.push_back(static_cast<double>(j) / (m + 1));
        }
        return SplineBasis(std::move(interior), df);
    }();
    return from_parts(basis.interior_knots(), std::vector<double>(static_cast<std::size_t>(df), value),
                      df, std::nullopt);
}

double CoordinateSpline::value(double t) const {
    check_t(t);
    const int s = find_span(knots_, df_, degree_, t);
    std::array<double, kMaxDegree + 1> n{};
    basis_functions(knots_, s, degree_, t, n);
    double v = 0.0;
    for (int r = 0; r <= degree_; ++r) {
        v += n[static_cast<std::size_t>(r)] * coefficients_[static_cast<std::size_t>(s - degree_ + r)];
    }
    return v;
}

double CoordinateSpline::derivative(double t) const {
    check_t(t);
    const int p = degree_;
    const int s = find_span(knots_, df_, p, t);
    std::array<double, kMaxDegree + 1> n{};
    basis_functions(knots_, s, p - 1, t, n);
    // f'(t) = sum_j N_{j,p-1}(t) * p (d_j - d_{j-1}) / (u_{j+p} - u_j), j = s-p+1..s.
    double v = 0.0;
    for (int r = 0; r < p; ++r) {
        const int j = s - p + 1 + r;
        const double span = knots_[static_cast<std::size_t>(j + p)] - knots_[static_cast<std::size_t>(j)];
        const double q = p * (coefficients_[static_cast<std::size_t>(j)] -
                              coefficients_[static_cast<std::size_t>(j - 1)]) / span;
        v += n[static_cast<std::size_t>(r)] * q;
    }
    return v;
}

SplineBasis::SplineBasis(std::vector<double> interior_knots, int df)
    : df_(df), degree_(degree_for(df)), interior_(std::move(interior_knots)) {
    check_interior(interior_, df);
}

SplineBasis SplineBasis::from_quantiles(std::span<const double> ts, std::span<const double> weights,
                                        int df) {
    if (df < 2) {
        fail(ErrorCode::Precondition, "spline df must be at least 2, got " + std::to_string(df));
    }
    std::vector<double> sorted;
    sorted.reserve(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (weights.empty() || weights[i] > 0.0) {
            sorted.push_back(ts[i]);
        }
    }
    if (sorted.empty()) {
        fail(ErrorCode::InsufficientData, "no points with positive weight");
    }
    std::sort(sorted.begin(), sorted.end());
    const int m = df - degree_for(df) - 1;
    std::vector<double> knots(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        const double level = static_cast<double>(j + 1) / (m + 1);
        const double pos = level * static_cast<double>(sorted.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        knots[static_cast<std::size_t>(j)] = sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    }
    const double gap = kTolerances.knot_spacing;
    double prev = 0.0;
    for (double& k : knots) {
        k = std::max(k, prev + gap);
        prev = k;
    }
    double next = 1.0;
    for (auto it = knots.rbegin(); it != knots.rend(); ++it) {
        *it = std::min(*it, next - gap);
        next = *it;
    }
    if (!knots.empty() && !(knots.front() > 0.0)) {
        fail(ErrorCode::DegenerateFit, "too many knots for the available spacing");
    }
    return SplineBasis(std::move(knots), df);
}

CoordinateSpline SplineBasis::fit(std::span<const double> ts, std::span<const double> ys,
                                  std::span<const double> weights,
                                  const std::optional<EndpointValues>& endpoints) const {
    const std::size_t n = ts.size();
    if (ys.size() != n || weights.size() != n) {
        fail(ErrorCode::Precondition, "ts, ys and weights must have equal length");
    }
    std::size_t positive = 0;
    std::vector<double> distinct;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(ts[i] >= 0.0 && ts[i] <= 1.0)) {
            fail(ErrorCode::Domain, "latent time outside [0, 1] at index " + std::to_string(i));
        }
        if (!std::isfinite(ys[i]) || !std::isfinite(weights[i]) || weights[i] < 0.0) {
            fail(ErrorCode::Precondition, "non-finite value or negative weight at index " + std::to_string(i));
        }
        if (weights[i] > 0.0) {
            ++positive;
            distinct.push_back(ts[i]);
        }
    }
    if (positive == 0) {
        fail(ErrorCode::Precondition, "weights are all zero");
    }
    if (positive < static_cast<std::size_t>(df_ + 2)) {
        fail(ErrorCode::InsufficientData, "df " + std::to_string(df_) + " needs at least " +
                                              std::to_string(df_ + 2) + " weighted points, got " +
                                              std::to_string(positive));
    }
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    const std::vector<double> u = clamped_knots(interior_, degree_);
    const bool constrained = endpoints.has_value();
    // Free basis functions: all of them, or the interior ones that vanish at both ends.
    const int first = constrained ? 1 : 0;
    const int n_free = constrained ? df_ - 2 : df_;

    if (distinct.size() < static_cast<std::size_t>(std::max(n_free, 1))) {
        fail(ErrorCode::DegenerateFit, "latent times take " + std::to_string(distinct.size()) +
                                           " distinct values; the design is rank deficient");
    }

    auto chord = [&](double t) {
        return endpoints->at_start + (endpoints->at_end - endpoints->at_start) * t;
    };

    std::vector<double> coeffs(static_cast<std::size_t>(df_), 0.0);
    if (n_free > 0) {
        Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(n_free, n_free);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_free);
        std::array<double, kMaxDegree + 1> basis{};
        for (std::size_t i = 0; i < n; ++i) {
            const double w = weights[i];
            if (w <= 0.0) {
                continue;
            }
            const double t = ts[i];
            const double y = constrained ? ys[i] - chord(t) : ys[i];
            const int s = find_span(u, df_, degree_, t);
            basis_functions(u, s, degree_, t, basis);
            for (int r = 0; r <= degree_; ++r) {
                const int a = s - degree_ + r - first;
                if (a < 0 || a >= n_free) {
                    continue;
                }
                const double wa = w * basis[static_cast<std::size_t>(r)];
                rhs(a) += wa * y;
                for (int c = 0; c <= degree_; ++c) {
                    const int b = s - degree_ + c - first;
                    if (b < 0 || b >= n_free) {
                        continue;
                    }
                    normal(a, b) += wa * basis[static_cast<std::size_t>(c)];
                }
            }
        }
        Eigen::VectorXd scale(n_free);
        for (int a = 0; a < n_free; ++a) {
            if (!(normal(a, a) > 0.0)) {
                fail(ErrorCode::DegenerateFit,
                     "basis function " + std::to_string(a + first) + " has no weighted data in its support");
            }
            scale(a) = 1.0 / std::sqrt(normal(a, a));
        }
        const Eigen::MatrixXd scaled = scale.asDiagonal() * normal * scale.asDiagonal();
        const Eigen::VectorXd scaled_rhs = scale.cwiseProduct(rhs);
        Eigen::LLT<Eigen::MatrixXd> llt(scaled);
        if (llt.info() != Eigen::Success) {
            Eigen::MatrixXd jittered = scaled;
            jittered.diagonal().array() += kTolerances.ridge;
            llt.compute(jittered);
            if (llt.info() != Eigen::Success) {
                fail(ErrorCode::DegenerateFit, "normal equations are singular");
            }
        }
        const Eigen::VectorXd sol = scale.cwiseProduct(llt.solve(scaled_rhs));
        if (!sol.allFinite()) {
            fail(ErrorCode::DegenerateFit, "spline solve produced non-finite coefficients");
        }
        for (int a = 0; a < n_free; ++a) {
            coeffs[static_cast<std::size_t>(a + first)] = sol(a);
        }
    }
    if (constrained) {
        // The chord is reproduced exactly by coefficients at the Greville abscissae.
        for (int j = 0; j < df_; ++j) {
            coeffs[static_cast<std::size_t>(j)] += chord(greville(u, j, degree_));
        }
        coeffs.front() = endpoints->at_start;
        coeffs.back() = endpoints->at_end;
    }
    return CoordinateSpline::from_parts(interior_, std::move(coeffs), df_, endpoints);
}

CoordinateSpline fit_spline(std::span<const double> ts, std::span<const double> ys,
                            std::span<const double> weights, int df,
                            const std::optional<EndpointValues>& endpoints) {
    if (df < 2) {
        fail(ErrorCode::Precondition, "spline df must be at least 2, got " + std::to_string(df));
    }
    if (ts.size() != ys.size() || ts.size() != weights.size()) {
        fail(ErrorCode::Precondition, "ts, ys and weights must have equal length");
    }
    std::size_t positive = 0;
    for (double w : weights) {
        positive += w > 0.0 ? 1 : 0;
    }
    if (positive == 0) {
        fail(ErrorCode::Precondition, "weights are all zero");
    }
    if (positive < static_cast<std::size_t>(df + 2)) {
        fail(ErrorCode::InsufficientData, "df " + std::to_string(df) + " needs at least " +
                                              std::to_string(df + 2) + " weighted points, got " +
                                              std::to_string(positive));
    }
    return SplineBasis::from_quantiles(ts, weights, df).fit(ts, ys, weights, endpoints);
}

double weighted_rss(const CoordinateSpline& s, std::span<const double> ts,
                    std::span<const double> ys, std::span<const double> weights) {
    double rss = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double r = ys[i] - s.value(ts[i]);
        rss += weights[i] * r * r;
    }
    return rss;
}

} // namespace tubefit
