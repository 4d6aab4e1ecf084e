#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace tubefit {

/// Values a constrained spline takes at t = 0 and t = 1.
struct EndpointValues {
    double at_start = 0.0;
    double at_end = 0.0;
};

/// Regression spline for one coordinate over latent time [0, 1].
///
/// Stored in clamped B-spline form: `df` coefficients, degree min(3, df - 1),
/// and df - degree - 1 strictly increasing interior knots in (0, 1). The
/// polynomial pieces are cubic for df >= 4.
class CoordinateSpline {
public:
    /// Validates and assembles a spline from stored parts. Used by readers.
    static CoordinateSpline from_parts(std::vector<double> interior_knots,
                                       std::vector<double> coefficients, int df,
                                       std::optional<EndpointValues> endpoints);

    /// Spline equal to `value` everywhere.
    static CoordinateSpline constant(double value, int df = 4);

    int df() const noexcept { return df_; }
    int degree() const noexcept { return degree_; }
    const std::vector<double>& interior_knots() const noexcept { return interior_; }
    const std::vector<double>& coefficients() const noexcept { return coefficients_; }
    const std::optional<EndpointValues>& endpoints() const noexcept { return endpoints_; }

    /// Throws Domain for t outside [0, 1].
    double value(double t) const;
    double derivative(double t) const;

private:
    CoordinateSpline() = default;

    int df_ = 0;
    int degree_ = 0;
    std::vector<double> interior_;
    std::vector<double> knots_;  // full clamped knot vector
    std::vector<double> coefficients_;
    std::optional<EndpointValues> endpoints_;
};

/// Knot layout shared by several fits (the three coordinates of a curve, or
/// every iteration of one df stage).
class SplineBasis {
public:
    /// Interior knots at equally spaced quantiles of the ts with positive weight.
    static SplineBasis from_quantiles(std::span<const double> ts, std::span<const double> weights,
                                      int df);

    SplineBasis(std::vector<double> interior_knots, int df);

    int df() const noexcept { return df_; }
    int degree() const noexcept { return degree_; }
    const std::vector<double>& interior_knots() const noexcept { return interior_; }

    /// Weighted least squares fit. With `endpoints`, the chord through the
    /// endpoint values is removed first and the residual is fitted with the
    /// basis functions that vanish at both ends.
    CoordinateSpline fit(std::span<const double> ts, std::span<const double> ys,
                         std::span<const double> weights,
                         const std::optional<EndpointValues>& endpoints = std::nullopt) const;

private:
    int df_;
    int degree_;
    std::vector<double> interior_;
};

/// Quantile-knot cubic regression spline with `df` degrees of freedom.
CoordinateSpline fit_spline(std::span<const double> ts, std::span<const double> ys,
                            std::span<const double> weights, int df,
                            const std::optional<EndpointValues>& endpoints = std::nullopt);

inline double eval_spline(const CoordinateSpline& s, double t) { return s.value(t); }
inline double eval_spline_deriv(const CoordinateSpline& s, double t) { return s.derivative(t); }

double weighted_rss(const CoordinateSpline& s, std::span<const double> ts,
                    std::span<const double> ys, std::span<const double> weights);

} // namespace tubefit
