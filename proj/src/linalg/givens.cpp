#include "linalg/givens.hpp"

#include "common/error.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace pencilrank {

Matrix GivensRotation::as_matrix(Eigen::Index order) const {
    if (i < 0 || j <= i || j >= order) {
        fail(ErrorCode::Dimension, "Givens indices must satisfy 0 <= i < j < order");
    }
    Matrix u = Matrix::Identity(order, order);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    u(i, i) = c;
    u(j, j) = c;
    u(j, i) = s;
    u(i, j) = -s;
    return u;
}

RotationGram rotation_gram(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        fail(ErrorCode::Dimension, "rotation vectors must have equal length");
    }
    RotationGram g;
    for (std::size_t k = 0; k < x.size(); ++k) {
        g.xx += x[k] * x[k];
        g.yy += y[k] * y[k];
        g.xy += x[k] * y[k];
    }
    return g;
}

double rotated_mass(const RotationGram& g, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return c * c * g.xx + s * s * g.yy + 2.0 * s * c * g.xy;
}

double rotated_mass_derivative(const RotationGram& g, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return 2.0 * ((c * c - s * s) * g.xy + s * c * (g.yy - g.xx));
}

OptimalAngle optimal_angle(const RotationGram& g) {
    const double scale = g.xx + g.yy;
    const double diff = g.yy - g.xx;
    if (scale == 0.0 || (std::abs(g.xy) <= 1e-15 * scale && std::abs(diff) <= 1e-15 * scale)) {
        return {0.0, rotated_mass(g, 0.0), true};
    }

    // Stationary points: xy*t^2 - (yy - xx)*t - xy = 0 with t = tan(a), plus a = pi/2.
    std::array<double, 3> candidates{0.0, std::numbers::pi / 2, 0.0};
    std::size_t count = 2;
    if (g.xy != 0.0) {
        const double disc = std::sqrt(diff * diff + 4.0 * g.xy * g.xy);
        // Stable pair of roots; their product is -1.
        const double q = diff >= 0.0 ? 0.5 * (diff + disc) : 0.5 * (diff - disc);
        const double t1 = q / g.xy;
        const double t2 = -g.xy / q;
        candidates[0] = std::atan(t1);
        candidates[2] = std::atan(t2);
        count = 3;
    }

    OptimalAngle best{candidates[0], rotated_mass(g, candidates[0]), false};
    for (std::size_t k = 1; k < count; ++k) {
        const double f = rotated_mass(g, candidates[k]);
        if (f < best.value) {
            best = {candidates[k], f, false};
        }
    }
    return best;
}

OptimalAngle optimal_angle(std::span<const double> x, std::span<const double> y) {
    return optimal_angle(rotation_gram(x, y));
}

}  // namespace pencilrank
