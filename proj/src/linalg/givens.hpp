#pragma once

#include "tensor/array3.hpp"

#include <span>

namespace pencilrank {

/// Plane rotation in coordinates (i, j), i < j. As a matrix it equals the
/// identity except cos at (i,i),(j,j), sin at (j,i) and -sin at (i,j).
struct GivensRotation {
    Eigen::Index i = 0;
    Eigen::Index j = 1;
    double angle = 0.0;

    Matrix as_matrix(Eigen::Index order) const;
};

/// Sufficient statistics of a rotation problem: x'x, y'y and x'y, summed over slices.
struct RotationGram {
    double xx = 0.0;
    double yy = 0.0;
    double xy = 0.0;

    RotationGram& operator+=(const RotationGram& other) {
        xx += other.xx;
        yy += other.yy;
        xy += other.xy;
        return *this;
    }
};

RotationGram rotation_gram(std::span<const double> x, std::span<const double> y);

struct OptimalAngle {
    double angle = 0.0;
    double value = 0.0;  // f at the returned angle
    bool degenerate = false;
};

/// f(a) = ||cos(a) x + sin(a) y||^2, the mass left in x after rotating (x, y) by a.
double rotated_mass(const RotationGram& g, double angle);

/// df/da = 2 x~'y~ evaluated at angle a.
double rotated_mass_derivative(const RotationGram& g, double angle);

/// Global minimizer of rotated_mass over (-pi/2, pi/2].
///
/// The stationarity equation is divided by cos^2 and solved as a quadratic in
/// tan(a); f is evaluated at both roots and at pi/2 and the smallest wins.
/// When f is constant (x'y = 0 and x'x = y'y) the angle is 0 and `degenerate`
/// is set.
OptimalAngle optimal_angle(const RotationGram& g);
OptimalAngle optimal_angle(std::span<const double> x, std::span<const double> y);

}  // namespace pencilrank
