#pragma once

#include "tensor/array3.hpp"

#include <functional>
#include <vector>

namespace pencilrank {

enum class RotationSide { Row, Column };

/// One angle parameter: a rotation of lines (rows or columns) i < j.
struct RotationPair {
    RotationSide side = RotationSide::Row;
    Eigen::Index i = 0;
    Eigen::Index j = 1;
};

/// The slices being rotated together with the accumulated orthonormal factors,
/// i.e. slices = Qa^T Z_k Qb for the original array Z.
struct RotatedPair {
    Matrix qa;
    Matrix qb;
    std::array<Matrix, 2> slices;

    static RotatedPair start(const Array3& z, Matrix qa, Matrix qb);

    /// line_m <- c line_m + s line_p, line_p <- c line_p - s line_m on both
    /// slices, and the matching columns of Qa (rows) or Qb (columns).
    void rotate(RotationSide side, Eigen::Index minimized, Eigen::Index kept, double c, double s);

    /// Apply U_a^T (.) U_b where U_a, U_b are ordered products of Givens
    /// matrices G(i, j, angle) (cos on the diagonal, sin at (j,i)).
    void apply_parameters(const std::vector<RotationPair>& params, const Vector& angles);
};

/// Sum over k of ||mask o T_k(theta)||^2 where T_k(theta) = U_a(theta)^T T_k U_b(theta)
/// and the angles run over a fixed list of rotation pairs. The mask is 1 on
/// entries that count as residual.
class MaskedRotationObjective {
public:
    MaskedRotationObjective(Matrix mask, std::vector<RotationPair> params);

    const Matrix& mask() const noexcept { return mask_; }
    const std::vector<RotationPair>& parameters() const noexcept { return params_; }
    Eigen::Index dimension() const noexcept { return static_cast<Eigen::Index>(params_.size()); }

    double value(const RotatedPair& state) const;

    /// Objective after applying `angles` to the current state.
    double value_at(const RotatedPair& state, const Vector& angles) const;

    Vector gradient(const RotatedPair& state) const;

    /// Exact Hessian at theta = 0 of the ordered-product parameterization.
    Matrix hessian(const RotatedPair& state) const;

private:
    Matrix mask_;
    std::vector<RotationPair> params_;
};

/// Residual mask of the GSD problem: everything except the upper triangle of
/// the leading rank x rank block.
Matrix gsd_mask(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank);

/// Residual mask of the multilinear rank-(R,R,2) problem: everything except
/// the leading rank x rank block.
Matrix block_mask(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank);

/// Row pairs (i < rank, i < j < rows) then column pairs (i < rank, i < j < cols),
/// lexicographic.
std::vector<RotationPair> gsd_parameters(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank);

/// Row pairs (i < rank <= j < rows) then column pairs (i < rank <= j < cols).
std::vector<RotationPair> subspace_parameters(Eigen::Index rows, Eigen::Index cols,
                                              Eigen::Index rank);

struct PolishResult {
    int iterations = 0;
    double max_abs_gradient = 0.0;
    bool positive_definite = false;
};

/// Damped Newton iteration on the angle parameters with a backtracking line
/// search; an indefinite Hessian gets a Levenberg shift. After every step the
/// optional `relax` callback may lower the objective further (the GSD runs a
/// few Jacobi sweeps there, which settle the stiff directions that a step along
/// a curved valley disturbs). Stops when neither the step nor the relaxation
/// makes progress or once the gradient reaches rounding level.
/// `positive_definite` reports the unshifted Hessian of the last iteration.
PolishResult newton_polish(const MaskedRotationObjective& objective, RotatedPair& state,
                           const std::function<void(RotatedPair&)>& relax = {},
                           int max_iterations = 1000);

}  // namespace pencilrank
