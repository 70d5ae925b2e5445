#pragma once

#include "tdbs/coefficients.hpp"
#include "tdbs/domain_grid.hpp"

#include <Eigen/Sparse>

#include <cstdint>
#include <iosfwd>
#include <memory>

namespace tdbs {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Finite-difference image of A = -sum a_ij d_i d_j + sum b_i d_i + q on the
/// interior nodes of a grid, with homogeneous Dirichlet data eliminated.
class DiscreteOperator {
public:
    DiscreteOperator(std::shared_ptr<const Grid> grid, SparseMatrix matrix,
                     OperatorCoefficients coefficients)
        : grid_(std::move(grid)), matrix_(std::move(matrix)), coeffs_(std::move(coefficients)) {}

    const Grid& grid() const noexcept { return *grid_; }
    const std::shared_ptr<const Grid>& grid_ptr() const noexcept { return grid_; }
    const SparseMatrix& matrix() const noexcept { return matrix_; }
    const OperatorCoefficients& coefficients() const noexcept { return coeffs_; }
    Eigen::Index size() const noexcept { return matrix_.rows(); }

private:
    std::shared_ptr<const Grid> grid_;
    SparseMatrix matrix_;
    OperatorCoefficients coeffs_;
};

/// Second-order central differences: 3-point second derivatives, the
/// four-corner cross stencil for i != j, central drift.
DiscreteOperator assemble(const OperatorCoefficients& coeffs, std::shared_ptr<const Grid> grid);

Eigen::VectorXd apply(const DiscreteOperator& op, const Eigen::VectorXd& u);

/// Power-iteration estimate of the spectral norm of A1 A2 - A2 A1.
double commutator_norm(const DiscreteOperator& op1, const DiscreteOperator& op2,
                       int iterations = 100, std::uint64_t seed = 0x5eed);

/// Smallest c1 >= 0 with <A u, u> + c1 |u|^2 >= 0, from the smallest
/// eigenvalue of the symmetric part (dense for small systems, shifted power
/// iteration otherwise).
double monotonicity_shift(const DiscreteOperator& op);

void write_operator_csv(std::ostream& os, const DiscreteOperator& op);

}  // namespace tdbs
