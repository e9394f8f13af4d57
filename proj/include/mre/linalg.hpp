#pragma once

#include <complex>

#include <Eigen/Dense>

namespace mre {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Operator infinity-norm (maximum absolute row sum). Used for every matrix
/// norm in the engine.
template <typename Derived>
double inf_norm(const Eigen::MatrixBase<Derived>& a) {
    if (a.size() == 0) return 0.0;
    return a.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Determinant by cofactor expansion for p <= 4, partial-pivot LU otherwise.
cplx determinant(const CMatrix& a);

/// Adjugate matrix, adj(A) with A * adj(A) = det(A) I. Computed from
/// cofactors so it stays well defined when A is singular.
CMatrix adjugate(const CMatrix& a);

/// d/dz det(A(z)) = tr(adj(A) A') (Jacobi's formula).
cplx determinant_derivative(const CMatrix& a, const CMatrix& da);

}  // namespace mre
