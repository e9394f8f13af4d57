#include "mre/linalg.hpp"

namespace mre {

namespace {

CMatrix minor_of(const CMatrix& a, Eigen::Index row, Eigen::Index col) {
    const Eigen::Index n = a.rows();
    CMatrix m(n - 1, n - 1);
    for (Eigen::Index i = 0, mi = 0; i < n; ++i) {
        if (i == row) continue;
        for (Eigen::Index j = 0, mj = 0; j < n; ++j) {
            if (j == col) continue;
            m(mi, mj++) = a(i, j);
        }
        ++mi;
    }
    return m;
}

cplx cofactor_det(const CMatrix& a) {
    const Eigen::Index n = a.rows();
    switch (n) {
        case 0: return 1.0;
        case 1: return a(0, 0);
        case 2: return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
        default: break;
    }
    cplx sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (a(0, j) == cplx(0.0)) continue;
        const cplx sub = cofactor_det(minor_of(a, 0, j));
        sum += ((j % 2 == 0) ? 1.0 : -1.0) * a(0, j) * sub;
    }
    return sum;
}

}  // namespace

cplx determinant(const CMatrix& a) {
    if (a.rows() <= 4) return cofactor_det(a);
    return a.partialPivLu().determinant();
}

CMatrix adjugate(const CMatrix& a) {
    const Eigen::Index n = a.rows();
    CMatrix adj(n, n);
    if (n == 1) {
        adj(0, 0) = 1.0;
        return adj;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            // transpose of the cofactor matrix
            adj(j, i) = sign * determinant(minor_of(a, i, j));
        }
    }
    return adj;
}

cplx determinant_derivative(const CMatrix& a, const CMatrix& da) {
    return (adjugate(a) * da).trace();
}

}  // namespace mre
