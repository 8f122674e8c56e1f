#pragma once

#include "difpath/tensor.hpp"

namespace difpath {

struct EigResult {
    Tensor values;   // (n), ascending
    Tensor vectors;  // (n, n), column j is the eigenvector of values[j]
};

// Cyclic Jacobi diagonalization of a symmetric matrix. `tol` bounds the
// admissible asymmetry max |m_ij - m_ji|; anything beyond is rejected.
EigResult sym_eig(const Tensor& m, double tol = 1e-9);

// Symmetric PSD square root via eigendecomposition. Eigenvalues in
// [-1e-8, 0) are clamped to zero; anything below fails as not PSD.
Tensor psd_sqrt(const Tensor& m);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor identity(std::size_t n);
double trace(const Tensor& a);

}  // namespace difpath
