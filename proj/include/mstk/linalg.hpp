#pragma once

#include <cstddef>
#include <vector>

namespace mstk {

/// Dense row-major matrix of doubles.
struct Matrix {
    int rows = 0, cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }
    const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }
    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
    void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

// C = A * B^T; A is m x k, B is n x k, C becomes m x n. Row-wise dot products,
// so each output row is computed identically regardless of m.
void gemm_nt(const Matrix& A, const Matrix& B, Matrix& C);

// C = A * B; A is m x k, B is k x n.
void gemm_nn(const Matrix& A, const Matrix& B, Matrix& C);

// C = A^T * B; A is k x m, B is k x n.
void gemm_tn(const Matrix& A, const Matrix& B, Matrix& C);

}  // namespace mstk
