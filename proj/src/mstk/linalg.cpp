#include "mstk/linalg.hpp"

#include <cassert>

namespace mstk {

void gemm_nt(const Matrix& A, const Matrix& B, Matrix& C) {
    assert(A.cols == B.cols);
    C = Matrix(A.rows, B.rows);
    const int k = A.cols;
    for (int i = 0; i < A.rows; ++i) {
        const double* ai = A.row(i);
        double* ci = C.row(i);
        for (int j = 0; j < B.rows; ++j) {
            const double* bj = B.row(j);
            double acc = 0.0;
            for (int t = 0; t < k; ++t) acc += ai[t] * bj[t];
            ci[j] = acc;
        }
    }
}

void gemm_nn(const Matrix& A, const Matrix& B, Matrix& C) {
    assert(A.cols == B.rows);
    C = Matrix(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i) {
        const double* ai = A.row(i);
        double* ci = C.row(i);
        for (int t = 0; t < A.cols; ++t) {
            double av = ai[t];
            if (av == 0.0) continue;
            const double* bt = B.row(t);
            for (int j = 0; j < B.cols; ++j) ci[j] += av * bt[j];
        }
    }
}

void gemm_tn(const Matrix& A, const Matrix& B, Matrix& C) {
    assert(A.rows == B.rows);
    C = Matrix(A.cols, B.cols);
    for (int t = 0; t < A.rows; ++t) {
        const double* at = A.row(t);
        const double* bt = B.row(t);
        for (int i = 0; i < A.cols; ++i) {
            double av = at[i];
            if (av == 0.0) continue;
            double* ci = C.row(i);
            for (int j = 0; j < B.cols; ++j) ci[j] += av * bt[j];
        }
    }
}

}  // namespace mstk
