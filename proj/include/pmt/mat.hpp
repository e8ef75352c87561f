#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace pmt {

// Dense row-major matrix. Rows are contiguous; a 1xN matrix doubles as a
// vector (biases, layer-norm gains).
template <typename T>
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, T(0)) {}

    T* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
    const T* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

    T& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    T at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return data.size(); }

    void zero() { std::fill(data.begin(), data.end(), T(0)); }

    void resize(int r, int c) {
        rows = r;
        cols = c;
        data.assign(static_cast<size_t>(r) * c, T(0));
    }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

// c = a * b
template <typename T>
void matmul(const Mat<T>& a, const Mat<T>& b, Mat<T>& c) {
    assert(a.cols == b.rows);
    c.resize(a.rows, b.cols);
    const int m = a.rows, k = a.cols, n = b.cols;
    for (int i = 0; i < m; ++i) {
        const T* __restrict__ ar = a.row(i);
        T* __restrict__ cr = c.row(i);
        for (int p = 0; p < k; ++p) {
            const T av = ar[p];
            const T* __restrict__ br = b.row(p);
            for (int j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
}

// c = a * b^T, with b stored as (n x k)
template <typename T>
void matmul_nt(const Mat<T>& a, const Mat<T>& b, Mat<T>& c) {
    assert(a.cols == b.cols);
    c.resize(a.rows, b.rows);
    const int m = a.rows, k = a.cols, n = b.rows;
    for (int i = 0; i < m; ++i) {
        const T* __restrict__ ar = a.row(i);
        T* __restrict__ cr = c.row(i);
        for (int j = 0; j < n; ++j) {
            const T* __restrict__ br = b.row(j);
            T acc = T(0);
            for (int p = 0; p < k; ++p) acc += ar[p] * br[p];
            cr[j] = acc;
        }
    }
}

// c += a^T * b, with a stored as (k x m); used for weight gradients.
template <typename T>
void matmul_tn_accum(const Mat<T>& a, const Mat<T>& b, Mat<T>& c) {
    assert(a.rows == b.rows);
    assert(c.rows == a.cols && c.cols == b.cols);
    const int k = a.rows, m = a.cols, n = b.cols;
    for (int p = 0; p < k; ++p) {
        const T* __restrict__ ar = a.row(p);
        const T* __restrict__ br = b.row(p);
        for (int i = 0; i < m; ++i) {
            const T av = ar[i];
            T* __restrict__ cr = c.row(i);
            for (int j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
}

template <typename T>
void add_row_vector(Mat<T>& m, const Mat<T>& v) {
    assert(v.rows == 1 && v.cols == m.cols);
    const T* __restrict__ vr = v.row(0);
    for (int i = 0; i < m.rows; ++i) {
        T* __restrict__ r = m.row(i);
        for (int j = 0; j < m.cols; ++j) r[j] += vr[j];
    }
}

// v(1 x n) += column sums of m
template <typename T>
void accum_col_sums(const Mat<T>& m, Mat<T>& v) {
    assert(v.rows == 1 && v.cols == m.cols);
    T* __restrict__ vr = v.row(0);
    for (int i = 0; i < m.rows; ++i) {
        const T* __restrict__ r = m.row(i);
        for (int j = 0; j < m.cols; ++j) vr[j] += r[j];
    }
}

}  // namespace pmt
