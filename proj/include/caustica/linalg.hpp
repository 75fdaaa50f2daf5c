#ifndef CAUSTICA_LINALG_HPP
#define CAUSTICA_LINALG_HPP

#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace caustica {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm1(const Vec& a) {
    double s = 0.0;
    for (double x : a) s += std::abs(x);
    return s;
}

inline Vec operator+(Vec a, const Vec& b) {
    assert(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline Vec operator-(Vec a, const Vec& b) {
    assert(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}

inline Vec operator*(double s, Vec a) {
    for (double& x : a) x *= s;
    return a;
}

/// Small dense row-major matrix. Phase-space problems here have d <= 4,
/// so everything is tiny; partial-pivot LU is all we need.
struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), a(std::size_t(r) * c, fill) {}

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(int i, int j) { return a[std::size_t(i) * cols + j]; }
    double operator()(int i, int j) const { return a[std::size_t(i) * cols + j]; }

    bool empty() const { return a.empty(); }
};

inline Mat operator*(const Mat& A, const Mat& B) {
    assert(A.cols == B.rows);
    Mat C(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i)
        for (int k = 0; k < A.cols; ++k) {
            const double aik = A(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < B.cols; ++j) C(i, j) += aik * B(k, j);
        }
    return C;
}

inline Vec operator*(const Mat& A, const Vec& x) {
    assert(int(x.size()) == A.cols);
    Vec y(A.rows, 0.0);
    for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < A.cols; ++j) y[i] += A(i, j) * x[j];
    return y;
}

inline Mat operator+(Mat A, const Mat& B) {
    assert(A.rows == B.rows && A.cols == B.cols);
    for (std::size_t i = 0; i < A.a.size(); ++i) A.a[i] += B.a[i];
    return A;
}

inline Mat operator-(Mat A, const Mat& B) {
    assert(A.rows == B.rows && A.cols == B.cols);
    for (std::size_t i = 0; i < A.a.size(); ++i) A.a[i] -= B.a[i];
    return A;
}

inline Mat operator*(double s, Mat A) {
    for (double& v : A.a) v *= s;
    return A;
}

inline Mat transpose(const Mat& A) {
    Mat T(A.cols, A.rows);
    for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
    return T;
}

/// Signed determinant via LU with partial pivoting.
inline double det(Mat A) {
    assert(A.rows == A.cols);
    const int n = A.rows;
    if (n == 1) return A(0, 0);
    if (n == 2) return A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    double d = 1.0;
    for (int k = 0; k < n; ++k) {
        int p = k;
        for (int i = k + 1; i < n; ++i)
            if (std::abs(A(i, k)) > std::abs(A(p, k))) p = i;
        if (A(p, k) == 0.0) return 0.0;
        if (p != k) {
            for (int j = 0; j < n; ++j) std::swap(A(p, j), A(k, j));
            d = -d;
        }
        d *= A(k, k);
        for (int i = k + 1; i < n; ++i) {
            const double m = A(i, k) / A(k, k);
            for (int j = k + 1; j < n; ++j) A(i, j) -= m * A(k, j);
        }
    }
    return d;
}

/// Solve A x = b (square, partial pivoting). Throws on (numerically) singular A.
inline Vec solve(Mat A, Vec b) {
    assert(A.rows == A.cols && int(b.size()) == A.rows);
    const int n = A.rows;
    for (int k = 0; k < n; ++k) {
        int p = k;
        for (int i = k + 1; i < n; ++i)
            if (std::abs(A(i, k)) > std::abs(A(p, k))) p = i;
        if (A(p, k) == 0.0) throw std::runtime_error("linalg: singular matrix in solve");
        if (p != k) {
            for (int j = 0; j < n; ++j) std::swap(A(p, j), A(k, j));
            std::swap(b[p], b[k]);
        }
        for (int i = k + 1; i < n; ++i) {
            const double m = A(i, k) / A(k, k);
            b[i] -= m * b[k];
            for (int j = k + 1; j < n; ++j) A(i, j) -= m * A(k, j);
        }
    }
    Vec x(n);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= A(i, j) * x[j];
        x[i] = s / A(i, i);
    }
    return x;
}

inline double max_abs_offdiag_asym(const Mat& A) {
    double m = 0.0;
    for (int i = 0; i < A.rows; ++i)
        for (int j = i + 1; j < A.cols; ++j) m = std::max(m, std::abs(A(i, j) - A(j, i)));
    return m;
}

}  // namespace caustica

#endif
