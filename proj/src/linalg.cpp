#include "sgdlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sgdlab {

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat Mat::identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat operator*(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner dimensions disagree (" +
                                    std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.rows()) + ")");
    Mat c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

Mat operator+(const Mat& a, const Mat& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("mat add: shape mismatch");
    Mat c = a;
    for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] += b.data()[i];
    return c;
}

Mat operator-(const Mat& a, const Mat& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("mat sub: shape mismatch");
    Mat c = a;
    for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

Mat operator*(double s, const Mat& a) {
    Mat c = a;
    for (double& v : c.data()) v *= s;
    return c;
}

Mat transpose(const Mat& a) {
    Mat t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

std::vector<double> matvec(const Mat& a, const std::vector<double>& x) {
    if (a.cols() != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
    std::vector<double> y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

double frobenius_norm(const Mat& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

double max_abs(const Mat& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) {
    return std::sqrt(dot(a, a));
}

Mat orthonormalize_columns(const Mat& a) {
    Mat q = a;
    const std::size_t n = a.rows();
    const std::size_t k = a.cols();
    for (std::size_t j = 0; j < k; ++j) {
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t p = 0; p < j; ++p) {
                double proj = 0.0;
                for (std::size_t i = 0; i < n; ++i) proj += q(i, p) * q(i, j);
                for (std::size_t i = 0; i < n; ++i) q(i, j) -= proj * q(i, p);
            }
        }
        double nrm = 0.0;
        for (std::size_t i = 0; i < n; ++i) nrm += q(i, j) * q(i, j);
        nrm = std::sqrt(nrm);
        if (nrm < 1e-12) {
            for (std::size_t i = 0; i < n; ++i) q(i, j) = 0.0;
        } else {
            for (std::size_t i = 0; i < n; ++i) q(i, j) /= nrm;
        }
    }
    return q;
}

namespace {

void check_symmetric(const Mat& m) {
    if (m.rows() != m.cols())
        throw std::invalid_argument("sym_eigen: matrix is not square (" +
                                    std::to_string(m.rows()) + "x" +
                                    std::to_string(m.cols()) + ")");
    const double tol = 1e-10 * std::max(1.0, max_abs(m));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j)
            if (std::abs(m(i, j) - m(j, i)) > tol)
                throw std::invalid_argument(
                    "sym_eigen: matrix is not symmetric at (" + std::to_string(i) +
                    "," + std::to_string(j) + ")");
}

double offdiag_sq(const Mat& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) s += a(i, j) * a(i, j);
    return 2.0 * s;
}

}  // namespace

SymEigen sym_eigen(const Mat& m) {
    check_symmetric(m);
    const std::size_t n = m.rows();
    Mat a = m;
    Mat v = Mat::identity(n);

    // Sweep until the off-diagonal mass is negligible relative to the input.
    const double target = 1e-30 * std::max(1.0, frobenius_norm(m) * frobenius_norm(m));
    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps && offdiag_sq(a) > target; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                // Smaller-magnitude root of t^2 + 2*theta*t - 1 = 0.
                const double t = (theta >= 0.0)
                                     ? 1.0 / (theta + std::sqrt(1.0 + theta * theta))
                                     : -1.0 / (-theta + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a(i, p);
                    const double aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    const double apj = a(p, j);
                    const double aqj = a(q, j);
                    a(p, j) = c * apj - s * aqj;
                    a(q, j) = s * apj + c * aqj;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p);
                    const double viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return diag[x] > diag[y]; });

    SymEigen out;
    out.values.resize(n);
    out.vectors = Mat(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = order[k];
        out.values[k] = diag[src];
        // Canonical sign: largest-|entry| coordinate is positive.
        std::size_t imax = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(v(i, src)) > std::abs(v(imax, src))) imax = i;
        const double sign = (v(imax, src) < 0.0) ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = sign * v(i, src);
    }
    return out;
}

DominantEig dominant_eigenvalue(
    const std::function<std::vector<double>(const std::vector<double>&)>& apply,
    std::size_t dim, std::size_t iters, double tol) {
    if (dim == 0) throw std::invalid_argument("dominant_eigenvalue: dim must be >= 1");
    std::vector<double> v(dim, 1.0 / std::sqrt(static_cast<double>(dim)));

    DominantEig out;
    double prev = 0.0;
    for (std::size_t it = 0; it < iters; ++it) {
        std::vector<double> w = apply(v);
        if (w.size() != dim)
            throw std::invalid_argument("dominant_eigenvalue: operator changed dimension");
        const double rayleigh = dot(v, w);
        const double wn = norm2(w);
        out.iterations = it + 1;
        out.value = rayleigh;
        if (wn == 0.0) {
            // Operator annihilates the iterate; spectrum seen so far is zero.
            out.value = 0.0;
            out.converged = true;
            return out;
        }
        if (it > 0 && std::abs(rayleigh - prev) <= tol * std::max(1.0, std::abs(rayleigh))) {
            out.converged = true;
            return out;
        }
        prev = rayleigh;
        for (std::size_t i = 0; i < dim; ++i) v[i] = w[i] / wn;
    }
    return out;
}

}  // namespace sgdlab
