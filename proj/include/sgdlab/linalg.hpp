#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace sgdlab {

// Dense row-major matrix of doubles. Everything in this project is
// desk-scale (dims up to a few hundred), so there is no blocking, no
// views, no expression templates. Entries are expected to stay finite;
// ops that consume matrices validate shapes, not values.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0);

    static Mat identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Mat& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Mat operator*(const Mat& a, const Mat& b);
Mat operator+(const Mat& a, const Mat& b);
Mat operator-(const Mat& a, const Mat& b);
Mat operator*(double s, const Mat& a);

Mat transpose(const Mat& a);
std::vector<double> matvec(const Mat& a, const std::vector<double>& x);

double frobenius_norm(const Mat& a);
double max_abs(const Mat& a);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a);

// Orthonormalizes the columns of a (modified Gram-Schmidt with one
// re-orthogonalization pass). Columns that are numerically dependent on
// earlier ones come back as zero columns rather than noise.
Mat orthonormalize_columns(const Mat& a);

struct SymEigen {
    std::vector<double> values;  // sorted non-increasing
    Mat vectors;                 // orthonormal columns, vectors.col(k) pairs with values[k]
};

// Cyclic Jacobi eigendecomposition for symmetric matrices. Deterministic:
// fixed sweep order, sign of each eigenvector fixed by its largest-|entry|
// coordinate. Throws std::invalid_argument on non-square or asymmetric
// (beyond 1e-10 * max(1, max|entry|)) input.
SymEigen sym_eigen(const Mat& m);

struct DominantEig {
    double value = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
};

// Power iteration for the eigenvalue of largest magnitude of a symmetric
// linear operator given only as vector->vector apply. Starts from the
// normalized all-ones vector so repeated runs are identical. A zero
// operator reports value 0 with converged = true.
DominantEig dominant_eigenvalue(
    const std::function<std::vector<double>(const std::vector<double>&)>& apply,
    std::size_t dim, std::size_t iters, double tol);

}  // namespace sgdlab
