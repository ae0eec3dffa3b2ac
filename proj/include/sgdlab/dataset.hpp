#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgdlab/linalg.hpp"

namespace sgdlab {

struct Dataset {
    Mat X;  // n x d inputs
    Mat Y;  // n x k labels
    std::optional<std::vector<std::size_t>> ground_truth_relevant;
    std::string name;

    std::size_t n() const { return X.rows(); }
    std::size_t d() const { return X.cols(); }
    std::size_t k() const { return Y.cols(); }
};

struct ToyPoint {
    double x = 0.0;
    double y = 0.0;
};

enum class ToySet { D1, D2 };
enum class SyntheticTarget { LinearSum, SineOfSum };

// Input directions split into: relevant (carry signal), spanned irrelevant
// (nonzero second moment, no signal), unspanned (zero second moment).
// Columns of `basis` are ordered exactly that way. lambda_xx / lambda_yx are
// the data second moments expressed in basis coordinates. misspec[j] is the
// per-direction residual scale, nonzero only on spanned irrelevant columns.
struct RelevanceDecomposition {
    Mat basis;
    std::size_t r = 0;
    std::size_t i = 0;
    std::size_t u = 0;
    Mat lambda_xx;
    Mat lambda_yx;
    std::vector<double> misspec;
};

struct Assumption1Report {
    bool holds = true;
    double max_violation = 0.0;
};

inline constexpr double kDefaultRelevanceTol = 1e-6;

// (1/n) X^T X and (1/n) Y^T X.
Mat second_moment(const Mat& x);
Mat cross_moment(const Mat& y, const Mat& x);

// Synthetic regression data with known coordinate support. Returns 2m rows:
// the m base rows duplicated, labels perturbed +eps*g / -eps*g with the same
// g per row so the perturbation cancels exactly in pair sums. Irrelevant
// columns (r..d-1) are centered to an exactly zero column sum.
Dataset gen_synthetic(std::size_t d, std::size_t r, std::size_t m,
                      SyntheticTarget target, double eps, std::uint64_t seed);

std::vector<ToyPoint> toy_dataset(ToySet which);

// Same toy points packaged as a 1-input 1-output Dataset.
Dataset toy_as_dataset(ToySet which);

// tol is relative: directions count as relevant when their singular value in
// E[yx^T] exceeds tol times the largest one, and as spanned when their
// second moment exceeds tol times the largest E[xx^T] eigenvalue.
RelevanceDecomposition compute_relevance(const Dataset& ds, double tol);

// Decomposition along the given input coordinates instead of the eigen
// split: basis is a coordinate permutation with `relevant` first, remaining
// coordinates classified spanned/unspanned by second moment. This is the
// split generators carry as ground truth; note the irrelevant lambda_xx
// block is only diagonal if those coordinates are actually uncorrelated.
RelevanceDecomposition coordinate_decomposition(const Dataset& ds,
                                                const std::vector<std::size_t>& relevant,
                                                double tol);

// Max |E[<v,x><w,x>]| over relevant v, irrelevant w, in basis coordinates.
Assumption1Report check_assumption1(const Dataset& ds,
                                    const RelevanceDecomposition& dec, double tol);

// IDX ingestion (big-endian, magic 0x00000803 images / 0x00000801 labels).
// X scaled to [0,1], Y one-hot over 10 classes. center_columns subtracts the
// per-column mean from X, which turns constant pixels into unspanned
// directions. Malformed files raise std::runtime_error naming a byte offset.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 bool center_columns);

}  // namespace sgdlab
