#include "sgdlab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sgdlab/rng.hpp"

namespace sgdlab {

Mat second_moment(const Mat& x) {
    const std::size_t n = x.rows(), d = x.cols();
    Mat m(d, d);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += x(i, a) * x(i, b);
            s /= static_cast<double>(n);
            m(a, b) = s;
            m(b, a) = s;
        }
    return m;
}

Mat cross_moment(const Mat& y, const Mat& x) {
    if (y.rows() != x.rows()) throw std::invalid_argument("cross_moment: row counts differ");
    const std::size_t n = x.rows();
    Mat m(y.cols(), x.cols());
    for (std::size_t a = 0; a < y.cols(); ++a)
        for (std::size_t b = 0; b < x.cols(); ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += y(i, a) * x(i, b);
            m(a, b) = s / static_cast<double>(n);
        }
    return m;
}

Dataset gen_synthetic(std::size_t d, std::size_t r, std::size_t m,
                      SyntheticTarget target, double eps, std::uint64_t seed) {
    if (r < 1 || r > d) throw std::invalid_argument("gen_synthetic: need 1 <= r <= d");
    if (m < 2) throw std::invalid_argument("gen_synthetic: need m >= 2");

    Rng rng(seed);
    Mat base(m, d);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < d; ++j) base(i, j) = rng.normal();

    // Irrelevant columns are projected orthogonal to the constant vector and
    // to every relevant column, so their means and their relevant cross
    // moments vanish at machine precision (plain sampling leaves O(1/sqrt m)
    // residuals, too large for the guarantees downstream consumers lean on).
    Mat span(m, r + 1);
    for (std::size_t i = 0; i < m; ++i) {
        span(i, 0) = 1.0;
        for (std::size_t j = 0; j < r; ++j) span(i, j + 1) = base(i, j);
    }
    const Mat q = orthonormalize_columns(span);
    for (std::size_t j = r; j < d; ++j) {
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t c = 0; c <= r; ++c) {
                double proj = 0.0;
                for (std::size_t i = 0; i < m; ++i) proj += q(i, c) * base(i, j);
                for (std::size_t i = 0; i < m; ++i) base(i, j) -= proj * q(i, c);
            }
        }
        // Pin the last sample so the column sums to exactly 0.0; the ulp-size
        // adjustment leaves the orthogonality above intact for all purposes.
        double partial = 0.0;
        for (std::size_t i = 0; i + 1 < m; ++i) partial += base(i, j);
        base(m - 1, j) = -partial;
    }

    Dataset ds;
    ds.X = Mat(2 * m, d);
    ds.Y = Mat(2 * m, 1);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            ds.X(i, j) = base(i, j);
            ds.X(m + i, j) = base(i, j);
        }
        double s = 0.0;
        for (std::size_t j = 0; j < r; ++j) s += base(i, j);
        const double y = (target == SyntheticTarget::LinearSum) ? s : std::sin(s);
        const double g = rng.normal();
        ds.Y(i, 0) = y + eps * g;
        ds.Y(m + i, 0) = y - eps * g;
    }

    std::vector<std::size_t> support(r);
    for (std::size_t j = 0; j < r; ++j) support[j] = j;
    ds.ground_truth_relevant = support;
    ds.name = std::string(target == SyntheticTarget::LinearSum ? "linear-sum" : "sine-of-sum") +
              "-d" + std::to_string(d) + "-r" + std::to_string(r);
    return ds;
}

std::vector<ToyPoint> toy_dataset(ToySet which) {
    if (which == ToySet::D1) return {{1.0, -1.0}, {1.0, 1.0}};
    return {{1.0, 0.0}, {3.0, 0.0}};
}

Dataset toy_as_dataset(ToySet which) {
    const auto pts = toy_dataset(which);
    Dataset ds;
    ds.X = Mat(pts.size(), 1);
    ds.Y = Mat(pts.size(), 1);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        ds.X(i, 0) = pts[i].x;
        ds.Y(i, 0) = pts[i].y;
    }
    ds.name = (which == ToySet::D1) ? "toy-D1" : "toy-D2";
    return ds;
}

namespace {

// Columns of an orthonormal completion of `fixed` (d x r, orthonormal
// columns): d-r vectors spanning the orthogonal complement.
Mat complement_basis(const Mat& fixed) {
    const std::size_t d = fixed.rows();
    const std::size_t r = fixed.cols();
    Mat ext(d, r + d);
    for (std::size_t j = 0; j < r; ++j)
        for (std::size_t i = 0; i < d; ++i) ext(i, j) = fixed(i, j);
    for (std::size_t j = 0; j < d; ++j) ext(j, r + j) = 1.0;
    const Mat q = orthonormalize_columns(ext);

    Mat out(d, d - r);
    std::size_t found = 0;
    for (std::size_t j = r; j < r + d && found < d - r; ++j) {
        double nrm = 0.0;
        for (std::size_t i = 0; i < d; ++i) nrm += q(i, j) * q(i, j);
        if (nrm > 0.5) {  // surviving columns are unit, dropped ones are zero
            for (std::size_t i = 0; i < d; ++i) out(i, found) = q(i, j);
            ++found;
        }
    }
    if (found != d - r)
        throw std::runtime_error("complement_basis: completion failed");
    return out;
}

void fill_misspec(const Dataset& ds, RelevanceDecomposition& dec) {
    const std::size_t d = ds.d(), n = ds.n(), k = ds.k();
    dec.misspec.assign(d, 0.0);
    for (std::size_t j = dec.r; j < dec.r + dec.i; ++j) {
        double second = 0.0;
        std::vector<double> first(k, 0.0);
        for (std::size_t row = 0; row < n; ++row) {
            double z = 0.0;
            for (std::size_t c = 0; c < d; ++c) z += ds.X(row, c) * dec.basis(c, j);
            double y2 = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                y2 += ds.Y(row, c) * ds.Y(row, c);
                first[c] += ds.Y(row, c) * z;
            }
            second += y2 * z * z;
        }
        second /= static_cast<double>(n);
        double first2 = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            first[c] /= static_cast<double>(n);
            first2 += first[c] * first[c];
        }
        dec.misspec[j] = std::sqrt(std::max(0.0, second - first2));
    }
}

}  // namespace

RelevanceDecomposition compute_relevance(const Dataset& ds, double tol) {
    if (ds.n() == 0) throw std::invalid_argument("compute_relevance: empty dataset");
    if (tol <= 0.0) throw std::invalid_argument("compute_relevance: tol must be > 0");
    const std::size_t d = ds.d();

    const Mat lyx = cross_moment(ds.Y, ds.X);
    const Mat lxx = second_moment(ds.X);

    // Right singular directions of E[yx^T] via the d x d Gram matrix.
    const SymEigen sv = sym_eigen(transpose(lyx) * lyx);
    std::vector<double> sigma(d);
    for (std::size_t j = 0; j < d; ++j) sigma[j] = std::sqrt(std::max(0.0, sv.values[j]));
    const double sigma_thresh = tol * (sigma.empty() ? 0.0 : sigma[0]);

    std::size_t r = 0;
    while (r < d && sigma[r] > sigma_thresh && sigma[r] > 0.0) ++r;

    Mat relevant(d, r);
    for (std::size_t j = 0; j < r; ++j)
        for (std::size_t i = 0; i < d; ++i) relevant(i, j) = sv.vectors(i, j);

    RelevanceDecomposition dec;
    dec.r = r;
    dec.basis = Mat(d, d);
    for (std::size_t j = 0; j < r; ++j)
        for (std::size_t i = 0; i < d; ++i) dec.basis(i, j) = relevant(i, j);

    if (r < d) {
        const Mat comp = complement_basis(relevant);
        const SymEigen ce = sym_eigen(transpose(comp) * lxx * comp);
        const double xx_thresh = tol * std::max(0.0, sym_eigen(lxx).values[0]);
        std::size_t spanned = 0;
        while (spanned < d - r && ce.values[spanned] > xx_thresh) ++spanned;
        dec.i = spanned;
        dec.u = d - r - spanned;
        const Mat irr = comp * ce.vectors;  // descending second moment
        for (std::size_t j = 0; j < d - r; ++j)
            for (std::size_t i = 0; i < d; ++i) dec.basis(i, r + j) = irr(i, j);
    }

    dec.lambda_xx = transpose(dec.basis) * lxx * dec.basis;
    dec.lambda_yx = lyx * dec.basis;

    // Residual scale per spanned irrelevant direction:
    // R_j^2 = E[|y|^2 z_j^2] - |E[y z_j]|^2 with z_j the basis coordinate.
    fill_misspec(ds, dec);
    return dec;
}

RelevanceDecomposition coordinate_decomposition(const Dataset& ds,
                                                const std::vector<std::size_t>& relevant,
                                                double tol) {
    if (ds.n() == 0) throw std::invalid_argument("coordinate_decomposition: empty dataset");
    const std::size_t d = ds.d();
    std::vector<bool> is_rel(d, false);
    for (std::size_t idx : relevant) {
        if (idx >= d) throw std::invalid_argument("coordinate_decomposition: index out of range");
        is_rel[idx] = true;
    }

    const Mat lxx = second_moment(ds.X);
    double max_diag = 0.0;
    for (std::size_t j = 0; j < d; ++j) max_diag = std::max(max_diag, lxx(j, j));
    const double xx_thresh = tol * max_diag;

    std::vector<std::size_t> order(relevant);
    std::vector<std::size_t> unspanned;
    RelevanceDecomposition dec;
    dec.r = relevant.size();
    for (std::size_t j = 0; j < d; ++j) {
        if (is_rel[j]) continue;
        if (lxx(j, j) > xx_thresh) {
            order.push_back(j);
            ++dec.i;
        } else {
            unspanned.push_back(j);
        }
    }
    order.insert(order.end(), unspanned.begin(), unspanned.end());
    dec.u = unspanned.size();

    dec.basis = Mat(d, d);
    for (std::size_t col = 0; col < d; ++col) dec.basis(order[col], col) = 1.0;
    dec.lambda_xx = transpose(dec.basis) * lxx * dec.basis;
    dec.lambda_yx = cross_moment(ds.Y, ds.X) * dec.basis;
    fill_misspec(ds, dec);
    return dec;
}

Assumption1Report check_assumption1(const Dataset& ds,
                                    const RelevanceDecomposition& dec, double tol) {
    (void)ds;  // moments already live in dec, in basis coordinates
    Assumption1Report rep;
    for (std::size_t a = 0; a < dec.r; ++a)
        for (std::size_t b = dec.r; b < dec.r + dec.i + dec.u; ++b)
            rep.max_violation = std::max(rep.max_violation, std::abs(dec.lambda_xx(a, b)));
    rep.holds = rep.max_violation <= tol;
    return rep;
}

}  // namespace sgdlab
