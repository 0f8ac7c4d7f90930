#pragma once
// Rank-k truncated SVD by power iteration with deflation.
//
// Component j iterates v <- A^T A v, re-orthogonalized against the right
// vectors already found, until the singular value estimate ||A v|| moves by
// less than kSvdTolerance or kSvdMaxIterations is reached. Start vectors are
// a fixed deterministic sequence.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "lhc/error.hpp"
#include "lhc/similarity.hpp"
#include "lhc/tensor.hpp"

namespace lhc {

inline constexpr double kSvdTolerance = 1e-10;
inline constexpr int kSvdMaxIterations = 1000;

class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        DenseMatrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
        for (std::size_t r = 0; r < m.rows_; ++r)
            for (std::size_t c = 0; c < m.cols_; ++c) m(r, c) = rows[r][c];
        return m;
    }

    static DenseMatrix from_view(const MatrixView& view) { return from_rows(view.dense()); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct Decomposition {
    DenseMatrix row_factors;  // m x k, orthonormal columns (zero for null components)
    DenseMatrix col_factors;  // n x k, orthonormal columns
    std::vector<double> spectrum;

    std::size_t rank() const { return spectrum.size(); }

    // Row r of U * diag(spectrum).
    SparseVector latent_row(std::size_t r) const {
        SparseVector out;
        for (std::size_t j = 0; j < rank(); ++j) {
            double v = row_factors(r, j) * spectrum[j];
            if (v != 0.0) out.emplace_back(static_cast<std::uint32_t>(j), v);
        }
        return out;
    }

    // Cosine over spectrum-scaled row factors. Unlike view cosine, latent
    // coordinates may be negative, so the value lies in [-1, 1].
    double latent_similarity(std::size_t a, std::size_t b) const {
        auto x = latent_row(a), y = latent_row(b);
        double nx = norm(x), ny = norm(y);
        if (nx == 0.0 || ny == 0.0) return 0.0;
        return std::clamp(dot(x, y) / (nx * ny), -1.0, 1.0);
    }
};

namespace detail {

inline double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline void orthogonalize(std::vector<double>& v, const DenseMatrix& basis, std::size_t count) {
    // Two passes of classical Gram-Schmidt.
    for (int pass = 0; pass < 2; ++pass)
        for (std::size_t j = 0; j < count; ++j) {
            double d = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) d += v[i] * basis(i, j);
            for (std::size_t i = 0; i < v.size(); ++i) v[i] -= d * basis(i, j);
        }
}

}  // namespace detail

inline Decomposition decompose(const DenseMatrix& a, std::size_t k) {
    const std::size_t m = a.rows(), n = a.cols();
    if (k == 0 || k > std::min(m, n)) throw RankTooLarge(k, std::min(m, n));
    Decomposition d{DenseMatrix(m, k), DenseMatrix(n, k), {}};
    auto mul = [&](const std::vector<double>& v) {
        std::vector<double> out(m, 0.0);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < n; ++c) out[r] += a(r, c) * v[c];
        return out;
    };
    auto mul_t = [&](const std::vector<double>& u) {
        std::vector<double> out(n, 0.0);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < n; ++c) out[c] += a(r, c) * u[r];
        return out;
    };
    // A^T A v below this is rounding noise: the component is null.
    double frob2 = 0.0;
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) frob2 += a(r, c) * a(r, c);
    const double noise = 1e-13 * frob2;
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            double x = std::sin(12.9898 * static_cast<double>(i + 1) + 78.233 * static_cast<double>(j + 1));
            v[i] = 1.0 + 0.5 * x;
        }
        detail::orthogonalize(v, d.col_factors, j);
        double nv = detail::norm2(v);
        double sigma = 0.0;
        bool null_space = nv == 0.0;
        if (!null_space) {
            for (auto& x : v) x /= nv;
            double prev = -1.0;
            for (int it = 0; it < kSvdMaxIterations; ++it) {
                auto w = mul_t(mul(v));
                detail::orthogonalize(w, d.col_factors, j);
                double nw = detail::norm2(w);
                if (nw <= noise) {
                    null_space = true;
                    break;
                }
                for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
                sigma = detail::norm2(mul(v));
                if (std::abs(sigma - prev) < kSvdTolerance) break;
                prev = sigma;
            }
        }
        std::vector<double> u(m, 0.0);
        if (!null_space) {
            u = mul(v);
            sigma = detail::norm2(u);
        } else {
            sigma = 0.0;
        }
        for (std::size_t i = 0; i < n; ++i) d.col_factors(i, j) = null_space ? 0.0 : v[i];
        for (std::size_t r = 0; r < m; ++r) d.row_factors(r, j) = sigma > 0.0 ? u[r] / sigma : 0.0;
        d.spectrum.push_back(sigma);
    }
    return d;
}

inline Decomposition decompose(const MatrixView& view, std::size_t k) {
    return decompose(DenseMatrix::from_view(view), k);
}

// Frobenius norm of A - U diag(s) V^T using the first `k` components.
inline double reconstruction_error(const DenseMatrix& a, const Decomposition& d, std::size_t k) {
    double sum = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) {
            double approx = 0.0;
            for (std::size_t j = 0; j < std::min(k, d.rank()); ++j)
                approx += d.row_factors(r, j) * d.spectrum[j] * d.col_factors(c, j);
            double diff = a(r, c) - approx;
            sum += diff * diff;
        }
    return std::sqrt(sum);
}

}  // namespace lhc
