#pragma once
// Small dense matrix utilities sized for the transition chains used in this
// library (a dozen states or so). Row-major storage, no allocation tricks.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace cogcap {

class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        if (rows == 0 || cols == 0)
            throw std::invalid_argument("Matrix: dimensions must be positive");
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    bool square() const { return rows_ == cols_; }

    // Largest row sum of absolute values (the infinity norm).
    double inf_norm() const {
        double best = 0.0;
        for (std::size_t i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
            if (s > best) best = s;
        }
        return best;
    }

    Matrix operator*(const Matrix& rhs) const {
        if (cols_ != rhs.rows_)
            throw std::invalid_argument("Matrix multiply: dimension mismatch");
        Matrix out(rows_, rhs.cols_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t k = 0; k < cols_; ++k) {
                const double a = (*this)(i, k);
                if (a == 0.0) continue;
                for (std::size_t j = 0; j < rhs.cols_; ++j)
                    out(i, j) += a * rhs(k, j);
            }
        }
        return out;
    }

    Matrix& operator/=(double s) {
        for (double& v : data_) v /= s;
        return *this;
    }

    // y = M x
    std::vector<double> apply(const std::vector<double>& x) const {
        if (x.size() != cols_)
            throw std::invalid_argument("Matrix apply: dimension mismatch");
        std::vector<double> y(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct SpectralOptions {
    double tolerance = 1e-12;
    std::size_t max_iterations = 100000;
};

namespace detail {

// Gelfand fallback: sp(M) = lim_k ||M^k||^(1/k), evaluated by repeated
// squaring with norm normalization. Deterministic, and covers the cases
// where plain power iteration stalls (periodic or reducible chains,
// defective dominant eigenvalues). After j squarings k = 2^j, so the
// O(log(cond)/k) error of the norm estimate is driven to rounding level.
inline double spectral_radius_by_squaring(const Matrix& m) {
    double norm = m.inf_norm();
    if (norm == 0.0) return 0.0;
    Matrix n = m;
    n /= norm;
    double log_estimate = std::log(norm); // log ||M^(2^j)|| / 2^j
    double previous = std::numeric_limits<double>::quiet_NaN();
    double weight = 0.5;
    for (int j = 0; j < 64; ++j, weight *= 0.5) {
        Matrix sq = n * n;
        const double s = sq.inf_norm();
        if (s == 0.0) return 0.0; // nilpotent
        log_estimate += weight * std::log(s);
        sq /= s;
        n = sq;
        const double estimate = std::exp(log_estimate);
        if (j > 2 && std::abs(estimate - previous) <= 1e-14 * std::max(estimate, 1e-300))
            return estimate;
        previous = estimate;
    }
    return std::exp(log_estimate);
}

} // namespace detail

// Spectral radius of an entrywise nonnegative matrix. Power iteration with a
// 1-norm Rayleigh quotient is the fast path; if it has not settled within the
// iteration budget the Gelfand squaring fallback takes over.
inline double spectral_radius(const Matrix& m, const SpectralOptions& opt = {}) {
    if (!m.square())
        throw std::invalid_argument("spectral_radius: matrix must be square");
    const std::size_t n = m.rows();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (!(m(i, j) >= 0.0) || !std::isfinite(m(i, j)))
                throw std::invalid_argument("spectral_radius: entries must be finite and nonnegative");
    if (m.inf_norm() == 0.0) return 0.0;

    std::vector<double> x(n, 1.0 / static_cast<double>(n));
    double estimate = 0.0;
    double previous = std::numeric_limits<double>::infinity();
    std::size_t stable = 0;
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
        std::vector<double> y = m.apply(x);
        double sum = 0.0;
        for (double v : y) sum += v;
        if (sum <= 0.0) return 0.0;
        estimate = sum; // x is normalized to sum 1, so sum(y) is the quotient
        double drift = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] /= sum;
            drift += std::abs(y[i] - x[i]);
        }
        x.swap(y);
        if (std::abs(estimate - previous) <= opt.tolerance * estimate &&
            drift <= opt.tolerance) {
            if (++stable >= 2) return estimate;
        } else {
            stable = 0;
        }
        previous = estimate;
    }
    return detail::spectral_radius_by_squaring(m);
}

// Stationary distribution of a row-stochastic matrix: solves pi R = pi with
// sum(pi) = 1 by replacing one (redundant) balance equation with the
// normalization row. Partial pivoting; the pivot test catches chains whose
// stationary vector is not unique.
inline std::vector<double> stationary_distribution(const Matrix& r,
                                                   double row_sum_tolerance = 1e-12) {
    if (!r.square())
        throw std::invalid_argument("stationary_distribution: matrix must be square");
    const std::size_t n = r.rows();
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double v = r(i, j);
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("stationary_distribution: entries must be probabilities");
            sum += v;
        }
        if (std::abs(sum - 1.0) > row_sum_tolerance)
            throw std::invalid_argument("stationary_distribution: row " + std::to_string(i) +
                                        " sums to " + std::to_string(sum) + ", not 1");
    }

    // A = R^T - I with the last row replaced by ones; rhs = e_n.
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            a(i, j) = r(j, i) - (i == j ? 1.0 : 0.0);
    for (std::size_t j = 0; j < n; ++j) a(n - 1, j) = 1.0;
    std::vector<double> rhs(n, 0.0);
    rhs[n - 1] = 1.0;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t i = col + 1; i < n; ++i)
            if (std::abs(a(i, col)) > std::abs(a(pivot, col))) pivot = i;
        if (std::abs(a(pivot, col)) < 1e-13)
            throw std::runtime_error("stationary_distribution: singular system "
                                     "(stationary vector not unique)");
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(pivot, j), a(col, j));
            std::swap(rhs[pivot], rhs[col]);
        }
        for (std::size_t i = col + 1; i < n; ++i) {
            const double f = a(i, col) / a(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a(i, j) -= f * a(col, j);
            rhs[i] -= f * rhs[col];
        }
    }
    std::vector<double> pi(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = rhs[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * pi[j];
        pi[ii] = s / a(ii, ii);
    }

    double total = 0.0;
    for (double& v : pi) {
        if (v < 0.0) {
            if (v < -1e-10)
                throw std::runtime_error("stationary_distribution: negative component");
            v = 0.0;
        }
        total += v;
    }
    for (double& v : pi) v /= total;

    // Defensive residual check on the defining property.
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += pi[i] * r(i, j);
        if (std::abs(s - pi[j]) > 1e-10)
            throw std::runtime_error("stationary_distribution: residual check failed");
    }
    return pi;
}

} // namespace cogcap
