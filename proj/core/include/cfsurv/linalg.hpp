#ifndef CFSURV_LINALG_HPP
#define CFSURV_LINALG_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace cfsurv {

// Row-major dense matrix; just enough linear algebra for the built-in
// estimators (Newton steps and least squares on modest designs).
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<const double> row(std::size_t i) const {
        return {data.data() + i * cols, cols};
    }
};

/// Solves A x = b for symmetric positive definite A via Cholesky.
/// Throws std::runtime_error if the factorization breaks down.
std::vector<double> cholesky_solve(Matrix a, std::vector<double> b);

double dot(std::span<const double> a, std::span<const double> b);

} // namespace cfsurv

#endif
