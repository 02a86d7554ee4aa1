#pragma once

#include <span>
#include <vector>

namespace evograd {

// Dense symmetric matrix, row-major full storage.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {}

    int size() const { return n_; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }

    void set(int i, int j, double v) {
        a_[static_cast<std::size_t>(i) * n_ + j] = v;
        a_[static_cast<std::size_t>(j) * n_ + i] = v;
    }

    std::span<const double> data() const { return a_; }

    // q(xi) = <A xi, xi>
    double quadratic_form(std::span<const double> xi) const;

private:
    int n_ = 0;
    std::vector<double> a_;
};

// All eigenvalues in ascending order.  Closed-form roots for n <= 2; cyclic
// Jacobi iteration with off-diagonal norm below tol otherwise.
std::vector<double> symmetric_eigenvalues(const SymMatrix& m, double tol = 1e-12);

double smallest_eigenvalue(const SymMatrix& m, double tol = 1e-12);
double largest_eigenvalue(const SymMatrix& m, double tol = 1e-12);

}  // namespace evograd
