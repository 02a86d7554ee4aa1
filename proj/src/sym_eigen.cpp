#include "evograd/sym_eigen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evograd {

double SymMatrix::quadratic_form(std::span<const double> xi) const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) {
        double row = 0.0;
        for (int j = 0; j < n_; ++j) row += (*this)(i, j) * xi[static_cast<std::size_t>(j)];
        s += row * xi[static_cast<std::size_t>(i)];
    }
    return s;
}

namespace {

double off_diagonal_norm(const SymMatrix& a) {
    double s = 0.0;
    int n = a.size();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
}

// Cyclic-by-row Jacobi.  Rotations use the stable t = sign/(|theta|+sqrt(theta^2+1))
// form; convergence is quadratic once the off-diagonal norm is small.
std::vector<double> jacobi_eigenvalues(SymMatrix a, double tol) {
    const int n = a.size();
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (off_diagonal_norm(a) <= tol) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (apq == 0.0) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                double tau = s / (1.0 + c);
                double app = a(p, p), aqq = a(q, q);
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                for (int k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    double akp = a(k, p), akq = a(k, q);
                    a.set(k, p, akp - s * (akq + tau * akp));
                    a.set(k, q, akq + s * (akp - tau * akq));
                }
            }
        }
    }
    std::vector<double> ev(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

}  // namespace

std::vector<double> symmetric_eigenvalues(const SymMatrix& m, double tol) {
    const int n = m.size();
    if (n < 1) throw std::invalid_argument("empty matrix");
    if (n == 1) return {m(0, 0)};
    if (n == 2) {
        double a = m(0, 0), c = m(1, 1), b = m(0, 1);
        double mean = 0.5 * (a + c);
        double r = std::hypot(0.5 * (a - c), b);
        return {mean - r, mean + r};
    }
    return jacobi_eigenvalues(m, tol);
}

double smallest_eigenvalue(const SymMatrix& m, double tol) {
    return symmetric_eigenvalues(m, tol).front();
}

double largest_eigenvalue(const SymMatrix& m, double tol) {
    return symmetric_eigenvalues(m, tol).back();
}

}  // namespace evograd
