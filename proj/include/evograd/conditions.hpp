#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evograd/operator_family.hpp"

namespace evograd {

// Discretization of "for every (t,x)" over a bounded window: a tensor grid in
// time and space plus extra uniform random samples, all reproducible from the
// seed.
struct SampleRegion {
    double t_lo = 0.0, t_hi = 0.0;
    double box_lo = 0.0, box_hi = 0.0;   // cube [box_lo, box_hi]^d
    std::vector<int> grid_counts;        // per spatial axis, >= 2
    int time_count = 7;
    int random_count = 1000;
    std::uint64_t seed = 42;

    static SampleRegion defaults(int d, double box_halfwidth, double t_lo, double t_hi);
};

struct ConditionReport {
    std::string condition;
    bool pass = false;
    double extremal = 0.0;
    double witness_t = 0.0;
    std::vector<double> witness_x;
    long samples = 0;
    double tol = 0.0;
    std::optional<EtaMode> eta_mode;
    std::uint64_t seed = 0;
    std::vector<std::string> notes;
};

class ConditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// min over samples of the smallest eigenvalue of Q(t,x); pass iff > 0.
ConditionReport check_ellipticity(const OperatorFamily& op, const SampleRegion& region);

// max over i,j,k of |D_k q_ij + D_i q_kj + D_j q_ik| at (t,x), from the
// symbolic derivative tensor.
double algebraic_residual(const OperatorFamily& op, double t, std::span<const double> x);

ConditionReport check_algebraic(const OperatorFamily& op, const SampleRegion& region,
                                double tol = 1e-10);

// M(t,x) = S + (grad b + grad b^T)/2 with S_kl = 1/(2 eta) sum_ij D_k q_ij D_l q_ij,
// so that the dissipativity quadratic form equals <M xi, xi>.
SymMatrix dissipativity_matrix(const OperatorFamily& op, double t, std::span<const double> x,
                               EtaMode eta_mode);

// max over samples of the largest eigenvalue of M(t,x): the empirical sharp
// constant of the dissipativity bound.
ConditionReport estimate_c0(const OperatorFamily& op, const SampleRegion& region,
                            EtaMode eta_mode);

// max over samples of (A(t)phi)/phi; pass iff <= gamma.  Positivity of phi is
// checked on the samples; radial unboundedness is recorded as an assumption.
ConditionReport check_lyapunov(const OperatorFamily& op, const expr::NodePtr& phi, double gamma,
                               const SampleRegion& region);

}  // namespace evograd
