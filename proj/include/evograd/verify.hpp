#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evograd/conditions.hpp"
#include "evograd/solver.hpp"

namespace evograd {

struct MarginSample {
    double time = 0.0;
    double margin = 0.0;  // sup over checked nodes at this snapshot
    std::vector<double> witness_x;
};

struct VerificationReport {
    std::string kind;  // gradient | bernstein | bakry | necessity | max-principle
    bool pass = false;
    double worst_margin = 0.0;  // <= 0 means the inequality held everywhere checked
    double witness_t = 0.0;
    std::vector<double> witness_x;
    std::vector<MarginSample> series;
    // parameters echoed
    double c0 = 0.0;
    double epsilon = 0.0;
    double inner_fraction = 0.0;
    double tol = 0.0;
    int grid_n = 0;
    double grid_R = 0.0;
    std::uint64_t seed = 0;  // no randomness enters these checks; echoed for the manifest
    std::vector<std::string> notes;
};

class VerifyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// sqrt(sum_i (D_i f)^2) as an expression.
expr::NodePtr gradient_magnitude_expression(const expr::NodePtr& f, int dimension);

struct GradientCheckRun {
    VerificationReport report;
    Trajectory u;  // evolved from f
    Trajectory v;  // evolved from |grad f|
};

// Solves for u = G(t,s)f and v = G(t,s)|grad f| on the same grid and steps,
// then checks |grad u| <= e^{c0 (t-s)} v on the inner region at every
// snapshot.  tol defaults to 5e-3 * max |grad f|.
GradientCheckRun run_gradient_check(const OperatorFamily& op, const expr::NodePtr& f, double s,
                                    double t_end, double c0,
                                    const std::shared_ptr<const Grid>& grid,
                                    const SolverConfig& config,
                                    std::optional<double> tol = std::nullopt);

VerificationReport gradient_estimate_check(const OperatorFamily& op, const expr::NodePtr& f,
                                           double s, double t_end, double c0,
                                           const std::shared_ptr<const Grid>& grid,
                                           const SolverConfig& config,
                                           std::optional<double> tol = std::nullopt);

// Interior quantities of the gradient-flow subsolution argument at one
// snapshot: w = (|grad u|^2 + eps)^{1/2}, the bracket I, and the tangential
// projections P(grad D_i u) at the checked nodes.
struct BernsteinFields {
    ScalarField w;
    ScalarField I_field;                      // meaningful on checked_nodes only
    std::vector<std::int64_t> checked_nodes;  // inner nodes with |grad u| > 1e-6
    std::vector<double> grad_norm2;           // |grad u|^2 per checked node
    std::vector<double> projections;          // [checked][i][component], d*d per node
    double epsilon = 0.0;
};

BernsteinFields build_bernstein_fields(const OperatorFamily& op, const Trajectory& traj,
                                       int snapshot, double epsilon, double inner_fraction);

// Checks I <= c0 |grad u|^2 at every snapshot and checked node.  tol defaults
// to 1e-2 * max |grad u|^2 over the checked nodes of the trajectory.
VerificationReport bernstein_diagnostic(const OperatorFamily& op, const Trajectory& traj,
                                        double c0, double epsilon = 1e-8,
                                        std::optional<double> tol = std::nullopt,
                                        double inner_fraction = 0.5);

// <grad f, grad(A(s)f)> - |grad f| A(s)|grad f| - c |grad f|^2 at (s, x),
// with every derivative taken symbolically.
double bakry_residual(const OperatorFamily& op, const expr::NodePtr& f, double s,
                      std::span<const double> x, double c);

struct NecessityPattern {
    std::string family;  // cos | quadratic-pair | quadratic-triple
    int i = 0, j = 0, k = 0;  // 1-based
    double inferred = 0.0;          // D_i q_ii, 2 D_i q_ij + D_j q_ii, or the triple sum
    double tensor_violation = 0.0;  // matching entry of D_k q_ij + D_i q_kj + D_j q_ik
    double cross_check = 0.0;       // same entry from the symbolic derivative tensor
};

// Probes the directional limits of the bakry residual with the cosine and
// quadratic test families, one pattern per index class.
std::vector<NecessityPattern> necessity_patterns(const OperatorFamily& op, double s,
                                                 std::span<const double> x);

// extremal = max |tensor violation| over the patterns; pass iff <= 1e-3.
ConditionReport necessity_probe(const OperatorFamily& op, double s, std::span<const double> x);

// worst margin = max over snapshots of ||u(t)||_inf - f_sup; pass iff <= 1e-6.
VerificationReport max_principle_check(const Trajectory& traj, double f_sup);

}  // namespace evograd
