#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evograd/operator_family.hpp"

namespace evograd {

// Uniform Cartesian grid on the box [center - R, center + R]^d.  n is odd so
// the center is a node; spacing h = 2R/(n-1).  Node (i_1,..,i_d) flattens to
// sum_a i_a * n^a (axis 1 fastest).
class Grid {
public:
    Grid(int d, double halfwidth, int points_per_axis, std::vector<double> center = {});

    int dimension() const { return d_; }
    double halfwidth() const { return R_; }
    int points_per_axis() const { return n_; }
    double spacing() const { return h_; }
    const std::vector<double>& center() const { return center_; }

    std::int64_t total_nodes() const { return total_; }
    std::int64_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }

    double coordinate(int axis, int index) const {
        return center_[static_cast<std::size_t>(axis)] - R_ + h_ * index;
    }
    void node_coords(std::int64_t flat, std::vector<double>& x) const;
    void node_indices(std::int64_t flat, std::vector<int>& idx) const;
    bool is_boundary(std::int64_t flat) const {
        return boundary_[static_cast<std::size_t>(flat)] != 0;
    }

    // |x - center|_inf <= fraction * R (+ rounding slack)
    bool is_inner(std::int64_t flat, double fraction) const;

private:
    int d_;
    double R_;
    int n_;
    double h_;
    std::vector<double> center_;
    std::vector<std::int64_t> strides_;
    std::int64_t total_;
    std::vector<std::uint8_t> boundary_;
};

struct ScalarField {
    std::shared_ptr<const Grid> grid;
    std::vector<double> values;

    double sup_norm() const;
};

// Samples an expression (in x1..xd, optionally t) on the grid nodes.
ScalarField sample_expression(const std::shared_ptr<const Grid>& grid, const expr::NodePtr& f,
                              double t);

enum class Scheme { ExplicitEuler, ThetaImplicit };
enum class Advection { Centered, Upwind };

struct SolverConfig {
    Scheme scheme = Scheme::ThetaImplicit;
    double theta = 1.0;                     // implicit weight
    std::optional<double> dt;               // auto when unset
    Advection advection = Advection::Upwind;
    std::vector<double> snapshot_times;     // strictly inside (s, t_end); endpoints added
    double inner_fraction = 0.5;            // rho
    double linear_solver_tol = 1e-12;       // sweep residual target (relative)
    int max_sweeps = 20000;
};

struct Trajectory {
    std::shared_ptr<const Grid> grid;
    std::vector<double> times;           // starts at s, strictly increasing
    std::vector<ScalarField> snapshots;  // aligned with times
    std::string initial_expression;
    double s = 0.0;
    std::vector<double> sup_norms;       // per snapshot max |u|
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One application of the discrete spatial operator: central second
// differences, 4-point mixed stencils for the cross terms, and first
// differences (per advection mode) for the drift.  Boundary nodes are 0.
ScalarField apply_discrete_generator(const OperatorFamily& op, const ScalarField& field, double t,
                                     Advection advection = Advection::Upwind);

// Stability-limited explicit step: 0.9 h^2 / (2 d Lambda + h B) with Lambda
// and B sampled over the grid and time window.
double auto_time_step(const OperatorFamily& op, const Grid& grid, double s, double t_end,
                      Scheme scheme);

// Time-steps the Cauchy-Dirichlet problem u(s) = f, u = 0 on the box
// boundary, recording snapshots.  Aborts on sup-norm growth or non-finite
// values.
Trajectory evolve(const OperatorFamily& op, const expr::NodePtr& f, double s, double t_end,
                  const std::shared_ptr<const Grid>& grid, const SolverConfig& config);

struct ConvergenceTable {
    std::vector<double> radii;
    std::vector<double> times;  // snapshot times
    // differences[k][m] = max |u_{R_{k+1}} - u_{R_k}| over the inner box of
    // half-width rho * R_1 at snapshot m
    std::vector<std::vector<double>> differences;
    std::vector<std::string> warnings;
};

struct NestedEvolveResult {
    Trajectory trajectory;  // on the largest grid
    ConvergenceTable table;
};

// Solves on each radius with shared spacing (n_smallest points on the first
// radius) and a shared time step, and tabulates successive inner differences.
NestedEvolveResult nested_evolve(const OperatorFamily& op, const expr::NodePtr& f, double s,
                                 double t_end, const std::vector<double>& radii, int n_smallest,
                                 const SolverConfig& config);

struct GradientField {
    std::vector<ScalarField> component;  // d fields
    ScalarField magnitude;               // |grad u|
};

// Centered differences away from the boundary; second-order one-sided
// stencils on the two layers next to it, so the zero Dirichlet values never
// enter interior gradients.
GradientField gradient_field(const Trajectory& traj, int snapshot);
GradientField gradient_field(const ScalarField& field);

}  // namespace evograd
