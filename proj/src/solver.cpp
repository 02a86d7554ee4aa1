#include "evograd/solver.hpp"

#include <algorithm>
#include <cmath>

namespace evograd {

Grid::Grid(int d, double halfwidth, int points_per_axis, std::vector<double> center)
    : d_(d), R_(halfwidth), n_(points_per_axis), center_(std::move(center)) {
    if (d_ < 1) throw SolverError("grid dimension must be >= 1");
    if (!(R_ > 0.0)) throw SolverError("grid half-width must be positive");
    if (n_ < 5 || n_ % 2 == 0) throw SolverError("points per axis must be odd and >= 5");
    if (center_.empty()) center_.assign(static_cast<std::size_t>(d_), 0.0);
    if (static_cast<int>(center_.size()) != d_) throw SolverError("center size mismatch");
    h_ = 2.0 * R_ / (n_ - 1);
    strides_.resize(static_cast<std::size_t>(d_));
    std::int64_t s = 1;
    for (int a = 0; a < d_; ++a) {
        strides_[static_cast<std::size_t>(a)] = s;
        s *= n_;
    }
    total_ = s;
    boundary_.assign(static_cast<std::size_t>(total_), 0);
    for (std::int64_t p = 0; p < total_; ++p) {
        std::int64_t rest = p;
        for (int a = 0; a < d_; ++a) {
            int idx = static_cast<int>(rest % n_);
            if (idx == 0 || idx == n_ - 1) {
                boundary_[static_cast<std::size_t>(p)] = 1;
                break;
            }
            rest /= n_;
        }
    }
}

void Grid::node_coords(std::int64_t flat, std::vector<double>& x) const {
    x.resize(static_cast<std::size_t>(d_));
    for (int a = 0; a < d_; ++a) {
        int idx = static_cast<int>(flat % n_);
        flat /= n_;
        x[static_cast<std::size_t>(a)] = coordinate(a, idx);
    }
}

void Grid::node_indices(std::int64_t flat, std::vector<int>& idx) const {
    idx.resize(static_cast<std::size_t>(d_));
    for (int a = 0; a < d_; ++a) {
        idx[static_cast<std::size_t>(a)] = static_cast<int>(flat % n_);
        flat /= n_;
    }
}

bool Grid::is_inner(std::int64_t flat, double fraction) const {
    double bound = fraction * R_ + 1e-12 * R_;
    for (int a = 0; a < d_; ++a) {
        int idx = static_cast<int>(flat % n_);
        flat /= n_;
        if (std::fabs(coordinate(a, idx) - center_[static_cast<std::size_t>(a)]) > bound)
            return false;
    }
    return true;
}

double ScalarField::sup_norm() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::fabs(v));
    return m;
}

ScalarField sample_expression(const std::shared_ptr<const Grid>& grid, const expr::NodePtr& f,
                              double t) {
    ScalarField field;
    field.grid = grid;
    field.values.resize(static_cast<std::size_t>(grid->total_nodes()));
    std::vector<double> x;
    for (std::int64_t p = 0; p < grid->total_nodes(); ++p) {
        grid->node_coords(p, x);
        field.values[static_cast<std::size_t>(p)] = expr::evaluate(f, t, x);
    }
    return field;
}

namespace {

// Per-node stencil coefficients of the discrete spatial operator at a fixed
// time.  Axis a contributes cp[a] u(+e_a) + cm[a] u(-e_a); each stored cross
// pair (i,j) contributes m (u(++) - u(+-) - u(-+) + u(--)); diag collects the
// center weight.
struct StencilData {
    int d = 0;
    std::vector<std::vector<double>> cp, cm;   // [axis][node]
    std::vector<std::pair<int, int>> pairs;    // cross pairs with q_ij not identically 0
    std::vector<std::vector<double>> mixed;    // [pair][node]
    std::vector<double> diag;                  // [node]
    double built_at = 0.0;
    bool built = false;
};

void build_stencil(const OperatorFamily& op, const Grid& grid, double t, Advection advection,
                   StencilData& st) {
    const int d = op.dimension();
    const double h = grid.spacing();
    const double inv_h2 = 1.0 / (h * h);
    const std::int64_t total = grid.total_nodes();

    if (!st.built) {
        st.d = d;
        st.cp.assign(static_cast<std::size_t>(d), {});
        st.cm.assign(static_cast<std::size_t>(d), {});
        for (int a = 0; a < d; ++a) {
            st.cp[static_cast<std::size_t>(a)].resize(static_cast<std::size_t>(total));
            st.cm[static_cast<std::size_t>(a)].resize(static_cast<std::size_t>(total));
        }
        st.pairs.clear();
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j)
                if (!expr::is_constant(op.q(i, j), 0.0)) st.pairs.emplace_back(i, j);
        st.mixed.assign(st.pairs.size(), std::vector<double>(static_cast<std::size_t>(total)));
        st.diag.resize(static_cast<std::size_t>(total));
    }

    std::vector<double> x;
    for (std::int64_t p = 0; p < total; ++p) {
        grid.node_coords(p, x);
        double diag = 0.0;
        for (int a = 0; a < d; ++a) {
            double qa = expr::evaluate(op.q(a, a), t, x);
            double ba = expr::evaluate(op.b(a), t, x);
            double cp, cm;
            if (advection == Advection::Upwind) {
                cp = qa * inv_h2 + (ba > 0.0 ? ba / h : 0.0);
                cm = qa * inv_h2 + (ba < 0.0 ? -ba / h : 0.0);
            } else {
                cp = qa * inv_h2 + 0.5 * ba / h;
                cm = qa * inv_h2 - 0.5 * ba / h;
            }
            st.cp[static_cast<std::size_t>(a)][static_cast<std::size_t>(p)] = cp;
            st.cm[static_cast<std::size_t>(a)][static_cast<std::size_t>(p)] = cm;
            diag += -2.0 * qa * inv_h2;
            if (advection == Advection::Upwind) diag -= std::fabs(ba) / h;
        }
        for (std::size_t k = 0; k < st.pairs.size(); ++k) {
            auto [i, j] = st.pairs[k];
            // q_ij and q_ji both contribute, hence the factor 2 over 4 h^2.
            st.mixed[k][static_cast<std::size_t>(p)] =
                expr::evaluate(op.q(i, j), t, x) * 0.5 * inv_h2;
        }
        st.diag[static_cast<std::size_t>(p)] = diag;
    }
    st.built_at = t;
    st.built = true;
}

// Keeps at most one stencil per (time, advection); time-independent operators
// build it once.
class StencilCache {
public:
    StencilCache(const OperatorFamily& op, const Grid& grid, Advection advection)
        : op_(op), grid_(grid), advection_(advection) {}

    const StencilData& at(double t) {
        if (!data_.built || (!op_.time_independent() && data_.built_at != t))
            build_stencil(op_, grid_, t, advection_, data_);
        return data_;
    }

private:
    const OperatorFamily& op_;
    const Grid& grid_;
    Advection advection_;
    StencilData data_;
};

// out = (A u) at interior nodes, 0 at boundary nodes.
void apply_stencil(const Grid& grid, const StencilData& st, const std::vector<double>& u,
                   std::vector<double>& out) {
    const int d = grid.dimension();
    const std::int64_t total = grid.total_nodes();
    out.assign(static_cast<std::size_t>(total), 0.0);
    for (std::int64_t p = 0; p < total; ++p) {
        if (grid.is_boundary(p)) continue;
        double acc = st.diag[static_cast<std::size_t>(p)] * u[static_cast<std::size_t>(p)];
        for (int a = 0; a < d; ++a) {
            std::int64_t s = grid.stride(a);
            acc += st.cp[static_cast<std::size_t>(a)][static_cast<std::size_t>(p)] *
                       u[static_cast<std::size_t>(p + s)] +
                   st.cm[static_cast<std::size_t>(a)][static_cast<std::size_t>(p)] *
                       u[static_cast<std::size_t>(p - s)];
        }
        for (std::size_t k = 0; k < st.pairs.size(); ++k) {
            std::int64_t si = grid.stride(st.pairs[k].first);
            std::int64_t sj = grid.stride(st.pairs[k].second);
            acc += st.mixed[k][static_cast<std::size_t>(p)] *
                   (u[static_cast<std::size_t>(p + si + sj)] -
                    u[static_cast<std::size_t>(p + si - sj)] -
                    u[static_cast<std::size_t>(p - si + sj)] +
                    u[static_cast<std::size_t>(p - si - sj)]);
        }
        out[static_cast<std::size_t>(p)] = acc;
    }
}

// Solves (I - theta dt A) w = rhs by Gauss-Seidel sweeps, w = 0 on the
// boundary.  The previous time level is the initial guess.
void gauss_seidel_solve(const Grid& grid, const StencilData& st, double theta_dt,
                        const std::vector<double>& rhs, std::vector<double>& w, double tol,
                        int max_sweeps) {
    const int d = grid.dimension();
    const std::int64_t total = grid.total_nodes();
    double rhs_scale = 0.0;
    for (double v : rhs) rhs_scale = std::max(rhs_scale, std::fabs(v));
    const double target = tol * (1.0 + rhs_scale);

    auto off_diagonal = [&](std::int64_t p) {
        double off = 0.0;
        for (int a = 0; a < d; ++a) {
            std::int64_t s = grid.stride(a);
            off += st.cp[static_cast<std::size_t>(a)][static_cast<std::size_t>(p)] *
                       w[static_cast<std::size_t>(p + s)] +
                   st.cm[static_cast<std::size_t>(a)][static_cast<std::size_t>(p)] *
                       w[static_cast<std::size_t>(p - s)];
        }
        for (std::size_t k = 0; k < st.pairs.size(); ++k) {
            std::int64_t si = grid.stride(st.pairs[k].first);
            std::int64_t sj = grid.stride(st.pairs[k].second);
            off += st.mixed[k][static_cast<std::size_t>(p)] *
                   (w[static_cast<std::size_t>(p + si + sj)] -
                    w[static_cast<std::size_t>(p + si - sj)] -
                    w[static_cast<std::size_t>(p - si + sj)] +
                    w[static_cast<std::size_t>(p - si - sj)]);
        }
        return off;
    };

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        for (std::int64_t p = 0; p < total; ++p) {
            if (grid.is_boundary(p)) continue;
            double denom = 1.0 - theta_dt * st.diag[static_cast<std::size_t>(p)];
            w[static_cast<std::size_t>(p)] =
                (rhs[static_cast<std::size_t>(p)] + theta_dt * off_diagonal(p)) / denom;
        }
        double residual = 0.0;
        for (std::int64_t p = 0; p < total; ++p) {
            if (grid.is_boundary(p)) continue;
            double denom = 1.0 - theta_dt * st.diag[static_cast<std::size_t>(p)];
            double r = rhs[static_cast<std::size_t>(p)] + theta_dt * off_diagonal(p) -
                       denom * w[static_cast<std::size_t>(p)];
            residual = std::max(residual, std::fabs(r));
        }
        if (residual <= target) return;
    }
    throw SolverError("linear solver did not reach residual " + std::to_string(tol) + " in " +
                      std::to_string(max_sweeps) + " sweeps");
}

}  // namespace

ScalarField apply_discrete_generator(const OperatorFamily& op, const ScalarField& field, double t,
                                     Advection advection) {
    const Grid& grid = *field.grid;
    if (grid.dimension() != op.dimension()) throw SolverError("grid/operator dimension mismatch");
    StencilData st;
    build_stencil(op, grid, t, advection, st);
    ScalarField out;
    out.grid = field.grid;
    apply_stencil(grid, st, field.values, out.values);
    return out;
}

double auto_time_step(const OperatorFamily& op, const Grid& grid, double s, double t_end,
                      Scheme scheme) {
    const int d = grid.dimension();
    const int n = grid.points_per_axis();
    int step = std::max(1, (n - 1) / 16);
    std::vector<int> picks;
    for (int i = 0; i < n; i += step) picks.push_back(i);
    if (picks.back() != n - 1) picks.push_back(n - 1);

    const double times[3] = {s, 0.5 * (s + t_end), t_end};
    double lambda_max = 0.0, b_max = 0.0;
    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    SymMatrix Q(d);
    int n_times = op.time_independent() ? 1 : 3;
    for (int ti = 0; ti < n_times; ++ti) {
        double t = times[ti];
        std::fill(idx.begin(), idx.end(), 0);
        for (;;) {
            for (int a = 0; a < d; ++a)
                x[static_cast<std::size_t>(a)] =
                    grid.coordinate(a, picks[idx[static_cast<std::size_t>(a)]]);
            for (int i = 0; i < d; ++i)
                for (int j = i; j < d; ++j) Q.set(i, j, expr::evaluate(op.q(i, j), t, x));
            lambda_max = std::max(lambda_max, largest_eigenvalue(Q));
            double b2 = 0.0;
            for (int i = 0; i < d; ++i) {
                double bi = expr::evaluate(op.b(i), t, x);
                b2 += bi * bi;
            }
            b_max = std::max(b_max, std::sqrt(b2));
            int a = d - 1;
            while (a >= 0 && ++idx[static_cast<std::size_t>(a)] >= picks.size()) {
                idx[static_cast<std::size_t>(a)] = 0;
                --a;
            }
            if (a < 0) break;
        }
    }
    double h = grid.spacing();
    double denom = 2.0 * d * lambda_max + h * b_max;
    if (denom <= 0.0) throw SolverError("degenerate operator: auto dt undefined");
    double dt = h * h / denom;
    if (scheme == Scheme::ExplicitEuler) dt *= 0.9;
    return std::min(dt, t_end - s);
}

Trajectory evolve(const OperatorFamily& op, const expr::NodePtr& f, double s, double t_end,
                  const std::shared_ptr<const Grid>& grid, const SolverConfig& config) {
    if (!(s < t_end)) throw SolverError("requires s < t_end");
    TimeInterval I = op.time_interval();
    if (!(I.lo < s) || !(t_end <= I.hi))
        throw SolverError("[s, t_end] must lie inside the operator interval");
    if (grid->dimension() != op.dimension())
        throw SolverError("grid/operator dimension mismatch");
    if (config.scheme == Scheme::ThetaImplicit && (config.theta < 0.0 || config.theta > 1.0))
        throw SolverError("theta must be in [0, 1]");
    if (config.dt && !(*config.dt > 0.0)) throw SolverError("dt must be positive");
    if (!(config.inner_fraction > 0.0 && config.inner_fraction < 1.0))
        throw SolverError("inner-region fraction must be in (0, 1)");

    // Snapshot schedule: s, interior requested times, t_end.
    std::vector<double> snaps{s};
    for (double t : config.snapshot_times)
        if (t > s && t < t_end) snaps.push_back(t);
    snaps.push_back(t_end);
    std::sort(snaps.begin(), snaps.end());
    snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());

    double theta = config.scheme == Scheme::ExplicitEuler ? 0.0 : config.theta;
    double dt_target = config.dt ? *config.dt
                                 : auto_time_step(op, *grid, s, t_end,
                                                  theta == 0.0 ? Scheme::ExplicitEuler
                                                               : Scheme::ThetaImplicit);

    Trajectory traj;
    traj.grid = grid;
    traj.s = s;
    traj.initial_expression = expr::to_string(f);

    ScalarField u = sample_expression(grid, f, s);
    // Dirichlet data: the truncated problem carries 0 on the boundary.
    const std::int64_t total = grid->total_nodes();
    for (std::int64_t p = 0; p < total; ++p)
        if (grid->is_boundary(p)) u.values[static_cast<std::size_t>(p)] = 0.0;

    const double f_sup = u.sup_norm();
    const double growth_limit = f_sup * 1.01;

    traj.times.push_back(s);
    traj.snapshots.push_back(u);
    traj.sup_norms.push_back(f_sup);

    StencilCache cache(op, *grid, config.advection);
    std::vector<double> rhs(static_cast<std::size_t>(total));
    std::vector<double> work;

    double t = s;
    for (std::size_t seg = 0; seg + 1 < snaps.size(); ++seg) {
        double t_next_snap = snaps[seg + 1];
        double span = t_next_snap - snaps[seg];
        int steps = std::max(1, static_cast<int>(std::ceil(span / dt_target - 1e-12)));
        double dt = span / steps;
        for (int k = 0; k < steps; ++k) {
            double t0 = snaps[seg] + dt * k;
            double t1 = k + 1 == steps ? t_next_snap : snaps[seg] + dt * (k + 1);
            if (theta < 1.0) {
                const StencilData& st = cache.at(t0);
                apply_stencil(*grid, st, u.values, work);
                double w_expl = (1.0 - theta) * dt;
                for (std::int64_t p = 0; p < total; ++p)
                    rhs[static_cast<std::size_t>(p)] =
                        u.values[static_cast<std::size_t>(p)] +
                        w_expl * work[static_cast<std::size_t>(p)];
            } else {
                rhs = u.values;
            }
            if (theta > 0.0) {
                const StencilData& st = cache.at(t1);
                gauss_seidel_solve(*grid, st, theta * dt, rhs, u.values,
                                   config.linear_solver_tol, config.max_sweeps);
            } else {
                u.values.swap(rhs);
            }
            t = t1;

            double sup = 0.0;
            bool finite = true;
            for (double v : u.values) {
                if (!std::isfinite(v)) { finite = false; break; }
                sup = std::max(sup, std::fabs(v));
            }
            if (!finite)
                throw SolverError("non-finite value at t = " + std::to_string(t) +
                                  "; reduce dt or use the implicit scheme");
            if (sup > growth_limit)
                throw SolverError("instability detected at t = " + std::to_string(t) + ": sup " +
                                  std::to_string(sup) + " exceeds " +
                                  std::to_string(growth_limit) + "; reduce dt");
        }
        traj.times.push_back(t_next_snap);
        traj.snapshots.push_back(u);
        traj.sup_norms.push_back(u.sup_norm());
    }
    return traj;
}

NestedEvolveResult nested_evolve(const OperatorFamily& op, const expr::NodePtr& f, double s,
                                 double t_end, const std::vector<double>& radii, int n_smallest,
                                 const SolverConfig& config) {
    if (radii.size() < 2) throw SolverError("nested_evolve needs at least two radii");
    for (std::size_t k = 0; k + 1 < radii.size(); ++k)
        if (!(radii[k] < radii[k + 1])) throw SolverError("radii must be strictly increasing");

    const double h = 2.0 * radii.front() / (n_smallest - 1);
    std::vector<std::shared_ptr<const Grid>> grids;
    for (double R : radii) {
        double n_real = 2.0 * R / h + 1.0;
        int n = static_cast<int>(std::lround(n_real));
        if (std::fabs(n_real - n) > 1e-9 || n % 2 == 0)
            throw SolverError("radius " + std::to_string(R) +
                              " is not compatible with the shared spacing (needs an odd node "
                              "count)");
        grids.push_back(std::make_shared<Grid>(op.dimension(), R, n));
    }

    // One shared time step, stable on the largest (stiffest) grid, so fields
    // at matching snapshots differ only through the domain truncation.
    SolverConfig run_config = config;
    if (!run_config.dt)
        run_config.dt = auto_time_step(op, *grids.back(), s, t_end,
                                       run_config.scheme == Scheme::ExplicitEuler
                                           ? Scheme::ExplicitEuler
                                           : Scheme::ThetaImplicit);

    std::vector<Trajectory> runs;
    for (const auto& g : grids) runs.push_back(evolve(op, f, s, t_end, g, run_config));

    NestedEvolveResult result;
    result.table.radii = radii;
    result.table.times = runs.front().times;

    const int d = op.dimension();
    const double inner_halfwidth = config.inner_fraction * radii.front();
    for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
        const Grid& ga = *runs[k].grid;
        const Grid& gb = *runs[k + 1].grid;
        // Coarse node (i_1..i_d) sits at fine indices i_a + offset.
        int offset = (gb.points_per_axis() - ga.points_per_axis()) / 2;
        std::vector<double> diffs;
        std::vector<double> x;
        std::vector<int> idx;
        for (std::size_t m = 0; m < runs[k].times.size(); ++m) {
            double worst = 0.0;
            for (std::int64_t p = 0; p < ga.total_nodes(); ++p) {
                ga.node_coords(p, x);
                bool inner = true;
                for (int a = 0; a < d; ++a)
                    if (std::fabs(x[static_cast<std::size_t>(a)]) > inner_halfwidth + 1e-12)
                        inner = false;
                if (!inner) continue;
                ga.node_indices(p, idx);
                std::int64_t q = 0;
                for (int a = 0; a < d; ++a)
                    q += (idx[static_cast<std::size_t>(a)] + offset) * gb.stride(a);
                worst = std::max(worst,
                                 std::fabs(runs[k].snapshots[m].values[static_cast<std::size_t>(p)] -
                                           runs[k + 1].snapshots[m].values[static_cast<std::size_t>(q)]));
            }
            diffs.push_back(worst);
        }
        result.table.differences.push_back(std::move(diffs));
    }

    // Successive differences should shrink once the domain is large enough.
    for (std::size_t k = 0; k + 1 < result.table.differences.size(); ++k) {
        for (std::size_t m = 0; m < result.table.times.size(); ++m) {
            double a = result.table.differences[k][m];
            double b = result.table.differences[k + 1][m];
            if (b > 2.0 * a && b > 1e-14) {
                result.table.warnings.push_back(
                    "inner difference grew from " + std::to_string(a) + " to " + std::to_string(b) +
                    " at t = " + std::to_string(result.table.times[m]) +
                    "; domain not yet large enough");
            }
        }
    }

    result.trajectory = std::move(runs.back());
    return result;
}

namespace {

double one_dimensional_derivative(const std::vector<double>& u, std::int64_t p, std::int64_t s,
                                  int idx, int n, double h) {
    auto at = [&](std::int64_t q) { return u[static_cast<std::size_t>(q)]; };
    if (idx <= 1) return (-3.0 * at(p) + 4.0 * at(p + s) - at(p + 2 * s)) / (2.0 * h);
    if (idx >= n - 2) return (3.0 * at(p) - 4.0 * at(p - s) + at(p - 2 * s)) / (2.0 * h);
    return (at(p + s) - at(p - s)) / (2.0 * h);
}

}  // namespace

GradientField gradient_field(const ScalarField& field) {
    const Grid& grid = *field.grid;
    const int d = grid.dimension();
    const int n = grid.points_per_axis();
    const double h = grid.spacing();
    const std::int64_t total = grid.total_nodes();

    GradientField g;
    g.component.resize(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) {
        g.component[static_cast<std::size_t>(a)].grid = field.grid;
        g.component[static_cast<std::size_t>(a)].values.resize(static_cast<std::size_t>(total));
    }
    g.magnitude.grid = field.grid;
    g.magnitude.values.resize(static_cast<std::size_t>(total));

    std::vector<int> idx;
    for (std::int64_t p = 0; p < total; ++p) {
        grid.node_indices(p, idx);
        double norm2 = 0.0;
        for (int a = 0; a < d; ++a) {
            double v = one_dimensional_derivative(field.values, p, grid.stride(a),
                                                  idx[static_cast<std::size_t>(a)], n, h);
            g.component[static_cast<std::size_t>(a)].values[static_cast<std::size_t>(p)] = v;
            norm2 += v * v;
        }
        g.magnitude.values[static_cast<std::size_t>(p)] = std::sqrt(norm2);
    }
    return g;
}

GradientField gradient_field(const Trajectory& traj, int snapshot) {
    if (snapshot < 0 || snapshot >= static_cast<int>(traj.snapshots.size()))
        throw SolverError("snapshot index out of range");
    return gradient_field(traj.snapshots[static_cast<std::size_t>(snapshot)]);
}

}  // namespace evograd
