#include "evograd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace evograd {

expr::NodePtr gradient_magnitude_expression(const expr::NodePtr& f, int dimension) {
    expr::NodePtr sum;
    for (int i = 1; i <= dimension; ++i) {
        expr::NodePtr di = expr::differentiate(f, i);
        expr::NodePtr sq = expr::pow(di, expr::constant(2.0));
        sum = sum ? expr::add(sum, sq) : sq;
    }
    return expr::simplify(expr::call(expr::Builtin::Sqrt, {sum}));
}

namespace {

void note_parameters(VerificationReport& rep, const Grid& grid, const SolverConfig& config) {
    rep.inner_fraction = config.inner_fraction;
    rep.grid_n = grid.points_per_axis();
    rep.grid_R = grid.halfwidth();
}

}  // namespace

GradientCheckRun run_gradient_check(const OperatorFamily& op, const expr::NodePtr& f, double s,
                                    double t_end, double c0,
                                    const std::shared_ptr<const Grid>& grid,
                                    const SolverConfig& config, std::optional<double> tol) {
    if (!std::isfinite(c0)) throw VerifyError("c0 must be finite");
    expr::NodePtr grad_f = gradient_magnitude_expression(f, op.dimension());

    // A shared explicit dt keeps both solves on identical steps.
    SolverConfig run_config = config;
    if (!run_config.dt)
        run_config.dt = auto_time_step(op, *grid, s, t_end,
                                       run_config.scheme == Scheme::ExplicitEuler
                                           ? Scheme::ExplicitEuler
                                           : Scheme::ThetaImplicit);

    GradientCheckRun run;
    run.u = evolve(op, f, s, t_end, grid, run_config);
    run.v = evolve(op, grad_f, s, t_end, grid, run_config);

    double grad_f_sup = run.v.sup_norms.front();
    double tol_grad = tol ? *tol : 5e-3 * grad_f_sup;

    VerificationReport rep;
    rep.kind = "gradient";
    rep.c0 = c0;
    rep.tol = tol_grad;
    note_parameters(rep, *grid, run_config);

    const Grid& g = *grid;
    bool first = true;
    std::vector<double> x;
    for (std::size_t m = 0; m < run.u.times.size(); ++m) {
        double t = run.u.times[m];
        double factor = std::exp(c0 * (t - s));
        GradientField gu = gradient_field(run.u, static_cast<int>(m));
        const std::vector<double>& v = run.v.snapshots[m].values;

        MarginSample sample;
        sample.time = t;
        bool any = false;
        for (std::int64_t p = 0; p < g.total_nodes(); ++p) {
            if (!g.is_inner(p, run_config.inner_fraction)) continue;
            double margin = gu.magnitude.values[static_cast<std::size_t>(p)] -
                            factor * v[static_cast<std::size_t>(p)];
            if (!any || margin > sample.margin) {
                any = true;
                sample.margin = margin;
                g.node_coords(p, x);
                sample.witness_x = x;
            }
        }
        if (!any) throw VerifyError("inner region contains no nodes");
        rep.series.push_back(sample);
        if (first || sample.margin > rep.worst_margin) {
            first = false;
            rep.worst_margin = sample.margin;
            rep.witness_t = t;
            rep.witness_x = sample.witness_x;
        }
    }
    rep.pass = rep.worst_margin <= tol_grad;
    run.report = std::move(rep);
    return run;
}

VerificationReport gradient_estimate_check(const OperatorFamily& op, const expr::NodePtr& f,
                                           double s, double t_end, double c0,
                                           const std::shared_ptr<const Grid>& grid,
                                           const SolverConfig& config, std::optional<double> tol) {
    return run_gradient_check(op, f, s, t_end, c0, grid, config, tol).report;
}

// ---------------------------------------------------------------------------
// Bernstein diagnostic
// ---------------------------------------------------------------------------

namespace {

constexpr double kGradFloor = 1e-6;

// Evaluates a set of expressions on the listed nodes.
std::vector<double> evaluate_on_nodes(const Grid& grid, const expr::NodePtr& e, double t,
                                      const std::vector<std::int64_t>& nodes) {
    std::vector<double> out(nodes.size());
    std::vector<double> x;
    for (std::size_t m = 0; m < nodes.size(); ++m) {
        grid.node_coords(nodes[m], x);
        out[m] = expr::evaluate(e, t, x);
    }
    return out;
}

}  // namespace

BernsteinFields build_bernstein_fields(const OperatorFamily& op, const Trajectory& traj,
                                       int snapshot, double epsilon, double inner_fraction) {
    if (snapshot < 0 || snapshot >= static_cast<int>(traj.snapshots.size()))
        throw VerifyError("snapshot index out of range");
    if (!(epsilon > 0.0)) throw VerifyError("epsilon must be positive");

    const Grid& g = *traj.grid;
    const int d = g.dimension();
    const int n = g.points_per_axis();
    const double h = g.spacing();
    const double t = traj.times[static_cast<std::size_t>(snapshot)];
    const std::vector<double>& u = traj.snapshots[static_cast<std::size_t>(snapshot)].values;

    GradientField gu = gradient_field(traj, snapshot);

    BernsteinFields bf;
    bf.epsilon = epsilon;
    bf.w.grid = traj.grid;
    bf.w.values.resize(static_cast<std::size_t>(g.total_nodes()));
    for (std::int64_t p = 0; p < g.total_nodes(); ++p) {
        double gn = gu.magnitude.values[static_cast<std::size_t>(p)];
        bf.w.values[static_cast<std::size_t>(p)] = std::sqrt(gn * gn + epsilon);
    }
    bf.I_field.grid = traj.grid;
    bf.I_field.values.assign(static_cast<std::size_t>(g.total_nodes()), 0.0);

    // Checked nodes: inner, a full centered stencil available, gradient above
    // the projection floor.
    std::vector<int> idx;
    for (std::int64_t p = 0; p < g.total_nodes(); ++p) {
        if (!g.is_inner(p, inner_fraction)) continue;
        g.node_indices(p, idx);
        bool ok = true;
        for (int a = 0; a < d; ++a)
            if (idx[static_cast<std::size_t>(a)] < 1 || idx[static_cast<std::size_t>(a)] > n - 2)
                ok = false;
        if (!ok) continue;
        if (gu.magnitude.values[static_cast<std::size_t>(p)] <= kGradFloor) continue;
        bf.checked_nodes.push_back(p);
    }

    // Coefficient tensors on the checked nodes.
    std::vector<std::vector<double>> q_vals(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            q_vals[static_cast<std::size_t>(i) * d + j] =
                evaluate_on_nodes(g, op.q(i, j), t, bf.checked_nodes);
    std::vector<std::vector<double>> dq_vals(static_cast<std::size_t>(d) * d * d);
    for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                dq_vals[static_cast<std::size_t>((k * d + i) * d + j)] =
                    evaluate_on_nodes(g, op.dq(k, i, j), t, bf.checked_nodes);
    std::vector<std::vector<double>> db_vals(static_cast<std::size_t>(d) * d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i)
            db_vals[static_cast<std::size_t>(j) * d + i] =
                evaluate_on_nodes(g, op.db(j, i), t, bf.checked_nodes);

    bf.grad_norm2.resize(bf.checked_nodes.size());
    bf.projections.resize(bf.checked_nodes.size() * static_cast<std::size_t>(d) * d);

    const double inv_h2 = 1.0 / (h * h);
    std::vector<double> hess(static_cast<std::size_t>(d) * d);
    std::vector<double> grad(static_cast<std::size_t>(d));
    std::vector<double> proj(static_cast<std::size_t>(d) * d);

    for (std::size_t m = 0; m < bf.checked_nodes.size(); ++m) {
        std::int64_t p = bf.checked_nodes[m];
        double gn = 0.0;
        for (int a = 0; a < d; ++a) {
            grad[static_cast<std::size_t>(a)] =
                gu.component[static_cast<std::size_t>(a)].values[static_cast<std::size_t>(p)];
            gn += grad[static_cast<std::size_t>(a)] * grad[static_cast<std::size_t>(a)];
        }
        bf.grad_norm2[m] = gn;
        double inv_norm = 1.0 / std::sqrt(gn);

        // Centered Hessian.
        for (int a = 0; a < d; ++a) {
            std::int64_t sa = g.stride(a);
            hess[static_cast<std::size_t>(a) * d + a] =
                (u[static_cast<std::size_t>(p + sa)] - 2.0 * u[static_cast<std::size_t>(p)] +
                 u[static_cast<std::size_t>(p - sa)]) *
                inv_h2;
            for (int b = a + 1; b < d; ++b) {
                std::int64_t sb = g.stride(b);
                double v = (u[static_cast<std::size_t>(p + sa + sb)] -
                            u[static_cast<std::size_t>(p + sa - sb)] -
                            u[static_cast<std::size_t>(p - sa + sb)] +
                            u[static_cast<std::size_t>(p - sa - sb)]) *
                           0.25 * inv_h2;
                hess[static_cast<std::size_t>(a) * d + b] = v;
                hess[static_cast<std::size_t>(b) * d + a] = v;
            }
        }

        // P(grad D_i u) for each row of the Hessian.
        for (int i = 0; i < d; ++i) {
            double dot = 0.0;
            for (int l = 0; l < d; ++l)
                dot += hess[static_cast<std::size_t>(i) * d + l] *
                       grad[static_cast<std::size_t>(l)] * inv_norm;
            for (int l = 0; l < d; ++l)
                proj[static_cast<std::size_t>(i) * d + l] =
                    hess[static_cast<std::size_t>(i) * d + l] -
                    dot * grad[static_cast<std::size_t>(l)] * inv_norm;
        }
        std::copy(proj.begin(), proj.end(),
                  bf.projections.begin() + static_cast<std::ptrdiff_t>(
                                               m * static_cast<std::size_t>(d) * d));

        // I = <grad b grad u, grad u> - sum q_ij <P_i, P_j> + sum_k D_k u Tr(D_k Q D^2 u)
        double drift_term = 0.0;
        for (int i = 0; i < d; ++i)
            for (int l = 0; l < d; ++l)
                drift_term += db_vals[static_cast<std::size_t>(l) * d + i][m] *
                              grad[static_cast<std::size_t>(l)] * grad[static_cast<std::size_t>(i)];

        double proj_term = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double dot = 0.0;
                for (int l = 0; l < d; ++l)
                    dot += proj[static_cast<std::size_t>(i) * d + l] *
                           proj[static_cast<std::size_t>(j) * d + l];
                proj_term += q_vals[static_cast<std::size_t>(i) * d + j][m] * dot;
            }

        double cross_term = 0.0;
        for (int k = 0; k < d; ++k) {
            double trace = 0.0;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    trace += dq_vals[static_cast<std::size_t>((k * d + i) * d + j)][m] *
                             hess[static_cast<std::size_t>(i) * d + j];
            cross_term += grad[static_cast<std::size_t>(k)] * trace;
        }

        bf.I_field.values[static_cast<std::size_t>(p)] = drift_term - proj_term + cross_term;
    }
    return bf;
}

VerificationReport bernstein_diagnostic(const OperatorFamily& op, const Trajectory& traj,
                                        double c0, double epsilon, std::optional<double> tol,
                                        double inner_fraction) {
    if (traj.snapshots.size() < 2) throw VerifyError("trajectory needs at least 2 snapshots");

    VerificationReport rep;
    rep.kind = "bernstein";
    rep.c0 = c0;
    rep.epsilon = epsilon;
    rep.inner_fraction = inner_fraction;
    rep.grid_n = traj.grid->points_per_axis();
    rep.grid_R = traj.grid->halfwidth();

    std::vector<BernsteinFields> fields;
    double max_grad2 = 0.0;
    for (std::size_t m = 0; m < traj.snapshots.size(); ++m) {
        fields.push_back(build_bernstein_fields(op, traj, static_cast<int>(m), epsilon,
                                                inner_fraction));
        for (double g2 : fields.back().grad_norm2) max_grad2 = std::max(max_grad2, g2);
    }
    double tol_bern = tol ? *tol : 1e-2 * max_grad2;
    rep.tol = tol_bern;

    const Grid& g = *traj.grid;
    bool first = true;
    bool any_checked = false;
    std::vector<double> x;
    for (std::size_t m = 0; m < fields.size(); ++m) {
        const BernsteinFields& bf = fields[m];
        MarginSample sample;
        sample.time = traj.times[m];
        bool any = false;
        for (std::size_t c = 0; c < bf.checked_nodes.size(); ++c) {
            std::int64_t p = bf.checked_nodes[c];
            double margin =
                bf.I_field.values[static_cast<std::size_t>(p)] - c0 * bf.grad_norm2[c];
            if (!any || margin > sample.margin) {
                any = true;
                sample.margin = margin;
                g.node_coords(p, x);
                sample.witness_x = x;
            }
        }
        if (!any) continue;  // all nodes skipped at this snapshot
        any_checked = true;
        rep.series.push_back(sample);
        if (first || sample.margin > rep.worst_margin) {
            first = false;
            rep.worst_margin = sample.margin;
            rep.witness_t = sample.time;
            rep.witness_x = sample.witness_x;
        }
    }
    if (!any_checked) {
        rep.pass = true;
        rep.worst_margin = 0.0;
        rep.notes.push_back("vacuous pass: every node skipped (|grad u| <= 1e-6)");
        return rep;
    }
    rep.pass = rep.worst_margin <= tol_bern;
    return rep;
}

// ---------------------------------------------------------------------------
// Bakry residual and necessity probes
// ---------------------------------------------------------------------------

double bakry_residual(const OperatorFamily& op, const expr::NodePtr& f, double s,
                      std::span<const double> x, double c) {
    const int d = op.dimension();
    if (expr::depends_on(f, 0)) throw VerifyError("bakry probe function must be spatial");

    std::vector<expr::NodePtr> df(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) df[static_cast<std::size_t>(i)] = expr::differentiate(f, i + 1);

    double grad_norm = 0.0;
    for (int i = 0; i < d; ++i) {
        double v = expr::evaluate(df[static_cast<std::size_t>(i)], s, x);
        grad_norm += v * v;
    }
    grad_norm = std::sqrt(grad_norm);
    if (grad_norm <= 1e-10)
        throw VerifyError("|grad f| vanishes at the probe point; choose a different point");

    // A(s)f as one expression, so its gradient picks up the coefficient
    // derivatives.
    expr::NodePtr Af;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            expr::NodePtr term =
                expr::mul(op.q(i, j), expr::differentiate(df[static_cast<std::size_t>(i)], j + 1));
            Af = Af ? expr::add(Af, term) : term;
        }
        Af = expr::add(Af, expr::mul(op.b(i), df[static_cast<std::size_t>(i)]));
    }
    Af = expr::simplify(Af);

    double lhs = 0.0;
    for (int i = 0; i < d; ++i)
        lhs += expr::evaluate(df[static_cast<std::size_t>(i)], s, x) *
               expr::evaluate(expr::differentiate(Af, i + 1), s, x);

    expr::NodePtr gn = gradient_magnitude_expression(f, d);
    std::vector<expr::NodePtr> dgn(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) dgn[static_cast<std::size_t>(i)] = expr::differentiate(gn, i + 1);
    double A_gn = 0.0;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j)
            A_gn += expr::evaluate(op.q(i, j), s, x) *
                    expr::evaluate(expr::differentiate(dgn[static_cast<std::size_t>(i)], j + 1), s,
                                   x);
        A_gn += expr::evaluate(op.b(i), s, x) *
                expr::evaluate(dgn[static_cast<std::size_t>(i)], s, x);
    }

    double rhs = grad_norm * A_gn + c * grad_norm * grad_norm;
    return lhs - rhs;
}

namespace {

// Richardson extrapolation to 0 of a sequence g(delta_k) with delta_k =
// delta_0 / ratio^k, assuming an expansion in powers of delta^2.
double richardson_even(std::vector<double> vals, double ratio2) {
    std::size_t n = vals.size();
    for (std::size_t r = 1; r < n; ++r) {
        double weight = std::pow(ratio2, static_cast<double>(r));
        for (std::size_t k = 0; k + r < n; ++k)
            vals[k] = (weight * vals[k + 1] - vals[k]) / (weight - 1.0);
    }
    return vals[0];
}

// Limit of residual(y(delta))/norm(delta) as delta -> 0 along both sides.
double directional_limit(const OperatorFamily& op, const expr::NodePtr& f, double s,
                         std::span<const double> x, std::span<const double> direction,
                         const std::function<double(double)>& norm) {
    const int d = op.dimension();
    std::vector<double> y(static_cast<std::size_t>(d));
    std::vector<double> averaged;
    for (int k = 2; k <= 6; ++k) {
        double delta = std::pow(10.0, -k);
        double pair[2];
        for (int sgn = 0; sgn < 2; ++sgn) {
            double dd = sgn == 0 ? delta : -delta;
            for (int a = 0; a < d; ++a)
                y[static_cast<std::size_t>(a)] =
                    x[static_cast<std::size_t>(a)] + dd * direction[static_cast<std::size_t>(a)];
            pair[sgn] = bakry_residual(op, f, s, y, 0.0) / norm(dd);
        }
        averaged.push_back(0.5 * (pair[0] + pair[1]));
    }
    return richardson_even(std::move(averaged), 100.0);
}

// f(y) = cos(y_i - x_i); residual/(sin cos) -> D_i q_ii.
double probe_cos(const OperatorFamily& op, double s, std::span<const double> x, int i /*0-based*/) {
    expr::NodePtr f = expr::call(
        expr::Builtin::Cos,
        {expr::sub(expr::variable(i + 1), expr::constant(x[static_cast<std::size_t>(i)]))});
    std::vector<double> dir(x.size(), 0.0);
    dir[static_cast<std::size_t>(i)] = 1.0;
    return directional_limit(op, f, s, x, dir,
                             [](double delta) { return std::sin(delta) * std::cos(delta); });
}

// f(y) = (sum_l weight_l (y_l - x_l))^2; residual/(4 phi) -> <a, grad <Q a, a>>.
double probe_quadratic(const OperatorFamily& op, double s, std::span<const double> x,
                       std::span<const double> weights) {
    const int d = op.dimension();
    expr::NodePtr lin;
    double w2 = 0.0;
    for (int l = 0; l < d; ++l) {
        double wl = weights[static_cast<std::size_t>(l)];
        w2 += wl * wl;
        if (wl == 0.0) continue;
        expr::NodePtr term = expr::mul(
            expr::constant(wl),
            expr::sub(expr::variable(l + 1), expr::constant(x[static_cast<std::size_t>(l)])));
        lin = lin ? expr::add(lin, term) : term;
    }
    expr::NodePtr f = expr::pow(lin, expr::constant(2.0));
    // Along y = x + delta * a: phi = <a, a> delta.
    double phi_rate = w2;
    return directional_limit(op, f, s, x, weights,
                             [phi_rate](double delta) { return 4.0 * phi_rate * delta; });
}

}  // namespace

std::vector<NecessityPattern> necessity_patterns(const OperatorFamily& op, double s,
                                                 std::span<const double> x) {
    const int d = op.dimension();
    std::vector<NecessityPattern> patterns;

    std::vector<double> A(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        A[static_cast<std::size_t>(i)] = probe_cos(op, s, x, i);
        NecessityPattern p;
        p.family = "cos";
        p.i = p.j = p.k = i + 1;
        p.inferred = A[static_cast<std::size_t>(i)];
        p.tensor_violation = 3.0 * p.inferred;
        p.cross_check = 3.0 * expr::evaluate(op.dq(i, i, i), s, x);
        patterns.push_back(p);
    }

    // L(eps) = A_i + eps V_ij + eps^2 V_ji + eps^3 A_j along a = e_i + eps e_j.
    const double eps_sweep[3] = {0.01, 0.03, 0.1};
    std::vector<std::vector<double>> V(static_cast<std::size_t>(d),
                                       std::vector<double>(static_cast<std::size_t>(d), 0.0));
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            double L[3];
            std::vector<double> w(static_cast<std::size_t>(d), 0.0);
            for (int m = 0; m < 3; ++m) {
                std::fill(w.begin(), w.end(), 0.0);
                w[static_cast<std::size_t>(i)] = 1.0;
                w[static_cast<std::size_t>(j)] = eps_sweep[m];
                L[m] = probe_quadratic(op, s, x, w);
            }
            // Exact cubic in eps; recover the slope at 0 by divided differences.
            double z[4] = {0.0, eps_sweep[0], eps_sweep[1], eps_sweep[2]};
            double cvals[4] = {A[static_cast<std::size_t>(i)], L[0], L[1], L[2]};
            for (int r = 1; r < 4; ++r)
                for (int k = 3; k >= r; --k)
                    cvals[k] = (cvals[k] - cvals[k - 1]) / (z[k] - z[k - r]);
            double slope = cvals[1] - z[1] * cvals[2] + z[1] * z[2] * cvals[3];
            V[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = slope;

            NecessityPattern p;
            p.family = "quadratic-pair";
            p.i = i + 1;
            p.j = j + 1;
            p.k = i + 1;
            p.inferred = slope;  // 2 D_i q_ij + D_j q_ii
            p.tensor_violation = slope;
            p.cross_check =
                2.0 * expr::evaluate(op.dq(i, i, j), s, x) + expr::evaluate(op.dq(j, i, i), s, x);
            patterns.push_back(p);
        }
    }

    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            for (int k = j + 1; k < d; ++k) {
                std::vector<double> w(static_cast<std::size_t>(d), 0.0);
                w[static_cast<std::size_t>(i)] = 1.0;
                w[static_cast<std::size_t>(j)] = 1.0;
                w[static_cast<std::size_t>(k)] = 1.0;
                double L3 = probe_quadratic(op, s, x, w);
                double correction = A[static_cast<std::size_t>(i)] +
                                    A[static_cast<std::size_t>(j)] +
                                    A[static_cast<std::size_t>(k)];
                int trio[3] = {i, j, k};
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b)
                        if (a != b)
                            correction += V[static_cast<std::size_t>(trio[a])]
                                           [static_cast<std::size_t>(trio[b])];
                double T = 0.5 * (L3 - correction);

                NecessityPattern p;
                p.family = "quadratic-triple";
                p.i = i + 1;
                p.j = j + 1;
                p.k = k + 1;
                p.inferred = T;  // D_k q_ij + D_i q_kj + D_j q_ik
                p.tensor_violation = T;
                p.cross_check = expr::evaluate(op.dq(k, i, j), s, x) +
                                expr::evaluate(op.dq(i, k, j), s, x) +
                                expr::evaluate(op.dq(j, i, k), s, x);
                patterns.push_back(p);
            }
    return patterns;
}

ConditionReport necessity_probe(const OperatorFamily& op, double s, std::span<const double> x) {
    std::vector<NecessityPattern> patterns = necessity_patterns(op, s, x);
    ConditionReport rep;
    rep.condition = "necessity-probe";
    rep.witness_t = s;
    rep.witness_x.assign(x.begin(), x.end());
    rep.samples = static_cast<long>(patterns.size());
    rep.tol = 1e-3;
    double worst = 0.0;
    double cross_dev = 0.0;
    for (const auto& p : patterns) {
        worst = std::max(worst, std::fabs(p.tensor_violation));
        cross_dev = std::max(cross_dev, std::fabs(p.tensor_violation - p.cross_check));
    }
    rep.extremal = worst;
    rep.pass = worst <= rep.tol;
    rep.notes.push_back("max deviation from symbolic derivative tensor: " +
                        std::to_string(cross_dev));
    return rep;
}

VerificationReport max_principle_check(const Trajectory& traj, double f_sup) {
    VerificationReport rep;
    rep.kind = "max-principle";
    rep.tol = 1e-6;
    rep.grid_n = traj.grid->points_per_axis();
    rep.grid_R = traj.grid->halfwidth();

    const Grid& g = *traj.grid;
    std::vector<double> x;
    bool first = true;
    for (std::size_t m = 0; m < traj.times.size(); ++m) {
        double sup = traj.sup_norms[m];
        MarginSample sample;
        sample.time = traj.times[m];
        sample.margin = sup - f_sup;
        // witness: first node attaining the sup
        const std::vector<double>& u = traj.snapshots[m].values;
        for (std::int64_t p = 0; p < g.total_nodes(); ++p) {
            if (std::fabs(u[static_cast<std::size_t>(p)]) == sup) {
                g.node_coords(p, x);
                sample.witness_x = x;
                break;
            }
        }
        rep.series.push_back(sample);
        if (first || sample.margin > rep.worst_margin) {
            first = false;
            rep.worst_margin = sample.margin;
            rep.witness_t = sample.time;
            rep.witness_x = sample.witness_x;
        }
    }
    rep.pass = rep.worst_margin <= rep.tol;
    return rep;
}

}  // namespace evograd
