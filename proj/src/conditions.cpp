#include "evograd/conditions.hpp"

#include <cmath>
#include <functional>
#include <random>

namespace evograd {

SampleRegion SampleRegion::defaults(int d, double box_halfwidth, double t_lo, double t_hi) {
    SampleRegion r;
    r.t_lo = t_lo;
    r.t_hi = t_hi;
    r.box_lo = -box_halfwidth;
    r.box_hi = box_halfwidth;
    r.grid_counts.assign(static_cast<std::size_t>(d), 11);
    return r;
}

namespace {

// Bit-reproducible uniform double in [0,1); independent of the library's
// distribution implementation.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Enumerates the tensor grid followed by the random samples, calling
// visit(t, x) for each.  Order is fixed; reductions stay deterministic by
// comparing (value, lexicographic point).
void for_each_sample(const SampleRegion& region, int d,
                     const std::function<void(double, std::span<const double>)>& visit) {
    if (static_cast<int>(region.grid_counts.size()) != d)
        throw ConditionError("grid_counts size does not match dimension");
    for (int c : region.grid_counts)
        if (c < 2) throw ConditionError("grid_counts entries must be >= 2");
    if (region.time_count < 2) throw ConditionError("time_count must be >= 2");
    if (!(region.box_lo < region.box_hi)) throw ConditionError("box_lo must be < box_hi");

    std::vector<double> x(static_cast<std::size_t>(d), 0.0);
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    for (int ti = 0; ti < region.time_count; ++ti) {
        double t = region.t_lo +
                   (region.t_hi - region.t_lo) * ti / static_cast<double>(region.time_count - 1);
        std::fill(idx.begin(), idx.end(), 0);
        for (;;) {
            for (int a = 0; a < d; ++a) {
                int n = region.grid_counts[static_cast<std::size_t>(a)];
                x[static_cast<std::size_t>(a)] =
                    region.box_lo +
                    (region.box_hi - region.box_lo) * idx[static_cast<std::size_t>(a)] /
                        static_cast<double>(n - 1);
            }
            visit(t, x);
            int a = d - 1;
            while (a >= 0 && ++idx[static_cast<std::size_t>(a)] >=
                                 region.grid_counts[static_cast<std::size_t>(a)]) {
                idx[static_cast<std::size_t>(a)] = 0;
                --a;
            }
            if (a < 0) break;
        }
    }
    std::mt19937_64 rng(region.seed);
    for (int r = 0; r < region.random_count; ++r) {
        double t = region.t_lo + (region.t_hi - region.t_lo) * uniform01(rng);
        for (int a = 0; a < d; ++a)
            x[static_cast<std::size_t>(a)] =
                region.box_lo + (region.box_hi - region.box_lo) * uniform01(rng);
        visit(t, x);
    }
}

bool lex_less(double ta, std::span<const double> xa, double tb, std::span<const double> xb) {
    if (ta != tb) return ta < tb;
    for (std::size_t i = 0; i < xa.size(); ++i)
        if (xa[i] != xb[i]) return xa[i] < xb[i];
    return false;
}

// Deterministic extremal tracker; ties broken by the lexicographically
// smallest (t, x).
class ExtremalTracker {
public:
    explicit ExtremalTracker(bool maximize) : maximize_(maximize) {}

    void offer(double value, double t, std::span<const double> x) {
        ++count_;
        bool better;
        if (!have_) {
            better = true;
        } else if (value != best_) {
            better = maximize_ ? value > best_ : value < best_;
        } else {
            better = lex_less(t, x, best_t_, best_x_);
        }
        if (better) {
            have_ = true;
            best_ = value;
            best_t_ = t;
            best_x_.assign(x.begin(), x.end());
        }
    }

    double value() const { return best_; }
    double witness_t() const { return best_t_; }
    const std::vector<double>& witness_x() const { return best_x_; }
    long count() const { return count_; }

private:
    bool maximize_;
    bool have_ = false;
    double best_ = 0.0;
    double best_t_ = 0.0;
    std::vector<double> best_x_;
    long count_ = 0;
};

ConditionReport make_report(std::string name, const ExtremalTracker& tracker,
                            const SampleRegion& region) {
    ConditionReport rep;
    rep.condition = std::move(name);
    rep.extremal = tracker.value();
    rep.witness_t = tracker.witness_t();
    rep.witness_x = tracker.witness_x();
    rep.samples = tracker.count();
    rep.seed = region.seed;
    return rep;
}

}  // namespace

ConditionReport check_ellipticity(const OperatorFamily& op, const SampleRegion& region) {
    ExtremalTracker tracker(/*maximize=*/false);
    const int d = op.dimension();
    SymMatrix Q(d);
    for_each_sample(region, d, [&](double t, std::span<const double> x) {
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) Q.set(i, j, expr::evaluate(op.q(i, j), t, x));
        tracker.offer(smallest_eigenvalue(Q), t, x);
    });
    ConditionReport rep = make_report("ellipticity", tracker, region);
    rep.tol = 0.0;
    rep.pass = rep.extremal > 0.0;
    return rep;
}

double algebraic_residual(const OperatorFamily& op, double t, std::span<const double> x) {
    const int d = op.dimension();
    double worst = 0.0;
    for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double v = expr::evaluate(op.dq(k, i, j), t, x) +
                           expr::evaluate(op.dq(i, k, j), t, x) +
                           expr::evaluate(op.dq(j, i, k), t, x);
                worst = std::max(worst, std::fabs(v));
            }
    return worst;
}

ConditionReport check_algebraic(const OperatorFamily& op, const SampleRegion& region, double tol) {
    ExtremalTracker tracker(/*maximize=*/true);
    for_each_sample(region, op.dimension(), [&](double t, std::span<const double> x) {
        tracker.offer(algebraic_residual(op, t, x), t, x);
    });
    ConditionReport rep = make_report("algebraic", tracker, region);
    rep.tol = tol;
    rep.pass = rep.extremal <= tol;
    return rep;
}

SymMatrix dissipativity_matrix(const OperatorFamily& op, double t, std::span<const double> x,
                               EtaMode eta_mode) {
    const int d = op.dimension();
    double eta;
    if (eta_mode == EtaMode::LambdaMin) {
        SymMatrix Q(d);
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) Q.set(i, j, expr::evaluate(op.q(i, j), t, x));
        eta = smallest_eigenvalue(Q);
    } else {
        if (!op.eta_expression())
            throw ConditionError("eta-mode expr requires an eta entry in the operator document");
        eta = expr::evaluate(*op.eta_expression(), t, x);
    }
    if (!(eta > 0.0)) {
        std::string pt = "t=" + std::to_string(t);
        for (std::size_t i = 0; i < x.size(); ++i)
            pt += ", x" + std::to_string(i + 1) + "=" + std::to_string(x[i]);
        throw ConditionError("degenerate eta = " + std::to_string(eta) + " at (" + pt + ")");
    }

    std::vector<double> dq(static_cast<std::size_t>(d) * d * d);
    for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                dq[static_cast<std::size_t>((k * d + i) * d + j)] =
                    expr::evaluate(op.dq(k, i, j), t, x);

    SymMatrix M(d);
    for (int k = 0; k < d; ++k)
        for (int l = k; l < d; ++l) {
            double s = 0.0;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    s += dq[static_cast<std::size_t>((k * d + i) * d + j)] *
                         dq[static_cast<std::size_t>((l * d + i) * d + j)];
            s /= 2.0 * eta;
            double jac = 0.5 * (expr::evaluate(op.db(l, k), t, x) +
                                expr::evaluate(op.db(k, l), t, x));
            M.set(k, l, s + jac);
        }
    return M;
}

ConditionReport estimate_c0(const OperatorFamily& op, const SampleRegion& region,
                            EtaMode eta_mode) {
    ExtremalTracker tracker(/*maximize=*/true);
    for_each_sample(region, op.dimension(), [&](double t, std::span<const double> x) {
        tracker.offer(largest_eigenvalue(dissipativity_matrix(op, t, x, eta_mode)), t, x);
    });
    ConditionReport rep = make_report("dissipativity-c0", tracker, region);
    rep.eta_mode = eta_mode;
    rep.tol = 0.0;
    rep.pass = std::isfinite(rep.extremal);
    return rep;
}

ConditionReport check_lyapunov(const OperatorFamily& op, const expr::NodePtr& phi, double gamma,
                               const SampleRegion& region) {
    GeneratorAction action(op, phi);
    ExtremalTracker tracker(/*maximize=*/true);
    for_each_sample(region, op.dimension(), [&](double t, std::span<const double> x) {
        double phi_val = expr::evaluate(phi, t, x);
        if (!(phi_val > 0.0)) {
            std::string pt;
            for (std::size_t i = 0; i < x.size(); ++i)
                pt += (i ? "," : "") + std::to_string(x[i]);
            throw ConditionError("lyapunov phi is not positive at x=(" + pt + ")");
        }
        tracker.offer(action(t, x) / phi_val, t, x);
    });
    ConditionReport rep = make_report("lyapunov", tracker, region);
    rep.tol = gamma;
    rep.pass = rep.extremal <= gamma;
    rep.notes.push_back("radial unboundedness of phi assumed, not verified");
    return rep;
}

}  // namespace evograd
