#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evograd/expr.hpp"
#include "evograd/sym_eigen.hpp"

namespace evograd {

// Lower bound eta used in the dissipativity quadratic form: either the exact
// smallest eigenvalue of Q(t,x) or a user-supplied expression from the
// operator document.
enum class EtaMode { LambdaMin, UserExpression };

std::string_view to_string(EtaMode mode);

// Finite working window (t_lo, t_hi] inside the operator's time halfline.
struct TimeInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double t) const { return lo < t && t <= hi; }
};

class SpecError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Parsed plain-text operator document.  Sections: [meta] d, t_lo, t_hi;
// [params] name=<expression in t>; [diffusion] qij=<expr> (upper triangle,
// 1-based), optional eta=<expr>; [drift] bi=<expr>; optional [lyapunov]
// phi=<expr>, gamma=<real>.
struct OperatorSpec {
    int d = 0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    std::vector<std::pair<std::string, std::string>> params;  // bound in order
    std::map<std::string, std::string> diffusion;             // "q11" -> expr, optional "eta"
    std::map<std::string, std::string> drift;                 // "b1" -> expr
    std::optional<std::string> lyapunov_phi;
    std::optional<double> lyapunov_gamma;
    std::string source_text;
};

OperatorSpec parse_operator_spec(std::string_view text);

// All coefficient tensors of the operator at one point.
struct PointEvaluation {
    SymMatrix Q;             // d x d
    std::vector<double> b;   // d
    std::vector<double> dq;  // d^3, [k][i][j] = D_k q_ij
    std::vector<double> db;  // d^2, [j][i] = D_j b_i
    double eta = 0.0;        // smallest eigenvalue of Q

    double dq_at(int k, int i, int j, int d) const {
        return dq[static_cast<std::size_t>((k * d + i) * d + j)];
    }
    double db_at(int j, int i, int d) const { return db[static_cast<std::size_t>(j * d + i)]; }
};

// The pair (Q, b) with symbolic first-order spatial derivatives precomputed.
// Immutable after construction.
class OperatorFamily {
public:
    int dimension() const { return d_; }
    TimeInterval time_interval() const { return interval_; }

    const expr::NodePtr& q(int i, int j) const {
        return q_[static_cast<std::size_t>(i) * d_ + j];
    }
    const expr::NodePtr& b(int i) const { return b_[static_cast<std::size_t>(i)]; }
    // D_k q_ij
    const expr::NodePtr& dq(int k, int i, int j) const {
        return dq_[static_cast<std::size_t>((k * d_ + i) * d_ + j)];
    }
    // D_j b_i
    const expr::NodePtr& db(int j, int i) const {
        return db_[static_cast<std::size_t>(j) * d_ + i];
    }

    const std::optional<expr::NodePtr>& eta_expression() const { return eta_; }
    const std::optional<expr::NodePtr>& lyapunov_phi() const { return phi_; }
    std::optional<double> lyapunov_gamma() const { return gamma_; }
    const std::string& source_text() const { return source_; }

    // True when no coefficient (or derivative) depends on t.
    bool time_independent() const { return time_independent_; }

    PointEvaluation eval_at(double t, std::span<const double> x) const;

    friend OperatorFamily build_operator(const OperatorSpec& spec);

private:
    int d_ = 0;
    TimeInterval interval_;
    std::vector<expr::NodePtr> q_;   // d^2, mirrored
    std::vector<expr::NodePtr> b_;   // d
    std::vector<expr::NodePtr> dq_;  // d^3
    std::vector<expr::NodePtr> db_;  // d^2
    std::optional<expr::NodePtr> eta_;
    std::optional<expr::NodePtr> phi_;
    std::optional<double> gamma_;
    std::string source_;
    bool time_independent_ = true;
};

OperatorFamily build_operator(const OperatorSpec& spec);

OperatorFamily build_operator_from_text(std::string_view text);

// Action of the operator on a fixed spatial expression, with the first and
// second derivatives of phi precomputed symbolically.
class GeneratorAction {
public:
    GeneratorAction(const OperatorFamily& op, expr::NodePtr phi);

    double operator()(double t, std::span<const double> x) const;

    const expr::NodePtr& phi() const { return phi_; }

private:
    const OperatorFamily& op_;
    expr::NodePtr phi_;
    std::vector<expr::NodePtr> dphi_;    // d
    std::vector<expr::NodePtr> d2phi_;   // d^2
};

// Tr(Q D^2 phi) + <b, grad phi> at (t, x); phi must be spatial (no t).
double apply_generator(const OperatorFamily& op, const expr::NodePtr& phi, double t,
                       std::span<const double> x);

}  // namespace evograd
