#include "evograd/operator_family.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace evograd {

std::string_view to_string(EtaMode mode) {
    return mode == EtaMode::LambdaMin ? "lambda-min" : "expr";
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_real(const std::string& value, const std::string& key, int line_no) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw SpecError("line " + std::to_string(line_no) + ": " + key +
                        " expects a real number, got '" + value + "'");
    return v;
}

}  // namespace

OperatorSpec parse_operator_spec(std::string_view text) {
    OperatorSpec spec;
    spec.source_text = std::string(text);
    std::istringstream in{spec.source_text};
    std::string line;
    std::string section;
    int line_no = 0;
    bool have_d = false, have_tlo = false, have_thi = false;

    while (std::getline(in, line)) {
        ++line_no;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw SpecError("line " + std::to_string(line_no) + ": malformed section header");
            section = s.substr(1, s.size() - 2);
            if (section != "meta" && section != "params" && section != "diffusion" &&
                section != "drift" && section != "lyapunov")
                throw SpecError("line " + std::to_string(line_no) + ": unknown section [" +
                                section + "]");
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw SpecError("line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(std::string_view(s).substr(0, eq));
        std::string value = trim(std::string_view(s).substr(eq + 1));
        if (section.empty())
            throw SpecError("line " + std::to_string(line_no) + ": entry outside any section");

        if (section == "meta") {
            if (key == "d") {
                spec.d = static_cast<int>(parse_real(value, key, line_no));
                have_d = true;
            } else if (key == "t_lo") {
                spec.t_lo = parse_real(value, key, line_no);
                have_tlo = true;
            } else if (key == "t_hi") {
                spec.t_hi = parse_real(value, key, line_no);
                have_thi = true;
            } else {
                throw SpecError("line " + std::to_string(line_no) + ": unknown meta key '" + key +
                                "'");
            }
        } else if (section == "params") {
            spec.params.emplace_back(key, value);
        } else if (section == "diffusion") {
            spec.diffusion[key] = value;
        } else if (section == "drift") {
            spec.drift[key] = value;
        } else {
            if (key == "phi")
                spec.lyapunov_phi = value;
            else if (key == "gamma")
                spec.lyapunov_gamma = parse_real(value, key, line_no);
            else
                throw SpecError("line " + std::to_string(line_no) + ": unknown lyapunov key '" +
                                key + "'");
        }
    }
    if (!have_d || !have_tlo || !have_thi)
        throw SpecError("[meta] must define d, t_lo and t_hi");
    if (spec.d < 1) throw SpecError("dimension must be >= 1");
    if (!(spec.t_lo < spec.t_hi)) throw SpecError("t_lo must be < t_hi");
    return spec;
}

namespace {

expr::NodePtr parse_entry(const std::string& text, int d, const expr::ParamMap& params,
                          const std::string& where) {
    try {
        return expr::parse(text, d, params);
    } catch (const expr::ExprError& e) {
        throw SpecError(where + ": " + e.what());
    }
}

}  // namespace

OperatorFamily build_operator(const OperatorSpec& spec) {
    OperatorFamily op;
    const int d = spec.d;
    op.d_ = d;
    op.interval_ = {spec.t_lo, spec.t_hi};
    op.source_ = spec.source_text;

    expr::ParamMap params;
    for (const auto& [name, text] : spec.params)
        params[name] = parse_entry(text, d, params, "param " + name);

    op.q_.resize(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            std::string key = "q" + std::to_string(i + 1) + std::to_string(j + 1);
            auto it = spec.diffusion.find(key);
            if (it == spec.diffusion.end())
                throw SpecError("missing diffusion entry " + key);
            expr::NodePtr e = expr::simplify(parse_entry(it->second, d, params, key));
            op.q_[static_cast<std::size_t>(i) * d + j] = e;
            op.q_[static_cast<std::size_t>(j) * d + i] = e;
            if (i != j) {
                std::string mirrored = "q" + std::to_string(j + 1) + std::to_string(i + 1);
                auto mit = spec.diffusion.find(mirrored);
                if (mit != spec.diffusion.end()) {
                    expr::NodePtr m = expr::simplify(parse_entry(mit->second, d, params, mirrored));
                    if (!expr::structurally_equal(e, m))
                        throw SpecError(key + " and " + mirrored +
                                        " are both given but differ; Q must be symmetric");
                }
            }
        }
    }

    op.b_.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        std::string key = "b" + std::to_string(i + 1);
        auto it = spec.drift.find(key);
        if (it == spec.drift.end()) throw SpecError("missing drift entry " + key);
        op.b_[static_cast<std::size_t>(i)] = expr::simplify(parse_entry(it->second, d, params, key));
    }

    op.dq_.resize(static_cast<std::size_t>(d) * d * d);
    for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                op.dq_[static_cast<std::size_t>((k * d + i) * d + j)] =
                    expr::differentiate(op.q(i, j), k + 1);

    op.db_.resize(static_cast<std::size_t>(d) * d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i)
            op.db_[static_cast<std::size_t>(j) * d + i] = expr::differentiate(op.b(i), j + 1);

    if (auto it = spec.diffusion.find("eta"); it != spec.diffusion.end())
        op.eta_ = expr::simplify(parse_entry(it->second, d, params, "eta"));
    if (spec.lyapunov_phi)
        op.phi_ = expr::simplify(parse_entry(*spec.lyapunov_phi, d, params, "phi"));
    op.gamma_ = spec.lyapunov_gamma;

    bool tdep = false;
    for (const auto& e : op.q_) tdep = tdep || expr::depends_on(e, 0);
    for (const auto& e : op.b_) tdep = tdep || expr::depends_on(e, 0);
    op.time_independent_ = !tdep;
    return op;
}

OperatorFamily build_operator_from_text(std::string_view text) {
    return build_operator(parse_operator_spec(text));
}

PointEvaluation OperatorFamily::eval_at(double t, std::span<const double> x) const {
    if (!interval_.contains(t))
        throw SpecError("t = " + std::to_string(t) + " outside the operator interval (" +
                        std::to_string(interval_.lo) + ", " + std::to_string(interval_.hi) + "]");
    PointEvaluation pe;
    pe.Q = SymMatrix(d_);
    for (int i = 0; i < d_; ++i)
        for (int j = i; j < d_; ++j) pe.Q.set(i, j, expr::evaluate(q(i, j), t, x));
    pe.b.resize(static_cast<std::size_t>(d_));
    for (int i = 0; i < d_; ++i) pe.b[static_cast<std::size_t>(i)] = expr::evaluate(b(i), t, x);
    pe.dq.resize(static_cast<std::size_t>(d_) * d_ * d_);
    for (int k = 0; k < d_; ++k)
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j)
                pe.dq[static_cast<std::size_t>((k * d_ + i) * d_ + j)] =
                    expr::evaluate(dq(k, i, j), t, x);
    pe.db.resize(static_cast<std::size_t>(d_) * d_);
    for (int j = 0; j < d_; ++j)
        for (int i = 0; i < d_; ++i)
            pe.db[static_cast<std::size_t>(j) * d_ + i] = expr::evaluate(db(j, i), t, x);
    pe.eta = smallest_eigenvalue(pe.Q);
    return pe;
}

GeneratorAction::GeneratorAction(const OperatorFamily& op, expr::NodePtr phi)
    : op_(op), phi_(std::move(phi)) {
    if (expr::depends_on(phi_, 0))
        throw SpecError("generator argument must be spatial (no t dependence): " +
                        expr::to_string(phi_));
    const int d = op_.dimension();
    dphi_.resize(static_cast<std::size_t>(d));
    d2phi_.resize(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i) dphi_[static_cast<std::size_t>(i)] = expr::differentiate(phi_, i + 1);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            d2phi_[static_cast<std::size_t>(i) * d + j] =
                expr::differentiate(dphi_[static_cast<std::size_t>(i)], j + 1);
}

double GeneratorAction::operator()(double t, std::span<const double> x) const {
    const int d = op_.dimension();
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j)
            s += expr::evaluate(op_.q(i, j), t, x) *
                 expr::evaluate(d2phi_[static_cast<std::size_t>(i) * d + j], t, x);
        s += expr::evaluate(op_.b(i), t, x) *
             expr::evaluate(dphi_[static_cast<std::size_t>(i)], t, x);
    }
    return s;
}

double apply_generator(const OperatorFamily& op, const expr::NodePtr& phi, double t,
                       std::span<const double> x) {
    return GeneratorAction(op, phi)(t, x);
}

}  // namespace evograd
