#include "evograd/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>

namespace evograd::expr {

namespace {

std::string offset_message(const std::string& what, std::size_t offset) {
    return what + " (at byte " + std::to_string(offset) + ")";
}

}  // namespace

ParseError::ParseError(const std::string& what, std::size_t offset)
    : ExprError(offset_message(what, offset)), offset_(offset) {}

DomainError::DomainError(const std::string& what, NodePtr culprit)
    : ExprError(what + " in '" + to_string(culprit) + "'"), culprit_(std::move(culprit)) {}

NodePtr constant(double v) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Constant;
    n->value = v;
    return n;
}

NodePtr variable(int var) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Variable;
    n->var = var;
    return n;
}

NodePtr negate(NodePtr a) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Unary;
    n->uop = UnaryOp::Negate;
    n->args.push_back(std::move(a));
    return n;
}

NodePtr binary(BinaryOp op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Binary;
    n->bop = op;
    n->args.push_back(std::move(a));
    n->args.push_back(std::move(b));
    return n;
}

NodePtr add(NodePtr a, NodePtr b) { return binary(BinaryOp::Add, std::move(a), std::move(b)); }
NodePtr sub(NodePtr a, NodePtr b) { return binary(BinaryOp::Sub, std::move(a), std::move(b)); }
NodePtr mul(NodePtr a, NodePtr b) { return binary(BinaryOp::Mul, std::move(a), std::move(b)); }
NodePtr div(NodePtr a, NodePtr b) { return binary(BinaryOp::Div, std::move(a), std::move(b)); }
NodePtr pow(NodePtr a, NodePtr b) { return binary(BinaryOp::Pow, std::move(a), std::move(b)); }

NodePtr call(Builtin fn, std::vector<NodePtr> args) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Call;
    n->fn = fn;
    n->args = std::move(args);
    return n;
}

std::string variable_name(int var) {
    if (var == 0) return "t";
    return "x" + std::to_string(var);
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

struct BuiltinInfo {
    std::string_view name;
    Builtin fn;
    int arity;  // -1: special-cased (norm2)
};

constexpr BuiltinInfo kBuiltins[] = {
    {"sin", Builtin::Sin, 1},   {"cos", Builtin::Cos, 1},   {"exp", Builtin::Exp, 1},
    {"log", Builtin::Log, 1},   {"sqrt", Builtin::Sqrt, 1}, {"abs", Builtin::Abs, 1},
    {"tanh", Builtin::Tanh, 1}, {"sign", Builtin::Sign, 1}, {"min", Builtin::Min, 2},
    {"max", Builtin::Max, 2},   {"norm2", Builtin::Norm2, -1},
};

const BuiltinInfo* find_builtin(std::string_view name) {
    for (const auto& b : kBuiltins)
        if (b.name == name) return &b;
    return nullptr;
}

class Parser {
public:
    Parser(std::string_view src, int dimension, const ParamMap& params)
        : src_(src), d_(dimension), params_(params) {}

    NodePtr run() {
        if (d_ < 1) throw ParseError("dimension must be >= 1", 0);
        NodePtr e = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    std::string_view src_;
    int d_;
    const ParamMap& params_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    NodePtr parse_expr() {
        NodePtr e = parse_term();
        for (;;) {
            if (accept('+'))
                e = add(e, parse_term());
            else if (accept('-'))
                e = sub(e, parse_term());
            else
                return e;
        }
    }

    NodePtr parse_term() {
        NodePtr e = parse_factor();
        for (;;) {
            if (accept('*'))
                e = mul(e, parse_factor());
            else if (accept('/'))
                e = div(e, parse_factor());
            else
                return e;
        }
    }

    NodePtr parse_factor() {
        if (accept('-')) {
            NodePtr r = parse_factor();
            if (r->kind == NodeKind::Constant) return constant(-r->value);
            return negate(r);
        }
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        if (accept('^')) return pow(base, parse_factor());
        return base;
    }

    NodePtr parse_atom() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
        char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        throw ParseError("unexpected character", pos_);
    }

    NodePtr parse_number() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
            ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t mark = pos_++;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            } else {
                pos_ = mark;  // 'e' was not an exponent
            }
        }
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
        if (ec != std::errc() || ptr != src_.data() + pos_)
            throw ParseError("malformed number", start);
        return constant(v);
    }

    NodePtr parse_ident() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        std::string_view name = src_.substr(start, pos_ - start);

        if (peek() == '(') return parse_call(name, start);

        if (name == "t") return variable(0);
        if (auto idx = spatial_index(name)) {
            if (*idx > d_)
                throw ParseError("variable " + std::string(name) + " exceeds dimension " +
                                     std::to_string(d_),
                                 start);
            return variable(*idx);
        }
        if (auto it = params_.find(name); it != params_.end()) return it->second;
        throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    }

    NodePtr parse_call(std::string_view name, std::size_t start) {
        expect('(');
        if (name == "norm2") {
            // norm2 takes the full spatial vector, written norm2(x).
            skip_ws();
            std::size_t astart = pos_;
            while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            if (src_.substr(astart, pos_ - astart) != "x")
                throw ParseError("norm2 expects the spatial vector: norm2(x)", astart);
            expect(')');
            return call(Builtin::Norm2, {});
        }
        std::vector<NodePtr> args;
        args.push_back(parse_expr());
        while (accept(',')) args.push_back(parse_expr());
        expect(')');

        if (name == "pow") {
            if (args.size() != 2) throw ParseError("pow expects 2 arguments", start);
            return pow(args[0], args[1]);
        }
        if (const BuiltinInfo* b = find_builtin(name)) {
            if (static_cast<int>(args.size()) != b->arity)
                throw ParseError(std::string(name) + " expects " + std::to_string(b->arity) +
                                     " argument(s)",
                                 start);
            return call(b->fn, std::move(args));
        }
        if (auto it = params_.find(name); it != params_.end()) {
            // A parameter applied to t, e.g. psi(t), stands for its bound expression.
            if (args.size() == 1 && args[0]->kind == NodeKind::Variable && args[0]->var == 0)
                return it->second;
            throw ParseError("parameter '" + std::string(name) + "' may only be applied to t",
                             start);
        }
        throw ParseError("unknown function '" + std::string(name) + "'", start);
    }

    std::optional<int> spatial_index(std::string_view name) const {
        if (name.size() < 2 || name[0] != 'x') return std::nullopt;
        int idx = 0;
        auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
        if (ec != std::errc() || ptr != name.data() + name.size() || idx < 1) return std::nullopt;
        return idx;
    }
};

}  // namespace

NodePtr parse(std::string_view source, int dimension, const ParamMap& params) {
    return Parser(source, dimension, params).run();
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

double require_finite(double v, const NodePtr& node) {
    if (!std::isfinite(v)) throw DomainError("non-finite result", node);
    return v;
}

}  // namespace

double evaluate(const NodePtr& node, double t, std::span<const double> x) {
    switch (node->kind) {
        case NodeKind::Constant:
            return node->value;
        case NodeKind::Variable:
            if (node->var == 0) return t;
            if (node->var > static_cast<int>(x.size()))
                throw DomainError("variable index exceeds point dimension", node);
            return x[static_cast<std::size_t>(node->var - 1)];
        case NodeKind::Unary:
            return -evaluate(node->args[0], t, x);
        case NodeKind::Binary: {
            double a = evaluate(node->args[0], t, x);
            double b = evaluate(node->args[1], t, x);
            switch (node->bop) {
                case BinaryOp::Add: return require_finite(a + b, node);
                case BinaryOp::Sub: return require_finite(a - b, node);
                case BinaryOp::Mul: return require_finite(a * b, node);
                case BinaryOp::Div:
                    if (b == 0.0) throw DomainError("division by zero", node);
                    return require_finite(a / b, node);
                case BinaryOp::Pow: {
                    if (a < 0.0 && b != std::floor(b))
                        throw DomainError("negative base with non-integer exponent", node);
                    if (a == 0.0 && b < 0.0) throw DomainError("zero base with negative exponent", node);
                    return require_finite(std::pow(a, b), node);
                }
            }
            break;
        }
        case NodeKind::Call: {
            switch (node->fn) {
                case Builtin::Norm2: {
                    double s = 0.0;
                    for (double xi : x) s += xi * xi;
                    return s;
                }
                case Builtin::Min: {
                    double a = evaluate(node->args[0], t, x);
                    double b = evaluate(node->args[1], t, x);
                    return std::min(a, b);
                }
                case Builtin::Max: {
                    double a = evaluate(node->args[0], t, x);
                    double b = evaluate(node->args[1], t, x);
                    return std::max(a, b);
                }
                default: break;
            }
            double a = evaluate(node->args[0], t, x);
            switch (node->fn) {
                case Builtin::Sin: return std::sin(a);
                case Builtin::Cos: return std::cos(a);
                case Builtin::Exp: return require_finite(std::exp(a), node);
                case Builtin::Log:
                    if (a <= 0.0) throw DomainError("log of non-positive value", node);
                    return std::log(a);
                case Builtin::Sqrt:
                    if (a < 0.0) throw DomainError("sqrt of negative value", node);
                    return std::sqrt(a);
                case Builtin::Abs: return std::fabs(a);
                case Builtin::Tanh: return std::tanh(a);
                case Builtin::Sign: return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
                default: break;
            }
            break;
        }
    }
    throw ExprError("malformed expression node");
}

// ---------------------------------------------------------------------------
// Differentiation
// ---------------------------------------------------------------------------

namespace {

NodePtr diff_raw(const NodePtr& node, int var);

NodePtr diff_call(const NodePtr& node, int var) {
    if (node->fn == Builtin::Norm2) {
        if (var == 0) return constant(0.0);
        return mul(constant(2.0), variable(var));
    }
    if (node->fn == Builtin::Min || node->fn == Builtin::Max) {
        // min(a,b) = (a + b -/+ |a-b|)/2 with the sign convention of abs.
        const NodePtr& a = node->args[0];
        const NodePtr& b = node->args[1];
        NodePtr da = diff_raw(a, var);
        NodePtr db = diff_raw(b, var);
        NodePtr s = mul(call(Builtin::Sign, {sub(a, b)}), sub(da, db));
        NodePtr numer = node->fn == Builtin::Min ? sub(add(da, db), s) : add(add(da, db), s);
        return div(numer, constant(2.0));
    }
    const NodePtr& a = node->args[0];
    NodePtr da = diff_raw(a, var);
    switch (node->fn) {
        case Builtin::Sin: return mul(call(Builtin::Cos, {a}), da);
        case Builtin::Cos: return negate(mul(call(Builtin::Sin, {a}), da));
        case Builtin::Exp: return mul(call(Builtin::Exp, {a}), da);
        case Builtin::Log: return div(da, a);
        case Builtin::Sqrt: return div(da, mul(constant(2.0), call(Builtin::Sqrt, {a})));
        case Builtin::Abs: return mul(call(Builtin::Sign, {a}), da);
        case Builtin::Tanh:
            return mul(sub(constant(1.0), pow(call(Builtin::Tanh, {a}), constant(2.0))), da);
        case Builtin::Sign: return constant(0.0);
        default: break;
    }
    throw ExprError("malformed call node");
}

NodePtr diff_raw(const NodePtr& node, int var) {
    switch (node->kind) {
        case NodeKind::Constant:
            return constant(0.0);
        case NodeKind::Variable:
            return constant(node->var == var ? 1.0 : 0.0);
        case NodeKind::Unary:
            return negate(diff_raw(node->args[0], var));
        case NodeKind::Binary: {
            const NodePtr& a = node->args[0];
            const NodePtr& b = node->args[1];
            switch (node->bop) {
                case BinaryOp::Add: return add(diff_raw(a, var), diff_raw(b, var));
                case BinaryOp::Sub: return sub(diff_raw(a, var), diff_raw(b, var));
                case BinaryOp::Mul:
                    return add(mul(diff_raw(a, var), b), mul(a, diff_raw(b, var)));
                case BinaryOp::Div:
                    return div(sub(mul(diff_raw(a, var), b), mul(a, diff_raw(b, var))),
                               pow(b, constant(2.0)));
                case BinaryOp::Pow: {
                    if (b->kind == NodeKind::Constant) {
                        double c = b->value;
                        if (c == 0.0) return constant(0.0);
                        return mul(mul(constant(c), pow(a, constant(c - 1.0))), diff_raw(a, var));
                    }
                    // d(a^b) = a^b * (b' log a + b a'/a)
                    return mul(pow(a, b),
                               add(mul(diff_raw(b, var), call(Builtin::Log, {a})),
                                   div(mul(b, diff_raw(a, var)), a)));
                }
            }
            break;
        }
        case NodeKind::Call:
            return diff_call(node, var);
    }
    throw ExprError("malformed expression node");
}

}  // namespace

NodePtr differentiate(const NodePtr& node, int var) { return simplify(diff_raw(node, var)); }

// ---------------------------------------------------------------------------
// Simplification
// ---------------------------------------------------------------------------

namespace {

bool is_const(const NodePtr& n) { return n->kind == NodeKind::Constant; }

}  // namespace

bool is_constant(const NodePtr& node, double v) {
    return node->kind == NodeKind::Constant && node->value == v;
}

NodePtr simplify(const NodePtr& node) {
    if (node->kind == NodeKind::Constant || node->kind == NodeKind::Variable) return node;

    std::vector<NodePtr> args;
    args.reserve(node->args.size());
    bool all_const = true;
    for (const auto& a : node->args) {
        args.push_back(simplify(a));
        all_const = all_const && is_const(args.back());
    }

    auto rebuilt = [&]() -> NodePtr {
        auto n = std::make_shared<Node>(*node);
        n->args = args;
        return n;
    };

    if (all_const && !(node->kind == NodeKind::Call && node->fn == Builtin::Norm2)) {
        try {
            double v = evaluate(rebuilt(), 0.0, {});
            if (std::isfinite(v)) return constant(v);
        } catch (const DomainError&) {
            // leave unfolded; the error surfaces at evaluation time
        }
    }

    if (node->kind == NodeKind::Unary) {
        if (args[0]->kind == NodeKind::Unary) return args[0]->args[0];  // -(-e) = e
        return rebuilt();
    }

    if (node->kind == NodeKind::Binary) {
        const NodePtr& a = args[0];
        const NodePtr& b = args[1];
        switch (node->bop) {
            case BinaryOp::Add:
                if (is_constant(a, 0.0)) return b;
                if (is_constant(b, 0.0)) return a;
                break;
            case BinaryOp::Sub:
                if (is_constant(b, 0.0)) return a;
                if (is_constant(a, 0.0)) return simplify(negate(b));
                break;
            case BinaryOp::Mul:
                if (is_constant(a, 0.0) || is_constant(b, 0.0)) return constant(0.0);
                if (is_constant(a, 1.0)) return b;
                if (is_constant(b, 1.0)) return a;
                break;
            case BinaryOp::Div:
                if (is_constant(b, 1.0)) return a;
                if (is_constant(a, 0.0)) return constant(0.0);
                break;
            case BinaryOp::Pow:
                if (is_constant(b, 1.0)) return a;
                if (is_constant(b, 0.0)) return constant(1.0);
                if (is_constant(a, 1.0)) return constant(1.0);
                break;
        }
    }
    return rebuilt();
}

// ---------------------------------------------------------------------------
// Printing and structural equality
// ---------------------------------------------------------------------------

namespace {

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

// Precedence levels: Add/Sub 1, Mul/Div 2, unary minus 3, Pow 4, atoms 5.
int precedence(const NodePtr& n) {
    switch (n->kind) {
        case NodeKind::Constant:
            return (n->value < 0.0 || std::signbit(n->value)) ? 3 : 5;
        case NodeKind::Variable: return 5;
        case NodeKind::Call: return 5;
        case NodeKind::Unary: return 3;
        case NodeKind::Binary:
            switch (n->bop) {
                case BinaryOp::Add:
                case BinaryOp::Sub: return 1;
                case BinaryOp::Mul:
                case BinaryOp::Div: return 2;
                case BinaryOp::Pow: return 4;
            }
    }
    return 5;
}

std::string_view builtin_name(Builtin fn) {
    for (const auto& b : kBuiltins)
        if (b.fn == fn) return b.name;
    return "?";
}

void print(const NodePtr& n, std::string& out, int min_prec) {
    int prec = precedence(n);
    bool parens = prec < min_prec;
    if (parens) out += '(';
    switch (n->kind) {
        case NodeKind::Constant:
            if (n->value < 0.0 || std::signbit(n->value)) {
                out += '-';
                out += format_number(-n->value);
            } else {
                out += format_number(n->value);
            }
            break;
        case NodeKind::Variable:
            out += variable_name(n->var);
            break;
        case NodeKind::Unary:
            out += '-';
            print(n->args[0], out, 3);
            break;
        case NodeKind::Binary: {
            const char* op = nullptr;
            int lp = 0, rp = 0;
            switch (n->bop) {
                case BinaryOp::Add: op = " + "; lp = 1; rp = 2; break;
                case BinaryOp::Sub: op = " - "; lp = 1; rp = 2; break;
                case BinaryOp::Mul: op = "*"; lp = 2; rp = 3; break;
                case BinaryOp::Div: op = "/"; lp = 2; rp = 3; break;
                case BinaryOp::Pow: op = "^"; lp = 5; rp = 3; break;
            }
            print(n->args[0], out, lp);
            out += op;
            print(n->args[1], out, rp);
            break;
        }
        case NodeKind::Call:
            out += builtin_name(n->fn);
            out += '(';
            if (n->fn == Builtin::Norm2) {
                out += 'x';
            } else {
                for (std::size_t i = 0; i < n->args.size(); ++i) {
                    if (i) out += ", ";
                    print(n->args[i], out, 0);
                }
            }
            out += ')';
            break;
    }
    if (parens) out += ')';
}

}  // namespace

std::string to_string(const NodePtr& node) {
    std::string out;
    print(node, out, 0);
    return out;
}

bool structurally_equal(const NodePtr& a, const NodePtr& b) {
    if (a.get() == b.get()) return true;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case NodeKind::Constant:
            if (!(a->value == b->value)) return false;
            break;
        case NodeKind::Variable:
            if (a->var != b->var) return false;
            break;
        case NodeKind::Unary:
            if (a->uop != b->uop) return false;
            break;
        case NodeKind::Binary:
            if (a->bop != b->bop) return false;
            break;
        case NodeKind::Call:
            if (a->fn != b->fn) return false;
            break;
    }
    if (a->args.size() != b->args.size()) return false;
    for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!structurally_equal(a->args[i], b->args[i])) return false;
    return true;
}

bool depends_on(const NodePtr& node, int var) {
    switch (node->kind) {
        case NodeKind::Constant: return false;
        case NodeKind::Variable: return node->var == var;
        case NodeKind::Call:
            if (node->fn == Builtin::Norm2) return var >= 1;
            [[fallthrough]];
        default:
            for (const auto& a : node->args)
                if (depends_on(a, var)) return true;
            return false;
    }
}

}  // namespace evograd::expr
