#pragma once

#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Expression engine for coefficient formulas in the variables t, x1..xd.
// Trees are immutable after construction; evaluate/differentiate/simplify are
// pure functions and safe to call concurrently.

namespace evograd::expr {

enum class NodeKind { Constant, Variable, Unary, Binary, Call };

enum class UnaryOp { Negate };

enum class BinaryOp { Add, Sub, Mul, Div, Pow };

// norm2 is the squared Euclidean norm of the full spatial vector, written
// norm2(x) in source text; it carries no children.  sign is the a.e.
// derivative of abs, with sign(0) = 0.
enum class Builtin { Sin, Cos, Exp, Log, Sqrt, Abs, Tanh, Sign, Min, Max, Norm2 };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind;
    double value = 0.0;   // Constant
    int var = -1;         // Variable: 0 = t, i >= 1 = x_i
    UnaryOp uop = UnaryOp::Negate;
    BinaryOp bop = BinaryOp::Add;
    Builtin fn = Builtin::Sin;
    std::vector<NodePtr> args;
};

// Construction helpers.
NodePtr constant(double v);
NodePtr variable(int var);  // 0 = t, i >= 1 = x_i
NodePtr negate(NodePtr a);
NodePtr binary(BinaryOp op, NodePtr a, NodePtr b);
NodePtr add(NodePtr a, NodePtr b);
NodePtr sub(NodePtr a, NodePtr b);
NodePtr mul(NodePtr a, NodePtr b);
NodePtr div(NodePtr a, NodePtr b);
NodePtr pow(NodePtr a, NodePtr b);
NodePtr call(Builtin fn, std::vector<NodePtr> args);

class ExprError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Syntax error; offset is the byte position in the source text.
class ParseError : public ExprError {
public:
    ParseError(const std::string& what, std::size_t offset);
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

// Evaluation outside a function's domain (log of non-positive, division by
// zero, ...).  The message names the offending sub-expression.
class DomainError : public ExprError {
public:
    DomainError(const std::string& what, NodePtr culprit);
    const NodePtr& culprit() const { return culprit_; }

private:
    NodePtr culprit_;
};

// Named sub-expressions substituted for bare identifiers at parse time.
// A parameter may also be written name(t) when it is a function of time.
using ParamMap = std::map<std::string, NodePtr, std::less<>>;

// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := '-' factor | power
//   power  := atom ('^' factor)?
//   atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
// '^' is right-associative and binds tighter than unary minus, so -x1^2
// parses as -(x1^2).
NodePtr parse(std::string_view source, int dimension, const ParamMap& params = {});

double evaluate(const NodePtr& node, double t, std::span<const double> x);

// Symbolic partial derivative with respect to var (0 = t, i >= 1 = x_i).
// The result is constant-folded via simplify.
NodePtr differentiate(const NodePtr& node, int var);

// Constant folding plus unit/zero rules; pointwise identical to the input on
// all valid inputs.
NodePtr simplify(const NodePtr& node);

// Prints in the grammar above; parsing the result reproduces the tree.
std::string to_string(const NodePtr& node);

bool structurally_equal(const NodePtr& a, const NodePtr& b);

bool depends_on(const NodePtr& node, int var);

// True for a constant node equal to v.
bool is_constant(const NodePtr& node, double v);

std::string variable_name(int var);

}  // namespace evograd::expr
