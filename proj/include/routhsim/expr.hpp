#pragma once

// Expression trees for user potentials and constraints.
// Grammar: expr := term (('+'|'-') term)*; term := unary (('*'|'/') unary)*;
// unary := ('-'|'+') unary | power; power := primary ('^' unary)?;
// primary := number | ident | func '(' expr ')' | '(' expr ')'.

#include <memory>
#include <string>
#include <vector>

#include "routhsim/dual.hpp"
#include "routhsim/error.hpp"

namespace routhsim {

class PotentialExpr {
public:
    enum class Kind { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Ln, Sqrt };

    struct Node {
        Kind kind;
        double value = 0.0;  // Num
        std::string name;    // Var
        std::shared_ptr<const Node> a, b;
    };
    using NodePtr = std::shared_ptr<const Node>;

    PotentialExpr() = default;
    explicit PotentialExpr(NodePtr root) : root_(std::move(root)) {}

    static PotentialExpr parse(const std::string &text);
    static PotentialExpr constant(double c);

    const NodePtr &root() const { return root_; }
    bool empty() const { return !root_; }

    /// Sorted distinct variable names.
    std::vector<std::string> variables() const;

    PotentialExpr derivative(const std::string &var) const;
    std::string to_string() const;

    bool operator==(const PotentialExpr &o) const;

    /// Binds variable names to slots; unknown names throw InvalidArgument.
    class Bound {
    public:
        Bound() = default;
        Bound(const PotentialExpr &e, const std::vector<std::string> &slots);

        template <class T>
        T eval(const std::vector<T> &x) const
        {
            return eval_node<T>(root_.get(), x);
        }

    private:
        struct BNode {
            Kind kind;
            double value = 0.0;
            std::size_t slot = 0;
            int int_exponent = 0;  // Pow with an integer literal exponent
            bool has_int_exponent = false;
            std::unique_ptr<BNode> a, b;
        };
        std::shared_ptr<const BNode> root_;

        static std::unique_ptr<BNode> bind(const Node *n, const std::vector<std::string> &slots);

        template <class T>
        static T eval_node(const BNode *n, const std::vector<T> &x);
    };

    Bound bind(const std::vector<std::string> &slots) const { return Bound(*this, slots); }

    /// Evaluates with named values (convenience; slow path).
    double eval(const std::vector<std::string> &names, const std::vector<double> &vals) const
    {
        return bind(names).eval(vals);
    }

private:
    NodePtr root_;
};

template <class T>
T PotentialExpr::Bound::eval_node(const BNode *n, const std::vector<T> &x)
{
    using std::cos, std::exp, std::log, std::sin, std::sqrt;
    switch (n->kind) {
    case Kind::Num: return T(n->value);
    case Kind::Var: return x[n->slot];
    case Kind::Neg: return -eval_node(n->a.get(), x);
    case Kind::Add: return eval_node(n->a.get(), x) + eval_node(n->b.get(), x);
    case Kind::Sub: return eval_node(n->a.get(), x) - eval_node(n->b.get(), x);
    case Kind::Mul: return eval_node(n->a.get(), x) * eval_node(n->b.get(), x);
    case Kind::Div: {
        T d = eval_node(n->b.get(), x);
        if (value_of(d) == 0.0) throw Error(ErrorKind::DomainError, "division by zero");
        return eval_node(n->a.get(), x) / d;
    }
    case Kind::Pow: {
        T base = eval_node(n->a.get(), x);
        if (n->has_int_exponent) return ipow(base, n->int_exponent);
        if (value_of(base) <= 0.0) throw Error(ErrorKind::DomainError, "non-integer power of a non-positive base");
        return pow_general(base, eval_node(n->b.get(), x));
    }
    case Kind::Sin: return sin(eval_node(n->a.get(), x));
    case Kind::Cos: return cos(eval_node(n->a.get(), x));
    case Kind::Exp: return exp(eval_node(n->a.get(), x));
    case Kind::Ln: {
        T a = eval_node(n->a.get(), x);
        if (!(value_of(a) > 0.0)) throw Error(ErrorKind::DomainError, "ln of a non-positive argument");
        return log(a);
    }
    case Kind::Sqrt: {
        T a = eval_node(n->a.get(), x);
        if (value_of(a) < 0.0) throw Error(ErrorKind::DomainError, "sqrt of a negative argument");
        return sqrt(a);
    }
    }
    return T(0.0);
}

}  // namespace routhsim
