#include "routhsim/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

namespace routhsim {

namespace {

using Kind = PotentialExpr::Kind;
using Node = PotentialExpr::Node;
using NodePtr = PotentialExpr::NodePtr;

NodePtr mk(Kind k, NodePtr a = nullptr, NodePtr b = nullptr)
{
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr num(double v)
{
    auto n = std::make_shared<Node>();
    n->kind = Kind::Num;
    n->value = v;
    return n;
}

NodePtr var(const std::string &s)
{
    auto n = std::make_shared<Node>();
    n->kind = Kind::Var;
    n->name = s;
    return n;
}

bool is_num(const NodePtr &n, double v) { return n->kind == Kind::Num && n->value == v; }

// constructors with light folding of 0 and 1
NodePtr add(NodePtr a, NodePtr b)
{
    if (is_num(a, 0.0)) return b;
    if (is_num(b, 0.0)) return a;
    return mk(Kind::Add, a, b);
}
NodePtr sub(NodePtr a, NodePtr b)
{
    if (is_num(b, 0.0)) return a;
    if (is_num(a, 0.0)) return mk(Kind::Neg, b);
    return mk(Kind::Sub, a, b);
}
NodePtr mul(NodePtr a, NodePtr b)
{
    if (is_num(a, 0.0) || is_num(b, 0.0)) return num(0.0);
    if (is_num(a, 1.0)) return b;
    if (is_num(b, 1.0)) return a;
    return mk(Kind::Mul, a, b);
}
NodePtr divide(NodePtr a, NodePtr b)
{
    if (is_num(a, 0.0)) return num(0.0);
    if (is_num(b, 1.0)) return a;
    return mk(Kind::Div, a, b);
}
NodePtr signed_num(double v) { return v < 0.0 ? mk(Kind::Neg, num(-v)) : num(v); }

class Parser {
public:
    explicit Parser(const std::string &s) : s_(s) {}

    NodePtr parse()
    {
        skip();
        if (pos_ >= s_.size()) fail({"number", "identifier", "(", "-"}, "empty expression");
        NodePtr e = expr();
        skip();
        if (pos_ < s_.size()) fail({"+", "-", "*", "/", "^", "end of input"}, "unexpected trailing input");
        return e;
    }

private:
    const std::string &s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(std::vector<std::string> expected, const std::string &what)
    {
        std::string msg = "parse error at offset " + std::to_string(pos_) + ": " + what + "; expected one of {";
        for (std::size_t i = 0; i < expected.size(); ++i) msg += (i ? ", " : "") + expected[i];
        msg += "}";
        throw ParseError(pos_, std::move(expected), msg);
    }

    void skip()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c)
    {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr()
    {
        NodePtr lhs = term();
        while (true) {
            if (accept('+'))
                lhs = mk(Kind::Add, lhs, term());
            else if (accept('-'))
                lhs = mk(Kind::Sub, lhs, term());
            else
                return lhs;
        }
    }

    NodePtr term()
    {
        NodePtr lhs = unary();
        while (true) {
            if (accept('*'))
                lhs = mk(Kind::Mul, lhs, unary());
            else if (accept('/'))
                lhs = mk(Kind::Div, lhs, unary());
            else
                return lhs;
        }
    }

    NodePtr unary()
    {
        if (accept('-')) return mk(Kind::Neg, unary());
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power()
    {
        NodePtr base = primary();
        if (accept('^')) return mk(Kind::Pow, base, unary());
        return base;
    }

    NodePtr primary()
    {
        skip();
        if (pos_ >= s_.size()) fail({"number", "identifier", "("}, "unexpected end of input");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            if (!accept(')')) fail({")"}, "unbalanced parenthesis");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            std::string id = s_.substr(start, pos_ - start);
            skip();
            if (pos_ < s_.size() && s_[pos_] == '(') {
                static const std::pair<const char *, Kind> fns[] = {
                    {"sin", Kind::Sin}, {"cos", Kind::Cos}, {"exp", Kind::Exp}, {"ln", Kind::Ln}, {"sqrt", Kind::Sqrt}};
                for (const auto &[fname, kind] : fns)
                    if (id == fname) {
                        ++pos_;
                        NodePtr arg = expr();
                        if (!accept(')')) fail({")"}, "unclosed function call");
                        return mk(kind, arg);
                    }
                pos_ = start;
                fail({"sin", "cos", "exp", "ln", "sqrt"}, "unknown function '" + id + "'");
            }
            return var(id);
        }
        fail({"number", "identifier", "("}, std::string("unexpected character '") + c + "'");
    }

    NodePtr number()
    {
        std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            } else {
                pos_ = save;
            }
        }
        double v = 0.0;
        auto res = std::from_chars(s_.data() + start, s_.data() + pos_, v);
        if (res.ec != std::errc() || res.ptr != s_.data() + pos_) {
            pos_ = start;
            fail({"number"}, "malformed number");
        }
        return num(v);
    }
};

void collect(const Node *n, std::set<std::string> &out)
{
    if (!n) return;
    if (n->kind == Kind::Var) out.insert(n->name);
    collect(n->a.get(), out);
    collect(n->b.get(), out);
}

NodePtr diff(const NodePtr &n, const std::string &x)
{
    switch (n->kind) {
    case Kind::Num: return num(0.0);
    case Kind::Var: return num(n->name == x ? 1.0 : 0.0);
    case Kind::Neg: {
        NodePtr d = diff(n->a, x);
        return is_num(d, 0.0) ? d : mk(Kind::Neg, d);
    }
    case Kind::Add: return add(diff(n->a, x), diff(n->b, x));
    case Kind::Sub: return sub(diff(n->a, x), diff(n->b, x));
    case Kind::Mul: return add(mul(diff(n->a, x), n->b), mul(n->a, diff(n->b, x)));
    case Kind::Div: {
        NodePtr num_ = sub(mul(diff(n->a, x), n->b), mul(n->a, diff(n->b, x)));
        return divide(num_, mk(Kind::Pow, n->b, num(2.0)));
    }
    case Kind::Pow: {
        NodePtr da = diff(n->a, x);
        NodePtr db = diff(n->b, x);
        if (n->b->kind == Kind::Num) {
            // c * a^(c-1) * a'
            double c = n->b->value;
            if (c == 0.0) return num(0.0);
            NodePtr p = c == 1.0 ? n->a : mk(Kind::Pow, n->a, signed_num(c - 1.0));
            return mul(mul(num(c), p), da);
        }
        // a^b (b' ln a + b a'/a)
        NodePtr t1 = mul(db, mk(Kind::Ln, n->a));
        NodePtr t2 = divide(mul(n->b, da), n->a);
        return mul(n, add(t1, t2));
    }
    case Kind::Sin: return mul(mk(Kind::Cos, n->a), diff(n->a, x));
    case Kind::Cos: {
        NodePtr d = diff(n->a, x);
        if (is_num(d, 0.0)) return d;
        return mk(Kind::Neg, mul(mk(Kind::Sin, n->a), d));
    }
    case Kind::Exp: return mul(n, diff(n->a, x));
    case Kind::Ln: return divide(diff(n->a, x), n->a);
    case Kind::Sqrt: return divide(diff(n->a, x), mul(num(2.0), n));
    }
    return num(0.0);
}

std::string fmt_num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string print(const Node *n)
{
    switch (n->kind) {
    case Kind::Num: return fmt_num(n->value);
    case Kind::Var: return n->name;
    case Kind::Neg: return "(-" + print(n->a.get()) + ")";
    case Kind::Add: return "(" + print(n->a.get()) + " + " + print(n->b.get()) + ")";
    case Kind::Sub: return "(" + print(n->a.get()) + " - " + print(n->b.get()) + ")";
    case Kind::Mul: return "(" + print(n->a.get()) + " * " + print(n->b.get()) + ")";
    case Kind::Div: return "(" + print(n->a.get()) + " / " + print(n->b.get()) + ")";
    case Kind::Pow: return "(" + print(n->a.get()) + "^" + print(n->b.get()) + ")";
    case Kind::Sin: return "sin(" + print(n->a.get()) + ")";
    case Kind::Cos: return "cos(" + print(n->a.get()) + ")";
    case Kind::Exp: return "exp(" + print(n->a.get()) + ")";
    case Kind::Ln: return "ln(" + print(n->a.get()) + ")";
    case Kind::Sqrt: return "sqrt(" + print(n->a.get()) + ")";
    }
    return "";
}

bool equal(const Node *a, const Node *b)
{
    if (!a || !b) return a == b;
    if (a->kind != b->kind) return false;
    if (a->kind == Kind::Num) return a->value == b->value;
    if (a->kind == Kind::Var) return a->name == b->name;
    return equal(a->a.get(), b->a.get()) && equal(a->b.get(), b->b.get());
}

}  // namespace

PotentialExpr PotentialExpr::parse(const std::string &text) { return PotentialExpr(Parser(text).parse()); }

PotentialExpr PotentialExpr::constant(double c) { return PotentialExpr(signed_num(c)); }

std::vector<std::string> PotentialExpr::variables() const
{
    std::set<std::string> s;
    collect(root_.get(), s);
    return {s.begin(), s.end()};
}

PotentialExpr PotentialExpr::derivative(const std::string &v) const { return PotentialExpr(diff(root_, v)); }

std::string PotentialExpr::to_string() const { return root_ ? print(root_.get()) : ""; }

bool PotentialExpr::operator==(const PotentialExpr &o) const { return equal(root_.get(), o.root_.get()); }

PotentialExpr::Bound::Bound(const PotentialExpr &e, const std::vector<std::string> &slots)
{
    if (e.empty()) throw Error(ErrorKind::InvalidArgument, "empty expression");
    root_ = bind(e.root().get(), slots);
}

std::unique_ptr<PotentialExpr::Bound::BNode> PotentialExpr::Bound::bind(const Node *n,
                                                                         const std::vector<std::string> &slots)
{
    auto b = std::make_unique<BNode>();
    b->kind = n->kind;
    b->value = n->value;
    if (n->kind == Kind::Var) {
        auto it = std::find(slots.begin(), slots.end(), n->name);
        if (it == slots.end()) throw Error(ErrorKind::InvalidArgument, "unknown variable '" + n->name + "' in expression");
        b->slot = static_cast<std::size_t>(it - slots.begin());
    }
    if (n->a) b->a = bind(n->a.get(), slots);
    if (n->b) b->b = bind(n->b.get(), slots);
    if (n->kind == Kind::Pow) {
        const Node *e = n->b.get();
        double c = 0.0;
        bool lit = false;
        if (e->kind == Kind::Num) {
            c = e->value;
            lit = true;
        } else if (e->kind == Kind::Neg && e->a->kind == Kind::Num) {
            c = -e->a->value;
            lit = true;
        }
        if (lit && std::floor(c) == c && std::abs(c) < 64) {
            b->has_int_exponent = true;
            b->int_exponent = static_cast<int>(c);
        }
    }
    return b;
}

}  // namespace routhsim
