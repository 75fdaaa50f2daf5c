#ifndef CAUSTICA_EXPR_HPP
#define CAUSTICA_EXPR_HPP

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "caustica/jet.hpp"

namespace caustica {

/// Scalar expression over named variables, with exact first and second
/// derivatives via Jet evaluation.
///
/// Grammar: + - * / ^ (right assoc), parentheses, unary minus, numbers,
/// constants pi and e, functions exp ln log cosh sinh tanh sin cos sqrt abs
/// step, variables x (alias x1), x1..x8 and xi (alias xi1), xi1..xi8.
/// step(t) is the Heaviside function with the right-continuous convention
/// step(0) = 1; its derivative is taken as 0 everywhere, so kinks in
/// piecewise data get one-sided derivatives.
class Expr {
  public:
    Expr() = default;
    static Expr parse(const std::string& text) {
        Parser p(text);
        Expr e;
        e.text_ = text;
        e.root_ = p.parse_expr();
        p.expect_end();
        e.max_var_ = max_var_index(*e.root_);
        return e;
    }

    const std::string& text() const { return text_; }
    bool valid() const { return root_ != nullptr; }
    /// Highest variable slot referenced (x1->0 ... x8->7, xi1->8 ... xi8->15), -1 if constant.
    int max_var_index() const { return max_var_; }

    template <class T>
    T eval(const std::vector<T>& vars) const {
        if (!root_) throw std::runtime_error("expr: evaluating empty expression");
        return eval_node<T>(*root_, vars);
    }

    /// Evaluate with x-variables only (slots 0..d-1).
    double operator()(const Vec& x) const {
        std::vector<double> vars(x.begin(), x.end());
        vars.resize(16, 0.0);
        return eval(vars);
    }

  private:
    enum class Op { kConst, kVar, kAdd, kSub, kMul, kDiv, kPow, kPowInt, kNeg, kFun };
    enum class Fun { kExp, kLn, kCosh, kSinh, kTanh, kSin, kCos, kSqrt, kAbs, kStep };

    struct Node {
        Op op;
        double cval = 0.0;
        int var = 0;
        int ipow = 0;
        Fun fun = Fun::kExp;
        std::unique_ptr<Node> a, b;
    };

    static int max_var_index(const Node& n) {
        int m = n.op == Op::kVar ? n.var : -1;
        if (n.a) m = std::max(m, max_var_index(*n.a));
        if (n.b) m = std::max(m, max_var_index(*n.b));
        return m;
    }

    template <class T>
    static T eval_node(const Node& n, const std::vector<T>& vars) {
        switch (n.op) {
            case Op::kConst: return make_const<T>(n.cval, vars);
            case Op::kVar:
                if (n.var >= int(vars.size()))
                    throw std::runtime_error("expr: variable index out of range");
                return vars[std::size_t(n.var)];
            case Op::kAdd: return eval_node<T>(*n.a, vars) + eval_node<T>(*n.b, vars);
            case Op::kSub: return eval_node<T>(*n.a, vars) - eval_node<T>(*n.b, vars);
            case Op::kMul: return eval_node<T>(*n.a, vars) * eval_node<T>(*n.b, vars);
            case Op::kDiv: return eval_node<T>(*n.a, vars) / eval_node<T>(*n.b, vars);
            case Op::kPowInt: {
                using std::pow;
                return pow(eval_node<T>(*n.a, vars), n.ipow);
            }
            case Op::kPow: {
                using std::pow;
                return pow(eval_node<T>(*n.a, vars), eval_node<T>(*n.b, vars));
            }
            case Op::kNeg: return -eval_node<T>(*n.a, vars);
            case Op::kFun: {
                T v = eval_node<T>(*n.a, vars);
                using std::abs;
                using std::cos;
                using std::cosh;
                using std::exp;
                using std::log;
                using std::sin;
                using std::sinh;
                using std::sqrt;
                using std::tanh;
                switch (n.fun) {
                    case Fun::kExp: return exp(v);
                    case Fun::kLn: return log(v);
                    case Fun::kCosh: return cosh(v);
                    case Fun::kSinh: return sinh(v);
                    case Fun::kTanh: return tanh(v);
                    case Fun::kSin: return sin(v);
                    case Fun::kCos: return cos(v);
                    case Fun::kSqrt: return sqrt(v);
                    case Fun::kAbs: return abs(v);
                    case Fun::kStep: return step_of(v);
                }
            }
        }
        throw std::logic_error("expr: bad node");
    }

    template <class T>
    static T make_const(double c, const std::vector<T>&);
    static double step_of(double v) { return v >= 0.0 ? 1.0 : 0.0; }
    static Jet step_of(const Jet& v) { return step(v); }

    class Parser {
      public:
        explicit Parser(const std::string& s) : s_(s) {}

        std::unique_ptr<Node> parse_expr() {
            auto lhs = parse_term();
            for (;;) {
                skip_ws();
                if (peek() == '+' || peek() == '-') {
                    char op = get();
                    auto rhs = parse_term();
                    lhs = binary(op == '+' ? Op::kAdd : Op::kSub, std::move(lhs), std::move(rhs));
                } else {
                    return lhs;
                }
            }
        }

        void expect_end() {
            skip_ws();
            if (pos_ != s_.size())
                throw std::runtime_error("expr: unexpected trailing input at '" + s_.substr(pos_) + "'");
        }

      private:
        std::unique_ptr<Node> parse_term() {
            auto lhs = parse_unary();
            for (;;) {
                skip_ws();
                if (peek() == '*' || peek() == '/') {
                    char op = get();
                    auto rhs = parse_unary();
                    lhs = binary(op == '*' ? Op::kMul : Op::kDiv, std::move(lhs), std::move(rhs));
                } else {
                    return lhs;
                }
            }
        }

        // unary minus binds looser than ^, so -x^2 == -(x^2); the exponent
        // position admits a sign, so 2^-3 works.
        std::unique_ptr<Node> parse_unary() {
            skip_ws();
            if (peek() == '-') {
                get();
                auto n = std::make_unique<Node>();
                n->op = Op::kNeg;
                n->a = parse_unary();
                return n;
            }
            if (peek() == '+') {
                get();
                return parse_unary();
            }
            return parse_power();
        }

        std::unique_ptr<Node> parse_power() {
            auto base = parse_primary();
            skip_ws();
            if (peek() == '^') {
                get();
                auto expn = parse_unary();  // right associative
                double cval = 0.0;
                bool is_const = expn->op == Op::kConst;
                if (is_const) cval = expn->cval;
                if (expn->op == Op::kNeg && expn->a->op == Op::kConst) {
                    is_const = true;
                    cval = -expn->a->cval;
                }
                if (is_const && cval == std::floor(cval) && std::abs(cval) <= 64.0) {
                    auto n = std::make_unique<Node>();
                    n->op = Op::kPowInt;
                    n->ipow = int(cval);
                    n->a = std::move(base);
                    return n;
                }
                return binary(Op::kPow, std::move(base), std::move(expn));
            }
            return base;
        }

        std::unique_ptr<Node> parse_primary() {
            skip_ws();
            char c = peek();
            if (c == '(') {
                get();
                auto e = parse_expr();
                skip_ws();
                if (get() != ')') throw std::runtime_error("expr: missing ')'");
                return e;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
            throw std::runtime_error(std::string("expr: unexpected character '") + c + "'");
        }

        std::unique_ptr<Node> parse_number() {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            if (end == begin) throw std::runtime_error("expr: bad number");
            pos_ += std::size_t(end - begin);
            auto n = std::make_unique<Node>();
            n->op = Op::kConst;
            n->cval = v;
            return n;
        }

        std::unique_ptr<Node> parse_ident() {
            std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                ++pos_;
            std::string id = s_.substr(start, pos_ - start);
            skip_ws();
            if (peek() == '(') {
                get();
                auto arg = parse_expr();
                skip_ws();
                if (get() != ')') throw std::runtime_error("expr: missing ')' after " + id);
                auto n = std::make_unique<Node>();
                n->op = Op::kFun;
                n->a = std::move(arg);
                if (id == "exp") n->fun = Fun::kExp;
                else if (id == "ln" || id == "log") n->fun = Fun::kLn;
                else if (id == "cosh") n->fun = Fun::kCosh;
                else if (id == "sinh") n->fun = Fun::kSinh;
                else if (id == "tanh") n->fun = Fun::kTanh;
                else if (id == "sin") n->fun = Fun::kSin;
                else if (id == "cos") n->fun = Fun::kCos;
                else if (id == "sqrt") n->fun = Fun::kSqrt;
                else if (id == "abs") n->fun = Fun::kAbs;
                else if (id == "step") n->fun = Fun::kStep;
                else throw std::runtime_error("expr: unknown function '" + id + "'");
                return n;
            }
            auto n = std::make_unique<Node>();
            if (id == "pi") {
                n->op = Op::kConst;
                n->cval = M_PI;
                return n;
            }
            if (id == "e") {
                n->op = Op::kConst;
                n->cval = M_E;
                return n;
            }
            n->op = Op::kVar;
            n->var = var_slot(id);
            return n;
        }

        // x,x1..x8 -> slots 0..7; xi,xi1..xi8 -> slots 8..15.
        static int var_slot(const std::string& id) {
            if (id == "x") return 0;
            if (id == "xi") return 8;
            if (id.size() == 2 && id[0] == 'x' && id[1] >= '1' && id[1] <= '8') return id[1] - '1';
            if (id.size() == 3 && id[0] == 'x' && id[1] == 'i' && id[2] >= '1' && id[2] <= '8')
                return 8 + (id[2] - '1');
            throw std::runtime_error("expr: unknown identifier '" + id + "'");
        }

        static std::unique_ptr<Node> binary(Op op, std::unique_ptr<Node> a, std::unique_ptr<Node> b) {
            auto n = std::make_unique<Node>();
            n->op = op;
            n->a = std::move(a);
            n->b = std::move(b);
            return n;
        }

        void skip_ws() {
            while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        }
        char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
        char get() { return pos_ < s_.size() ? s_[pos_++] : '\0'; }

        const std::string& s_;
        std::size_t pos_ = 0;
    };

    std::shared_ptr<Node> root_;
    std::string text_;
    int max_var_ = -1;
};

template <class T>
T Expr::make_const(double c, const std::vector<T>&) {
    return T(c);
}
template <>
inline Jet Expr::make_const<Jet>(double c, const std::vector<Jet>& vars) {
    return Jet(c, vars.empty() ? 0 : vars.front().nvars());
}

}  // namespace caustica

#endif
