#include "ksub/expr.hpp"

#include <cctype>
#include <cmath>
#include <map>
#include <stdexcept>

#include "ksub/errors.hpp"

namespace ksub {

namespace {

enum class Op {
    Const, VarX, VarY,
    Add, Sub, Mul, Div, Pow, Neg,
    Sin, Cos, Tan, Sinh, Cosh, Tanh,
    Asin, Acos, Atan, Atanh,
    Exp, Log, Sqrt, Abs
};

const std::map<std::string, Op> kFunctions = {
    {"sin", Op::Sin},   {"cos", Op::Cos},   {"tan", Op::Tan},
    {"sinh", Op::Sinh}, {"cosh", Op::Cosh}, {"tanh", Op::Tanh},
    {"asin", Op::Asin}, {"acos", Op::Acos}, {"atan", Op::Atan},
    {"atanh", Op::Atanh},
    {"exp", Op::Exp},   {"log", Op::Log},   {"sqrt", Op::Sqrt},
    {"abs", Op::Abs},   {"pow", Op::Pow},
};

} // namespace

struct Expression::Node {
    Op op = Op::Const;
    double value = 0;
    std::shared_ptr<const Node> a, b;

    template <class T>
    T eval(const T& x, const T& y) const {
        using std::sin; using std::cos; using std::tan;
        using std::sinh; using std::cosh; using std::tanh;
        using std::asin; using std::acos; using std::atan; using std::atanh;
        using std::exp; using std::log; using std::sqrt; using std::abs;
        using std::pow;
        switch (op) {
            case Op::Const: return T(value);
            case Op::VarX: return x;
            case Op::VarY: return y;
            case Op::Add: return a->eval(x, y) + b->eval(x, y);
            case Op::Sub: return a->eval(x, y) - b->eval(x, y);
            case Op::Mul: return a->eval(x, y) * b->eval(x, y);
            case Op::Div: return a->eval(x, y) / b->eval(x, y);
            case Op::Pow: return pow(a->eval(x, y), b->eval(x, y));
            case Op::Neg: return -a->eval(x, y);
            case Op::Sin: return sin(a->eval(x, y));
            case Op::Cos: return cos(a->eval(x, y));
            case Op::Tan: return tan(a->eval(x, y));
            case Op::Sinh: return sinh(a->eval(x, y));
            case Op::Cosh: return cosh(a->eval(x, y));
            case Op::Tanh: return tanh(a->eval(x, y));
            case Op::Asin: return asin(a->eval(x, y));
            case Op::Acos: return acos(a->eval(x, y));
            case Op::Atan: return atan(a->eval(x, y));
            case Op::Atanh: return atanh(a->eval(x, y));
            case Op::Exp: return exp(a->eval(x, y));
            case Op::Log: return log(a->eval(x, y));
            case Op::Sqrt: return sqrt(a->eval(x, y));
            case Op::Abs: return abs(a->eval(x, y));
        }
        return T(0);
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr, double v = 0) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    n->value = v;
    return n;
}

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr run() {
        auto n = expr();
        skip_ws();
        if (pos_ != s_.size())
            fail("unexpected trailing input");
        return n;
    }

private:
    const std::string& s_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& why) const {
        throw ConfigError("expression parse error at offset " + std::to_string(pos_) +
                          " in \"" + s_ + "\": " + why);
    }

    void skip_ws() { while (pos_ < s_.size() && std::isspace((unsigned char)s_[pos_])) ++pos_; }

    bool consume(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) { ++pos_; return true; }
        return false;
    }

    NodePtr expr() {
        auto n = term();
        for (;;) {
            if (consume('+')) n = make(Op::Add, n, term());
            else if (consume('-')) n = make(Op::Sub, n, term());
            else return n;
        }
    }

    NodePtr term() {
        auto n = unary();
        for (;;) {
            if (consume('*')) n = make(Op::Mul, n, unary());
            else if (consume('/')) n = make(Op::Div, n, unary());
            else return n;
        }
    }

    NodePtr unary() {
        if (consume('-')) return make(Op::Neg, unary());
        if (consume('+')) return unary();
        return power();
    }

    NodePtr power() {
        auto base = primary();
        if (consume('^')) return make(Op::Pow, base, unary()); // right associative
        return base;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        char c = s_[pos_];
        if (std::isdigit((unsigned char)c) || c == '.') return number();
        if (std::isalpha((unsigned char)c) || c == '_') return identifier();
        if (consume('(')) {
            auto n = expr();
            if (!consume(')')) fail("missing ')'");
            return n;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    NodePtr number() {
        size_t end = pos_;
        while (end < s_.size() &&
               (std::isdigit((unsigned char)s_[end]) || s_[end] == '.' ||
                s_[end] == 'e' || s_[end] == 'E' ||
                ((s_[end] == '+' || s_[end] == '-') && end > pos_ &&
                 (s_[end - 1] == 'e' || s_[end - 1] == 'E'))))
            ++end;
        double v = 0;
        try {
            v = std::stod(s_.substr(pos_, end - pos_));
        } catch (const std::exception&) {
            fail("bad numeric literal");
        }
        pos_ = end;
        return make(Op::Const, nullptr, nullptr, v);
    }

    NodePtr identifier() {
        size_t end = pos_;
        while (end < s_.size() && (std::isalnum((unsigned char)s_[end]) || s_[end] == '_')) ++end;
        std::string name = s_.substr(pos_, end - pos_);
        pos_ = end;
        if (name == "x") return make(Op::VarX);
        if (name == "y") return make(Op::VarY);
        if (name == "pi") return make(Op::Const, nullptr, nullptr, M_PI);
        if (name == "e") return make(Op::Const, nullptr, nullptr, M_E);
        auto it = kFunctions.find(name);
        if (it == kFunctions.end()) fail("unknown identifier '" + name + "'");
        if (!consume('(')) fail("expected '(' after function name");
        auto a = expr();
        NodePtr b;
        if (it->second == Op::Pow) {
            if (!consume(',')) fail("pow expects two arguments");
            b = expr();
        }
        if (!consume(')')) fail("missing ')' in function call");
        return make(it->second, a, b);
    }
};

} // namespace

Expression Expression::parse(const std::string& text) {
    Expression e;
    e.root_ = Parser(text).run();
    e.text_ = text;
    return e;
}

double Expression::eval(double x, double y) const {
    if (!root_) throw std::logic_error("empty expression");
    return root_->eval<double>(x, y);
}

Jet2 Expression::eval_jet(double x, double y) const {
    if (!root_) throw std::logic_error("empty expression");
    return root_->eval<Jet2>(Jet2::var_x(x), Jet2::var_y(y));
}

} // namespace ksub
