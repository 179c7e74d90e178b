#include "ospde/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

#include "ospde/errors.hpp"

namespace ospde {

struct Expression::Node {
    enum class Kind { Number, Variable, Unary, Binary, Call } kind;
    double value = 0.0;
    std::string name;
    char op = 0;  // unary/binary operator, or a code for two-char comparisons
    std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind k, double value = 0.0, std::string name = {}, char op = 0,
             std::vector<NodePtr> args = {}) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = k;
    n->value = value;
    n->name = std::move(name);
    n->op = op;
    n->args = std::move(args);
    return n;
}

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    NodePtr parse() {
        NodePtr n = parse_or();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

    bool uses_state = false;
    bool uses_time = false;

private:
    std::string_view s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw InvalidArgument("expression '" + std::string(s_) + "': " + what + " at offset " +
                              std::to_string(pos_));
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(std::string_view tok) {
        skip();
        if (s_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    NodePtr parse_or() {
        NodePtr l = parse_and();
        while (accept("||")) l = make(Kind::Binary, 0, {}, '|', {l, parse_and()});
        return l;
    }

    NodePtr parse_and() {
        NodePtr l = parse_cmp();
        while (accept("&&")) l = make(Kind::Binary, 0, {}, '&', {l, parse_cmp()});
        return l;
    }

    NodePtr parse_cmp() {
        NodePtr l = parse_sum();
        static constexpr std::pair<std::string_view, char> ops[] = {
            {"<=", 'l'}, {">=", 'g'}, {"==", 'e'}, {"!=", 'n'}, {"<", '<'}, {">", '>'}};
        for (const auto& [tok, code] : ops) {
            if (accept(tok)) return make(Kind::Binary, 0, {}, code, {l, parse_sum()});
        }
        return l;
    }

    NodePtr parse_sum() {
        NodePtr l = parse_product();
        for (;;) {
            if (accept("+")) l = make(Kind::Binary, 0, {}, '+', {l, parse_product()});
            else if (accept("-")) l = make(Kind::Binary, 0, {}, '-', {l, parse_product()});
            else return l;
        }
    }

    NodePtr parse_product() {
        NodePtr l = parse_unary();
        for (;;) {
            if (accept("*")) l = make(Kind::Binary, 0, {}, '*', {l, parse_unary()});
            else if (accept("/")) l = make(Kind::Binary, 0, {}, '/', {l, parse_unary()});
            else return l;
        }
    }

    NodePtr parse_unary() {
        if (accept("-")) return make(Kind::Unary, 0, {}, '-', {parse_unary()});
        if (accept("+")) return parse_unary();
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        if (accept("^")) return make(Kind::Binary, 0, {}, '^', {base, parse_unary()});
        return base;
    }

    NodePtr parse_atom() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        if (accept("(")) {
            NodePtr n = parse_or();
            if (!accept(")")) fail("expected ')'");
            return n;
        }
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            double v = 0.0;
            auto [end, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
            if (ec != std::errc()) fail("bad number");
            pos_ = static_cast<std::size_t>(end - s_.data());
            return make(Kind::Number, v);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
                ++pos_;
            }
            std::string name(s_.substr(start, pos_ - start));
            if (accept("(")) {
                std::vector<NodePtr> args;
                if (!accept(")")) {
                    do {
                        args.push_back(parse_or());
                    } while (accept(","));
                    if (!accept(")")) fail("expected ')' after arguments");
                }
                check_call(name, args.size());
                return make(Kind::Call, 0, name, 0, std::move(args));
            }
            if (name == "pi") return make(Kind::Number, std::numbers::pi);
            if (name == "y" || name == "z" || name == "z2") uses_state = true;
            else if (name == "t") uses_time = true;
            else if (name != "x" && name != "x2") fail("unknown variable '" + name + "'");
            return make(Kind::Variable, 0, name);
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    void check_call(const std::string& name, std::size_t n) {
        static const std::pair<const char*, std::size_t> known[] = {
            {"sin", 1}, {"cos", 1}, {"tan", 1}, {"exp", 1}, {"log", 1}, {"sqrt", 1},
            {"abs", 1}, {"min", 2}, {"max", 2}, {"pow", 2}};
        for (const auto& [k, arity] : known) {
            if (name == k) {
                if (n != arity) fail(name + " takes " + std::to_string(arity) + " argument(s)");
                return;
            }
        }
        fail("unknown function '" + name + "'");
    }
};

double eval(const Expression::Node& n, const Variables& v) {
    switch (n.kind) {
        case Kind::Number:
            return n.value;
        case Kind::Variable:
            if (n.name == "t") return v.t;
            if (n.name == "x") return v.x;
            if (n.name == "x2") return v.x2;
            if (n.name == "y") return v.y;
            if (n.name == "z") return v.z;
            return v.z2;
        case Kind::Unary:
            return -eval(*n.args[0], v);
        case Kind::Binary: {
            const double a = eval(*n.args[0], v);
            const double b = eval(*n.args[1], v);
            switch (n.op) {
                case '+': return a + b;
                case '-': return a - b;
                case '*': return a * b;
                case '/': return a / b;
                case '^': return std::pow(a, b);
                case '<': return a < b;
                case '>': return a > b;
                case 'l': return a <= b;
                case 'g': return a >= b;
                case 'e': return a == b;
                case 'n': return a != b;
                case '&': return a != 0.0 && b != 0.0;
                default: return a != 0.0 || b != 0.0;
            }
        }
        case Kind::Call: {
            const double a = eval(*n.args[0], v);
            const std::string& f = n.name;
            if (f == "sin") return std::sin(a);
            if (f == "cos") return std::cos(a);
            if (f == "tan") return std::tan(a);
            if (f == "exp") return std::exp(a);
            if (f == "log") return std::log(a);
            if (f == "sqrt") return std::sqrt(a);
            if (f == "abs") return std::abs(a);
            const double b = eval(*n.args[1], v);
            if (f == "min") return std::min(a, b);
            if (f == "max") return std::max(a, b);
            return std::pow(a, b);
        }
    }
    return 0.0;
}

}  // namespace

Expression Expression::parse(std::string_view source) {
    Parser p(source);
    Expression e;
    e.root_ = p.parse();
    e.source_ = std::string(source);
    e.uses_state_ = p.uses_state;
    e.uses_time_ = p.uses_time;
    return e;
}

Expression Expression::constant(double value) {
    Expression e;
    e.root_ = make(Kind::Number, value);
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    e.source_.assign(buf, end);
    return e;
}

double Expression::operator()(const Variables& v) const {
    if (!root_) return 0.0;
    return eval(*root_, v);
}

}  // namespace ospde
