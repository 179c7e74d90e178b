#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace ospde {

/// Values bound to the variables of an expression.
struct Variables {
    double t = 0.0;
    double x = 0.0;
    double x2 = 0.0;  // second space coordinate
    double y = 0.0;
    double z = 0.0;   // first gradient component
    double z2 = 0.0;
};

/// Compiled arithmetic expression over t, x, x2, y, z, z2 and the constant pi.
///
/// Grammar (lowest precedence first):
///   or      := and ('||' and)*
///   and     := cmp ('&&' cmp)*
///   cmp     := sum (('<' | '<=' | '>' | '>=' | '==' | '!=') sum)?
///   sum     := product (('+' | '-') product)*
///   product := unary (('*' | '/') unary)*
///   unary   := ('-' | '+') unary | power
///   power   := atom ('^' unary)?
///   atom    := number | name | name '(' args ')' | '(' or ')'
/// Functions: sin cos tan exp log sqrt abs min max pow. Comparisons yield 1 or 0.
class Expression {
public:
    Expression() = default;
    static Expression parse(std::string_view source);
    static Expression constant(double value);

    double operator()(const Variables& v) const;
    const std::string& source() const { return source_; }
    bool empty() const { return !root_; }
    bool depends_on_state() const { return uses_state_; }
    bool depends_on_time() const { return uses_time_; }

    struct Node;

private:
    std::string source_;
    std::shared_ptr<const Node> root_;
    bool uses_state_ = false;
    bool uses_time_ = false;
};

}  // namespace ospde
