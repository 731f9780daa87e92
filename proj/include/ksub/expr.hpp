#pragma once
#include <memory>
#include <string>

#include "ksub/jet.hpp"

namespace ksub {

// Parsed scalar expression in the variables x, y.
// Supports + - * / ^, unary minus, parentheses, numeric literals, the
// constants pi and e, and the usual elementary functions. Evaluation on
// jets gives exact first and second derivatives of the expression.
class Expression {
public:
    static Expression parse(const std::string& text);

    double eval(double x, double y) const;
    Jet2 eval_jet(double x, double y) const;

    const std::string& text() const { return text_; }

    struct Node;
    Expression() = default;

private:
    std::shared_ptr<const Node> root_;
    std::string text_;
};

} // namespace ksub
