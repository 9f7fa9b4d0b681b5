#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "whitham/expression.hpp"

using whitham::Expression;
using whitham::ValidationError;

TEST(Expression, ArithmeticAndPrecedence) {
    const auto e = Expression::parse("1 + 2*x^2 - x/4", "x");
    EXPECT_DOUBLE_EQ(e(2.0), 1.0 + 8.0 - 0.5);
    EXPECT_DOUBLE_EQ(Expression::parse("-x^2", "x")(3.0), -9.0);
    EXPECT_DOUBLE_EQ(Expression::parse("2^3^2", "x")(0.0), 512.0);
    EXPECT_DOUBLE_EQ(Expression::parse("x**3", "x")(2.0), 8.0);
    EXPECT_DOUBLE_EQ(Expression::parse("(1+x)*(1-x)", "x")(0.5), 0.75);
}

TEST(Expression, ConstantsAndFunctions) {
    EXPECT_DOUBLE_EQ(Expression::parse("pi", "x")(0.0), std::numbers::pi);
    EXPECT_DOUBLE_EQ(Expression::parse("e", "x")(0.0), std::numbers::e);
    EXPECT_DOUBLE_EQ(Expression::parse("sqrt(tanh(xi)/xi)", "xi")(1.0), std::sqrt(std::tanh(1.0)));
    EXPECT_DOUBLE_EQ(Expression::parse("pow(x, 0.5)", "x")(9.0), 3.0);
    EXPECT_DOUBLE_EQ(Expression::parse("abs(x)", "x")(-2.5), 2.5);
    EXPECT_DOUBLE_EQ(Expression::parse("cos(x)+0.5*cos(2*x)", "x")(0.0), 1.5);
}

TEST(Expression, SecondOrderJet) {
    const auto e = Expression::parse("sin(x)*exp(x)", "x");
    const double x = 0.7;
    const auto j = e.jet(x);
    EXPECT_NEAR(j.v, std::sin(x) * std::exp(x), 1e-15);
    EXPECT_NEAR(j.d, (std::sin(x) + std::cos(x)) * std::exp(x), 1e-14);
    EXPECT_NEAR(j.dd, 2.0 * std::cos(x) * std::exp(x), 1e-14);

    const auto p = Expression::parse("(1+x^2)^(1/4)", "x").jet(2.0);
    EXPECT_NEAR(p.d, 0.5 * 2.0 * std::pow(5.0, -0.75), 1e-15);
}

TEST(Expression, Errors) {
    EXPECT_THROW(Expression::parse("", "x"), ValidationError);
    EXPECT_THROW(Expression::parse("1 +", "x"), ValidationError);
    EXPECT_THROW(Expression::parse("y + 1", "x"), ValidationError);
    EXPECT_THROW(Expression::parse("foo(x)", "x"), ValidationError);
    EXPECT_THROW(Expression::parse("(x", "x"), ValidationError);
    EXPECT_THROW(Expression::parse("x)", "x"), ValidationError);
    EXPECT_THROW(Expression::parse("pow(x)", "x"), ValidationError);
    try {
        Expression::parse("x + $", "x");
        FAIL();
    } catch (const ValidationError& err) {
        EXPECT_NE(std::string(err.what()).find("4"), std::string::npos) << err.what();
    }
}
