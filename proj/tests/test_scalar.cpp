#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bergman/rational_lambda.hpp"
#include "bergman/scalar.hpp"

using namespace bergman;

TEST_CASE("rational complex arithmetic") {
    Rat a(1, 2), b(3, 4);
    CHECK(a + b == Rat(5, 4));
    CHECK(a * b == Rat(3, 8));
    Rat i = Rat::i_times(mpq_class(1));
    CHECK(i * i == Rat(-1));
    CHECK((a / b) == Rat(2, 3));
    CHECK(i.conj() == -i);
}

TEST_CASE("exact scalars form a ring with PI grading") {
    Scalar two_pi = Scalar::two_pi(Mode::Exact);
    Scalar x = two_pi * two_pi; // 4 PI^2
    CHECK(x == Scalar::monomial(Rat(4), 2));
    Scalar s = two_pi + Scalar::one(Mode::Exact);
    CHECK(!s.is_monomial());
    CHECK((s - s).is_zero());
    // division by a monomial
    CHECK(x / two_pi == two_pi);
    CHECK(s / Scalar::two_pi(Mode::Exact) ==
          Scalar::rational(1, 1, Mode::Exact) + Scalar::monomial(Rat(1, 2), -1));
    // division by a non-monomial must be rejected
    CHECK_THROWS_AS(x / s, std::domain_error);
    CHECK_THROWS_AS(x / Scalar::zero(Mode::Exact), std::domain_error);
}

TEST_CASE("float scalars compare with relative tolerance") {
    Scalar a = Scalar::from_complex({1.0, 0.0});
    Scalar b = Scalar::from_complex({1.0 + 1e-12, 0.0});
    CHECK(a == b);
    Scalar c = Scalar::from_complex({1.0 + 1e-6, 0.0});
    CHECK(a != c);
    CHECK(std::abs(Scalar::two_pi(Mode::Float).to_double() - 2 * kPi) < 1e-15);
}

TEST_CASE("exact scalar evaluates at PI = pi") {
    Scalar s = Scalar::two_pi(Mode::Exact) + Scalar::rational(1, 2, Mode::Exact);
    CHECK(std::abs(s.to_double() - (2 * kPi + 0.5)) < 1e-14);
}

TEST_CASE("coef matrices multiply and adjoint") {
    Coef m(2, Mode::Exact);
    m.at(0, 1) = Scalar::imaginary_unit(Mode::Exact);
    Coef mt = m.adjoint();
    CHECK(mt.at(1, 0) == -Scalar::imaginary_unit(Mode::Exact));
    Coef p = m * mt;
    CHECK(p.at(0, 0) == Scalar::one(Mode::Exact));
    CHECK(p.at(1, 1).is_zero());
    Coef id = Coef::identity(2, Mode::Exact);
    CHECK(id.pow(3) == id);
}

TEST_CASE("rational lambda residues") {
    Mode m = Mode::Exact;
    auto one = RatLam(Coef::identity(1, m));
    Scalar zero = Scalar::zero(m);
    Scalar two_a = Scalar::integer(4, m); // a = 2, eigenvalue 2a = 4

    // residue of 1/lambda at 0 is 1
    RatLam inv_l = one.over_linear(zero);
    CHECK(inv_l.residue_at_zero(0, 1, m).at(0, 0) == Scalar::one(m));
    // residue of lambda * (1/lambda^2) is 1
    RatLam inv_l2 = inv_l.over_linear(zero);
    CHECK(inv_l2.pole_at_zero() == 2);
    CHECK(inv_l2.residue_at_zero(1, 1, m).at(0, 0) == Scalar::one(m));
    // 1/(lambda (lambda - 2a)) has residue -1/(2a) at 0
    RatLam r = inv_l.over_linear(two_a);
    CHECK(r.residue_at_zero(0, 1, m).at(0, 0) == Scalar::rational(-1, 4, m));
    // no pole -> no residue
    RatLam h = one.over_linear(two_a);
    CHECK(h.residue_at_zero(0, 1, m).at(0, 0).is_zero());
    // double pole at an eigenvalue accumulates multiplicity
    RatLam rr = h.over_linear(two_a);
    CHECK(rr.roots().at(two_a) == 2);
}

TEST_CASE("rational lambda addition reduces common factors") {
    Mode m = Mode::Exact;
    auto one = RatLam(Coef::identity(1, m));
    Scalar zero = Scalar::zero(m);
    RatLam a = one.over_linear(zero); // 1/l
    RatLam b = -one.over_linear(zero);
    RatLam s = a + b;
    CHECK(s.is_zero());
    // 1/l + 1 = (1 + l)/l keeps the pole
    RatLam t = a + one;
    CHECK(t.pole_at_zero() == 1);
    CHECK(t.residue_at_zero(0, 1, m).at(0, 0) == Scalar::one(m));
}
