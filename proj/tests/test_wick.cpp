#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <complex>
#include <random>

#include "bergman/diff_op.hpp"
#include "bergman/kernel.hpp"

using namespace bergman;

namespace {

ModelSpec model1() {
    return ModelSpec({Scalar::two_pi(Mode::Exact)});
}
ModelSpec model2() {
    return ModelSpec({Scalar::rational(2, 1, Mode::Exact), Scalar::rational(3, 1, Mode::Exact)});
}

// ----------------------------------------------------------------------
// independent action oracle: functions sum c z^alpha zbar^beta G with
// G = exp(-1/4 sum a_i |z_i|^2).  Generators act exactly:
//   z_i, zbar_i: exponent shifts
//   b_i   f = -2 alpha_i (down z_i) + a_i (up zbar_i)
//   b+_i  f =  2 beta_i (down zbar_i)
using WPoly = std::map<std::pair<MultiIndex, MultiIndex>, Scalar>;

void wadd(WPoly& p, const MultiIndex& a, const MultiIndex& b, const Scalar& c) {
    if (c.is_zero()) return;
    auto key = std::make_pair(a, b);
    auto it = p.find(key);
    if (it == p.end()) p.emplace(key, c);
    else {
        it->second += c;
        if (it->second.is_zero()) p.erase(it);
    }
}

WPoly act(const ModelSpec& m, Gen g, const WPoly& p) {
    WPoly out;
    for (const auto& [key, c] : p) {
        const auto& [al, be] = key;
        switch (g.kind) {
            case Gen::Z: wadd(out, al.plus(g.index), be, c); break;
            case Gen::Zbar: wadd(out, al, be.plus(g.index), c); break;
            case Gen::B:
                if (al[g.index] > 0)
                    wadd(out, al.plus(g.index, -1), be,
                         Scalar::integer(-2 * al[g.index], m.mode()) * c);
                wadd(out, al, be.plus(g.index), m.a(g.index) * c);
                break;
            case Gen::Bplus:
                if (be[g.index] > 0)
                    wadd(out, al, be.plus(g.index, -1),
                         Scalar::integer(2 * be[g.index], m.mode()) * c);
                break;
        }
    }
    return out;
}

WPoly act_word(const ModelSpec& m, const std::vector<Gen>& word, const WPoly& p) {
    WPoly cur = p;
    for (auto it = word.rbegin(); it != word.rend(); ++it) cur = act(m, *it, cur);
    return cur;
}

WPoly act_diffop(const ModelSpec& m, const DiffOp& d, const WPoly& p) {
    WPoly out;
    for (const auto& [k, c] : d.terms()) {
        WPoly cur = p;
        for (int i = 0; i < m.n(); ++i)
            for (int r = 0; r < k.bd[i]; ++r) cur = act(m, {Gen::Bplus, i}, cur);
        for (int i = 0; i < m.n(); ++i)
            for (int r = 0; r < k.bg[i]; ++r) cur = act(m, {Gen::B, i}, cur);
        for (const auto& [key, v] : cur) {
            MultiIndex al = key.first, be = key.second;
            for (int i = 0; i < m.n(); ++i) {
                al[i] += k.za[i];
                be[i] += k.zb[i];
            }
            wadd(out, al, be, c.at(0, 0) * v);
        }
    }
    return out;
}

std::vector<Gen> random_word(std::mt19937_64& rng, int n, int len) {
    std::vector<Gen> w;
    for (int i = 0; i < len; ++i) {
        int kind = int(rng() % 4);
        int idx = int(rng() % uint64_t(n));
        w.push_back({Gen::Kind(kind), idx});
    }
    return w;
}

} // namespace

TEST_CASE("normal ordering reproduces the ladder commutators") {
    ModelSpec m = model1();
    Scalar one = Scalar::one(Mode::Exact);
    // b+_1 b_1 = b_1 b+_1 + 2 a_1
    DiffOp lhs = DiffOp::normal_order(m, {{Gen::Bplus, 0}, {Gen::B, 0}}, one);
    DiffOp rhs = DiffOp::normal_order(m, {{Gen::B, 0}, {Gen::Bplus, 0}}, one) +
                 DiffOp::identity(m).scaled(Scalar::integer(2, Mode::Exact) * m.a(0));
    CHECK(lhs == rhs);
    // z_1 b_1 is already normal
    DiffOp zb = DiffOp::normal_order(m, {{Gen::Z, 0}, {Gen::B, 0}}, one);
    CHECK(zb.terms().size() == 1);
    // b_1 z_1 = z_1 b_1 - 2
    DiffOp bz = DiffOp::normal_order(m, {{Gen::B, 0}, {Gen::Z, 0}}, one);
    CHECK(bz == zb - DiffOp::identity(m).scaled(Scalar::integer(2, Mode::Exact)));
    CHECK_THROWS(DiffOp::generator(m, {Gen::B, 5}, one));
}

TEST_CASE("normal ordering agrees with the action oracle on random words") {
    ModelSpec m = model2();
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        auto word = random_word(rng, m.n(), 1 + int(rng() % 5));
        DiffOp d = DiffOp::normal_order(m, word, Scalar::one(Mode::Exact));
        // act on a random low-degree weighted polynomial
        WPoly f;
        for (int t = 0; t < 3; ++t) {
            MultiIndex al(m.n()), be(m.n());
            for (int i = 0; i < m.n(); ++i) {
                al[i] = int(rng() % 3);
                be[i] = int(rng() % 3);
            }
            wadd(f, al, be, Scalar::integer(1 + long(rng() % 5), Mode::Exact));
        }
        CHECK(act_word(m, word, f) == act_diffop(m, d, f));
    }
}

TEST_CASE("operator product is associative and matches composed actions") {
    ModelSpec m = model2();
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        DiffOp A = DiffOp::normal_order(m, random_word(rng, m.n(), 1 + int(rng() % 4)),
                                        Scalar::one(Mode::Exact));
        DiffOp B = DiffOp::normal_order(m, random_word(rng, m.n(), 1 + int(rng() % 4)),
                                        Scalar::one(Mode::Exact));
        WPoly f;
        MultiIndex al(m.n()), be(m.n());
        al[0] = 1;
        be[m.n() - 1] = 2;
        wadd(f, al, be, Scalar::one(Mode::Exact));
        // commutator computed by renormal-ordered product vs direct action
        DiffOp c = commutator(A, B);
        WPoly lhs = act_diffop(m, c, f);
        WPoly ab = act_diffop(m, A, act_diffop(m, B, f));
        WPoly ba = act_diffop(m, B, act_diffop(m, A, f));
        WPoly rhs;
        for (const auto& [k, v] : ab) wadd(rhs, k.first, k.second, v);
        for (const auto& [k, v] : ba) wadd(rhs, k.first, k.second, -v);
        CHECK(lhs == rhs);
    }
}

TEST_CASE("kernel actions of the ladder operators") {
    ModelSpec m = model1();
    auto pn = KernelPoly<Coef>::pn(m);
    Scalar one = Scalar::one(Mode::Exact);

    // b+_1 P^N = 0
    DiffOp bp = DiffOp::generator(m, {Gen::Bplus, 0}, one);
    CHECK(bp.apply(pn).is_zero());
    // identity
    CHECK(DiffOp::identity(m).apply(pn).terms() == pn.terms());
    // L0 (zbar_1 P^N) = 2 a_1 (zbar_1 - zbar'_1) P^N
    DiffOp l0 = DiffOp::l0(m);
    KernelPoly<Coef> zbar_pn = DiffOp::generator(m, {Gen::Zbar, 0}, one).apply(pn);
    KernelPoly<Coef> got = l0.apply(zbar_pn);
    KernelPoly<Coef> want(m);
    Scalar c = Scalar::integer(2, Mode::Exact) * m.a(0);
    want.add_term(KernelKey{MultiIndex{0}, MultiIndex{1}, MultiIndex{0}, MultiIndex{0}},
                  Coef::scalar(c, 1));
    want.add_term(KernelKey{MultiIndex{0}, MultiIndex{0}, MultiIndex{0}, MultiIndex{1}},
                  Coef::scalar(-c, 1));
    CHECK(got.terms() == want.terms());
}

TEST_CASE("ladder normal form of kernels") {
    ModelSpec m = model1();
    auto pn = KernelPoly<Coef>::pn(m);
    Scalar one = Scalar::one(Mode::Exact);

    // P^N is its own beta = 0 part
    auto nk = wick::to_normal(pn);
    REQUIRE(nk.terms().size() == 1);
    CHECK(nk.terms().begin()->first.beta.is_zero());
    CHECK(wick::from_normal(nk).terms() == pn.terms());

    // zbar_1 P^N = (1/a_1) b_1 P^N + zbar'_1 P^N
    KernelPoly<Coef> zb(m);
    zb.add_term(KernelKey{MultiIndex{0}, MultiIndex{1}, MultiIndex{0}, MultiIndex{0}},
                Coef::identity(1, Mode::Exact));
    auto nzb = wick::to_normal(zb);
    REQUIRE(nzb.terms().size() == 2);
    Coef inv_a = Coef::scalar(Scalar::one(Mode::Exact) / m.a(0), 1);
    CHECK(nzb.terms().at(NormalKey{MultiIndex{1}, MultiIndex{0}, MultiIndex{0},
                                   MultiIndex{0}}) == inv_a);
    CHECK(nzb.terms().at(NormalKey{MultiIndex{0}, MultiIndex{0}, MultiIndex{0},
                                   MultiIndex{1}}) == Coef::identity(1, Mode::Exact));

    // z_1 zbar_1 P^N = (1/a_1) b_1 (z_1 P^N) + (2/a_1) P^N + zbar'_1 z_1 P^N
    KernelPoly<Coef> zzb(m);
    zzb.add_term(KernelKey{MultiIndex{1}, MultiIndex{1}, MultiIndex{0}, MultiIndex{0}},
                 Coef::identity(1, Mode::Exact));
    auto nzzb = wick::to_normal(zzb);
    REQUIRE(nzzb.terms().size() == 3);
    CHECK(nzzb.terms().at(NormalKey{MultiIndex{1}, MultiIndex{1}, MultiIndex{0},
                                    MultiIndex{0}}) == inv_a);
    CHECK(nzzb.terms().at(NormalKey{MultiIndex{0}, MultiIndex{0}, MultiIndex{0},
                                    MultiIndex{0}}) ==
          Coef::scalar(Scalar::integer(2, Mode::Exact) / m.a(0), 1));
    CHECK(nzzb.terms().at(NormalKey{MultiIndex{0}, MultiIndex{1}, MultiIndex{0},
                                    MultiIndex{1}}) == Coef::identity(1, Mode::Exact));

    // round trip on random kernels
    std::mt19937_64 rng(3);
    ModelSpec m2 = model2();
    for (int trial = 0; trial < 20; ++trial) {
        KernelPoly<Coef> k(m2);
        for (int t = 0; t < 4; ++t) {
            KernelKey key{MultiIndex(2), MultiIndex(2), MultiIndex(2), MultiIndex(2)};
            for (int i = 0; i < 2; ++i) {
                key.za[i] = int(rng() % 3);
                key.zb[i] = int(rng() % 3);
                key.wa[i] = int(rng() % 2);
                key.wb[i] = int(rng() % 2);
            }
            k.add_term(key, Coef::scalar(Scalar::integer(long(rng() % 7) - 3, Mode::Exact), 1));
        }
        CHECK(wick::from_normal(wick::to_normal(k)).terms() == k.terms());
    }
}

TEST_CASE("projection and inverse on the orthocomplement") {
    ModelSpec m = model1();
    auto pn = KernelPoly<Coef>::pn(m);
    Scalar one = Scalar::one(Mode::Exact);

    // projector is idempotent and reproduces P^N
    CHECK(wick::project_N(pn).terms() == pn.terms());
    CHECK(wick::project_N(wick::project_N(pn)).terms() == pn.terms());

    // P^N b_1 Q P^N = 0
    KernelPoly<Coef> bq = DiffOp::generator(m, {Gen::B, 0}, one)
                              .apply(DiffOp::generator(m, {Gen::Z, 0}, one).apply(pn));
    CHECK(wick::project_N(bq).is_zero());

    // project(zbar_1 z'_1 P^N) = zbar'_1 z'_1 P^N
    KernelPoly<Coef> k(m);
    k.add_term(KernelKey{MultiIndex{0}, MultiIndex{1}, MultiIndex{1}, MultiIndex{0}},
               Coef::identity(1, Mode::Exact));
    KernelPoly<Coef> proj = wick::project_N(k);
    KernelPoly<Coef> want(m);
    want.add_term(KernelKey{MultiIndex{0}, MultiIndex{0}, MultiIndex{1}, MultiIndex{1}},
                  Coef::identity(1, Mode::Exact));
    CHECK(proj.terms() == want.terms());

    // inv_L0_perp: kernel part annihilated, eigenvalue division elsewhere
    CHECK(wick::inv_L0_perp(pn).is_zero());
    KernelPoly<Coef> b1pn = DiffOp::generator(m, {Gen::B, 0}, one).apply(pn);
    KernelPoly<Coef> inv = wick::inv_L0_perp(b1pn);
    Scalar half_inv = Scalar::one(Mode::Exact) / (Scalar::integer(2, Mode::Exact) * m.a(0));
    CHECK(inv.terms() == b1pn.scaled(half_inv).terms());

    ModelSpec m2 = model2();
    auto pn2 = KernelPoly<Coef>::pn(m2);
    KernelPoly<Coef> b12 =
        DiffOp::generator(m2, {Gen::B, 0}, one)
            .apply(DiffOp::generator(m2, {Gen::B, 1}, one).apply(pn2));
    Scalar ev = Scalar::integer(2, Mode::Exact) * (m2.a(0) + m2.a(1));
    CHECK(wick::inv_L0_perp(b12).terms() == b12.scaled(Scalar::one(Mode::Exact) / ev).terms());
}

TEST_CASE("eigen equation for ladder levels") {
    ModelSpec m = model2();
    DiffOp l0 = DiffOp::l0(m);
    auto pn = KernelPoly<Coef>::pn(m);
    Scalar one = Scalar::one(Mode::Exact);
    for (int b1 = 0; b1 <= 2; ++b1)
        for (int b2 = 0; b2 + b1 <= 4; ++b2) {
            MultiIndex beta{b1, b2};
            NormalKernel<Coef> nk(m);
            nk.add_term(NormalKey{beta, MultiIndex{1, 0}, MultiIndex{0, 0}, MultiIndex{0, 1}},
                        Coef::identity(1, Mode::Exact));
            KernelPoly<Coef> k = wick::from_normal(nk);
            KernelPoly<Coef> lk = l0.apply(k);
            CHECK(lk.terms() == k.scaled(m.eigenvalue(beta)).terms());
        }
}

TEST_CASE("bplus annihilates holomorphic states") {
    ModelSpec m = model2();
    auto pn = KernelPoly<Coef>::pn(m);
    Scalar one = Scalar::one(Mode::Exact);
    KernelPoly<Coef> k(m);
    k.add_term(KernelKey{MultiIndex{2, 1}, MultiIndex{0, 0}, MultiIndex{1, 0}, MultiIndex{0, 2}},
               Coef::identity(1, Mode::Exact));
    for (int i = 0; i < 2; ++i)
        CHECK(DiffOp::generator(m, {Gen::Bplus, i}, one).apply(k).is_zero());
}

TEST_CASE("kernel adjoint is an involution fixing P^N") {
    ModelSpec m = model2();
    auto pn = KernelPoly<Coef>::pn(m);
    CHECK(pn.adjoint().terms() == pn.terms());
    KernelPoly<Coef> z1 = DiffOp::generator(m, {Gen::Z, 0}, Scalar::one(Mode::Exact)).apply(pn);
    KernelPoly<Coef> want(m);
    want.add_term(KernelKey{MultiIndex{0, 0}, MultiIndex{0, 0}, MultiIndex{0, 0},
                            MultiIndex{1, 0}},
                  Coef::identity(1, Mode::Exact));
    CHECK(z1.adjoint().terms() == want.terms());
    CHECK(z1.adjoint().adjoint().terms() == z1.terms());
}

TEST_CASE("adjoint consistency on a float grid") {
    ModelSpec m({Scalar::from_complex({2.0, 0.0}), Scalar::from_complex({5.0, 0.0})});
    auto pn = KernelPoly<Coef>::pn(m);
    Scalar one = Scalar::one(Mode::Float);
    DiffOp d = DiffOp::normal_order(
        m, {{Gen::B, 0}, {Gen::Z, 1}, {Gen::Zbar, 0}, {Gen::Bplus, 1}}, one);
    KernelPoly<Coef> k = d.apply(DiffOp::generator(m, {Gen::Zbar, 1}, one).apply(pn));
    KernelPoly<Coef> ka = k.adjoint();
    std::mt19937_64 rng(5);
    auto rnd = [&rng] { return double(rng() % 1000) / 500.0 - 1.0; };
    for (int t = 0; t < 12; ++t) {
        std::vector<double> Z = {rnd(), rnd(), rnd(), rnd()};
        std::vector<double> W = {rnd(), rnd(), rnd(), rnd()};
        std::complex<double> lhs = wick::eval_kernel(ka, Z, W);
        std::complex<double> rhs = std::conj(wick::eval_kernel(k, W, Z));
        CHECK(std::abs(lhs - rhs) < 1e-12 * (1 + std::abs(lhs)));
    }
}

TEST_CASE("gaussian kernel values") {
    // normalized value at the origin
    ModelSpec mk = ModelSpec::kahler(1, Mode::Float);
    CHECK(wick::pn_value(mk, {0, 0}, {0, 0}).real() == doctest::Approx(1.0).epsilon(1e-14));
    // diagonal positivity
    CHECK(wick::pn_value(mk, {0.3, -0.2}, {0.3, -0.2}).real() > 0);
    // off-origin value
    CHECK(std::abs(wick::pn_value(mk, {1, 0}, {0, 0}) - std::exp(-kPi / 2.0)) < 1e-14);
    // eigenfunction-sum truncation of the reproducing kernel
    double a = 2 * kPi;
    std::vector<double> Z = {0.7, -0.4}, W = {-0.2, 0.5};
    std::complex<double> z(Z[0], Z[1]), w(W[0], W[1]);
    std::complex<double> sum = 0;
    double fact = 1.0;
    for (int b = 0; b < 64; ++b) {
        if (b > 0) fact *= b;
        double norm2 = std::pow(a, b + 1) / (2 * kPi * std::pow(2.0, b) * fact);
        sum += norm2 * std::pow(z, b) * std::pow(std::conj(w), b) *
               std::exp(-0.25 * a * (std::norm(z) + std::norm(w)));
        // std::pow of complex handles b = 0 correctly
    }
    CHECK(std::abs(sum - wick::pn_value(mk, Z, W)) < 1e-12);
}

TEST_CASE("values at the origin") {
    ModelSpec m = model1();
    auto pn = KernelPoly<Coef>::pn(m);
    Scalar one = Scalar::one(Mode::Exact);
    CHECK(wick::eval_at_origin(pn) == Coef::identity(1, Mode::Exact));
    // b_1 z_1 P^N at the origin: -2
    DiffOp bz = DiffOp::normal_order(m, {{Gen::B, 0}, {Gen::Z, 0}}, one);
    CHECK(wick::eval_at_origin(bz.apply(pn)) ==
          Coef::scalar(Scalar::integer(-2, Mode::Exact), 1));
    // b_1 b_2 z_1 z_2 P^N at the origin: 4
    ModelSpec m2 = model2();
    auto pn2 = KernelPoly<Coef>::pn(m2);
    DiffOp w = DiffOp::normal_order(
        m2, {{Gen::B, 0}, {Gen::B, 1}, {Gen::Z, 0}, {Gen::Z, 1}}, one);
    CHECK(wick::eval_at_origin(w.apply(pn2)) ==
          Coef::scalar(Scalar::integer(4, Mode::Exact), 1));
}

TEST_CASE("model spectrum enumeration") {
    ModelSpec m = model1(); // a = 2 pi
    // cutoff 10 pi
    auto sp = wick::model_spectrum(m, Scalar::monomial(Rat(10), 1));
    REQUIRE(sp.size() == 3);
    CHECK(sp[0].first.is_zero());
    CHECK(sp[0].second == 1);
    CHECK(sp[1].first == Scalar::monomial(Rat(4), 1));
    CHECK(sp[2].first == Scalar::monomial(Rat(8), 1));

    auto sp0 = wick::model_spectrum(m, Scalar::zero(Mode::Exact));
    REQUIRE(sp0.size() == 1);
    CHECK(sp0[0].first.is_zero());

    ModelSpec m2({Scalar::two_pi(Mode::Exact),
                  Scalar::two_pi(Mode::Exact) * Scalar::integer(2, Mode::Exact)});
    auto sp2 = wick::model_spectrum(m2, Scalar::monomial(Rat(9), 1));
    REQUIRE(sp2.size() == 3);
    CHECK(sp2[2].first == Scalar::monomial(Rat(8), 1));
    CHECK(sp2[2].second == 2); // realized by (2,0) and (0,1)
}

TEST_CASE("projector composed with multiplication matches quadrature") {
    // n = 1 float model: P^N (z^a zbar^b .) P^N vs a 2-D trapezoid quadrature
    double av = 2 * kPi;
    ModelSpec m({Scalar::from_complex({av, 0.0})});
    auto pn = KernelPoly<Coef>::pn(m);
    Scalar one = Scalar::one(Mode::Float);
    std::vector<double> Z = {0.45, -0.3}, W = {-0.25, 0.15};
    for (int ea = 0; ea + 0 <= 4; ++ea)
        for (int eb = 0; ea + eb <= 4; ++eb) {
            KernelPoly<Coef> mult(m);
            mult.add_term(KernelKey{MultiIndex{ea}, MultiIndex{eb}, MultiIndex{0},
                                    MultiIndex{0}},
                          Coef::identity(1, Mode::Float));
            KernelPoly<Coef> sym = wick::project_N(mult);
            std::complex<double> lhs = wick::eval_kernel(sym, Z, W);
            // quadrature of int P^N(Z,V) v^ea vbar^eb P^N(V,W) dV
            std::complex<double> q = 0;
            const double h = 0.05, box = 6.0;
            for (double x = -box; x <= box; x += h)
                for (double y = -box; y <= box; y += h) {
                    std::complex<double> v(x, y);
                    q += wick::pn_value(m, Z, {x, y}) * std::pow(v, ea) *
                         std::pow(std::conj(v), eb) * wick::pn_value(m, {x, y}, W) * h * h;
                }
            CHECK(std::abs(lhs - q) < 1e-8 * (1.0 + std::abs(q)));
        }
}
