#ifndef BERGMAN_KERNEL_HPP
#define BERGMAN_KERNEL_HPP

#include <complex>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "bergman/model_spec.hpp"
#include "bergman/multi_index.hpp"
#include "bergman/rational_lambda.hpp"
#include "bergman/scalar.hpp"

namespace bergman {

/// Exponents of a monomial z^za zbar^zb z'^wa zbar'^wb.
struct KernelKey {
    MultiIndex za, zb, wa, wb;
    friend bool operator<(const KernelKey& x, const KernelKey& y) {
        if (!(x.za == y.za)) return x.za < y.za;
        if (!(x.zb == y.zb)) return x.zb < y.zb;
        if (!(x.wa == y.wa)) return x.wa < y.wa;
        return x.wb < y.wb;
    }
    friend bool operator==(const KernelKey& x, const KernelKey& y) {
        return x.za == y.za && x.zb == y.zb && x.wa == y.wa && x.wb == y.wb;
    }
    int degree() const { return za.total() + zb.total() + wa.total() + wb.total(); }
    bool is_origin_term() const { return degree() == 0; }
};

/// Term b^beta (z^h z'^wa zbar'^wb P^N); no zbar exponents by construction.
struct NormalKey {
    MultiIndex beta, h, wa, wb;
    friend bool operator<(const NormalKey& x, const NormalKey& y) {
        if (!(x.beta == y.beta)) return x.beta < y.beta;
        if (!(x.h == y.h)) return x.h < y.h;
        if (!(x.wa == y.wa)) return x.wa < y.wa;
        return x.wb < y.wb;
    }
    friend bool operator==(const NormalKey& x, const NormalKey& y) {
        return x.beta == y.beta && x.h == y.h && x.wa == y.wa && x.wb == y.wb;
    }
};

template <class C> class NormalKernel;

/// Polynomial kernel Q(z, zbar, z', zbar') * P^N(Z,Z') over a fixed model.
/// The coefficient ring C is either Coef (plain kernels) or RatLam
/// (resolvent-parameter dependent kernels).
template <class C>
class KernelPoly {
public:
    explicit KernelPoly(ModelSpec model) : model_(std::move(model)) {}

    static KernelPoly pn(const ModelSpec& model) {
        KernelPoly k(model);
        KernelKey key{MultiIndex(model.n()), MultiIndex(model.n()), MultiIndex(model.n()),
                      MultiIndex(model.n())};
        k.t_.emplace(key, unit_coef(model));
        return k;
    }

    static KernelPoly zero(const ModelSpec& model) { return KernelPoly(model); }

    const ModelSpec& model() const { return model_; }
    const std::map<KernelKey, C>& terms() const { return t_; }
    bool is_zero() const { return t_.empty(); }
    size_t term_count() const { return t_.size(); }

    int degree() const {
        int d = 0;
        for (const auto& [k, c] : t_) d = std::max(d, k.degree());
        return d;
    }

    void add_term(const KernelKey& key, const C& c) {
        if (c.is_zero()) return;
        auto it = t_.find(key);
        if (it == t_.end()) t_.emplace(key, c);
        else {
            it->second += c;
            if (it->second.is_zero()) t_.erase(it);
        }
    }

    KernelPoly& operator+=(const KernelPoly& o) {
        check_model(o);
        for (const auto& [k, c] : o.t_) add_term(k, c);
        return *this;
    }
    friend KernelPoly operator+(KernelPoly a, const KernelPoly& b) { a += b; return a; }
    KernelPoly operator-() const {
        KernelPoly r(model_);
        for (const auto& [k, c] : t_) r.t_.emplace(k, -c);
        return r;
    }
    friend KernelPoly operator-(KernelPoly a, const KernelPoly& b) { a += -b; return a; }

    KernelPoly scaled(const Scalar& s) const {
        KernelPoly r(model_);
        for (const auto& [k, c] : t_) r.add_term(k, mul_scalar(s, c));
        return r;
    }
    KernelPoly left_mul(const Coef& a) const {
        KernelPoly r(model_);
        for (const auto& [k, c] : t_) r.add_term(k, mul_left(a, c));
        return r;
    }

    /// K^*(Z,Z') = conj(K(Z',Z))^T; exponent groups swap (za,wb), (zb,wa).
    KernelPoly adjoint() const {
        KernelPoly r(model_);
        for (const auto& [k, c] : t_) {
            KernelKey nk{k.wb, k.wa, k.zb, k.za};
            r.add_term(nk, adjoint_coef(c));
        }
        return r;
    }

    /// Drop float-mode coefficients below 1e-14 of the largest one.
    void prune_float() {
        if (model_.mode() != Mode::Float || t_.empty()) return;
        double mx = 0;
        for (const auto& [k, c] : t_) mx = std::max(mx, coef_max_abs(c));
        double cut = 1e-14 * mx;
        for (auto it = t_.begin(); it != t_.end();)
            it = (coef_max_abs(it->second) < cut) ? t_.erase(it) : std::next(it);
    }

    std::string debug_dump() const {
        std::ostringstream os;
        for (const auto& [k, c] : t_) {
            os << coef_str(c) << " * z^";
            dump_mi(os, k.za);
            os << " zbar^";
            dump_mi(os, k.zb);
            os << " z'^";
            dump_mi(os, k.wa);
            os << " zbar'^";
            dump_mi(os, k.wb);
            os << "\n";
        }
        return os.str();
    }

    void check_model(const KernelPoly& o) const {
        if (!(model_ == o.model_)) throw std::invalid_argument("KernelPoly: model mismatch");
    }

private:
    static C unit_coef(const ModelSpec& model);
    static double coef_max_abs(const Coef& c) { return c.max_abs(); }
    static double coef_max_abs(const RatLam&) { return 1.0; }
    static std::string coef_str(const Coef& c) { return c.str(); }
    static std::string coef_str(const RatLam&) { return "<ratlam>"; }
    static void dump_mi(std::ostringstream& os, const MultiIndex& m) {
        os << "(";
        for (int i = 0; i < m.size(); ++i) os << (i ? " " : "") << m[i];
        os << ")";
    }

    ModelSpec model_;
    std::map<KernelKey, C> t_;
};

/// Kernel in ladder normal form: sum over beta of b^beta (Q_beta P^N) with
/// Q_beta holomorphic in z.  Each beta term is an L0 eigenvector family
/// with eigenvalue 2 beta.a.
template <class C>
class NormalKernel {
public:
    explicit NormalKernel(ModelSpec model) : model_(std::move(model)) {}

    const ModelSpec& model() const { return model_; }
    const std::map<NormalKey, C>& terms() const { return t_; }
    bool is_zero() const { return t_.empty(); }

    void add_term(const NormalKey& key, const C& c) {
        if (c.is_zero()) return;
        auto it = t_.find(key);
        if (it == t_.end()) t_.emplace(key, c);
        else {
            it->second += c;
            if (it->second.is_zero()) t_.erase(it);
        }
    }

    NormalKernel& operator+=(const NormalKernel& o) {
        for (const auto& [k, c] : o.t_) add_term(k, c);
        return *this;
    }

    /// Keep the beta = 0 part (the image of P^N); idempotent.
    NormalKernel project_N() const {
        NormalKernel r(model_);
        for (const auto& [k, c] : t_)
            if (k.beta.is_zero()) r.t_.emplace(k, c);
        return r;
    }

    /// Drop beta = 0 and divide each beta term by its eigenvalue 2 beta.a.
    NormalKernel inv_L0_perp() const {
        NormalKernel r(model_);
        for (const auto& [k, c] : t_) {
            if (k.beta.is_zero()) continue;
            r.t_.emplace(k, div_scalar(c, model_.eigenvalue(k.beta)));
        }
        return r;
    }

    /// Multiply each beta term by its eigenvalue (the action of L0).
    NormalKernel apply_L0() const {
        NormalKernel r(model_);
        for (const auto& [k, c] : t_) {
            if (k.beta.is_zero()) continue;
            r.t_.emplace(k, mul_scalar(model_.eigenvalue(k.beta), c));
        }
        return r;
    }

private:
    ModelSpec model_;
    std::map<NormalKey, C> t_;
};

template <>
inline Coef KernelPoly<Coef>::unit_coef(const ModelSpec& model) {
    return Coef::identity(model.rank(), model.mode());
}

template <>
inline RatLam KernelPoly<RatLam>::unit_coef(const ModelSpec& model) {
    return RatLam(Coef::identity(model.rank(), model.mode()));
}

namespace wick {

/// Rewrite Q P^N as sums of b^beta (g(z, z', zbar') P^N): each zbar_i factor
/// is eliminated through zbar_i (g P^N) = (1/a_i) b_i (g P^N)
///                                      + (2/a_i) (dg/dz_i) P^N + zbar'_i g P^N,
/// which is Eq. b_i P^N = a_i (zbar_i - zbar'_i) P^N commuted past g.
template <class C>
NormalKernel<C> to_normal(const KernelPoly<C>& k) {
    const ModelSpec& model = k.model();
    const int n = model.n();
    NormalKernel<C> out(model);
    for (const auto& [key, coef] : k.terms()) {
        std::map<NormalKey, C> cur;
        cur.emplace(NormalKey{MultiIndex(n), key.za, key.wa, key.wb}, coef);
        for (int i = 0; i < n; ++i) {
            for (int rep = 0; rep < key.zb[i]; ++rep) {
                std::map<NormalKey, C> next;
                auto put = [&next](const NormalKey& nk, C c) {
                    if (c.is_zero()) return;
                    auto it = next.find(nk);
                    if (it == next.end()) next.emplace(nk, std::move(c));
                    else {
                        it->second += c;
                        if (it->second.is_zero()) next.erase(it);
                    }
                };
                for (const auto& [nk, c] : cur) {
                    const Scalar& ai = model.a(i);
                    put(NormalKey{nk.beta.plus(i), nk.h, nk.wa, nk.wb}, div_scalar(c, ai));
                    if (nk.h[i] > 0) {
                        Scalar f = Scalar::integer(2 * nk.h[i], model.mode());
                        put(NormalKey{nk.beta, nk.h.plus(i, -1), nk.wa, nk.wb},
                            div_scalar(mul_scalar(f, c), ai));
                    }
                    put(NormalKey{nk.beta, nk.h, nk.wa, nk.wb.plus(i)}, c);
                }
                cur = std::move(next);
            }
        }
        for (const auto& [nk, c] : cur) out.add_term(nk, c);
    }
    return out;
}

/// Expand b^beta back onto monomials: b_i (Q P^N) = (-2 dQ/dz_i
/// + a_i (zbar_i - zbar'_i) Q) P^N.
template <class C>
KernelPoly<C> from_normal(const NormalKernel<C>& nk) {
    const ModelSpec& model = nk.model();
    const int n = model.n();
    KernelPoly<C> out(model);
    for (const auto& [key, coef] : nk.terms()) {
        std::map<KernelKey, C> cur;
        cur.emplace(KernelKey{key.h, MultiIndex(n), key.wa, key.wb}, coef);
        for (int i = 0; i < n; ++i) {
            for (int rep = 0; rep < key.beta[i]; ++rep) {
                std::map<KernelKey, C> next;
                auto put = [&next](const KernelKey& kk, C c) {
                    if (c.is_zero()) return;
                    auto it = next.find(kk);
                    if (it == next.end()) next.emplace(kk, std::move(c));
                    else {
                        it->second += c;
                        if (it->second.is_zero()) next.erase(it);
                    }
                };
                for (const auto& [kk, c] : cur) {
                    const Scalar& ai = model.a(i);
                    if (kk.za[i] > 0) {
                        Scalar f = Scalar::integer(-2 * kk.za[i], model.mode());
                        put(KernelKey{kk.za.plus(i, -1), kk.zb, kk.wa, kk.wb},
                            mul_scalar(f, c));
                    }
                    put(KernelKey{kk.za, kk.zb.plus(i), kk.wa, kk.wb}, mul_scalar(ai, c));
                    put(KernelKey{kk.za, kk.zb, kk.wa, kk.wb.plus(i)}, mul_scalar(-ai, c));
                }
                cur = std::move(next);
            }
        }
        for (const auto& [kk, c] : cur) out.add_term(kk, c);
    }
    return out;
}

/// P^N . K : keep the ladder-kernel part of K.
template <class C>
KernelPoly<C> project_N(const KernelPoly<C>& k) {
    return from_normal(to_normal(k).project_N());
}

/// L0^{-1} P^{N perp} . K.
template <class C>
KernelPoly<C> inv_L0_perp(const KernelPoly<C>& k) {
    return from_normal(to_normal(k).inv_L0_perp());
}

/// L0 . K.
template <class C>
KernelPoly<C> apply_L0_via_normal(const KernelPoly<C>& k) {
    return from_normal(to_normal(k).apply_L0());
}

/// Constant term of Q: K(0,0) equals this times P^N(0,0).
inline Coef eval_at_origin(const KernelPoly<Coef>& k) {
    for (const auto& [key, c] : k.terms())
        if (key.is_origin_term()) return c;
    return Coef(k.model().rank(), k.model().mode());
}

/// Gaussian factor P^N(Z,Z') of Eq. (g7), float evaluation.  Z, Z' are real
/// 2n-vectors, z_i = Z_{2i-1} + i Z_{2i}.
inline std::complex<double> pn_value(const ModelSpec& model,
                                     const std::vector<double>& Z,
                                     const std::vector<double>& Zp) {
    const int n = model.n();
    std::complex<double> expo = 0;
    double pref = 1.0;
    for (int i = 0; i < n; ++i) {
        double ai = model.a(i).to_double();
        pref *= ai / (2.0 * kPi);
        std::complex<double> zi(Z[2 * i], Z[2 * i + 1]);
        std::complex<double> wi(Zp[2 * i], Zp[2 * i + 1]);
        expo += -0.25 * ai * (std::norm(zi) + std::norm(wi) - 2.0 * zi * std::conj(wi));
    }
    return pref * std::exp(expo);
}

/// Float evaluation of the full kernel Q * P^N at (Z, Z'); rank 1 entry or
/// the (r,c) matrix entry.
inline std::complex<double> eval_kernel(const KernelPoly<Coef>& k,
                                        const std::vector<double>& Z,
                                        const std::vector<double>& Zp,
                                        int row = 0, int col = 0) {
    const int n = k.model().n();
    std::vector<std::complex<double>> z(n), w(n);
    for (int i = 0; i < n; ++i) {
        z[i] = {Z[2 * i], Z[2 * i + 1]};
        w[i] = {Zp[2 * i], Zp[2 * i + 1]};
    }
    std::complex<double> q = 0;
    for (const auto& [key, c] : k.terms()) {
        std::complex<double> m = c.at(row, col).to_complex();
        for (int i = 0; i < n; ++i) {
            for (int e = 0; e < key.za[i]; ++e) m *= z[i];
            for (int e = 0; e < key.zb[i]; ++e) m *= std::conj(z[i]);
            for (int e = 0; e < key.wa[i]; ++e) m *= w[i];
            for (int e = 0; e < key.wb[i]; ++e) m *= std::conj(w[i]);
        }
        q += m;
    }
    return q * pn_value(k.model(), Z, Zp);
}

/// All distinct L0 eigenvalues 2 sum alpha_i a_i up to cutoff, with the
/// number of lattice points alpha realizing each.
inline std::vector<std::pair<Scalar, long>> model_spectrum(const ModelSpec& model,
                                                           const Scalar& cutoff) {
    double cut = cutoff.to_double();
    if (cut < 0) throw std::invalid_argument("model_spectrum: cutoff must be >= 0");
    std::map<Scalar, long> found;
    MultiIndex alpha(model.n());
    // depth-first over the alpha lattice; eigenvalues grow monotonically
    auto rec = [&](auto&& self, int i) -> void {
        if (i == model.n()) {
            Scalar ev = model.eigenvalue(alpha);
            if (ev.to_double() <= cut * (1 + 1e-12)) found[ev] += 1;
            return;
        }
        for (alpha[i] = 0;; ++alpha[i]) {
            Scalar ev = model.eigenvalue(alpha);
            if (ev.to_double() > cut * (1 + 1e-12)) break;
            self(self, i + 1);
        }
        alpha[i] = 0;
    };
    rec(rec, 0);
    return {found.begin(), found.end()};
}

} // namespace wick
} // namespace bergman

#endif
