#ifndef BERGMAN_DIFF_OP_HPP
#define BERGMAN_DIFF_OP_HPP

#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "bergman/kernel.hpp"
#include "bergman/model_spec.hpp"

namespace bergman {

/// One generator of the model algebra.
struct Gen {
    enum Kind : uint8_t { Z, Zbar, B, Bplus } kind;
    int index;
};

/// Exponents of a normal-ordered word z^za zbar^zb b^bg (b+)^bd.
struct DiffKey {
    MultiIndex za, zb, bg, bd;
    friend bool operator<(const DiffKey& x, const DiffKey& y) {
        if (!(x.za == y.za)) return x.za < y.za;
        if (!(x.zb == y.zb)) return x.zb < y.zb;
        if (!(x.bg == y.bg)) return x.bg < y.bg;
        return x.bd < y.bd;
    }
    friend bool operator==(const DiffKey& x, const DiffKey& y) {
        return x.za == y.za && x.zb == y.zb && x.bg == y.bg && x.bd == y.bd;
    }
    /// Total Z-parity of the term; b and b+ are odd (Eq. (g1)).
    int parity() const { return (za.total() + zb.total() + bg.total() + bd.total()) & 1; }
};

/// Element of the algebra generated by multiplication operators z_i, zbar_i
/// and the ladder operators b_i, b_i^+, kept in the fixed normal order
/// multiplication-left / b middle / b+ right.  Chosen so that b+ P^N = 0
/// makes rightmost factors vanish first.
class DiffOp {
public:
    explicit DiffOp(ModelSpec model) : model_(std::move(model)) {}

    static DiffOp zero(const ModelSpec& m) { return DiffOp(m); }
    static DiffOp identity(const ModelSpec& m) {
        DiffOp d(m);
        d.add_term(DiffKey{MultiIndex(m.n()), MultiIndex(m.n()), MultiIndex(m.n()),
                           MultiIndex(m.n())},
                   Coef::identity(m.rank(), m.mode()));
        return d;
    }
    static DiffOp generator(const ModelSpec& m, Gen g, const Scalar& c) {
        return generator(m, g, Coef::scalar(c, m.rank()));
    }
    static DiffOp generator(const ModelSpec& m, Gen g, const Coef& c) {
        if (g.index < 0 || g.index >= m.n()) throw std::out_of_range("DiffOp: index out of range");
        DiffOp d(m);
        DiffKey k{MultiIndex(m.n()), MultiIndex(m.n()), MultiIndex(m.n()), MultiIndex(m.n())};
        switch (g.kind) {
            case Gen::Z: k.za[g.index] = 1; break;
            case Gen::Zbar: k.zb[g.index] = 1; break;
            case Gen::B: k.bg[g.index] = 1; break;
            case Gen::Bplus: k.bd[g.index] = 1; break;
        }
        d.add_term(k, c);
        return d;
    }

    /// L0 = sum_i b_i b_i^+.
    static DiffOp l0(const ModelSpec& m) {
        DiffOp d(m);
        for (int i = 0; i < m.n(); ++i) {
            DiffKey k{MultiIndex(m.n()), MultiIndex(m.n()), MultiIndex::unit(m.n(), i),
                      MultiIndex::unit(m.n(), i)};
            d.add_term(k, Coef::identity(m.rank(), m.mode()));
        }
        return d;
    }

    /// Canonical normal ordering of a word of generators with prefactor.
    /// Idempotent on already normal input.
    static DiffOp normal_order(const ModelSpec& m, const std::vector<Gen>& word,
                               const Coef& prefactor) {
        DiffOp acc = identity(m);
        for (auto it = word.rbegin(); it != word.rend(); ++it) acc = acc.left_generator(*it);
        return acc.left_mul_coef(prefactor);
    }
    static DiffOp normal_order(const ModelSpec& m, const std::vector<Gen>& word,
                               const Scalar& prefactor) {
        return normal_order(m, word, Coef::scalar(prefactor, m.rank()));
    }

    const ModelSpec& model() const { return model_; }
    const std::map<DiffKey, Coef>& terms() const { return t_; }
    bool is_zero() const { return t_.empty(); }

    void add_term(const DiffKey& k, const Coef& c) {
        if (c.is_zero()) return;
        auto it = t_.find(k);
        if (it == t_.end()) t_.emplace(k, c);
        else {
            it->second += c;
            if (it->second.is_zero()) t_.erase(it);
        }
    }

    DiffOp& operator+=(const DiffOp& o) {
        for (const auto& [k, c] : o.t_) add_term(k, c);
        return *this;
    }
    friend DiffOp operator+(DiffOp a, const DiffOp& b) { a += b; return a; }
    DiffOp operator-() const {
        DiffOp r(model_);
        for (const auto& [k, c] : t_) r.t_.emplace(k, -c);
        return r;
    }
    friend DiffOp operator-(DiffOp a, const DiffOp& b) { a += -b; return a; }

    DiffOp scaled(const Scalar& s) const {
        DiffOp r(model_);
        for (const auto& [k, c] : t_) r.add_term(k, s * c);
        return r;
    }
    /// Multiply every coefficient by a matrix from the left.
    DiffOp left_mul_coef(const Coef& a) const {
        DiffOp r(model_);
        for (const auto& [k, c] : t_) r.add_term(k, a * c);
        return r;
    }

    /// Operator product, renormal-ordered.
    friend DiffOp operator*(const DiffOp& A, const DiffOp& B) {
        DiffOp out(A.model_);
        for (const auto& [ka, ca] : A.t_) {
            DiffOp cur = B;
            // apply A's generators to the left of B, rightmost first
            for (int i = A.model_.n() - 1; i >= 0; --i)
                for (int r = 0; r < ka.bd[i]; ++r) cur = cur.left_generator({Gen::Bplus, i});
            for (int i = A.model_.n() - 1; i >= 0; --i)
                for (int r = 0; r < ka.bg[i]; ++r) cur = cur.left_generator({Gen::B, i});
            for (const auto& [kb, cb] : cur.t_) {
                DiffKey k = kb;
                for (int i = 0; i < A.model_.n(); ++i) {
                    k.za[i] += ka.za[i];
                    k.zb[i] += ka.zb[i];
                }
                out.add_term(k, ca * cb);
            }
        }
        return out;
    }

    friend DiffOp commutator(const DiffOp& A, const DiffOp& B) { return A * B - B * A; }

    /// Formal L2 adjoint: z <-> zbar, b <-> b+, order reversed,
    /// coefficients conjugate-transposed.
    DiffOp adjoint() const {
        DiffOp out(model_);
        const int n = model_.n();
        for (const auto& [k, c] : t_) {
            std::vector<Gen> word;
            for (int i = 0; i < n; ++i)
                for (int r = 0; r < k.bd[i]; ++r) word.push_back({Gen::B, i});
            for (int i = 0; i < n; ++i)
                for (int r = 0; r < k.bg[i]; ++r) word.push_back({Gen::Bplus, i});
            for (int i = 0; i < n; ++i)
                for (int r = 0; r < k.zb[i]; ++r) word.push_back({Gen::Z, i});
            for (int i = 0; i < n; ++i)
                for (int r = 0; r < k.za[i]; ++r) word.push_back({Gen::Zbar, i});
            out += normal_order(model_, word, c.adjoint());
        }
        return out;
    }

    /// Parity of the total Z-degree if uniform across terms.
    std::optional<int> uniform_parity() const {
        std::optional<int> p;
        for (const auto& [k, c] : t_) {
            int q = k.parity();
            if (!p) p = q;
            else if (*p != q) return std::nullopt;
        }
        return p;
    }

    /// Kernel of (this . K) for K with kernel k; product rule termwise,
    /// using b_i P^N = a_i(zbar_i - zbar'_i) P^N and b_i^+ P^N = 0.
    template <class C>
    KernelPoly<C> apply(const KernelPoly<C>& k) const {
        if (!(model_ == k.model())) throw std::invalid_argument("DiffOp::apply: model mismatch");
        const int n = model_.n();
        KernelPoly<C> out(model_);
        for (const auto& [ok, oc] : t_) {
            KernelPoly<C> cur = k.left_mul(oc);
            // rightmost factors act first: (b+)^bd, then b^bg, then z^za zbar^zb
            for (int i = 0; i < n; ++i)
                for (int r = 0; r < ok.bd[i]; ++r) cur = apply_bplus(cur, i);
            for (int i = 0; i < n; ++i)
                for (int r = 0; r < ok.bg[i]; ++r) cur = apply_b(cur, i);
            KernelPoly<C> shifted(model_);
            for (const auto& [kk, kc] : cur.terms()) {
                KernelKey nk = kk;
                for (int i = 0; i < n; ++i) {
                    nk.za[i] += ok.za[i];
                    nk.zb[i] += ok.zb[i];
                }
                shifted.add_term(nk, kc);
            }
            out += shifted;
        }
        return out;
    }

    /// b_i (Q P^N) = (-2 dQ/dz_i + a_i (zbar_i - zbar'_i) Q) P^N.
    template <class C>
    KernelPoly<C> apply_b(const KernelPoly<C>& k, int i) const {
        KernelPoly<C> out(model_);
        const Scalar& ai = model_.a(i);
        for (const auto& [kk, kc] : k.terms()) {
            if (kk.za[i] > 0)
                out.add_term(KernelKey{kk.za.plus(i, -1), kk.zb, kk.wa, kk.wb},
                             mul_scalar(Scalar::integer(-2 * kk.za[i], model_.mode()), kc));
            out.add_term(KernelKey{kk.za, kk.zb.plus(i), kk.wa, kk.wb}, mul_scalar(ai, kc));
            out.add_term(KernelKey{kk.za, kk.zb, kk.wa, kk.wb.plus(i)}, mul_scalar(-ai, kc));
        }
        return out;
    }

    /// b_i^+ (Q P^N) = 2 dQ/dzbar_i P^N.
    template <class C>
    KernelPoly<C> apply_bplus(const KernelPoly<C>& k, int i) const {
        KernelPoly<C> out(model_);
        for (const auto& [kk, kc] : k.terms()) {
            if (kk.zb[i] > 0)
                out.add_term(KernelKey{kk.za, kk.zb.plus(i, -1), kk.wa, kk.wb},
                             mul_scalar(Scalar::integer(2 * kk.zb[i], model_.mode()), kc));
        }
        return out;
    }

    std::string debug_dump() const {
        std::ostringstream os;
        for (const auto& [k, c] : t_) {
            os << c.str() << " * z^";
            dump_mi(os, k.za);
            os << " zbar^";
            dump_mi(os, k.zb);
            os << " b^";
            dump_mi(os, k.bg);
            os << " b+^";
            dump_mi(os, k.bd);
            os << "\n";
        }
        return os.str();
    }

    friend bool operator==(const DiffOp& a, const DiffOp& b) { return a.t_ == b.t_; }

private:
    /// Left-multiply the canonical sum by a single generator.
    DiffOp left_generator(Gen g) const {
        DiffOp out(model_);
        const Scalar two = Scalar::integer(2, model_.mode());
        for (const auto& [k, c] : t_) {
            switch (g.kind) {
                case Gen::Z: {
                    DiffKey nk = k;
                    nk.za[g.index] += 1;
                    out.add_term(nk, c);
                    break;
                }
                case Gen::Zbar: {
                    DiffKey nk = k;
                    nk.zb[g.index] += 1;
                    out.add_term(nk, c);
                    break;
                }
                case Gen::B: {
                    // b_i g = g b_i - 2 dg/dz_i   (g = z^za zbar^zb)
                    DiffKey nk = k;
                    nk.bg[g.index] += 1;
                    out.add_term(nk, c);
                    if (k.za[g.index] > 0) {
                        DiffKey dk = k;
                        dk.za[g.index] -= 1;
                        out.add_term(dk, Scalar::integer(-2 * k.za[g.index], model_.mode()) * c);
                    }
                    break;
                }
                case Gen::Bplus: {
                    // b_i^+ g = g b_i^+ + 2 dg/dzbar_i, then
                    // b_i^+ b^bg = b^bg b_i^+ + 2 bg_i a_i b^{bg - e_i}
                    DiffKey nk = k;
                    nk.bd[g.index] += 1;
                    out.add_term(nk, c);
                    if (k.bg[g.index] > 0) {
                        DiffKey ck = k;
                        ck.bg[g.index] -= 1;
                        Scalar f = Scalar::integer(2 * k.bg[g.index], model_.mode()) *
                                   model_.a(g.index);
                        out.add_term(ck, f * c);
                    }
                    if (k.zb[g.index] > 0) {
                        DiffKey dk = k;
                        dk.zb[g.index] -= 1;
                        out.add_term(dk, Scalar::integer(2 * k.zb[g.index], model_.mode()) * c);
                    }
                    break;
                }
            }
        }
        return out;
    }

    static void dump_mi(std::ostringstream& os, const MultiIndex& m) {
        os << "(";
        for (int i = 0; i < m.size(); ++i) os << (i ? " " : "") << m[i];
        os << ")";
    }

    ModelSpec model_;
    std::map<DiffKey, Coef> t_;
};

} // namespace bergman

#endif
