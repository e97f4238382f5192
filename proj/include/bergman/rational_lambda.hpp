#ifndef BERGMAN_RATIONAL_LAMBDA_HPP
#define BERGMAN_RATIONAL_LAMBDA_HPP

#include <map>
#include <stdexcept>
#include <vector>

#include "bergman/scalar.hpp"

namespace bergman {

/// Rational function of the resolvent parameter lambda:
/// numerator polynomial with Coef coefficients over a denominator stored as
/// a multiset of roots.  The only roots that ever occur are 0 and the
/// positive model eigenvalues 2 beta.a.  Kept gcd-reduced: the numerator is
/// not divisible by (lambda - root) for any stored root.
class RatLam {
public:
    RatLam() = default;
    explicit RatLam(Coef c) {
        if (!c.is_zero()) num_.push_back(std::move(c));
    }

    static RatLam zero() { return RatLam(); }

    bool is_zero() const { return num_.empty(); }
    int rank() const { return num_.empty() ? 0 : num_[0].rank(); }

    const std::vector<Coef>& num() const { return num_; }
    const std::map<Scalar, int>& roots() const { return den_; }

    /// Multiplicity of the pole at lambda = 0 (exact after reduction).
    int pole_at_zero() const {
        for (const auto& [root, m] : den_)
            if (root.is_zero()) return m;
        return 0;
    }

    int max_pole_order() const {
        int m = 0;
        for (const auto& [root, k] : den_) m = std::max(m, k);
        return m;
    }

    RatLam operator-() const {
        RatLam r(*this);
        for (auto& c : r.num_) c = -c;
        return r;
    }

    friend RatLam mul_left(const Coef& a, const RatLam& x) {
        RatLam r;
        r.den_ = x.den_;
        r.num_.reserve(x.num_.size());
        for (const auto& c : x.num_) r.num_.push_back(a * c);
        r.trim();
        r.reduce();
        return r;
    }
    friend RatLam mul_scalar(const Scalar& s, const RatLam& x) {
        RatLam r;
        r.den_ = x.den_;
        for (const auto& c : x.num_) r.num_.push_back(s * c);
        r.trim();
        if (r.num_.empty()) r.den_.clear();
        return r;
    }
    friend RatLam div_scalar(const RatLam& x, const Scalar& s) {
        RatLam r;
        r.den_ = x.den_;
        for (const auto& c : x.num_) r.num_.push_back(c / s);
        return r;
    }
    friend RatLam adjoint_coef(const RatLam& x) {
        RatLam r;
        r.den_ = x.den_;
        for (const auto& c : x.num_) r.num_.push_back(c.adjoint());
        return r;
    }

    /// Multiply by 1/(lambda - root); root = 0 gives the 1/lambda branch.
    RatLam over_linear(const Scalar& root) const {
        RatLam r(*this);
        if (r.is_zero()) return r;
        r.den_[root] += 1;
        r.reduce();
        return r;
    }

    RatLam& operator+=(const RatLam& o) {
        if (o.is_zero()) return *this;
        if (is_zero()) { *this = o; return *this; }
        // common denominator: each side gets the factors it is missing
        std::map<Scalar, int> all = den_;
        for (const auto& [root, m] : o.den_) {
            auto it = all.find(root);
            if (it == all.end()) all[root] = m;
            else it->second = std::max(it->second, m);
        }
        std::vector<Coef> a = num_, b = o.num_;
        for (const auto& [root, m] : all) {
            int da = m - mult(den_, root);
            int db = m - mult(o.den_, root);
            for (int k = 0; k < da; ++k) a = mul_linear(a, root);
            for (int k = 0; k < db; ++k) b = mul_linear(b, root);
        }
        if (b.size() > a.size()) a.resize(b.size(), Coef(b[0].rank(), mode_of(b[0])));
        for (size_t k = 0; k < b.size(); ++k) a[k] += b[k];
        num_ = std::move(a);
        den_ = std::move(all);
        trim();
        if (num_.empty()) den_.clear();
        reduce();
        return *this;
    }
    friend RatLam operator+(RatLam a, const RatLam& b) { a += b; return a; }

    friend bool operator==(const RatLam& a, const RatLam& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }

    /// Residue at lambda = 0 of lambda^q * this.
    Coef residue_at_zero(int q, int rank, Mode mode) const {
        int m0 = pole_at_zero();
        int order = m0 - q - 1; // Taylor order of the holomorphic part we need
        if (order < 0 || is_zero()) return Coef(rank, mode);
        // H(lambda) = num(lambda) * prod_{root != 0} (lambda - root)^{-mult},
        // holomorphic at 0; residue = Taylor coefficient of lambda^order.
        std::vector<Coef> h(num_.begin(), num_.end());
        if (int(h.size()) > order + 1) h.resize(order + 1, Coef(rank, mode));
        h.resize(order + 1, Coef(rank, mode));
        for (const auto& [root, m] : den_) {
            if (root.is_zero()) continue;
            for (int rep = 0; rep < m; ++rep) {
                // 1/(lambda - root) = -(1/root) sum_k (lambda/root)^k
                std::vector<Scalar> inv(order + 1, Scalar::zero(mode));
                Scalar p = -(Scalar::one(mode) / root);
                for (int k = 0; k <= order; ++k) {
                    inv[k] = p;
                    p = p / root;
                }
                std::vector<Coef> prod(order + 1, Coef(rank, mode));
                for (int i = 0; i <= order; ++i) {
                    if (h[i].is_zero()) continue;
                    for (int k = 0; i + k <= order; ++k) prod[i + k] += inv[k] * h[i];
                }
                h = std::move(prod);
            }
        }
        return h[order];
    }

private:
    static Mode mode_of(const Coef& c) { return c.rank() > 0 ? c.at(0, 0).mode() : Mode::Exact; }
    static int mult(const std::map<Scalar, int>& m, const Scalar& root) {
        auto it = m.find(root);
        return it == m.end() ? 0 : it->second;
    }
    static std::vector<Coef> mul_linear(const std::vector<Coef>& p, const Scalar& root) {
        // p(lambda) * (lambda - root)
        if (p.empty()) return p;
        int rank = p[0].rank();
        Mode m = mode_of(p[0]);
        std::vector<Coef> r(p.size() + 1, Coef(rank, m));
        for (size_t k = 0; k < p.size(); ++k) {
            r[k + 1] += p[k];
            r[k] -= root * p[k];
        }
        return r;
    }
    void trim() {
        while (!num_.empty() && num_.back().is_zero()) num_.pop_back();
    }
    /// Cancel (lambda - root) factors that divide the numerator.
    void reduce() {
        if (num_.empty()) { den_.clear(); return; }
        for (auto it = den_.begin(); it != den_.end();) {
            const Scalar& root = it->first;
            while (it->second > 0) {
                // synthetic division: num = (lambda-root)*quot + num(root)
                int rank = num_[0].rank();
                Mode m = mode_of(num_[0]);
                Coef rem(rank, m);
                std::vector<Coef> quot(num_.size() > 1 ? num_.size() - 1 : 0, Coef(rank, m));
                Coef carry(rank, m);
                for (int k = int(num_.size()) - 1; k >= 0; --k) {
                    carry = num_[size_t(k)] + root * carry;
                    if (k > 0) quot[size_t(k - 1)] = carry;
                    else rem = carry;
                }
                bool divisible;
                if (m == Mode::Exact) divisible = rem.is_zero();
                else {
                    double scale = 0;
                    for (const auto& c : num_) scale = std::max(scale, c.max_abs());
                    divisible = rem.max_abs() <= 1e-10 * std::max(1.0, scale);
                }
                if (!divisible) break;
                num_ = std::move(quot);
                trim();
                --it->second;
                if (num_.empty()) { den_.clear(); return; }
            }
            if (it->second == 0) it = den_.erase(it);
            else ++it;
        }
    }

    std::vector<Coef> num_;      // num_[k]: coefficient of lambda^k
    std::map<Scalar, int> den_;  // root -> multiplicity
};

} // namespace bergman

#endif
