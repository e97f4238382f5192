#ifndef BERGMAN_MODEL_SPEC_HPP
#define BERGMAN_MODEL_SPEC_HPP

#include <stdexcept>
#include <vector>

#include "bergman/multi_index.hpp"
#include "bergman/scalar.hpp"

namespace bergman {

/// Data of the model operator L0 = sum_i b_i b_i^+ at the base point:
/// complex dimension n and the positive eigenvalues a_1..a_n of the
/// rescaled curvature endomorphism in a diagonalizing unitary frame.
class ModelSpec {
public:
    ModelSpec(std::vector<Scalar> a, int rank = 1)
        : a_(std::move(a)), rank_(rank) {
        if (a_.empty()) throw std::invalid_argument("ModelSpec: n must be >= 1");
        if (rank_ < 1) throw std::invalid_argument("ModelSpec: rank must be >= 1");
        mode_ = a_[0].mode();
        for (const auto& s : a_) {
            if (s.mode() != mode_) throw std::invalid_argument("ModelSpec: mixed scalar modes");
            if (!s.is_monomial() || !s.is_real() || s.to_double() <= 0)
                throw std::invalid_argument("ModelSpec: eigenvalues must be positive monomials");
        }
    }

    /// Kaehler model: all eigenvalues equal 2*pi.
    static ModelSpec kahler(int n, Mode m, int rank = 1) {
        return ModelSpec(std::vector<Scalar>(size_t(n), Scalar::two_pi(m)), rank);
    }

    int n() const { return int(a_.size()); }
    int rank() const { return rank_; }
    Mode mode() const { return mode_; }
    const Scalar& a(int i) const { return a_[size_t(i)]; }
    const std::vector<Scalar>& a() const { return a_; }

    /// tau at the base point: sum of the eigenvalues.
    Scalar tau0() const {
        Scalar t = Scalar::zero(mode_);
        for (const auto& s : a_) t += s;
        return t;
    }
    /// Spectral gap of L0: 2 * min_i a_i.
    Scalar gap() const {
        const Scalar* mn = &a_[0];
        for (const auto& s : a_)
            if (s.to_double() < mn->to_double()) mn = &s;
        return Scalar::integer(2, mode_) * (*mn);
    }

    /// L0 eigenvalue 2 * sum_i beta_i a_i of the b^beta ladder level.
    /// Computed the same way everywhere so float-mode values are
    /// bitwise-reproducible and usable as map keys.
    Scalar eigenvalue(const MultiIndex& beta) const {
        Scalar v = Scalar::zero(mode_);
        for (int i = 0; i < n(); ++i)
            if (beta[i] != 0) v += Scalar::integer(2 * beta[i], mode_) * a_[size_t(i)];
        return v;
    }

    /// P^N(0,0) = (2 pi)^{-n} prod_i a_i.
    Scalar pn_at_origin() const {
        Scalar v = Scalar::one(mode_);
        for (const auto& s : a_) v = v * s;
        Scalar tp = Scalar::two_pi(mode_);
        for (int i = 0; i < n(); ++i) v = v / tp;
        return v;
    }

    bool is_kahler_eigenvalues() const {
        for (const auto& s : a_)
            if (!(s == Scalar::two_pi(mode_))) return false;
        return true;
    }

    friend bool operator==(const ModelSpec& x, const ModelSpec& y) {
        return x.rank_ == y.rank_ && x.a_ == y.a_;
    }

private:
    std::vector<Scalar> a_;
    int rank_;
    Mode mode_;
};

} // namespace bergman

#endif
