#ifndef BERGMAN_SCALAR_HPP
#define BERGMAN_SCALAR_HPP

#include <cassert>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace bergman {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// Complex number with exact rational real and imaginary parts.
class Rat {
public:
    Rat() : re_(0), im_(0) {}
    Rat(long num, long den = 1) : re_(num, den), im_(0) { re_.canonicalize(); }
    Rat(mpq_class re, mpq_class im) : re_(std::move(re)), im_(std::move(im)) {}

    static Rat i_times(const mpq_class& v) { return Rat(mpq_class(0), v); }

    const mpq_class& re() const { return re_; }
    const mpq_class& im() const { return im_; }

    bool is_zero() const { return re_ == 0 && im_ == 0; }
    bool is_real() const { return im_ == 0; }

    Rat operator-() const { return Rat(-re_, -im_); }
    Rat conj() const { return Rat(re_, -im_); }

    Rat& operator+=(const Rat& o) { re_ += o.re_; im_ += o.im_; return *this; }
    Rat& operator-=(const Rat& o) { re_ -= o.re_; im_ -= o.im_; return *this; }

    friend Rat operator+(Rat a, const Rat& b) { a += b; return a; }
    friend Rat operator-(Rat a, const Rat& b) { a -= b; return a; }
    friend Rat operator*(const Rat& a, const Rat& b) {
        return Rat(a.re_ * b.re_ - a.im_ * b.im_, a.re_ * b.im_ + a.im_ * b.re_);
    }
    friend Rat operator/(const Rat& a, const Rat& b) {
        mpq_class n2 = b.re_ * b.re_ + b.im_ * b.im_;
        if (n2 == 0) throw std::domain_error("Rat: division by zero");
        return Rat((a.re_ * b.re_ + a.im_ * b.im_) / n2,
                   (a.im_ * b.re_ - a.re_ * b.im_) / n2);
    }
    friend bool operator==(const Rat& a, const Rat& b) { return a.re_ == b.re_ && a.im_ == b.im_; }
    friend bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }

    // total order (for canonical map keys only, no arithmetic meaning)
    friend bool operator<(const Rat& a, const Rat& b) {
        int c = cmp(a.re_, b.re_);
        if (c != 0) return c < 0;
        return cmp(a.im_, b.im_) < 0;
    }

    std::complex<double> to_complex() const { return {re_.get_d(), im_.get_d()}; }

    std::string str() const {
        std::ostringstream os;
        if (im_ == 0) os << re_.get_str();
        else if (re_ == 0) os << im_.get_str() << "i";
        else os << "(" << re_.get_str() << (im_ > 0 ? "+" : "") << im_.get_str() << "i)";
        return os.str();
    }

private:
    mpq_class re_, im_;
};

enum class Mode : uint8_t { Exact, Float };

/// Element of the coefficient ring of the model calculus.
///
/// Exact mode: a Laurent polynomial in the formal symbol PI (standing for
/// pi) with complex rational coefficients.  Division is only defined by
/// nonzero monomials c*PI^k.  Float mode: a complex double; comparisons go
/// through a relative tolerance.
class Scalar {
public:
    Scalar() : mode_(Mode::Exact) {}

    static Scalar zero(Mode m) { Scalar s; s.mode_ = m; if (m == Mode::Float) s.f_ = 0.0; return s; }
    static Scalar one(Mode m) { return integer(1, m); }
    static Scalar integer(long v, Mode m) {
        if (m == Mode::Float) return from_complex({double(v), 0.0});
        return monomial(Rat(v), 0);
    }
    static Scalar rational(long num, long den, Mode m) {
        if (m == Mode::Float) return from_complex({double(num) / double(den), 0.0});
        return monomial(Rat(num, den), 0);
    }
    static Scalar monomial(const Rat& c, int pi_pow) {
        Scalar s;
        s.mode_ = Mode::Exact;
        if (!c.is_zero()) s.terms_[pi_pow] = c;
        return s;
    }
    /// 2*pi in the requested mode (the Kaehler eigenvalue).
    static Scalar two_pi(Mode m) {
        if (m == Mode::Float) return from_complex({2.0 * kPi, 0.0});
        return monomial(Rat(2), 1);
    }
    static Scalar from_complex(std::complex<double> z) {
        Scalar s;
        s.mode_ = Mode::Float;
        s.f_ = z;
        return s;
    }
    static Scalar imaginary_unit(Mode m) {
        if (m == Mode::Float) return from_complex({0.0, 1.0});
        return monomial(Rat::i_times(mpq_class(1)), 0);
    }

    Mode mode() const { return mode_; }
    bool is_zero() const { return mode_ == Mode::Exact ? terms_.empty() : f_ == std::complex<double>(0.0, 0.0); }

    bool is_monomial() const { return mode_ == Mode::Float ? !is_zero() : terms_.size() == 1; }

    const std::map<int, Rat>& terms() const { return terms_; }

    std::complex<double> to_complex() const {
        if (mode_ == Mode::Float) return f_;
        std::complex<double> v = 0;
        for (const auto& [k, c] : terms_) v += c.to_complex() * std::pow(kPi, k);
        return v;
    }
    double to_double() const { return to_complex().real(); }

    Scalar operator-() const {
        Scalar s(*this);
        if (mode_ == Mode::Float) { s.f_ = -s.f_; return s; }
        for (auto& [k, c] : s.terms_) c = -c;
        return s;
    }
    Scalar conj() const {
        Scalar s(*this);
        if (mode_ == Mode::Float) { s.f_ = std::conj(s.f_); return s; }
        for (auto& [k, c] : s.terms_) c = c.conj();
        return s;
    }

    Scalar& operator+=(const Scalar& o) {
        if (o.is_zero()) return *this;
        if (is_zero()) { *this = o; return *this; }
        require_same_mode(o);
        if (mode_ == Mode::Float) { f_ += o.f_; return *this; }
        for (const auto& [k, c] : o.terms_) {
            auto it = terms_.find(k);
            if (it == terms_.end()) terms_.emplace(k, c);
            else {
                it->second += c;
                if (it->second.is_zero()) terms_.erase(it);
            }
        }
        return *this;
    }
    Scalar& operator-=(const Scalar& o) { return *this += -o; }

    friend Scalar operator+(Scalar a, const Scalar& b) { a += b; return a; }
    friend Scalar operator-(Scalar a, const Scalar& b) { a -= b; return a; }
    friend Scalar operator*(const Scalar& a, const Scalar& b) {
        if (a.is_zero()) return a;
        if (b.is_zero()) return b;
        a.require_same_mode(b);
        if (a.mode_ == Mode::Float) return from_complex(a.f_ * b.f_);
        Scalar r;
        for (const auto& [ka, ca] : a.terms_)
            for (const auto& [kb, cb] : b.terms_) r += monomial(ca * cb, ka + kb);
        return r;
    }

    /// Division; the divisor must be a nonzero monomial c*PI^k in exact mode.
    friend Scalar operator/(const Scalar& a, const Scalar& b) {
        if (b.is_zero()) throw std::domain_error("Scalar: division by zero");
        if (a.is_zero()) return a;
        a.require_same_mode(b);
        if (a.mode_ == Mode::Float) return from_complex(a.f_ / b.f_);
        if (b.terms_.size() != 1)
            throw std::domain_error("Scalar: exact division only by monomials c*PI^k");
        const auto& [kb, cb] = *b.terms_.begin();
        Scalar r;
        for (const auto& [ka, ca] : a.terms_) r.terms_[ka - kb] = ca / cb;
        return r;
    }

    friend bool operator==(const Scalar& a, const Scalar& b) {
        if (a.mode_ != b.mode_) return a.is_zero() && b.is_zero();
        if (a.mode_ == Mode::Float) return approx_eq(a.f_, b.f_, default_tol());
        return a.terms_ == b.terms_;
    }
    friend bool operator!=(const Scalar& a, const Scalar& b) { return !(a == b); }

    /// Canonical-key order: usable for map keys in both modes.  Float keys
    /// must be produced by bitwise-identical computations.
    friend bool operator<(const Scalar& a, const Scalar& b) {
        if (a.mode_ != b.mode_) return a.mode_ < b.mode_;
        if (a.mode_ == Mode::Float) {
            if (a.f_.real() != b.f_.real()) return a.f_.real() < b.f_.real();
            return a.f_.imag() < b.f_.imag();
        }
        return a.terms_ < b.terms_;
    }

    bool is_real() const {
        if (mode_ == Mode::Float) return std::abs(f_.imag()) <= default_tol() * (1.0 + std::abs(f_));
        for (const auto& [k, c] : terms_)
            if (!c.is_real()) return false;
        return true;
    }
    bool is_imaginary() const {
        if (mode_ == Mode::Float) return std::abs(f_.real()) <= default_tol() * (1.0 + std::abs(f_));
        for (const auto& [k, c] : terms_)
            if (!(c.re() == 0)) return false;
        return true;
    }

    double abs() const { return std::abs(to_complex()); }

    static double& default_tol() {
        static double tol = 1e-10;
        return tol;
    }
    static bool approx_eq(std::complex<double> x, std::complex<double> y, double tol) {
        double scale = std::max({1.0, std::abs(x), std::abs(y)});
        return std::abs(x - y) <= tol * scale;
    }

    std::string str() const {
        if (mode_ == Mode::Float) {
            std::ostringstream os;
            os.precision(17);
            os << f_.real();
            if (f_.imag() != 0) os << (f_.imag() > 0 ? "+" : "") << f_.imag() << "i";
            return os.str();
        }
        if (terms_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const auto& [k, c] : terms_) {
            if (!first) os << " + ";
            first = false;
            os << c.str();
            if (k == 1) os << "*PI";
            else if (k != 0) os << "*PI^" << k;
        }
        return os.str();
    }

private:
    void require_same_mode(const Scalar& o) const {
        if (mode_ != o.mode_) throw std::logic_error("Scalar: mixed exact/float arithmetic");
    }

    Mode mode_;
    std::map<int, Rat> terms_;       // exact: PI power -> coefficient
    std::complex<double> f_{0.0, 0.0};
};

/// Square matrix of Scalars; rank 1 is the common (line bundle E) case.
class Coef {
public:
    Coef() : r_(0) {}
    Coef(int rank, Mode m) : r_(rank), m_(rank * rank, Scalar::zero(m)) {}

    static Coef scalar(const Scalar& s, int rank) {
        Coef c(rank, s.mode());
        for (int i = 0; i < rank; ++i) c.at(i, i) = s;
        return c;
    }
    static Coef identity(int rank, Mode m) { return scalar(Scalar::one(m), rank); }

    int rank() const { return r_; }
    Scalar& at(int i, int j) { return m_[i * r_ + j]; }
    const Scalar& at(int i, int j) const { return m_[i * r_ + j]; }

    bool is_zero() const {
        for (const auto& s : m_)
            if (!s.is_zero()) return false;
        return true;
    }

    Coef operator-() const {
        Coef c(*this);
        for (auto& s : c.m_) s = -s;
        return c;
    }
    Coef& operator+=(const Coef& o) {
        assert(r_ == o.r_);
        for (size_t i = 0; i < m_.size(); ++i) m_[i] += o.m_[i];
        return *this;
    }
    Coef& operator-=(const Coef& o) {
        assert(r_ == o.r_);
        for (size_t i = 0; i < m_.size(); ++i) m_[i] -= o.m_[i];
        return *this;
    }
    friend Coef operator+(Coef a, const Coef& b) { a += b; return a; }
    friend Coef operator-(Coef a, const Coef& b) { a -= b; return a; }
    friend Coef operator*(const Coef& a, const Coef& b) {
        assert(a.r_ == b.r_);
        Mode m = a.m_.empty() ? Mode::Exact : a.m_[0].mode();
        Coef c(a.r_, m);
        for (int i = 0; i < a.r_; ++i)
            for (int k = 0; k < a.r_; ++k) {
                if (a.at(i, k).is_zero()) continue;
                for (int j = 0; j < a.r_; ++j) c.at(i, j) += a.at(i, k) * b.at(k, j);
            }
        return c;
    }
    friend Coef operator*(const Scalar& s, Coef a) {
        for (auto& e : a.m_) e = s * e;
        return a;
    }
    Coef operator/(const Scalar& s) const {
        Coef c(*this);
        for (auto& e : c.m_) e = e / s;
        return c;
    }
    friend bool operator==(const Coef& a, const Coef& b) {
        if (a.r_ != b.r_) return false;
        for (size_t i = 0; i < a.m_.size(); ++i)
            if (!(a.m_[i] == b.m_[i])) return false;
        return true;
    }
    friend bool operator!=(const Coef& a, const Coef& b) { return !(a == b); }

    /// Conjugate transpose.
    Coef adjoint() const {
        Coef c(r_, m_.empty() ? Mode::Exact : m_[0].mode());
        for (int i = 0; i < r_; ++i)
            for (int j = 0; j < r_; ++j) c.at(i, j) = at(j, i).conj();
        return c;
    }

    Coef pow(int q) const {
        assert(q >= 0);
        Mode m = m_.empty() ? Mode::Exact : m_[0].mode();
        Coef acc = identity(r_, m);
        for (int i = 0; i < q; ++i) acc = acc * (*this);
        return acc;
    }

    double max_abs() const {
        double v = 0;
        for (const auto& s : m_) v = std::max(v, s.abs());
        return v;
    }

    std::string str() const {
        if (r_ == 1) return m_[0].str();
        std::ostringstream os;
        os << "[";
        for (int i = 0; i < r_; ++i) {
            if (i) os << "; ";
            for (int j = 0; j < r_; ++j) {
                if (j) os << ", ";
                os << at(i, j).str();
            }
        }
        os << "]";
        return os.str();
    }

private:
    int r_;
    std::vector<Scalar> m_;
};

// Uniform coefficient-ring interface shared with RatLam so the kernel
// machinery can be instantiated with either coefficient type.
inline Coef mul_left(const Coef& a, const Coef& x) { return a * x; }
inline Coef mul_scalar(const Scalar& s, const Coef& x) { return s * x; }
inline Coef div_scalar(const Coef& x, const Scalar& s) { return x / s; }
inline Coef adjoint_coef(const Coef& x) { return x.adjoint(); }

} // namespace bergman

#endif
