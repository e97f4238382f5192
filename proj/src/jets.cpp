#include "bergman/jets.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <random>
#include <stdexcept>

namespace bergman {

Scalar PointJets::dRL_c(const CVec& u, const CVec& v, const CVec& w) const {
    Scalar s = Scalar::zero(mode);
    for (const auto& [a1, c1] : u)
        for (const auto& [a2, c2] : v)
            for (const auto& [a3, c3] : w) s += c1 * c2 * c3 * dRL[size_t(i3(a1, a2, a3))];
    return s;
}

Scalar PointJets::RTX_c(const CVec& u, const CVec& v, const CVec& w, const CVec& x) const {
    Scalar s = Scalar::zero(mode);
    for (const auto& [a1, c1] : u)
        for (const auto& [a2, c2] : v)
            for (const auto& [a3, c3] : w)
                for (const auto& [a4, c4] : x)
                    s += c1 * c2 * c3 * c4 * RTX[size_t(i4(a1, a2, a3, a4))];
    return s;
}

Scalar PointJets::nablaJ_c(const CVec& u, const CVec& v, const CVec& w) const {
    Scalar s = Scalar::zero(mode);
    for (const auto& [a1, c1] : u)
        for (const auto& [a2, c2] : v)
            for (const auto& [a3, c3] : w) s += c1 * c2 * c3 * nablaJ[size_t(i3(a1, a2, a3))];
    return s;
}

Scalar PointJets::nnJ_c(const CVec& u, const CVec& v, const CVec& w, const CVec& x) const {
    Scalar s = Scalar::zero(mode);
    for (const auto& [a1, c1] : u)
        for (const auto& [a2, c2] : v)
            for (const auto& [a3, c3] : w)
                for (const auto& [a4, c4] : x)
                    s += c1 * c2 * c3 * c4 * nnJ[size_t(i4(a1, a2, a3, a4))];
    return s;
}

Coef PointJets::RE_c(const CVec& u, const CVec& v) const {
    Coef s(rank, mode);
    for (const auto& [a1, c1] : u)
        for (const auto& [a2, c2] : v) s += (c1 * c2) * RE[size_t(i2(a1, a2))];
    return s;
}

namespace jets {
namespace {

int dim_of(int n) { return 2 * n; }

Scalar half(Mode m) { return Scalar::rational(1, 2, m); }

/// Multiplication operator by the real coordinate Z_k (0-based):
/// Z_{2j}   = (z_j + zbar_j)/2,
/// Z_{2j+1} = -(i/2) z_j + (i/2) zbar_j.
DiffOp z_mult(const ModelSpec& m, int k) {
    int j = k / 2;
    Scalar h = half(m.mode());
    Scalar ih = h * Scalar::imaginary_unit(m.mode());
    DiffOp z = DiffOp::generator(m, {Gen::Z, j}, Scalar::one(m.mode()));
    DiffOp zb = DiffOp::generator(m, {Gen::Zbar, j}, Scalar::one(m.mode()));
    if (k % 2 == 0) return z.scaled(h) + zb.scaled(h);
    return z.scaled(-ih) + zb.scaled(ih);
}

/// nabla_{0,e_k} in ladder form:
/// even k = 2j: (b_j^+ - b_j)/2;  odd k: -(i/2)(b_j + b_j^+).
DiffOp nabla0(const ModelSpec& m, int k) {
    int j = k / 2;
    Scalar h = half(m.mode());
    Scalar ih = h * Scalar::imaginary_unit(m.mode());
    DiffOp b = DiffOp::generator(m, {Gen::B, j}, Scalar::one(m.mode()));
    DiffOp bp = DiffOp::generator(m, {Gen::Bplus, j}, Scalar::one(m.mode()));
    if (k % 2 == 0) return bp.scaled(h) + b.scaled(-h);
    return b.scaled(-ih) + bp.scaled(-ih);
}

// ---------------------------------------------------------------------
// dense affine solver over Scalar (entries rational in exact mode)

struct AffineSolution {
    std::vector<Scalar> particular;
    std::vector<std::vector<Scalar>> kernel;
};

/// Solve rows * x = rhs; returns a particular solution and a kernel basis.
/// Throws if inconsistent.
AffineSolution solve_affine(std::vector<std::vector<Scalar>> rows, std::vector<Scalar> rhs,
                            int ncols, Mode mode) {
    const int nrows = int(rows.size());
    std::vector<int> pivot_col(size_t(nrows), -1);
    int rank = 0;
    for (int col = 0; col < ncols && rank < nrows; ++col) {
        int sel = -1;
        double best = 0;
        for (int r = rank; r < nrows; ++r) {
            double mag = rows[size_t(r)][size_t(col)].abs();
            if (mode == Mode::Exact ? !rows[size_t(r)][size_t(col)].is_zero() : mag > best) {
                sel = r;
                best = mag;
                if (mode == Mode::Exact) break;
            }
        }
        if (sel < 0 || (mode == Mode::Float && best < 1e-12)) continue;
        std::swap(rows[size_t(sel)], rows[size_t(rank)]);
        std::swap(rhs[size_t(sel)], rhs[size_t(rank)]);
        Scalar piv = rows[size_t(rank)][size_t(col)];
        for (int c = col; c < ncols; ++c)
            rows[size_t(rank)][size_t(c)] = rows[size_t(rank)][size_t(c)] / piv;
        rhs[size_t(rank)] = rhs[size_t(rank)] / piv;
        for (int r = 0; r < nrows; ++r) {
            if (r == rank) continue;
            Scalar f = rows[size_t(r)][size_t(col)];
            if (f.is_zero()) continue;
            for (int c = col; c < ncols; ++c)
                rows[size_t(r)][size_t(c)] -= f * rows[size_t(rank)][size_t(c)];
            rhs[size_t(r)] -= f * rhs[size_t(rank)];
        }
        pivot_col[size_t(rank)] = col;
        ++rank;
    }
    for (int r = rank; r < nrows; ++r) {
        bool zero = mode == Mode::Exact
                        ? rhs[size_t(r)].is_zero()
                        : rhs[size_t(r)].abs() < 1e-8;
        if (!zero) throw std::runtime_error("jets: constraint system inconsistent");
    }
    AffineSolution sol;
    sol.particular.assign(size_t(ncols), Scalar::zero(mode));
    for (int r = 0; r < rank; ++r) sol.particular[size_t(pivot_col[size_t(r)])] = rhs[size_t(r)];
    std::vector<bool> is_pivot(size_t(ncols), false);
    for (int r = 0; r < rank; ++r) is_pivot[size_t(pivot_col[size_t(r)])] = true;
    for (int free = 0; free < ncols; ++free) {
        if (is_pivot[size_t(free)]) continue;
        std::vector<Scalar> v(size_t(ncols), Scalar::zero(mode));
        v[size_t(free)] = Scalar::one(mode);
        for (int r = 0; r < rank; ++r)
            v[size_t(pivot_col[size_t(r)])] = -rows[size_t(r)][size_t(free)];
        sol.kernel.push_back(std::move(v));
    }
    return sol;
}

// ---------------------------------------------------------------------
// algebraic curvature tensors: projector and basis

/// Project onto tensors with the two antisymmetries, pair symmetry and the
/// first Bianchi identity.
std::vector<Scalar> curvature_project(const std::vector<Scalar>& t, int d, Mode mode) {
    auto at = [&](const std::vector<Scalar>& v, int i, int j, int k, int l) {
        return v[size_t(((i * d + j) * d + k) * d + l)];
    };
    std::vector<Scalar> t1(t.size(), Scalar::zero(mode));
    Scalar q = Scalar::rational(1, 4, mode);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l)
                    t1[size_t(((i * d + j) * d + k) * d + l)] =
                        q * (at(t, i, j, k, l) - at(t, j, i, k, l) - at(t, i, j, l, k) +
                             at(t, j, i, l, k));
    std::vector<Scalar> t2(t.size(), Scalar::zero(mode));
    Scalar h = half(mode);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l)
                    t2[size_t(((i * d + j) * d + k) * d + l)] =
                        h * (at(t1, i, j, k, l) + at(t1, k, l, i, j));
    // remove the totally antisymmetric (Bianchi-violating) component
    std::vector<Scalar> out(t.size(), Scalar::zero(mode));
    Scalar third = Scalar::rational(1, 3, mode);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) {
                    Scalar b = third * (at(t2, i, j, k, l) + at(t2, j, k, i, l) +
                                        at(t2, k, i, j, l));
                    out[size_t(((i * d + j) * d + k) * d + l)] = at(t2, i, j, k, l) - b;
                }
    return out;
}

/// Basis of the curvature-tensor space, cached per dimension.
const std::vector<std::vector<Scalar>>& curvature_basis(int d) {
    static std::map<int, std::vector<std::vector<Scalar>>> cache;
    auto it = cache.find(d);
    if (it != cache.end()) return it->second;
    std::vector<std::vector<Scalar>> basis;
    std::map<size_t, std::vector<Scalar>> echelon; // lead column -> reduced row
    const size_t len = size_t(d) * d * d * d;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            for (int k = 0; k < d; ++k)
                for (int l = k + 1; l < d; ++l) {
                    std::vector<Scalar> e(len, Scalar::zero(Mode::Exact));
                    e[size_t(((i * d + j) * d + k) * d + l)] = Scalar::one(Mode::Exact);
                    std::vector<Scalar> p = curvature_project(e, d, Mode::Exact);
                    std::vector<Scalar> r = p;
                    size_t lead = 0;
                    while (lead < len) {
                        while (lead < len && r[lead].is_zero()) ++lead;
                        if (lead == len) break;
                        auto it = echelon.find(lead);
                        if (it == echelon.end()) break;
                        Scalar f = r[lead] / it->second[lead];
                        for (size_t c = lead; c < len; ++c) r[c] -= f * it->second[c];
                    }
                    if (lead < len) {
                        echelon.emplace(lead, std::move(r));
                        basis.push_back(std::move(p));
                    }
                }
    return cache.emplace(d, std::move(basis)).first->second;
}

std::vector<Scalar> to_mode(const std::vector<Scalar>& v, Mode mode) {
    if (mode == Mode::Exact) return v;
    std::vector<Scalar> out;
    out.reserve(v.size());
    for (const auto& s : v) out.push_back(Scalar::from_complex(s.to_complex()));
    return out;
}

// ---------------------------------------------------------------------
// random sampling helpers

struct Sampler {
    std::mt19937_64 rng;
    Mode mode;
    explicit Sampler(uint64_t seed, Mode m) : rng(seed * 0x9e3779b97f4a7c15ULL + 1), mode(m) {}

    Scalar real_rat() {
        long num = long(rng() % 13) - 6;
        long den = 1 + long(rng() % 3);
        return Scalar::rational(num, den, mode);
    }
    Scalar nonzero_real_rat() {
        Scalar s = real_rat();
        while (s.is_zero()) s = real_rat();
        return s;
    }
    Scalar complex_rat() {
        return real_rat() + Scalar::imaginary_unit(mode) * real_rat();
    }
    Coef herm_matrix(int rank) {
        Coef m(rank, mode);
        for (int i = 0; i < rank; ++i)
            for (int j = 0; j < rank; ++j) m.at(i, j) = complex_rat();
        Coef h = m + m.adjoint();
        return half(mode) * h;
    }
    Coef skew_herm_matrix(int rank) {
        Coef m(rank, mode);
        for (int i = 0; i < rank; ++i)
            for (int j = 0; j < rank; ++j) m.at(i, j) = complex_rat();
        Coef h = m - m.adjoint();
        return half(mode) * h;
    }
};

/// Cyclic projection of a 3-tensor antisymmetric in its last two slots onto
/// the subspace with vanishing cyclic sum (the 2-form closedness shape).
void cyclic_project3(std::vector<Scalar>& t, int d, Mode mode) {
    std::vector<Scalar> out(t.size(), Scalar::zero(mode));
    Scalar third = Scalar::rational(1, 3, mode);
    auto at = [&](int i, int j, int k) { return t[size_t((i * d + j) * d + k)]; };
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) {
                Scalar s = third * (at(i, j, k) + at(j, k, i) + at(k, i, j));
                out[size_t((i * d + j) * d + k)] = at(i, j, k) - s;
            }
    t = std::move(out);
}

/// Pack index helpers for the joint (RTX, nnJ) constraint solve.
struct SymSkewIndex {
    int d;
    std::vector<std::pair<int, int>> sym_pairs;  // i <= j
    std::vector<std::pair<int, int>> skew_pairs; // k < l
    explicit SymSkewIndex(int d_) : d(d_) {
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) sym_pairs.push_back({i, j});
        for (int k = 0; k < d; ++k)
            for (int l = k + 1; l < d; ++l) skew_pairs.push_back({k, l});
    }
    int sym_id(int i, int j) const {
        if (i > j) std::swap(i, j);
        return i * d - i * (i - 1) / 2 + (j - i);
    }
    // returns (flat id, sign); 0 for k == l
    std::pair<int, int> skew_id(int k, int l) const {
        if (k == l) return {-1, 0};
        int sgn = 1;
        if (k > l) { std::swap(k, l); sgn = -1; }
        int id = 0;
        for (int a = 0; a < k; ++a) id += d - 1 - a;
        id += l - k - 1;
        return {id, sgn};
    }
    int n_s() const { return int(sym_pairs.size() * skew_pairs.size()); }
    int s_col(int i, int j, int k, int l, int& sgn) const {
        auto [sid, sg] = skew_id(k, l);
        sgn = sg;
        if (sid < 0) return -1;
        return sym_id(i, j) * int(skew_pairs.size()) + sid;
    }
};

} // namespace

PointJets flat(int n, Mode mode, int rank) {
    PointJets j;
    j.n = n;
    j.rank = rank;
    j.mode = mode;
    j.kahler = true;
    const int d = dim_of(n);
    j.a.assign(size_t(n), Scalar::two_pi(mode));
    j.dRL.assign(size_t(d * d * d), Scalar::zero(mode));
    j.d2RL.assign(size_t(d * d * d * d), Scalar::zero(mode));
    j.RTX.assign(size_t(d * d * d * d), Scalar::zero(mode));
    j.RE.assign(size_t(d * d), Coef(rank, mode));
    j.dtau.assign(size_t(d), Scalar::zero(mode));
    j.d2tau.assign(size_t(d * d), Scalar::zero(mode));
    j.Phi = Coef(rank, mode);
    j.nablaJ.assign(size_t(d * d * d), Scalar::zero(mode));
    j.nnJ.assign(size_t(d * d * d * d), Scalar::zero(mode));
    return j;
}

std::vector<Scalar> derive_dtau(const PointJets& j) {
    FrameMap f = j.frame();
    std::vector<Scalar> out(size_t(j.dim()), Scalar::zero(j.mode));
    Scalar two = Scalar::integer(2, j.mode);
    for (int k = 0; k < j.dim(); ++k) {
        Scalar s = Scalar::zero(j.mode);
        for (int i = 0; i < j.n; ++i) s += j.dRL_c(f.real(k), f.dz(i), f.dzbar(i));
        out[size_t(k)] = two * s;
    }
    return out;
}

std::vector<Scalar> derive_d2RL(const PointJets& j) {
    const int d = j.dim();
    std::vector<Scalar> out(size_t(d * d * d * d), Scalar::zero(j.mode));
    Scalar h = half(j.mode);
    Scalar third = Scalar::rational(1, 3, j.mode);
    Scalar sixth = Scalar::rational(1, 6, j.mode);
    for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q)
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) {
                    Scalar nn = h * (j.nnJ[size_t(j.i4(p, q, k, l))] +
                                     j.nnJ[size_t(j.i4(q, p, k, l))]);
                    auto [mk, ck] = j.jc(k);
                    auto [ml, cl] = j.jc(l);
                    // <R(e_p,e_l)e_q, Jc e_k> - <R(e_p,e_k)e_q, Jc e_l>,
                    // symmetrized in (p,q)
                    Scalar r1 = ck * j.RTX[size_t(j.i4(p, l, q, mk))] -
                                cl * j.RTX[size_t(j.i4(p, k, q, ml))];
                    Scalar r2 = ck * j.RTX[size_t(j.i4(q, l, p, mk))] -
                                cl * j.RTX[size_t(j.i4(q, k, p, ml))];
                    out[size_t(j.i4(p, q, k, l))] = nn + sixth * (r1 + r2);
                }
    return out;
}

PointJets random(int n, int rank, uint64_t seed, bool kahler, Mode mode) {
    PointJets j = flat(n, mode, rank);
    j.kahler = kahler;
    const int d = dim_of(n);
    Sampler smp(seed, mode);

    if (kahler) {
        j.a.assign(size_t(n), Scalar::two_pi(mode));
    } else {
        for (int i = 0; i < n; ++i) {
            long num = 1 + long(smp.rng() % 5);
            long den = 1 + long(smp.rng() % 3);
            j.a[size_t(i)] = Scalar::rational(num, den, mode);
        }
    }

    // nablaJ: skew in the last two slots and anticommuting with J; in the
    // Kaehler case additionally of pure complex type with zero cyclic sum.
    if (kahler) {
        if (n >= 2) {
            std::vector<Scalar> c(size_t(n * n * n), Scalar::zero(mode));
            auto ci = [&](int i, int jj, int k) { return size_t((i * n + jj) * n + k); };
            for (int i = 0; i < n; ++i)
                for (int jj = 0; jj < n; ++jj)
                    for (int k = 0; k < n; ++k) c[ci(i, jj, k)] = smp.complex_rat();
            // antisymmetrize last two, then drop the cyclic part
            std::vector<Scalar> c2(c.size(), Scalar::zero(mode));
            for (int i = 0; i < n; ++i)
                for (int jj = 0; jj < n; ++jj)
                    for (int k = 0; k < n; ++k)
                        c2[ci(i, jj, k)] = half(mode) * (c[ci(i, jj, k)] - c[ci(i, k, jj)]);
            std::vector<Scalar> c3(c.size(), Scalar::zero(mode));
            Scalar third = Scalar::rational(1, 3, mode);
            for (int i = 0; i < n; ++i)
                for (int jj = 0; jj < n; ++jj)
                    for (int k = 0; k < n; ++k)
                        c3[ci(i, jj, k)] =
                            c2[ci(i, jj, k)] -
                            third * (c2[ci(i, jj, k)] + c2[ci(jj, k, i)] + c2[ci(k, i, jj)]);
            // real tensor from the (1,0)^3 component and its conjugate
            FrameMap f = j.frame();
            auto decompose = [&](int k) {
                // e_k = sum over holomorphic directions + conjugates
                // e_{2i} = dz_i + dzbar_i ; e_{2i+1} = i dz_i - i dzbar_i
                std::vector<std::pair<int, Scalar>> hol, antihol;
                int i = k / 2;
                if (k % 2 == 0) {
                    hol.push_back({i, Scalar::one(mode)});
                    antihol.push_back({i, Scalar::one(mode)});
                } else {
                    hol.push_back({i, Scalar::imaginary_unit(mode)});
                    antihol.push_back({i, -Scalar::imaginary_unit(mode)});
                }
                return std::make_pair(hol, antihol);
            };
            for (int A = 0; A < d; ++A)
                for (int B = 0; B < d; ++B)
                    for (int C = 0; C < d; ++C) {
                        auto [ha, aa] = decompose(A);
                        auto [hb, ab] = decompose(B);
                        auto [hc, ac] = decompose(C);
                        Scalar v = Scalar::zero(mode);
                        for (auto& [ia, ca] : ha)
                            for (auto& [ib, cb] : hb)
                                for (auto& [ic, cc] : hc)
                                    v += ca * cb * cc * c3[ci(ia, ib, ic)];
                        for (auto& [ia, ca] : aa)
                            for (auto& [ib, cb] : ab)
                                for (auto& [ic, cc] : ac)
                                    v += ca * cb * cc * c3[ci(ia, ib, ic)].conj();
                        j.nablaJ[size_t(j.i3(A, B, C))] = v;
                    }
        }
    } else {
        // sample, make each slice skew, then project onto the
        // J-anticommuting part: M -> (M + J M J)/2
        for (int A = 0; A < d; ++A) {
            std::vector<Scalar> M(size_t(d * d), Scalar::zero(mode));
            for (int k = 0; k < d; ++k)
                for (int l = k + 1; l < d; ++l) {
                    Scalar v = smp.real_rat();
                    M[size_t(k * d + l)] = v;
                    M[size_t(l * d + k)] = -v;
                }
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) {
                    auto [kp, sk] = FrameMap::j0(k);
                    auto [lp, sl] = FrameMap::j0(l);
                    Scalar jmj = Scalar::integer(-sk * sl, mode) * M[size_t(kp * d + lp)];
                    j.nablaJ[size_t(j.i3(A, k, l))] = half(mode) * (M[size_t(k * d + l)] + jmj);
                }
        }
    }

    // dRL
    if (kahler) {
        Scalar m2pi_i = -(Scalar::two_pi(mode) * Scalar::imaginary_unit(mode));
        for (size_t t = 0; t < j.dRL.size(); ++t) j.dRL[t] = m2pi_i * j.nablaJ[t];
    } else {
        std::vector<Scalar> T(size_t(d * d * d), Scalar::zero(mode));
        Scalar iu = Scalar::imaginary_unit(mode);
        for (int A = 0; A < d; ++A)
            for (int k = 0; k < d; ++k)
                for (int l = k + 1; l < d; ++l) {
                    Scalar v = iu * smp.real_rat();
                    T[size_t((A * d + k) * d + l)] = v;
                    T[size_t((A * d + l) * d + k)] = -v;
                }
        cyclic_project3(T, d, mode);
        j.dRL = std::move(T);
    }

    // E-curvature, potential, tau Hessian
    for (int A = 0; A < d; ++A)
        for (int B = A + 1; B < d; ++B) {
            Coef e = smp.skew_herm_matrix(rank);
            j.RE[size_t(j.i2(A, B))] = e;
            j.RE[size_t(j.i2(B, A))] = -e;
        }
    j.Phi = smp.herm_matrix(rank);
    if (!kahler) {
        for (int A = 0; A < d; ++A)
            for (int B = A; B < d; ++B) {
                Scalar v = smp.real_rat();
                j.d2tau[size_t(j.i2(A, B))] = v;
                j.d2tau[size_t(j.i2(B, A))] = v;
            }
    }

    // Joint sample of (RTX, nnJ) on the constraint variety.  Unknowns are
    // the curvature-basis coordinates r and the symmetric part S of nnJ
    // (for Kaehler: of grad grad J); the antisymmetric part is fixed by the
    // Ricci identity [R, Jc].  Constraints: vanishing cyclic sum over the
    // last three slots, plus (Kaehler) the second-derivative identity of
    // J^2 = -1.
    {
        const auto& basis_exact = curvature_basis(d);
        std::vector<std::vector<Scalar>> basis;
        for (const auto& b : basis_exact) basis.push_back(to_mode(b, mode));
        const int nr = int(basis.size());
        SymSkewIndex sx(d);
        const int ns = sx.n_s();
        const int ncols = nr + ns;
        // S entries are i * (real unknown) outside the Kaehler branch
        Scalar s_unit = kahler ? Scalar::one(mode) : Scalar::imaginary_unit(mode);

        // A-part of nnJ from a curvature basis element:
        // <[R(e_i,e_j), K] e_k, e_l>/2 with K = Jc (or J in the Kaehler case)
        auto a_part = [&](const std::vector<Scalar>& R, int i, int jj, int k, int l) {
            Scalar v = Scalar::zero(mode);
            if (kahler) {
                auto [kp, sk] = FrameMap::j0(k);
                auto [lp, sl] = FrameMap::j0(l);
                v += Scalar::integer(sk, mode) * R[size_t(j.i4(i, jj, kp, l))];
                v += Scalar::integer(sl, mode) * R[size_t(j.i4(i, jj, k, lp))];
            } else {
                auto [kp, ck] = j.jc(k);
                auto [lp, cl] = j.jc(l);
                v += ck * R[size_t(j.i4(i, jj, kp, l))];
                v += cl * R[size_t(j.i4(i, jj, k, lp))];
            }
            return half(mode) * v;
        };

        std::vector<std::vector<Scalar>> rows;
        std::vector<Scalar> rhs;

        // cyclic-sum constraints over slots (2,3,4), one per antisym triple
        for (int y = 0; y < d; ++y)
            for (int u = 0; u < d; ++u)
                for (int v = u + 1; v < d; ++v)
                    for (int w = v + 1; w < d; ++w) {
                        std::vector<Scalar> row(size_t(ncols), Scalar::zero(mode));
                        std::array<std::array<int, 3>, 3> trip = {
                            {{u, v, w}, {v, w, u}, {w, u, v}}};
                        for (const auto& t : trip) {
                            int sgn = 0;
                            int col = sx.s_col(y, t[0], t[1], t[2], sgn);
                            if (col >= 0)
                                row[size_t(nr + col)] += Scalar::integer(sgn, mode) * s_unit;
                            for (int m = 0; m < nr; ++m)
                                row[size_t(m)] += a_part(basis[size_t(m)], y, t[0], t[1], t[2]);
                        }
                        rows.push_back(std::move(row));
                        rhs.push_back(Scalar::zero(mode));
                    }

        if (kahler) {
            // S J + J S = -(gradJ gradJ + gradJ gradJ) on each symmetric pair
            for (auto [i, jj] : sx.sym_pairs)
                for (int k = 0; k < d; ++k)
                    for (int l = k; l < d; ++l) {
                        std::vector<Scalar> row(size_t(ncols), Scalar::zero(mode));
                        auto [kp, sk] = FrameMap::j0(k);
                        auto [lp, sl] = FrameMap::j0(l);
                        int sg1 = 0, sg2 = 0;
                        int c1 = sx.s_col(i, jj, kp, l, sg1);
                        int c2 = sx.s_col(i, jj, k, lp, sg2);
                        if (c1 >= 0) row[size_t(nr + c1)] += Scalar::integer(sk * sg1, mode);
                        if (c2 >= 0) row[size_t(nr + c2)] -= Scalar::integer(sl * sg2, mode);
                        Scalar q = Scalar::zero(mode);
                        for (int m = 0; m < d; ++m)
                            q -= j.nablaJ[size_t(j.i3(jj, k, m))] *
                                     j.nablaJ[size_t(j.i3(i, m, l))] +
                                 j.nablaJ[size_t(j.i3(i, k, m))] *
                                     j.nablaJ[size_t(j.i3(jj, m, l))];
                        rows.push_back(std::move(row));
                        rhs.push_back(q);
                    }
        }

        AffineSolution sol = solve_affine(std::move(rows), std::move(rhs), ncols, mode);
        std::vector<Scalar> x = sol.particular;
        for (const auto& kv : sol.kernel) {
            Scalar c = smp.real_rat();
            for (int m = 0; m < ncols; ++m) x[size_t(m)] += c * kv[size_t(m)];
        }

        // assemble RTX
        std::vector<Scalar> R(size_t(d * d * d * d), Scalar::zero(mode));
        for (int m = 0; m < nr; ++m)
            if (!x[size_t(m)].is_zero())
                for (size_t t = 0; t < R.size(); ++t) R[t] += x[size_t(m)] * basis[size_t(m)][t];
        j.RTX = R;

        // assemble nnJ = S + A; in the Kaehler case scale grad grad J by
        // -2 pi i to get the curvature-endomorphism second derivative
        Scalar unit = kahler ? -(Scalar::two_pi(mode) * Scalar::imaginary_unit(mode))
                             : Scalar::one(mode);
        for (int i = 0; i < d; ++i)
            for (int jj = 0; jj < d; ++jj)
                for (int k = 0; k < d; ++k)
                    for (int l = 0; l < d; ++l) {
                        int sgn = 0;
                        int col = sx.s_col(i, jj, k, l, sgn);
                        Scalar s = Scalar::zero(mode);
                        if (col >= 0) s = Scalar::integer(sgn, mode) * x[size_t(nr + col)];
                        Scalar apart = a_part(j.RTX, i, jj, k, l);
                        j.nnJ[size_t(j.i4(i, jj, k, l))] = unit * (s_unit * s + apart);
                    }
    }

    j.dtau = derive_dtau(j);
    j.d2RL = derive_d2RL(j);
    if (kahler) {
        j.d2tau.assign(size_t(d * d), Scalar::zero(mode));
    }
    return j;
}

namespace {

bool eqz(const Scalar& s) { return s == Scalar::zero(s.mode()); }

} // namespace

std::vector<std::string> validate(const PointJets& j) {
    std::vector<std::string> bad;
    auto flag = [&bad](bool ok, const char* name) {
        if (!ok) bad.push_back(name);
    };
    const int d = j.dim();
    try {
        (void)j.model();
    } catch (const std::exception&) {
        bad.push_back("a-positive-monomial");
    }

    bool im = true, anti = true, cyc = true;
    for (int A = 0; A < d && (im || anti || cyc); ++A)
        for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l) {
                const Scalar& v = j.dRL[size_t(j.i3(A, k, l))];
                if (!v.is_imaginary()) im = false;
                if (!(v == -j.dRL[size_t(j.i3(A, l, k))])) anti = false;
                Scalar s = v + j.dRL[size_t(j.i3(k, l, A))] + j.dRL[size_t(j.i3(l, A, k))];
                if (!eqz(s)) cyc = false;
            }
    flag(im, "dRL-imaginary");
    flag(anti, "dRL-antisym");
    flag(cyc, "dRL-cyclic");

    bool r12 = true, r34 = true, rp = true, rb = true, rr = true;
    for (int i = 0; i < d; ++i)
        for (int jj = 0; jj < d; ++jj)
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) {
                    const Scalar& v = j.RTX[size_t(j.i4(i, jj, k, l))];
                    if (!v.is_real()) rr = false;
                    if (!(v == -j.RTX[size_t(j.i4(jj, i, k, l))])) r12 = false;
                    if (!(v == -j.RTX[size_t(j.i4(i, jj, l, k))])) r34 = false;
                    if (!(v == j.RTX[size_t(j.i4(k, l, i, jj))])) rp = false;
                    Scalar b = v + j.RTX[size_t(j.i4(jj, k, i, l))] +
                               j.RTX[size_t(j.i4(k, i, jj, l))];
                    if (!eqz(b)) rb = false;
                }
    flag(rr, "RTX-real");
    flag(r12, "RTX-antisym-12");
    flag(r34, "RTX-antisym-34");
    flag(rp, "RTX-pair-symmetry");
    flag(rb, "RTX-bianchi");

    bool re_a = true, re_sh = true;
    for (int i = 0; i < d; ++i)
        for (int jj = 0; jj < d; ++jj) {
            const Coef& e = j.RE[size_t(j.i2(i, jj))];
            if (!(e == -j.RE[size_t(j.i2(jj, i))])) re_a = false;
            if (!(e.adjoint() == -e)) re_sh = false;
        }
    flag(re_a, "RE-antisym");
    flag(re_sh, "RE-skew-hermitian");
    flag(j.Phi.adjoint() == j.Phi, "Phi-hermitian");

    bool nj_skew = true, nj_anti = true, nj_real = true;
    for (int A = 0; A < d; ++A)
        for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l) {
                const Scalar& v = j.nablaJ[size_t(j.i3(A, k, l))];
                if (!v.is_real()) nj_real = false;
                if (!(v == -j.nablaJ[size_t(j.i3(A, l, k))])) nj_skew = false;
                auto [kp, sk] = FrameMap::j0(k);
                auto [lp, sl] = FrameMap::j0(l);
                Scalar s = Scalar::integer(sk, j.mode) * j.nablaJ[size_t(j.i3(A, kp, l))] -
                           Scalar::integer(sl, j.mode) * j.nablaJ[size_t(j.i3(A, k, lp))];
                if (!eqz(s)) nj_anti = false;
            }
    flag(nj_real, "nablaJ-real");
    flag(nj_skew, "nablaJ-skew");
    flag(nj_anti, "nablaJ-anticommute");

    bool nn_im = true, nn_skew = true, nn_ricci = true, nn_cyc = true;
    for (int i = 0; i < d; ++i)
        for (int jj = 0; jj < d; ++jj)
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) {
                    const Scalar& v = j.nnJ[size_t(j.i4(i, jj, k, l))];
                    if (!v.is_imaginary()) nn_im = false;
                    if (!(v == -j.nnJ[size_t(j.i4(i, jj, l, k))])) nn_skew = false;
                    // Ricci identity for the antisymmetric part
                    auto [kp, ck] = j.jc(k);
                    auto [lp, cl] = j.jc(l);
                    Scalar comm = ck * j.RTX[size_t(j.i4(i, jj, kp, l))] +
                                  cl * j.RTX[size_t(j.i4(i, jj, k, lp))];
                    Scalar asym = v - j.nnJ[size_t(j.i4(jj, i, k, l))];
                    if (!(asym == comm)) nn_ricci = false;
                }
    for (int y = 0; y < d; ++y)
        for (int u = 0; u < d; ++u)
            for (int v = 0; v < d; ++v)
                for (int w = 0; w < d; ++w) {
                    Scalar s = j.nnJ[size_t(j.i4(y, u, v, w))] +
                               j.nnJ[size_t(j.i4(y, v, w, u))] +
                               j.nnJ[size_t(j.i4(y, w, u, v))];
                    if (!eqz(s)) nn_cyc = false;
                }
    flag(nn_im, "nnJ-imaginary");
    flag(nn_skew, "nnJ-antisym-34");
    flag(nn_ricci, "nnJ-ricci");
    flag(nn_cyc, "nnJ-cyclic");

    // tau jets against the canonical derivations
    {
        auto dt = derive_dtau(j);
        bool ok = true;
        for (int k = 0; k < d; ++k)
            if (!(dt[size_t(k)] == j.dtau[size_t(k)])) ok = false;
        flag(ok, "dtau-consistent");
        auto d2 = derive_d2RL(j);
        ok = true;
        for (size_t t = 0; t < d2.size(); ++t)
            if (!(d2[t] == j.d2RL[t])) ok = false;
        flag(ok, "d2RL-consistent");
        ok = true;
        for (int p = 0; p < d; ++p)
            for (int q = 0; q < d; ++q) {
                const Scalar& v = j.d2tau[size_t(j.i2(p, q))];
                if (!v.is_real() || !(v == j.d2tau[size_t(j.i2(q, p))])) ok = false;
            }
        flag(ok, "d2tau-symmetric-real");
    }

    if (j.kahler) {
        bool ok = true;
        for (const auto& s : j.a)
            if (!(s == Scalar::two_pi(j.mode))) ok = false;
        flag(ok, "kahler-a-2pi");

        Scalar m2pi_i = -(Scalar::two_pi(j.mode) * Scalar::imaginary_unit(j.mode));
        ok = true;
        for (size_t t = 0; t < j.dRL.size(); ++t)
            if (!(j.dRL[t] == m2pi_i * j.nablaJ[t])) ok = false;
        flag(ok, "kahler-dRL-is-2pi-nablaJ");

        // pure-type condition: <(grad J).,.> has no mixed complex components
        FrameMap f = j.frame();
        ok = true;
        for (int i1 = 0; i1 < j.n; ++i1)
            for (int i2 = 0; i2 < j.n; ++i2)
                for (int i3c = 0; i3c < j.n; ++i3c) {
                    if (!eqz(j.nablaJ_c(f.dz(i1), f.dz(i2), f.dzbar(i3c)))) ok = false;
                    if (!eqz(j.nablaJ_c(f.dz(i1), f.dzbar(i2), f.dz(i3c)))) ok = false;
                    if (!eqz(j.nablaJ_c(f.dzbar(i1), f.dz(i2), f.dz(i3c)))) ok = false;
                    if (!eqz(j.nablaJ_c(f.dzbar(i1), f.dzbar(i2), f.dz(i3c)))) ok = false;
                }
        flag(ok, "kahler-nablaJ-pure-type");

        // second derivative of J^2 = -1
        ok = true;
        Scalar i_over_2pi = Scalar::imaginary_unit(j.mode) / Scalar::two_pi(j.mode);
        for (int i = 0; i < d && ok; ++i)
            for (int jj = 0; jj < d; ++jj)
                for (int k = 0; k < d; ++k)
                    for (int l = 0; l < d; ++l) {
                        // K = grad grad J entries
                        auto K = [&](int p, int q, int r, int s) {
                            return i_over_2pi * j.nnJ[size_t(j.i4(p, q, r, s))];
                        };
                        auto [kp, sk] = FrameMap::j0(k);
                        auto [lp, sl] = FrameMap::j0(l);
                        Scalar lhs = Scalar::integer(sk, j.mode) * K(i, jj, kp, l) -
                                     Scalar::integer(sl, j.mode) * K(i, jj, k, lp);
                        Scalar rhs = Scalar::zero(j.mode);
                        for (int m = 0; m < d; ++m)
                            rhs -= j.nablaJ[size_t(j.i3(jj, k, m))] *
                                       j.nablaJ[size_t(j.i3(i, m, l))] +
                                   j.nablaJ[size_t(j.i3(i, k, m))] *
                                       j.nablaJ[size_t(j.i3(jj, m, l))];
                        if (!(lhs == rhs)) { ok = false; }
                    }
        flag(ok, "kahler-nnJ-second-derivative-identity");

        ok = true;
        for (const auto& s : j.dtau)
            if (!eqz(s)) ok = false;
        for (const auto& s : j.d2tau)
            if (!eqz(s)) ok = false;
        flag(ok, "kahler-tau-constant");
    }
    return bad;
}

DiffOp build_O1(const PointJets& j) {
    ModelSpec m = j.model();
    const int d = j.dim();
    DiffOp out = DiffOp::zero(m);
    Scalar m23 = Scalar::rational(-2, 3, j.mode);
    Scalar m13 = Scalar::rational(-1, 3, j.mode);
    for (int i = 0; i < d; ++i) {
        DiffOp coeff = DiffOp::zero(m);
        for (int jj = 0; jj < d; ++jj)
            for (int k = 0; k < d; ++k) {
                const Scalar& c = j.dRL[size_t(j.i3(jj, k, i))];
                if (c.is_zero()) continue;
                coeff += (z_mult(m, jj) * z_mult(m, k)).scaled(m23 * c);
            }
        if (!coeff.is_zero()) out += coeff * nabla0(m, i);
    }
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) {
            const Scalar& c = j.dRL[size_t(j.i3(i, k, i))];
            if (!c.is_zero()) out += z_mult(m, k).scaled(m13 * c);
        }
    for (int k = 0; k < d; ++k) {
        const Scalar& c = j.dtau[size_t(k)];
        if (!c.is_zero()) out += z_mult(m, k).scaled(-c);
    }
    return out;
}

DiffOp build_O1_ladder_form(const PointJets& j) {
    ModelSpec m = j.model();
    FrameMap f = j.frame();
    const int d = j.dim();
    DiffOp out = DiffOp::zero(m);
    Scalar m23 = Scalar::rational(-2, 3, j.mode);
    Scalar p23 = Scalar::rational(2, 3, j.mode);
    for (int i = 0; i < m.n(); ++i) {
        DiffOp bp = DiffOp::generator(m, {Gen::Bplus, i}, Scalar::one(j.mode));
        DiffOp b = DiffOp::generator(m, {Gen::B, i}, Scalar::one(j.mode));
        for (int jj = 0; jj < d; ++jj)
            for (int k = 0; k < d; ++k) {
                Scalar c1 = j.dRL_c(f.real(jj), f.real(k), f.dz(i));
                if (!c1.is_zero())
                    out += (z_mult(m, jj) * z_mult(m, k) * bp).scaled(m23 * c1);
                Scalar c2 = j.dRL_c(f.real(jj), f.real(k), f.dzbar(i));
                if (!c2.is_zero())
                    out += (b * z_mult(m, jj) * z_mult(m, k)).scaled(p23 * c2);
            }
    }
    return out;
}

DiffOp build_O2(const PointJets& j) {
    ModelSpec m = j.model();
    const int d = j.dim();
    Mode mode = j.mode;
    DiffOp out = DiffOp::zero(m);
    Scalar third = Scalar::rational(1, 3, mode);
    Scalar p23 = Scalar::rational(2, 3, mode);

    // second-order block
    for (int i = 0; i < d; ++i)
        for (int jj = 0; jj < d; ++jj) {
            DiffOp coeff = DiffOp::zero(m);
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) {
                    const Scalar& c = j.RTX[size_t(j.i4(k, i, l, jj))];
                    if (c.is_zero()) continue;
                    coeff += (z_mult(m, k) * z_mult(m, l)).scaled(third * c);
                }
            if (!coeff.is_zero()) out += coeff * nabla0(m, i) * nabla0(m, jj);
        }

    // first-order block
    for (int i = 0; i < d; ++i) {
        DiffOp coeff = DiffOp::zero(m);
        for (int jj = 0; jj < d; ++jj)
            for (int k = 0; k < d; ++k) {
                const Scalar& c = j.RTX[size_t(j.i4(k, jj, jj, i))];
                if (!c.is_zero()) coeff += z_mult(m, k).scaled(p23 * c);
            }
        for (int p = 0; p < d; ++p)
            for (int q = 0; q < d; ++q)
                for (int k = 0; k < d; ++k) {
                    const Scalar& c = j.d2RL[size_t(j.i4(p, q, k, i))];
                    if (!c.is_zero())
                        coeff += (z_mult(m, p) * z_mult(m, q) * z_mult(m, k))
                                     .scaled(Scalar::rational(-1, 4, mode) * c);
                }
        for (int k = 0; k < d; ++k) {
            const Coef& e = j.RE[size_t(j.i2(k, i))];
            if (!e.is_zero()) coeff += z_mult(m, k).left_mul_coef(-e);
        }
        if (!coeff.is_zero()) out += coeff * nabla0(m, i);
    }

    // -(1/4) d_i of the cubic polynomial sum_{|alpha|=2} (d^a R^L)(R,e_i) Z^a/a!
    Scalar m18 = Scalar::rational(-1, 8, mode);
    for (int i = 0; i < d; ++i)
        for (int p = 0; p < d; ++p)
            for (int q = 0; q < d; ++q)
                for (int k = 0; k < d; ++k) {
                    const Scalar& c = j.d2RL[size_t(j.i4(p, q, k, i))];
                    if (c.is_zero()) continue;
                    if (p == i) out += (z_mult(m, q) * z_mult(m, k)).scaled(m18 * c);
                    if (q == i) out += (z_mult(m, p) * z_mult(m, k)).scaled(m18 * c);
                    if (k == i) out += (z_mult(m, p) * z_mult(m, q)).scaled(m18 * c);
                }

    // -(1/9) sum_i (first-derivative quadratic)^2
    Scalar m19 = Scalar::rational(-1, 9, mode);
    for (int i = 0; i < d; ++i) {
        DiffOp poly = DiffOp::zero(m);
        for (int jj = 0; jj < d; ++jj)
            for (int k = 0; k < d; ++k) {
                const Scalar& c = j.dRL[size_t(j.i3(jj, k, i))];
                if (!c.is_zero()) poly += (z_mult(m, jj) * z_mult(m, k)).scaled(c);
            }
        if (!poly.is_zero()) out += (poly * poly).scaled(m19);
    }

    // -(1/12) [L0, <R(R,e_i)R,e_i>]
    {
        DiffOp w = DiffOp::zero(m);
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) {
                    const Scalar& c = j.RTX[size_t(j.i4(k, i, l, i))];
                    if (!c.is_zero()) w += (z_mult(m, k) * z_mult(m, l)).scaled(c);
                }
        if (!w.is_zero()) {
            DiffOp l0 = DiffOp::l0(m);
            out += commutator(l0, w).scaled(Scalar::rational(-1, 12, mode));
        }
    }

    // tau Hessian and the potential
    for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q) {
            const Scalar& c = j.d2tau[size_t(j.i2(p, q))];
            if (!c.is_zero())
                out += (z_mult(m, p) * z_mult(m, q)).scaled(Scalar::rational(-1, 2, mode) * c);
        }
    if (!j.Phi.is_zero()) out += DiffOp::identity(m).left_mul_coef(j.Phi);
    return out;
}

KernelPoly<Coef> o2_pn_closed_form(const PointJets& j) {
    ModelSpec m = j.model();
    FrameMap f = j.frame();
    const int d = j.dim();
    const int n = j.n;
    Mode mode = j.mode;
    DiffOp g = DiffOp::zero(m);

    auto B = [&](int i) { return DiffOp::generator(m, {Gen::B, i}, Scalar::one(mode)); };

    // (1/3) b_i b_j <R(R, dzbar_i) R, dzbar_j>
    Scalar third = Scalar::rational(1, 3, mode);
    for (int i = 0; i < n; ++i)
        for (int jj = 0; jj < n; ++jj) {
            DiffOp poly = DiffOp::zero(m);
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) {
                    Scalar c = j.RTX_c(f.real(k), f.dzbar(i), f.real(l), f.dzbar(jj));
                    if (!c.is_zero()) poly += (z_mult(m, k) * z_mult(m, l)).scaled(c);
                }
            if (!poly.is_zero()) g += (B(i) * B(jj) * poly).scaled(third);
        }

    // (1/2) b_i sum_{|alpha|=2} (d^a R^L)(R, dzbar_i) Z^a/a!
    Scalar quarter = Scalar::rational(1, 4, mode);
    for (int i = 0; i < n; ++i) {
        DiffOp poly = DiffOp::zero(m);
        for (int p = 0; p < d; ++p)
            for (int q = 0; q < d; ++q)
                for (int k = 0; k < d; ++k) {
                    Scalar c = Scalar::zero(mode);
                    for (const auto& [l, cl] : f.dzbar(i))
                        c += cl * j.d2RL[size_t(j.i4(p, q, k, l))];
                    if (!c.is_zero())
                        poly += (z_mult(m, p) * z_mult(m, q) * z_mult(m, k)).scaled(c);
                }
        if (!poly.is_zero()) g += (B(i) * poly).scaled(quarter);
    }

    // (4/3) b_j [ <R(dz_i, dzbar_i) R, dzbar_j> - <R(R, dz_i) dzbar_i, dzbar_j> ]
    Scalar p43 = Scalar::rational(4, 3, mode);
    for (int jj = 0; jj < n; ++jj) {
        DiffOp poly = DiffOp::zero(m);
        for (int k = 0; k < d; ++k) {
            Scalar c = Scalar::zero(mode);
            for (int i = 0; i < n; ++i) {
                c += j.RTX_c(f.dz(i), f.dzbar(i), f.real(k), f.dzbar(jj));
                c -= j.RTX_c(f.real(k), f.dz(i), f.dzbar(i), f.dzbar(jj));
            }
            if (!c.is_zero()) poly += z_mult(m, k).scaled(c);
        }
        if (!poly.is_zero()) g += (B(jj) * poly).scaled(p43);
    }

    // R^E(R, dzbar_i) b_i
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < d; ++k) {
            Coef e = j.RE_c(f.real(k), f.dzbar(i));
            if (!e.is_zero()) g += (z_mult(m, k) * B(i)).left_mul_coef(e);
        }

    // <(grad grad Jc)_(R,R) dz_i, dzbar_i>
    for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
            Scalar c = Scalar::zero(mode);
            for (int i = 0; i < n; ++i)
                c += j.nnJ_c(f.real(k), f.real(l), f.dz(i), f.dzbar(i));
            if (!c.is_zero()) g += (z_mult(m, k) * z_mult(m, l)).scaled(c);
        }

    // 4 <R(dz_i, dz_j) dzbar_i, dzbar_j>
    {
        Scalar c = Scalar::zero(mode);
        for (int i = 0; i < n; ++i)
            for (int jj = 0; jj < n; ++jj)
                c += j.RTX_c(f.dz(i), f.dz(jj), f.dzbar(i), f.dzbar(jj));
        c = Scalar::integer(4, mode) * c;
        if (!c.is_zero()) g += DiffOp::identity(m).scaled(c);
    }

    // -(1/3) L0 <R(R, dz_j) R, dzbar_j>
    {
        DiffOp w = DiffOp::zero(m);
        for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l) {
                Scalar c = Scalar::zero(mode);
                for (int jj = 0; jj < n; ++jj)
                    c += j.RTX_c(f.real(k), f.dz(jj), f.real(l), f.dzbar(jj));
                if (!c.is_zero()) w += (z_mult(m, k) * z_mult(m, l)).scaled(c);
            }
        if (!w.is_zero()) g += (DiffOp::l0(m) * w).scaled(-third);
    }

    // (1/9) |(grad_R Jc) R|^2  (imaginary entries: equals -(1/9) sum poly^2)
    Scalar m19 = Scalar::rational(-1, 9, mode);
    for (int l = 0; l < d; ++l) {
        DiffOp poly = DiffOp::zero(m);
        for (int p = 0; p < d; ++p)
            for (int k = 0; k < d; ++k) {
                const Scalar& c = j.dRL[size_t(j.i3(p, k, l))];
                if (!c.is_zero()) poly += (z_mult(m, p) * z_mult(m, k)).scaled(c);
            }
        if (!poly.is_zero()) g += (poly * poly).scaled(m19);
    }

    // tau Hessian and potential
    for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q) {
            const Scalar& c = j.d2tau[size_t(j.i2(p, q))];
            if (!c.is_zero())
                g += (z_mult(m, p) * z_mult(m, q)).scaled(Scalar::rational(-1, 2, mode) * c);
        }
    if (!j.Phi.is_zero()) g += DiffOp::identity(m).left_mul_coef(j.Phi);

    return g.apply(KernelPoly<Coef>::pn(m));
}

DerivedQuantities derived_quantities(const PointJets& j) {
    DerivedQuantities q{Scalar::zero(j.mode), Scalar::zero(j.mode), Scalar::zero(j.mode),
                        Scalar::zero(j.mode)};
    const int d = j.dim();
    for (int A = 0; A < d; ++A)
        for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l) {
                const Scalar& v = j.nablaJ[size_t(j.i3(A, k, l))];
                q.norm_nablaJ_sq += v * v;
            }
    q.rho = q.norm_nablaJ_sq / Scalar::integer(24, j.mode);
    FrameMap f = j.frame();
    Scalar s = Scalar::zero(j.mode);
    for (int i = 0; i < j.n; ++i)
        for (int jj = 0; jj < j.n; ++jj)
            s += j.RTX_c(f.dz(i), f.dzbar(jj), f.dz(jj), f.dzbar(i));
    q.rX = Scalar::integer(8, j.mode) * s -
           Scalar::rational(1, 4, j.mode) * q.norm_nablaJ_sq;
    Scalar t = Scalar::zero(j.mode);
    for (int i = 0; i < d; ++i)
        for (int jj = 0; jj < d; ++jj) t += j.RTX[size_t(j.i4(i, jj, i, jj))];
    q.rX_direct = -t;
    return q;
}

PointJets rotate(const PointJets& j, const std::vector<Scalar>& rot) {
    const int d = j.dim();
    auto R = [&](int i, int k) { return rot[size_t(i * d + k)]; };
    PointJets out = j;
    auto rot3 = [&](const std::vector<Scalar>& t) {
        std::vector<Scalar> o(t.size(), Scalar::zero(j.mode));
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) {
                    Scalar s = Scalar::zero(j.mode);
                    for (int a = 0; a < d; ++a)
                        for (int b = 0; b < d; ++b)
                            for (int c = 0; c < d; ++c)
                                s += R(i, a) * R(k, b) * R(l, c) * t[size_t((a * d + b) * d + c)];
                    o[size_t((i * d + k) * d + l)] = s;
                }
        return o;
    };
    auto rot4 = [&](const std::vector<Scalar>& t) {
        std::vector<Scalar> o(t.size(), Scalar::zero(j.mode));
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l)
                    for (int m2 = 0; m2 < d; ++m2) {
                        Scalar s = Scalar::zero(j.mode);
                        for (int a = 0; a < d; ++a)
                            for (int b = 0; b < d; ++b)
                                for (int c = 0; c < d; ++c)
                                    for (int e = 0; e < d; ++e)
                                        s += R(i, a) * R(k, b) * R(l, c) * R(m2, e) *
                                             t[size_t(((a * d + b) * d + c) * d + e)];
                        o[size_t(((i * d + k) * d + l) * d + m2)] = s;
                    }
        return o;
    };
    out.dRL = rot3(j.dRL);
    out.nablaJ = rot3(j.nablaJ);
    out.RTX = rot4(j.RTX);
    out.nnJ = rot4(j.nnJ);
    out.d2RL = rot4(j.d2RL);
    for (int i = 0; i < d; ++i) {
        Scalar s = Scalar::zero(j.mode);
        for (int a = 0; a < d; ++a) s += R(i, a) * j.dtau[size_t(a)];
        out.dtau[size_t(i)] = s;
    }
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) {
            Scalar s = Scalar::zero(j.mode);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) s += R(i, a) * R(k, b) * j.d2tau[size_t(j.i2(a, b))];
            out.d2tau[size_t(out.i2(i, k))] = s;
        }
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) {
            Coef s(j.rank, j.mode);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) s += (R(i, a) * R(k, b)) * j.RE[size_t(j.i2(a, b))];
            out.RE[size_t(out.i2(i, k))] = s;
        }
    return out;
}

} // namespace jets
} // namespace bergman
