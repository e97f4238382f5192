#include "bergman/expansion.hpp"

#include <functional>
#include <stdexcept>

namespace bergman {
namespace expansion {
namespace {

int pole_of(const KernelPoly<RatLam>& k) {
    int m = 0;
    for (const auto& [key, c] : k.terms()) m = std::max(m, c.pole_at_zero());
    return m;
}

/// Degree guard from the structure theorem: deg J_{q,r} <= 3r.
void check_degree(const KernelPoly<RatLam>& k, int r, const char* where) {
    if (k.degree() > 3 * r)
        throw std::runtime_error(std::string("expansion: degree bound 3r exceeded in ") + where);
}

KernelPoly<RatLam> resolvent_perp_poly(const KernelPoly<RatLam>& k) {
    const ModelSpec& m = k.model();
    NormalKernel<RatLam> nk = wick::to_normal(k);
    NormalKernel<RatLam> out(m);
    for (const auto& [key, c] : nk.terms()) {
        if (key.beta.is_zero()) continue;
        out.add_term(key, c.over_linear(m.eigenvalue(key.beta)));
    }
    return wick::from_normal(out);
}

KernelPoly<RatLam> pi_branch_poly(const KernelPoly<RatLam>& k) {
    const ModelSpec& m = k.model();
    NormalKernel<RatLam> nk = wick::to_normal(k).project_N();
    NormalKernel<RatLam> out(m);
    Scalar zero = Scalar::zero(m.mode());
    for (const auto& [key, c] : nk.terms()) out.add_term(key, c.over_linear(zero));
    return wick::from_normal(out);
}

KernelPoly<RatLam> pn_ratlam(const ModelSpec& m) { return KernelPoly<RatLam>::pn(m); }

Coef residue_kernel_entry(const RatLam& c, int q, const ModelSpec& m) {
    return c.residue_at_zero(q, m.rank(), m.mode());
}

KernelPoly<Coef> take_residue(const KernelPoly<RatLam>& k, int q) {
    const ModelSpec& m = k.model();
    KernelPoly<Coef> out(m);
    for (const auto& [key, c] : k.terms()) out.add_term(key, residue_kernel_entry(c, q, m));
    out.prune_float();
    return out;
}

/// Compositions of r into parts drawn from 1..max_part.
void compositions(int r, int max_part, std::vector<int>& cur,
                  const std::function<void(const std::vector<int>&)>& emit) {
    if (r == 0) {
        emit(cur);
        return;
    }
    for (int part = 1; part <= std::min(r, max_part); ++part) {
        cur.push_back(part);
        compositions(r - part, max_part, cur, emit);
        cur.pop_back();
    }
}

} // namespace

NormalKernel<RatLam> resolvent(const NormalKernel<RatLam>& nk, bool n_branch) {
    const ModelSpec& m = nk.model();
    NormalKernel<RatLam> out(m);
    Scalar zero = Scalar::zero(m.mode());
    for (const auto& [key, c] : nk.terms()) {
        if (key.beta.is_zero()) {
            if (n_branch) out.add_term(key, c.over_linear(zero));
        } else {
            out.add_term(key, c.over_linear(m.eigenvalue(key.beta)));
        }
    }
    return out;
}

SeriesResult compute_series(const ModelSpec& model, const std::vector<DiffOp>& ops, int r_max) {
    if (r_max > int(ops.size()) && r_max > 0)
        throw std::invalid_argument("compute_series: need O_j for every j <= r_max");
    SeriesResult res;
    std::vector<KernelPoly<RatLam>> f; // f_r = g_r + fperp_r applied to P^N
    {
        KernelPoly<RatLam> g0 = pn_ratlam(model);
        NormalKernel<RatLam> nk = wick::to_normal(g0);
        KernelPoly<RatLam> g0k = wick::from_normal(resolvent(nk, true));
        res.g.push_back(resolvent(nk, true));
        res.fperp.push_back(NormalKernel<RatLam>(model));
        res.g_pole.push_back(1);
        res.fperp_pole.push_back(0);
        f.push_back(g0k);
    }
    for (int r = 1; r <= r_max; ++r) {
        KernelPoly<RatLam> t(model);
        for (int j = 1; j <= r; ++j) t += ops[size_t(j - 1)].apply(f[size_t(r - j)]);
        check_degree(t, r, "compute_series");
        KernelPoly<RatLam> g = pi_branch_poly(t);
        KernelPoly<RatLam> fp = resolvent_perp_poly(t);
        int pg = pole_of(g), pf = pole_of(fp);
        if (pg > r / 2 + 1 || pf > (r + 1) / 2)
            throw std::runtime_error("compute_series: pole order exceeds the structural bound");
        res.g.push_back(wick::to_normal(g));
        res.fperp.push_back(wick::to_normal(fp));
        res.g_pole.push_back(pg);
        res.fperp_pole.push_back(pf);
        f.push_back(g + fp);
    }
    return res;
}

KernelPoly<Coef> compute_F(const ModelSpec& model, const std::vector<DiffOp>& ops, int q,
                           int r) {
    if (q < 0 || r < 0) throw std::invalid_argument("compute_F: q, r must be >= 0");
    if (r == 0) {
        KernelPoly<Coef> pn = KernelPoly<Coef>::pn(model);
        if (q == 0) return pn;
        return KernelPoly<Coef>::zero(model);
    }
    // For r <= 2q only the first two Taylor operators can contribute to the
    // residue.  Beyond that, a chain needs at least q operator factors to
    // reach pole order q+1, so parts larger than r - (q-1) never occur.
    int max_part = (r <= 2 * q) ? std::min<int>(2, int(ops.size())) : r - std::max(0, q - 1);
    if (max_part > int(ops.size()))
        throw std::invalid_argument("compute_F: missing Taylor operator O_j for some j <= r");
    std::vector<DiffOp> adj;
    adj.reserve(ops.size());
    for (const auto& o : ops) adj.push_back(o.adjoint());

    KernelPoly<RatLam> acc(model);
    std::vector<int> cur;
    compositions(r, max_part, cur, [&](const std::vector<int>& parts) {
        const int k = int(parts.size());
        if (k < q) return; // pole order can be at most k+1 <= q: no residue
        // split at the rightmost kernel-branch factor X_s = (1/lambda) P^N;
        // all X_t with t > s are perp resolvents
        for (int s = k; s >= 0; --s) {
            // suffix: kernel of P^N O_{j_{s+1}} R ... O_{j_k} R, via the
            // adjoint of the reversed chain applied to P^N
            KernelPoly<RatLam> u = pn_ratlam(model);
            for (int t = s + 1; t <= k; ++t) {
                u = adj[size_t(parts[size_t(t - 1)] - 1)].apply(u);
                u = resolvent_perp_poly(u);
            }
            KernelPoly<RatLam> base = u.adjoint();
            {
                // multiply by the 1/lambda of the split position
                NormalKernel<RatLam> nk = wick::to_normal(base);
                NormalKernel<RatLam> shifted(model);
                Scalar zero = Scalar::zero(model.mode());
                for (const auto& [key, c] : nk.terms())
                    shifted.add_term(key, c.over_linear(zero));
                base = wick::from_normal(shifted);
            }
            // left factors; X-slots 0..s-1 range over both branches
            const int nleft = s;
            for (int mask = 0; mask < (1 << nleft); ++mask) {
                int npi = 1 + __builtin_popcount(unsigned(mask));
                if (npi < q + 1) continue;
                KernelPoly<RatLam> curk = base;
                bool dead = false;
                for (int t = s; t >= 1 && !dead; --t) {
                    curk = ops[size_t(parts[size_t(t - 1)] - 1)].apply(curk);
                    bool pi_slot = (mask >> (t - 1)) & 1;
                    curk = pi_slot ? pi_branch_poly(curk) : resolvent_perp_poly(curk);
                    dead = curk.is_zero();
                }
                if (!dead) acc += curk;
            }
        }
    });
    check_degree(acc, r, "compute_F");
    return take_residue(acc, q);
}

Coef b_coeff(const ModelSpec& model, const std::vector<DiffOp>& ops, int q, int r) {
    KernelPoly<Coef> F = compute_F(model, ops, q, 2 * r + 2 * q);
    return model.pn_at_origin() * wick::eval_at_origin(F);
}

KernelPoly<Coef> f_q_2q(const ModelSpec& model, const std::vector<DiffOp>& ops, int q) {
    if (q < 0) throw std::invalid_argument("f_q_2q: q must be >= 0");
    if (ops.size() < 2) throw std::invalid_argument("f_q_2q: O_1 and O_2 required");
    KernelPoly<Coef> cur = KernelPoly<Coef>::pn(model);
    for (int step = 0; step < q; ++step) {
        KernelPoly<Coef> t1 = wick::project_N(ops[1].apply(wick::project_N(cur)));
        KernelPoly<Coef> inner = wick::inv_L0_perp(ops[0].apply(wick::project_N(cur)));
        KernelPoly<Coef> t2 = wick::project_N(ops[0].apply(inner));
        cur = t1 - t2;
        cur.prune_float();
    }
    return cur;
}

Coef closed_b01(const PointJets& j) {
    if (!j.kahler) throw std::invalid_argument("closed_b01: Kaehler jets required");
    DerivedQuantities d = jets::derived_quantities(j);
    Mode mode = j.mode;
    Scalar s = d.rX + Scalar::rational(1, 4, mode) * d.norm_nablaJ_sq;
    Coef out = Coef::scalar(s, j.rank);
    // 2 i R^E(e_j, J e_j)
    Coef re(j.rank, mode);
    for (int k = 0; k < j.dim(); ++k) {
        auto [kp, sk] = FrameMap::j0(k);
        re += Scalar::integer(sk, mode) * j.RE[size_t(j.i2(k, kp))];
    }
    out += (Scalar::integer(2, mode) * Scalar::imaginary_unit(mode)) * re;
    Scalar denom = Scalar::integer(4, mode) * Scalar::two_pi(mode); // 8 pi
    return out / denom;
}

Coef closed_bq0(const PointJets& j, int q) {
    if (!j.kahler) throw std::invalid_argument("closed_bq0: Kaehler jets required");
    if (q < 1) throw std::invalid_argument("closed_bq0: q must be >= 1");
    DerivedQuantities d = jets::derived_quantities(j);
    Mode mode = j.mode;
    Coef base = Coef::scalar(d.rho, j.rank);
    Coef re(j.rank, mode);
    for (int k = 0; k < j.dim(); ++k) {
        auto [kp, sk] = FrameMap::j0(k);
        re += Scalar::integer(sk, mode) * j.RE[size_t(j.i2(k, kp))];
    }
    base += (Scalar::rational(1, 2, mode) * Scalar::imaginary_unit(mode)) * re;
    base += j.Phi;
    return base.pow(q);
}

std::complex<double> near_diagonal_kernel(const ModelSpec& model,
                                          const std::vector<DiffOp>& ops, int q, int k,
                                          const std::vector<double>& Z,
                                          const std::vector<double>& Zp, double p) {
    std::vector<double> zs(Z.size()), zps(Zp.size());
    double sp = std::sqrt(p);
    for (size_t i = 0; i < Z.size(); ++i) zs[i] = sp * Z[i];
    for (size_t i = 0; i < Zp.size(); ++i) zps[i] = sp * Zp[i];
    std::complex<double> acc = 0;
    for (int r = 2 * q; r <= k; ++r) {
        KernelPoly<Coef> F = compute_F(model, ops, q, r);
        acc += wick::eval_kernel(F, zs, zps) * std::pow(p, -0.5 * r + q);
    }
    return acc;
}

ExpansionReport build_report(const PointJets& jets_in, int q_max) {
    ModelSpec model = jets_in.model();
    std::vector<DiffOp> ops = {jets::build_O1(jets_in), jets::build_O2(jets_in)};
    ExpansionReport rep(model);
    for (int q = 0; q <= q_max; ++q)
        for (int r = 0; r <= 2 * q; ++r) rep.F.emplace(std::make_pair(q, r),
                                                       compute_F(model, ops, q, r));
    // subleading diagonal values
    rep.F.emplace(std::make_pair(0, 1), compute_F(model, ops, 0, 1));
    rep.F.emplace(std::make_pair(0, 2), compute_F(model, ops, 0, 2));
    for (int q = 1; q <= q_max; ++q)
        rep.b.emplace(std::make_pair(q, 0), b_coeff(model, ops, q, 0));
    rep.b.emplace(std::make_pair(0, 0), b_coeff(model, ops, 0, 0));
    rep.b.emplace(std::make_pair(0, 1), b_coeff(model, ops, 0, 1));
    SeriesResult s = compute_series(model, ops, 2);
    for (int r = 0; r < int(s.g_pole.size()); ++r) rep.g_pole_orders[r] = s.g_pole[size_t(r)];
    return rep;
}

} // namespace expansion
} // namespace bergman
