#ifndef BERGMAN_EXPANSION_HPP
#define BERGMAN_EXPANSION_HPP

#include <complex>
#include <map>
#include <vector>

#include "bergman/diff_op.hpp"
#include "bergman/jets.hpp"
#include "bergman/kernel.hpp"
#include "bergman/rational_lambda.hpp"

namespace bergman {
namespace expansion {

/// Resolvent action on ladder normal form: each beta != 0 term picks up
/// 1/(lambda - 2 beta.a); the beta = 0 part picks up 1/lambda when the
/// kernel branch is requested and is dropped otherwise.
NormalKernel<RatLam> resolvent(const NormalKernel<RatLam>& nk, bool n_branch);

struct SeriesResult {
    // kernels of g_r(lambda) P^N and f_r^perp(lambda) P^N
    std::vector<NormalKernel<RatLam>> g;
    std::vector<NormalKernel<RatLam>> fperp;
    std::vector<int> g_pole;      // observed pole orders at lambda = 0
    std::vector<int> fperp_pole;
};

/// Formal resolvent power series applied to P^N, with the pole-order
/// bounds asserted order by order.
SeriesResult compute_series(const ModelSpec& model, const std::vector<DiffOp>& ops, int r_max);

/// Full two-sided kernel of the expansion coefficient F_{q,r}, computed by
/// contour residue of the resolvent series.
KernelPoly<Coef> compute_F(const ModelSpec& model, const std::vector<DiffOp>& ops, int q, int r);

/// b_{q,r} = F_{q,2r+2q}(0,0) as an End(E) value.
Coef b_coeff(const ModelSpec& model, const std::vector<DiffOp>& ops, int q, int r);

/// Closed composition route for F_{q,2q}:
/// (P^N O2 P^N - P^N O1 L0^{-1} P^{N perp} O1 P^N)^q P^N.
KernelPoly<Coef> f_q_2q(const ModelSpec& model, const std::vector<DiffOp>& ops, int q);

/// Closed form of the first subleading coefficient (Kaehler data):
/// b_{0,1} = (1/8 pi) [ r^X + |grad J|^2/4 + 2 i R^E(e_j, J e_j) ].
Coef closed_b01(const PointJets& j);

/// Closed form of b_{q,0} (Kaehler data):
/// ( |grad J|^2/24 + (i/2) R^E(e_j, J e_j) + Phi )^q.
Coef closed_bq0(const PointJets& j, int q);

/// Truncated near-diagonal prediction
/// sum_{r=2q}^{k} F_{q,r}(sqrt p Z, sqrt p Z') p^{-r/2+q}  (kappa == 1).
std::complex<double> near_diagonal_kernel(const ModelSpec& model,
                                          const std::vector<DiffOp>& ops, int q, int k,
                                          const std::vector<double>& Z,
                                          const std::vector<double>& Zp, double p);

struct ExpansionReport {
    ModelSpec model;
    std::map<std::pair<int, int>, KernelPoly<Coef>> F;
    std::map<std::pair<int, int>, Coef> b;
    std::map<int, int> g_pole_orders;
    explicit ExpansionReport(ModelSpec m) : model(std::move(m)) {}
};

/// F_{q,r} for q <= q_max, 2q <= r <= r_max(q), plus b_{q,0} and b_{0,1}.
ExpansionReport build_report(const PointJets& jets, int q_max);

} // namespace expansion
} // namespace bergman

#endif
