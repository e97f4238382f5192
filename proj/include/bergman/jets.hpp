#ifndef BERGMAN_JETS_HPP
#define BERGMAN_JETS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "bergman/diff_op.hpp"
#include "bergman/kernel.hpp"
#include "bergman/model_spec.hpp"
#include "bergman/scalar.hpp"

namespace bergman {

/// Sparse complex tangent vector: list of (real frame index, coefficient).
using CVec = std::vector<std::pair<int, Scalar>>;

/// Unitary frame dictionary between the real basis e_1..e_2n and the
/// complex directions d/dz_i, d/dzbar_i (e_{2j-1} = (w_j + wbar_j)/sqrt2,
/// w_j = sqrt2 d/dz_j).
struct FrameMap {
    int n;
    Mode mode;

    CVec dz(int i) const {
        Scalar h = Scalar::rational(1, 2, mode);
        Scalar mih = Scalar::rational(-1, 2, mode) * Scalar::imaginary_unit(mode);
        return {{2 * i, h}, {2 * i + 1, mih}};
    }
    CVec dzbar(int i) const {
        Scalar h = Scalar::rational(1, 2, mode);
        Scalar ih = Scalar::rational(1, 2, mode) * Scalar::imaginary_unit(mode);
        return {{2 * i, h}, {2 * i + 1, ih}};
    }
    CVec real(int k) const { return {{k, Scalar::one(mode)}}; }

    /// J e_{2j-1} = e_{2j},  J e_{2j} = -e_{2j-1}.
    static std::pair<int, int> j0(int k) {
        return (k % 2 == 0) ? std::make_pair(k + 1, +1) : std::make_pair(k - 1, -1);
    }
};

/// Pointwise curvature/connection data at the base point, real-index dense
/// storage (dimension 2n is at most 4 here).  Complex-index access goes
/// through FrameMap contractions.
struct PointJets {
    int n = 1;
    int rank = 1;
    Mode mode = Mode::Exact;
    bool kahler = false;

    std::vector<Scalar> a;      // eigenvalues of the curvature endomorphism
    std::vector<Scalar> dRL;    // [j][k][l] (d_j R^L)(e_k, e_l), purely imaginary
    std::vector<Scalar> d2RL;   // [i][j][k][l] (d_i d_j R^L)(e_k, e_l)
    std::vector<Scalar> RTX;    // [i][j][k][l] <R(e_i,e_j) e_k, e_l>, real
    std::vector<Coef> RE;       // [i][j] curvature of E, skew-Hermitian values
    std::vector<Scalar> dtau;   // [k]
    std::vector<Scalar> d2tau;  // [i][j], symmetric real
    Coef Phi;                   // Hermitian
    std::vector<Scalar> nablaJ; // [j][k][l] <(grad_j J) e_k, e_l>, real
    std::vector<Scalar> nnJ;    // [i][j][k][l] <(grad grad Jc)_(i,j) e_k, e_l>, imaginary

    int dim() const { return 2 * n; }
    int i2(int i, int j) const { return i * dim() + j; }
    int i3(int i, int j, int k) const { return (i * dim() + j) * dim() + k; }
    int i4(int i, int j, int k, int l) const { return ((i * dim() + j) * dim() + k) * dim() + l; }

    FrameMap frame() const { return FrameMap{n, mode}; }
    ModelSpec model() const { return ModelSpec(a, rank); }

    /// e_k under the curvature endomorphism: Jc e_{2j-1} = -i a_j e_{2j},
    /// Jc e_{2j} = +i a_j e_{2j-1}.
    std::pair<int, Scalar> jc(int k) const {
        auto [kp, s] = FrameMap::j0(k);
        Scalar c = Scalar::imaginary_unit(mode) * a[size_t(k / 2)];
        if (s > 0) c = -c;
        return {kp, c};
    }
    /// R^L_0(e_k, e_l) = <Jc e_k, e_l>.
    Scalar rl0(int k, int l) const {
        auto [kp, c] = jc(k);
        return kp == l ? c : Scalar::zero(mode);
    }

    // contraction helpers over the stored tensors
    Scalar dRL_c(const CVec& u, const CVec& v, const CVec& w) const;
    Scalar RTX_c(const CVec& u, const CVec& v, const CVec& w, const CVec& x) const;
    Scalar nablaJ_c(const CVec& u, const CVec& v, const CVec& w) const;
    Scalar nnJ_c(const CVec& u, const CVec& v, const CVec& w, const CVec& x) const;
    Coef RE_c(const CVec& u, const CVec& v) const;
};

struct DerivedQuantities {
    Scalar norm_nablaJ_sq; // |grad J|^2
    Scalar rho;            // |grad J|^2 / 24
    Scalar rX;             // scalar curvature via the Kaehler identity
    Scalar rX_direct;      // -<R(e_i,e_j)e_i,e_j>
};

namespace jets {

/// All-zero jets of the Kaehler flat model (a_i = 2 pi).
PointJets flat(int n, Mode mode, int rank = 1);

/// Deterministic random jets on the constraint variety.
PointJets random(int n, int rank, uint64_t seed, bool kahler, Mode mode);

/// Names of violated invariants; empty iff the jets are valid.
std::vector<std::string> validate(const PointJets& j);

/// First-order Taylor coefficient of the rescaled operator.
DiffOp build_O1(const PointJets& j);

/// Second-order Taylor coefficient of the rescaled operator.
DiffOp build_O2(const PointJets& j);

/// O1 in ladder form (two-term commutator shape); must equal build_O1.
DiffOp build_O1_ladder_form(const PointJets& j);

/// Closed form of O2 P^N (Lemma on O2 P^N); oracle for build_O2.
KernelPoly<Coef> o2_pn_closed_form(const PointJets& j);

DerivedQuantities derived_quantities(const PointJets& j);

/// tau first derivatives from dRL; d2RL from nnJ and RTX.
std::vector<Scalar> derive_dtau(const PointJets& j);
std::vector<Scalar> derive_d2RL(const PointJets& j);

/// Orthogonally rotated copy: every tensor transformed by the 2n x 2n
/// matrix rot (columns = images of e_k); rot must preserve the model data
/// for the result to be valid.
PointJets rotate(const PointJets& j, const std::vector<Scalar>& rot);

} // namespace jets
} // namespace bergman

#endif
