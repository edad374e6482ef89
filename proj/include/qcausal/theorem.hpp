#pragma once

// Numerical harness for the locality statement: if every central subsector of
// the joint algebra carries a state that is uncorrelated for the pair (A, B),
// then A and B commute.  The harness searches each sector for such a state,
// builds the total-coincidence core projection P, and checks commutation.

#include "correlation.hpp"

namespace qcausal {

// Largest projection fixed by T(E, F) for every supplied pair: the fold of
// the lattice meets P ^ T(E, F), which is order-independent because the meet
// is an exact range intersection.
inline Projection compute_coincidence_core(Index dim, const PairSource& pairs) {
    Projection p = Projection::identity(dim);
    pairs.for_each([&](const Projection& e, const Projection& f) {
        if (p.is_zero()) return;
        p = meet_spectral(p, total_coincidence(e, f)).meet;
    });
    return p;
}

struct CentralityCheck {
    double commutator_residual;  // max over the algebra's generating set
    double membership_residual;
    bool central;
};

inline CentralityCheck check_central(const Projection& p, const OperatorAlgebra& alg) {
    if (p.dim() != alg.dim()) throw std::invalid_argument("check_central: dimension mismatch");
    double comm = 0.0;
    for (const CMatrix& g : alg.generating_set())
        comm = std::max(comm, commutator_norm(p.matrix(), g));
    const double mem = alg.membership_residual(p.matrix());
    return {comm, mem, comm <= tol::commutator && mem <= tol::span};
}

struct PhiExtraction {
    CVector phi;
    double t_residual;  // max over pairs of ||T(E,F) phi - phi||
};

// Pull a vector state out of the support of rho that every total coincidence
// fixes.  For an uncorrelated omega each T(E, F) has expectation one, so the
// dominant support vectors must be nearly fixed; the best candidate is
// accepted when its residual stays below sqrt(4 * tolerance).
inline PhiExtraction extract_phi(const State& rho, const PairSource& pairs,
                                 double tolerance = 1e-6) {
    SpectralDecomposition sd = spectral(rho.density());
    const double top = sd.eigenvalues(sd.eigenvalues.size() - 1);
    std::vector<CVector> candidates;
    for (Index i = 0; i < sd.eigenvalues.size(); ++i)
        if (sd.eigenvalues(i) > tol::rank_rel * top) candidates.push_back(sd.eigenvectors.col(i));
    if (candidates.empty()) throw std::runtime_error("extract_phi: state has empty support");

    std::vector<double> residual(candidates.size(), 0.0);
    pairs.for_each([&](const Projection& e, const Projection& f) {
        const CMatrix t = total_coincidence(e, f).matrix();
        for (std::size_t k = 0; k < candidates.size(); ++k)
            residual[k] = std::max(residual[k], (t * candidates[k] - candidates[k]).norm());
    });

    std::size_t best = 0;
    for (std::size_t k = 1; k < candidates.size(); ++k)
        if (residual[k] < residual[best]) best = k;
    const double accept = std::sqrt(4.0 * tolerance);
    if (residual[best] > accept)
        throw std::runtime_error("extract_phi: no support vector is fixed by the coincidences");

    CVector phi = candidates[best];
    Index lead = 0;
    for (Index i = 1; i < phi.size(); ++i)
        if (std::abs(phi(i)) > std::abs(phi(lead))) lead = i;
    if (std::abs(phi(lead)) > 0) phi *= std::conj(phi(lead)) / std::abs(phi(lead));
    return {std::move(phi), residual[best]};
}

// max ||[X, Y] w|| over orthonormal basis pairs (X from A, Y from B) and word
// vectors w built by applying short random products of basis elements to phi.
// On the cyclic subspace of an uncorrelated vector this vanishes.
inline double phi_commutation_residual(const CVector& phi, const OperatorAlgebra& a,
                                       const OperatorAlgebra& b, std::uint64_t seed = 0,
                                       int words = 100, int max_len = 3) {
    if (phi.size() != a.dim() || a.dim() != b.dim())
        throw std::invalid_argument("phi_commutation_residual: dimension mismatch");
    std::vector<CVector> vectors{phi / phi.norm()};
    std::vector<CMatrix> letters = a.basis();
    letters.insert(letters.end(), b.basis().begin(), b.basis().end());
    std::mt19937_64 rng(seed ^ 0x2b7e151628aed2a6ull);
    std::uniform_int_distribution<std::size_t> pick(0, letters.size() - 1);
    std::uniform_int_distribution<int> len(1, std::max(1, max_len));
    for (int w = 0; w < words; ++w) {
        CVector v = phi;
        const int l = len(rng);
        for (int s = 0; s < l; ++s) v = letters[pick(rng)] * v;
        const double n = v.norm();
        if (n > 1e-9) vectors.push_back(v / n);
    }
    double worst = 0.0;
    for (const CMatrix& x : a.basis())
        for (const CMatrix& y : b.basis()) {
            const CMatrix c = x * y - y * x;
            for (const CVector& v : vectors) worst = std::max(worst, (c * v).norm());
        }
    return worst;
}

enum class TheoremConclusion { locality_verified, obstruction_found, inconclusive };

struct SectorReport {
    int index;
    Index rank;
    bool uncorrelated_found;
    bool obstructed;
    double best_residual;     // C restricted to the sector
    bool pairs_certifying;    // the sector search used exhaustive lattices
    long pairs_used;
    double phi_t_residual = -1.0;  // set when a witness vector was extracted
    double word_residual = -1.0;
};

struct TheoremBudget {
    double tolerance = 1e-6;    // sector verdict threshold on C
    long pairs_per_sector = 64;
    long global_pairs = 64;     // coincidence-core construction
    MeasureBudget search;       // per-sector state optimization
    std::uint64_t seed = 0;
};

struct ProofTrace {
    TheoremConclusion conclusion;
    double max_commutator;      // max ||[X, Y]|| over basis pairs
    std::optional<Projection> coincidence_core;
    CentralityCheck core_check{-1.0, -1.0, false};
    double commutation_residual_on_core = -1.0;  // max ||[X, Y] P||
    std::optional<CVector> phi;  // witness from the first verified sector
    std::vector<SectorReport> sectors;
    int obstructed_sector = -1;
    long pairs_used = 0;
    std::uint64_t seed = 0;
};

inline ProofTrace verify_theorem(const OperatorAlgebra& a, const OperatorAlgebra& b,
                                 const TheoremBudget& budget = {}) {
    if (a.dim() != b.dim()) throw std::invalid_argument("verify_theorem: dimension mismatch");
    if (!(budget.tolerance > 0)) throw std::invalid_argument("verify_theorem: tolerance must be positive");

    ProofTrace trace;
    trace.seed = budget.seed;
    trace.max_commutator = 0.0;
    for (const CMatrix& x : a.basis())
        for (const CMatrix& y : b.basis())
            trace.max_commutator = std::max(trace.max_commutator, commutator_norm(x, y));

    OperatorAlgebra joint = join_algebras(a, b);
    CentralDecomposition cd = central_decomposition(joint, budget.seed);

    PairSource global = PairSource::automatic(a, b, budget.global_pairs,
                                              budget.seed ^ 0x452821e638d01377ull);
    trace.pairs_used += global.count();
    Projection core = compute_coincidence_core(a.dim(), global);
    trace.core_check = check_central(core, joint);
    trace.commutation_residual_on_core = 0.0;
    for (const CMatrix& x : a.basis())
        for (const CMatrix& y : b.basis())
            trace.commutation_residual_on_core = std::max(
                trace.commutation_residual_on_core, op_norm((x * y - y * x) * core.matrix()));
    trace.coincidence_core = std::move(core);

    bool all_found = true;
    for (std::size_t i = 0; i < cd.minimal_central_projections.size(); ++i) {
        const Projection& sector = cd.minimal_central_projections[i];
        MeasureBudget m = budget.search;
        m.inner.sample_pairs = budget.pairs_per_sector;
        m.seed = budget.seed ^ (0x9e3779b97f4a7c15ull * (i + 1));
        m.stop_below = std::max(m.stop_below, budget.tolerance * 1e-3);
        CausalityMeasureReport rep = c_measure(a, b, sector, m);

        SectorReport sr;
        sr.index = static_cast<int>(i);
        sr.rank = sector.rank();
        sr.best_residual = rep.c_value;
        sr.pairs_certifying = rep.inner_exhaustive;
        sr.pairs_used = rep.pairs_in_bank + rep.final_report.samples_used;
        sr.uncorrelated_found = rep.c_value <= budget.tolerance;
        sr.obstructed = rep.c_value > 10.0 * budget.tolerance;
        trace.pairs_used += sr.pairs_used;

        if (sr.uncorrelated_found) {
            // pull a fixed vector out of the optimizer's state, inside the sector
            const CMatrix v = sector.range_basis();
            OperatorAlgebra wa = compress(a, v);
            OperatorAlgebra wb = compress(b, v);
            State wstate = State::from_density(v.adjoint() * rep.optimizing_state.density() * v);
            PairSource extraction = PairSource::automatic(
                wa, wb, budget.pairs_per_sector, budget.seed ^ (0xbe5466cf34e90c6cull + i));
            trace.pairs_used += extraction.count();
            try {
                PhiExtraction ext = extract_phi(wstate, extraction, budget.tolerance);
                sr.phi_t_residual = ext.t_residual;
                CVector phi_full = v * ext.phi;
                sr.word_residual = phi_commutation_residual(phi_full, a, b,
                                                            budget.seed ^ (i + 1));
                if (!trace.phi) trace.phi = std::move(phi_full);
            } catch (const std::runtime_error&) {
                // leave the extraction fields unset; the verdict rests on C
            }
        } else {
            all_found = false;
            if (sr.obstructed && trace.obstructed_sector < 0)
                trace.obstructed_sector = sr.index;
        }
        trace.sectors.push_back(std::move(sr));
    }

    bool any_obstructed = trace.obstructed_sector >= 0;
    if (any_obstructed)
        trace.conclusion = TheoremConclusion::obstruction_found;
    else if (all_found && trace.max_commutator <= tol::commutator && trace.core_check.central)
        trace.conclusion = TheoremConclusion::locality_verified;
    else
        trace.conclusion = TheoremConclusion::inconclusive;
    return trace;
}

}  // namespace qcausal
