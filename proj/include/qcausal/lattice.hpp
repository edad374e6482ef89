#pragma once

// Projection-lattice operations: meet (two independent methods), join,
// commutation checks and the total coincidence T(E,F).

#include "matrix.hpp"

namespace qcausal {

enum class MeetMethod { spectral, iterative };

struct MeetResult {
    Projection meet;
    MeetMethod method;
    long iterations;       // 0 for the spectral method
    double residual;       // ||(EF)^n - snap|| at termination (iterative only)
    bool near_degenerate;  // a principal angle fell in the numerically ambiguous band
};

class MeetNotConverged : public std::runtime_error {
public:
    MeetNotConverged(long iters, double resid)
        : std::runtime_error("meet_iterative: no convergence after " + std::to_string(iters) +
                             " iterations (residual " + std::to_string(resid) +
                             "); fall back to meet_spectral"),
          iterations(iters),
          residual(resid) {}

    long iterations;
    double residual;
};

namespace detail {

// Principal angles t between the ranges enter eigenvalues of E+F as 1+cos(t),
// so the gap to 2 is ~t^2/2.  Angles below 1e-6 rad (gap < 5e-13) that still
// sit above the eigenvalue noise floor (gap > 1e-13) cannot be told apart from
// an exact intersection reliably; flag them.
inline bool near_degenerate_band(const RVector& evals) {
    for (Index i = 0; i < evals.size(); ++i) {
        const double gap = 2.0 - evals(i);
        if (gap > 1e-13 && gap < 5e-13) return true;
    }
    return false;
}

}  // namespace detail

// Meet as the eigenvalue-2 cluster of E+F: exact in one decomposition.
inline MeetResult meet_spectral(const Projection& e, const Projection& f) {
    require_same_dim(e.matrix(), f.matrix(), "meet_spectral");
    SpectralDecomposition sd = spectral(e.matrix() + f.matrix());
    Index count = 0;
    for (Index i = sd.dim() - 1; i >= 0 && sd.eigenvalues(i) > 2.0 - tol::meet_gap; --i) ++count;
    Projection meet = Projection::from_orthonormal_columns(sd.eigenvectors.rightCols(count));
    return {std::move(meet), MeetMethod::spectral, 0, 0.0,
            detail::near_degenerate_band(sd.eigenvalues)};
}

// Meet as the strong limit of (EF)^n.  Converges at rate cos^2 of the largest
// non-intersecting principal angle; throws MeetNotConverged past max_iter.
inline MeetResult meet_iterative(const Projection& e, const Projection& f,
                                 long max_iter = tol::meet_max_iter) {
    require_same_dim(e.matrix(), f.matrix(), "meet_iterative");
    if (max_iter < 1) throw std::invalid_argument("meet_iterative: max_iter must be positive");
    const CMatrix ef = e.matrix() * f.matrix();
    CMatrix m = ef;
    for (long n = 1;; ++n) {
        // Snap candidate: Hermitian part with eigenvalues rounded to {0,1}.
        Eigen::SelfAdjointEigenSolver<CMatrix> es((m + m.adjoint()) / 2.0);
        Index count = 0;
        for (Index i = es.eigenvalues().size() - 1; i >= 0 && es.eigenvalues()(i) > 0.5; --i)
            ++count;
        CMatrix v = es.eigenvectors().rightCols(count);
        const double resid = op_norm(m - v * v.adjoint());
        if (resid <= tol::meet_converged) {
            bool warn = detail::near_degenerate_band(spectral(e.matrix() + f.matrix()).eigenvalues);
            return {Projection::from_orthonormal_columns(v), MeetMethod::iterative, n, resid, warn};
        }
        if (n >= max_iter) throw MeetNotConverged(n, resid);
        m = m * ef;
    }
}

inline Projection join(const Projection& e, const Projection& f) {
    return meet_spectral(e.complement(), f.complement()).meet.complement();
}

struct CommutationCheck {
    bool commuting;
    double residual;  // ||EF - FE||
};

inline CommutationCheck commutes(const Projection& e, const Projection& f,
                                 double tolerance = tol::commutator) {
    const double r = commutator_norm(e.matrix(), f.matrix());
    return {r <= tolerance, r};
}

// T(E,F) = E^F + E^F' + E'^F + E'^F', a sum of four mutually orthogonal meets.
// Equals 1 exactly when E and F commute.
inline Projection total_coincidence(const Projection& e, const Projection& f) {
    require_same_dim(e.matrix(), f.matrix(), "total_coincidence");
    const Projection ec = e.complement();
    const Projection fc = f.complement();
    CMatrix sum = meet_spectral(e, f).meet.matrix() + meet_spectral(e, fc).meet.matrix() +
                  meet_spectral(ec, f).meet.matrix() + meet_spectral(ec, fc).meet.matrix();
    // from() re-validates that the four terms stayed mutually orthogonal.
    return Projection::from(sum);
}

}  // namespace qcausal
