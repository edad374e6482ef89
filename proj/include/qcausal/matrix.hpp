#pragma once

// Dense complex linear algebra primitives shared by the rest of the library:
// validated operators, spectral decompositions, projections and states.

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qcausal {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

// Shared tolerances.  Hilbert space dimensions stay small (d <= 64), so double
// precision leaves several orders of magnitude of headroom over each cutoff.
namespace tol {
inline constexpr double hermitian = 1e-10;       // ||M - M*|| accepted as Hermitian
inline constexpr double idempotent = 1e-10;      // ||P^2 - P|| accepted as idempotent
inline constexpr double reconstruction = 1e-10;  // spectral resynthesis error
inline constexpr double unitary = 1e-10;         // ||V*V - 1|| accepted as isometric
inline constexpr double psd = 1e-10;             // eigenvalues >= -psd accepted as nonnegative
inline constexpr double trace_one = 1e-12;       // |tr(rho) - 1| accepted for states
inline constexpr double spectrum_snap = 1e-8;    // eigenvalue distance to {0,1} snapped by projections
inline constexpr double rank_rel = 1e-8;         // relative singular-value cutoff for rank decisions
inline constexpr double cluster_gap = 1e-9;      // eigenvalues closer than this share a cluster
inline constexpr double span = 1e-9;             // Hilbert-Schmidt span-membership residual
inline constexpr double commutator = 1e-9;       // ||[X,Y]|| accepted as commuting
inline constexpr double meet_gap = 1e-8;         // eigenvalues of E+F above 2-meet_gap form the meet
inline constexpr double meet_converged = 1e-12;  // ||(EF)^n - snap|| declaring iterative convergence
inline constexpr long meet_max_iter = 10000;
}  // namespace tol

inline void require_operator(const CMatrix& m, const char* who) {
    if (m.rows() == 0 || m.rows() != m.cols())
        throw std::invalid_argument(std::string(who) + ": expected a nonempty square matrix");
    if (!m.allFinite())
        throw std::invalid_argument(std::string(who) + ": matrix has non-finite entries");
}

inline void require_same_dim(const CMatrix& a, const CMatrix& b, const char* who) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

// Operator (spectral) norm: largest singular value.
inline double op_norm(const CMatrix& m) {
    if (m.size() == 0) return 0.0;
    return m.jacobiSvd().singularValues()(0);
}

// Hilbert-Schmidt (Frobenius) norm and inner product tr(a* b).
inline double hs_norm(const CMatrix& m) { return m.norm(); }

inline Complex hs_inner(const CMatrix& a, const CMatrix& b) {
    require_same_dim(a, b, "hs_inner");
    return a.conjugate().cwiseProduct(b).sum();
}

inline double hermiticity_defect(const CMatrix& m) { return op_norm(m - m.adjoint()); }

inline bool is_hermitian(const CMatrix& m, double tolerance = tol::hermitian) {
    return hermiticity_defect(m) <= tolerance;
}

inline double commutator_norm(const CMatrix& x, const CMatrix& y) {
    require_same_dim(x, y, "commutator_norm");
    return op_norm(x * y - y * x);
}

// tr(rho * op) without forming the product.
inline Complex trace_of_product(const CMatrix& a, const CMatrix& b) {
    require_same_dim(a, b, "trace_of_product");
    return a.transpose().cwiseProduct(b).sum();
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Partial traces for a bipartite space of dimension d1*d2, indexed i = i1*d2 + i2.
inline CMatrix partial_trace_first(const CMatrix& m, Index d1, Index d2) {
    if (m.rows() != d1 * d2 || m.cols() != d1 * d2)
        throw std::invalid_argument("partial_trace_first: dimension mismatch");
    CMatrix out = CMatrix::Zero(d2, d2);
    for (Index i1 = 0; i1 < d1; ++i1) out += m.block(i1 * d2, i1 * d2, d2, d2);
    return out;
}

inline CMatrix partial_trace_second(const CMatrix& m, Index d1, Index d2) {
    if (m.rows() != d1 * d2 || m.cols() != d1 * d2)
        throw std::invalid_argument("partial_trace_second: dimension mismatch");
    CMatrix out = CMatrix::Zero(d1, d1);
    for (Index i1 = 0; i1 < d1; ++i1)
        for (Index j1 = 0; j1 < d1; ++j1)
            out(i1, j1) = m.block(i1 * d2, j1 * d2, d2, d2).trace();
    return out;
}

struct SpectralDecomposition {
    RVector eigenvalues;   // ascending
    CMatrix eigenvectors;  // orthonormal columns, col(k) belongs to eigenvalues(k)

    Index dim() const { return eigenvalues.size(); }

    CMatrix reconstruct() const {
        return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() * eigenvectors.adjoint();
    }

    CMatrix cluster_basis(Index first, Index count) const {
        return eigenvectors.middleCols(first, count);
    }

    CMatrix cluster_projector(Index first, Index count) const {
        CMatrix v = cluster_basis(first, count);
        return v * v.adjoint();
    }
};

inline SpectralDecomposition spectral(const CMatrix& h) {
    require_operator(h, "spectral");
    if (!is_hermitian(h)) throw std::invalid_argument("spectral: operator is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMatrix> es((h + h.adjoint()) / 2.0);
    if (es.info() != Eigen::Success) throw std::runtime_error("spectral: eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

// Contiguous clusters (first, count) of an ascending eigenvalue list; adjacent
// values closer than `gap` land in the same cluster.
inline std::vector<std::pair<Index, Index>> eigenvalue_clusters(const RVector& ascending,
                                                                double gap = tol::cluster_gap) {
    std::vector<std::pair<Index, Index>> out;
    const Index n = ascending.size();
    Index start = 0;
    for (Index i = 1; i <= n; ++i) {
        if (i == n || ascending(i) - ascending(i - 1) > gap) {
            out.emplace_back(start, i - start);
            start = i;
        }
    }
    return out;
}

// Orthogonal projection, kept exactly Hermitian and idempotent by resynthesis
// from an orthonormal range basis.
class Projection {
public:
    // Validates an approximate projection: Hermitian within tol::hermitian and
    // every eigenvalue within tol::spectrum_snap of {0,1}; snaps the spectrum.
    static Projection from(const CMatrix& m) {
        require_operator(m, "Projection::from");
        if (!is_hermitian(m))
            throw std::invalid_argument("Projection::from: matrix is not Hermitian");
        SpectralDecomposition sd = spectral(m);
        Index rank = 0;
        for (Index i = 0; i < sd.dim(); ++i) {
            const double lam = sd.eigenvalues(i);
            if (std::abs(lam) <= tol::spectrum_snap) continue;
            if (std::abs(lam - 1.0) <= tol::spectrum_snap) {
                ++rank;
                continue;
            }
            throw std::invalid_argument("Projection::from: eigenvalue " + std::to_string(lam) +
                                        " is not near {0,1}");
        }
        CMatrix v = sd.eigenvectors.rightCols(rank);
        return Projection(v * v.adjoint(), rank);
    }

    static Projection from_orthonormal_columns(const CMatrix& v) {
        if (v.rows() == 0) throw std::invalid_argument("Projection: empty column basis");
        if (!v.allFinite()) throw std::invalid_argument("Projection: non-finite column basis");
        if (v.cols() > v.rows())
            throw std::invalid_argument("Projection: more columns than the space dimension");
        if (v.cols() > 0) {
            CMatrix g = v.adjoint() * v;
            if (op_norm(g - CMatrix::Identity(v.cols(), v.cols())) > tol::unitary)
                throw std::invalid_argument("Projection: columns are not orthonormal");
        }
        return Projection(v * v.adjoint(), v.cols());
    }

    static Projection zero(Index d) { return Projection(CMatrix::Zero(d, d), 0); }
    static Projection identity(Index d) { return Projection(CMatrix::Identity(d, d), d); }

    const CMatrix& matrix() const { return mat_; }
    Index dim() const { return mat_.rows(); }
    Index rank() const { return rank_; }
    bool is_zero() const { return rank_ == 0; }
    bool is_identity() const { return rank_ == dim(); }

    Projection complement() const {
        return Projection(CMatrix::Identity(dim(), dim()) - mat_, dim() - rank_);
    }

    // Orthonormal basis of the range, d x rank.
    CMatrix range_basis() const {
        if (rank_ == 0) return CMatrix(dim(), 0);
        return spectral(mat_).eigenvectors.rightCols(rank_);
    }

    // Worst of the hermiticity and idempotency residuals; ~1e-15 by construction.
    double defect() const {
        return std::max(hermiticity_defect(mat_), op_norm(mat_ * mat_ - mat_));
    }

private:
    Projection(CMatrix m, Index rank) : mat_(std::move(m)), rank_(rank) {}

    CMatrix mat_;
    Index rank_;
};

class State {
public:
    static State from_density(const CMatrix& rho) {
        require_operator(rho, "State::from_density");
        if (!is_hermitian(rho))
            throw std::invalid_argument("State: density matrix is not Hermitian");
        CMatrix h = (rho + rho.adjoint()) / 2.0;
        Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -tol::psd)
            throw std::invalid_argument("State: density matrix has a negative eigenvalue");
        const Complex tr = h.trace();
        if (std::abs(tr.real() - 1.0) > tol::trace_one || std::abs(tr.imag()) > tol::trace_one)
            throw std::invalid_argument("State: trace must equal 1");
        return State(std::move(h));
    }

    // Normalizes psi and forms the rank-one density matrix.
    static State pure(const CVector& psi) {
        if (psi.size() == 0 || !psi.allFinite())
            throw std::invalid_argument("State::pure: invalid vector");
        const double n = psi.norm();
        if (n < 1e-12) throw std::invalid_argument("State::pure: zero vector");
        CVector u = psi / n;
        return State(u * u.adjoint());
    }

    static State maximally_mixed(Index d) {
        if (d <= 0) throw std::invalid_argument("State::maximally_mixed: dimension must be positive");
        return State(CMatrix::Identity(d, d) / static_cast<double>(d));
    }

    const CMatrix& density() const { return rho_; }
    Index dim() const { return rho_.rows(); }

private:
    explicit State(CMatrix rho) : rho_(std::move(rho)) {}

    CMatrix rho_;
};

inline Complex expectation(const State& omega, const CMatrix& op) {
    require_operator(op, "expectation");
    if (op.rows() != omega.dim()) throw std::invalid_argument("expectation: dimension mismatch");
    return trace_of_product(omega.density(), op);
}

inline double expectation_re(const State& omega, const CMatrix& op) {
    return expectation(omega, op).real();
}

inline double trace_distance(const State& a, const State& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("trace_distance: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(a.density() - b.density(), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace qcausal
