#pragma once

// Finite-dimensional *-algebras of operators: generation from a set of
// matrices, commutants, centers, central decompositions and the projection
// machinery built on top of them.

#include "lattice.hpp"
#include "matrix.hpp"

#include <cstdint>
#include <optional>
#include <random>

namespace qcausal {

namespace detail {

inline CVector vec(const CMatrix& m) {
    return Eigen::Map<const CVector>(m.data(), m.size());
}

inline CMatrix unvec(const CVector& v, Index d) {
    return Eigen::Map<const CMatrix>(v.data(), d, d);
}

// Growing orthonormal span of vectorized operators in Hilbert-Schmidt geometry.
class HsSpan {
public:
    explicit HsSpan(Index d) : d_(d), cols_(d * d, 0) {}

    Index size() const { return cols_.cols(); }
    Index space_dim() const { return d_; }
    const CMatrix& cols() const { return cols_; }

    // Two-pass Gram-Schmidt; appends and returns the orthonormalized matrix
    // when the candidate carried a numerically new direction.
    std::optional<CMatrix> try_add(const CMatrix& m) {
        CVector v = vec(m);
        const double scale = v.norm();
        if (scale < 1e-12) return std::nullopt;
        CVector r = v - cols_ * (cols_.adjoint() * v);
        r -= cols_ * (cols_.adjoint() * r);
        if (r.norm() <= tol::rank_rel * scale) return std::nullopt;
        r /= r.norm();
        cols_.conservativeResize(Eigen::NoChange, cols_.cols() + 1);
        cols_.col(cols_.cols() - 1) = r;
        return unvec(r, d_);
    }

    // Hilbert-Schmidt norm of the component of x outside the span.
    double residual(const CMatrix& x) const {
        CVector v = vec(x);
        return (v - cols_ * (cols_.adjoint() * v)).norm();
    }

    CMatrix project(const CMatrix& x) const {
        CVector v = vec(x);
        return unvec(cols_ * (cols_.adjoint() * v), d_);
    }

private:
    Index d_;
    CMatrix cols_;  // d^2 x size, orthonormal columns
};

}  // namespace detail

// A unital *-closed span of operators with an orthonormal basis under the
// Hilbert-Schmidt inner product.  Construction is responsible for closure;
// validate() re-checks it exhaustively for tests.
class OperatorAlgebra {
public:
    // Smallest unital *-algebra containing the generators: seeds the span with
    // {1, g, g*} and multiplies until the span stops growing.
    static OperatorAlgebra generate(Index dim, const std::vector<CMatrix>& generators) {
        if (dim <= 0) throw std::invalid_argument("OperatorAlgebra: dimension must be positive");
        std::vector<CMatrix> seed;
        seed.push_back(CMatrix::Identity(dim, dim));
        for (const CMatrix& g : generators) {
            require_operator(g, "OperatorAlgebra::generate");
            if (g.rows() != dim)
                throw std::invalid_argument("OperatorAlgebra::generate: generator dimension mismatch");
            seed.push_back(g);
            seed.push_back(g.adjoint());
        }
        detail::HsSpan span(dim);
        std::vector<CMatrix> basis;
        for (const CMatrix& s : seed)
            if (auto nb = span.try_add(s)) basis.push_back(*nb);
        // Product closure: each round multiplies every pair not tried before.
        std::size_t closed_below = 0;
        for (;;) {
            const std::size_t pre = basis.size();
            bool grew = false;
            for (std::size_t i = 0; i < pre; ++i)
                for (std::size_t j = 0; j < pre; ++j) {
                    if (i < closed_below && j < closed_below) continue;
                    if (auto nb = span.try_add(basis[i] * basis[j])) {
                        basis.push_back(*nb);
                        grew = true;
                    }
                }
            closed_below = pre;
            if (!grew) break;
        }
        return OperatorAlgebra(dim, std::move(basis), std::move(span), std::move(seed));
    }

    // Wraps an already-orthonormal basis (e.g. a numerical null space).  The
    // generating set is used for commutant computations.
    static OperatorAlgebra from_orthonormal_basis(Index dim, const std::vector<CMatrix>& basis,
                                                  const std::vector<CMatrix>& generating_set) {
        detail::HsSpan span(dim);
        for (const CMatrix& b : basis) {
            if (!span.try_add(b))
                throw std::invalid_argument("OperatorAlgebra: basis is not independent");
        }
        return OperatorAlgebra(dim, basis, std::move(span), generating_set);
    }

    // Orthonormalizes a spanning set whose span is already a unital *-algebra.
    static OperatorAlgebra from_spanning_set(Index dim, const std::vector<CMatrix>& spanning) {
        detail::HsSpan span(dim);
        std::vector<CMatrix> basis;
        for (const CMatrix& s : spanning) {
            require_operator(s, "OperatorAlgebra::from_spanning_set");
            if (s.rows() != dim)
                throw std::invalid_argument("OperatorAlgebra::from_spanning_set: dimension mismatch");
            if (auto nb = span.try_add(s)) basis.push_back(*nb);
        }
        return OperatorAlgebra(dim, std::move(basis), std::move(span), spanning);
    }

    Index dim() const { return dim_; }                 // Hilbert space dimension
    Index size() const { return span_.size(); }        // complex dimension of the span
    const std::vector<CMatrix>& basis() const { return basis_; }
    const std::vector<CMatrix>& generating_set() const { return gens_; }
    const CMatrix& span_matrix() const { return span_.cols(); }
    bool contains_identity() const { return identity_residual_ <= tol::span; }
    double identity_residual() const { return identity_residual_; }

    double membership_residual(const CMatrix& x) const {
        require_operator(x, "OperatorAlgebra::membership_residual");
        if (x.rows() != dim_)
            throw std::invalid_argument("OperatorAlgebra: membership dimension mismatch");
        return span_.residual(x);
    }

    bool contains(const CMatrix& x, double tolerance = tol::span) const {
        return membership_residual(x) <= tolerance;
    }

    CMatrix project_into(const CMatrix& x) const { return span_.project(x); }

    bool is_abelian(double tolerance = tol::commutator) const {
        for (std::size_t i = 0; i < basis_.size(); ++i)
            for (std::size_t j = i + 1; j < basis_.size(); ++j)
                if (commutator_norm(basis_[i], basis_[j]) > tolerance) return false;
        return true;
    }

    bool is_trivial() const { return size() == 1; }

    // Real-orthonormal basis of the Hermitian part of the span; its real
    // dimension equals size() because the span is *-closed.
    const std::vector<CMatrix>& hermitian_basis() const {
        if (herm_basis_.empty()) {
            std::vector<CVector> kept;
            auto try_herm = [&](const CMatrix& h) {
                CVector v = detail::vec(h);
                const double scale = v.norm();
                if (scale < 1e-12) return;
                for (int pass = 0; pass < 2; ++pass)
                    for (const CVector& u : kept) v -= u * u.dot(v).real();
                if (v.norm() <= tol::rank_rel * scale) return;
                v /= v.norm();
                kept.push_back(v);
                herm_basis_.push_back(detail::unvec(v, dim_));
            };
            for (const CMatrix& b : basis_) {
                try_herm((b + b.adjoint()) / 2.0);
                try_herm((b - b.adjoint()) * Complex(0, -0.5));
            }
            if (static_cast<Index>(herm_basis_.size()) != size())
                throw std::runtime_error("OperatorAlgebra: Hermitian basis dimension mismatch");
        }
        return herm_basis_;
    }

    // Gaussian combination over hermitian_basis(); exact element of the span.
    CMatrix random_hermitian_element(std::mt19937_64& rng) const {
        std::normal_distribution<double> normal(0.0, 1.0);
        const auto& hb = hermitian_basis();
        CMatrix out = CMatrix::Zero(dim_, dim_);
        for (const CMatrix& h : hb) out += normal(rng) * h;
        return out;
    }

    // Exhaustive closure audit: worst membership residual over basis products
    // and adjoints.  Quadratic in size(); intended for tests.
    double validate() const {
        double worst = identity_residual_;
        for (const CMatrix& b : basis_) worst = std::max(worst, span_.residual(b.adjoint()));
        for (const CMatrix& x : basis_)
            for (const CMatrix& y : basis_) worst = std::max(worst, span_.residual(x * y));
        return worst;
    }

private:
    OperatorAlgebra(Index dim, std::vector<CMatrix> basis, detail::HsSpan span,
                    std::vector<CMatrix> gens)
        : dim_(dim), basis_(std::move(basis)), span_(std::move(span)), gens_(std::move(gens)) {
        identity_residual_ = span_.residual(CMatrix::Identity(dim_, dim_));
        if (identity_residual_ > tol::span)
            throw std::invalid_argument("OperatorAlgebra: span does not contain the identity");
        for (const CMatrix& b : basis_)
            if (span_.residual(b.adjoint()) > tol::span)
                throw std::invalid_argument("OperatorAlgebra: span is not closed under adjoints");
    }

    Index dim_;
    std::vector<CMatrix> basis_;
    detail::HsSpan span_;
    std::vector<CMatrix> gens_;
    double identity_residual_ = 0.0;
    mutable std::vector<CMatrix> herm_basis_;
};

// Commutant via the vectorized commutation map: vec(Xb - bX) =
// (b^T (x) 1 - 1 (x) b) vec(X).  The joint null space over the generating set
// is computed from one SVD; rank cutoff tol::rank_rel relative to sigma_max.
inline OperatorAlgebra commutant(const OperatorAlgebra& a) {
    const Index d = a.dim();
    const Index n = d * d;
    const std::vector<CMatrix>& gens = a.generating_set();
    const CMatrix id = CMatrix::Identity(d, d);
    CMatrix stacked(static_cast<Index>(gens.size()) * n, n);
    for (std::size_t i = 0; i < gens.size(); ++i)
        stacked.middleRows(static_cast<Index>(i) * n, n) =
            kron(gens[i].transpose(), id) - kron(id, gens[i]);
    Eigen::JacobiSVD<CMatrix> svd(stacked, Eigen::ComputeFullV);
    const RVector& sv = svd.singularValues();  // descending
    const double cut = std::max(tol::rank_rel * (sv.size() ? sv(0) : 0.0), 1e-12);
    Index null_dim = 0;
    for (Index i = sv.size() - 1; i >= 0 && sv(i) <= cut; --i) ++null_dim;
    std::vector<CMatrix> basis;
    basis.reserve(null_dim);
    for (Index i = n - null_dim; i < n; ++i)
        basis.push_back(detail::unvec(svd.matrixV().col(i), d));
    return OperatorAlgebra::from_orthonormal_basis(d, basis, basis);
}

// Center = A intersect A', computed as the eigenvalue-2 cluster of the sum of
// the two span projectors at the vec level.
inline OperatorAlgebra center(const OperatorAlgebra& a) {
    OperatorAlgebra com = commutant(a);
    const Index n = a.dim() * a.dim();
    CMatrix pa = a.span_matrix() * a.span_matrix().adjoint();
    CMatrix pc = com.span_matrix() * com.span_matrix().adjoint();
    SpectralDecomposition sd = spectral(pa + pc);
    Index count = 0;
    for (Index i = n - 1; i >= 0 && sd.eigenvalues(i) > 2.0 - tol::meet_gap; --i) ++count;
    std::vector<CMatrix> basis;
    basis.reserve(count);
    for (Index i = n - count; i < n; ++i)
        basis.push_back(detail::unvec(sd.eigenvectors.col(i), a.dim()));
    return OperatorAlgebra::from_orthonormal_basis(a.dim(), basis, basis);
}

struct BicommutantReport {
    Index algebra_dim;       // complex dimension of A
    Index bicommutant_dim;   // complex dimension of A''
    double basis_residual;   // worst cross-membership residual
    bool equal;
};

inline BicommutantReport bicommutant_check(const OperatorAlgebra& a) {
    OperatorAlgebra acc = commutant(commutant(a));
    double worst = 0.0;
    for (const CMatrix& b : a.basis()) worst = std::max(worst, acc.membership_residual(b));
    for (const CMatrix& b : acc.basis()) worst = std::max(worst, a.membership_residual(b));
    return {a.size(), acc.size(), worst, a.size() == acc.size() && worst <= tol::span};
}

inline OperatorAlgebra join_algebras(const OperatorAlgebra& a, const OperatorAlgebra& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("join_algebras: Hilbert space dimensions differ");
    std::vector<CMatrix> gens = a.generating_set();
    gens.insert(gens.end(), b.generating_set().begin(), b.generating_set().end());
    return OperatorAlgebra::generate(a.dim(), gens);
}

// Compression V* A V onto the range of an isometry V (d x r, V*V = 1).  Used
// with central projections, where the compression is again a unital *-algebra.
inline OperatorAlgebra compress(const OperatorAlgebra& a, const CMatrix& isometry) {
    if (isometry.rows() != a.dim() || isometry.cols() < 1 || !isometry.allFinite())
        throw std::invalid_argument("compress: bad isometry shape");
    CMatrix g = isometry.adjoint() * isometry;
    if (op_norm(g - CMatrix::Identity(isometry.cols(), isometry.cols())) > tol::unitary)
        throw std::invalid_argument("compress: columns are not orthonormal");
    std::vector<CMatrix> spanning;
    spanning.reserve(a.basis().size());
    for (const CMatrix& b : a.basis()) spanning.push_back(isometry.adjoint() * b * isometry);
    return OperatorAlgebra::from_spanning_set(isometry.cols(), spanning);
}

struct CentralDecomposition {
    std::vector<Projection> minimal_central_projections;  // ordered by probe eigenvalue
    std::vector<CMatrix> isometries;                       // column bases of the sector ranges
    std::vector<OperatorAlgebra> blocks;                   // compressions onto each sector
};

// Splits the space along the spectrum of a random Hermitian element of the
// center.  Each candidate split is verified (projections commute with the
// generators, every block has trivial center); ambiguous probes are retried.
inline CentralDecomposition central_decomposition(const OperatorAlgebra& a,
                                                  std::uint64_t seed = 0) {
    OperatorAlgebra z = center(a);
    const Index k = z.size();
    if (k == 1) {
        CentralDecomposition out;
        out.minimal_central_projections.push_back(Projection::identity(a.dim()));
        out.isometries.push_back(CMatrix::Identity(a.dim(), a.dim()));
        out.blocks.push_back(a);
        return out;
    }
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    for (int attempt = 0; attempt < 10; ++attempt) {
        CMatrix probe = z.random_hermitian_element(rng);
        SpectralDecomposition sd = spectral(probe);
        // Central values must separate cleanly; 1e-6 leaves room above noise.
        auto clusters = eigenvalue_clusters(sd.eigenvalues, 1e-6);
        if (static_cast<Index>(clusters.size()) != k) continue;
        CentralDecomposition out;
        bool ok = true;
        for (const auto& [first, count] : clusters) {
            CMatrix v = sd.cluster_basis(first, count);
            Projection p = Projection::from_orthonormal_columns(v);
            for (const CMatrix& gen : a.generating_set())
                if (commutator_norm(p.matrix(), gen) > tol::commutator) ok = false;
            if (!ok) break;
            out.minimal_central_projections.push_back(std::move(p));
            out.isometries.push_back(std::move(v));
        }
        if (!ok) continue;
        for (const CMatrix& v : out.isometries) {
            OperatorAlgebra block = compress(a, v);
            if (center(block).size() != 1) {
                ok = false;
                break;
            }
            out.blocks.push_back(std::move(block));
        }
        if (ok) return out;
    }
    throw std::runtime_error("central_decomposition: failed to separate the center after 10 probes");
}

// A sampled projection remembered together with how it was drawn, so that
// refinement moves can perturb either the probe or the cluster subset.
struct ProjectionDraw {
    CMatrix probe;
    SpectralDecomposition sd;
    std::vector<std::pair<Index, Index>> clusters;
    std::uint64_t mask = 0;  // nonempty proper subset of clusters

    Projection materialize() const {
        Index total = 0;
        for (std::size_t i = 0; i < clusters.size(); ++i)
            if (mask & (1ull << i)) total += clusters[i].second;
        CMatrix cols(sd.eigenvectors.rows(), total);
        Index at = 0;
        for (std::size_t i = 0; i < clusters.size(); ++i)
            if (mask & (1ull << i)) {
                cols.middleCols(at, clusters[i].second) =
                    sd.cluster_basis(clusters[i].first, clusters[i].second);
                at += clusters[i].second;
            }
        return Projection::from_orthonormal_columns(cols);
    }
};

namespace detail {

inline std::optional<std::uint64_t> random_proper_mask(std::size_t bits, std::mt19937_64& rng) {
    if (bits < 2 || bits > 64) return std::nullopt;
    for (int tries = 0; tries < 64; ++tries) {
        std::uint64_t m = 0;
        int on = 0;
        for (std::size_t i = 0; i < bits; ++i)
            if (rng() & 1ull) {
                m |= (1ull << i);
                ++on;
            }
        if (on > 0 && on < static_cast<int>(bits)) return m;
    }
    return std::nullopt;
}

// One spectral-subset draw; nullopt when the probe has a single cluster.
inline std::optional<ProjectionDraw> try_draw_projection(const OperatorAlgebra& a,
                                                         std::mt19937_64& rng) {
    ProjectionDraw d;
    d.probe = a.random_hermitian_element(rng);
    if (hs_norm(d.probe) < 1e-12) return std::nullopt;
    d.sd = spectral(d.probe);
    d.clusters = eigenvalue_clusters(d.sd.eigenvalues);
    auto mask = random_proper_mask(d.clusters.size(), rng);
    if (!mask) return std::nullopt;
    d.mask = *mask;
    return d;
}

// Refinement move: toggle one cluster bit, or redraw from a perturbed probe.
inline std::optional<ProjectionDraw> neighbor_draw(const ProjectionDraw& cur,
                                                   const OperatorAlgebra& a,
                                                   std::mt19937_64& rng) {
    const std::size_t bits = cur.clusters.size();
    if (bits >= 2 && (rng() & 1ull)) {
        for (int tries = 0; tries < 16; ++tries) {
            const std::uint64_t full = bits == 64 ? ~0ull : ((1ull << bits) - 1);
            const std::uint64_t m = (cur.mask ^ (1ull << (rng() % bits))) & full;
            if (m != 0 && m != full) {
                ProjectionDraw next = cur;
                next.mask = m;
                return next;
            }
        }
    }
    ProjectionDraw next;
    next.probe = cur.probe + 0.25 * a.random_hermitian_element(rng);
    if (hs_norm(next.probe) < 1e-12) return std::nullopt;
    next.sd = spectral(next.probe);
    next.clusters = eigenvalue_clusters(next.sd.eigenvalues);
    auto mask = random_proper_mask(next.clusters.size(), rng);
    if (!mask) return std::nullopt;
    next.mask = *mask;
    return next;
}

}  // namespace detail

// Random nontrivial projection in the algebra: spectral projection of a random
// Hermitian element onto a random proper subset of its eigenvalue clusters.
inline Projection sample_projection(const OperatorAlgebra& a, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ull);
    for (int attempt = 0; attempt < 16; ++attempt)
        if (auto d = detail::try_draw_projection(a, rng)) return d->materialize();
    throw std::domain_error(
        "sample_projection: algebra admits no nontrivial projection (trivial algebra)");
}

// Full finite lattice of an abelian algebra: all 2^k sums of its minimal
// projections, ordered by subset mask.  Caps at 2^max_minimal entries.
inline std::vector<Projection> enumerate_projections(const OperatorAlgebra& a,
                                                     int max_minimal = 20) {
    if (!a.is_abelian()) throw std::invalid_argument("enumerate_projections: algebra is not abelian");
    CentralDecomposition cd = central_decomposition(a);
    const std::size_t k = cd.minimal_central_projections.size();
    if (static_cast<Index>(k) != a.size())
        throw std::runtime_error("enumerate_projections: minimal projection count mismatch");
    if (k > static_cast<std::size_t>(max_minimal))
        throw std::length_error("enumerate_projections: lattice larger than 2^" +
                                std::to_string(max_minimal));
    std::vector<Projection> out;
    out.reserve(1ull << k);
    for (std::uint64_t mask = 0; mask < (1ull << k); ++mask) {
        Index total = 0;
        for (std::size_t i = 0; i < k; ++i)
            if (mask & (1ull << i)) total += cd.isometries[i].cols();
        CMatrix cols(a.dim(), total);
        Index at = 0;
        for (std::size_t i = 0; i < k; ++i)
            if (mask & (1ull << i)) {
                cols.middleCols(at, cd.isometries[i].cols()) = cd.isometries[i];
                at += cd.isometries[i].cols();
            }
        out.push_back(Projection::from_orthonormal_columns(cols));
    }
    return out;
}

}  // namespace qcausal
