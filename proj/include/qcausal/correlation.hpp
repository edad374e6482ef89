#pragma once

// Correlation functionals over pairs of algebras: uncorrelatedness checks,
// the per-state supremum C_omega(A,B), the causality measure C(A,B) obtained
// by minimizing over states, and the CHSH functional for commuting pairs.

#include "algebra.hpp"
#include "lattice.hpp"
#include "matrix.hpp"

#include <functional>
#include <limits>
#include <optional>

namespace qcausal {

namespace detail {

// Deterministic tie-break for witness pairs: entrywise (real, imag) order,
// column-major, E first then F.
inline bool lex_less(const CMatrix& a, const CMatrix& b) {
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i) {
            const Complex x = a(i, j), y = b(i, j);
            if (x.real() != y.real()) return x.real() < y.real();
            if (x.imag() != y.imag()) return x.imag() < y.imag();
        }
    return false;
}

inline bool lex_less_pair(const CMatrix& e1, const CMatrix& f1, const CMatrix& e2,
                          const CMatrix& f2) {
    if (lex_less(e1, e2)) return true;
    if (lex_less(e2, e1)) return false;
    return lex_less(f1, f2);
}

}  // namespace detail

// A supply of projection pairs (E in A, F in B): either the full finite
// lattices of two abelian algebras (certifying) or a seeded sampled list.
class PairSource {
public:
    // Requires both algebras abelian with at most max_minimal minimal
    // projections each; the pair list is the full lattice product.
    static PairSource exhaustive(const OperatorAlgebra& a, const OperatorAlgebra& b,
                                 int max_minimal = 10) {
        PairSource s;
        s.left_ = enumerate_projections(a, max_minimal);
        s.right_ = enumerate_projections(b, max_minimal);
        s.product_ = true;
        s.certifying_ = true;
        return s;
    }

    static PairSource sampled(const OperatorAlgebra& a, const OperatorAlgebra& b, long count,
                              std::uint64_t seed) {
        if (count < 1) throw std::invalid_argument("PairSource::sampled: count must be positive");
        PairSource s;
        s.product_ = false;
        s.certifying_ = false;
        std::mt19937_64 rng(seed ^ 0xa0761d6478bd642full);
        for (long i = 0; i < count; ++i)
            s.list_.emplace_back(draw_or_boundary(a, rng, i), draw_or_boundary(b, rng, i));
        return s;
    }

    // Exhaustive when feasible under the caps, sampled otherwise.
    static PairSource automatic(const OperatorAlgebra& a, const OperatorAlgebra& b,
                                long sample_count, std::uint64_t seed, int max_minimal = 10,
                                long max_exhaustive_pairs = 16384) {
        if (exhaustive_feasible(a, b, max_minimal, max_exhaustive_pairs))
            return exhaustive(a, b, max_minimal);
        return sampled(a, b, sample_count, seed);
    }

    static bool exhaustive_feasible(const OperatorAlgebra& a, const OperatorAlgebra& b,
                                    int max_minimal, long max_exhaustive_pairs) {
        if (!a.is_abelian() || !b.is_abelian()) return false;
        if (a.size() > max_minimal || b.size() > max_minimal) return false;
        if (a.size() + b.size() >= 62) return false;
        return std::ldexp(1.0, static_cast<int>(a.size() + b.size())) <=
               static_cast<double>(max_exhaustive_pairs);
    }

    bool certifying() const { return certifying_; }

    long count() const {
        return product_ ? static_cast<long>(left_.size()) * static_cast<long>(right_.size())
                        : static_cast<long>(list_.size());
    }

    template <class Fn>
    void for_each(Fn&& fn) const {
        if (product_) {
            for (const Projection& e : left_)
                for (const Projection& f : right_) fn(e, f);
        } else {
            for (const auto& [e, f] : list_) fn(e, f);
        }
    }

private:
    PairSource() = default;

    // Trivial algebras admit no nontrivial projection; alternate between their
    // two lattice elements instead of failing.
    static Projection draw_or_boundary(const OperatorAlgebra& alg, std::mt19937_64& rng,
                                       long ordinal) {
        if (!alg.is_trivial()) {
            for (int attempt = 0; attempt < 16; ++attempt)
                if (auto d = detail::try_draw_projection(alg, rng)) return d->materialize();
        }
        return (ordinal % 2) ? Projection::identity(alg.dim()) : Projection::zero(alg.dim());
    }

    std::vector<Projection> left_, right_;  // product mode pools
    std::vector<std::pair<Projection, Projection>> list_;
    bool product_ = false;
    bool certifying_ = false;
};

// |omega(E^F) - omega(E)omega(F)| with the meet computed spectrally.
inline double correlation_residual(const State& omega, const Projection& e, const Projection& f) {
    const Projection meet = meet_spectral(e, f).meet;
    return std::abs(expectation_re(omega, meet.matrix()) -
                    expectation_re(omega, e.matrix()) * expectation_re(omega, f.matrix()));
}

struct UncorrelatedCheck {
    bool uncorrelated;
    double max_residual;
    Projection witness_e, witness_f;  // pair attaining the maximum
    long pairs_used;
    bool certifying;
};

inline UncorrelatedCheck is_uncorrelated(const State& omega, const OperatorAlgebra& a,
                                         const OperatorAlgebra& b, const PairSource& pairs,
                                         double tolerance = 1e-6) {
    if (a.dim() != b.dim() || a.dim() != omega.dim())
        throw std::invalid_argument("is_uncorrelated: dimension mismatch");
    double best = -1.0;
    Projection we = Projection::zero(omega.dim()), wf = Projection::zero(omega.dim());
    pairs.for_each([&](const Projection& e, const Projection& f) {
        const double v = correlation_residual(omega, e, f);
        const bool better =
            v > best + 1e-15 ||
            (std::abs(v - best) <= 1e-15 &&
             detail::lex_less_pair(e.matrix(), f.matrix(), we.matrix(), wf.matrix()));
        if (better) {
            best = v;
            we = e;
            wf = f;
        }
    });
    if (best < 0.0) best = 0.0;
    return {best <= tolerance, best, std::move(we), std::move(wf), pairs.count(),
            pairs.certifying()};
}

struct CorrelationBudget {
    long sample_pairs = 256;           // sampled draws when lattices are not enumerable
    long refine_steps = 64;            // local refinement moves after sampling
    int lattice_max_minimal = 10;      // exhaustive route: minimal projections per side
    long max_exhaustive_pairs = 16384; // exhaustive route: total pair cap
    std::uint64_t seed = 0;
};

enum class SupMethod { exhaustive, sampled_refined };

struct CorrelationReport {
    double c_omega;
    Projection witness_e, witness_f;
    SupMethod method;
    long samples_used;
    bool certified;
};

// sup over projection pairs of |omega(E^F) - omega(E)omega(F)|.  Exact (and
// certified) for enumerable abelian lattices, sampled-and-refined otherwise.
inline CorrelationReport c_omega(const State& omega, const OperatorAlgebra& a,
                                 const OperatorAlgebra& b,
                                 const CorrelationBudget& budget = {}) {
    if (a.dim() != b.dim() || a.dim() != omega.dim())
        throw std::invalid_argument("c_omega: dimension mismatch");
    const bool enumerable = PairSource::exhaustive_feasible(a, b, budget.lattice_max_minimal,
                                                            budget.max_exhaustive_pairs);
    if (enumerable) {
        PairSource src = PairSource::exhaustive(a, b, budget.lattice_max_minimal);
        UncorrelatedCheck chk = is_uncorrelated(omega, a, b, src, 0.0);
        return {chk.max_residual, std::move(chk.witness_e), std::move(chk.witness_f),
                SupMethod::exhaustive, chk.pairs_used, true};
    }

    std::mt19937_64 rng(budget.seed ^ 0xe7037ed1a0b428dbull);
    struct Side {
        std::optional<ProjectionDraw> draw;
        Projection proj = Projection::zero(1);
    };
    Side se, sf;
    se.proj = Projection::zero(a.dim());
    sf.proj = Projection::zero(a.dim());
    double best = -1.0;
    long used = 0;
    for (long i = 0; i < budget.sample_pairs; ++i) {
        auto de = detail::try_draw_projection(a, rng);
        auto df = detail::try_draw_projection(b, rng);
        ++used;
        Projection pe = de ? de->materialize() : Projection::identity(a.dim());
        Projection pf = df ? df->materialize() : Projection::identity(b.dim());
        const double v = correlation_residual(omega, pe, pf);
        if (v > best) {
            best = v;
            se.draw = std::move(de);
            se.proj = std::move(pe);
            sf.draw = std::move(df);
            sf.proj = std::move(pf);
        }
    }
    for (long step = 0; step < budget.refine_steps; ++step) {
        const bool move_left = (step % 2) == 0;
        Side& side = move_left ? se : sf;
        if (!side.draw) continue;
        auto cand = detail::neighbor_draw(*side.draw, move_left ? a : b, rng);
        ++used;
        if (!cand) continue;
        Projection cp = cand->materialize();
        const double v = move_left ? correlation_residual(omega, cp, sf.proj)
                                   : correlation_residual(omega, se.proj, cp);
        if (v > best) {
            best = v;
            side.draw = std::move(cand);
            side.proj = std::move(cp);
        }
    }
    if (best < 0.0) best = 0.0;
    return {best, std::move(se.proj), std::move(sf.proj), SupMethod::sampled_refined, used, false};
}

// Precomputed (E, F, E^F) triples: the meets do not depend on the state, so
// repeated objective evaluations reduce to traces.
class PairBank {
public:
    static PairBank build(const PairSource& src) {
        PairBank bank;
        src.for_each([&](const Projection& e, const Projection& f) {
            bank.e_.push_back(e);
            bank.f_.push_back(f);
            bank.m_.push_back(meet_spectral(e, f).meet);
        });
        bank.certifying_ = src.certifying();
        return bank;
    }

    long size() const { return static_cast<long>(e_.size()); }
    bool certifying() const { return certifying_; }
    const Projection& e(long i) const { return e_[i]; }
    const Projection& f(long i) const { return f_[i]; }

    double eval(const CMatrix& rho, long* witness = nullptr) const {
        double best = 0.0;
        long bi = 0;
        for (std::size_t i = 0; i < e_.size(); ++i) {
            const double ve = trace_of_product(rho, e_[i].matrix()).real();
            const double vf = trace_of_product(rho, f_[i].matrix()).real();
            const double vm = trace_of_product(rho, m_[i].matrix()).real();
            const double v = std::abs(vm - ve * vf);
            if (v > best) {
                best = v;
                bi = static_cast<long>(i);
            }
        }
        if (witness) *witness = bi;
        return best;
    }

private:
    std::vector<Projection> e_, f_, m_;
    bool certifying_ = false;
};

struct DescentOptions {
    int starts = 16;
    int max_sweeps = 300;
    double init_step = 0.25;
    double min_step = 1e-8;
    double stall_tol = 1e-9;   // minimum improvement per window to keep sweeping
    int stall_window = 40;
    double stop_below = 1e-12; // early exit once the objective is this small
    std::uint64_t seed = 0;
};

struct DescentOutcome {
    CMatrix rho;
    double value;
    bool converged;
    std::vector<double> trace;  // best value after each sweep of the winning start
    long evaluations;
    int best_start;
    int starts_used;
};

// Derivative-free compass search over density matrices parameterized as
// rho = M M* / tr(M M*).  Start 0 is the maximally mixed state (M = 1); the
// remaining starts are Gaussian.  Ties between starts within 1e-9 keep the
// earlier start, so the canonical start wins on flat minima.
inline DescentOutcome minimize_over_states(Index d,
                                           const std::function<double(const CMatrix&)>& objective,
                                           const DescentOptions& opt = {}) {
    if (d <= 0) throw std::invalid_argument("minimize_over_states: dimension must be positive");
    if (opt.starts < 1) throw std::invalid_argument("minimize_over_states: needs at least a start");
    auto rho_of = [](const CMatrix& m) -> std::optional<CMatrix> {
        CMatrix r = m * m.adjoint();
        const double tr = r.trace().real();
        if (!(tr > 1e-12)) return std::nullopt;
        return CMatrix(r / tr);
    };

    DescentOutcome out;
    out.value = std::numeric_limits<double>::infinity();
    out.converged = false;
    out.evaluations = 0;
    out.best_start = -1;
    out.starts_used = 0;

    for (int s = 0; s < opt.starts; ++s) {
        std::mt19937_64 rng(opt.seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull * (s + 1));
        std::normal_distribution<double> normal(0.0, 1.0);
        CMatrix m = CMatrix::Identity(d, d);
        if (s > 0)
            for (Index i = 0; i < d; ++i)
                for (Index j = 0; j < d; ++j) m(i, j) = Complex(normal(rng), normal(rng));
        auto rho0 = rho_of(m);
        if (!rho0) continue;
        CMatrix rho = *rho0;
        double val = objective(rho);
        ++out.evaluations;
        ++out.starts_used;

        std::vector<double> trace{val};
        double step = opt.init_step;
        bool converged = false;
        for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
            bool improved = false;
            for (Index coord = 0; coord < 2 * d * d; ++coord) {
                const Index entry = coord / 2;
                const Index i = entry % d;
                const Index j = entry / d;
                const bool imag_part = coord & 1;
                for (double sgn : {1.0, -1.0}) {
                    CMatrix cand = m;
                    cand(i, j) += imag_part ? Complex(0.0, sgn * step) : Complex(sgn * step, 0.0);
                    auto crho = rho_of(cand);
                    if (!crho) continue;
                    const double v = objective(*crho);
                    ++out.evaluations;
                    if (v < val) {
                        val = v;
                        m = std::move(cand);
                        rho = std::move(*crho);
                        improved = true;
                        break;
                    }
                }
            }
            trace.push_back(val);
            if (val <= opt.stop_below) {
                converged = true;
                break;
            }
            if (!improved) {
                step *= 0.5;
                if (step < opt.min_step) {
                    converged = true;
                    break;
                }
            }
            const int w = opt.stall_window;
            if (w > 0 && static_cast<int>(trace.size()) > w &&
                trace[trace.size() - 1 - w] - val < opt.stall_tol) {
                converged = true;
                break;
            }
        }

        if (val < out.value - 1e-9) {
            out.value = val;
            out.rho = rho;
            out.converged = converged;
            out.trace = std::move(trace);
            out.best_start = s;
        }
        if (out.value <= opt.stop_below) break;
    }
    if (out.best_start < 0) throw std::runtime_error("minimize_over_states: no usable start");
    return out;
}

struct MeasureBudget {
    CorrelationBudget inner;   // pair budget for the objective and final report
    int starts = 16;
    int max_sweeps = 300;
    double init_step = 0.25;
    double min_step = 1e-8;
    double stall_tol = 1e-9;
    int stall_window = 40;
    double stop_below = 1e-12;
    std::uint64_t seed = 0;
};

struct CausalityMeasureReport {
    double c_value;                  // C_omega at the optimizing state (upper bound on C)
    State optimizing_state;          // full-space density matrix
    CorrelationReport final_report;  // evaluated at the optimizing state (sector frame if any)
    std::vector<double> descent_trace;
    bool inner_exhaustive;           // pair handling was exhaustive end to end
    double certified_lower_bound;    // witnessed correlation at the optimizing state
    bool converged;
    long evaluations;
    int starts_used;
    long pairs_in_bank;
};

// C(A,B): minimize the pair-bank objective over states by multi-start compass
// search, then evaluate the full supremum at the optimizer.  An optional
// central projection restricts the pair to one sector.
inline CausalityMeasureReport c_measure(const OperatorAlgebra& a, const OperatorAlgebra& b,
                                        const std::optional<Projection>& sector = {},
                                        const MeasureBudget& budget = {}) {
    if (a.dim() != b.dim()) throw std::invalid_argument("c_measure: dimension mismatch");

    std::optional<CMatrix> embed;
    const OperatorAlgebra* wa = &a;
    const OperatorAlgebra* wb = &b;
    std::optional<OperatorAlgebra> ca, cb;
    if (sector) {
        if (sector->dim() != a.dim())
            throw std::invalid_argument("c_measure: sector projection dimension mismatch");
        if (sector->rank() < 1)
            throw std::invalid_argument("c_measure: sector projection is zero");
        for (const CMatrix& g : a.generating_set())
            if (commutator_norm(sector->matrix(), g) > tol::commutator)
                throw std::invalid_argument("c_measure: sector projection is not central");
        for (const CMatrix& g : b.generating_set())
            if (commutator_norm(sector->matrix(), g) > tol::commutator)
                throw std::invalid_argument("c_measure: sector projection is not central");
        embed = sector->range_basis();
        ca = compress(a, *embed);
        cb = compress(b, *embed);
        wa = &*ca;
        wb = &*cb;
    }

    PairSource bank_src = PairSource::automatic(
        *wa, *wb, budget.inner.sample_pairs, budget.seed ^ 0x94d049bb133111ebull,
        budget.inner.lattice_max_minimal, budget.inner.max_exhaustive_pairs);
    PairBank bank = PairBank::build(bank_src);

    DescentOptions dopt;
    dopt.starts = budget.starts;
    dopt.max_sweeps = budget.max_sweeps;
    dopt.init_step = budget.init_step;
    dopt.min_step = budget.min_step;
    dopt.stall_tol = budget.stall_tol;
    dopt.stall_window = budget.stall_window;
    dopt.stop_below = budget.stop_below;
    dopt.seed = budget.seed;
    DescentOutcome outcome =
        minimize_over_states(wa->dim(), [&](const CMatrix& rho) { return bank.eval(rho); }, dopt);

    State wstate = State::from_density(outcome.rho);
    CorrelationBudget final_budget = budget.inner;
    final_budget.seed = budget.seed ^ 0xd6e8feb86659fd93ull;
    CorrelationReport final_rep = c_omega(wstate, *wa, *wb, final_budget);
    // the bank's witness at the optimizer is also valid; keep the larger
    long bw = 0;
    const double bank_val = bank.eval(outcome.rho, &bw);
    if (bank_val > final_rep.c_omega) {
        final_rep.c_omega = bank_val;
        final_rep.witness_e = bank.e(bw);
        final_rep.witness_f = bank.f(bw);
        final_rep.certified = false;
    }

    State full_state = embed ? State::from_density(*embed * outcome.rho * embed->adjoint())
                             : wstate;

    CausalityMeasureReport rep{final_rep.c_omega,
                               std::move(full_state),
                               std::move(final_rep),
                               std::move(outcome.trace),
                               false,
                               0.0,
                               outcome.converged,
                               outcome.evaluations,
                               outcome.starts_used,
                               bank.size()};
    rep.inner_exhaustive = bank.certifying() && rep.final_report.certified;
    rep.certified_lower_bound = rep.final_report.c_omega;
    return rep;
}

// CHSH correlation (1/2)omega(A1(B1+B2) + A2(B1-B2)) for commuting algebras.
// Observables must be Hermitian contractions inside their algebras.
inline double chsh_value(const OperatorAlgebra& a, const OperatorAlgebra& b, const State& omega,
                         const CMatrix& a1, const CMatrix& a2, const CMatrix& b1,
                         const CMatrix& b2) {
    if (a.dim() != b.dim() || a.dim() != omega.dim())
        throw std::invalid_argument("chsh_value: dimension mismatch");
    for (const CMatrix& ga : a.generating_set())
        for (const CMatrix& gb : b.generating_set())
            if (commutator_norm(ga, gb) > tol::commutator)
                throw std::invalid_argument("chsh_value: the algebras do not commute");
    auto check_obs = [&](const CMatrix& x, const OperatorAlgebra& alg, const char* name) {
        require_operator(x, "chsh_value");
        if (x.rows() != alg.dim()) throw std::invalid_argument("chsh_value: dimension mismatch");
        if (!is_hermitian(x))
            throw std::invalid_argument(std::string("chsh_value: ") + name + " is not Hermitian");
        if (op_norm(x) > 1.0 + tol::spectrum_snap)
            throw std::invalid_argument(std::string("chsh_value: ") + name + " has norm above 1");
        if (!alg.contains(x))
            throw std::invalid_argument(std::string("chsh_value: ") + name +
                                        " is not in its algebra");
    };
    check_obs(a1, a, "A1");
    check_obs(a2, a, "A2");
    check_obs(b1, b, "B1");
    check_obs(b2, b, "B2");
    const CMatrix op = a1 * (b1 + b2) + a2 * (b1 - b2);
    return 0.5 * expectation(omega, op).real();
}

struct ChshSettings {
    CMatrix a1, a2, b1, b2;
    double value;
};

// Seeded compass search over Hermitian contractions for the CHSH functional.
inline ChshSettings optimize_chsh_settings(const OperatorAlgebra& a, const OperatorAlgebra& b,
                                           const State& omega, std::uint64_t seed = 0,
                                           int sweeps = 80, int starts = 4) {
    for (const CMatrix& ga : a.generating_set())
        for (const CMatrix& gb : b.generating_set())
            if (commutator_norm(ga, gb) > tol::commutator)
                throw std::invalid_argument("optimize_chsh_settings: the algebras do not commute");
    const auto& ha = a.hermitian_basis();
    const auto& hb = b.hermitian_basis();
    const std::size_t ka = ha.size(), kb = hb.size();
    const std::size_t total = 2 * ka + 2 * kb;

    auto build = [&](const std::vector<double>& c, std::size_t off, const auto& basis,
                     std::size_t k) -> std::optional<CMatrix> {
        CMatrix x = CMatrix::Zero(a.dim(), a.dim());
        for (std::size_t i = 0; i < k; ++i) x += c[off + i] * basis[i];
        const double n = op_norm(x);
        if (n < 1e-9) return std::nullopt;
        return CMatrix(x / n);
    };
    auto value_of = [&](const std::vector<double>& c) -> std::optional<double> {
        auto a1 = build(c, 0, ha, ka);
        auto a2 = build(c, ka, ha, ka);
        auto b1 = build(c, 2 * ka, hb, kb);
        auto b2 = build(c, 2 * ka + kb, hb, kb);
        if (!a1 || !a2 || !b1 || !b2) return std::nullopt;
        const CMatrix op = (*a1) * (*b1 + *b2) + (*a2) * (*b1 - *b2);
        return 0.5 * expectation(omega, op).real();
    };

    std::optional<std::vector<double>> best_c;
    double best = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < starts; ++s) {
        std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 0x8bb84b93962eacc9ull * (s + 1));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> c(total);
        for (double& x : c) x = normal(rng);
        auto v0 = value_of(c);
        if (!v0) continue;
        double val = *v0;
        double step = 0.5;
        for (int sweep = 0; sweep < sweeps; ++sweep) {
            bool improved = false;
            for (std::size_t i = 0; i < total; ++i)
                for (double sgn : {1.0, -1.0}) {
                    std::vector<double> cand = c;
                    cand[i] += sgn * step;
                    auto v = value_of(cand);
                    if (v && *v > val) {
                        val = *v;
                        c = std::move(cand);
                        improved = true;
                        break;
                    }
                }
            if (!improved) {
                step *= 0.5;
                if (step < 1e-7) break;
            }
        }
        if (val > best) {
            best = val;
            best_c = c;
        }
    }
    if (!best_c) throw std::runtime_error("optimize_chsh_settings: no usable start");
    ChshSettings out{*build(*best_c, 0, ha, ka), *build(*best_c, ka, ha, ka),
                     *build(*best_c, 2 * ka, hb, kb), *build(*best_c, 2 * ka + kb, hb, kb), best};
    // route the result through the validating evaluator
    out.value = chsh_value(a, b, omega, out.a1, out.a2, out.b1, out.b2);
    return out;
}

}  // namespace qcausal
