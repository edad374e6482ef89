#include <qcausal/correlation.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace qcausal;
using namespace testsup;
using Catch::Approx;

namespace {

// Maximally clashing qubit pair: diagonal algebra against the sigma_x one.
std::pair<OperatorAlgebra, OperatorAlgebra> clash_pair() {
    return {OperatorAlgebra::generate(2, {pauli_z()}),
            OperatorAlgebra::generate(2, {pauli_x()})};
}

// Commuting tensor factors on two qubits.
std::pair<OperatorAlgebra, OperatorAlgebra> tensor_pair() {
    const CMatrix one = id(2);
    OperatorAlgebra a = OperatorAlgebra::generate(4, {kron(pauli_z(), one), kron(pauli_x(), one)});
    OperatorAlgebra b = OperatorAlgebra::generate(4, {kron(one, pauli_z()), kron(one, pauli_x())});
    return {std::move(a), std::move(b)};
}

State singlet() {
    CVector psi = CVector::Zero(4);
    psi(1) = 1.0 / std::sqrt(2.0);
    psi(2) = -1.0 / std::sqrt(2.0);
    return State::pure(psi);
}

Projection diag_proj(double a, double b) {
    CMatrix m = CMatrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return Projection::from(m);
}

Projection plus_proj() {
    CMatrix f(2, 2);
    f << 0.5, 0.5, 0.5, 0.5;
    return Projection::from(f);
}

}  // namespace

TEST_CASE("correlation residual fixed values") {
    auto e = diag_proj(1, 0);
    auto f = plus_proj();

    // disjoint ranges: omega(E^F) = 0, so the residual is omega(E)omega(F)
    CHECK(correlation_residual(State::maximally_mixed(2), e, f) == Approx(0.25).margin(1e-12));
    CHECK(correlation_residual(State::pure(CVector::Unit(2, 0)), e, f) ==
          Approx(0.5).margin(1e-12));

    // commuting projections and a product state factorize exactly
    const CMatrix one = id(2);
    auto ep = Projection::from(kron(diag_proj(1, 0).matrix(), one));
    auto fp = Projection::from(kron(one, plus_proj().matrix()));
    State prod = State::from_density(kron(0.5 * one, plus_proj().matrix()));
    CHECK(correlation_residual(prod, ep, fp) == Approx(0.0).margin(1e-12));
}

TEST_CASE("pair sources") {
    auto [a, b] = clash_pair();

    SECTION("exhaustive product of two four-element lattices") {
        PairSource src = PairSource::exhaustive(a, b);
        CHECK(src.certifying());
        CHECK(src.count() == 16);
        long seen = 0;
        src.for_each([&](const Projection& e, const Projection& f) {
            ++seen;
            CHECK(e.defect() <= 1e-10);
            CHECK(f.defect() <= 1e-10);
        });
        CHECK(seen == 16);
    }

    SECTION("exhaustive requires abelian sides") {
        OperatorAlgebra full = OperatorAlgebra::generate(2, {pauli_z(), pauli_x()});
        CHECK_THROWS_AS(PairSource::exhaustive(full, full), std::invalid_argument);
    }

    SECTION("sampled draws are seeded") {
        PairSource s1 = PairSource::sampled(a, b, 8, 7);
        PairSource s2 = PairSource::sampled(a, b, 8, 7);
        CHECK(s1.count() == 8);
        std::vector<CMatrix> m1, m2;
        s1.for_each([&](const Projection& e, const Projection& f) {
            m1.push_back(e.matrix());
            m1.push_back(f.matrix());
        });
        s2.for_each([&](const Projection& e, const Projection& f) {
            m2.push_back(e.matrix());
            m2.push_back(f.matrix());
        });
        REQUIRE(m1.size() == m2.size());
        for (std::size_t i = 0; i < m1.size(); ++i) CHECK((m1[i] - m2[i]).norm() == 0.0);
        CHECK_THROWS_AS(PairSource::sampled(a, b, 0, 1), std::invalid_argument);
    }

    SECTION("sampling a trivial side falls back to lattice boundaries") {
        OperatorAlgebra triv = OperatorAlgebra::generate(2, {id(2)});
        PairSource src = PairSource::sampled(triv, b, 4, 3);
        bool saw_zero = false, saw_one = false;
        src.for_each([&](const Projection& e, const Projection&) {
            saw_zero = saw_zero || e.is_zero();
            saw_one = saw_one || e.is_identity();
        });
        CHECK(saw_zero);
        CHECK(saw_one);
    }

    SECTION("automatic chooser") {
        CHECK(PairSource::automatic(a, b, 16, 0).certifying());
        auto [ta, tb] = tensor_pair();
        CHECK_FALSE(PairSource::automatic(ta, tb, 16, 0).certifying());
    }
}

TEST_CASE("uncorrelated states on commuting factors") {
    auto [a, b] = tensor_pair();
    PairSource pairs = PairSource::sampled(a, b, 64, 11);

    SECTION("product states factorize over every pair") {
        State prod = State::maximally_mixed(4);
        auto chk = is_uncorrelated(prod, a, b, pairs);
        CHECK(chk.uncorrelated);
        CHECK(chk.max_residual <= 1e-10);
        CHECK(chk.pairs_used == 64);
        CHECK_FALSE(chk.certifying);
    }

    SECTION("the singlet is correlated") {
        auto chk = is_uncorrelated(singlet(), a, b, pairs);
        CHECK_FALSE(chk.uncorrelated);
        CHECK(chk.max_residual > 0.01);
        // the reported witness reproduces the reported maximum
        CHECK(correlation_residual(singlet(), chk.witness_e, chk.witness_f) ==
              Approx(chk.max_residual).margin(1e-12));
    }

    SECTION("dimension mismatch is rejected") {
        CHECK_THROWS_AS(is_uncorrelated(State::maximally_mixed(2), a, b, pairs),
                        std::invalid_argument);
    }
}

TEST_CASE("c_omega over enumerable lattices is exact") {
    auto [a, b] = clash_pair();

    auto rep = c_omega(State::maximally_mixed(2), a, b);
    CHECK(rep.method == SupMethod::exhaustive);
    CHECK(rep.certified);
    CHECK(rep.samples_used == 16);
    CHECK(rep.c_omega == Approx(0.25).margin(1e-10));
    CHECK(rep.witness_e.rank() == 1);
    CHECK(rep.witness_f.rank() == 1);

    auto pure = c_omega(State::pure(CVector::Unit(2, 0)), a, b);
    CHECK(pure.c_omega == Approx(0.5).margin(1e-10));
    CHECK(pure.witness_e.matrix()(0, 0).real() == Approx(1.0).margin(1e-9));
}

TEST_CASE("c_omega sampled search on tensor factors") {
    auto [a, b] = tensor_pair();
    CorrelationBudget budget;
    budget.sample_pairs = 128;
    budget.seed = 5;

    auto rep = c_omega(singlet(), a, b, budget);
    CHECK(rep.method == SupMethod::sampled_refined);
    CHECK_FALSE(rep.certified);
    // rank-one against rank-one tops out at 1/4 on the singlet
    CHECK(rep.c_omega > 0.15);
    CHECK(rep.c_omega <= 0.25 + 1e-9);

    auto again = c_omega(singlet(), a, b, budget);
    CHECK(again.c_omega == rep.c_omega);

    auto mixed = c_omega(State::maximally_mixed(4), a, b, budget);
    CHECK(mixed.c_omega <= 1e-10);
}

TEST_CASE("pair bank evaluation matches direct residuals") {
    auto [a, b] = clash_pair();
    PairBank bank = PairBank::build(PairSource::exhaustive(a, b));
    REQUIRE(bank.size() == 16);
    CHECK(bank.certifying());

    const CMatrix rho = 0.5 * id(2);
    long w = -1;
    CHECK(bank.eval(rho, &w) == Approx(0.25).margin(1e-10));
    REQUIRE(w >= 0);
    CHECK(correlation_residual(State::from_density(rho), bank.e(w), bank.f(w)) ==
          Approx(0.25).margin(1e-10));
}

TEST_CASE("compass descent over states") {
    SECTION("linear objective drives the state onto the minimizing eigenvector") {
        CMatrix target = CMatrix::Zero(2, 2);
        target(0, 0) = 1.0;
        auto out = minimize_over_states(
            2, [&](const CMatrix& rho) { return trace_of_product(rho, target).real(); });
        CHECK(out.value <= 1e-6);
        CHECK(out.rho(1, 1).real() == Approx(1.0).margin(1e-5));
        CHECK(out.converged);
    }

    SECTION("the maximally mixed start is canonical on flat minima") {
        auto out = minimize_over_states(2, [](const CMatrix& rho) {
            return std::abs(trace_of_product(rho, pauli_z()).real()) +
                   std::abs(trace_of_product(rho, pauli_x()).real());
        });
        CHECK(out.best_start == 0);
        CHECK(out.value <= 1e-12);
        CHECK((out.rho - 0.5 * id(2)).norm() <= 1e-12);
    }

    SECTION("argument validation") {
        auto obj = [](const CMatrix&) { return 0.0; };
        CHECK_THROWS_AS(minimize_over_states(0, obj), std::invalid_argument);
        DescentOptions opt;
        opt.starts = 0;
        CHECK_THROWS_AS(minimize_over_states(2, obj, opt), std::invalid_argument);
    }
}

TEST_CASE("causality measure on the clash pair") {
    auto [a, b] = clash_pair();
    MeasureBudget budget;
    budget.starts = 8;

    auto rep = c_measure(a, b, {}, budget);
    CHECK(rep.c_value == Approx(0.25).margin(1e-8));
    CHECK(rep.inner_exhaustive);
    CHECK(rep.final_report.certified);
    CHECK(rep.certified_lower_bound == Approx(rep.c_value).margin(1e-12));
    CHECK(rep.converged);
    CHECK(rep.pairs_in_bank == 16);
    // the flat minimum contains the maximally mixed state and the canonical
    // start keeps it
    CHECK(trace_distance(rep.optimizing_state, State::maximally_mixed(2)) <= 1e-9);
    CHECK_FALSE(rep.descent_trace.empty());

    SECTION("sector restriction validates centrality") {
        CHECK_THROWS_AS(c_measure(a, b, Projection::from(diag_proj(1, 0).matrix()), budget),
                        std::invalid_argument);
        CHECK_THROWS_AS(c_measure(a, b, Projection::zero(2), budget), std::invalid_argument);
        auto full = c_measure(a, b, Projection::identity(2), budget);
        CHECK(full.c_value == Approx(0.25).margin(1e-8));
    }
}

TEST_CASE("causality measure vanishes on commuting factors") {
    auto [a, b] = tensor_pair();
    MeasureBudget budget;
    budget.starts = 4;
    budget.inner.sample_pairs = 128;

    auto rep = c_measure(a, b, {}, budget);
    CHECK(rep.c_value <= 1e-6);
    CHECK(rep.converged);
    CHECK_FALSE(rep.inner_exhaustive);
    CHECK(trace_distance(rep.optimizing_state, State::maximally_mixed(4)) <= 1e-9);
}

TEST_CASE("chsh functional at the singlet") {
    auto [a, b] = tensor_pair();
    const CMatrix one = id(2);
    const State omega = singlet();
    const double s2 = std::sqrt(2.0);
    const CMatrix a1 = kron(pauli_z(), one);
    const CMatrix a2 = kron(pauli_x(), one);
    const CMatrix b1 = -kron(one, CMatrix(pauli_z() + pauli_x())) / s2;
    const CMatrix b2 = kron(one, CMatrix(pauli_x() - pauli_z())) / s2;

    SECTION("optimal settings reach the quantum bound") {
        const double v = chsh_value(a, b, omega, a1, a2, b1, b2);
        CHECK(v == Approx(1.4142135623730947).margin(1e-12));
        CHECK(v > 1.0);  // beats every classical assignment
    }

    SECTION("observable validation") {
        CHECK_THROWS_AS(chsh_value(a, b, omega, 2.0 * a1, a2, b1, b2), std::invalid_argument);
        CHECK_THROWS_AS(chsh_value(a, b, omega, kron(pauli_z(), pauli_z()), a2, b1, b2),
                        std::invalid_argument);
        CMatrix skew = CMatrix::Zero(4, 4);
        skew(0, 1) = 1.0;
        CHECK_THROWS_AS(chsh_value(a, b, omega, skew, a2, b1, b2), std::invalid_argument);
        auto [ca, cb] = clash_pair();
        CHECK_THROWS_AS(chsh_value(ca, cb, State::maximally_mixed(2), pauli_z(), pauli_z(),
                                   pauli_x(), pauli_x()),
                        std::invalid_argument);
    }

    SECTION("seeded optimization approaches the bound deterministically") {
        auto best = optimize_chsh_settings(a, b, omega, 17);
        CHECK(best.value > 1.35);
        CHECK(best.value <= s2 + 1e-6);
        auto again = optimize_chsh_settings(a, b, omega, 17);
        CHECK(again.value == best.value);
        auto [ca, cb] = clash_pair();
        CHECK_THROWS_AS(optimize_chsh_settings(ca, cb, State::maximally_mixed(2), 1),
                        std::invalid_argument);
    }
}
