#include <qcausal/presets.hpp>
#include <qcausal/theorem.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace qcausal;
using namespace testsup;
using Catch::Approx;

namespace {

std::pair<OperatorAlgebra, OperatorAlgebra> preset_pair(const std::string& name) {
    Preset p = preset(name);
    return {OperatorAlgebra::generate(p.dim, p.generators_a),
            OperatorAlgebra::generate(p.dim, p.generators_b)};
}

CMatrix upper_block_mask(Index dim, Index rank) {
    CMatrix m = CMatrix::Zero(dim, dim);
    for (Index i = 0; i < rank; ++i) m(i, i) = 1.0;
    return m;
}

}  // namespace

TEST_CASE("coincidence core of the example pairs") {
    SECTION("commuting tensor factors leave the core full") {
        auto [a, b] = preset_pair("tensor-qubits");
        Projection core = compute_coincidence_core(4, PairSource::sampled(a, b, 64, 3));
        CHECK(core.is_identity());
    }

    SECTION("the clash pair collapses the core to zero") {
        auto [a, b] = preset_pair("qubit-clash");
        Projection core = compute_coincidence_core(2, PairSource::exhaustive(a, b));
        CHECK(core.is_zero());
    }

    SECTION("the mixed block pair keeps exactly the commuting block") {
        auto [a, b] = preset_pair("block-mixed");
        Projection core = compute_coincidence_core(6, PairSource::sampled(a, b, 128, 5));
        CHECK((core.matrix() - upper_block_mask(6, 4)).norm() <= 1e-8);

        OperatorAlgebra joint = join_algebras(a, b);
        auto chk = check_central(core, joint);
        CHECK(chk.central);
        CHECK(chk.commutator_residual <= 1e-9);
        CHECK(chk.membership_residual <= 1e-9);

        // a projection inside one matrix block is not central
        auto skew = Projection::from(upper_block_mask(6, 1));
        auto bad = check_central(skew, joint);
        CHECK_FALSE(bad.central);
        CHECK(bad.commutator_residual > 0.1);
    }
}

TEST_CASE("witness vector extraction") {
    SECTION("a product pure state yields a fixed vector") {
        auto [a, b] = preset_pair("tensor-qubits");
        State rho = State::pure(CVector::Unit(4, 0));
        auto ext = extract_phi(rho, PairSource::sampled(a, b, 48, 9));
        CHECK(ext.t_residual <= 1e-8);
        CHECK(ext.phi(0).real() == Approx(1.0).margin(1e-9));
    }

    SECTION("no fixed vector survives the clash pair") {
        auto [a, b] = preset_pair("qubit-clash");
        CHECK_THROWS_AS(
            extract_phi(State::maximally_mixed(2), PairSource::exhaustive(a, b)),
            std::runtime_error);
    }
}

TEST_CASE("commutation residual on word vectors") {
    SECTION("clashing qubit algebras give residual one exactly") {
        auto [a, b] = preset_pair("qubit-clash");
        // [sigma_z, sigma_x]/2 = i sigma_y is unitary, so every unit vector
        // reports norm one
        const double r = phi_commutation_residual(CVector::Unit(2, 0), a, b, 1);
        CHECK(r == Approx(1.0).margin(1e-9));
    }

    SECTION("commuting factors give zero") {
        auto [a, b] = preset_pair("tensor-qubits");
        CVector phi = CVector::Unit(4, 0);
        CHECK(phi_commutation_residual(phi, a, b, 2) <= 1e-12);
    }

    SECTION("dimension mismatch is rejected") {
        auto [a, b] = preset_pair("tensor-qubits");
        CHECK_THROWS_AS(phi_commutation_residual(CVector::Unit(2, 0), a, b),
                        std::invalid_argument);
    }
}

TEST_CASE("theorem harness verifies commuting tensor factors") {
    auto [a, b] = preset_pair("tensor-qubits");
    TheoremBudget budget;
    budget.seed = 21;
    ProofTrace trace = verify_theorem(a, b, budget);

    CHECK(trace.conclusion == TheoremConclusion::locality_verified);
    CHECK(trace.max_commutator <= 1e-12);
    REQUIRE(trace.sectors.size() == 1);
    CHECK(trace.sectors[0].rank == 4);
    CHECK(trace.sectors[0].uncorrelated_found);
    CHECK_FALSE(trace.sectors[0].obstructed);
    CHECK(trace.sectors[0].best_residual <= 1e-6);
    CHECK(trace.sectors[0].phi_t_residual >= 0.0);
    CHECK(trace.sectors[0].phi_t_residual <= 1e-8);
    CHECK(trace.sectors[0].word_residual <= 1e-9);
    REQUIRE(trace.phi.has_value());
    CHECK(trace.phi->norm() == Approx(1.0).margin(1e-9));
    REQUIRE(trace.coincidence_core.has_value());
    CHECK(trace.coincidence_core->is_identity());
    CHECK(trace.core_check.central);
    CHECK(trace.commutation_residual_on_core <= 1e-12);
    CHECK(trace.obstructed_sector == -1);
    CHECK(trace.pairs_used > 0);
}

TEST_CASE("theorem harness flags the clash pair") {
    auto [a, b] = preset_pair("qubit-clash");
    ProofTrace trace = verify_theorem(a, b);

    CHECK(trace.conclusion == TheoremConclusion::obstruction_found);
    CHECK(trace.obstructed_sector == 0);
    REQUIRE(trace.sectors.size() == 1);
    CHECK(trace.sectors[0].rank == 2);
    CHECK_FALSE(trace.sectors[0].uncorrelated_found);
    CHECK(trace.sectors[0].obstructed);
    CHECK(trace.sectors[0].best_residual == Approx(0.25).margin(1e-6));
    CHECK_FALSE(trace.phi.has_value());
    // normalized basis pair [sigma_z, sigma_x]/2 has norm one
    CHECK(trace.max_commutator == Approx(1.0).margin(1e-9));
    REQUIRE(trace.coincidence_core.has_value());
    CHECK(trace.coincidence_core->is_zero());
    // everything commutes on a zero core
    CHECK(trace.commutation_residual_on_core <= 1e-12);
}

TEST_CASE("theorem harness splits the mixed block pair by sector") {
    auto [a, b] = preset_pair("block-mixed");
    TheoremBudget budget;
    budget.seed = 4;
    ProofTrace trace = verify_theorem(a, b, budget);

    CHECK(trace.conclusion == TheoremConclusion::obstruction_found);
    REQUIRE(trace.sectors.size() == 2);

    const SectorReport* good = nullptr;
    const SectorReport* bad = nullptr;
    for (const SectorReport& s : trace.sectors) (s.obstructed ? bad : good) = &s;
    REQUIRE(good != nullptr);
    REQUIRE(bad != nullptr);

    CHECK(bad->rank == 2);
    CHECK(bad->best_residual == Approx(0.25).margin(1e-6));
    CHECK(trace.obstructed_sector == bad->index);

    CHECK(good->rank == 4);
    CHECK(good->uncorrelated_found);
    CHECK(good->best_residual <= 1e-6);
    CHECK(good->word_residual >= 0.0);
    CHECK(good->word_residual <= 1e-9);
    REQUIRE(trace.phi.has_value());

    REQUIRE(trace.coincidence_core.has_value());
    CMatrix expected = CMatrix::Zero(6, 6);
    for (Index i = 0; i < 4; ++i) expected(i, i) = 1.0;
    CHECK((trace.coincidence_core->matrix() - expected).norm() <= 1e-8);
    CHECK(trace.core_check.central);
    CHECK(trace.commutation_residual_on_core <= 1e-10);
    CHECK(trace.max_commutator > 0.1);

    // the run is reproducible for a fixed seed
    ProofTrace again = verify_theorem(a, b, budget);
    CHECK(again.conclusion == trace.conclusion);
    REQUIRE(again.sectors.size() == trace.sectors.size());
    for (std::size_t i = 0; i < trace.sectors.size(); ++i)
        CHECK(again.sectors[i].best_residual == trace.sectors[i].best_residual);
}

TEST_CASE("theorem harness argument validation") {
    auto [a, b] = preset_pair("qubit-clash");
    auto [ta, tb] = preset_pair("tensor-qubits");
    CHECK_THROWS_AS(verify_theorem(a, tb), std::invalid_argument);
    TheoremBudget bad;
    bad.tolerance = 0.0;
    CHECK_THROWS_AS(verify_theorem(a, b, bad), std::invalid_argument);
}
