// Command-line interface: evaluates lattice constructions, correlation
// measures, and the locality verdict for a pair of algebras described by a
// JSON spec file.  Reports are JSON ("machine") or flattened key = value
// lines ("text"); exit codes are 0 success, 1 obstruction found, 2 bad
// input, 3 inconclusive or not converged.

#include <qcausal/qcausal.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace qcausal;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

struct Flags {
    std::string spec_path;
    std::string format = "machine";
    std::optional<std::uint64_t> seed;
    std::optional<long> pairs;
    std::optional<int> starts;
    std::optional<double> tol_flag;
    std::optional<long> max_iter;
    std::optional<int> sector;
};

struct Effective {
    std::uint64_t seed;
    long pairs;
    int starts;
    double tolerance;
    long max_iter;
};

Effective effective_budget(const ResolvedSpec& r, const Flags& f) {
    return {f.seed ? *f.seed : r.seed,
            f.pairs ? *f.pairs : r.budget.pairs.value_or(64),
            f.starts ? *f.starts : r.budget.starts.value_or(16),
            f.tol_flag ? *f.tol_flag : r.budget.tolerance.value_or(1e-6),
            f.max_iter ? *f.max_iter : r.budget.max_iter.value_or(tol::meet_max_iter)};
}

ordered_json vector_to_json(const CVector& v) {
    ordered_json out = ordered_json::array();
    for (Index i = 0; i < v.size(); ++i)
        out.push_back(ordered_json::array({v(i).real(), v(i).imag()}));
    return out;
}

// One line per leaf, mirroring the JSON structure exactly.
void print_text_lines(const ordered_json& j, const std::string& prefix, std::ostream& os) {
    if (j.is_object()) {
        if (j.empty()) {
            os << prefix << " = {}\n";
            return;
        }
        for (auto it = j.begin(); it != j.end(); ++it)
            print_text_lines(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), os);
    } else if (j.is_array()) {
        bool scalars = true;
        for (const auto& v : j) scalars = scalars && !v.is_structured();
        if (scalars) {
            os << prefix << " = " << j.dump() << "\n";
        } else {
            std::size_t i = 0;
            for (const auto& v : j) print_text_lines(v, prefix + "[" + std::to_string(i++) + "]", os);
        }
    } else {
        os << prefix << " = " << j.dump() << "\n";
    }
}

const char* sup_method_name(SupMethod m) {
    return m == SupMethod::exhaustive ? "exhaustive" : "sampled_refined";
}

const char* conclusion_name(TheoremConclusion c) {
    switch (c) {
        case TheoremConclusion::locality_verified: return "locality_verified";
        case TheoremConclusion::obstruction_found: return "obstruction_found";
        default: return "inconclusive";
    }
}

const Projection& require_projection(const std::optional<Projection>& p, const char* key) {
    if (!p)
        throw std::invalid_argument(std::string("this command needs '") + key +
                                    "' in the spec file");
    return *p;
}

struct CommandOutcome {
    ordered_json result;
    std::vector<std::string> warnings;
    bool certified = false;
    int exit_code = 0;
};

CommandOutcome run_generate(const ResolvedSpec& r, const OperatorAlgebra& joint,
                            const Effective&) {
    CommandOutcome out;
    auto side = [](const OperatorAlgebra& alg) {
        ordered_json s;
        s["size"] = alg.size();
        s["is_abelian"] = alg.is_abelian();
        s["is_trivial"] = alg.is_trivial();
        s["identity_residual"] = alg.identity_residual();
        BicommutantReport bc = bicommutant_check(alg);
        s["bicommutant"]["algebra_dim"] = bc.algebra_dim;
        s["bicommutant"]["bicommutant_dim"] = bc.bicommutant_dim;
        s["bicommutant"]["basis_residual"] = bc.basis_residual;
        s["bicommutant"]["equal"] = bc.equal;
        return s;
    };
    out.result["algebra_a"] = side(r.a);
    out.result["algebra_b"] = side(r.b);
    out.result["joint"]["size"] = joint.size();
    out.result["joint"]["is_abelian"] = joint.is_abelian();
    out.result["joint"]["center_size"] = center(joint).size();
    out.certified = true;
    return out;
}

CommandOutcome run_commutant(const ResolvedSpec& r, const OperatorAlgebra&, const Effective&) {
    CommandOutcome out;
    const long d2 = static_cast<long>(r.dim) * static_cast<long>(r.dim);
    auto side = [&](const OperatorAlgebra& alg) {
        ordered_json s;
        OperatorAlgebra c = commutant(alg);
        s["size"] = alg.size();
        s["commutant_size"] = c.size();
        s["size_product"] = static_cast<long>(alg.size()) * static_cast<long>(c.size());
        s["dim_squared"] = d2;
        s["product_is_dim_squared"] =
            static_cast<long>(alg.size()) * static_cast<long>(c.size()) == d2;
        s["center_size"] = center(alg).size();
        return s;
    };
    out.result["algebra_a"] = side(r.a);
    out.result["algebra_b"] = side(r.b);
    out.certified = true;
    return out;
}

CommandOutcome run_center(const ResolvedSpec& r, const OperatorAlgebra& joint,
                          const Effective& eff) {
    CommandOutcome out;
    out.result["center_size_a"] = center(r.a).size();
    out.result["center_size_b"] = center(r.b).size();
    out.result["center_size_joint"] = center(joint).size();
    CentralDecomposition cd = central_decomposition(joint, eff.seed);
    ordered_json sectors = ordered_json::array();
    for (std::size_t i = 0; i < cd.minimal_central_projections.size(); ++i) {
        ordered_json s;
        s["index"] = i;
        s["rank"] = cd.minimal_central_projections[i].rank();
        s["block_size"] = cd.blocks[i].size();
        sectors.push_back(std::move(s));
    }
    out.result["sectors"] = std::move(sectors);
    out.certified = true;
    return out;
}

CommandOutcome run_meet(const ResolvedSpec& r, const OperatorAlgebra&, const Effective& eff) {
    CommandOutcome out;
    const Projection& e = require_projection(r.projection_e, "projection_e");
    const Projection& f = require_projection(r.projection_f, "projection_f");

    MeetResult spectral_result = meet_spectral(e, f);
    out.result["spectral"]["rank"] = spectral_result.meet.rank();
    out.result["spectral"]["near_degenerate"] = spectral_result.near_degenerate;
    if (spectral_result.near_degenerate)
        out.warnings.push_back(
            "a principal angle sits in the numerically ambiguous band; the meet rank may be "
            "sensitive to perturbations");

    try {
        MeetResult it = meet_iterative(e, f, eff.max_iter);
        out.result["iterative"]["converged"] = true;
        out.result["iterative"]["iterations"] = it.iterations;
        out.result["iterative"]["residual"] = it.residual;
        out.result["iterative"]["rank"] = it.meet.rank();
        out.result["method_agreement"] = op_norm(spectral_result.meet.matrix() - it.meet.matrix());
    } catch (const MeetNotConverged& nc) {
        out.result["iterative"]["converged"] = false;
        out.result["iterative"]["iterations"] = nc.iterations;
        out.result["iterative"]["residual"] = nc.residual;
        out.warnings.push_back("iterative meet did not converge within " +
                               std::to_string(eff.max_iter) +
                               " iterations; the spectral result is authoritative");
    }
    out.result["projection"] = detail::matrix_to_json(spectral_result.meet.matrix());
    out.certified = true;
    return out;
}

CommandOutcome run_total_coincidence(const ResolvedSpec& r, const OperatorAlgebra&,
                                     const Effective&) {
    CommandOutcome out;
    const Projection& e = require_projection(r.projection_e, "projection_e");
    const Projection& f = require_projection(r.projection_f, "projection_f");

    Projection t = total_coincidence(e, f);
    CommutationCheck cc = commutes(e, f);
    out.result["rank"] = t.rank();
    out.result["is_identity"] = t.is_identity();
    out.result["commuting"] = cc.commuting;
    out.result["commutator_residual"] = cc.residual;
    const CMatrix meet_ef = meet_spectral(e, f).meet.matrix();
    out.result["eft_meet_residual"] = op_norm(e.matrix() * f.matrix() * t.matrix() - meet_ef);
    out.result["fet_meet_residual"] = op_norm(f.matrix() * e.matrix() * t.matrix() - meet_ef);
    out.result["projection"] = detail::matrix_to_json(t.matrix());
    out.certified = true;
    return out;
}

CommandOutcome run_correlation(const ResolvedSpec& r, const OperatorAlgebra&,
                               const Effective& eff) {
    CommandOutcome out;
    CorrelationBudget budget;
    budget.sample_pairs = eff.pairs;
    budget.seed = eff.seed;
    CorrelationReport rep = c_omega(r.state, r.a, r.b, budget);
    out.result["c_omega"] = rep.c_omega;
    out.result["method"] = sup_method_name(rep.method);
    out.result["samples_used"] = rep.samples_used;
    out.result["uncorrelated"] = rep.c_omega <= eff.tolerance;
    out.result["witness_e_rank"] = rep.witness_e.rank();
    out.result["witness_f_rank"] = rep.witness_f.rank();
    out.result["witness_e"] = detail::matrix_to_json(rep.witness_e.matrix());
    out.result["witness_f"] = detail::matrix_to_json(rep.witness_f.matrix());
    out.certified = rep.certified;
    if (!rep.certified)
        out.warnings.push_back("the supremum was sampled, not enumerated; c_omega is a lower bound");
    return out;
}

CommandOutcome run_causality_measure(const ResolvedSpec& r, const OperatorAlgebra& joint,
                                     const Effective& eff, const Flags& flags) {
    CommandOutcome out;
    std::optional<Projection> sector;
    if (flags.sector) {
        CentralDecomposition cd = central_decomposition(joint, eff.seed);
        const int n = static_cast<int>(cd.minimal_central_projections.size());
        if (*flags.sector < 0 || *flags.sector >= n)
            throw std::invalid_argument("--sector must be in 0.." + std::to_string(n - 1));
        sector = cd.minimal_central_projections[*flags.sector];
        out.result["sector"]["index"] = *flags.sector;
        out.result["sector"]["rank"] = sector->rank();
    }

    MeasureBudget budget;
    budget.inner.sample_pairs = eff.pairs;
    budget.starts = eff.starts;
    budget.seed = eff.seed;
    CausalityMeasureReport rep = c_measure(r.a, r.b, sector, budget);
    out.result["c_value"] = rep.c_value;
    out.result["certified_lower_bound"] = rep.certified_lower_bound;
    out.result["converged"] = rep.converged;
    out.result["inner_exhaustive"] = rep.inner_exhaustive;
    out.result["evaluations"] = rep.evaluations;
    out.result["starts_used"] = rep.starts_used;
    out.result["pairs_in_bank"] = rep.pairs_in_bank;
    out.result["final"]["c_omega"] = rep.final_report.c_omega;
    out.result["final"]["method"] = sup_method_name(rep.final_report.method);
    out.result["final"]["samples_used"] = rep.final_report.samples_used;
    out.result["optimizing_state"] = detail::matrix_to_json(rep.optimizing_state.density());
    out.certified = rep.inner_exhaustive;
    if (!rep.converged)
        out.warnings.push_back("the state search hit its sweep budget before converging");
    if (!rep.inner_exhaustive)
        out.warnings.push_back("projection pairs were sampled; c_value is an upper-bound estimate "
                               "from the best state found");
    return out;
}

CommandOutcome run_verify_theorem(const ResolvedSpec& r, const OperatorAlgebra&,
                                  const Effective& eff) {
    CommandOutcome out;
    TheoremBudget budget;
    budget.tolerance = eff.tolerance;
    budget.pairs_per_sector = eff.pairs;
    budget.global_pairs = eff.pairs;
    budget.seed = eff.seed;
    budget.search.starts = eff.starts;
    ProofTrace trace = verify_theorem(r.a, r.b, budget);

    out.result["conclusion"] = conclusion_name(trace.conclusion);
    out.result["max_commutator"] = trace.max_commutator;
    out.result["coincidence_core"]["rank"] = trace.coincidence_core->rank();
    out.result["coincidence_core"]["is_identity"] = trace.coincidence_core->is_identity();
    out.result["coincidence_core"]["central"] = trace.core_check.central;
    out.result["coincidence_core"]["commutator_residual"] = trace.core_check.commutator_residual;
    out.result["coincidence_core"]["membership_residual"] = trace.core_check.membership_residual;
    out.result["coincidence_core"]["matrix"] =
        detail::matrix_to_json(trace.coincidence_core->matrix());
    out.result["commutation_residual_on_core"] = trace.commutation_residual_on_core;
    ordered_json sectors = ordered_json::array();
    bool all_certifying = !trace.sectors.empty();
    for (const SectorReport& s : trace.sectors) {
        ordered_json sj;
        sj["index"] = s.index;
        sj["rank"] = s.rank;
        sj["uncorrelated_found"] = s.uncorrelated_found;
        sj["obstructed"] = s.obstructed;
        sj["best_residual"] = s.best_residual;
        sj["pairs_certifying"] = s.pairs_certifying;
        sj["pairs_used"] = s.pairs_used;
        if (s.phi_t_residual >= 0) sj["phi_t_residual"] = s.phi_t_residual;
        if (s.word_residual >= 0) sj["word_residual"] = s.word_residual;
        sectors.push_back(std::move(sj));
        all_certifying = all_certifying && s.pairs_certifying;
    }
    out.result["sectors"] = std::move(sectors);
    out.result["obstructed_sector"] = trace.obstructed_sector;
    out.result["pairs_used"] = trace.pairs_used;
    if (trace.phi) out.result["phi"] = vector_to_json(*trace.phi);
    out.certified = all_certifying;

    switch (trace.conclusion) {
        case TheoremConclusion::locality_verified: out.exit_code = 0; break;
        case TheoremConclusion::obstruction_found: out.exit_code = 1; break;
        default:
            out.exit_code = 3;
            out.warnings.push_back("no verdict within the budget: some sector landed between "
                                   "the tolerance and ten times the tolerance");
            break;
    }
    return out;
}

CommandOutcome run_chsh(const ResolvedSpec& r, const OperatorAlgebra&, const Effective& eff) {
    CommandOutcome out;
    CMatrix a1, a2, b1, b2;
    double value = 0.0;
    bool optimized = false;
    if (r.chsh) {
        a1 = (*r.chsh)[0];
        a2 = (*r.chsh)[1];
        b1 = (*r.chsh)[2];
        b2 = (*r.chsh)[3];
        value = chsh_value(r.a, r.b, r.state, a1, a2, b1, b2);
    } else {
        ChshSettings s = optimize_chsh_settings(r.a, r.b, r.state, eff.seed, 80,
                                                std::min(eff.starts, 8));
        a1 = s.a1;
        a2 = s.a2;
        b1 = s.b1;
        b2 = s.b2;
        value = s.value;
        optimized = true;
        out.warnings.push_back("observables were optimized from random starts; the value is a "
                               "lower bound on the supremum");
    }
    out.result["value"] = value;
    out.result["optimized"] = optimized;
    out.result["classical_bound"] = 1.0;
    out.result["quantum_bound"] = std::sqrt(2.0);
    out.result["exceeds_classical"] = value > 1.0 + 1e-12;
    out.result["settings"]["a1"] = detail::matrix_to_json(a1);
    out.result["settings"]["a2"] = detail::matrix_to_json(a2);
    out.result["settings"]["b1"] = detail::matrix_to_json(b1);
    out.result["settings"]["b2"] = detail::matrix_to_json(b2);
    out.certified = !optimized;
    return out;
}

int run_command(const std::string& command, const Flags& flags) {
    AlgebraPairSpec spec = load_spec_file(flags.spec_path);
    ResolvedSpec r = resolve(spec);
    Effective eff = effective_budget(r, flags);

    OperatorAlgebra joint = join_algebras(r.a, r.b);
    double max_comm = 0.0;
    for (const CMatrix& x : r.a.basis())
        for (const CMatrix& y : r.b.basis()) max_comm = std::max(max_comm, commutator_norm(x, y));

    CommandOutcome out;
    if (command == "generate")
        out = run_generate(r, joint, eff);
    else if (command == "commutant")
        out = run_commutant(r, joint, eff);
    else if (command == "center")
        out = run_center(r, joint, eff);
    else if (command == "meet")
        out = run_meet(r, joint, eff);
    else if (command == "total-coincidence")
        out = run_total_coincidence(r, joint, eff);
    else if (command == "correlation")
        out = run_correlation(r, joint, eff);
    else if (command == "causality-measure")
        out = run_causality_measure(r, joint, eff, flags);
    else if (command == "verify-theorem")
        out = run_verify_theorem(r, joint, eff);
    else if (command == "chsh")
        out = run_chsh(r, joint, eff);
    else
        throw std::invalid_argument("unknown command '" + command + "'");

    ordered_json env;
    env["tool"] = "qcausal";
    env["version"] = kVersion;
    env["command"] = command;
    env["inputs"]["spec_file"] = flags.spec_path;
    env["inputs"]["spec"] = print_spec(spec);
    ordered_json fl;
    if (flags.seed) fl["seed"] = *flags.seed;
    if (flags.pairs) fl["pairs"] = *flags.pairs;
    if (flags.starts) fl["starts"] = *flags.starts;
    if (flags.tol_flag) fl["tol"] = *flags.tol_flag;
    if (flags.max_iter) fl["max_iter"] = *flags.max_iter;
    if (flags.sector) fl["sector"] = *flags.sector;
    fl["format"] = flags.format;
    env["inputs"]["flags"] = std::move(fl);
    env["seeds"]["spec_seed"] = spec.seed;
    env["seeds"]["effective_seed"] = eff.seed;
    env["tolerances"]["tolerance"] = eff.tolerance;
    env["tolerances"]["max_iter"] = eff.max_iter;
    env["tolerances"]["commutator"] = tol::commutator;
    env["tolerances"]["span"] = tol::span;
    env["tolerances"]["meet_gap"] = tol::meet_gap;
    env["tolerances"]["meet_converged"] = tol::meet_converged;
    env["algebras"]["dim"] = r.dim;
    env["algebras"]["size_a"] = r.a.size();
    env["algebras"]["size_b"] = r.b.size();
    env["algebras"]["size_joint"] = joint.size();
    env["algebras"]["center_size_joint"] = center(joint).size();
    env["algebras"]["max_commutator_ab"] = max_comm;
    env["result"] = std::move(out.result);
    env["warnings"] = out.warnings;
    env["certified"] = out.certified;

    if (flags.format == "machine")
        std::cout << env.dump(2) << "\n";
    else
        print_text_lines(env, "", std::cout);
    return out.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"projection lattices, correlation measures, and locality checks for pairs of "
                 "finite-dimensional operator algebras"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Flags flags;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"generate", "build both algebras and report their structure"},
        {"commutant", "commutant sizes and the dimension product identity"},
        {"center", "centers and the central decomposition of the joint algebra"},
        {"meet", "lattice meet of the two spec projections, both methods"},
        {"total-coincidence", "total coincidence of the two spec projections"},
        {"correlation", "c_omega for the spec state over projection pairs"},
        {"causality-measure", "minimize c_omega over states"},
        {"verify-theorem", "search every sector for uncorrelated states"},
        {"chsh", "chsh correlation for the spec state"},
    };
    for (const auto& [name, desc] : commands) {
        CLI::App* cmd = app.add_subcommand(name, desc);
        cmd->add_option("--spec", flags.spec_path, "JSON spec file")->required();
        cmd->add_option("--seed", flags.seed, "override the spec seed");
        cmd->add_option("--pairs", flags.pairs, "projection pairs per search");
        cmd->add_option("--starts", flags.starts, "optimizer restarts");
        cmd->add_option("--tol", flags.tol_flag, "verdict tolerance");
        cmd->add_option("--max-iter", flags.max_iter, "iterative meet cap");
        cmd->add_option("--sector", flags.sector, "restrict to one central sector (by index)");
        cmd->add_option("--format", flags.format, "output format")
            ->check(CLI::IsMember({"machine", "text"}));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return run_command(command, flags);
    } catch (const SpecError& e) {
        std::cerr << "qcausal: spec error at " << e.path() << ": " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "qcausal: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "qcausal: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "qcausal: " << e.what() << "\n";
        return 3;
    }
}
