#pragma once

// JSON problem descriptions: a pair of algebras given by a preset name or by
// explicit generators, plus optional state, observables, projections, seed,
// and budget overrides.  Parsing is strict: unknown keys are errors and every
// message carries the JSON path it refers to.

#include "algebra.hpp"
#include "presets.hpp"

#include <json.hpp>

#include <array>
#include <fstream>
#include <string>

namespace qcausal {

class SpecError : public std::runtime_error {
public:
    SpecError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

struct BudgetOverrides {
    std::optional<long> pairs;
    std::optional<int> starts;
    std::optional<double> tolerance;
    std::optional<long> max_iter;
    bool operator==(const BudgetOverrides&) const = default;
    bool any() const { return pairs || starts || tolerance || max_iter; }
};

struct AlgebraPairSpec {
    int format_version = 1;
    std::optional<std::string> preset;
    std::optional<Index> dim;
    std::vector<CMatrix> generators_a, generators_b;
    std::optional<CMatrix> state;
    std::optional<std::array<CMatrix, 4>> chsh;  // A1, A2, B1, B2
    std::optional<CMatrix> projection_e, projection_f;
    std::uint64_t seed = 0;
    BudgetOverrides budget;
};

namespace detail {

inline bool same_matrix(const CMatrix& a, const CMatrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a - b).norm() == 0.0;
}

inline bool same_matrix(const std::optional<CMatrix>& a, const std::optional<CMatrix>& b) {
    if (a.has_value() != b.has_value()) return false;
    return !a || same_matrix(*a, *b);
}

}  // namespace detail

inline bool operator==(const AlgebraPairSpec& x, const AlgebraPairSpec& y) {
    if (x.format_version != y.format_version || x.preset != y.preset || x.dim != y.dim ||
        x.seed != y.seed || !(x.budget == y.budget))
        return false;
    if (x.generators_a.size() != y.generators_a.size() ||
        x.generators_b.size() != y.generators_b.size())
        return false;
    for (std::size_t i = 0; i < x.generators_a.size(); ++i)
        if (!detail::same_matrix(x.generators_a[i], y.generators_a[i])) return false;
    for (std::size_t i = 0; i < x.generators_b.size(); ++i)
        if (!detail::same_matrix(x.generators_b[i], y.generators_b[i])) return false;
    if (!detail::same_matrix(x.state, y.state) ||
        !detail::same_matrix(x.projection_e, y.projection_e) ||
        !detail::same_matrix(x.projection_f, y.projection_f))
        return false;
    if (x.chsh.has_value() != y.chsh.has_value()) return false;
    if (x.chsh)
        for (int i = 0; i < 4; ++i)
            if (!detail::same_matrix((*x.chsh)[i], (*y.chsh)[i])) return false;
    return true;
}

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& path,
                       std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw SpecError(path, "expected an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : allowed) ok = ok || key == k;
        if (!ok) throw SpecError(path + "." + key, "unknown key");
    }
}

inline CMatrix parse_matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw SpecError(path, "expected a non-empty array of rows");
    const std::size_t rows = j.size();
    std::size_t cols = 0;
    CMatrix m;
    for (std::size_t r = 0; r < rows; ++r) {
        const json& row = j[r];
        const std::string rpath = path + "[" + std::to_string(r) + "]";
        if (!row.is_array() || row.empty())
            throw SpecError(rpath, "expected a non-empty array of [re, im] entries");
        if (r == 0) {
            cols = row.size();
            m = CMatrix::Zero(static_cast<Index>(rows), static_cast<Index>(cols));
        } else if (row.size() != cols) {
            throw SpecError(rpath, "rows have inconsistent lengths");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            const json& entry = row[c];
            const std::string epath = rpath + "[" + std::to_string(c) + "]";
            if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
                !entry[1].is_number())
                throw SpecError(epath, "expected an entry of the form [re, im]");
            const double re = entry[0].get<double>();
            const double im = entry[1].get<double>();
            if (!std::isfinite(re) || !std::isfinite(im))
                throw SpecError(epath, "entries must be finite");
            m(static_cast<Index>(r), static_cast<Index>(c)) = Complex(re, im);
        }
    }
    return m;
}

inline nlohmann::ordered_json matrix_to_json(const CMatrix& m) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (Index c = 0; c < m.cols(); ++c)
            row.push_back(nlohmann::ordered_json::array({m(r, c).real(), m(r, c).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<CMatrix> parse_generators(const json& j, const std::string& path) {
    check_keys(j, path, {"generators"});
    if (!j.contains("generators")) throw SpecError(path, "missing 'generators'");
    const json& g = j["generators"];
    if (!g.is_array() || g.empty())
        throw SpecError(path + ".generators", "expected a non-empty array of matrices");
    std::vector<CMatrix> out;
    for (std::size_t i = 0; i < g.size(); ++i)
        out.push_back(parse_matrix(g[i], path + ".generators[" + std::to_string(i) + "]"));
    return out;
}

}  // namespace detail

inline AlgebraPairSpec parse_spec(const nlohmann::json& j) {
    using detail::json;
    detail::check_keys(j, "$",
                       {"format_version", "preset", "dim", "algebra_a", "algebra_b", "state",
                        "chsh", "projection_e", "projection_f", "seed", "budget"});

    AlgebraPairSpec spec;
    if (!j.contains("format_version"))
        throw SpecError("$.format_version", "missing required key");
    if (!j["format_version"].is_number_integer() || j["format_version"].get<int>() != 1)
        throw SpecError("$.format_version", "only version 1 is supported");

    const bool has_preset = j.contains("preset");
    const bool has_explicit = j.contains("dim") || j.contains("algebra_a") || j.contains("algebra_b");
    if (has_preset && has_explicit)
        throw SpecError("$", "give either 'preset' or explicit 'dim'/'algebra_a'/'algebra_b'");
    if (!has_preset && !(j.contains("dim") && j.contains("algebra_a") && j.contains("algebra_b")))
        throw SpecError("$", "need 'preset' or all of 'dim', 'algebra_a', 'algebra_b'");

    if (has_preset) {
        if (!j["preset"].is_string()) throw SpecError("$.preset", "expected a string");
        spec.preset = j["preset"].get<std::string>();
    } else {
        if (!j["dim"].is_number_integer() || j["dim"].get<long>() < 1)
            throw SpecError("$.dim", "expected a positive integer");
        spec.dim = j["dim"].get<Index>();
        spec.generators_a = detail::parse_generators(j["algebra_a"], "$.algebra_a");
        spec.generators_b = detail::parse_generators(j["algebra_b"], "$.algebra_b");
    }

    if (j.contains("state")) spec.state = detail::parse_matrix(j["state"], "$.state");
    if (j.contains("chsh")) {
        const json& c = j["chsh"];
        detail::check_keys(c, "$.chsh", {"a1", "a2", "b1", "b2"});
        std::array<CMatrix, 4> obs;
        const char* names[4] = {"a1", "a2", "b1", "b2"};
        for (int i = 0; i < 4; ++i) {
            if (!c.contains(names[i]))
                throw SpecError(std::string("$.chsh.") + names[i], "missing required key");
            obs[i] = detail::parse_matrix(c[names[i]], std::string("$.chsh.") + names[i]);
        }
        spec.chsh = std::move(obs);
    }
    if (j.contains("projection_e"))
        spec.projection_e = detail::parse_matrix(j["projection_e"], "$.projection_e");
    if (j.contains("projection_f"))
        spec.projection_f = detail::parse_matrix(j["projection_f"], "$.projection_f");

    if (j.contains("seed")) {
        const json& s = j["seed"];
        if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() &&
                                       s.get<long long>() < 0))
            throw SpecError("$.seed", "expected a non-negative integer");
        spec.seed = s.get<std::uint64_t>();
    }

    if (j.contains("budget")) {
        const json& b = j["budget"];
        detail::check_keys(b, "$.budget", {"pairs", "starts", "tolerance", "max_iter"});
        auto positive_int = [&](const char* key) -> std::optional<long> {
            if (!b.contains(key)) return std::nullopt;
            if (!b[key].is_number_integer() || b[key].get<long>() < 1)
                throw SpecError(std::string("$.budget.") + key, "expected a positive integer");
            return b[key].get<long>();
        };
        spec.budget.pairs = positive_int("pairs");
        spec.budget.max_iter = positive_int("max_iter");
        if (auto s = positive_int("starts")) spec.budget.starts = static_cast<int>(*s);
        if (b.contains("tolerance")) {
            if (!b["tolerance"].is_number() || !(b["tolerance"].get<double>() > 0))
                throw SpecError("$.budget.tolerance", "expected a positive number");
            spec.budget.tolerance = b["tolerance"].get<double>();
        }
    }
    return spec;
}

inline AlgebraPairSpec parse_spec_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SpecError("$", std::string("invalid JSON: ") + e.what());
    }
    return parse_spec(j);
}

inline AlgebraPairSpec load_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("$", "cannot open spec file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_spec_text(text);
}

inline nlohmann::ordered_json print_spec(const AlgebraPairSpec& spec) {
    nlohmann::ordered_json j;
    j["format_version"] = spec.format_version;
    if (spec.preset) j["preset"] = *spec.preset;
    if (spec.dim) j["dim"] = *spec.dim;
    if (!spec.generators_a.empty()) {
        nlohmann::ordered_json g = nlohmann::ordered_json::array();
        for (const CMatrix& m : spec.generators_a) g.push_back(detail::matrix_to_json(m));
        j["algebra_a"]["generators"] = std::move(g);
    }
    if (!spec.generators_b.empty()) {
        nlohmann::ordered_json g = nlohmann::ordered_json::array();
        for (const CMatrix& m : spec.generators_b) g.push_back(detail::matrix_to_json(m));
        j["algebra_b"]["generators"] = std::move(g);
    }
    if (spec.state) j["state"] = detail::matrix_to_json(*spec.state);
    if (spec.chsh) {
        const char* names[4] = {"a1", "a2", "b1", "b2"};
        for (int i = 0; i < 4; ++i) j["chsh"][names[i]] = detail::matrix_to_json((*spec.chsh)[i]);
    }
    if (spec.projection_e) j["projection_e"] = detail::matrix_to_json(*spec.projection_e);
    if (spec.projection_f) j["projection_f"] = detail::matrix_to_json(*spec.projection_f);
    j["seed"] = spec.seed;
    if (spec.budget.any()) {
        if (spec.budget.pairs) j["budget"]["pairs"] = *spec.budget.pairs;
        if (spec.budget.starts) j["budget"]["starts"] = *spec.budget.starts;
        if (spec.budget.tolerance) j["budget"]["tolerance"] = *spec.budget.tolerance;
        if (spec.budget.max_iter) j["budget"]["max_iter"] = *spec.budget.max_iter;
    }
    return j;
}

struct ResolvedSpec {
    Index dim;
    OperatorAlgebra a, b;
    State state;
    std::optional<std::array<CMatrix, 4>> chsh;
    std::optional<Projection> projection_e, projection_f;
    std::uint64_t seed;
    BudgetOverrides budget;
};

// Expand a preset, apply explicit overrides, and validate every matrix.
inline ResolvedSpec resolve(const AlgebraPairSpec& spec) {
    Index dim = 0;
    std::vector<CMatrix> gen_a, gen_b;
    std::optional<CMatrix> state = spec.state;
    std::optional<std::array<CMatrix, 4>> chsh = spec.chsh;

    if (spec.preset) {
        Preset p;
        try {
            p = preset(*spec.preset);
        } catch (const std::invalid_argument& e) {
            throw SpecError("$.preset", e.what());
        }
        dim = p.dim;
        gen_a = std::move(p.generators_a);
        gen_b = std::move(p.generators_b);
        if (!state) state = p.state;
        if (!chsh) chsh = p.chsh_observables;
    } else {
        dim = *spec.dim;
        gen_a = spec.generators_a;
        gen_b = spec.generators_b;
    }

    auto check_square = [&](const CMatrix& m, const std::string& path) {
        if (m.rows() != dim || m.cols() != dim)
            throw SpecError(path, "expected a " + std::to_string(dim) + "x" +
                                      std::to_string(dim) + " matrix");
    };
    for (std::size_t i = 0; i < gen_a.size(); ++i)
        check_square(gen_a[i], "$.algebra_a.generators[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < gen_b.size(); ++i)
        check_square(gen_b[i], "$.algebra_b.generators[" + std::to_string(i) + "]");

    auto make_state = [&]() -> State {
        if (!state) return State::maximally_mixed(dim);
        check_square(*state, "$.state");
        try {
            return State::from_density(*state);
        } catch (const std::invalid_argument& e) {
            throw SpecError("$.state", e.what());
        }
    };
    if (chsh) {
        const char* names[4] = {"a1", "a2", "b1", "b2"};
        for (int i = 0; i < 4; ++i) check_square((*chsh)[i], std::string("$.chsh.") + names[i]);
    }
    auto to_projection = [&](const std::optional<CMatrix>& m,
                             const std::string& path) -> std::optional<Projection> {
        if (!m) return std::nullopt;
        check_square(*m, path);
        try {
            return Projection::from(*m);
        } catch (const std::invalid_argument& e) {
            throw SpecError(path, e.what());
        }
    };

    return ResolvedSpec{dim,
                        OperatorAlgebra::generate(dim, gen_a),
                        OperatorAlgebra::generate(dim, gen_b),
                        make_state(),
                        std::move(chsh),
                        to_projection(spec.projection_e, "$.projection_e"),
                        to_projection(spec.projection_f, "$.projection_f"),
                        spec.seed,
                        spec.budget};
}

}  // namespace qcausal
