#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

using Catch::Approx;
using nlohmann::json;

namespace {

int run_cli(const std::string& args, std::string* out = nullptr) {
    const char* bin = std::getenv("QCAUSAL_BIN");
    REQUIRE(bin != nullptr);
    const std::string cmd = std::string("\"") + bin + "\" " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string text;
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) text.append(buf, n);
    const int status = pclose(pipe);
    if (out) *out = text;
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string spec_path(const std::string& name) {
    const char* dir = std::getenv("QCAUSAL_SPECS");
    REQUIRE(dir != nullptr);
    return std::string(dir) + "/" + name;
}

std::string write_temp_spec(const std::string& tag, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / ("qcausal_cli_" + tag + ".json");
    std::ofstream(path) << content;
    return path.string();
}

}  // namespace

TEST_CASE("cli version flag") {
    std::string out;
    CHECK(run_cli("--version", &out) == 0);
    CHECK(out.find("0.1.0") != std::string::npos);
}

TEST_CASE("machine reports are complete and reproducible") {
    const std::string spec = spec_path("qubit-clash.json");
    std::string first, second;
    CHECK(run_cli("correlation --spec " + spec + " --seed 4", &first) == 0);
    CHECK(run_cli("correlation --spec " + spec + " --seed 4", &second) == 0);
    CHECK(first == second);

    json j = json::parse(first);
    CHECK(j["tool"] == "qcausal");
    CHECK(j["version"] == "0.1.0");
    CHECK(j["command"] == "correlation");
    CHECK(j["inputs"]["spec"]["preset"] == "qubit-clash");
    CHECK(j["seeds"]["effective_seed"] == 4);
    CHECK(j["algebras"]["dim"] == 2);
    CHECK(j["algebras"]["size_joint"] == 4);
    CHECK(j["result"]["c_omega"].get<double>() == Approx(0.25).margin(1e-10));
    CHECK(j["result"]["method"] == "exhaustive");
    CHECK(j["result"]["uncorrelated"] == false);
    CHECK(j["certified"] == true);
    CHECK(j["warnings"].is_array());
}

TEST_CASE("text format mirrors the machine report") {
    std::string out;
    CHECK(run_cli("correlation --spec " + spec_path("qubit-clash.json") + " --format text",
                  &out) == 0);
    CHECK(out.find("result.c_omega = 0.25\n") != std::string::npos);
    CHECK(out.find("certified = true\n") != std::string::npos);
    CHECK(out.find("command = \"correlation\"\n") != std::string::npos);
}

TEST_CASE("meet and total-coincidence on the explicit pair") {
    const std::string spec = spec_path("explicit-qubit-pair.json");
    std::string out;
    REQUIRE(run_cli("meet --spec " + spec, &out) == 0);
    json j = json::parse(out);
    CHECK(j["result"]["spectral"]["rank"] == 0);
    CHECK(j["result"]["iterative"]["converged"] == true);
    CHECK(j["result"]["iterative"]["iterations"] == 41);
    CHECK(j["result"]["method_agreement"].get<double>() <= 1e-12);

    REQUIRE(run_cli("total-coincidence --spec " + spec, &out) == 0);
    j = json::parse(out);
    CHECK(j["result"]["rank"] == 0);
    CHECK(j["result"]["commuting"] == false);
    CHECK(j["result"]["commutator_residual"].get<double>() == Approx(0.5).margin(1e-12));
}

TEST_CASE("verdict exit codes") {
    CHECK(run_cli("verify-theorem --spec " + spec_path("tensor-qubits.json")) == 0);
    CHECK(run_cli("verify-theorem --spec " + spec_path("qubit-clash.json")) == 1);
    CHECK(run_cli("verify-theorem --spec " + spec_path("block-mixed.json")) == 1);
}

TEST_CASE("input error exit codes") {
    CHECK(run_cli("meet --spec " + spec_path("tensor-qubits.json")) == 2);
    CHECK(run_cli("generate --spec /nonexistent/nowhere.json") == 2);
    CHECK(run_cli("generate") == 2);
    CHECK(run_cli("no-such-command --spec x") == 2);
    CHECK(run_cli("generate --spec " + spec_path("qubit-clash.json") + " --format yaml") == 2);

    const std::string broken = write_temp_spec("broken", "{ not json");
    CHECK(run_cli("generate --spec " + broken) == 2);
    const std::string unknown_key = write_temp_spec(
        "unknown", R"({"format_version": 1, "preset": "qubit-clash", "surprise": true})");
    CHECK(run_cli("generate --spec " + unknown_key) == 2);
    const std::string bad_state = write_temp_spec("badstate", R"({
        "format_version": 1, "preset": "qubit-clash",
        "state": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]})");
    CHECK(run_cli("correlation --spec " + bad_state) == 2);
}

TEST_CASE("chsh command evaluates the preset observables") {
    std::string out;
    REQUIRE(run_cli("chsh --spec " + spec_path("pauli-chsh.json"), &out) == 0);
    json j = json::parse(out);
    CHECK(j["result"]["value"].get<double>() == Approx(1.4142135623730947).margin(1e-12));
    CHECK(j["result"]["optimized"] == false);
    CHECK(j["result"]["exceeds_classical"] == true);
    CHECK(j["certified"] == true);
}

TEST_CASE("sector restriction on the mixed block pair") {
    const std::string spec = spec_path("block-mixed.json");
    bool saw_clash = false, saw_commuting = false;
    for (int s : {0, 1}) {
        std::string out;
        REQUIRE(run_cli("causality-measure --spec " + spec + " --seed 2 --sector " +
                            std::to_string(s),
                        &out) == 0);
        json j = json::parse(out);
        const long rank = j["result"]["sector"]["rank"].get<long>();
        const double c = j["result"]["c_value"].get<double>();
        if (rank == 2) {
            saw_clash = true;
            CHECK(c == Approx(0.25).margin(1e-6));
        } else {
            saw_commuting = true;
            CHECK(rank == 4);
            CHECK(c <= 1e-6);
        }
    }
    CHECK(saw_clash);
    CHECK(saw_commuting);
    CHECK(run_cli("causality-measure --spec " + spec + " --sector 7") == 2);
}

TEST_CASE("verdicts are stable across seeds") {
    for (int seed : {1, 2, 3}) {
        std::string out;
        CHECK(run_cli("verify-theorem --spec " + spec_path("block-mixed.json") + " --seed " +
                          std::to_string(seed),
                      &out) == 1);
        json j = json::parse(out);
        CHECK(j["result"]["conclusion"] == "obstruction_found");
        long obstructed_rank = 0;
        for (const auto& s : j["result"]["sectors"])
            if (s["obstructed"].get<bool>()) obstructed_rank = s["rank"].get<long>();
        CHECK(obstructed_rank == 2);
    }
}
