#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pnlw/harness.hpp"

using namespace pnlw;

namespace {
std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}
} // namespace

TEST_CASE("catalog covers the required experiment ids") {
    const std::set<std::string> required = {
        "parseval",       "kernel-constancy", "haar-orthogonality", "median-sqrtq",
        "tail-shape",     "bernstein",        "coordinate-tail",    "linear-periodicity",
        "prop-proba-1",   "prop-proba-2",     "prop-proba-3",       "picard-contraction",
        "duffing-oracle", "hamiltonian-drift", "gronwall-case1",    "budget-case2",
        "chart-roundtrip", "h0-h1-eigen",     "lq-transfer",        "scattering-fit",
        "uniqueness-H"};
    std::set<std::string> have;
    for (const auto& e : experiment_catalog()) {
        CHECK_FALSE(e.statement.empty());
        CHECK_FALSE(e.module_op.empty());
        CHECK(have.insert(e.id).second); // ids unique
    }
    for (const auto& id : required) CHECK(have.count(id) == 1);
    // stable across calls
    CHECK(&experiment_catalog() == &experiment_catalog());
}

TEST_CASE("manifest validation names the offending fields") {
    RunManifest m;
    m.experiment = "parseval";
    m.params["sigma"] = 0.7;
    m.params["dt"] = -1.0;
    try {
        validate_manifest(m);
        FAIL("expected validation failure");
    } catch (const std::invalid_argument& e) {
        const std::string what = e.what();
        CHECK(what.find("sigma") != std::string::npos);
        CHECK(what.find("dt") != std::string::npos);
    }
    RunManifest bad;
    bad.experiment = "no-such-experiment";
    CHECK_THROWS_AS(validate_manifest(bad), std::invalid_argument);
    CHECK_THROWS_AS(run_experiment_by_id("no-such-experiment", 1, json::object()),
                    std::invalid_argument);
}

TEST_CASE("manifest hash is content-determined") {
    RunManifest a;
    a.experiment = "parseval";
    a.seed = 3;
    a.params["n_max"] = 6;
    RunManifest b = a;
    CHECK(manifest_content_hash(a) == manifest_content_hash(b));
    b.params["n_max"] = 7;
    CHECK(manifest_content_hash(a) != manifest_content_hash(b));
}

TEST_CASE("repeated runs are byte-identical") {
    RunManifest m;
    m.experiment = "parseval";
    m.seed = 11;
    m.params["n_max"] = 5;

    const std::string dir_a = "harness_run_a";
    const std::string dir_b = "harness_run_b";
    m.out_dir = dir_a;
    const ExperimentResult ra = run_experiment(m);
    m.out_dir = dir_b;
    const ExperimentResult rb = run_experiment(m);
    CHECK(ra.pass);
    CHECK(rb.pass);

    std::ostringstream hex;
    hex << std::hex << manifest_content_hash(m);
    const std::string run_a = dir_a + "/" + hex.str();
    const std::string run_b = dir_b + "/" + hex.str();
    REQUIRE(std::filesystem::exists(run_a + "/field.csv"));
    CHECK(slurp(run_a + "/field.csv") == slurp(run_b + "/field.csv"));
    CHECK(slurp(run_a + "/manifest.json") == slurp(run_b + "/manifest.json"));
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
}

TEST_CASE("small experiments run end to end") {
    const ExperimentResult lin = run_experiment_by_id("linear-periodicity", 5, json::object());
    CHECK(lin.pass);
    const ExperimentResult chart = run_experiment_by_id("chart-roundtrip", 5, json::object());
    CHECK(chart.pass);
    const ExperimentResult duffing =
        run_experiment_by_id("duffing-oracle", 5, {{"t_end", 4.0}, {"dt", 2e-3}});
    CHECK(duffing.pass);
}
