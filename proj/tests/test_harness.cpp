#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bsee/errors.hpp"
#include "bsee/harness.hpp"

using namespace bsee;
using nlohmann::json;

namespace {

json small_config() {
    return json::parse(R"({
        "name": "l0_small",
        "case": "L0",
        "scheme": 2,
        "horizon": 0.25,
        "J": [8, 16, 32, 64],
        "operator": {"preset": "laplacian_1d", "modes": 8},
        "backend": {"kind": "lattice", "nodes": 65},
        "rate_of": "p",
        "thresholds": {"min_rate": 0.9}
    })");
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "bsee_harness_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string write_config(const json& doc, const std::string& file) {
    const auto path = scratch(file);
    std::ofstream(path) << doc.dump();
    return path.string();
}

}  // namespace

TEST_CASE("config validation") {
    const ExperimentConfig c = parse_config(small_config());
    CHECK(c.schemes == std::vector<int>{2});
    CHECK(c.backend.lattice.horizon == 0.25);
    CHECK(c.echo()["case"] == "L0");

    json bad = small_config();
    bad["J"] = {8, 12};
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = small_config();
    bad["J"] = {16, 8};
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = small_config();
    bad["case"] = "Q7";
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = small_config();
    bad["schemes"] = {4};
    bad.erase("scheme");
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = small_config();
    bad["colour"] = "red";
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = small_config();
    bad["backend"]["interpolation"] = "quintic";
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = small_config();
    bad["horizon"] = "long";
    CHECK_THROWS_AS(parse_config(bad), ConfigError);

    json lq = json::parse(R"({"kind": "lq", "J": [4, 8], "lq": {"nu": 2, "alpha0": "cos", "alpha2": 0.5}})");
    const ExperimentConfig l = parse_config(lq);
    CHECK(l.lq.nu == 2.0);
    CHECK(l.lq.coeffs.alpha0(0.0) == 1.0);
    CHECK(l.backend.lattice.interpolation == Interpolation::linear);
    lq["lq"]["target"] = "square_wave";
    CHECK_THROWS_AS(parse_config(lq), ConfigError);
}

TEST_CASE("deterministic case superconverges in P") {
    const ExperimentReport r = run_experiment(parse_config(small_config()), {.threads = 2, .timing = false});
    REQUIRE(r.schemes.size() == 1);
    REQUIRE(r.schemes[0].fit.has_value());
    CHECK(r.schemes[0].fit->slope >= 0.9);
    for (const CellResult& c : r.schemes[0].cells) CHECK(c.err_z <= 1e-12);
    CHECK(r.pass());
}

TEST_CASE("reports are reproducible byte for byte") {
    json doc = small_config();
    doc["schemes"] = {1, 3};
    doc.erase("scheme");
    doc["substeps"] = 2;
    doc["case"] = "N1";
    doc["J"] = {4, 8};
    const ExperimentConfig c = parse_config(doc);
    std::ostringstream a, b;
    write_csv(a, run_experiment(c, {.threads = 1, .timing = false}));
    write_csv(b, run_experiment(c, {.threads = 3, .timing = false}));
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("case,scheme,backend,J,tau,errP_inf,errZ,fp_iters_max,wall_ms\n", 0) == 0);
}

TEST_CASE("rate fit from a CSV report") {
    std::stringstream csv;
    csv << "case,scheme,backend,J,tau,errP_inf,errZ,fp_iters_max,wall_ms\n";
    for (int J : {8, 16, 32, 64}) csv << "L2,1,lattice," << J << ',' << 1.0 / J << ',' << 0.0 << ',' << std::sqrt(1.0 / J) << ",1,0\n";
    csv << "L2,2,lattice,8,0.125,0.1,0.1,1,0\n";
    const json fits = fit_csv(csv);
    REQUIRE(fits.size() == 2);
    CHECK(fits[0]["slope"].get<double>() == doctest::Approx(0.5));
    CHECK(fits[1]["status"] == "insufficient points");

    std::stringstream broken("case,scheme\n");
    CHECK_THROWS_AS(fit_csv(broken), ConfigError);
}

TEST_CASE("exit codes") {
    std::ostringstream log;
    const std::string out = scratch("out").string();
    CHECK(run_command(write_config(small_config(), "ok.json"), out, {.timing = false}, log) == exit_pass);
    CHECK(std::filesystem::exists(scratch("out") / "l0_small.csv"));
    CHECK(std::filesystem::exists(scratch("out") / "l0_small.json"));

    json strict = small_config();
    strict["thresholds"]["min_rate"] = 5.0;
    CHECK(run_command(write_config(strict, "strict.json"), out, {}, log) == exit_threshold);

    json nested = small_config();
    nested["J"] = {8, 12};
    CHECK(run_command(write_config(nested, "nested.json"), out, {}, log) == exit_config);
    CHECK(run_command(scratch("missing.json").string(), out, {}, log) == exit_config);

    json coarse = small_config();
    coarse["case"] = "N1";
    coarse["scheme"] = 1;
    coarse["horizon"] = 2.0;
    coarse["J"] = {1, 2};
    log.str("");
    CHECK(run_command(write_config(coarse, "coarse.json"), out, {}, log) == exit_solver);
    CHECK(log.str().find("scheme 1") != std::string::npos);
}
