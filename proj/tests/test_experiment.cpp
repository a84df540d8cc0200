#include "lambdalab/experiment.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lambdalab;

namespace {

const char* kMinimal = R"(seed: 1
system:
  kind: shift
  window: [-6, 6]
profile:
  family: gumbel
  a: 1
experiments:
  - type: lyapunov
    max_t: 5
)";

std::string config_error_text(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const nlohmann::json* record_of(const nlohmann::json& report, const std::string& type) {
    for (const auto& r : report["experiments"]) {
        if (r["type"] == type) {
            return &r;
        }
    }
    return nullptr;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("minimal config is valid and gets defaults") {
    const ExperimentConfig cfg = parse_config(kMinimal);
    REQUIRE(cfg.experiments.size() == 1);
    CHECK(cfg.experiments[0].type == "lyapunov");
    CHECK(cfg.experiments[0].params["max_t"] == 5);
    CHECK(cfg.experiments[0].params["samples"] == 20);
    CHECK(cfg.experiments[0].gated);
    CHECK(cfg.output_dir == "out");
}

TEST_CASE("schema errors carry line numbers") {
    const std::string big = "system:\n  kind: baker\n  m: 12\nprofile: {family: gumbel}\nexperiments: []\n";
    const std::string err = config_error_text(big);
    CHECK(err.find("m exceeds desk-scale cap 6") != std::string::npos);
    CHECK(err.find("line 3") != std::string::npos);

    CHECK(config_error_text("system: {kind: shift, window: [-3, 3]}\nexperiments: []\n").find("profile required") !=
          std::string::npos);

    const std::string unknown = std::string(kMinimal) + "    colour: red\n";
    const std::string e2 = config_error_text(unknown);
    CHECK(e2.find("unknown key 'colour'") != std::string::npos);
    CHECK(e2.find("line 11") != std::string::npos);

    const std::string range = "system: {kind: shift, window: [-6, 6]}\nprofile: {family: gumbel}\n"
                              "experiments:\n  - type: lyapunov\n    max_t: 50\n";
    CHECK(config_error_text(range).find("out of range") != std::string::npos);

    const std::string needs_baker = "system: {kind: shift, window: [-6, 6]}\nprofile: {family: gumbel}\n"
                                    "experiments:\n  - type: positivity\n";
    CHECK(config_error_text(needs_baker).find("needs a baker system") != std::string::npos);

    CHECK(config_error_text("system: [1, 2\n").find("malformed YAML") != std::string::npos);
}

TEST_CASE("all issues are reported together") {
    const std::string text = "system: {kind: baker, m: 9}\nfoo: 1\nexperiments: []\n";
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.issues().size() == 3);
    }
}

TEST_CASE("demo bundle: contracts of the individual modules hold") {
    const ExperimentConfig cfg = parse_config(demo_config_text());
    const ReportBundle bundle = run_experiment(cfg);
    CHECK(bundle.records.size() == cfg.experiments.size());
    for (std::size_t i = 0; i < bundle.records.size(); ++i) {
        CHECK(bundle.records[i].index == i);
        CHECK(bundle.records[i].type == cfg.experiments[i].type);
    }
    const nlohmann::json j = bundle.to_json();
    CHECK(j["manifest"]["seed"] == cfg.seed);

    const auto* cov = record_of(j, "covariance");
    REQUIRE(cov);
    for (const auto& row : (*cov)["result"]["by_t"]) {
        CHECK(row["covariance_deviation"] == 0.0);
    }
    const auto* lyap = record_of(j, "lyapunov");
    REQUIRE(lyap);
    CHECK((*lyap)["result"]["monotone"] == true);

    const auto* thm = record_of(j, "theorem");
    REQUIRE(thm);
    CHECK((*thm)["result"]["reports"][0]["parts"].size() == 6);

    bool saw_logistic = false;
    for (const auto& r : j["experiments"]) {
        if (r["type"] == "admissibility" && r["result"]["profile"] == "logistic") {
            saw_logistic = true;
            CHECK(r["status"] == "fail");
            CHECK_FALSE(r["result"]["witness_s"].empty());
        }
    }
    CHECK(saw_logistic);
    CHECK(exit_status(bundle) == 0);
}

TEST_CASE("same config and seed give identical bytes") {
    const ExperimentConfig cfg = parse_config(demo_config_text());
    CHECK(run_experiment(cfg).to_json().dump() == run_experiment(cfg).to_json().dump());
}

TEST_CASE("empty experiment list gives a manifest-only bundle") {
    const ReportBundle b = run_experiment(
        parse_config("system: {kind: shift, window: [-3, 3]}\nprofile: {family: gumbel}\nexperiments: []\n"));
    CHECK(b.records.empty());
    CHECK(b.to_json()["manifest"].contains("config"));
    CHECK(exit_status(b) == 0);
}

TEST_CASE("failed and errored experiments decide the exit status only when gated") {
    const std::string base = "system: {kind: shift, window: [-6, 6]}\nprofile: {family: gumbel}\nexperiments:\n";
    const ReportBundle wrong = run_experiment(parse_config(
        base + "  - type: classify\n    spectrum: {family: power, alpha: 0.5}\n    expect: {nuclear: yes}\n"));
    CHECK(wrong.records[0].status == "fail");
    CHECK(exit_status(wrong) == 1);

    const ReportBundle err = run_experiment(
        parse_config(base + "  - type: kothe\n    spectrum: {family: list, values: [0.5, 0.9, 0.1]}\n"));
    CHECK(err.records[0].status == "error");
    CHECK(err.records[0].error.find("non-monotone spectrum") != std::string::npos);
    CHECK(exit_status(err) == 1);

    const ReportBundle ungated = run_experiment(parse_config(
        base + "  - type: admissibility\n    profile: {family: logistic}\n    gate: false\n"));
    CHECK(ungated.records[0].status == "fail");
    CHECK(exit_status(ungated) == 0);
}

TEST_CASE("emit_report writes manifest, report and trace CSVs") {
    const auto dir = std::filesystem::temp_directory_path() / "lambdalab_emit_test";
    std::filesystem::remove_all(dir);
    const ReportBundle b = run_experiment(parse_config(kMinimal));
    const auto written = emit_report(b, dir, ReportFormat::both);
    CHECK(written.size() == 3);
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    CHECK(std::filesystem::exists(dir / "report.json"));
    const std::string csv = slurp(dir / "lyapunov_0.csv");
    CHECK(csv.rfind("t,norm,lyapunov_form\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);

    const auto json_only = emit_report(b, dir / "j", ReportFormat::json);
    CHECK(json_only.size() == 2);
    std::filesystem::remove_all(dir);

    CHECK_THROWS_AS(emit_report(b, "/proc/lambdalab-not-writable", ReportFormat::json), Error);
    CHECK_THROWS_AS(report_format_from_string("xml"), PreconditionError);
}

TEST_CASE("csv quoting") {
    const TraceTable t{"x.csv", {"a", "b"}, {{"1,2", "say \"hi\""}}};
    CHECK(to_csv(t) == "a,b\n\"1,2\",\"say \"\"hi\"\"\"\n");
}

}  // TEST_SUITE
