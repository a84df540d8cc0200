#include "lambdalab/experiment.hpp"

#include "lambdalab/dual_ops.hpp"
#include "lambdalab/markov.hpp"
#include "lambdalab/rigging.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <random>

namespace lambdalab {

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::mt19937_64 derived_rng(std::uint64_t seed, std::size_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index)};
    return std::mt19937_64(seq);
}

std::string anchor_of(const std::string& type) {
    if (type == "covariance") return "time-operator covariance and imprimitivity";
    if (type == "admissibility") return "lambda admissibility conditions";
    if (type == "lyapunov") return "Lyapunov decay of the Markov semigroup";
    if (type == "positivity") return "positivity of evolved densities (exploratory)";
    if (type == "normalization") return "mass preservation of the bold-Lambda transform";
    if (type == "tower") return "sigma-Hilbertian norm towers and the J-isometry";
    if (type == "classify") return "singular-value classification of J";
    if (type == "kothe") return "Kothe sequence space nuclearity";
    if (type == "theorem") return "operator web of the Lambda-rigging";
    return type;
}

SingularSpectrum spectrum_from(const nlohmann::json& j) {
    const auto family = j.at("family").get<std::string>();
    if (family == "power") {
        return SingularSpectrum::power(j.at("alpha").get<double>(), j.at("terms").get<std::uint64_t>());
    }
    if (family == "geometric") {
        return SingularSpectrum::geometric(j.at("q").get<double>(), j.at("terms").get<std::uint64_t>());
    }
    return SingularSpectrum::from_list(j.at("values").get<std::vector<double>>());
}

LambdaProfile profile_from(const nlohmann::json& j) {
    const auto family = j.at("family").get<std::string>();
    if (family == "gumbel") {
        return LambdaProfile::gumbel(j.at("a").get<double>());
    }
    if (family == "logistic") {
        return LambdaProfile::logistic();
    }
    return LambdaProfile::custom(j.at("table").get<std::vector<std::pair<double, double>>>());
}

std::size_t chi_zero(const CascadeSystem& sys) {
    if (sys.kind() == CascadeKind::shift) {
        return sys.index_of_age(0);
    }
    return *sys.index_of_subset(std::set<int>{0});
}

bool run_covariance(const ExperimentSpec& spec, nlohmann::json& out) {
    const CascadeSystem sys = spec.system.build();
    const LambdaOperator lambda = build_lambda(spec.profile, sys);
    bool pass = true;
    nlohmann::json rows = nlohmann::json::array();
    for (int t : spec.params.at("t").get<std::vector<int>>()) {
        nlohmann::json row{{"t", t}};
        const double dev = verify_covariance(sys, t);
        const CovariantTransformReport ct = verify_covariant_transform(lambda, t);
        row["covariance_deviation"] = dev;
        row["lambda_deviation"] = ct.lambda_deviation;
        row["lambda_squared_deviation"] = ct.lambda_squared_deviation;
        pass = pass && dev == 0.0 && ct.lambda_deviation <= 1e-14 && ct.lambda_squared_deviation <= 1e-14;

        if (t >= 1 && sys.dim() <= 1024) {
            ImprimitivityReport worst;
            std::size_t sets = 0;
            const AgeWindow& w = sys.window();
            for (int a = w.lo; a <= w.hi; ++a) {
                for (int b = a; b <= w.hi; ++b) {
                    const std::set<int> delta = a == b ? std::set<int>{a} : std::set<int>{a, b};
                    const ImprimitivityReport r = verify_imprimitivity(sys, delta, t);
                    worst.pushforward_deviation = std::max(worst.pushforward_deviation, r.pushforward_deviation);
                    worst.pullback_deviation = std::max(worst.pullback_deviation, r.pullback_deviation);
                    worst.literal_minus_deviation = std::max(worst.literal_minus_deviation, r.literal_minus_deviation);
                    worst.literal_plus_deviation = std::max(worst.literal_plus_deviation, r.literal_plus_deviation);
                    ++sets;
                }
            }
            row["imprimitivity"] = {{"sets_checked", sets},
                                    {"pushforward_deviation", worst.pushforward_deviation},
                                    {"pullback_deviation", worst.pullback_deviation},
                                    {"literal_minus_deviation", worst.literal_minus_deviation},
                                    {"literal_plus_deviation", worst.literal_plus_deviation}};
            pass = pass && worst.pushforward_deviation == 0.0 && worst.pullback_deviation == 0.0;
        } else if (t >= 1) {
            row["imprimitivity"] = {{"skipped", "dense check limited to dim <= 1024"}};
        }
        rows.push_back(std::move(row));
    }
    out["system"] = spec.system.to_json();
    out["dim"] = sys.dim();
    out["by_t"] = std::move(rows);
    return pass;
}

bool run_admissibility(const ExperimentSpec& spec, nlohmann::json& out) {
    const auto grid = spec.params.at("grid").get<std::vector<int>>();
    const AdmissibilityCertificate cert =
        check_admissible(spec.profile, grid[0], grid[1], spec.params.at("t_set").get<std::vector<int>>());
    out["certificate"] = cert.to_json();
    std::vector<int> witness_s;
    for (const auto& w : cert.witnesses) {
        witness_s.push_back(w.s);
    }
    out["witness_s"] = witness_s;
    out["admissible"] = cert.admissible();
    return cert.admissible();
}

bool run_lyapunov(const ExperimentSpec& spec, std::size_t index, std::mt19937_64& rng, nlohmann::json& out,
                  std::vector<TraceTable>& traces) {
    const CascadeSystem sys = spec.system.build();
    const int max_t = spec.params.at("max_t").get<int>();
    const MarkovEvolution ev(build_lambda(spec.profile, sys), max_t);

    const std::size_t e0 = chi_zero(sys);
    const LyapunovTrace tr = lyapunov_trace(ev, sys.basis_vector(e0), max_t);
    out["reference_vector"] = sys.label_name(e0);
    out["reference"] = {{"t", tr.t_values},
                        {"norm", tr.norms},
                        {"lyapunov_form", tr.lyapunov_form},
                        {"monotone", tr.monotone},
                        {"ratio_to_zero", tr.ratio_to_zero},
                        {"max_form_deviation", tr.max_form_deviation}};
    if (!tr.min_cells.empty()) {
        out["reference"]["min_cell"] = tr.min_cells;
    }

    bool monotone = tr.monotone;
    bool agree = tr.forms_agree;
    double worst_ratio = tr.ratio_to_zero;
    double worst_form = tr.max_form_deviation;
    const int samples = spec.params.at("samples").get<int>();
    for (int s = 0; s < samples; ++s) {
        const LyapunovTrace r = lyapunov_trace(ev, random_interior_vector(sys, max_t, rng), max_t);
        monotone = monotone && r.monotone;
        agree = agree && r.forms_agree;
        worst_ratio = std::max(worst_ratio, r.ratio_to_zero);
        worst_form = std::max(worst_form, r.max_form_deviation);
    }
    out["samples"] = samples;
    out["monotone"] = monotone;
    out["forms_agree"] = agree;
    out["worst_ratio_to_zero"] = worst_ratio;
    out["max_form_deviation"] = worst_form;

    bool pass = monotone && agree;
    const auto& max_ratio = spec.params.at("max_ratio");
    if (!max_ratio.is_null()) {
        out["ratio_ok"] = worst_ratio <= max_ratio.get<double>();
        pass = pass && worst_ratio <= max_ratio.get<double>();
    }

    TraceTable table{"lyapunov_" + std::to_string(index) + ".csv", {"t", "norm", "lyapunov_form"}, {}};
    for (std::size_t i = 0; i < tr.t_values.size(); ++i) {
        table.rows.push_back({std::to_string(tr.t_values[i]), fmt(tr.norms[i]), fmt(tr.lyapunov_form[i])});
    }
    traces.push_back(std::move(table));
    return pass;
}

bool run_positivity(const ExperimentSpec& spec, std::size_t index, nlohmann::json& out,
                    std::vector<TraceTable>& traces) {
    const CascadeSystem sys = spec.system.build();
    const auto ts = spec.params.at("t").get<std::vector<int>>();
    const double c = spec.params.at("coefficient").get<double>();
    std::vector<LambdaProfile> profiles;
    for (const auto& p : spec.params.at("profiles")) {
        profiles.push_back(profile_from(p));
    }
    if (profiles.empty()) {
        profiles.push_back(spec.profile);
    }
    const std::size_t e0 = chi_zero(sys);
    const GridDensity rho = walsh_to_grid(sys, BlockVector{1.0, sys.basis_vector(e0) * c});
    const int max_t = *std::max_element(ts.begin(), ts.end());

    TraceTable table{"positivity_" + std::to_string(index) + ".csv", {"profile", "t", "min_cell"}, {}};
    nlohmann::json probes = nlohmann::json::array();
    bool pass = true;
    for (const auto& prof : profiles) {
        try {
            const MarkovEvolution ev(build_lambda(prof, sys), max_t);
            for (int t : ts) {
                const PositivityReport r = positivity_probe(ev, rho, t);
                // 1 + c chi_{0} evolves to 1 + c (lambda(t)/lambda(0)) chi_{t}
                const double expected = 1.0 - std::abs(c) * std::exp(prof.log_value(t) - prof.log_value(0));
                const double gap = std::abs(r.min_cell - expected);
                pass = pass && gap <= 1e-12;
                probes.push_back({{"profile", prof.name()},
                                  {"t", t},
                                  {"input_min", r.input_min},
                                  {"min_cell", r.min_cell},
                                  {"pointwise_min_cell", expected},
                                  {"negative", r.negative}});
                table.rows.push_back({prof.name(), std::to_string(t), fmt(r.min_cell)});
            }
        } catch (const Error& e) {
            probes.push_back({{"profile", prof.name()}, {"skipped", e.what()}});
        }
    }
    out["density"] = "1 + " + fmt(c) + " * " + sys.label_name(e0);
    out["probes"] = std::move(probes);
    traces.push_back(std::move(table));
    return pass;
}

bool run_normalization(const ExperimentSpec& spec, std::mt19937_64& rng, nlohmann::json& out) {
    const CascadeSystem sys = spec.system.build();
    const LambdaOperator lambda = build_lambda(spec.profile, sys);
    const int m = sys.m();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<GridDensity> grids;
    const int samples = spec.params.at("samples").get<int>();
    for (int s = 0; s < samples; ++s) {
        GridDensity g{m + 1, m, std::vector<double>(std::size_t{1} << (2 * m + 1))};
        for (double& v : g.values) {
            v = unif(rng);
        }
        const double mean = g.mean();
        for (double& v : g.values) {
            v /= mean;
        }
        grids.push_back(std::move(g));
    }
    const NormalizationReport r = verify_normalization(lambda, grids);
    out["samples"] = r.samples;
    out["max_mass_deviation"] = r.max_mass_deviation;
    out["max_fluctuation_mass"] = r.max_fluctuation_mass;
    return r.max_mass_deviation <= 1e-12;
}

bool run_tower(const ExperimentSpec& spec, std::mt19937_64& rng, nlohmann::json& out) {
    const CascadeSystem sys = spec.system.build();
    const LambdaOperator lambda = build_lambda(spec.profile, sys);
    const NormTower tower =
        build_tower(lambda.log_diag(), sys.basis_id(), tower_type_from_string(spec.params.at("tower").get<std::string>()),
                    spec.params.at("cutoff").get<int>(), rng, spec.params.at("samples").get<std::size_t>());
    const double iso =
        isometry_check(lambda.log_diag(), sys.basis_id(), spec.params.at("isometry_samples").get<std::size_t>(), rng);
    out["j"] = "lambda(T) of " + spec.profile.name();
    out["tower"] = tower.to_json();
    out["isometry_deviation"] = iso;
    return tower.monotone_on_samples && iso <= 1e-10;
}

bool run_classify(const ExperimentSpec& spec, nlohmann::json& out) {
    const OperatorClassReport r = classify(spectrum_from(spec.params.at("spectrum")), spec.params.at("max_power").get<int>());
    out["report"] = r.to_json();
    bool pass = true;
    nlohmann::json mismatches = nlohmann::json::array();
    for (const auto& [key, want] : spec.params.at("expect").items()) {
        const Verdict got = key == "compact" ? r.compact : key == "nuclear" ? r.nuclear : r.hilbert_schmidt;
        if (to_string(got) != want.get<std::string>()) {
            pass = false;
            mismatches.push_back({{"property", key}, {"expected", want}, {"got", to_string(got)}});
        }
    }
    out["expectation_mismatches"] = std::move(mismatches);
    return pass;
}

bool run_kothe(const ExperimentSpec& spec, nlohmann::json& out) {
    const KotheReport r = kothe_nuclearity(spectrum_from(spec.params.at("spectrum")),
                                           Rational::parse(spec.params.at("n1").get<std::string>()),
                                           Rational::parse(spec.params.at("n2").get<std::string>()));
    out["report"] = r.to_json();
    const auto& want = spec.params.at("expect_nuclear");
    return want.is_null() || to_string(r.nuclear) == want.get<std::string>();
}

bool run_theorem(const ExperimentSpec& spec, std::mt19937_64& rng, nlohmann::json& out) {
    const CascadeSystem sys = spec.system.build();
    const LambdaOperator lambda = build_lambda(spec.profile, sys);
    const auto samples = spec.params.at("samples").get<std::size_t>();
    bool pass = true;
    nlohmann::json reports = nlohmann::json::array();
    for (int t : spec.params.at("t").get<std::vector<int>>()) {
        const OperatorWeb web = build_web(lambda, t);
        const TheoremReport rep = verify_theorem(web, samples, rng);
        nlohmann::json j = rep.to_json();
        const double pairing = antitranspose_pairing_deviation(lambda.matrix(), web.lambda_x, samples, rng);
        const double riesz_iso = riesz_isometry_deviation(web.riesz, samples, rng);
        const double riesz_min = riesz_min_quadratic_form(web.riesz, sys.basis_id(), samples, rng);
        j["web_checks"] = {{"antitranspose_pairing_deviation", pairing},
                           {"riesz_sqrt_recovery_deviation", web.riesz.sqrt_recovery_deviation},
                           {"riesz_isometry_deviation", riesz_iso},
                           {"riesz_min_quadratic_form", riesz_min}};
        pass = pass && rep.all_pass() && pairing <= 1e-12 && riesz_iso <= 1e-10 && riesz_min >= 0.0;
        reports.push_back(std::move(j));
    }
    out["reports"] = std::move(reports);
    return pass;
}

}  // namespace

ExperimentRecord run_single(const ExperimentSpec& spec, std::size_t index, std::uint64_t seed,
                            std::vector<TraceTable>& traces) {
    ExperimentRecord rec;
    rec.index = index;
    rec.type = spec.type;
    rec.anchor = anchor_of(spec.type);
    rec.gated = spec.gated;
    rec.result = {{"profile", spec.profile.name()}, {"system", spec.system.to_json()}, {"params", spec.params}};
    std::mt19937_64 rng = derived_rng(seed, index);
    std::vector<TraceTable> local;
    try {
        bool pass = false;
        nlohmann::json& out = rec.result;
        const std::string& t = spec.type;
        if (t == "covariance") {
            pass = run_covariance(spec, out);
        } else if (t == "admissibility") {
            pass = run_admissibility(spec, out);
        } else if (t == "lyapunov") {
            pass = run_lyapunov(spec, index, rng, out, local);
        } else if (t == "positivity") {
            pass = run_positivity(spec, index, out, local);
        } else if (t == "normalization") {
            pass = run_normalization(spec, rng, out);
        } else if (t == "tower") {
            pass = run_tower(spec, rng, out);
        } else if (t == "classify") {
            pass = run_classify(spec, out);
        } else if (t == "kothe") {
            pass = run_kothe(spec, out);
        } else if (t == "theorem") {
            pass = run_theorem(spec, rng, out);
        } else {
            throw PreconditionError("unknown experiment type '" + t + "'");
        }
        rec.status = pass ? "pass" : "fail";
        traces.insert(traces.end(), std::make_move_iterator(local.begin()), std::make_move_iterator(local.end()));
    } catch (const std::exception& e) {
        rec.status = "error";
        rec.error = e.what();
    }
    return rec;
}

ReportBundle run_experiment(const ExperimentConfig& config) {
    ReportBundle bundle;
    bundle.manifest = {
        {"tool", "lambdalab"},
        {"version", kToolVersion},
        {"seed", config.seed},
        {"libraries",
         {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
        {"config", config.to_json()},
        {"experiment_count", config.experiments.size()}};

    struct Outcome {
        ExperimentRecord record;
        std::vector<TraceTable> traces;
    };
    std::vector<std::future<Outcome>> jobs;
    for (std::size_t i = 0; i < config.experiments.size(); ++i) {
        jobs.push_back(std::async(std::launch::async, [&config, i] {
            Outcome o;
            o.record = run_single(config.experiments[i], i, config.seed, o.traces);
            return o;
        }));
    }
    for (auto& job : jobs) {
        Outcome o = job.get();
        bundle.records.push_back(std::move(o.record));
        for (auto& t : o.traces) {
            bundle.traces.push_back(std::move(t));
        }
    }
    return bundle;
}

}  // namespace lambdalab
