#include "lambdalab/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

namespace lambdalab {

namespace {

constexpr int kMaxShiftWidth = 4096;

class Collector {
public:
    void add(const YAML::Node& at, std::string message) {
        const int line = at.IsDefined() && at.Mark().line >= 0 ? at.Mark().line + 1 : 0;
        issues.push_back({line, std::move(message)});
    }
    void add(int line, std::string message) { issues.push_back({line, std::move(message)}); }

    std::vector<ConfigIssue> issues;
};

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

void check_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where,
                Collector& errs) {
    for (auto it = map.begin(); it != map.end(); ++it) {
        const auto key = it->first.as<std::string>();
        if (allowed.count(key) == 0) {
            errs.add(it->first, "unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
std::optional<T> scalar(const YAML::Node& n, const std::string& what, Collector& errs) {
    if (!n.IsScalar()) {
        errs.add(n, what + " must be a scalar");
        return std::nullopt;
    }
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        errs.add(n, what + " has the wrong type ('" + n.Scalar() + "')");
        return std::nullopt;
    }
}

std::optional<int> int_in(const YAML::Node& n, const std::string& what, long lo, long hi, Collector& errs) {
    const auto v = scalar<long>(n, what, errs);
    if (!v) {
        return std::nullopt;
    }
    if (*v < lo || *v > hi) {
        errs.add(n, what + " = " + std::to_string(*v) + " is out of range [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
        return std::nullopt;
    }
    return static_cast<int>(*v);
}

std::optional<std::vector<int>> int_list(const YAML::Node& n, const std::string& what, long lo, long hi,
                                         Collector& errs) {
    if (n.IsScalar()) {
        const auto v = int_in(n, what, lo, hi, errs);
        return v ? std::optional<std::vector<int>>(std::vector<int>{*v}) : std::nullopt;
    }
    if (!n.IsSequence() || n.size() == 0) {
        errs.add(n, what + " must be a nonempty list of integers");
        return std::nullopt;
    }
    std::vector<int> out;
    bool ok = true;
    for (const auto& item : n) {
        const auto v = int_in(item, what, lo, hi, errs);
        ok = ok && v.has_value();
        if (v) {
            out.push_back(*v);
        }
    }
    return ok ? std::optional<std::vector<int>>(out) : std::nullopt;
}

std::optional<SystemSpec> parse_system(const YAML::Node& n, Collector& errs) {
    if (!n.IsMap()) {
        errs.add(n, "system must be a mapping");
        return std::nullopt;
    }
    check_keys(n, {"kind", "window", "m"}, "system", errs);
    if (!n["kind"]) {
        errs.add(n, "system.kind required");
        return std::nullopt;
    }
    const auto kind = scalar<std::string>(n["kind"], "system.kind", errs);
    if (!kind) {
        return std::nullopt;
    }
    SystemSpec spec;
    if (*kind == "shift") {
        spec.kind = CascadeKind::shift;
        if (n["m"]) {
            errs.add(n["m"], "system.m applies to baker systems only");
        }
        const YAML::Node w = n["window"];
        if (!w) {
            errs.add(n, "system.window required for shift");
            return std::nullopt;
        }
        if (!w.IsSequence() || w.size() != 2) {
            errs.add(w, "system.window must be [lo, hi]");
            return std::nullopt;
        }
        const auto lo = int_in(w[0], "system.window.lo", -kMaxShiftWidth, 0, errs);
        const auto hi = int_in(w[1], "system.window.hi", 0, kMaxShiftWidth, errs);
        if (!lo || !hi) {
            return std::nullopt;
        }
        spec.window = AgeWindow{*lo, *hi};
        try {
            spec.window.validate();
        } catch (const Error& e) {
            errs.add(w, std::string("system.window: ") + e.what());
            return std::nullopt;
        }
        if (spec.window.size() > kMaxShiftWidth) {
            errs.add(w, "window exceeds desk-scale cap " + std::to_string(kMaxShiftWidth) + " ages");
            return std::nullopt;
        }
    } else if (*kind == "baker") {
        spec.kind = CascadeKind::baker;
        if (n["window"]) {
            errs.add(n["window"], "system.window applies to shift systems only; baker uses m");
        }
        if (!n["m"]) {
            errs.add(n, "system.m required for baker");
            return std::nullopt;
        }
        const auto m = scalar<long>(n["m"], "system.m", errs);
        if (!m) {
            return std::nullopt;
        }
        if (*m > CascadeSystem::kMaxBakerM) {
            errs.add(n["m"], "m exceeds desk-scale cap " + std::to_string(CascadeSystem::kMaxBakerM));
            return std::nullopt;
        }
        if (*m < 1) {
            errs.add(n["m"], "m must be >= 1");
            return std::nullopt;
        }
        spec.m = static_cast<int>(*m);
        spec.window = AgeWindow{-spec.m, spec.m};
    } else {
        errs.add(n["kind"], "system.kind must be 'shift' or 'baker', got '" + *kind + "'");
        return std::nullopt;
    }
    return spec;
}

std::optional<LambdaProfile> parse_profile(const YAML::Node& n, const std::string& where, Collector& errs) {
    if (!n.IsMap()) {
        errs.add(n, where + " must be a mapping");
        return std::nullopt;
    }
    check_keys(n, {"family", "a", "table"}, where, errs);
    if (!n["family"]) {
        errs.add(n, where + ".family required");
        return std::nullopt;
    }
    const auto family = scalar<std::string>(n["family"], where + ".family", errs);
    if (!family) {
        return std::nullopt;
    }
    try {
        if (*family == "gumbel") {
            double a = 1.0;
            if (n["a"]) {
                const auto v = scalar<double>(n["a"], where + ".a", errs);
                if (!v) {
                    return std::nullopt;
                }
                a = *v;
            }
            return LambdaProfile::gumbel(a);
        }
        if (*family == "logistic") {
            if (n["a"] || n["table"]) {
                errs.add(n, where + ": logistic takes no parameters");
            }
            return LambdaProfile::logistic();
        }
        if (*family == "custom") {
            const YAML::Node t = n["table"];
            if (!t || !t.IsSequence() || t.size() < 2) {
                errs.add(n, where + ".table must list at least two [s, lambda] pairs");
                return std::nullopt;
            }
            std::vector<std::pair<double, double>> table;
            for (const auto& row : t) {
                if (!row.IsSequence() || row.size() != 2) {
                    errs.add(row, where + ".table rows must be [s, lambda]");
                    return std::nullopt;
                }
                const auto s = scalar<double>(row[0], where + ".table.s", errs);
                const auto v = scalar<double>(row[1], where + ".table.lambda", errs);
                if (!s || !v) {
                    return std::nullopt;
                }
                table.emplace_back(*s, *v);
            }
            return LambdaProfile::custom(std::move(table));
        }
    } catch (const Error& e) {
        errs.add(n, where + ": " + e.what());
        return std::nullopt;
    }
    errs.add(n["family"], where + ".family must be gumbel, logistic or custom, got '" + *family + "'");
    return std::nullopt;
}

std::optional<nlohmann::json> parse_spectrum(const YAML::Node& n, Collector& errs) {
    if (!n.IsMap()) {
        errs.add(n, "spectrum must be a mapping");
        return std::nullopt;
    }
    check_keys(n, {"family", "alpha", "q", "terms", "values"}, "spectrum", errs);
    const auto family = n["family"] ? scalar<std::string>(n["family"], "spectrum.family", errs) : std::nullopt;
    if (!family) {
        errs.add(n, "spectrum.family required (power, geometric or list)");
        return std::nullopt;
    }
    nlohmann::json out{{"family", *family}};
    auto terms = [&](long def) -> std::optional<long> {
        if (!n["terms"]) {
            return def;
        }
        const auto v = int_in(n["terms"], "spectrum.terms", 1, 100000000, errs);
        return v ? std::optional<long>(*v) : std::nullopt;
    };
    if (*family == "power") {
        const auto alpha = n["alpha"] ? scalar<double>(n["alpha"], "spectrum.alpha", errs) : std::nullopt;
        if (!alpha || !(*alpha > 0.0)) {
            errs.add(n, "spectrum.alpha must be a positive number");
            return std::nullopt;
        }
        const auto k = terms(1000000);
        if (!k) {
            return std::nullopt;
        }
        out["alpha"] = *alpha;
        out["terms"] = *k;
    } else if (*family == "geometric") {
        const auto q = n["q"] ? scalar<double>(n["q"], "spectrum.q", errs) : std::nullopt;
        if (!q || !(*q > 0.0 && *q < 1.0)) {
            errs.add(n, "spectrum.q must lie in (0, 1)");
            return std::nullopt;
        }
        const auto k = terms(200);
        if (!k) {
            return std::nullopt;
        }
        out["q"] = *q;
        out["terms"] = *k;
    } else if (*family == "list") {
        const YAML::Node v = n["values"];
        if (!v || !v.IsSequence() || v.size() == 0) {
            errs.add(n, "spectrum.values must be a nonempty list");
            return std::nullopt;
        }
        std::vector<double> values;
        for (const auto& x : v) {
            const auto d = scalar<double>(x, "spectrum.values", errs);
            if (!d) {
                return std::nullopt;
            }
            values.push_back(*d);
        }
        out["values"] = values;
    } else {
        errs.add(n["family"], "spectrum.family must be power, geometric or list, got '" + *family + "'");
        return std::nullopt;
    }
    return out;
}

std::optional<std::string> parse_rational(const YAML::Node& n, const std::string& what, Collector& errs) {
    const auto text = scalar<std::string>(n, what, errs);
    if (!text) {
        return std::nullopt;
    }
    try {
        return Rational::parse(*text).str();
    } catch (const Error& e) {
        errs.add(n, what + ": " + e.what());
        return std::nullopt;
    }
}

bool parse_verdict(const YAML::Node& n, const std::string& what, nlohmann::json& into, Collector& errs) {
    const auto v = scalar<std::string>(n, what, errs);
    if (!v) {
        return false;
    }
    if (*v != "yes" && *v != "no" && *v != "inconclusive") {
        errs.add(n, what + " must be yes, no or inconclusive");
        return false;
    }
    into = *v;
    return true;
}

const std::set<std::string> kCommonKeys = {"type", "gate", "system", "profile"};

std::set<std::string> keys_for(const std::string& type) {
    std::set<std::string> k = kCommonKeys;
    if (type == "covariance") {
        k.insert("t");
    } else if (type == "admissibility") {
        k.insert({"grid", "t_set"});
    } else if (type == "lyapunov") {
        k.insert({"max_t", "samples", "max_ratio"});
    } else if (type == "positivity") {
        k.insert({"t", "coefficient", "profiles"});
    } else if (type == "tower") {
        k.insert({"tower", "cutoff", "samples", "isometry_samples"});
    } else if (type == "classify") {
        k.insert({"spectrum", "max_power", "expect"});
    } else if (type == "kothe") {
        k.insert({"spectrum", "n1", "n2", "expect_nuclear"});
    } else if (type == "theorem") {
        k.insert({"t", "samples"});
    } else if (type == "normalization") {
        k.insert({"samples"});
    }
    return k;
}

std::optional<ExperimentSpec> parse_experiment(const YAML::Node& n, const ExperimentConfig& base, Collector& errs) {
    if (!n.IsMap()) {
        errs.add(n, "each experiment must be a mapping");
        return std::nullopt;
    }
    if (!n["type"]) {
        errs.add(n, "experiment type required");
        return std::nullopt;
    }
    const auto type = scalar<std::string>(n["type"], "experiment type", errs);
    if (!type) {
        return std::nullopt;
    }
    if (std::find(kExperimentTypes.begin(), kExperimentTypes.end(), *type) == kExperimentTypes.end()) {
        errs.add(n["type"], "unknown experiment type '" + *type + "'");
        return std::nullopt;
    }
    const std::size_t before = errs.issues.size();
    check_keys(n, keys_for(*type), *type + " experiment", errs);

    ExperimentSpec spec;
    spec.type = *type;
    spec.line = line_of(n);
    spec.system = base.system;
    spec.profile = base.profile;
    spec.gated = *type != "positivity";
    if (n["gate"]) {
        if (const auto g = scalar<bool>(n["gate"], "gate", errs)) {
            spec.gated = *g;
        }
    }
    if (n["system"]) {
        if (auto s = parse_system(n["system"], errs)) {
            spec.system = *s;
        }
    }
    if (n["profile"]) {
        if (auto p = parse_profile(n["profile"], *type + ".profile", errs)) {
            spec.profile = *p;
        }
    }
    const AgeWindow w = spec.system.window;
    const int span = w.hi - w.lo;
    const bool baker = spec.system.kind == CascadeKind::baker;
    nlohmann::json& p = spec.params;
    p = nlohmann::json::object();

    auto int_param = [&](const char* key, int def, long lo, long hi) {
        if (!n[key]) {
            p[key] = def;
        } else if (const auto v = int_in(n[key], key, lo, hi, errs)) {
            p[key] = *v;
        }
    };
    auto list_param = [&](const char* key, std::vector<int> def, long lo, long hi) {
        if (!n[key]) {
            p[key] = def;
        } else if (const auto v = int_list(n[key], key, lo, hi, errs)) {
            p[key] = *v;
        }
    };
    auto need_baker = [&]() {
        if (!baker) {
            errs.add(n, *type + " experiment needs a baker system");
        }
    };

    if (*type == "covariance") {
        list_param("t", {0, 1, 2, 3}, 0, span);
    } else if (*type == "admissibility") {
        if (!n["grid"]) {
            p["grid"] = {-20, 20};
        } else if (!n["grid"].IsSequence() || n["grid"].size() != 2) {
            errs.add(n["grid"], "grid must be [lo, hi]");
        } else {
            const auto lo = int_in(n["grid"][0], "grid.lo", -100000, -20, errs);
            const auto hi = int_in(n["grid"][1], "grid.hi", 20, 100000, errs);
            if (lo && hi) {
                p["grid"] = {*lo, *hi};
            }
        }
        list_param("t_set", {1, 2, 3}, 0, 1000);
    } else if (*type == "lyapunov") {
        int_param("max_t", std::min(5, span / 2), 0, span / 2);
        int_param("samples", 20, 0, 10000);
        p["max_ratio"] = nullptr;
        if (n["max_ratio"]) {
            const auto r = scalar<double>(n["max_ratio"], "max_ratio", errs);
            if (r && !(*r > 0.0)) {
                errs.add(n["max_ratio"], "max_ratio must be positive");
            } else if (r) {
                p["max_ratio"] = *r;
            }
        }
    } else if (*type == "positivity") {
        need_baker();
        // the probe density sits at age 0, so t may not carry it past hi
        list_param("t", {1}, 0, w.hi);
        p["coefficient"] = 1.0;
        if (n["coefficient"]) {
            if (const auto c = scalar<double>(n["coefficient"], "coefficient", errs)) {
                p["coefficient"] = *c;
            }
        }
        p["profiles"] = nlohmann::json::array();
        if (n["profiles"]) {
            if (!n["profiles"].IsSequence()) {
                errs.add(n["profiles"], "profiles must be a list of profile declarations");
            } else {
                for (const auto& item : n["profiles"]) {
                    if (auto prof = parse_profile(item, "positivity.profiles", errs)) {
                        p["profiles"].push_back(prof->to_json());
                    }
                }
            }
        }
    } else if (*type == "tower") {
        p["tower"] = "B";
        if (n["tower"]) {
            const auto t = scalar<std::string>(n["tower"], "tower", errs);
            if (t && *t != "A" && *t != "B" && *t != "C") {
                errs.add(n["tower"], "tower must be A, B or C");
            } else if (t) {
                p["tower"] = *t;
            }
        }
        int_param("cutoff", 8, 1, 1000);
        int_param("samples", 32, 1, 10000);
        int_param("isometry_samples", 100, 1, 100000);
    } else if (*type == "classify" || *type == "kothe") {
        if (!n["spectrum"]) {
            errs.add(n, "spectrum required");
        } else if (auto s = parse_spectrum(n["spectrum"], errs)) {
            p["spectrum"] = *s;
        }
        if (*type == "classify") {
            int_param("max_power", 8, 1, 64);
            p["expect"] = nlohmann::json::object();
            if (n["expect"]) {
                const YAML::Node e = n["expect"];
                if (!e.IsMap()) {
                    errs.add(e, "expect must be a mapping");
                } else {
                    check_keys(e, {"compact", "hilbert_schmidt", "nuclear"}, "expect", errs);
                    for (auto it = e.begin(); it != e.end(); ++it) {
                        nlohmann::json v;
                        if (parse_verdict(it->second, "expect", v, errs)) {
                            p["expect"][it->first.as<std::string>()] = v;
                        }
                    }
                }
            }
        } else {
            p["n1"] = "0";
            p["n2"] = "1/2";
            if (n["n1"]) {
                if (auto r = parse_rational(n["n1"], "n1", errs)) {
                    p["n1"] = *r;
                }
            }
            if (n["n2"]) {
                if (auto r = parse_rational(n["n2"], "n2", errs)) {
                    p["n2"] = *r;
                }
            }
            if (errs.issues.size() == before) {
                const Rational a = Rational::parse(p["n1"].get<std::string>());
                const Rational b = Rational::parse(p["n2"].get<std::string>());
                if (!(Rational(0) <= a && a < b && b < Rational(1))) {
                    errs.add(n, "kothe grades must satisfy 0 <= n1 < n2 < 1");
                }
            }
            p["expect_nuclear"] = nullptr;
            if (n["expect_nuclear"]) {
                nlohmann::json v;
                if (parse_verdict(n["expect_nuclear"], "expect_nuclear", v, errs)) {
                    p["expect_nuclear"] = v;
                }
            }
        }
    } else if (*type == "theorem") {
        list_param("t", {1, 2}, 1, std::max(1, span - 1));
        int_param("samples", 16, 1, 10000);
    } else if (*type == "normalization") {
        need_baker();
        int_param("samples", 50, 1, 100000);
    }
    if (errs.issues.size() != before) {
        return std::nullopt;
    }
    return spec;
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : Error([&] {
          std::ostringstream os;
          os << "invalid config:";
          for (const auto& i : issues) {
              os << "\n  line " << i.line << ": " << i.message;
          }
          return os.str();
      }()),
      issues_(std::move(issues)) {}

CascadeSystem SystemSpec::build() const {
    return kind == CascadeKind::shift ? build_shift_cascade(window) : build_baker_cascade(m);
}

nlohmann::json SystemSpec::to_json() const {
    if (kind == CascadeKind::shift) {
        return {{"kind", "shift"}, {"window", {window.lo, window.hi}}};
    }
    return {{"kind", "baker"}, {"m", m}};
}

nlohmann::json ExperimentSpec::to_json() const {
    return {{"type", type},
            {"gate", gated},
            {"system", system.to_json()},
            {"profile", profile.to_json()},
            {"params", params}};
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json ex = nlohmann::json::array();
    for (const auto& e : experiments) {
        ex.push_back(e.to_json());
    }
    return {{"seed", seed},
            {"output_dir", output_dir},
            {"system", system.to_json()},
            {"profile", profile.to_json()},
            {"experiments", std::move(ex)}};
}

ExperimentConfig parse_config(const std::string& text) {
    Collector errs;
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError({{e.mark.line + 1, "malformed YAML: " + e.msg}});
    }
    if (!root.IsMap()) {
        throw ConfigError({{1, "config must be a mapping"}});
    }
    check_keys(root, {"seed", "output_dir", "system", "profile", "experiments"}, "config", errs);

    ExperimentConfig cfg;
    if (root["seed"]) {
        if (const auto s = scalar<std::uint64_t>(root["seed"], "seed", errs)) {
            cfg.seed = *s;
        }
    }
    if (root["output_dir"]) {
        if (const auto o = scalar<std::string>(root["output_dir"], "output_dir", errs)) {
            cfg.output_dir = *o;
        }
    }
    bool have_system = false;
    bool have_profile = false;
    if (!root["system"]) {
        errs.add(1, "system required");
    } else if (auto s = parse_system(root["system"], errs)) {
        cfg.system = *s;
        have_system = true;
    }
    if (!root["profile"]) {
        errs.add(1, "profile required");
    } else if (auto p = parse_profile(root["profile"], "profile", errs)) {
        cfg.profile = *p;
        have_profile = true;
    }
    const YAML::Node ex = root["experiments"];
    if (!ex) {
        errs.add(1, "experiments required (may be an empty list)");
    } else if (!ex.IsSequence()) {
        errs.add(ex, "experiments must be a list");
    } else if (have_system && have_profile) {
        for (const auto& item : ex) {
            if (auto spec = parse_experiment(item, cfg, errs)) {
                cfg.experiments.push_back(std::move(*spec));
            }
        }
    }
    if (!errs.issues.empty()) {
        std::stable_sort(errs.issues.begin(), errs.issues.end(),
                         [](const ConfigIssue& a, const ConfigIssue& b) { return a.line < b.line; });
        throw ConfigError(std::move(errs.issues));
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read config file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

const std::string& demo_config_text() {
    static const std::string text = R"(seed: 20240917
output_dir: out/demo
system:
  kind: shift
  window: [-6, 6]
profile:
  family: gumbel
  a: 1
experiments:
  - type: covariance
    t: [0, 1, 2, 3]
  - type: covariance
    system: {kind: baker, m: 3}
    t: [0, 1, 2, 3]
  - type: admissibility
  - type: admissibility
    profile: {family: logistic}
    gate: false
  - type: lyapunov
    system: {kind: shift, window: [-10, 10]}
    max_t: 6
    samples: 20
    max_ratio: 1.0e-3
  - type: positivity
    system: {kind: baker, m: 2}
    t: [1, 2]
    profiles:
      - {family: gumbel, a: 1}
      - {family: gumbel, a: 1.5}
      - {family: gumbel, a: 2}
      - {family: logistic}
  - type: normalization
    system: {kind: baker, m: 2}
    samples: 50
  - type: tower
    tower: B
    cutoff: 8
  - type: classify
    spectrum: {family: power, alpha: 0.5}
    expect: {compact: yes, hilbert_schmidt: no, nuclear: no}
  - type: kothe
    spectrum: {family: geometric, q: 0.5}
    n1: 0
    n2: 1/2
    expect_nuclear: yes
  - type: kothe
    spectrum: {family: power, alpha: 0.5}
    n1: 0
    n2: 1/2
    expect_nuclear: no
  - type: theorem
    t: [1, 2]
)";
    return text;
}

}  // namespace lambdalab
