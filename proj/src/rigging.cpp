#include "lambdalab/rigging.hpp"

#include "lambdalab/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <sstream>

namespace lambdalab {

// ------------------------------------------------------------ graded norms

HVector inverse_power_apply(const HVector& v, const Rational& n, const LogDiagonal& j, double log_cap) {
    if (static_cast<std::size_t>(v.dim()) != j.size()) {
        throw DimensionError("vector and J have different dimensions");
    }
    if (n < Rational(0)) {
        throw PreconditionError("grade must be non-negative");
    }
    const double nn = n.value();
    Eigen::VectorXd out(v.dim());
    for (Eigen::Index k = 0; k < v.dim(); ++k) {
        const double x = v[k];
        if (x == 0.0) {
            out[k] = 0.0;
            continue;
        }
        const double log_weight = -nn * j.log(static_cast<std::size_t>(k));
        if (std::log(std::abs(x)) + log_weight > log_cap) {
            std::ostringstream os;
            os << "outside materialized domain: coordinate " << k << " of J^{-" << n.str() << "} v has log-magnitude "
               << std::log(std::abs(x)) + log_weight << " > cap " << log_cap;
            throw DomainError(os.str());
        }
        out[k] = x * std::exp(log_weight);
    }
    return HVector(v.basis(), std::move(out));
}

double norm_n(const HVector& v, const Rational& n, const LogDiagonal& j, double log_cap) {
    if (n == Rational(0)) {
        if (static_cast<std::size_t>(v.dim()) != j.size()) {
            throw DimensionError("vector and J have different dimensions");
        }
        return v.norm();
    }
    return inverse_power_apply(v, n, j, log_cap).coeffs().stableNorm();
}

double norm_n(const HVector& v, const Rational& n, const HOperator& j, double log_cap) {
    return norm_n(v, n, LogDiagonal::from_operator(j), log_cap);
}

std::string to_string(TowerType type) {
    switch (type) {
    case TowerType::A:
        return "A";
    case TowerType::B:
        return "B";
    case TowerType::C:
        return "C";
    }
    return "?";
}

TowerType tower_type_from_string(const std::string& text) {
    if (text == "A") {
        return TowerType::A;
    }
    if (text == "B") {
        return TowerType::B;
    }
    if (text == "C") {
        return TowerType::C;
    }
    throw PreconditionError("tower type must be A, B or C, got '" + text + "'");
}

double NormTower::norm(const HVector& v, std::size_t grade_index) const {
    return norm_n(v, grades.at(grade_index), j);
}

nlohmann::json NormTower::to_json() const {
    nlohmann::json g = nlohmann::json::array();
    for (const auto& r : grades) {
        g.push_back(r.str());
    }
    nlohmann::json out;
    out["type"] = to_string(type);
    out["grades"] = std::move(g);
    out["cutoff"] = cutoff;
    out["supremum"] = supremum ? nlohmann::json(supremum->str()) : nlohmann::json(nullptr);
    out["supremum_attained"] = supremum_attained;
    out["unbounded"] = unbounded;
    out["monotone_on_samples"] = monotone_on_samples;
    out["samples_checked"] = samples_checked;
    return out;
}

namespace {

// Random vector supported on coordinates where J^{-n_max} stays well inside
// the materialized range.
HVector random_materializable(const LogDiagonal& j, const BasisId& basis, double n_max, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) {
        const double draw = gauss(rng);
        if (-n_max * j.log(k) < kLogWeightCap - 50.0) {
            c[static_cast<Eigen::Index>(k)] = draw;
        }
    }
    return HVector(basis, std::move(c));
}

}  // namespace

NormTower build_tower(const LogDiagonal& j, const BasisId& basis, TowerType type, int cutoff, std::mt19937_64& rng,
                      std::size_t samples) {
    if (cutoff < 1) {
        throw PreconditionError("tower cutoff must be >= 1");
    }
    NormTower tower;
    tower.type = type;
    tower.j = j;
    tower.basis = basis;
    tower.cutoff = cutoff;
    switch (type) {
    case TowerType::A:
        tower.grades = {Rational(1)};
        tower.supremum = Rational(1);
        tower.supremum_attained = true;
        break;
    case TowerType::B:
        for (int p = 0; p <= cutoff; ++p) {
            tower.grades.emplace_back(p, p + 1);
        }
        tower.supremum = Rational(1);
        tower.supremum_attained = false;
        break;
    case TowerType::C:
        for (int p = 0; p <= cutoff; ++p) {
            tower.grades.emplace_back(p);
        }
        tower.unbounded = true;
        break;
    }

    const double n_max = tower.grades.back().value();
    tower.monotone_on_samples = true;
    for (std::size_t s = 0; s < samples; ++s) {
        const HVector v = random_materializable(j, basis, n_max, rng);
        double prev = 0.0;
        for (std::size_t g = 0; g < tower.grades.size(); ++g) {
            const double cur = tower.norm(v, g);
            if (g > 0 && cur < prev * (1.0 - 1e-12)) {
                tower.monotone_on_samples = false;
            }
            prev = cur;
        }
    }
    tower.samples_checked = samples;
    return tower;
}

double isometry_deviation(const LogDiagonal& j, const HVector& sigma, const HVector& rho) {
    if (static_cast<std::size_t>(sigma.dim()) != j.size() || static_cast<std::size_t>(rho.dim()) != j.size()) {
        throw DimensionError("vectors and J have different dimensions");
    }
    const double scale = sigma.norm() * rho.norm();
    if (scale == 0.0) {
        return 0.0;
    }
    // Materialize J sigma and J rho, then evaluate the Phi_H product through
    // J^{-1} on the range.
    double phi_h = 0.0;
    for (std::size_t k = 0; k < j.size(); ++k) {
        const double l = j.log(k);
        if (l < std::log(DBL_MIN)) {
            throw DomainError("outside materialized domain: J entry at coordinate " + std::to_string(k) +
                              " underflows");
        }
        const double js = sigma[static_cast<Eigen::Index>(k)] * std::exp(l);
        const double jr = rho[static_cast<Eigen::Index>(k)] * std::exp(l);
        const double inv = std::exp(-l);
        phi_h += (js * inv) * (jr * inv);
    }
    return std::abs(phi_h - inner(sigma, rho)) / scale;
}

double isometry_check(const LogDiagonal& j, const BasisId& basis, std::size_t samples, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(j.size());
    double worst = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        Eigen::VectorXd a(n);
        Eigen::VectorXd b(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            a[k] = gauss(rng);
            b[k] = gauss(rng);
        }
        worst = std::max(worst, isometry_deviation(j, HVector(basis, a), HVector(basis, b)));
    }
    return worst;
}

GradeEquivalenceReport check_grade_equivalence(const LogDiagonal& j, const BasisId& basis,
                                               const std::vector<Rational>& first,
                                               const std::vector<Rational>& second, std::size_t samples,
                                               std::mt19937_64& rng) {
    auto all_max = [](const std::vector<Rational>& g) { return *std::max_element(g.begin(), g.end()); };
    const double n_max = std::max(all_max(first).value(), all_max(second).value());
    std::vector<HVector> vs;
    for (std::size_t s = 0; s < samples; ++s) {
        vs.push_back(random_materializable(j, basis, n_max, rng));
    }

    GradeEquivalenceReport rep;
    rep.dominated_both_ways = true;
    auto dominate = [&](const std::vector<Rational>& from, const std::vector<Rational>& by) {
        for (const Rational& n : from) {
            std::optional<Rational> match;
            for (const Rational& m : by) {
                if (n <= m && (!match || m < *match)) {
                    match = m;
                }
            }
            if (!match) {
                rep.dominated_both_ways = false;
                continue;
            }
            for (const HVector& v : vs) {
                const double lo = norm_n(v, n, j);
                const double hi = norm_n(v, *match, j);
                if (hi > 0.0) {
                    rep.worst_ratio = std::max(rep.worst_ratio, lo / hi);
                }
                if (lo > hi * (1.0 + 1e-12)) {
                    rep.dominated_both_ways = false;
                }
            }
        }
    };
    dominate(first, second);
    dominate(second, first);
    return rep;
}

// ------------------------------------------------------------------ spectra

SingularSpectrum SingularSpectrum::power(double alpha, std::uint64_t terms) {
    if (!(alpha >= 0.0)) {
        throw PreconditionError("power spectrum needs alpha >= 0");
    }
    if (terms < 8) {
        throw PreconditionError("spectrum truncation must keep at least 8 terms");
    }
    SingularSpectrum s;
    s.family = SpectrumFamily::power;
    s.alpha = alpha;
    s.terms = terms;
    return s;
}

SingularSpectrum SingularSpectrum::geometric(double q, std::uint64_t terms) {
    if (!(q > 0.0 && q <= 1.0)) {
        throw PreconditionError("geometric spectrum needs 0 < q <= 1");
    }
    if (terms < 8) {
        throw PreconditionError("spectrum truncation must keep at least 8 terms");
    }
    SingularSpectrum s;
    s.family = SpectrumFamily::geometric;
    s.q = q;
    s.terms = terms;
    return s;
}

SingularSpectrum SingularSpectrum::from_list(std::vector<double> values) {
    if (values.empty()) {
        throw PreconditionError("raw spectrum is empty");
    }
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!(values[k] > 0.0)) {
            throw PreconditionError("raw spectrum entries must be positive");
        }
        if (k > 0 && values[k] > values[k - 1]) {
            throw PreconditionError("non-monotone spectrum: entry " + std::to_string(k + 1) + " exceeds its predecessor");
        }
    }
    SingularSpectrum s;
    s.family = SpectrumFamily::raw;
    s.terms = values.size();
    s.raw = std::move(values);
    return s;
}

double SingularSpectrum::value(std::uint64_t k) const {
    switch (family) {
    case SpectrumFamily::power:
        return std::pow(static_cast<double>(k) + 1.0, -alpha);
    case SpectrumFamily::geometric:
        return std::pow(q, static_cast<double>(k));
    case SpectrumFamily::raw:
        return raw.at(k - 1);
    }
    return 0.0;
}

double SingularSpectrum::log_value(std::uint64_t k) const {
    switch (family) {
    case SpectrumFamily::power:
        return -alpha * std::log(static_cast<double>(k) + 1.0);
    case SpectrumFamily::geometric:
        return static_cast<double>(k) * std::log(q);
    case SpectrumFamily::raw:
        return std::log(raw.at(k - 1));
    }
    return 0.0;
}

std::string SingularSpectrum::name() const {
    std::ostringstream os;
    switch (family) {
    case SpectrumFamily::power:
        os << "power(" << alpha << ")";
        break;
    case SpectrumFamily::geometric:
        os << "geometric(" << q << ")";
        break;
    case SpectrumFamily::raw:
        os << "raw[" << raw.size() << "]";
        break;
    }
    return os.str();
}

nlohmann::json SingularSpectrum::to_json() const {
    nlohmann::json j;
    switch (family) {
    case SpectrumFamily::power:
        j["family"] = "power";
        j["alpha"] = alpha;
        break;
    case SpectrumFamily::geometric:
        j["family"] = "geometric";
        j["q"] = q;
        break;
    case SpectrumFamily::raw:
        j["family"] = "raw";
        j["values"] = raw;
        break;
    }
    j["terms"] = terms;
    return j;
}

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::yes:
        return "yes";
    case Verdict::no:
        return "no";
    case Verdict::inconclusive:
        return "inconclusive";
    }
    return "?";
}

double partial_sum(const SingularSpectrum& spectrum, double exponent, std::uint64_t terms) {
    // Kahan summation from the smallest term up.
    double sum = 0.0;
    double comp = 0.0;
    for (std::uint64_t k = terms; k >= 1; --k) {
        const double term = spectrum.family == SpectrumFamily::power
                                ? std::pow(static_cast<double>(k) + 1.0, -spectrum.alpha * exponent)
                                : std::exp(exponent * spectrum.log_value(k));
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

std::pair<double, double> pseries_tail_bounds(double s, std::uint64_t terms) {
    if (!(s > 1.0)) {
        throw PreconditionError("p-series tail bound needs s > 1");
    }
    const double k = static_cast<double>(terms);
    return {std::pow(k + 2.0, 1.0 - s) / (s - 1.0), std::pow(k + 1.0, 1.0 - s) / (s - 1.0)};
}

namespace {

Verdict from_bool(bool b) {
    return b ? Verdict::yes : Verdict::no;
}

// Doubling-block heuristic for a raw finite list: compare the mass of the
// last two dyadic blocks. p-series blocks shrink by 2^{1-s}.
Verdict doubling_heuristic(const SingularSpectrum& s, double exponent) {
    const std::uint64_t n = s.terms;
    if (n < 8) {
        return Verdict::inconclusive;
    }
    const double s4 = partial_sum(s, exponent, n / 4);
    const double s2 = partial_sum(s, exponent, n / 2);
    const double s1 = partial_sum(s, exponent, n);
    const double b1 = s2 - s4;
    const double b2 = s1 - s2;
    if (b1 <= 0.0) {
        return Verdict::inconclusive;
    }
    const double r = b2 / b1;
    if (r < 0.75) {
        return Verdict::yes;
    }
    if (r > 0.95) {
        return Verdict::no;
    }
    return Verdict::inconclusive;
}

SeriesEvidence series_evidence(const SingularSpectrum& s, double exponent) {
    SeriesEvidence ev;
    ev.exponent = exponent;
    ev.terms = s.terms;
    ev.partial_sum = partial_sum(s, exponent, s.terms);
    if (s.family == SpectrumFamily::power && s.alpha * exponent > 1.0) {
        const auto [lo, hi] = pseries_tail_bounds(s.alpha * exponent, s.terms);
        ev.tail_lower = lo;
        ev.tail_upper = hi;
    } else if (s.family == SpectrumFamily::geometric && s.q < 1.0) {
        const double qe = std::pow(s.q, exponent);
        const double tail = std::pow(qe, static_cast<double>(s.terms) + 1.0) / (1.0 - qe);
        ev.tail_lower = tail;
        ev.tail_upper = tail;
    }
    return ev;
}

nlohmann::json evidence_json(const SeriesEvidence& ev) {
    nlohmann::json j;
    j["exponent"] = ev.exponent;
    j["partial_sum"] = ev.partial_sum;
    j["terms"] = ev.terms;
    j["tail_lower"] = ev.tail_lower ? nlohmann::json(*ev.tail_lower) : nlohmann::json(nullptr);
    j["tail_upper"] = ev.tail_upper ? nlohmann::json(*ev.tail_upper) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json opt_int(const std::optional<int>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json OperatorClassReport::to_json() const {
    nlohmann::json j;
    j["spectrum"] = spectrum;
    j["compact"] = to_string(compact);
    j["hilbert_schmidt"] = to_string(hilbert_schmidt);
    j["nuclear"] = to_string(nuclear);
    nlohmann::json p = nlohmann::json::object();
    for (const auto& [n, c] : powers) {
        p[std::to_string(n)] = {{"hilbert_schmidt", to_string(c.hilbert_schmidt)}, {"nuclear", to_string(c.nuclear)}};
    }
    j["power_thresholds"] = std::move(p);
    j["min_hs_power"] = opt_int(min_hs_power);
    j["min_nuclear_power"] = opt_int(min_nuclear_power);
    j["nuclear_power_via_hs_square"] = opt_int(nuclear_power_via_hs_square);
    j["method"] = method;
    j["nuclear_series"] = evidence_json(nuclear_series);
    j["hs_series"] = evidence_json(hs_series);
    return j;
}

OperatorClassReport classify(const SingularSpectrum& spectrum, int max_power) {
    if (max_power < 1) {
        throw PreconditionError("max_power must be >= 1");
    }
    if (spectrum.family == SpectrumFamily::raw) {
        // from_list already validated; re-check for hand-built values
        (void)SingularSpectrum::from_list(spectrum.raw);
    }
    OperatorClassReport rep;
    rep.spectrum = spectrum.name();
    rep.nuclear_series = series_evidence(spectrum, 1.0);
    rep.hs_series = series_evidence(spectrum, 2.0);

    switch (spectrum.family) {
    case SpectrumFamily::power: {
        const double a = spectrum.alpha;
        rep.method = "analytic-tail-bound";
        rep.compact = from_bool(a > 0.0);
        rep.hilbert_schmidt = from_bool(2.0 * a > 1.0);
        rep.nuclear = from_bool(a > 1.0);
        for (int n = 1; n <= max_power; ++n) {
            rep.powers[n] = {from_bool(2.0 * n * a > 1.0), from_bool(n * a > 1.0)};
        }
        break;
    }
    case SpectrumFamily::geometric: {
        const bool decays = spectrum.q < 1.0;
        rep.method = "analytic-tail-bound";
        rep.compact = rep.hilbert_schmidt = rep.nuclear = from_bool(decays);
        for (int n = 1; n <= max_power; ++n) {
            rep.powers[n] = {from_bool(decays), from_bool(decays)};
        }
        break;
    }
    case SpectrumFamily::raw: {
        rep.method = "heuristic-inconclusive";
        const double first = spectrum.raw.front();
        const double last = spectrum.raw.back();
        rep.compact = last < 1e-3 * first ? Verdict::yes : (last == first ? Verdict::no : Verdict::inconclusive);
        rep.hilbert_schmidt = doubling_heuristic(spectrum, 2.0);
        rep.nuclear = doubling_heuristic(spectrum, 1.0);
        for (int n = 1; n <= max_power; ++n) {
            rep.powers[n] = {doubling_heuristic(spectrum, 2.0 * n), doubling_heuristic(spectrum, static_cast<double>(n))};
        }
        break;
    }
    }
    for (const auto& [n, c] : rep.powers) {
        if (!rep.min_hs_power && c.hilbert_schmidt == Verdict::yes) {
            rep.min_hs_power = n;
        }
        if (!rep.min_nuclear_power && c.nuclear == Verdict::yes) {
            rep.min_nuclear_power = n;
        }
    }
    if (rep.min_hs_power) {
        rep.nuclear_power_via_hs_square = 2 * *rep.min_hs_power;
    }
    return rep;
}

// ------------------------------------------------------------------- Koethe

nlohmann::json KotheReport::to_json() const {
    nlohmann::json j;
    j["spectrum"] = spectrum;
    j["n1"] = n1.str();
    j["n2"] = n2.str();
    j["ratio_limit"] = ratio_limit;
    j["ratio_limit_analytic"] = ratio_limit_analytic;
    j["sampled_tail_ratio"] = sampled_tail_ratio;
    j["ratio_criterion"] = ratio_criterion;
    j["series"] = evidence_json(series);
    j["series_converges"] = to_string(series_converges);
    j["nuclear"] = to_string(nuclear);
    return j;
}

KotheReport kothe_nuclearity(const SingularSpectrum& spectrum, const Rational& n1, const Rational& n2) {
    if (n1 < Rational(0) || !(n1 < n2) || !(n2 < Rational(1))) {
        throw PreconditionError("kothe_nuclearity needs 0 <= n1 < n2 < 1, got n1 = " + n1.str() + ", n2 = " + n2.str());
    }
    KotheReport rep;
    rep.spectrum = spectrum.name();
    rep.n1 = n1;
    rep.n2 = n2;

    const std::uint64_t k_max = spectrum.terms;
    double sup = 0.0;
    for (std::uint64_t k = std::max<std::uint64_t>(1, k_max - k_max / 4); k < k_max; ++k) {
        sup = std::max(sup, std::exp(spectrum.log_value(k + 1) - spectrum.log_value(k)));
    }
    rep.sampled_tail_ratio = sup;
    switch (spectrum.family) {
    case SpectrumFamily::power:
        rep.ratio_limit = 1.0;  // (k+1)^{-a} / (k+2)^{-a} -> 1
        rep.ratio_limit_analytic = true;
        break;
    case SpectrumFamily::geometric:
        rep.ratio_limit = spectrum.q;
        rep.ratio_limit_analytic = true;
        break;
    case SpectrumFamily::raw:
        rep.ratio_limit = sup;
        break;
    }
    rep.ratio_criterion = rep.ratio_limit < 1.0;

    const double exponent = 2.0 * (n2.value() - n1.value());
    rep.series = series_evidence(spectrum, exponent);
    switch (spectrum.family) {
    case SpectrumFamily::power:
        rep.series_converges = from_bool(spectrum.alpha * exponent > 1.0);
        break;
    case SpectrumFamily::geometric:
        rep.series_converges = from_bool(spectrum.q < 1.0);
        break;
    case SpectrumFamily::raw:
        rep.series_converges = doubling_heuristic(spectrum, exponent);
        break;
    }
    rep.nuclear = rep.ratio_criterion ? Verdict::yes : rep.series_converges;
    return rep;
}

}  // namespace lambdalab
