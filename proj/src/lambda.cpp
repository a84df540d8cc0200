#include "lambdalab/lambda.hpp"

#include "lambdalab/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <limits>
#include <sstream>

namespace lambdalab {

// ------------------------------------------------------------------ profile

LambdaProfile LambdaProfile::gumbel(double a) {
    if (!(a > 0.0)) {
        throw PreconditionError("gumbel profile needs a > 0");
    }
    LambdaProfile p;
    p.family_ = ProfileFamily::gumbel;
    p.rate_ = a;
    return p;
}

LambdaProfile LambdaProfile::logistic() {
    LambdaProfile p;
    p.family_ = ProfileFamily::logistic;
    return p;
}

LambdaProfile LambdaProfile::custom(std::vector<std::pair<double, double>> table) {
    if (table.size() < 2) {
        throw PreconditionError("custom profile needs at least two (s, lambda) pairs");
    }
    std::sort(table.begin(), table.end());
    for (std::size_t k = 1; k < table.size(); ++k) {
        if (table[k].first == table[k - 1].first) {
            throw PreconditionError("custom profile has a repeated s value");
        }
    }
    LambdaProfile p;
    p.family_ = ProfileFamily::custom;
    p.table_ = std::move(table);
    return p;
}

std::string LambdaProfile::name() const {
    switch (family_) {
    case ProfileFamily::gumbel: {
        std::ostringstream os;
        os << "gumbel(" << rate_ << ")";
        return os.str();
    }
    case ProfileFamily::logistic:
        return "logistic";
    case ProfileFamily::custom:
        return "custom[" + std::to_string(table_.size()) + "]";
    }
    return "unknown";
}

double LambdaProfile::value(double s) const {
    if (family_ != ProfileFamily::custom) {
        return std::exp(log_value(s));
    }
    if (s < table_.front().first || s > table_.back().first) {
        std::ostringstream os;
        os << "custom profile is not tabulated at s = " << s;
        throw DomainError(os.str());
    }
    const auto hi = std::lower_bound(table_.begin(), table_.end(), std::make_pair(s, -std::numeric_limits<double>::infinity()));
    if (hi->first == s) {
        return hi->second;
    }
    const auto lo = hi - 1;
    const double w = (s - lo->first) / (hi->first - lo->first);
    return (1.0 - w) * lo->second + w * hi->second;
}

double LambdaProfile::log_value(double s) const {
    switch (family_) {
    case ProfileFamily::gumbel:
        return -std::exp(rate_ * s);
    case ProfileFamily::logistic:
        // -log(1 + e^s) without overflow for large s
        return s > 0.0 ? -(s + std::log1p(std::exp(-s))) : -std::log1p(std::exp(s));
    case ProfileFamily::custom: {
        const double v = value(s);
        if (v < 0.0) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        return v == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(v);
    }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

nlohmann::json LambdaProfile::to_json() const {
    nlohmann::json j;
    switch (family_) {
    case ProfileFamily::gumbel:
        j["family"] = "gumbel";
        j["a"] = rate_;
        break;
    case ProfileFamily::logistic:
        j["family"] = "logistic";
        break;
    case ProfileFamily::custom: {
        j["family"] = "custom";
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& [s, v] : table_) {
            rows.push_back({s, v});
        }
        j["table"] = std::move(rows);
        break;
    }
    }
    return j;
}

// ------------------------------------------------------------ admissibility

nlohmann::json AdmissibilityCertificate::to_json() const {
    nlohmann::json j;
    j["profile"] = profile;
    j["grid"] = {grid_lo, grid_hi};
    j["t_set"] = t_set;
    j["tolerance"] = tolerance;
    j["monotone_ok"] = monotone_ok;
    j["limits_ok"] = limits_ok;
    j["ratio_ok"] = ratio_ok;
    j["admissible"] = admissible();
    nlohmann::json w = nlohmann::json::array();
    for (const auto& x : witnesses) {
        w.push_back({{"condition", x.condition}, {"s", x.s}, {"t", x.t}, {"value", x.value}, {"detail", x.detail}});
    }
    j["witnesses"] = std::move(w);
    return j;
}

namespace {

// Slack for sampled monotonicity in the log domain: relative round-off only.
bool log_increases(double next, double prev) {
    return next > prev + 1e-12 * std::max(1.0, std::abs(prev));
}

}  // namespace

AdmissibilityCertificate check_admissible(const LambdaProfile& profile, int grid_lo, int grid_hi,
                                          const std::vector<int>& t_set) {
    if (grid_lo > -20 || grid_hi < 20) {
        throw PreconditionError("admissibility grid must cover [-20, 20]");
    }
    if (t_set.empty()) {
        throw PreconditionError("admissibility needs a nonempty t set");
    }
    for (int t : t_set) {
        if (t <= 0) {
            throw PreconditionError("admissibility t values must be positive");
        }
    }

    AdmissibilityCertificate cert;
    cert.profile = profile.name();
    cert.grid_lo = grid_lo;
    cert.grid_hi = grid_hi;
    cert.t_set = t_set;
    cert.tolerance = kAdmissibilityTolerance;

    const auto n = static_cast<std::size_t>(grid_hi - grid_lo + 1);
    std::vector<double> logs(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double s = grid_lo + static_cast<int>(k);
        const double v = profile.value(s);
        if (!(v >= 0.0 && v <= 1.0)) {
            std::ostringstream os;
            os << "invalid profile " << profile.name() << ": lambda(" << s << ") = " << v << " lies outside [0, 1]";
            throw DomainError(os.str());
        }
        logs[k] = profile.log_value(s);
    }
    auto s_at = [&](std::size_t k) { return grid_lo + static_cast<int>(k); };

    // (i)
    cert.monotone_ok = true;
    for (std::size_t k = 1; k < n; ++k) {
        if (log_increases(logs[k], logs[k - 1])) {
            cert.monotone_ok = false;
            cert.witnesses.push_back({"monotone", s_at(k), 0, std::exp(logs[k]), "lambda(s) > lambda(s - 1)"});
        }
    }

    // (ii)
    const double eps = cert.tolerance;
    const double first = std::exp(logs.front());
    const double last = std::exp(logs.back());
    cert.limits_ok = true;
    if (first < 1.0 - eps) {
        cert.limits_ok = false;
        cert.witnesses.push_back({"limits", grid_lo, 0, first, "lambda(grid.lo) < 1 - eps"});
    }
    if (last > eps) {
        cert.limits_ok = false;
        cert.witnesses.push_back({"limits", grid_hi, 0, last, "lambda(grid.hi) > eps"});
    }

    // (iii)
    cert.ratio_ok = true;
    for (int t : t_set) {
        if (static_cast<std::size_t>(t) >= n) {
            throw PreconditionError("t exceeds the admissibility grid");
        }
        double prev = 0.0;
        bool have_prev = false;
        bool monotone = true;
        for (std::size_t k = 0; k + static_cast<std::size_t>(t) < n; ++k) {
            if (std::isinf(logs[k])) {
                cert.ratio_ok = false;
                cert.witnesses.push_back({"ratio", s_at(k), t, 0.0, "lambda(s) = 0, ratio undefined"});
                monotone = false;
                break;
            }
            const double log_ratio = logs[k + static_cast<std::size_t>(t)] - logs[k];
            if (have_prev && log_increases(log_ratio, prev) && monotone) {
                monotone = false;
                cert.ratio_ok = false;
                cert.witnesses.push_back({"ratio", s_at(k), t, std::exp(log_ratio), "ratio increases in s"});
            }
            prev = log_ratio;
            have_prev = true;
        }
        if (monotone) {
            const double tail = std::exp(prev);
            if (tail > eps) {
                cert.ratio_ok = false;
                std::ostringstream os;
                os << "ratio at the last sample is " << tail << " > eps";
                cert.witnesses.push_back({"ratio", grid_hi - t, t, tail, os.str()});
            }
        }
    }
    return cert;
}

// ----------------------------------------------------------------- operator

double LambdaOperator::log_at_age(int age) const {
    const AgeWindow& w = system_.window();
    if (!w.contains(age)) {
        throw DimensionError("age " + std::to_string(age) + " outside the window");
    }
    return log_by_age_[static_cast<std::size_t>(age - w.lo)];
}

HOperator LambdaOperator::matrix() const {
    return log_diag_.to_operator(system_.basis_id());
}

HVector LambdaOperator::apply(const HVector& v) const {
    if (v.basis() != system_.basis_id() || static_cast<std::size_t>(v.dim()) != system_.dim()) {
        throw DimensionError("vector does not live on basis " + system_.basis_id());
    }
    Eigen::VectorXd c(v.dim());
    for (Eigen::Index k = 0; k < v.dim(); ++k) {
        c[k] = v[k] == 0.0 ? 0.0 : v[k] * std::exp(log_diag_.log(static_cast<std::size_t>(k)));
    }
    return HVector(v.basis(), std::move(c));
}

BlockVector LambdaOperator::apply_block(const BlockVector& v) const {
    return BlockVector{v.equilibrium, apply(v.fluctuation)};
}

double LambdaOperator::log_condition_number() const {
    return log_at_age(system_.window().lo) - log_at_age(system_.window().hi);
}

LambdaOperator build_lambda(const LambdaProfile& profile, const CascadeSystem& system,
                            const AdmissibilityCertificate& certificate) {
    if (certificate.profile != profile.name()) {
        throw PreconditionError("certificate was issued for " + certificate.profile + ", not " + profile.name());
    }
    if (!certificate.admissible()) {
        throw PreconditionError("profile " + profile.name() + " is not certified admissible");
    }
    const AgeWindow& w = system.window();
    if (certificate.grid_lo > w.lo || certificate.grid_hi < w.hi) {
        throw PreconditionError("certificate grid does not cover the system window");
    }

    LambdaOperator op;
    op.profile_ = profile;
    op.system_ = system;
    op.certificate_ = certificate;
    op.log_by_age_.resize(static_cast<std::size_t>(w.size()));
    for (int a = w.lo; a <= w.hi; ++a) {
        const double l = profile.log_value(a);
        if (!std::isfinite(l)) {
            throw DomainError("lambda(" + std::to_string(a) + ") = 0 inside the window: Lambda is not injective");
        }
        op.log_by_age_[static_cast<std::size_t>(a - w.lo)] = l;
    }
    std::vector<double> logs(system.dim());
    for (std::size_t k = 0; k < system.dim(); ++k) {
        logs[k] = op.log_by_age_[static_cast<std::size_t>(system.age(k) - w.lo)];
    }
    op.log_diag_ = LogDiagonal(std::move(logs));
    return op;
}

LambdaOperator build_lambda(const LambdaProfile& profile, const CascadeSystem& system) {
    const AgeWindow& w = system.window();
    const auto cert = check_admissible(profile, std::min(w.lo, -20), std::max(w.hi, 20), {1, 2, 3});
    return build_lambda(profile, system, cert);
}

// ------------------------------------------------------------- diagnostics

CovariantTransformReport verify_covariant_transform(const LambdaOperator& lambda, int t) {
    if (t < 0) {
        throw PreconditionError("verify_covariant_transform needs t >= 0");
    }
    const CascadeSystem& sys = lambda.system();
    const std::vector<std::size_t> interior = sys.interior_margin(t);
    const LambdaProfile& prof = lambda.profile();
    CovariantTransformReport rep;

    constexpr std::size_t kDenseLimit = 1024;
    if (sys.dim() <= kDenseLimit) {
        // dense route: (U^t)^T Lambda U^t as matrix products
        const Eigen::MatrixXd ut = sys.koopman_power_matrix(t).matrix();
        const Eigen::MatrixXd lam = lambda.matrix().matrix();
        const Eigen::MatrixXd lhs = ut.transpose() * lam * ut;
        const Eigen::MatrixXd lhs2 = ut.transpose() * (lam * lam) * ut;
        for (std::size_t i : interior) {
            for (std::size_t j : interior) {
                const auto ii = static_cast<Eigen::Index>(i);
                const auto jj = static_cast<Eigen::Index>(j);
                const double rhs = i == j ? prof.value(sys.age(i) + t) : 0.0;
                rep.lambda_deviation = std::max(rep.lambda_deviation, std::abs(lhs(ii, jj) - rhs));
                rep.lambda_squared_deviation = std::max(rep.lambda_squared_deviation, std::abs(lhs2(ii, jj) - rhs * rhs));
            }
        }
        return rep;
    }
    for (std::size_t k : interior) {
        const std::size_t img = *sys.advance(k, t);
        const double lhs = std::exp(lambda.log_diag().log(img));
        const double rhs = prof.value(sys.age(k) + t);
        rep.lambda_deviation = std::max(rep.lambda_deviation, std::abs(lhs - rhs));
        rep.lambda_squared_deviation = std::max(rep.lambda_squared_deviation, std::abs(lhs * lhs - rhs * rhs));
    }
    return rep;
}

NormalizationReport verify_normalization(const LambdaOperator& lambda, const std::vector<GridDensity>& samples) {
    const CascadeSystem& sys = lambda.system();
    if (sys.kind() != CascadeKind::baker) {
        throw PreconditionError("grid normalization needs a baker realization");
    }
    NormalizationReport rep;
    rep.samples = samples.size();
    for (const GridDensity& rho : samples) {
        const BlockVector coeffs = grid_to_walsh(sys, rho);
        const BlockVector mapped = lambda.apply_block(coeffs);
        const double before = rho.mean();
        const double after = walsh_to_grid(sys, mapped).mean();
        const double fluct = walsh_to_grid(sys, BlockVector{0.0, mapped.fluctuation}).mean();
        rep.max_mass_deviation = std::max(rep.max_mass_deviation, std::abs(after - before));
        rep.max_fluctuation_mass = std::max(rep.max_fluctuation_mass, std::abs(fluct));
    }
    return rep;
}

NormalizationReport verify_normalization(const LambdaOperator& lambda, const std::vector<BlockVector>& samples) {
    const CascadeSystem& sys = lambda.system();
    if (sys.kind() == CascadeKind::baker) {
        std::vector<GridDensity> grids;
        grids.reserve(samples.size());
        for (const auto& s : samples) {
            grids.push_back(walsh_to_grid(sys, s));
        }
        return verify_normalization(lambda, grids);
    }
    // Abstract shift: mass is the equilibrium coordinate, and Lambda maps the
    // fluctuation space into itself, which is orthogonal to the constant.
    NormalizationReport rep;
    rep.samples = samples.size();
    for (const auto& s : samples) {
        const BlockVector mapped = lambda.apply_block(s);
        rep.max_mass_deviation = std::max(rep.max_mass_deviation, std::abs(mapped.equilibrium - s.equilibrium));
    }
    return rep;
}

}  // namespace lambdalab
