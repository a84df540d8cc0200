#include "lambdalab/dual_ops.hpp"

#include "lambdalab/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numeric>

namespace lambdalab {

namespace {

constexpr double kMaxLogEntry = 709.0;

double log_sum_exp(const std::vector<double>& terms) {
    if (terms.empty()) {
        return -std::numeric_limits<double>::infinity();
    }
    const double top = *std::max_element(terms.begin(), terms.end());
    if (std::isinf(top)) {
        return top;
    }
    double acc = 0.0;
    for (double l : terms) {
        acc += std::exp(l - top);
    }
    return top + std::log(acc);
}

std::vector<double> negate(const std::vector<double>& a) {
    std::vector<double> out(a.size());
    std::transform(a.begin(), a.end(), out.begin(), [](double x) { return -x; });
    return out;
}

std::vector<double> scaled(const std::vector<double>& a, double s) {
    std::vector<double> out(a.size());
    std::transform(a.begin(), a.end(), out.begin(), [s](double x) { return s * x; });
    return out;
}

std::vector<double> plus(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size());
    std::transform(a.begin(), a.end(), b.begin(), out.begin(), std::plus<>());
    return out;
}

// D_left * S * D_right in the log domain.
ConjugatedShift conjugate(std::string name, const std::vector<double>& left, const ConjugatedShift& s,
                          const std::vector<double>& right) {
    ConjugatedShift out;
    out.name = std::move(name);
    out.t = s.t;
    out.left_log = plus(left, s.left_log);
    out.right_log = plus(s.right_log, right);
    return out;
}

HVector random_vector(const BasisId& basis, std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd c(static_cast<Eigen::Index>(dim));
    for (Eigen::Index k = 0; k < c.size(); ++k) {
        c[k] = gauss(rng);
    }
    return HVector(basis, std::move(c));
}

}  // namespace

// ------------------------------------------------------------ Lambda^x, R

HOperator antitranspose(const HOperator& lambda) {
    // <rho | M f> = <Lambda rho | f> for all rho, f  <=>  M = Lambda^T
    return lambda.adjoint();
}

double antitranspose_pairing_deviation(const HOperator& lambda, const HOperator& lambda_x, std::size_t pairs,
                                       std::mt19937_64& rng) {
    double worst = 0.0;
    for (std::size_t s = 0; s < pairs; ++s) {
        const HVector rho = random_vector(lambda.basis(), static_cast<std::size_t>(lambda.dim()), rng);
        const HVector f = random_vector(lambda.basis(), static_cast<std::size_t>(lambda.dim()), rng);
        const double lhs = inner(rho, lambda_x.apply(f));
        const double rhs = inner(lambda.apply(rho), f);
        worst = std::max(worst, std::abs(lhs - rhs) / (rho.norm() * f.norm()));
    }
    return worst;
}

RieszMap riesz_map(const LambdaOperator& lambda) {
    const HOperator lam = lambda.matrix();
    const HOperator lam_x = antitranspose(lam);
    const std::vector<double>& logs = lambda.log_diag().logs();

    RieszMap out;
    out.r = lam * lam_x;
    out.r_log = LogDiagonal(scaled(logs, 2.0));
    out.r_inverse_log = out.r_log.inverse();

    // sqrt(R) = Lambda: through the materialized matrix where R is a normal
    // double, through the logs where it underflows.
    const auto& r_diag = *out.r.diag_labels();
    for (std::size_t k = 0; k < logs.size(); ++k) {
        double rel = 0.0;
        if (r_diag[k] >= DBL_MIN) {
            const double root = fractional_power(HOperator::diagonal("r", {r_diag[k]}), Rational(1, 2)).matrix()(0, 0);
            rel = std::abs(root / std::exp(logs[k]) - 1.0);
        } else {
            rel = std::abs(std::exp(out.r_log.power(0.5).log(k) - logs[k]) - 1.0);
        }
        out.sqrt_recovery_deviation = std::max(out.sqrt_recovery_deviation, rel);
    }
    return out;
}

double riesz_min_quadratic_form(const RieszMap& riesz, const BasisId& basis, std::size_t samples,
                                std::mt19937_64& rng) {
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < samples; ++s) {
        const HVector rho = random_vector(basis, riesz.r_log.size(), rng);
        lowest = std::min(lowest, inner(riesz.r.apply(rho), rho) / rho.coeffs().squaredNorm());
    }
    return lowest;
}

double riesz_isometry_deviation(const RieszMap& riesz, std::size_t samples, std::mt19937_64& rng) {
    const std::size_t n = riesz.r_log.size();
    double worst = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        const HVector f = random_vector("riesz", n, rng);
        const HVector g = random_vector("riesz", n, rng);
        // log-magnitudes and signs of the terms of both inner products
        std::vector<double> phi_h(n);
        std::vector<double> phi_x(n);
        std::vector<int> sign(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double fk = f[static_cast<Eigen::Index>(k)];
            const double gk = g[static_cast<Eigen::Index>(k)];
            sign[k] = (fk < 0) != (gk < 0) ? -1 : 1;
            const double rf = std::log(std::abs(fk)) + riesz.r_log.log(k);
            const double rg = std::log(std::abs(gk)) + riesz.r_log.log(k);
            phi_h[k] = rf + rg + riesz.r_inverse_log.log(k);  // Gram of Phi_H is R^{-1}
            phi_x[k] = std::log(std::abs(fk)) + std::log(std::abs(gk)) + riesz.r_log.log(k);
        }
        const double top = std::max(*std::max_element(phi_h.begin(), phi_h.end()),
                                    *std::max_element(phi_x.begin(), phi_x.end()));
        double a = 0.0;
        double b = 0.0;
        double scale = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            a += sign[k] * std::exp(phi_h[k] - top);
            b += sign[k] * std::exp(phi_x[k] - top);
            scale += std::exp(phi_x[k] - top);
        }
        worst = std::max(worst, std::abs(a - b) / scale);
    }
    return worst;
}

// --------------------------------------------------------------- the web

double ConjugatedShift::log_weight(const CascadeSystem& system, std::size_t k) const {
    const auto img = system.advance(k, t);
    if (!img) {
        throw MarginError(name + ": label " + system.label_name(k) + " is outside interior_margin(" +
                          std::to_string(t) + ")");
    }
    return left_log[*img] + right_log[k];
}

Eigen::MatrixXd ConjugatedShift::to_matrix(const CascadeSystem& system) const {
    const auto n = static_cast<Eigen::Index>(system.dim());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k : system.interior_margin(t)) {
        const double lw = log_weight(system, k);
        if (lw > kMaxLogEntry) {
            throw DomainError(name + ": entry for label " + system.label_name(k) + " overflows (log weight " +
                              std::to_string(lw) + ")");
        }
        m(static_cast<Eigen::Index>(*system.advance(k, t)), static_cast<Eigen::Index>(k)) = std::exp(lw);
    }
    return m;
}

OperatorWeb build_web(const LambdaOperator& lambda, int t) {
    if (t < 0) {
        throw PreconditionError("build_web needs t >= 0");
    }
    const CascadeSystem& sys = lambda.system();
    const std::vector<double>& l = lambda.log_diag().logs();
    const std::vector<double> zero(l.size(), 0.0);

    OperatorWeb web{t, lambda, antitranspose(lambda.matrix()), riesz_map(lambda), sys.interior_margin(t),
                    {}, {}, {}, {}, {}, {}};
    const std::vector<double>& r = web.riesz.r_log.logs();
    const std::vector<double>& r_inv = web.riesz.r_inverse_log.logs();
    // Lambda^x is diagonal with the same entries as Lambda; its log diagonal
    // is read off the antitransposed operator's defining pairing.
    const std::vector<double>& lx = l;

    web.u_bar = ConjugatedShift{"U_bar", t, zero, zero};
    web.w = conjugate("W", l, web.u_bar, negate(l));
    web.v = conjugate("V", negate(lx), web.u_bar, lx);
    web.x = conjugate("X", r_inv, web.w, r);
    web.y = conjugate("Y", lx, web.u_bar, negate(lx));
    web.z = conjugate("Z", r, web.u_bar, r_inv);
    return web;
}

// ------------------------------------------------------------ spectra

std::vector<std::complex<double>> graded_spectrum(const Eigen::MatrixXd& m, const std::vector<int>& ages) {
    if (m.rows() != m.cols() || static_cast<std::size_t>(m.rows()) != ages.size()) {
        throw DimensionError("graded_spectrum: matrix and grading disagree");
    }
    bool graded = true;
    for (Eigen::Index i = 0; i < m.rows() && graded; ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (m(i, j) != 0.0 && ages[static_cast<std::size_t>(i)] < ages[static_cast<std::size_t>(j)]) {
                graded = false;
                break;
            }
        }
    }
    std::vector<std::complex<double>> out;
    auto push_eigs = [&out](const Eigen::MatrixXd& block) {
        if (block.rows() == 1) {
            out.emplace_back(block(0, 0), 0.0);
            return;
        }
        Eigen::EigenSolver<Eigen::MatrixXd> es(block, false);
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
            out.push_back(es.eigenvalues()[k]);
        }
    };
    if (!graded) {
        push_eigs(m);
        return out;
    }
    std::vector<int> distinct(ages.begin(), ages.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (int a : distinct) {
        std::vector<Eigen::Index> idx;
        for (std::size_t k = 0; k < ages.size(); ++k) {
            if (ages[k] == a) {
                idx.push_back(static_cast<Eigen::Index>(k));
            }
        }
        Eigen::MatrixXd block(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            for (std::size_t j = 0; j < idx.size(); ++j) {
                block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(idx[i], idx[j]);
            }
        }
        push_eigs(block);
    }
    return out;
}

double spectrum_distance(std::vector<std::complex<double>> a, std::vector<std::complex<double>> b) {
    if (a.size() != b.size()) {
        return std::numeric_limits<double>::infinity();
    }
    auto order = [](const std::complex<double>& x, const std::complex<double>& y) {
        return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    };
    std::sort(a.begin(), a.end(), order);
    std::sort(b.begin(), b.end(), order);
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        worst = std::max(worst, std::abs(a[k] - b[k]));
    }
    return worst;
}

// ------------------------------------------------------------ the theorem

bool TheoremReport::all_pass() const {
    return std::all_of(parts.begin(), parts.end(), [](const TheoremPart& p) { return p.pass; });
}

nlohmann::json TheoremReport::to_json() const {
    nlohmann::json j;
    j["t"] = t;
    j["profile"] = profile;
    j["basis"] = basis;
    nlohmann::json ps = nlohmann::json::array();
    for (const auto& p : parts) {
        nlohmann::json pj;
        pj["part"] = p.id;
        pj["claim"] = p.claim;
        pj["status"] = p.pass ? "pass" : "fail";
        pj["deviation"] = p.deviation ? nlohmann::json(*p.deviation) : nlohmann::json(nullptr);
        if (p.witness_label) {
            pj["witness"] = {{"label", *p.witness_label},
                             {"name", p.witness_name},
                             {"difference_norm", *p.witness_difference}};
        } else {
            pj["witness"] = nullptr;
        }
        pj["details"] = p.details.is_null() ? nlohmann::json::object() : p.details;
        ps.push_back(std::move(pj));
    }
    j["parts"] = std::move(ps);
    j["all_pass"] = all_pass();
    return j;
}

namespace {

// Safe labels ordered by |age| so the witness sits next to age 0 when it can.
std::vector<std::size_t> witness_order(const CascadeSystem& sys, std::vector<std::size_t> safe) {
    std::stable_sort(safe.begin(), safe.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(sys.age(a)) < std::abs(sys.age(b)); });
    return safe;
}

TheoremPart witness_part(std::string id, std::string claim, const OperatorWeb& web, const ConjugatedShift& a,
                         const ConjugatedShift& b) {
    const CascadeSystem& sys = web.system();
    TheoremPart part;
    part.id = std::move(id);
    part.claim = std::move(claim);
    for (std::size_t k : witness_order(sys, web.safe)) {
        // both operators send e_k to a multiple of the same label
        const double wa = std::exp(a.log_weight(sys, k));
        const double wb = std::exp(b.log_weight(sys, k));
        const double diff = std::abs(wa - wb);
        if (diff > kWitnessThreshold) {
            part.pass = true;
            part.witness_label = k;
            part.witness_name = sys.label_name(k);
            part.witness_difference = diff;
            part.details = {{a.name + "_weight", wa}, {b.name + "_weight", wb},
                            {"image", sys.label_name(*sys.advance(k, a.t))}};
            return part;
        }
    }
    part.pass = false;
    return part;
}

double log_norm(const std::vector<double>& coord_logs) {
    return 0.5 * log_sum_exp(scaled(coord_logs, 2.0));
}

}  // namespace

TheoremReport verify_theorem(const OperatorWeb& web, std::size_t samples, std::mt19937_64& rng) {
    if (web.t < 1) {
        throw PreconditionError("theorem parts (iii)-(v) are degenerate at t = 0; build the web with t >= 1");
    }
    const CascadeSystem& sys = web.system();
    TheoremReport rep;
    rep.t = web.t;
    rep.profile = web.lambda.profile().name();
    rep.basis = sys.basis_id();

    // (i) V_t = X_t
    {
        TheoremPart p;
        p.id = "i";
        p.claim = "V_t = X_t";
        try {
            const Eigen::MatrixXd vm = web.v.to_matrix(sys);
            const Eigen::MatrixXd xm = web.x.to_matrix(sys);
            const double scale = vm.norm();
            p.deviation = scale == 0.0 ? (vm - xm).norm() : (vm - xm).norm() / scale;
            p.details = {{"route", "dense-relative-frobenius"}};
        } catch (const DomainError&) {
            double worst = 0.0;
            for (std::size_t k : web.safe) {
                worst = std::max(worst, std::abs(std::expm1(web.x.log_weight(sys, k) - web.v.log_weight(sys, k))));
            }
            p.deviation = worst;
            p.details = {{"route", "log-entrywise-relative"}};
        }
        p.pass = *p.deviation <= kIdentityTolerance;
        rep.parts.push_back(std::move(p));
    }

    // (ii) V_t Markov: s -> ||R V_s F||_L is nonincreasing and equals ||W_s R F||_L
    {
        TheoremPart p;
        p.id = "ii";
        p.claim = "V_t defines a strong Markov process (via X_t = R^{-1} W_t R)";
        std::normal_distribution<double> gauss(0.0, 1.0);
        double worst_dev = 0.0;
        bool monotone = true;
        std::vector<OperatorWeb> webs;
        for (int s = 0; s <= web.t; ++s) {
            webs.push_back(s == web.t ? web : build_web(web.lambda, s));
        }
        const std::vector<double>& r = web.riesz.r_log.logs();
        for (std::size_t n = 0; n < samples; ++n) {
            std::vector<double> f(sys.dim(), 0.0);
            for (std::size_t k : web.safe) {
                f[k] = gauss(rng);
            }
            double prev = std::numeric_limits<double>::infinity();
            for (int s = 0; s <= web.t; ++s) {
                const OperatorWeb& ws = webs[static_cast<std::size_t>(s)];
                std::vector<double> via_v;
                std::vector<double> via_w;
                for (std::size_t k : web.safe) {
                    const std::size_t img = *sys.advance(k, s);
                    const double lf = std::log(std::abs(f[k]));
                    via_v.push_back(lf + ws.v.log_weight(sys, k) + r[img]);
                    via_w.push_back(lf + r[k] + ws.w.log_weight(sys, k));
                }
                const double nv = log_norm(via_v);
                const double nw = log_norm(via_w);
                worst_dev = std::max(worst_dev, std::abs(std::expm1(nv - nw)));
                if (nv > prev + 1e-12 * std::max(1.0, std::abs(prev))) {
                    monotone = false;
                }
                prev = nv;
            }
        }
        p.deviation = worst_dev;
        p.pass = monotone && worst_dev <= kIdentityTolerance;
        p.details = {{"monotone", monotone}, {"samples", samples}};
        rep.parts.push_back(std::move(p));
    }

    rep.parts.push_back(witness_part("iii", "V_t != U_bar_t", web, web.v, web.u_bar));
    rep.parts.push_back(witness_part("iv", "Y_t != U_t", web, web.y, web.u_bar));
    rep.parts.push_back(witness_part("v", "W_t != Z_t", web, web.w, web.z));

    // (vi) Z_t = R U_bar_t R^{-1} is equivalent to U_bar_t
    {
        TheoremPart p;
        p.id = "vi";
        p.claim = "Z_t is equivalent to U_bar_t";
        const Eigen::MatrixXd zm = web.z.to_matrix(sys);
        const Eigen::MatrixXd um = web.u_bar.to_matrix(sys);
        const double spec_dist = spectrum_distance(graded_spectrum(zm, sys.ages()), graded_spectrum(um, sys.ages()));

        // Jordan structure of a nilpotent weighted shift: rank(A^k) counts the
        // safe chains of length k. Weights are finite logs, so never zero.
        auto rank_profile = [&](const ConjugatedShift& a) {
            std::vector<std::size_t> ranks;
            for (int k = 1;; ++k) {
                std::size_t count = 0;
                for (std::size_t j = 0; j < sys.dim(); ++j) {
                    std::optional<std::size_t> cur = j;
                    double lw = 0.0;
                    for (int step = 0; step < k && cur; ++step) {
                        if (!sys.in_margin(*cur, a.t)) {
                            cur.reset();
                            break;
                        }
                        lw += a.log_weight(sys, *cur);
                        cur = sys.advance(*cur, a.t);
                    }
                    if (cur && std::isfinite(lw)) {
                        ++count;
                    }
                }
                ranks.push_back(count);
                if (count == 0) {
                    break;
                }
            }
            return ranks;
        };
        const auto rz = rank_profile(web.z);
        const auto ru = rank_profile(web.u_bar);

        // R as an isometry Phi_H^x -> Phi_H: ||Z v||_{Phi_H} = ||U_bar R^{-1} v||_{Phi_H^x}.
        std::normal_distribution<double> gauss(0.0, 1.0);
        const std::vector<double>& r = web.riesz.r_log.logs();
        const std::vector<double>& r_inv = web.riesz.r_inverse_log.logs();
        double conj_dev = 0.0;
        for (std::size_t n = 0; n < samples; ++n) {
            std::vector<double> lhs;
            std::vector<double> rhs;
            for (std::size_t k : web.safe) {
                const std::size_t img = *sys.advance(k, web.t);
                const double lv = std::log(std::abs(gauss(rng)));
                lhs.push_back(lv + web.z.log_weight(sys, k) + 0.5 * r_inv[img]);
                rhs.push_back(lv + r_inv[k] + web.u_bar.log_weight(sys, k) + 0.5 * r[img]);
            }
            conj_dev = std::max(conj_dev, std::abs(std::expm1(log_norm(lhs) - log_norm(rhs))));
        }

        p.deviation = spec_dist;
        p.pass = spec_dist <= kSpectrumTolerance && rz == ru && conj_dev <= kIdentityTolerance;
        p.details = {{"spectrum_distance", spec_dist},
                     {"rank_profile_z", rz},
                     {"rank_profile_u_bar", ru},
                     {"isometric_conjugacy_deviation", conj_dev}};
        rep.parts.push_back(std::move(p));
    }
    return rep;
}

}  // namespace lambdalab
