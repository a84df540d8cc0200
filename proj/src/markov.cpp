#include "lambdalab/markov.hpp"

#include "lambdalab/errors.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>

namespace lambdalab {

MarkovEvolution::MarkovEvolution(LambdaOperator lambda, int max_t) : lambda_(std::move(lambda)), max_t_(max_t) {
    if (max_t < 0) {
        throw PreconditionError("Markov horizon must be >= 0");
    }
    const AgeWindow& w = lambda_.system().window();
    table_.resize(static_cast<std::size_t>(max_t) + 1);
    for (int t = 0; t <= max_t; ++t) {
        auto& row = table_[static_cast<std::size_t>(t)];
        row.assign(static_cast<std::size_t>(w.size()), std::numeric_limits<double>::quiet_NaN());
        for (int n = w.lo; n + t <= w.hi; ++n) {
            const double lw = lambda_.log_at_age(n + t) - lambda_.log_at_age(n);
            if (lw > 0.0) {
                throw DomainError("ratio lambda(n+t)/lambda(n) exceeds 1 at n = " + std::to_string(n));
            }
            row[static_cast<std::size_t>(n - w.lo)] = lw;
        }
    }
}

double MarkovEvolution::log_weight(int age, int t) const {
    const AgeWindow& w = system().window();
    if (!w.contains(age) || !w.contains(age + t)) {
        throw MarginError("age " + std::to_string(age) + " + " + std::to_string(t) + " leaves the window");
    }
    if (t >= 0 && t <= max_t_) {
        return table_[static_cast<std::size_t>(t)][static_cast<std::size_t>(age - w.lo)];
    }
    return lambda_.log_at_age(age + t) - lambda_.log_at_age(age);
}

HVector markov_step(const MarkovEvolution& ev, const HVector& rho, int t) {
    if (t < 0) {
        throw PreconditionError("W_t is defined for t >= 0 only: the W_t do not form a group");
    }
    const CascadeSystem& sys = ev.system();
    // Reuse koopman_power for the support/margin checks, then reweight.
    const HVector moved = koopman_power(sys, rho, t);
    Eigen::VectorXd c = moved.coeffs();
    for (std::size_t k = 0; k < sys.dim(); ++k) {
        const double x = rho[static_cast<Eigen::Index>(k)];
        if (x == 0.0) {
            continue;
        }
        const std::size_t img = *sys.advance(k, t);
        c[static_cast<Eigen::Index>(img)] = std::exp(ev.log_weight(sys.age(k), t)) * x;
    }
    return HVector(sys.basis_id(), std::move(c));
}

BlockVector markov_step(const MarkovEvolution& ev, const BlockVector& rho, int t) {
    return BlockVector{rho.equilibrium, markov_step(ev, rho.fluctuation, t)};
}

LyapunovTrace lyapunov_trace(const MarkovEvolution& ev, const HVector& rho, int max_t) {
    if (max_t < 0) {
        throw PreconditionError("lyapunov_trace needs max_t >= 0");
    }
    const CascadeSystem& sys = ev.system();
    const LogDiagonal& logs = ev.lambda().log_diag();
    LyapunovTrace tr;
    tr.monotone = true;
    for (int t = 0; t <= max_t; ++t) {
        const HVector w = markov_step(ev, rho, t);
        const double norm = w.norm();

        // Quadratic form route: rho_t = U^t Lambda^{-1} rho kept as
        // log-magnitudes, then <rho_t | Lambda^2 rho_t> by log-sum-exp.
        std::vector<double> terms;
        for (std::size_t k = 0; k < sys.dim(); ++k) {
            const double x = rho[static_cast<Eigen::Index>(k)];
            if (x == 0.0) {
                continue;
            }
            const std::size_t img = *sys.advance(k, t);
            const double log_coeff = std::log(std::abs(x)) - logs.log(k);
            terms.push_back(2.0 * logs.log(img) + 2.0 * log_coeff);
        }
        double log_form = -std::numeric_limits<double>::infinity();
        if (!terms.empty()) {
            const double top = *std::max_element(terms.begin(), terms.end());
            double acc = 0.0;
            for (double l : terms) {
                acc += std::exp(l - top);
            }
            log_form = top + std::log(acc);
        }
        const double form = std::exp(log_form);

        // Compared as log(norm^2) against log(form): both sides may underflow
        // as doubles long before their logs lose precision.
        // Below the normal range the direct norm has lost relative precision,
        // so it is compared in absolute terms against DBL_MIN.
        double dev = 0.0;
        if (norm >= DBL_MIN) {
            dev = std::abs(std::expm1(log_form - 2.0 * std::log(norm)));
        } else {
            dev = std::abs(norm - std::exp(0.5 * log_form)) / DBL_MIN;
        }
        tr.max_form_deviation = std::max(tr.max_form_deviation, dev);
        if (!tr.norms.empty() && norm > tr.norms.back() * (1.0 + 1e-12)) {
            tr.monotone = false;
        }
        tr.t_values.push_back(t);
        tr.norms.push_back(norm);
        tr.lyapunov_form.push_back(form);
        if (sys.kind() == CascadeKind::baker) {
            tr.min_cells.push_back(walsh_to_grid(sys, BlockVector{1.0, w}).min());
        }
    }
    tr.forms_agree = tr.max_form_deviation <= 1e-10;
    tr.ratio_to_zero = tr.norms.front() == 0.0 ? 0.0 : tr.norms.back() / tr.norms.front();
    return tr;
}

HVector random_interior_vector(const CascadeSystem& system, int margin, std::mt19937_64& rng) {
    const AgeWindow& w = system.window();
    const int lo = w.lo + margin;
    const int hi = w.hi - margin;
    if (lo > hi) {
        throw PreconditionError("window too small for an interior margin of " + std::to_string(margin));
    }
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(system.dim()));
    for (std::size_t k = 0; k < system.dim(); ++k) {
        const double draw = gauss(rng);
        if (system.age(k) >= lo && system.age(k) <= hi) {
            c[static_cast<Eigen::Index>(k)] = draw;
        }
    }
    return HVector(system.basis_id(), std::move(c));
}

PositivityReport positivity_probe(const MarkovEvolution& ev, const GridDensity& rho, int t) {
    const CascadeSystem& sys = ev.system();
    if (sys.kind() != CascadeKind::baker) {
        throw PreconditionError("positivity_probe needs a baker system");
    }
    PositivityReport rep;
    rep.t = t;
    rep.input_min = rho.min();
    rep.input_mean = rho.mean();
    const BlockVector coeffs = grid_to_walsh(sys, rho);
    const BlockVector evolved = markov_step(ev, coeffs, t);
    rep.min_cell = walsh_to_grid(sys, evolved).min();
    rep.negative = rep.min_cell < 0.0;
    rep.violation = rep.negative ? -rep.min_cell : 0.0;
    return rep;
}

AsymmetryReport asymmetry_probe(const MarkovEvolution& ev, const HVector& rho, int t) {
    if (t < 0) {
        throw PreconditionError("asymmetry_probe needs t >= 0");
    }
    const LambdaOperator& lam = ev.lambda();
    const AgeWindow& w = ev.system().window();
    AsymmetryReport rep;
    rep.t = t;
    rep.forward_max_factor = 0.0;
    for (int n = w.lo; n + t <= w.hi; ++n) {
        rep.forward_max_factor = std::max(rep.forward_max_factor, std::exp(lam.log_at_age(n + t) - lam.log_at_age(n)));
    }
    rep.backward_log_factor = -std::numeric_limits<double>::infinity();
    for (int n = w.lo + t; n <= w.hi; ++n) {
        const double l = lam.log_at_age(n - t) - lam.log_at_age(n);
        if (l > rep.backward_log_factor) {
            rep.backward_log_factor = l;
            rep.backward_argmax_age = n;
        }
    }
    rep.backward_factor = std::exp(rep.backward_log_factor);
    try {
        const double base = rho.norm();
        if (base > 0.0) {
            rep.forward_norm_ratio = markov_step(ev, rho, t).norm() / base;
        }
    } catch (const MarginError&) {
        rep.forward_norm_ratio.reset();
    }
    return rep;
}

}  // namespace lambdalab
