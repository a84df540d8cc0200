#include "lambdalab/hilbert.hpp"

#include "lambdalab/errors.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace lambdalab {

// ---------------------------------------------------------------- Rational

Rational::Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) {
        throw DomainError("rational with zero denominator");
    }
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    num_ = g == 0 ? 0 : num / g;
    den_ = g == 0 ? 1 : den / g;
}

std::string Rational::str() const {
    if (den_ == 1) {
        return std::to_string(num_);
    }
    return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::parse(const std::string& text) {
    const auto slash = text.find('/');
    try {
        if (slash != std::string::npos) {
            return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
        }
        if (text.find_first_of(".eE") == std::string::npos) {
            return Rational(std::stoll(text));
        }
        const double x = std::stod(text);
        for (std::int64_t den = 1; den <= (std::int64_t{1} << 30); den *= 2) {
            const double scaled = x * static_cast<double>(den);
            if (scaled == std::floor(scaled)) {
                return Rational(static_cast<std::int64_t>(scaled), den);
            }
        }
    } catch (const std::logic_error&) {
        // fall through to the error below
    }
    throw DomainError("cannot parse '" + text + "' as a rational grade (use p/q)");
}

Rational operator+(const Rational& a, const Rational& b) {
    return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
}

bool operator<(const Rational& a, const Rational& b) {
    return a.num_ * b.den_ < b.num_ * a.den_;
}

// ----------------------------------------------------------------- HVector

HVector::HVector(BasisId basis, Eigen::VectorXd coeffs)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {}

HVector HVector::zeros(BasisId basis, Eigen::Index dim) {
    return HVector(std::move(basis), Eigen::VectorXd::Zero(dim));
}

HVector HVector::unit(BasisId basis, Eigen::Index dim, Eigen::Index k) {
    if (k < 0 || k >= dim) {
        throw DimensionError("unit vector index out of range");
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(dim);
    c[k] = 1.0;
    return HVector(std::move(basis), std::move(c));
}

namespace {

void require_same_space(const BasisId& a, Eigen::Index da, const BasisId& b, Eigen::Index db) {
    if (a != b) {
        throw DimensionError("basis mismatch: '" + a + "' vs '" + b + "'");
    }
    if (da != db) {
        std::ostringstream os;
        os << "dimension mismatch: " << da << " vs " << db;
        throw DimensionError(os.str());
    }
}

}  // namespace

HVector HVector::operator+(const HVector& other) const {
    require_same_space(basis_, dim(), other.basis_, other.dim());
    return HVector(basis_, coeffs_ + other.coeffs_);
}

HVector HVector::operator-(const HVector& other) const {
    require_same_space(basis_, dim(), other.basis_, other.dim());
    return HVector(basis_, coeffs_ - other.coeffs_);
}

HVector HVector::operator*(double s) const {
    return HVector(basis_, coeffs_ * s);
}

double inner(const HVector& u, const HVector& v) {
    require_same_space(u.basis(), u.dim(), v.basis(), v.dim());
    return u.coeffs().dot(v.coeffs());
}

// --------------------------------------------------------------- HOperator

HOperator::HOperator(BasisId basis, Eigen::MatrixXd matrix, std::optional<std::vector<double>> diag)
    : basis_(std::move(basis)), matrix_(std::move(matrix)), diag_(std::move(diag)) {}

HOperator HOperator::dense(BasisId basis, Eigen::MatrixXd matrix) {
    if (matrix.rows() != matrix.cols()) {
        throw DimensionError("operator matrix must be square");
    }
    return HOperator(std::move(basis), std::move(matrix), std::nullopt);
}

HOperator HOperator::diagonal(BasisId basis, std::vector<double> entries) {
    const auto n = static_cast<Eigen::Index>(entries.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        m(k, k) = entries[static_cast<std::size_t>(k)];
    }
    return HOperator(std::move(basis), std::move(m), std::move(entries));
}

HOperator HOperator::identity(BasisId basis, Eigen::Index dim) {
    return diagonal(std::move(basis), std::vector<double>(static_cast<std::size_t>(dim), 1.0));
}

HVector HOperator::apply(const HVector& v) const {
    require_same_space(basis_, dim(), v.basis(), v.dim());
    if (diag_) {
        Eigen::VectorXd out(v.dim());
        for (Eigen::Index k = 0; k < v.dim(); ++k) {
            out[k] = (*diag_)[static_cast<std::size_t>(k)] * v[k];
        }
        return HVector(basis_, std::move(out));
    }
    return HVector(basis_, matrix_ * v.coeffs());
}

HOperator HOperator::adjoint() const {
    // real scalars: adjoint is the transpose, and diagonals are self-adjoint
    return HOperator(basis_, matrix_.transpose(), diag_);
}

HOperator HOperator::operator*(const HOperator& rhs) const {
    require_same_space(basis_, dim(), rhs.basis_, rhs.dim());
    if (diag_ && rhs.diag_) {
        std::vector<double> d(diag_->size());
        for (std::size_t k = 0; k < d.size(); ++k) {
            d[k] = (*diag_)[k] * (*rhs.diag_)[k];
        }
        return diagonal(basis_, std::move(d));
    }
    return HOperator(basis_, matrix_ * rhs.matrix_, std::nullopt);
}

HOperator HOperator::operator+(const HOperator& rhs) const {
    require_same_space(basis_, dim(), rhs.basis_, rhs.dim());
    if (diag_ && rhs.diag_) {
        std::vector<double> d(diag_->size());
        for (std::size_t k = 0; k < d.size(); ++k) {
            d[k] = (*diag_)[k] + (*rhs.diag_)[k];
        }
        return diagonal(basis_, std::move(d));
    }
    return HOperator(basis_, matrix_ + rhs.matrix_, std::nullopt);
}

HOperator HOperator::operator-(const HOperator& rhs) const {
    require_same_space(basis_, dim(), rhs.basis_, rhs.dim());
    if (diag_ && rhs.diag_) {
        std::vector<double> d(diag_->size());
        for (std::size_t k = 0; k < d.size(); ++k) {
            d[k] = (*diag_)[k] - (*rhs.diag_)[k];
        }
        return diagonal(basis_, std::move(d));
    }
    return HOperator(basis_, matrix_ - rhs.matrix_, std::nullopt);
}

// ------------------------------------------------------- spectral calculus

HOperator apply_diag_function(const std::function<double(double)>& f, const HOperator& d) {
    if (!d.is_diagonal()) {
        throw PreconditionError("apply_diag_function needs an operator diagonal in its basis");
    }
    const auto& eig = *d.diag_labels();
    std::vector<double> out(eig.size());
    for (std::size_t k = 0; k < eig.size(); ++k) {
        out[k] = f(eig[k]);
        if (std::isnan(out[k])) {
            std::ostringstream os;
            os << "function undefined at eigenvalue " << eig[k] << " (label " << k << ")";
            throw DomainError(os.str());
        }
    }
    return HOperator::diagonal(d.basis(), std::move(out));
}

HOperator fractional_power(const HOperator& a, const Rational& n) {
    if (n < Rational(0)) {
        throw PreconditionError("fractional_power needs a non-negative exponent");
    }
    const LogDiagonal logs = LogDiagonal::from_operator(a);
    if (n == Rational(0)) {
        return HOperator::identity(a.basis(), a.dim());
    }
    if (n == Rational(1)) {
        return a;
    }
    return logs.power(n.value()).to_operator(a.basis());
}

// ------------------------------------------------------------- LogDiagonal

LogDiagonal LogDiagonal::from_operator(const HOperator& d) {
    if (!d.is_diagonal()) {
        throw PreconditionError("expected an operator diagonal in its basis");
    }
    const auto& eig = *d.diag_labels();
    std::vector<double> logs(eig.size());
    for (std::size_t k = 0; k < eig.size(); ++k) {
        if (!(eig[k] > 0.0)) {
            std::ostringstream os;
            os << "nonpositive diagonal entry " << eig[k] << " at label " << k;
            throw DomainError(os.str());
        }
        logs[k] = std::log(eig[k]);
    }
    return LogDiagonal(std::move(logs));
}

double LogDiagonal::value(std::size_t k) const {
    return std::exp(logs_[k]);
}

LogDiagonal LogDiagonal::power(double n) const {
    std::vector<double> out(logs_.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = n * logs_[k];
    }
    return LogDiagonal(std::move(out));
}

HOperator LogDiagonal::to_operator(const BasisId& basis) const {
    std::vector<double> entries(logs_.size());
    for (std::size_t k = 0; k < entries.size(); ++k) {
        entries[k] = std::exp(logs_[k]);
    }
    return HOperator::diagonal(basis, std::move(entries));
}

}  // namespace lambdalab
