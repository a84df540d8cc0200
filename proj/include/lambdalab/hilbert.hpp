#pragma once
//
// Finite-dimensional real Hilbert-space scaffolding: coefficient vectors,
// dense operators with an optional diagonal fast path, and the discrete
// spectral calculus used for lambda(T) and fractional powers.
//

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lambdalab {

using BasisId = std::string;

// Non-negative rational grade n = num/den. Kept exact so tower grades such as
// p/(p+1) print and compare without floating noise.
class Rational {
public:
    Rational() = default;
    Rational(std::int64_t num, std::int64_t den = 1);

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
    std::string str() const;

    // Accepts "p", "p/q" or a decimal that is an exact binary fraction ("0.5").
    static Rational parse(const std::string& text);

    friend Rational operator+(const Rational& a, const Rational& b);
    friend bool operator==(const Rational& a, const Rational& b) = default;
    friend bool operator<(const Rational& a, const Rational& b);
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

class HVector {
public:
    HVector() = default;
    HVector(BasisId basis, Eigen::VectorXd coeffs);

    static HVector zeros(BasisId basis, Eigen::Index dim);
    static HVector unit(BasisId basis, Eigen::Index dim, Eigen::Index k);

    const BasisId& basis() const { return basis_; }
    const Eigen::VectorXd& coeffs() const { return coeffs_; }
    Eigen::Index dim() const { return coeffs_.size(); }
    double operator[](Eigen::Index k) const { return coeffs_[k]; }

    double norm() const { return coeffs_.stableNorm(); }

    HVector operator+(const HVector& other) const;
    HVector operator-(const HVector& other) const;
    HVector operator*(double s) const;

private:
    BasisId basis_;
    Eigen::VectorXd coeffs_;
};

// <u|v> = sum_k u_k v_k. Throws DimensionError on basis or size mismatch.
double inner(const HVector& u, const HVector& v);

class HOperator {
public:
    HOperator() = default;

    static HOperator dense(BasisId basis, Eigen::MatrixXd matrix);
    static HOperator diagonal(BasisId basis, std::vector<double> entries);
    static HOperator identity(BasisId basis, Eigen::Index dim);

    const BasisId& basis() const { return basis_; }
    const Eigen::MatrixXd& matrix() const { return matrix_; }
    Eigen::Index dim() const { return matrix_.rows(); }

    bool is_diagonal() const { return diag_.has_value(); }
    // Eigenvalue per basis label; present only for diagonal operators.
    const std::optional<std::vector<double>>& diag_labels() const { return diag_; }

    HVector apply(const HVector& v) const;
    HOperator adjoint() const;
    HOperator operator*(const HOperator& rhs) const;
    HOperator operator+(const HOperator& rhs) const;
    HOperator operator-(const HOperator& rhs) const;

private:
    HOperator(BasisId basis, Eigen::MatrixXd matrix, std::optional<std::vector<double>> diag);

    BasisId basis_;
    Eigen::MatrixXd matrix_;
    std::optional<std::vector<double>> diag_;
};

// Discrete spectral calculus: diag(d_k) -> diag(f(d_k)). A NaN result is
// treated as "f undefined" and reported with the offending eigenvalue.
HOperator apply_diag_function(const std::function<double(double)>& f, const HOperator& d);

// A^n for a positive diagonal A, evaluated as exp(n log a_k).
HOperator fractional_power(const HOperator& a, const Rational& n);

// Diagonal operator stored by the natural log of its (positive) entries.
// Used wherever entries span hundreds of orders of magnitude (lambda(T),
// its inverse, fractional powers) and exp() of the entry would underflow.
class LogDiagonal {
public:
    LogDiagonal() = default;
    explicit LogDiagonal(std::vector<double> logs) : logs_(std::move(logs)) {}

    // Takes logs of a positive diagonal operator; DomainError otherwise.
    static LogDiagonal from_operator(const HOperator& d);

    std::size_t size() const { return logs_.size(); }
    double log(std::size_t k) const { return logs_[k]; }
    double value(std::size_t k) const;
    const std::vector<double>& logs() const { return logs_; }

    LogDiagonal power(double n) const;
    LogDiagonal inverse() const { return power(-1.0); }

    HOperator to_operator(const BasisId& basis) const;

private:
    std::vector<double> logs_;
};

}  // namespace lambdalab
