#pragma once
#include <cstddef>
#include <string>
#include <vector>

#include "psahara/common.hpp"

namespace psahara {

// gamma * Uhat(x; alpha, beta, d) + u. alpha == 0 is a linear piece.
struct SaharaPiece {
    double alpha = 1.0;
    double beta = 1.0;
    double d = 0.0;
    double gamma = 1.0;
    double u = 0.0;
    bool hara_limit = false;

    bool linear() const { return alpha == 0.0; }
    bool operator==(const SaharaPiece&) const = default;
};

// throws ValidationError when the tuple breaks the piece invariants
void check_piece(const SaharaPiece& p);

double sahara_value(double x, const SaharaPiece& p);
double sahara_marginal(double x, const SaharaPiece& p);
double sahara_log_marginal(double x, const SaharaPiece& p);
double sahara_ara(double x, const SaharaPiece& p);
double sahara_inverse_marginal(double y, const SaharaPiece& p);

// Lower end of the piece's natural domain: d for HARA-limit pieces, -inf otherwise.
inline double piece_domain_lo(const SaharaPiece& p) { return p.hara_limit ? p.d : -kInf; }

class PiecewiseUtility {
public:
    PiecewiseUtility() = default;
    PiecewiseUtility(std::vector<double> breakpoints, std::vector<SaharaPiece> pieces);
    explicit PiecewiseUtility(const SaharaPiece& single) : PiecewiseUtility({}, {single}) {}

    std::size_t n() const { return breakpoints_.size(); }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<SaharaPiece>& pieces() const { return pieces_; }
    const SaharaPiece& piece(std::size_t k) const { return pieces_.at(k); }
    double breakpoint(std::size_t k) const { return breakpoints_.at(k - 1); }  // a_k, k = 1..n

    // gamma_k^- for k = 1..n+1 (gamma_{n+1}^- = 0) and gamma_k^+ for k = 0..n (gamma_0^+ = inf)
    double left_slope(std::size_t k) const { return left_slopes_.at(k); }
    double right_slope(std::size_t k) const { return right_slopes_.at(k); }
    const std::vector<double>& left_slopes() const { return left_slopes_; }
    const std::vector<double>& right_slopes() const { return right_slopes_; }

    double domain_lo() const { return piece_domain_lo(pieces_.front()); }
    std::size_t locate(double x) const;  // index of the piece used at x; a_k belongs to piece k
    double operator()(double x) const;
    double marginal(double x) const;     // right derivative

private:
    std::vector<double> breakpoints_;
    std::vector<SaharaPiece> pieces_;
    std::vector<double> left_slopes_;   // size n+2, entry 0 unused (NaN)
    std::vector<double> right_slopes_;  // size n+1
};

double psahara_eval(const PiecewiseUtility& U, double x);

struct ContractSegment {
    double from;  // -inf for the first segment
    double slope;
    double intercept;
};

class LinearContract {
public:
    explicit LinearContract(std::vector<ContractSegment> segments);
    static LinearContract identity();
    static LinearContract affine(double A, double B);
    // w (x - B_T)^+ + v x
    static LinearContract incentive(double w, double v, double B_T);

    const std::vector<ContractSegment>& segments() const { return segments_; }
    double operator()(double x) const;
    double inverse(double value) const;

private:
    std::vector<ContractSegment> segments_;
};

PiecewiseUtility compose_with_contract(const PiecewiseUtility& U, const LinearContract& h);

// Raw (possibly discontinuous, non-concave) piecewise specifications.
// A power arc is coef * |x - anchor|^exponent + shift with the anchor outside the cell.
struct RawPiece {
    enum class Kind { sahara, linear, power };
    Kind kind = Kind::sahara;
    SaharaPiece sahara{};
    double slope = 0.0, intercept = 0.0;
    double coef = 0.0, anchor = 0.0, exponent = 1.0, shift = 0.0;

    static RawPiece from_sahara(const SaharaPiece& p);
    static RawPiece linear_piece(double slope, double intercept);
    static RawPiece power(double coef, double anchor, double exponent, double shift);

    double value(double x) const;
    double deriv(double x) const;
};

struct RawUtility {
    std::vector<double> breakpoints;
    std::vector<RawPiece> pieces;

    static RawUtility from(const PiecewiseUtility& U);
    void check() const;
    std::size_t locate(double x) const;
    double operator()(double x) const;
    double left_limit(std::size_t k) const;   // limit of piece k-1 at a_k
    double domain_lo() const;
};

struct BreakpointCheck {
    double at;
    double left_value;
    double right_value;
    double residual;
    double left_slope;   // derivative of the left piece at a_k^-
    double right_slope;  // derivative of the right piece at a_k^+
    bool continuous;
};

struct Interval {
    double lo;
    double hi;
};

struct ValidationReport {
    std::vector<BreakpointCheck> breakpoints;
    std::vector<Interval> decreasing;   // grid intervals where U fails to increase
    std::vector<std::string> problems;  // human-readable summary, empty when clean
    bool slope_chain_consistent = true; // stored slopes match the pieces (PSAHARA input only)
    bool clean() const { return problems.empty(); }
};

struct GridSpec {
    double lo = kInf;   // infinite -> derived from breakpoints
    double hi = -kInf;
    std::size_t points = 10001;
};

ValidationReport validate(const RawUtility& U, const GridSpec& grid = {});
ValidationReport validate(const PiecewiseUtility& U, const GridSpec& grid = {});

}  // namespace psahara
