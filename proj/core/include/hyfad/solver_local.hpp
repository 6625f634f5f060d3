#pragma once

#include <vector>

#include "hyfad/likelihood.hpp"

namespace hyfad {

struct CdConfig {
    double omega = 1.0;        // surrogate damping; adaptively doubled on ascent
    int max_sweeps = 20;
    double tol = 1e-4;         // sweep-max |d| stopping threshold
    bool adaptive_omega = true;
    int refresh_period = 5;    // full refactorization cadence, in sweeps
};

struct LocalSolveReport {
    int sweeps = 0;
    double omega_final = 0.0;
    double final_nll = 0.0;   // data term only, no dual/penalty
    // When record_objective is set before the call, objective_trace collects
    // the penalized objective after every accepted coordinate step, advanced
    // by the solver's own exact step accounting (entry value first).
    bool record_objective = false;
    std::vector<double> objective_trace;
};

// Minimizes q(d) = rho1*d + (rho2 + omega/2)*d^2 + rho3*d^3 + rho4*d^4 over
// [lo, hi]. Stationary points come from the cubic q'(d) = 0 via a guarded
// closed form with a companion-matrix fallback; candidates are the interior
// roots plus both endpoints, ties broken toward the smallest |d|.
double solve_coordinate(const SurrogateCoeffs& c, double omega, double lo, double hi);

// Convenience form matching the coordinate subproblem: computes the
// coefficients at coordinate n and solves over the admissible step interval
// [-theta_n, 1-theta_n].
double solve_coordinate(int n, const PrecisionState& state, const LocalModel& model,
                        double lambda_n, double mu, double a_n, double omega);

// Randomized coordinate descent on the penalized local objective
//   f_m(theta) + lambda^T (theta - a) + (mu/2)||theta - a||^2,
// sweeping fresh random permutations until the largest step in a sweep drops
// below tol or max_sweeps is reached. With adaptive_omega, a step that would
// increase the exact objective doubles omega and re-solves that coordinate,
// so accepted steps never ascend.
Eigen::VectorXd local_solve(PrecisionState& state, const LocalModel& model,
                            const Eigen::VectorXd& a, const Eigen::VectorXd& lambda,
                            double mu, const CdConfig& cfg, RngStream& perm_rng,
                            LocalSolveReport* report = nullptr);

// Shared engine for APs whose devices are all far field. The covariance is
// then I_K kron C_L with one L x L block repeated across antennas, so the
// whole state is a single L x L inverse updated rank-1 per step; coefficients
// and exact step changes match the generic LK-dimensional path analytically.
class FarFieldEngine {
public:
    FarFieldEngine(const LocalModel& model, const VectorXcd& y, const Eigen::VectorXd& theta0);

    // Data-term surrogate coefficients at coordinate n (no dual/penalty).
    SurrogateCoeffs raw_coeffs(int n);

    // Exact data-term change for theta_n += d; uses the products cached by
    // the last raw_coeffs(n) call.
    double exact_delta(int n, double d) const;

    void commit(int n, double d);
    void refresh();
    double nll() const;

    const Eigen::VectorXd& theta() const { return theta_; }
    int size() const { return static_cast<int>(theta_.size()); }

private:
    const LocalModel* model_;
    Eigen::VectorXd gains_;   // per-device linear power gain
    MatrixXcd yb_;            // L x K, antenna-major reshape of y
    MatrixXcd cl_inv_;        // L x L shared block inverse
    double logdet_l_ = 0.0;
    Eigen::VectorXd theta_;

    // Cache of the last prepared coordinate.
    int cached_n_ = -1;
    VectorXcd q_;             // cl_inv * s_n
    double u_ = 0.0;          // s_n^H cl_inv s_n
    double t_ = 0.0;          // sum_k |s_n^H cl_inv y_k|^2
};

// Coordinate descent specialized to the all-far-field covariance structure.
// Initializes theta at a, applies the same root selection and adaptive-omega
// rule as local_solve, and must agree with the generic path on the same
// instance. Throws if any device of the model is near field.
Eigen::VectorXd far_field_fast_path(const LocalModel& model, const VectorXcd& y,
                                    const Eigen::VectorXd& a, const Eigen::VectorXd& lambda,
                                    double mu, const CdConfig& cfg, RngStream& perm_rng,
                                    LocalSolveReport* report = nullptr);

// Classical rank-1 covariance CD baseline: treats every device as far field
// with the given gains and takes the exact coordinate minimizer
//   d* = (s^H C^{-1} Shat C^{-1} s - s^H C^{-1} s) / (g * (s^H C^{-1} s)^2)
// of the diagonal-covariance likelihood, clamped to the admissible interval
// (Shat is the across-antenna sample covariance).
Eigen::VectorXd mismatched_cd(const VectorXcd& y, const MatrixXcd& S,
                              const Eigen::VectorXd& gains, int K, const CdConfig& cfg,
                              RngStream& perm_rng);

}  // namespace hyfad
