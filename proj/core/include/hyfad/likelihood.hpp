#pragma once

#include <vector>

#include <Eigen/Dense>

#include "hyfad/channel.hpp"
#include "hyfad/signal.hpp"

namespace hyfad {

// Per-device ingredients of one AP's Gaussian model. The covariance
// contribution of device n is theta_n * X_n * X_n^H where
//
//   far field:  X_n = sqrt(g) * (I_K kron s_n),      J = K (never materialized)
//   near field: X_n = F_n kron s_n,                  J = number of scatterers
//
// and the mean contribution is theta_n * v_n, with v_n = 0 for far field.
struct DeviceModel {
    FieldClass kind = FieldClass::FarField;
    int J = 0;
    double sqrt_gain = 0.0;  // far field
    MatrixXcd x_cols;        // near field, LK x J
    VectorXcd v;             // near field mean component, LK
};

struct LocalModel {
    int L = 0;
    int K = 0;
    int N = 0;
    MatrixXcd S;  // L x N signature columns
    std::vector<DeviceModel> devices;

    int lk() const { return L * K; }
    bool all_far_field() const;
};

LocalModel build_local_model(const Deployment& dep, int ap,
                             const std::vector<ChannelStat>& stats, const MatrixXcd& S);

// Mutable solver state for one AP: the soft activity estimate together with
// the exactly maintained inverse covariance, log-determinant, and residual
// e = y - sum_n theta_n v_n. Single-writer; one state per worker.
struct PrecisionState {
    Eigen::VectorXd theta;
    MatrixXcd inv_cov;    // LK x LK Hermitian
    VectorXcd residual;   // LK
    double logdet = 0.0;
    VectorXcd y;          // received vector, retained for refactorization
};

// Dense assembly of C = I + sum_n theta_n X_n X_n^H.
MatrixXcd build_covariance(const LocalModel& model, const Eigen::VectorXd& theta);

PrecisionState init_precision(const LocalModel& model, const VectorXcd& y,
                              const Eigen::VectorXd& theta0);

// Rebuilds inv_cov, logdet, and residual from theta and y. Called
// periodically to arrest floating-point drift and as the fallback when an
// incremental update is refused.
void refactorize(PrecisionState& state, const LocalModel& model);

// log|C| + e^H C^{-1} e, evaluated from the maintained state.
double nll(const PrecisionState& state, const LocalModel& model);

// nll plus the consensus terms lambda^T (theta - a) + (mu/2) ||theta - a||^2.
double local_objective(const PrecisionState& state, const LocalModel& model,
                       const Eigen::VectorXd& lambda, double mu, const Eigen::VectorXd& a);

// Quartic surrogate q(d) = rho1*d + rho2*d^2 + rho3*d^3 + rho4*d^4 for a step
// theta_n += d. rho1 is the exact directional derivative of the penalized
// objective at d = 0.
struct SurrogateCoeffs {
    double rho1 = 0.0;
    double rho2 = 0.0;
    double rho3 = 0.0;
    double rho4 = 0.0;
};

// Cached per-coordinate products shared by the coefficient computation, the
// exact step evaluation, and the SMW commit:
//   T = C^{-1} X_n, G = X_n^H T, z = T^H e, z_v = T^H v_n.
struct CoordinateWork {
    MatrixXcd T;   // LK x J
    MatrixXcd G;   // J x J Hermitian PSD
    VectorXcd z;   // J
    VectorXcd z_v; // J, zero for far field
    std::complex<double> vAe{0.0, 0.0};
    double vAv = 0.0;
    bool has_mean = false;
};

CoordinateWork prepare_coordinate(const PrecisionState& state, const LocalModel& model, int n);

SurrogateCoeffs coeffs_from_work(const CoordinateWork& w, const PrecisionState& state,
                                 int n, double lambda_n, double mu, double a_n);

SurrogateCoeffs surrogate_coeffs(int n, const PrecisionState& state, const LocalModel& model,
                                 double lambda_n, double mu, double a_n);

// Exact change of the penalized local objective for theta_n += d, computed
// from the cached coordinate products in O(J^3); no state is modified.
double exact_delta_objective(const CoordinateWork& w, const PrecisionState& state,
                             int n, double d, double lambda_n, double mu, double a_n);

// theta_n += d with the inverse covariance updated by the exact
// Sherman-Morrison-Woodbury identity and logdet incremented by the exact
// log|I + d G|. A non-positive-definite J x J core refuses the shortcut and
// falls back to full refactorization, so the post-state is always consistent.
// Returns true when the incremental path was taken, false on the fallback.
bool apply_update(PrecisionState& state, const LocalModel& model, int n, double d);
bool apply_update(PrecisionState& state, const LocalModel& model, const CoordinateWork& w,
                  int n, double d);

}  // namespace hyfad
