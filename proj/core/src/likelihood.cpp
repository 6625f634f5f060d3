#include "hyfad/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hyfad {

namespace {

double logdet_from_llt(const Eigen::LLT<MatrixXcd>& llt) {
    double acc = 0.0;
    const auto& l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < l.rows(); ++i) acc += std::log(l(i, i).real());
    return 2.0 * acc;
}

void symmetrize(MatrixXcd& h) {
    h = 0.5 * (h + h.adjoint()).eval();
}

}  // namespace

bool LocalModel::all_far_field() const {
    for (const auto& d : devices)
        if (d.kind == FieldClass::NearField) return false;
    return true;
}

LocalModel build_local_model(const Deployment& dep, int ap,
                             const std::vector<ChannelStat>& stats, const MatrixXcd& S) {
    if (static_cast<int>(stats.size()) != S.cols())
        throw std::invalid_argument("build_local_model: stats/signature count mismatch");
    LocalModel model;
    model.L = static_cast<int>(S.rows());
    model.K = dep.K;
    model.N = static_cast<int>(S.cols());
    model.S = S;
    model.devices.resize(static_cast<std::size_t>(model.N));
    for (int n = 0; n < model.N; ++n) {
        const ChannelStat& st = stats[static_cast<std::size_t>(n)];
        DeviceModel& dm = model.devices[static_cast<std::size_t>(n)];
        dm.kind = st.kind;
        if (st.kind == FieldClass::FarField) {
            dm.J = model.K;
            dm.sqrt_gain = std::sqrt(st.far_gain);
        } else {
            dm.J = static_cast<int>(st.factor.cols());
            dm.x_cols.resize(model.lk(), dm.J);
            for (int j = 0; j < dm.J; ++j)
                dm.x_cols.col(j) = kron_channel_signature(st.factor.col(j), S.col(n));
            dm.v = kron_channel_signature(st.mean, S.col(n));
        }
    }
    (void)ap;
    return model;
}

MatrixXcd build_covariance(const LocalModel& model, const Eigen::VectorXd& theta) {
    const int LK = model.lk();
    MatrixXcd C = MatrixXcd::Identity(LK, LK);
    for (int n = 0; n < model.N; ++n) {
        const double t = theta[n];
        if (t == 0.0) continue;
        const DeviceModel& dm = model.devices[static_cast<std::size_t>(n)];
        if (dm.kind == FieldClass::FarField) {
            // theta * g * (I_K kron s s^H): identical L x L blocks on the diagonal.
            const VectorXcd s = model.S.col(n);
            const MatrixXcd blk = (t * dm.sqrt_gain * dm.sqrt_gain) * (s * s.adjoint());
            for (int k = 0; k < model.K; ++k)
                C.block(k * model.L, k * model.L, model.L, model.L) += blk;
        } else {
            C.noalias() += t * (dm.x_cols * dm.x_cols.adjoint());
        }
    }
    symmetrize(C);
    return C;
}

namespace {

VectorXcd mean_of(const LocalModel& model, const Eigen::VectorXd& theta) {
    VectorXcd mean = VectorXcd::Zero(model.lk());
    for (int n = 0; n < model.N; ++n) {
        const DeviceModel& dm = model.devices[static_cast<std::size_t>(n)];
        if (dm.kind == FieldClass::NearField && theta[n] != 0.0) mean += theta[n] * dm.v;
    }
    return mean;
}

}  // namespace

PrecisionState init_precision(const LocalModel& model, const VectorXcd& y,
                              const Eigen::VectorXd& theta0) {
    if (y.size() != model.lk()) throw std::invalid_argument("init_precision: y has wrong length");
    if (theta0.size() != model.N) throw std::invalid_argument("init_precision: theta0 has wrong length");
    for (int n = 0; n < model.N; ++n)
        if (theta0[n] < 0.0 || theta0[n] > 1.0)
            throw std::invalid_argument("init_precision: theta0 outside [0,1]");
    PrecisionState state;
    state.theta = theta0;
    state.y = y;
    refactorize(state, model);
    return state;
}

void refactorize(PrecisionState& state, const LocalModel& model) {
    const MatrixXcd C = build_covariance(model, state.theta);
    Eigen::LLT<MatrixXcd> llt(C);
    // C >= I by construction, so the factorization cannot fail for valid theta.
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("refactorize: covariance factorization failed");
    state.inv_cov = llt.solve(MatrixXcd::Identity(model.lk(), model.lk()));
    symmetrize(state.inv_cov);
    state.logdet = logdet_from_llt(llt);
    state.residual = state.y - mean_of(model, state.theta);
}

double nll(const PrecisionState& state, const LocalModel& model) {
    (void)model;
    const std::complex<double> quad = state.residual.dot(state.inv_cov * state.residual);
    return state.logdet + quad.real();
}

double local_objective(const PrecisionState& state, const LocalModel& model,
                       const Eigen::VectorXd& lambda, double mu, const Eigen::VectorXd& a) {
    const Eigen::VectorXd diff = state.theta - a;
    return nll(state, model) + lambda.dot(diff) + 0.5 * mu * diff.squaredNorm();
}

CoordinateWork prepare_coordinate(const PrecisionState& state, const LocalModel& model, int n) {
    const DeviceModel& dm = model.devices.at(static_cast<std::size_t>(n));
    const MatrixXcd& A = state.inv_cov;
    const int LK = model.lk();

    CoordinateWork w;
    w.has_mean = dm.kind == FieldClass::NearField;
    if (dm.kind == FieldClass::FarField) {
        // X = sqrt(g) * (I_K kron s): T comes from K slab products against the
        // L-wide block columns of A, never from a materialized X.
        const VectorXcd s = model.S.col(n);
        w.T.resize(LK, model.K);
        for (int k = 0; k < model.K; ++k)
            w.T.col(k).noalias() = dm.sqrt_gain * (A.middleCols(k * model.L, model.L) * s);
        w.G.resize(model.K, model.K);
        for (int k = 0; k < model.K; ++k)
            for (int j = 0; j < model.K; ++j)
                w.G(j, k) = dm.sqrt_gain * s.dot(w.T.col(k).segment(j * model.L, model.L));
        w.z.noalias() = w.T.adjoint() * state.residual;
        w.z_v = VectorXcd::Zero(model.K);
    } else {
        w.T.noalias() = A * dm.x_cols;
        w.G.noalias() = dm.x_cols.adjoint() * w.T;
        w.z.noalias() = w.T.adjoint() * state.residual;
        w.z_v.noalias() = w.T.adjoint() * dm.v;
        const VectorXcd Av = A * dm.v;
        w.vAe = Av.dot(state.residual);  // v^H C^{-1} e
        w.vAv = Av.dot(dm.v).real();
    }
    symmetrize(w.G);
    return w;
}

SurrogateCoeffs coeffs_from_work(const CoordinateWork& w, const PrecisionState& state,
                                 int n, double lambda_n, double mu, double a_n) {
    SurrogateCoeffs c;
    const double tr_g = w.G.trace().real();
    const VectorXcd Gz = w.G * w.z;
    c.rho1 = tr_g - 2.0 * w.vAe.real() - w.z.squaredNorm() + lambda_n +
             mu * (state.theta[n] - a_n);
    c.rho2 = w.vAv + 2.0 * w.z.dot(w.z_v).real() + w.z.dot(Gz).real() + 0.5 * mu;
    if (w.has_mean) {
        const VectorXcd Gzv = w.G * w.z_v;
        c.rho3 = -2.0 * w.z.dot(Gzv).real() - w.z_v.squaredNorm();
        c.rho4 = w.z_v.dot(Gzv).real();
    }
    return c;
}

SurrogateCoeffs surrogate_coeffs(int n, const PrecisionState& state, const LocalModel& model,
                                 double lambda_n, double mu, double a_n) {
    const CoordinateWork w = prepare_coordinate(state, model, n);
    return coeffs_from_work(w, state, n, lambda_n, mu, a_n);
}

double exact_delta_objective(const CoordinateWork& w, const PrecisionState& state,
                             int n, double d, double lambda_n, double mu, double a_n) {
    if (d == 0.0) return 0.0;
    const Eigen::Index J = w.G.rows();
    MatrixXcd core = MatrixXcd::Identity(J, J) + d * w.G;
    Eigen::LLT<MatrixXcd> llt(core);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const double dlogdet = logdet_from_llt(llt);

    const VectorXcd ze = w.z - d * w.z_v;
    const double reduction = ze.dot(llt.solve(ze)).real();
    double dquad = -d * reduction;
    if (w.has_mean)
        dquad += -2.0 * d * w.vAe.real() + d * d * w.vAv;

    const double t = state.theta[n] - a_n;
    return dlogdet + dquad + lambda_n * d + mu * (t * d + 0.5 * d * d);
}

bool apply_update(PrecisionState& state, const LocalModel& model, int n, double d) {
    if (d == 0.0) return true;
    const CoordinateWork w = prepare_coordinate(state, model, n);
    return apply_update(state, model, w, n, d);
}

bool apply_update(PrecisionState& state, const LocalModel& model, const CoordinateWork& w,
                  int n, double d) {
    if (d == 0.0) return true;
    const double target = state.theta[n] + d;
    if (target < -1e-12 || target > 1.0 + 1e-12)
        throw std::invalid_argument("apply_update: step leaves [0,1]");

    const Eigen::Index J = w.G.rows();
    MatrixXcd core = MatrixXcd::Identity(J, J) + d * w.G;
    Eigen::LLT<MatrixXcd> llt(core);
    if (llt.info() != Eigen::Success) {
        // Indefinite core (numerically): take the safe path.
        state.theta[n] = std::clamp(target, 0.0, 1.0);
        refactorize(state, model);
        return false;
    }

    const MatrixXcd W = llt.solve(w.T.adjoint());
    state.inv_cov.noalias() -= d * (w.T * W);
    symmetrize(state.inv_cov);
    state.logdet += logdet_from_llt(llt);
    state.theta[n] = std::clamp(target, 0.0, 1.0);
    if (w.has_mean)
        state.residual -= d * model.devices[static_cast<std::size_t>(n)].v;
    return true;
}

}  // namespace hyfad
