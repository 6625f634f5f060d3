#pragma once

#include <complex>

#include <Eigen/Dense>

#include "hyfad/geometry.hpp"
#include "hyfad/rng.hpp"

namespace hyfad {

using VectorXcd = Eigen::VectorXcd;
using MatrixXcd = Eigen::MatrixXcd;

// Log-distance path loss with noise normalization. All gains handed to the
// estimator are divided by the linear noise power, so the effective noise
// variance downstream is exactly 1.
struct PathLossModel {
    double intercept_db = 128.1;
    double slope_db_per_decade = 37.6;
    double noise_power_dbm = -99.0;

    double raw_linear(double distance_m) const;   // before noise normalization
    double noise_linear() const;                  // linear watts of noise_power_dbm
    double normalized(double distance_m) const;   // raw_linear / noise_linear
};

// Second-order statistics of one (AP, device) link.
//
// Far field:  h ~ CN(0, g I_K), only `far_gain` is meaningful.
// Near field: h ~ CN(mean, factor * factor^H); the factor has one column per
// scatterer, so the covariance has rank at most L_m.
struct ChannelStat {
    FieldClass kind = FieldClass::FarField;
    int K = 0;
    double far_gain = 0.0;
    VectorXcd mean;     // K, near field only
    MatrixXcd factor;   // K x J, near field only
};

// Normalized linear gain with the default model parameters.
double path_loss_linear(double distance_m);

// Entry k = exp(-j*2*pi*r_k/lambda_c). Unit modulus by construction.
VectorXcd array_response(const Eigen::VectorXd& r, double lambda_c);

ChannelStat build_channel_stat(const Deployment& dep, int ap, int device,
                               const PathLossModel& pl, FieldClass field);

// One channel realization: far field sqrt(g)*w, near field mean + F*z,
// with w, z standard complex Gaussian.
VectorXcd sample_channel(const ChannelStat& stat, RngStream& rng);

}  // namespace hyfad
