#pragma once

#include <cmath>
#include <vector>

#include "hyfad/likelihood.hpp"
#include "hyfad/signal.hpp"

namespace hyfad::testing {

// Hand-built link statistics with moderate gains. Geometry-derived gains span
// 1e3..1e7 after noise normalization, which is the right regime for the
// simulator but a hostile one for finite differences; these keep conditioning
// tame so numerical oracles stay meaningful.
inline ChannelStat far_stat(int K, double gain) {
    ChannelStat st;
    st.kind = FieldClass::FarField;
    st.K = K;
    st.far_gain = gain;
    return st;
}

inline ChannelStat near_stat(int K, int J, double scale, RngStream& rng) {
    ChannelStat st;
    st.kind = FieldClass::NearField;
    st.K = K;
    st.mean.resize(K);
    for (int k = 0; k < K; ++k) st.mean[k] = scale * rng.complex_normal();
    st.factor.resize(K, J);
    for (int j = 0; j < J; ++j)
        for (int k = 0; k < K; ++k)
            st.factor(k, j) = (scale / std::sqrt(static_cast<double>(J))) * rng.complex_normal();
    return st;
}

struct SyntheticInstance {
    LocalModel model;
    std::vector<ChannelStat> stats;
    MatrixXcd S;
};

// LocalModel assembled directly from hand-built stats and the given
// signatures, bypassing geometry. Devices [0, num_near) are near field with J
// factor columns each, the rest far field with gains uniform on
// [gain_lo, gain_hi]. Multi-AP problems call this once per AP with a shared S.
inline SyntheticInstance instance_with_signatures(const MatrixXcd& S, int K, int num_near, int J,
                                                  double gain_lo, double gain_hi, RngStream& rng) {
    const int L = static_cast<int>(S.rows());
    const int N = static_cast<int>(S.cols());
    SyntheticInstance inst;
    inst.S = S;
    inst.stats.reserve(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n) {
        if (n < num_near) {
            inst.stats.push_back(near_stat(K, J, std::sqrt(rng.uniform(gain_lo, gain_hi)), rng));
        } else {
            inst.stats.push_back(far_stat(K, rng.uniform(gain_lo, gain_hi)));
        }
    }

    inst.model.L = L;
    inst.model.K = K;
    inst.model.N = N;
    inst.model.S = inst.S;
    inst.model.devices.resize(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n) {
        const ChannelStat& st = inst.stats[static_cast<std::size_t>(n)];
        DeviceModel& dm = inst.model.devices[static_cast<std::size_t>(n)];
        dm.kind = st.kind;
        if (st.kind == FieldClass::FarField) {
            dm.J = K;
            dm.sqrt_gain = std::sqrt(st.far_gain);
        } else {
            dm.J = J;
            dm.x_cols.resize(L * K, J);
            for (int j = 0; j < J; ++j)
                dm.x_cols.col(j) = kron_channel_signature(st.factor.col(j), inst.S.col(n));
            dm.v = kron_channel_signature(st.mean, inst.S.col(n));
        }
    }
    return inst;
}

inline SyntheticInstance synthetic_instance(int L, int K, int N, int num_near, int J,
                                            double gain_lo, double gain_hi, RngStream& rng) {
    const MatrixXcd S = generate_signatures(N, L, rng);
    return instance_with_signatures(S, K, num_near, J, gain_lo, gain_hi, rng);
}

// y = sum_n active_n * (h_n kron s_n) + noise, with h_n drawn from the
// per-device statistics. Independent of synthesize_received so the two
// construction paths can check each other.
inline VectorXcd draw_received(const SyntheticInstance& inst, const ActivityVector& active,
                               RngStream& rng, bool with_noise = true) {
    const int LK = inst.model.lk();
    VectorXcd y = VectorXcd::Zero(LK);
    for (int n = 0; n < inst.model.N; ++n) {
        if (!active[static_cast<std::size_t>(n)]) continue;
        y += kron_channel_signature(sample_channel(inst.stats[static_cast<std::size_t>(n)], rng),
                                    inst.S.col(n));
    }
    if (with_noise)
        for (int i = 0; i < LK; ++i) y[i] += rng.complex_normal();
    return y;
}

// Dense X_n for any device kind, materializing the far-field I_K kron s_n
// structure that the estimator never forms.
inline MatrixXcd dense_columns(const LocalModel& model, int n) {
    const DeviceModel& dm = model.devices[static_cast<std::size_t>(n)];
    if (dm.kind == FieldClass::NearField) return dm.x_cols;
    MatrixXcd x = MatrixXcd::Zero(model.lk(), model.K);
    for (int k = 0; k < model.K; ++k)
        x.block(k * model.L, k, model.L, 1) = dm.sqrt_gain * model.S.col(n);
    return x;
}

}  // namespace hyfad::testing
