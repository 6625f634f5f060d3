#include "hyfad/signal.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <stdexcept>

namespace hyfad {

MatrixXcd generate_signatures(int N, int L, RngStream& rng) {
    if (N < 1 || L < 1) throw std::invalid_argument("generate_signatures: N and L must be >= 1");
    const double half = std::sqrt(2.0) / 2.0;
    MatrixXcd S(L, N);
    for (int n = 0; n < N; ++n) {
        for (int l = 0; l < L; ++l) {
            const std::uint64_t sym = rng.below(4);
            S(l, n) = {sym & 1 ? half : -half, sym & 2 ? half : -half};
        }
    }
    return S;
}

ActivityVector sample_activity(int N, double ratio, RngStream& rng) {
    if (ratio < 0.0 || ratio > 1.0) throw std::invalid_argument("sample_activity: ratio outside [0,1]");
    const int count = static_cast<int>(std::lround(ratio * N));
    std::vector<int> idx(static_cast<std::size_t>(N));
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    ActivityVector a(static_cast<std::size_t>(N), 0);
    for (int i = 0; i < count; ++i) a[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = 1;
    return a;
}

ActivityVector sample_activity_bernoulli(int N, double ratio, RngStream& rng) {
    if (ratio < 0.0 || ratio > 1.0) throw std::invalid_argument("sample_activity: ratio outside [0,1]");
    ActivityVector a(static_cast<std::size_t>(N), 0);
    for (auto& flag : a) flag = rng.uniform() < ratio ? 1 : 0;
    return a;
}

VectorXcd kron_channel_signature(const VectorXcd& h, const VectorXcd& s) {
    const Eigen::Index K = h.size();
    const Eigen::Index L = s.size();
    VectorXcd out(L * K);
    for (Eigen::Index k = 0; k < K; ++k) out.segment(k * L, L) = h[k] * s;
    return out;
}

std::vector<VectorXcd> synthesize_received(const Deployment& dep,
                                           const std::vector<std::vector<ChannelStat>>& stats,
                                           const MatrixXcd& S,
                                           const ActivityVector& a_true,
                                           RngStream& rng,
                                           bool with_noise) {
    const int M = dep.num_aps();
    const int N = dep.num_devices();
    const Eigen::Index L = S.rows();
    if (S.cols() != N || static_cast<int>(a_true.size()) != N ||
        static_cast<int>(stats.size()) != M)
        throw std::invalid_argument("synthesize_received: inconsistent dimensions");

    std::vector<VectorXcd> ys;
    ys.reserve(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
        VectorXcd y = VectorXcd::Zero(L * dep.K);
        for (int n = 0; n < N; ++n) {
            if (!a_true[static_cast<std::size_t>(n)]) continue;
            const VectorXcd h = sample_channel(stats[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)], rng);
            y += kron_channel_signature(h, S.col(n));
        }
        if (with_noise) {
            for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += rng.complex_normal();
        }
        ys.push_back(std::move(y));
    }
    return ys;
}

namespace {

void write_u32(std::FILE* f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    std::fwrite(b, 1, 4, f);
}

void write_f64(std::FILE* f, double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    std::fwrite(b, 1, 8, f);
}

void write_complex_block(std::FILE* f, const VectorXcd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        write_f64(f, v[i].real());
        write_f64(f, v[i].imag());
    }
}

}  // namespace

void dump_scenario(const std::string& path, const MatrixXcd& S,
                   const ActivityVector& a_true, const std::vector<VectorXcd>& ys) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("dump_scenario: cannot open " + path);
    const std::uint32_t M = static_cast<std::uint32_t>(ys.size());
    const std::uint32_t N = static_cast<std::uint32_t>(S.cols());
    const std::uint32_t L = static_cast<std::uint32_t>(S.rows());
    const std::uint32_t LK = M > 0 ? static_cast<std::uint32_t>(ys[0].size()) : 0;
    std::fwrite("HYFD", 1, 4, f);
    write_u32(f, 1);  // format version
    write_u32(f, M);
    write_u32(f, N);
    write_u32(f, L);
    write_u32(f, LK);
    for (Eigen::Index n = 0; n < S.cols(); ++n) write_complex_block(f, S.col(n));
    std::fwrite(a_true.data(), 1, a_true.size(), f);
    for (const auto& y : ys) write_complex_block(f, y);
    std::fclose(f);
}

}  // namespace hyfad
