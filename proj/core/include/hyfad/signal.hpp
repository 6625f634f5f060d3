#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyfad/channel.hpp"

namespace hyfad {

// Columns are device signatures; every entry is drawn from the unit-modulus
// QPSK alphabet {±√2/2 ± j√2/2}, so ||s_n||^2 = L exactly.
using SignatureMatrix = MatrixXcd;  // L x N

using ActivityVector = std::vector<std::uint8_t>;  // entries in {0,1}

MatrixXcd generate_signatures(int N, int L, RngStream& rng);

// Exactly round(ratio*N) active devices, chosen uniformly at random.
ActivityVector sample_activity(int N, double ratio, RngStream& rng);

// Independent Bernoulli(ratio) activity, kept for experiments that want the
// paper-agnostic i.i.d. model.
ActivityVector sample_activity_bernoulli(int N, double ratio, RngStream& rng);

// h (length K) kron s (length L): block k of length L is h_k * s. This is
// vec(s h^T) for column-major vec, the layout every covariance downstream
// assumes.
VectorXcd kron_channel_signature(const VectorXcd& h, const VectorXcd& s);

// y_m = sum_n a_n (h_{m,n} kron s_n) + w_m with fresh channel draws and unit
// variance complex Gaussian noise (post-normalization). Noise can be disabled
// for deterministic fixtures.
std::vector<VectorXcd> synthesize_received(const Deployment& dep,
                                           const std::vector<std::vector<ChannelStat>>& stats,
                                           const MatrixXcd& S,
                                           const ActivityVector& a_true,
                                           RngStream& rng,
                                           bool with_noise = true);

// Binary dump of (S, a_true, {y_m}) for cross-implementation comparison.
// Layout is documented in the README; all floats are little-endian doubles
// stored as (re, im) pairs.
void dump_scenario(const std::string& path, const MatrixXcd& S,
                   const ActivityVector& a_true, const std::vector<VectorXcd>& ys);

}  // namespace hyfad
