#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyfad/channel.hpp"
#include "hyfad/signal.hpp"

namespace hyfad {

struct DetectionReport {
    double gamma = 0.0;
    double pm = 0.0;
    double pf = 0.0;
    double equal_error_rate = 0.0;
};

enum class PairClass { NearNear, NearFar, FarFar };

std::string pair_class_label(PairClass c);

// One device pair at one AP: the covariance-shape correlation rho_hat and the
// full column cosine rho = rho_hat * (normalized signature correlation)^2.
struct SimilarityRow {
    int ap = 0;
    int device_a = 0;
    int device_b = 0;
    PairClass cls = PairClass::FarFar;
    double matrix_factor = 0.0;  // rho_hat
    double cosine = 0.0;         // rho
};

std::vector<std::uint8_t> threshold_detect(const Eigen::VectorXd& a, double gamma);

// (miss rate, false-alarm rate); requires at least one active and one
// inactive device in the truth.
std::pair<double, double> pm_pf(const std::vector<std::uint8_t>& estimate,
                                const std::vector<std::uint8_t>& truth);

// Sweeps gamma over the finite set of score values (plus 0 and 1), where the
// step functions pm and pf take all their values; picks the gamma minimizing
// |pm - pf|, ties toward the smaller gamma, and reports (pm+pf)/2.
DetectionReport equal_error_point(const Eigen::VectorXd& a, const std::vector<std::uint8_t>& truth);

// All device pairs at one AP. Far-far pairs have matrix_factor 1 by
// definition; near-field shapes are compared through their factor forms, so
// no K x K covariance is ever materialized.
std::vector<SimilarityRow> similarity_diagnostics(const std::vector<ChannelStat>& stats,
                                                  const MatrixXcd& S, int ap_index);

}  // namespace hyfad
