#include "hyfad/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hyfad {

std::string pair_class_label(PairClass c) {
    switch (c) {
        case PairClass::NearNear: return "NF-NF";
        case PairClass::NearFar: return "NF-FF";
        case PairClass::FarFar: return "FF-FF";
    }
    return "?";
}

std::vector<std::uint8_t> threshold_detect(const Eigen::VectorXd& a, double gamma) {
    if (gamma < 0.0 || gamma > 1.0)
        throw std::invalid_argument("threshold_detect: gamma outside [0,1]");
    std::vector<std::uint8_t> out(static_cast<std::size_t>(a.size()));
    for (Eigen::Index n = 0; n < a.size(); ++n)
        out[static_cast<std::size_t>(n)] = a[n] >= gamma ? 1 : 0;
    return out;
}

std::pair<double, double> pm_pf(const std::vector<std::uint8_t>& estimate,
                                const std::vector<std::uint8_t>& truth) {
    if (estimate.size() != truth.size())
        throw std::invalid_argument("pm_pf: length mismatch");
    int active = 0, inactive = 0, missed = 0, false_alarm = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i]) {
            ++active;
            if (!estimate[i]) ++missed;
        } else {
            ++inactive;
            if (estimate[i]) ++false_alarm;
        }
    }
    if (active == 0 || inactive == 0)
        throw std::invalid_argument("pm_pf: rates undefined without both classes in truth");
    return {static_cast<double>(missed) / active, static_cast<double>(false_alarm) / inactive};
}

DetectionReport equal_error_point(const Eigen::VectorXd& a, const std::vector<std::uint8_t>& truth) {
    std::vector<double> grid(a.data(), a.data() + a.size());
    grid.push_back(0.0);
    grid.push_back(1.0);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    DetectionReport best;
    double best_gap = std::numeric_limits<double>::infinity();
    for (double gamma : grid) {
        if (gamma < 0.0 || gamma > 1.0) continue;
        const auto [pm, pf] = pm_pf(threshold_detect(a, gamma), truth);
        const double gap = std::abs(pm - pf);
        if (gap < best_gap) {  // strict: ties keep the smaller gamma
            best_gap = gap;
            best = {gamma, pm, pf, 0.5 * (pm + pf)};
        }
    }
    return best;
}

namespace {

// tr(R) and the Frobenius norms needed by the shape correlation, all from the
// K x J factor with R = F F^H.
double factor_trace(const MatrixXcd& f) { return f.squaredNorm(); }

double factor_fro_norm(const MatrixXcd& f) { return (f.adjoint() * f).norm(); }

double cross_trace(const MatrixXcd& f1, const MatrixXcd& f2) {
    return (f1.adjoint() * f2).squaredNorm();
}

}  // namespace

std::vector<SimilarityRow> similarity_diagnostics(const std::vector<ChannelStat>& stats,
                                                  const MatrixXcd& S, int ap_index) {
    const int N = static_cast<int>(stats.size());
    if (S.cols() != N) throw std::invalid_argument("similarity_diagnostics: stats/S mismatch");

    std::vector<SimilarityRow> rows;
    rows.reserve(static_cast<std::size_t>(N) * (N - 1) / 2);
    for (int i = 0; i < N; ++i) {
        for (int j = i + 1; j < N; ++j) {
            const ChannelStat& si = stats[static_cast<std::size_t>(i)];
            const ChannelStat& sj = stats[static_cast<std::size_t>(j)];
            SimilarityRow row;
            row.ap = ap_index;
            row.device_a = i;
            row.device_b = j;

            const bool near_i = si.kind == FieldClass::NearField;
            const bool near_j = sj.kind == FieldClass::NearField;
            if (!near_i && !near_j) {
                row.cls = PairClass::FarFar;
                // Both shapes are multiples of I_K: correlation 1 regardless of gains.
                row.matrix_factor = 1.0;
            } else if (near_i && near_j) {
                row.cls = PairClass::NearNear;
                row.matrix_factor = cross_trace(si.factor, sj.factor) /
                                    (factor_fro_norm(si.factor) * factor_fro_norm(sj.factor));
            } else {
                row.cls = PairClass::NearFar;
                const MatrixXcd& f = near_i ? si.factor : sj.factor;
                const double K = static_cast<double>(near_i ? si.K : sj.K);
                // tr(R * gI) / (||R||_F * ||gI||_F) = tr(R) / (||R||_F * sqrt(K)).
                row.matrix_factor = factor_trace(f) / (factor_fro_norm(f) * std::sqrt(K));
            }

            const double num = std::abs(std::complex<double>(S.col(i).dot(S.col(j))));
            const double den = S.col(i).norm() * S.col(j).norm();
            const double sig = num / den;
            row.cosine = row.matrix_factor * sig * sig;
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace hyfad
