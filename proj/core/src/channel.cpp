#include "hyfad/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace hyfad {

double PathLossModel::raw_linear(double distance_m) const {
    if (!(distance_m > 0.0)) throw std::invalid_argument("path loss: distance must be positive");
    const double km = distance_m / 1000.0;
    const double loss_db = intercept_db + slope_db_per_decade * std::log10(km);
    return std::pow(10.0, -loss_db / 10.0);
}

double PathLossModel::noise_linear() const {
    return std::pow(10.0, (noise_power_dbm - 30.0) / 10.0);
}

double PathLossModel::normalized(double distance_m) const {
    return raw_linear(distance_m) / noise_linear();
}

double path_loss_linear(double distance_m) {
    return PathLossModel{}.normalized(distance_m);
}

VectorXcd array_response(const Eigen::VectorXd& r, double lambda_c) {
    VectorXcd b(r.size());
    const double w = 2.0 * M_PI / lambda_c;
    for (Eigen::Index k = 0; k < r.size(); ++k)
        b[k] = std::polar(1.0, -w * r[k]);
    return b;
}

ChannelStat build_channel_stat(const Deployment& dep, int ap, int device,
                               const PathLossModel& pl, FieldClass field) {
    ChannelStat stat;
    stat.kind = field;
    stat.K = dep.K;

    const Position2D& dev = dep.devices.at(static_cast<std::size_t>(device));
    const AccessPoint& a = dep.aps.at(static_cast<std::size_t>(ap));
    const double center_dist = wrap_distance(dev, a.center, dep.side);

    if (field == FieldClass::FarField) {
        stat.far_gain = pl.normalized(center_dist);
        return stat;
    }

    // LoS mean: magnitude from the center-distance path loss, deterministic
    // phase advanced by the center distance.
    const std::complex<double> beta =
        std::sqrt(pl.normalized(center_dist)) *
        std::polar(1.0, -2.0 * M_PI * center_dist / dep.lambda_c);
    stat.mean = beta * array_response(antenna_distances(dep, ap, dev), dep.lambda_c);

    // One factor column per scatterer: sigma_l * |beta_l| * b(scatterer).
    // The NLoS magnitude uses the two-hop device->scatterer->AP path length;
    // sigma_l^2 = 1 throughout.
    const auto& scatterers = dep.scatterers.at(static_cast<std::size_t>(ap));
    const int J = static_cast<int>(scatterers.size());
    stat.factor.resize(dep.K, J);
    for (int l = 0; l < J; ++l) {
        const Position2D& sc = scatterers[static_cast<std::size_t>(l)];
        const double hop = wrap_distance(dev, sc, dep.side) + wrap_distance(sc, a.center, dep.side);
        const double nlos_gain = pl.normalized(hop);
        stat.factor.col(l) =
            std::sqrt(nlos_gain) * array_response(antenna_distances(dep, ap, sc), dep.lambda_c);
    }
    return stat;
}

VectorXcd sample_channel(const ChannelStat& stat, RngStream& rng) {
    if (stat.kind == FieldClass::FarField) {
        VectorXcd w(stat.K);
        const double scale = std::sqrt(stat.far_gain);
        for (Eigen::Index k = 0; k < w.size(); ++k) w[k] = scale * rng.complex_normal();
        return w;
    }
    VectorXcd z(stat.factor.cols());
    for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.complex_normal();
    return stat.mean + stat.factor * z;
}

}  // namespace hyfad
