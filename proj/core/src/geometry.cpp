#include "hyfad/geometry.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace hyfad {

namespace {

// Minimal-image offset along one axis, in (-side/2, side/2].
double wrap_axis(double delta, double side) {
    double d = std::remainder(delta, side);
    return d;
}

// Maps a coordinate into [-side/2, side/2).
double fold_into_square(double v, double side) {
    double r = std::remainder(v, side);
    if (r >= side / 2.0) r -= side;
    return r;
}

}  // namespace

double wrap_distance(const Position2D& p, const Position2D& q, double side) {
    if (!(side > 0.0)) throw std::invalid_argument("wrap_distance: side must be positive");
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(q.x) || !std::isfinite(q.y))
        throw std::invalid_argument("wrap_distance: non-finite coordinate");
    const double dx = wrap_axis(p.x - q.x, side);
    const double dy = wrap_axis(p.y - q.y, side);
    return std::hypot(dx, dy);
}

double rayleigh_distance(int K, double lambda_c) {
    if (K < 2) throw std::invalid_argument("rayleigh_distance: array needs at least 2 antennas");
    if (!(lambda_c > 0.0)) throw std::invalid_argument("rayleigh_distance: wavelength must be positive");
    const double aperture = (K - 1) * lambda_c / 2.0;
    return 2.0 * aperture * aperture / lambda_c;
}

Eigen::VectorXd antenna_distances(const Deployment& dep, int ap, const Position2D& p) {
    if (ap < 0 || ap >= dep.num_aps()) throw std::out_of_range("antenna_distances: AP index");
    const AccessPoint& a = dep.aps[static_cast<std::size_t>(ap)];

    // Minimal wrap-around image of p relative to the AP center.
    const double rel_x = wrap_axis(p.x - a.center.x, dep.side);
    const double rel_y = wrap_axis(p.y - a.center.y, dep.side);

    const double spacing = dep.lambda_c / 2.0;
    Eigen::VectorXd out(dep.K);
    for (int k = 0; k < dep.K; ++k) {
        // 1-based antenna index k+1 sits at offset (k+1 - (K+1)/2) * spacing.
        const double t = (static_cast<double>(k + 1) - (dep.K + 1) / 2.0) * spacing;
        const double dx = rel_x - t * a.orient_x;
        const double dy = rel_y - t * a.orient_y;
        out[k] = std::hypot(dx, dy);
    }
    return out;
}

FieldClass classify_field(const Deployment& dep, int ap, int device) {
    if (ap < 0 || ap >= dep.num_aps()) throw std::out_of_range("classify_field: AP index");
    if (device < 0 || device >= dep.num_devices()) throw std::out_of_range("classify_field: device index");
    const double d = wrap_distance(dep.devices[static_cast<std::size_t>(device)],
                                   dep.aps[static_cast<std::size_t>(ap)].center, dep.side);
    return d < rayleigh_distance(dep.K, dep.lambda_c) ? FieldClass::NearField : FieldClass::FarField;
}

Deployment sample_deployment(const DeploymentConfig& cfg, RngStream& rng) {
    if (cfg.M < 1 || cfg.N < 1 || cfg.K < 1 || cfg.L_m < 0)
        throw std::invalid_argument("sample_deployment: counts must be positive");
    if (!(cfg.side > 0.0) || !(cfg.lambda_c > 0.0))
        throw std::invalid_argument("sample_deployment: side and wavelength must be positive");

    Deployment dep;
    dep.side = cfg.side;
    dep.lambda_c = cfg.lambda_c;
    dep.K = cfg.K;

    const double half = cfg.side / 2.0;
    auto draw_position = [&]() {
        Position2D p;
        p.x = rng.uniform(-half, half);
        p.y = rng.uniform(-half, half);
        return p;
    };

    dep.aps.resize(static_cast<std::size_t>(cfg.M));
    for (auto& ap : dep.aps) {
        ap.center = draw_position();
        const double angle = cfg.random_orientation ? rng.uniform(0.0, 2.0 * M_PI)
                                                    : cfg.fixed_orientation_angle;
        ap.orient_x = std::cos(angle);
        ap.orient_y = std::sin(angle);
    }

    dep.devices.resize(static_cast<std::size_t>(cfg.N));
    for (auto& d : dep.devices) d = draw_position();

    dep.scatterers.resize(static_cast<std::size_t>(cfg.M));
    for (int m = 0; m < cfg.M; ++m) {
        auto& list = dep.scatterers[static_cast<std::size_t>(m)];
        list.resize(static_cast<std::size_t>(cfg.L_m));
        for (auto& s : list) {
            if (cfg.scatterer_placement == ScattererPlacement::UniformSquare) {
                s = draw_position();
            } else {
                // Uniform on the disc via radius = R*sqrt(u), then wrapped so the
                // sample stays inside the square.
                const double r = cfg.scatterer_radius * std::sqrt(rng.uniform());
                const double phi = rng.uniform(0.0, 2.0 * M_PI);
                const auto& c = dep.aps[static_cast<std::size_t>(m)].center;
                s.x = fold_into_square(c.x + r * std::cos(phi), cfg.side);
                s.y = fold_into_square(c.y + r * std::sin(phi), cfg.side);
            }
        }
    }
    return dep;
}

void save_deployment(const std::string& path, const Deployment& dep) {
    nlohmann::json j;
    j["side"] = dep.side;
    j["lambda_c"] = dep.lambda_c;
    j["K"] = dep.K;
    j["aps"] = nlohmann::json::array();
    for (const auto& ap : dep.aps)
        j["aps"].push_back({{"x", ap.center.x}, {"y", ap.center.y},
                            {"ox", ap.orient_x}, {"oy", ap.orient_y}});
    j["devices"] = nlohmann::json::array();
    for (const auto& d : dep.devices) j["devices"].push_back({{"x", d.x}, {"y", d.y}});
    j["scatterers"] = nlohmann::json::array();
    for (const auto& list : dep.scatterers) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& s : list) row.push_back({{"x", s.x}, {"y", s.y}});
        j["scatterers"].push_back(row);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_deployment: cannot open " + path);
    out << j.dump(2) << "\n";
}

Deployment load_deployment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_deployment: cannot open " + path);
    nlohmann::json j;
    in >> j;

    Deployment dep;
    dep.side = j.at("side").get<double>();
    dep.lambda_c = j.at("lambda_c").get<double>();
    dep.K = j.at("K").get<int>();
    for (const auto& a : j.at("aps")) {
        AccessPoint ap;
        ap.center = {a.at("x").get<double>(), a.at("y").get<double>()};
        ap.orient_x = a.at("ox").get<double>();
        ap.orient_y = a.at("oy").get<double>();
        dep.aps.push_back(ap);
    }
    for (const auto& d : j.at("devices"))
        dep.devices.push_back({d.at("x").get<double>(), d.at("y").get<double>()});
    for (const auto& row : j.at("scatterers")) {
        std::vector<Position2D> list;
        for (const auto& s : row) list.push_back({s.at("x").get<double>(), s.at("y").get<double>()});
        dep.scatterers.push_back(std::move(list));
    }
    return dep;
}

}  // namespace hyfad
