#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hyfad/rng.hpp"

namespace hyfad {

struct Position2D {
    double x = 0.0;  // meters, in [-side/2, side/2]
    double y = 0.0;
};

struct AccessPoint {
    Position2D center;
    double orient_x = 1.0;  // unit vector along the linear array
    double orient_y = 0.0;
};

// One sampled network layout. Immutable after construction; antenna spacing
// is always lambda_c/2 along each AP's orientation.
struct Deployment {
    double side = 200.0;      // wrap-around square edge, meters
    double lambda_c = 0.2;    // carrier wavelength, meters
    int K = 1;                // antennas per AP
    std::vector<AccessPoint> aps;
    std::vector<Position2D> devices;
    std::vector<std::vector<Position2D>> scatterers;  // [ap][0..L_m)

    int num_aps() const { return static_cast<int>(aps.size()); }
    int num_devices() const { return static_cast<int>(devices.size()); }
};

enum class FieldClass { NearField, FarField };

enum class ScattererPlacement {
    UniformSquare,  // anywhere in the square
    AroundAp,       // uniform in a disc centered on the AP, wrapped into the square
};

struct DeploymentConfig {
    int M = 2;               // access points
    int N = 40;              // devices
    int K = 8;               // antennas per AP
    int L_m = 4;             // scatterers per AP
    double side = 200.0;
    double lambda_c = 0.2;
    ScattererPlacement scatterer_placement = ScattererPlacement::UniformSquare;
    double scatterer_radius = 50.0;  // only used by AroundAp
    bool random_orientation = true;
    double fixed_orientation_angle = 0.0;  // radians, used when random_orientation is false
};

// Torus metric on the wrap-around square.
double wrap_distance(const Position2D& p, const Position2D& q, double side);

// Near/far boundary 2*D^2/lambda_c for aperture D = (K-1)*lambda_c/2.
double rayleigh_distance(int K, double lambda_c);

// Distances from every antenna of AP `ap` to `p`. The point is first mapped
// to its minimal wrap-around image relative to the AP center, so the array
// itself is treated as locally Euclidean.
Eigen::VectorXd antenna_distances(const Deployment& dep, int ap, const Position2D& p);

// NearField iff the wrap-around center distance is below the AP's Rayleigh
// distance. Classification is monotone in K: growing the array never
// reclassifies a near-field device as far-field.
FieldClass classify_field(const Deployment& dep, int ap, int device);

Deployment sample_deployment(const DeploymentConfig& cfg, RngStream& rng);

// Fixed-schema JSON round trip so an experiment can be replayed exactly.
void save_deployment(const std::string& path, const Deployment& dep);
Deployment load_deployment(const std::string& path);

}  // namespace hyfad
