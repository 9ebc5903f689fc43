#pragma once

#include <array>
#include <complex>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/QR>

#include "gridse/grid.hpp"
#include "gridse/powerflow.hpp"

namespace gridse::meas {

// Bus indices (not ids) hosting PMUs, ascending.
struct PmuPlacement {
    std::vector<int> buses;

    bool has(int bus_index) const;
};

// Greedy minimum dominating set: repeatedly pick the node covering the most
// uncovered nodes, ties broken by lower index.
PmuPlacement place_pmus(const grid::AdjacencyMatrix& adj);

bool dominates(const PmuPlacement& p, const grid::AdjacencyMatrix& adj);

struct GaussianNoise {
    double std_mag_pct = 0.2;  // percent of reading
    double std_ang_deg = 0.1;
};

struct Gmm2Noise {
    std::array<double, 2> means_mag{};   // percent
    std::array<double, 2> stds_mag{};    // percent
    std::array<double, 2> means_ang{};   // degrees
    std::array<double, 2> stds_ang{};    // degrees
    std::array<double, 2> weights{0.5, 0.5};
};

using NoiseModel = std::variant<GaussianNoise, Gmm2Noise>;

// {"type":"gaussian","std_mag":..,"std_ang":..} or
// {"type":"gmm2","means_mag":[..],"stds_mag":[..],"means_ang":[..],
//  "stds_ang":[..],"weights":[..]}; magnitudes in percent, angles in degrees.
NoiseModel noise_from_json(const std::string& text);
std::string noise_to_json(const NoiseModel& model);

enum class NoiseKind { Magnitude, Angle };

// Additive error in percent (magnitude) or degrees (angle).
double sample_noise(const NoiseModel& model, Rng& rng, NoiseKind kind);

// One current phasor channel: the branch end (from/to) sitting at a PMU bus.
struct CurrentChannel {
    int pmu_bus = 0;   // bus index hosting the PMU
    int branch = 0;    // branch index
    bool at_from_end = true;
    int remote_bus = 0;  // the other endpoint
};

// Deterministic channel order shared by measurement synthesis and H assembly:
// branch index ascending, from end before to end.
std::vector<CurrentChannel> enumerate_channels(const grid::NetworkCase& c,
                                               const PmuPlacement& p,
                                               std::optional<int> outage = std::nullopt);

struct MeasurementSet {
    std::vector<int> pmu_buses;
    std::vector<CurrentChannel> channels;
    std::vector<std::complex<double>> voltage;       // measured, per PMU bus
    std::vector<std::complex<double>> current;       // measured, per channel
    std::vector<std::complex<double>> voltage_true;  // noise-free, for audit
    std::vector<std::complex<double>> current_true;
};

MeasurementSet synthesize_measurements(const pf::PowerFlowSolution& sol,
                                       const grid::NetworkCase& c, const PmuPlacement& p,
                                       const NoiseModel& noise, Rng& rng,
                                       std::optional<int> outage = std::nullopt);

// n x 2 matrix, column 0 = vm (pu), column 1 = va (radians). PMU buses take
// their measured phasor; other buses take the line-model pseudo-voltage
// averaged in rectangular coordinates over all PMU neighbors. Throws Error
// if some bus has no PMU within one hop.
Eigen::MatrixXd build_feature_matrix(const MeasurementSet& ms, const grid::NetworkCase& c,
                                     const PmuPlacement& p,
                                     std::optional<int> outage = std::nullopt);

// Linear measurement model z = H x over the rectangular state
// x = [Re(V_1..n), Im(V_1..n)]; rows follow enumerate_channels order with the
// voltage rows (2 per PMU) first.
struct LseProblem {
    Eigen::MatrixXd H;
    int n = 0;  // bus count; state size is 2n
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;  // factored once per topology

    Eigen::Index rank() const { return qr.rank(); }
};

LseProblem build_H(const grid::NetworkCase& c, const PmuPlacement& p,
                   std::optional<int> outage = std::nullopt);

// Stacks the measured phasors of a MeasurementSet into the z vector matching
// build_H's row order.
Eigen::VectorXd measurement_vector(const MeasurementSet& ms);

struct StateEstimate {
    Eigen::VectorXd vm;  // pu
    Eigen::VectorXd va;  // radians
};

// x_hat = argmin |H x - z|^2 via the cached orthogonal factorization.
// Throws Error when H is rank-deficient (observability lost).
StateEstimate solve_lse(const LseProblem& problem, const Eigen::VectorXd& z);

}  // namespace gridse::meas
