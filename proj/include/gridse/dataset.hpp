#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gridse/measurement.hpp"
#include "gridse/powerflow.hpp"

namespace gridse::pf {

struct Dataset {
    std::string case_id;
    std::string topology;  // "base" or "from-to" of the removed line
    int n_nodes = 0;
    std::vector<Eigen::MatrixXd> features;  // n x 2 each, noisy (vm pu, va rad)
    std::vector<Eigen::MatrixXd> labels;    // n x 2 each, noise-free
    std::string noise_json;
    std::uint64_t seed = 0;
    int redraws = 0;
    std::string case_hash;
};

// One synthesized sample: scenario draw -> AC solve -> noisy measurements.
struct SyntheticSample {
    Eigen::MatrixXd features;  // n x 2
    Eigen::MatrixXd labels;    // n x 2
    meas::MeasurementSet measurements;
    PowerFlowSolution solution;
    bool converged = false;
};

// Deterministic in (seed, sample_index) regardless of evaluation order.
SyntheticSample make_sample(const grid::NetworkCase& c, const grid::YBus& ybus,
                            const meas::PmuPlacement& placement, const meas::NoiseModel& noise,
                            std::uint64_t seed, std::uint64_t sample_index,
                            const ScenarioConfig& cfg, std::optional<int> outage);

// Non-converged scenarios are redrawn (fresh sub-stream), counted, and capped
// at 1% of the requested size; exceeding the cap throws Error.
Dataset generate_dataset(const grid::NetworkCase& c, int n_samples, const meas::NoiseModel& noise,
                         const meas::PmuPlacement& placement, std::uint64_t seed,
                         std::optional<int> outage = std::nullopt,
                         const ScenarioConfig& cfg = {});

// Directory layout: manifest.json + features.bin + labels.bin, raw
// little-endian float64, sample-major then node-major then feature-major.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace gridse::pf
