#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridse/dataset.hpp"
#include "gridse/metrics.hpp"
#include "gridse/nn.hpp"

namespace gridse::xp {

struct OutageImpact {
    int branch = -1;
    int from_bus = 0, to_bus = 0;
    double impact_mw = 0.0;  // sum of |p_from| changes over surviving branches
    bool connected = true;
    bool converged = true;
};

// One entry per in-service branch; ranked descending by impact with
// disconnecting/non-converging outages flagged and placed last.
std::vector<OutageImpact> rank_outages(const grid::NetworkCase& c);

struct StudyConfig {
    int train_samples = 2000;
    int test_samples = 500;
    nn::TrainConfig training;          // epochs 200, lr 1e-3, batch 32
    meas::NoiseModel gaussian_noise = meas::GaussianNoise{};
    meas::NoiseModel gmm_noise = meas::Gmm2Noise{
        {-0.4, 0.6}, {0.25, 0.25}, {-0.2, 0.3}, {0.12, 0.12}, {0.4, 0.6}};
    pf::ScenarioConfig scenario;
    int gnn_hidden = 64;
    std::uint64_t data_seed = 1;
    std::uint64_t model_seed = 2;
    bool verbose = false;
    int density_bins = 60;
    double density_mag_lo = -0.01, density_mag_hi = 0.01;  // pu
    double density_ang_lo = -1.0, density_ang_hi = 1.0;    // degrees
};

struct NoiseStudyResult {
    // estimator -> noise-model -> metrics; estimators "lse", "gnn", "mlp",
    // noise keys "gaussian", "gmm".
    std::map<std::string, std::map<std::string, MetricsReport>> table;
    nn::GnnModel gnn_gmm;      // retained for the topology study
    nn::MlpModel mlp_gmm;
    nn::GnnModel gnn_gaussian;
};

NoiseStudyResult run_noise_study(const grid::NetworkCase& c, const meas::PmuPlacement& placement,
                                 const StudyConfig& cfg);

struct TopologyResult {
    std::string topology;  // "from-to"
    int branch = -1;
    bool lse_observable = true;
    MetricsReport gnn, mlp;
    std::optional<MetricsReport> lse;
    ErrorDensity gnn_density_mag, gnn_density_ang, mlp_density_mag, mlp_density_ang;
};

struct TopologyStudyResult {
    std::vector<TopologyResult> most_impactful;
    std::vector<TopologyResult> least_impactful;
};

// Evaluates base-trained models on outaged topologies without retraining; the
// GNN consumes the post-outage adjacency. Lines may be pinned explicitly as
// (from,to) bus-id pairs; otherwise the top/bottom k connected outages from
// rank_outages are used.
TopologyStudyResult run_topology_study(
    const grid::NetworkCase& c, const meas::PmuPlacement& placement, const StudyConfig& cfg,
    const nn::GnnModel& gnn, const nn::MlpModel& mlp, int k = 5,
    const std::vector<std::pair<int, int>>* pinned_most = nullptr,
    const std::vector<std::pair<int, int>>* pinned_least = nullptr);

// Locates the in-service branch joining two bus ids (first match).
int find_branch(const grid::NetworkCase& c, int from_bus, int to_bus);

}  // namespace gridse::xp
