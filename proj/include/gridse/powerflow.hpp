#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gridse/grid.hpp"

namespace gridse::pf {

struct ScenarioConfig {
    double global_lo = 0.8;
    double global_hi = 1.2;
    double per_bus_lo = 0.95;
    double per_bus_hi = 1.05;
};

struct LoadScenario {
    double global_mult = 1.0;
    Eigen::VectorXd per_bus_mult;  // applied to both p_load and q_load
    std::uint64_t seed = 0;

    double bus_mult(int i) const { return global_mult * per_bus_mult(i); }
};

LoadScenario sample_load_scenario(const grid::NetworkCase& c, Rng& rng,
                                  const ScenarioConfig& cfg = {});

struct PowerFlowOptions {
    double tolerance = 1e-8;  // pu, max |dP|,|dQ|
    int max_iterations = 30;
    bool flat_start = true;  // otherwise start from the case voltage profile
};

struct PowerFlowSolution {
    Eigen::VectorXd vm;  // pu
    Eigen::VectorXd va;  // radians
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0.0;  // pu
};

// Full Newton-Raphson in polar coordinates. PV buses hold their voltage
// setpoint (no reactive-limit enforcement). Throws Error if the post-outage
// graph is disconnected; non-convergence is reported via the returned flags.
PowerFlowSolution solve_power_flow(const grid::NetworkCase& c, const LoadScenario& scenario,
                                   std::optional<int> outage = std::nullopt,
                                   const PowerFlowOptions& opts = {});

// Same solve with a caller-supplied admittance matrix (reused across samples
// of one topology).
PowerFlowSolution solve_power_flow(const grid::NetworkCase& c, const LoadScenario& scenario,
                                   const grid::YBus& ybus, std::optional<int> outage,
                                   const PowerFlowOptions& opts = {});

// Power mismatch vector for the NR state (va at non-slack, vm at PQ);
// exposed so the Jacobian can be checked against finite differences.
Eigen::VectorXd power_mismatch(const grid::NetworkCase& c, const LoadScenario& scenario,
                               const grid::YBus& ybus, const Eigen::VectorXd& vm,
                               const Eigen::VectorXd& va);

// The analytic Jacobian d(calculated power)/d(state) the solver iterates
// with; mismatch derivatives are its negation.
Eigen::MatrixXd power_flow_jacobian(const grid::NetworkCase& c, const grid::YBus& ybus,
                                    const Eigen::VectorXd& vm, const Eigen::VectorXd& va);

struct BranchFlow {
    int branch = 0;  // index into case branches
    double p_from = 0.0, q_from = 0.0;  // MW / MVAr entering at the from end
    double p_to = 0.0, q_to = 0.0;
};

// Pi-model flows for every in-service branch (outage treated as out of
// service when given).
std::vector<BranchFlow> branch_flows(const grid::NetworkCase& c, const PowerFlowSolution& sol,
                                     std::optional<int> outage = std::nullopt);

}  // namespace gridse::pf
