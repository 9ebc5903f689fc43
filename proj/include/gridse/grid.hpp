#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gridse/common.hpp"

namespace gridse::grid {

enum class BusKind { Slack, Pv, Pq };

struct Bus {
    int id = 0;
    BusKind kind = BusKind::Pq;
    double p_load = 0.0;      // MW
    double q_load = 0.0;      // MVAr
    double gs = 0.0;          // MW shunt at 1 pu
    double bs = 0.0;          // MVAr shunt at 1 pu
    double base_kv = 0.0;
    double vm_init = 1.0;     // pu
    double va_init = 0.0;     // radians
    double v_setpoint = 1.0;  // pu, PV/slack
    double p_gen = 0.0;       // MW, PV
};

struct Branch {
    int from_bus = 0;  // bus id
    int to_bus = 0;    // bus id
    double r = 0.0;    // pu
    double x = 0.0;    // pu
    double b_charging = 0.0;  // pu, total
    double tap = 1.0;         // off-nominal ratio, 1.0 if none
    double shift = 0.0;       // radians
    bool in_service = true;
};

struct NetworkCase {
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;

    int n() const { return static_cast<int>(buses.size()); }
    int index_of(int bus_id) const;  // throws Error for unknown ids
    int slack_index() const;
};

// Throws Error when an invariant is violated: duplicate ids, missing or
// multiple slack, dangling branch endpoints, zero-impedance branches.
void validate(const NetworkCase& c);

struct AdjacencyMatrix {
    int n = 0;
    Eigen::MatrixXi entries;  // binary, symmetric, zero diagonal

    int degree(int v) const { return entries.row(v).sum(); }
    std::vector<int> neighbors(int v) const;
};

using YBus = Eigen::MatrixXcd;

// Two-port admittance of one branch (pi model with off-nominal tap/shift):
//   [I_f]   [yff yft] [V_f]
//   [I_t] = [ytf ytt] [V_t]
struct BranchAdmittance {
    std::complex<double> yff, yft, ytf, ytt;
};

BranchAdmittance branch_admittance(const Branch& br);

AdjacencyMatrix build_adjacency(const NetworkCase& c, std::optional<int> outage = std::nullopt);

YBus build_ybus(const NetworkCase& c, std::optional<int> outage = std::nullopt);

bool is_connected(const AdjacencyMatrix& adj);

// Copy with branches[index] marked out of service; the input is not modified.
NetworkCase remove_branch(const NetworkCase& c, int index);

}  // namespace gridse::grid
