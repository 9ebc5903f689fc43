#include "gridse/grid.hpp"

#include <algorithm>
#include <set>
#include <vector>

namespace gridse::grid {

int NetworkCase::index_of(int bus_id) const {
    for (int i = 0; i < n(); ++i) {
        if (buses[i].id == bus_id) return i;
    }
    throw Error("unknown bus id " + std::to_string(bus_id));
}

int NetworkCase::slack_index() const {
    for (int i = 0; i < n(); ++i) {
        if (buses[i].kind == BusKind::Slack) return i;
    }
    throw Error("case has no slack bus");
}

void validate(const NetworkCase& c) {
    if (c.buses.empty()) throw Error("case has no buses");
    if (c.base_mva <= 0.0) throw Error("base_mva must be positive");
    std::set<int> ids;
    int slack_count = 0;
    for (const Bus& b : c.buses) {
        if (!ids.insert(b.id).second) throw Error("duplicate bus id " + std::to_string(b.id));
        if (b.base_kv <= 0.0) throw Error("bus " + std::to_string(b.id) + ": base_kv must be positive");
        if (b.kind == BusKind::Slack) ++slack_count;
    }
    if (slack_count == 0) throw Error("case has no slack bus");
    if (slack_count > 1) throw Error("case has multiple slack buses");
    for (std::size_t k = 0; k < c.branches.size(); ++k) {
        const Branch& br = c.branches[k];
        const std::string tag = "branch " + std::to_string(k);
        if (!ids.count(br.from_bus))
            throw Error(tag + ": dangling endpoint, bus " + std::to_string(br.from_bus));
        if (!ids.count(br.to_bus))
            throw Error(tag + ": dangling endpoint, bus " + std::to_string(br.to_bus));
        if (br.from_bus == br.to_bus) throw Error(tag + ": self loop at bus " + std::to_string(br.from_bus));
        if (br.r == 0.0 && br.x == 0.0) throw Error(tag + ": zero series impedance");
    }
}

std::vector<int> AdjacencyMatrix::neighbors(int v) const {
    std::vector<int> out;
    for (int u = 0; u < n; ++u) {
        if (entries(v, u) != 0) out.push_back(u);
    }
    return out;
}

BranchAdmittance branch_admittance(const Branch& br) {
    if (br.r == 0.0 && br.x == 0.0) throw Error("branch with zero series impedance");
    const std::complex<double> ys = 1.0 / std::complex<double>(br.r, br.x);
    const std::complex<double> bc(0.0, br.b_charging / 2.0);
    const double ratio = br.tap == 0.0 ? 1.0 : br.tap;
    const std::complex<double> tap = std::polar(ratio, br.shift);
    BranchAdmittance y;
    y.yff = (ys + bc) / (tap * std::conj(tap));
    y.yft = -ys / std::conj(tap);
    y.ytf = -ys / tap;
    y.ytt = ys + bc;
    return y;
}

namespace {

void check_outage(const NetworkCase& c, std::optional<int> outage) {
    if (!outage) return;
    if (*outage < 0 || *outage >= static_cast<int>(c.branches.size()))
        throw Error("outage index " + std::to_string(*outage) + " out of range");
    if (!c.branches[*outage].in_service)
        throw Error("outage branch " + std::to_string(*outage) + " is already out of service");
}

}  // namespace

AdjacencyMatrix build_adjacency(const NetworkCase& c, std::optional<int> outage) {
    check_outage(c, outage);
    AdjacencyMatrix adj;
    adj.n = c.n();
    adj.entries = Eigen::MatrixXi::Zero(adj.n, adj.n);
    for (std::size_t k = 0; k < c.branches.size(); ++k) {
        const Branch& br = c.branches[k];
        if (!br.in_service || (outage && static_cast<int>(k) == *outage)) continue;
        const int f = c.index_of(br.from_bus);
        const int t = c.index_of(br.to_bus);
        adj.entries(f, t) = 1;
        adj.entries(t, f) = 1;
    }
    return adj;
}

YBus build_ybus(const NetworkCase& c, std::optional<int> outage) {
    check_outage(c, outage);
    const int n = c.n();
    YBus y = YBus::Zero(n, n);
    for (std::size_t k = 0; k < c.branches.size(); ++k) {
        const Branch& br = c.branches[k];
        if (!br.in_service || (outage && static_cast<int>(k) == *outage)) continue;
        const BranchAdmittance ba = branch_admittance(br);
        const int f = c.index_of(br.from_bus);
        const int t = c.index_of(br.to_bus);
        y(f, f) += ba.yff;
        y(t, t) += ba.ytt;
        y(f, t) += ba.yft;
        y(t, f) += ba.ytf;
    }
    for (int i = 0; i < n; ++i) {
        y(i, i) += std::complex<double>(c.buses[i].gs, c.buses[i].bs) / c.base_mva;
    }
    return y;
}

bool is_connected(const AdjacencyMatrix& adj) {
    if (adj.n == 0) return true;
    std::vector<char> seen(adj.n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int u = 0; u < adj.n; ++u) {
            if (adj.entries(v, u) != 0 && !seen[u]) {
                seen[u] = 1;
                ++reached;
                stack.push_back(u);
            }
        }
    }
    return reached == adj.n;
}

NetworkCase remove_branch(const NetworkCase& c, int index) {
    if (index < 0 || index >= static_cast<int>(c.branches.size()))
        throw Error("branch index " + std::to_string(index) + " out of range");
    if (!c.branches[index].in_service)
        throw Error("branch " + std::to_string(index) + " is already out of service");
    NetworkCase out = c;
    out.branches[index].in_service = false;
    return out;
}

}  // namespace gridse::grid
