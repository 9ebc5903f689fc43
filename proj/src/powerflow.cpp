#include "gridse/powerflow.hpp"

#include <cmath>

#include <Eigen/LU>

namespace gridse::pf {

using grid::BusKind;

LoadScenario sample_load_scenario(const grid::NetworkCase& c, Rng& rng, const ScenarioConfig& cfg) {
    if (!(cfg.global_lo <= cfg.global_hi) || !(cfg.per_bus_lo <= cfg.per_bus_hi) ||
        cfg.global_lo <= 0.0 || cfg.per_bus_lo <= 0.0)
        throw Error("scenario bounds must satisfy 0 < lo <= hi");
    LoadScenario s;
    s.global_mult = cfg.global_lo == cfg.global_hi ? cfg.global_lo
                                                   : rng.uniform(cfg.global_lo, cfg.global_hi);
    s.per_bus_mult.resize(c.n());
    for (int i = 0; i < c.n(); ++i) {
        s.per_bus_mult(i) = cfg.per_bus_lo == cfg.per_bus_hi
                                ? cfg.per_bus_lo
                                : rng.uniform(cfg.per_bus_lo, cfg.per_bus_hi);
    }
    return s;
}

namespace {

struct NrIndexing {
    int slack = 0;
    std::vector<int> non_slack;  // angle unknowns
    std::vector<int> pq;         // magnitude unknowns
};

NrIndexing make_indexing(const grid::NetworkCase& c) {
    NrIndexing ix;
    ix.slack = c.slack_index();
    for (int i = 0; i < c.n(); ++i) {
        if (c.buses[i].kind != BusKind::Slack) ix.non_slack.push_back(i);
        if (c.buses[i].kind == BusKind::Pq) ix.pq.push_back(i);
    }
    return ix;
}

// Scheduled net injections in pu: generation (slack excluded) minus load.
void scheduled_injections(const grid::NetworkCase& c, const LoadScenario& sc,
                          Eigen::VectorXd& p_sched, Eigen::VectorXd& q_sched) {
    const int n = c.n();
    p_sched.resize(n);
    q_sched.resize(n);
    for (int i = 0; i < n; ++i) {
        const grid::Bus& b = c.buses[i];
        const double m = sc.bus_mult(i);
        p_sched(i) = -b.p_load * m / c.base_mva;
        q_sched(i) = -b.q_load * m / c.base_mva;
        if (b.kind == BusKind::Pv) p_sched(i) += b.p_gen * sc.global_mult / c.base_mva;
    }
}

void calculated_power(const grid::YBus& y, const Eigen::VectorXd& vm, const Eigen::VectorXd& va,
                      Eigen::VectorXd& p, Eigen::VectorXd& q) {
    const int n = static_cast<int>(vm.size());
    p.setZero(n);
    q.setZero(n);
    for (int i = 0; i < n; ++i) {
        double pi = 0.0, qi = 0.0;
        for (int k = 0; k < n; ++k) {
            const std::complex<double> yik = y(i, k);
            if (yik == std::complex<double>(0.0, 0.0)) continue;
            const double th = va(i) - va(k);
            const double ct = std::cos(th), st = std::sin(th);
            pi += vm(i) * vm(k) * (yik.real() * ct + yik.imag() * st);
            qi += vm(i) * vm(k) * (yik.real() * st - yik.imag() * ct);
        }
        p(i) = pi;
        q(i) = qi;
    }
}

}  // namespace

Eigen::VectorXd power_mismatch(const grid::NetworkCase& c, const LoadScenario& scenario,
                               const grid::YBus& ybus, const Eigen::VectorXd& vm,
                               const Eigen::VectorXd& va) {
    const NrIndexing ix = make_indexing(c);
    Eigen::VectorXd p_sched, q_sched, p, q;
    scheduled_injections(c, scenario, p_sched, q_sched);
    calculated_power(ybus, vm, va, p, q);
    Eigen::VectorXd mis(ix.non_slack.size() + ix.pq.size());
    Eigen::Index r = 0;
    for (int i : ix.non_slack) mis(r++) = p_sched(i) - p(i);
    for (int i : ix.pq) mis(r++) = q_sched(i) - q(i);
    return mis;
}

Eigen::MatrixXd power_flow_jacobian(const grid::NetworkCase& c, const grid::YBus& ybus,
                                    const Eigen::VectorXd& vm, const Eigen::VectorXd& va) {
    const int n = c.n();
    const NrIndexing ix = make_indexing(c);
    const int na = static_cast<int>(ix.non_slack.size());
    const int nq = static_cast<int>(ix.pq.size());
    std::vector<int> apos(n, -1), vpos(n, -1);
    for (int k = 0; k < na; ++k) apos[ix.non_slack[k]] = k;
    for (int k = 0; k < nq; ++k) vpos[ix.pq[k]] = k;
    Eigen::VectorXd p, q;
    calculated_power(ybus, vm, va, p, q);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(na + nq, na + nq);
    for (int i = 0; i < n; ++i) {
        const int ai = apos[i], vi = vpos[i];
        for (int k = 0; k < n; ++k) {
            const std::complex<double> yik = ybus(i, k);
            if (yik == std::complex<double>(0.0, 0.0) && i != k) continue;
            const int ak = apos[k], vk = vpos[k];
            if (i == k) {
                const double vm2 = vm(i) * vm(i);
                if (ai >= 0 && ak >= 0) jac(ai, ak) = -q(i) - yik.imag() * vm2;
                if (ai >= 0 && vk >= 0) jac(ai, na + vk) = p(i) / vm(i) + yik.real() * vm(i);
                if (vi >= 0 && ak >= 0) jac(na + vi, ak) = p(i) - yik.real() * vm2;
                if (vi >= 0 && vk >= 0) jac(na + vi, na + vk) = q(i) / vm(i) - yik.imag() * vm(i);
            } else {
                const double th = va(i) - va(k);
                const double gc = yik.real() * std::cos(th) + yik.imag() * std::sin(th);
                const double gs = yik.real() * std::sin(th) - yik.imag() * std::cos(th);
                if (ai >= 0 && ak >= 0) jac(ai, ak) = vm(i) * vm(k) * gs;
                if (ai >= 0 && vk >= 0) jac(ai, na + vk) = vm(i) * gc;
                if (vi >= 0 && ak >= 0) jac(na + vi, ak) = -vm(i) * vm(k) * gc;
                if (vi >= 0 && vk >= 0) jac(na + vi, na + vk) = vm(i) * gs;
            }
        }
    }
    return jac;
}

PowerFlowSolution solve_power_flow(const grid::NetworkCase& c, const LoadScenario& scenario,
                                   const grid::YBus& ybus, std::optional<int> outage,
                                   const PowerFlowOptions& opts) {
    if (!is_connected(grid::build_adjacency(c, outage)))
        throw Error("power flow on a disconnected topology");
    const int n = c.n();
    const NrIndexing ix = make_indexing(c);
    const int na = static_cast<int>(ix.non_slack.size());
    const int nq = static_cast<int>(ix.pq.size());

    Eigen::VectorXd p_sched, q_sched;
    scheduled_injections(c, scenario, p_sched, q_sched);

    PowerFlowSolution sol;
    sol.vm.resize(n);
    sol.va.resize(n);
    const double slack_angle = c.buses[ix.slack].va_init;
    for (int i = 0; i < n; ++i) {
        const grid::Bus& b = c.buses[i];
        if (b.kind == BusKind::Pq) {
            sol.vm(i) = opts.flat_start ? 1.0 : b.vm_init;
        } else {
            sol.vm(i) = b.v_setpoint;
        }
        sol.va(i) = opts.flat_start ? slack_angle : b.va_init;
    }
    sol.va(ix.slack) = slack_angle;

    Eigen::VectorXd p(n), q(n);
    Eigen::VectorXd mis(na + nq);

    for (int iter = 0; iter <= opts.max_iterations; ++iter) {
        calculated_power(ybus, sol.vm, sol.va, p, q);
        Eigen::Index r = 0;
        for (int i : ix.non_slack) mis(r++) = p_sched(i) - p(i);
        for (int i : ix.pq) mis(r++) = q_sched(i) - q(i);
        sol.max_mismatch = mis.size() ? mis.cwiseAbs().maxCoeff() : 0.0;
        sol.iterations = iter;
        if (sol.max_mismatch < opts.tolerance) {
            sol.converged = true;
            return sol;
        }
        if (iter == opts.max_iterations) break;

        const Eigen::MatrixXd jac = power_flow_jacobian(c, ybus, sol.vm, sol.va);
        const Eigen::VectorXd dx = jac.partialPivLu().solve(mis);
        if (!dx.allFinite()) break;
        for (int k = 0; k < na; ++k) sol.va(ix.non_slack[k]) += dx(k);
        for (int k = 0; k < nq; ++k) sol.vm(ix.pq[k]) += dx(na + k);
    }
    sol.converged = false;
    return sol;
}

PowerFlowSolution solve_power_flow(const grid::NetworkCase& c, const LoadScenario& scenario,
                                   std::optional<int> outage, const PowerFlowOptions& opts) {
    return solve_power_flow(c, scenario, grid::build_ybus(c, outage), outage, opts);
}

std::vector<BranchFlow> branch_flows(const grid::NetworkCase& c, const PowerFlowSolution& sol,
                                     std::optional<int> outage) {
    if (!sol.converged) throw Error("branch flows require a converged solution");
    std::vector<BranchFlow> flows;
    for (std::size_t k = 0; k < c.branches.size(); ++k) {
        const grid::Branch& br = c.branches[k];
        if (!br.in_service || (outage && static_cast<int>(k) == *outage)) continue;
        const grid::BranchAdmittance y = grid::branch_admittance(br);
        const int f = c.index_of(br.from_bus);
        const int t = c.index_of(br.to_bus);
        const std::complex<double> vf = std::polar(sol.vm(f), sol.va(f));
        const std::complex<double> vt = std::polar(sol.vm(t), sol.va(t));
        const std::complex<double> sf = vf * std::conj(y.yff * vf + y.yft * vt) * c.base_mva;
        const std::complex<double> st = vt * std::conj(y.ytf * vf + y.ytt * vt) * c.base_mva;
        flows.push_back({static_cast<int>(k), sf.real(), sf.imag(), st.real(), st.imag()});
    }
    return flows;
}

}  // namespace gridse::pf
