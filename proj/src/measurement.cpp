#include "gridse/measurement.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace gridse::meas {

using nlohmann::json;

NoiseModel noise_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("noise model JSON parse error: ") + e.what());
    }
    const std::string type = j.at("type").get<std::string>();
    if (type == "gaussian") {
        GaussianNoise g;
        g.std_mag_pct = j.at("std_mag").get<double>();
        g.std_ang_deg = j.at("std_ang").get<double>();
        if (g.std_mag_pct < 0.0 || g.std_ang_deg < 0.0) throw Error("noise stds must be >= 0");
        return g;
    }
    if (type == "gmm2") {
        Gmm2Noise m;
        const auto arr = [&](const char* key) {
            const auto a = j.at(key);
            if (a.size() != 2) throw Error(std::string("noise field ") + key + " needs 2 entries");
            return std::array<double, 2>{a[0].get<double>(), a[1].get<double>()};
        };
        m.means_mag = arr("means_mag");
        m.stds_mag = arr("stds_mag");
        m.means_ang = arr("means_ang");
        m.stds_ang = arr("stds_ang");
        m.weights = arr("weights");
        if (m.stds_mag[0] < 0 || m.stds_mag[1] < 0 || m.stds_ang[0] < 0 || m.stds_ang[1] < 0)
            throw Error("noise stds must be >= 0");
        if (m.weights[0] < 0 || m.weights[1] < 0 ||
            std::abs(m.weights[0] + m.weights[1] - 1.0) > 1e-9)
            throw Error("GMM weights must be nonnegative and sum to 1");
        return m;
    }
    throw Error("unknown noise model type '" + type + "'");
}

std::string noise_to_json(const NoiseModel& model) {
    if (const auto* g = std::get_if<GaussianNoise>(&model)) {
        return json{{"type", "gaussian"}, {"std_mag", g->std_mag_pct}, {"std_ang", g->std_ang_deg}}
            .dump();
    }
    const auto& m = std::get<Gmm2Noise>(model);
    return json{{"type", "gmm2"},
                {"means_mag", m.means_mag},
                {"stds_mag", m.stds_mag},
                {"means_ang", m.means_ang},
                {"stds_ang", m.stds_ang},
                {"weights", m.weights}}
        .dump();
}

bool PmuPlacement::has(int bus_index) const {
    return std::binary_search(buses.begin(), buses.end(), bus_index);
}

PmuPlacement place_pmus(const grid::AdjacencyMatrix& adj) {
    const int n = adj.n;
    std::vector<char> covered(n, 0);
    int remaining = n;
    PmuPlacement p;
    while (remaining > 0) {
        int best = -1, best_gain = -1;
        for (int v = 0; v < n; ++v) {
            int gain = covered[v] ? 0 : 1;
            for (int u = 0; u < n; ++u) {
                if (adj.entries(v, u) != 0 && !covered[u]) ++gain;
            }
            if (gain > best_gain) {
                best_gain = gain;
                best = v;
            }
        }
        p.buses.push_back(best);
        if (!covered[best]) {
            covered[best] = 1;
            --remaining;
        }
        for (int u = 0; u < n; ++u) {
            if (adj.entries(best, u) != 0 && !covered[u]) {
                covered[u] = 1;
                --remaining;
            }
        }
    }
    std::sort(p.buses.begin(), p.buses.end());
    if (!dominates(p, adj)) throw Error("greedy placement failed to dominate");  // unreachable
    return p;
}

bool dominates(const PmuPlacement& p, const grid::AdjacencyMatrix& adj) {
    std::vector<char> covered(adj.n, 0);
    for (int v : p.buses) {
        covered[v] = 1;
        for (int u = 0; u < adj.n; ++u) {
            if (adj.entries(v, u) != 0) covered[u] = 1;
        }
    }
    return std::all_of(covered.begin(), covered.end(), [](char c) { return c != 0; });
}

double sample_noise(const NoiseModel& model, Rng& rng, NoiseKind kind) {
    if (const auto* g = std::get_if<GaussianNoise>(&model)) {
        const double std = kind == NoiseKind::Magnitude ? g->std_mag_pct : g->std_ang_deg;
        return std == 0.0 ? 0.0 : rng.normal(0.0, std);
    }
    const auto& m = std::get<Gmm2Noise>(model);
    const double u = rng.uniform(0.0, 1.0);
    const int comp = u < m.weights[0] ? 0 : 1;
    const double mean = kind == NoiseKind::Magnitude ? m.means_mag[comp] : m.means_ang[comp];
    const double std = kind == NoiseKind::Magnitude ? m.stds_mag[comp] : m.stds_ang[comp];
    return std == 0.0 ? mean : rng.normal(mean, std);
}

std::vector<CurrentChannel> enumerate_channels(const grid::NetworkCase& c, const PmuPlacement& p,
                                               std::optional<int> outage) {
    std::vector<CurrentChannel> channels;
    for (std::size_t k = 0; k < c.branches.size(); ++k) {
        const grid::Branch& br = c.branches[k];
        if (!br.in_service || (outage && static_cast<int>(k) == *outage)) continue;
        const int f = c.index_of(br.from_bus);
        const int t = c.index_of(br.to_bus);
        if (p.has(f)) channels.push_back({f, static_cast<int>(k), true, t});
        if (p.has(t)) channels.push_back({t, static_cast<int>(k), false, f});
    }
    return channels;
}

namespace {

std::complex<double> corrupt(std::complex<double> truth, const NoiseModel& noise, Rng& rng) {
    const double mag_pct = sample_noise(noise, rng, NoiseKind::Magnitude);
    const double ang_deg = sample_noise(noise, rng, NoiseKind::Angle);
    return std::polar(std::abs(truth) * (1.0 + mag_pct / 100.0),
                      std::arg(truth) + deg2rad(ang_deg));
}

}  // namespace

MeasurementSet synthesize_measurements(const pf::PowerFlowSolution& sol,
                                       const grid::NetworkCase& c, const PmuPlacement& p,
                                       const NoiseModel& noise, Rng& rng,
                                       std::optional<int> outage) {
    if (!sol.converged) throw Error("measurement synthesis requires a converged solution");
    MeasurementSet ms;
    ms.pmu_buses = p.buses;
    ms.channels = enumerate_channels(c, p, outage);
    Eigen::VectorXcd v(c.n());
    for (int i = 0; i < c.n(); ++i) v(i) = std::polar(sol.vm(i), sol.va(i));
    for (int i : p.buses) {
        ms.voltage_true.push_back(v(i));
        ms.voltage.push_back(corrupt(v(i), noise, rng));
    }
    for (const CurrentChannel& ch : ms.channels) {
        const grid::BranchAdmittance y = grid::branch_admittance(c.branches[ch.branch]);
        const std::complex<double> yii = ch.at_from_end ? y.yff : y.ytt;
        const std::complex<double> yij = ch.at_from_end ? y.yft : y.ytf;
        const std::complex<double> truth = yii * v(ch.pmu_bus) + yij * v(ch.remote_bus);
        ms.current_true.push_back(truth);
        ms.current.push_back(corrupt(truth, noise, rng));
    }
    return ms;
}

Eigen::MatrixXd build_feature_matrix(const MeasurementSet& ms, const grid::NetworkCase& c,
                                     const PmuPlacement& p, std::optional<int> outage) {
    const int n = c.n();
    Eigen::VectorXcd features(n);
    std::vector<char> set(n, 0);
    for (std::size_t k = 0; k < ms.pmu_buses.size(); ++k) {
        features(ms.pmu_buses[k]) = ms.voltage[k];
        set[ms.pmu_buses[k]] = 1;
    }
    // pseudo-voltage per non-PMU bus: invert the branch two-port from each
    // PMU neighbor's voltage + current, average in rectangular coordinates
    Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(n);
    Eigen::VectorXi cnt = Eigen::VectorXi::Zero(n);
    for (std::size_t k = 0; k < ms.channels.size(); ++k) {
        const CurrentChannel& ch = ms.channels[k];
        if (set[ch.remote_bus]) continue;
        const grid::BranchAdmittance y = grid::branch_admittance(c.branches[ch.branch]);
        const std::complex<double> yii = ch.at_from_end ? y.yff : y.ytt;
        const std::complex<double> yij = ch.at_from_end ? y.yft : y.ytf;
        const std::complex<double> v_meas = ms.voltage[static_cast<std::size_t>(
            std::lower_bound(ms.pmu_buses.begin(), ms.pmu_buses.end(), ch.pmu_bus) -
            ms.pmu_buses.begin())];
        sum(ch.remote_bus) += (ms.current[k] - yii * v_meas) / yij;
        cnt(ch.remote_bus) += 1;
    }
    Eigen::MatrixXd x(n, 2);
    for (int i = 0; i < n; ++i) {
        std::complex<double> vi;
        if (set[i]) {
            vi = features(i);
        } else if (cnt(i) > 0) {
            vi = sum(i) / static_cast<double>(cnt(i));
        } else {
            throw Error("bus " + std::to_string(c.buses[i].id) +
                        " is not covered by the PMU placement");
        }
        x(i, 0) = std::abs(vi);
        x(i, 1) = std::arg(vi);
    }
    (void)outage;
    return x;
}

LseProblem build_H(const grid::NetworkCase& c, const PmuPlacement& p, std::optional<int> outage) {
    const int n = c.n();
    const std::vector<CurrentChannel> channels = enumerate_channels(c, p, outage);
    const int m = 2 * static_cast<int>(p.buses.size()) + 2 * static_cast<int>(channels.size());
    LseProblem prob;
    prob.n = n;
    prob.H = Eigen::MatrixXd::Zero(m, 2 * n);
    int r = 0;
    for (int i : p.buses) {
        prob.H(r, i) = 1.0;
        prob.H(r + 1, n + i) = 1.0;
        r += 2;
    }
    for (const CurrentChannel& ch : channels) {
        const grid::BranchAdmittance y = grid::branch_admittance(c.branches[ch.branch]);
        const std::complex<double> yii = ch.at_from_end ? y.yff : y.ytt;
        const std::complex<double> yij = ch.at_from_end ? y.yft : y.ytf;
        const int i = ch.pmu_bus, j = ch.remote_bus;
        // I = y_ii V_i + y_ij V_j expanded over rectangular parts
        prob.H(r, i) = yii.real();
        prob.H(r, n + i) = -yii.imag();
        prob.H(r, j) = yij.real();
        prob.H(r, n + j) = -yij.imag();
        prob.H(r + 1, i) = yii.imag();
        prob.H(r + 1, n + i) = yii.real();
        prob.H(r + 1, j) = yij.imag();
        prob.H(r + 1, n + j) = yij.real();
        r += 2;
    }
    prob.qr.compute(prob.H);
    return prob;
}

Eigen::VectorXd measurement_vector(const MeasurementSet& ms) {
    Eigen::VectorXd z(2 * ms.voltage.size() + 2 * ms.current.size());
    Eigen::Index r = 0;
    for (const auto& v : ms.voltage) {
        z(r) = v.real();
        z(r + 1) = v.imag();
        r += 2;
    }
    for (const auto& i : ms.current) {
        z(r) = i.real();
        z(r + 1) = i.imag();
        r += 2;
    }
    return z;
}

StateEstimate solve_lse(const LseProblem& problem, const Eigen::VectorXd& z) {
    if (z.size() != problem.H.rows()) throw Error("measurement vector length mismatch");
    if (problem.rank() < 2 * problem.n)
        throw Error("H is rank deficient: observability lost (rank " +
                    std::to_string(problem.rank()) + " of " + std::to_string(2 * problem.n) + ")");
    const Eigen::VectorXd x = problem.qr.solve(z);
    StateEstimate est;
    est.vm.resize(problem.n);
    est.va.resize(problem.n);
    for (int i = 0; i < problem.n; ++i) {
        const std::complex<double> v(x(i), x(problem.n + i));
        est.vm(i) = std::abs(v);
        est.va(i) = std::arg(v);
    }
    return est;
}

}  // namespace gridse::meas
