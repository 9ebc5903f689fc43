#include "gridse/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace gridse::xp {

int find_branch(const grid::NetworkCase& c, int from_bus, int to_bus) {
    for (std::size_t k = 0; k < c.branches.size(); ++k) {
        const grid::Branch& br = c.branches[k];
        if (!br.in_service) continue;
        if ((br.from_bus == from_bus && br.to_bus == to_bus) ||
            (br.from_bus == to_bus && br.to_bus == from_bus))
            return static_cast<int>(k);
    }
    throw Error("no in-service branch joins buses " + std::to_string(from_bus) + " and " +
                std::to_string(to_bus));
}

namespace {

pf::LoadScenario unit_scenario(const grid::NetworkCase& c) {
    pf::LoadScenario s;
    s.global_mult = 1.0;
    s.per_bus_mult = Eigen::VectorXd::Ones(c.n());
    return s;
}

}  // namespace

std::vector<OutageImpact> rank_outages(const grid::NetworkCase& c) {
    const pf::LoadScenario base_load = unit_scenario(c);
    const pf::PowerFlowSolution base_sol = pf::solve_power_flow(c, base_load);
    if (!base_sol.converged) throw Error("base case power flow did not converge");
    std::map<int, double> base_pfrom;
    for (const pf::BranchFlow& f : pf::branch_flows(c, base_sol)) base_pfrom[f.branch] = f.p_from;

    std::vector<OutageImpact> impacts;
    for (std::size_t k = 0; k < c.branches.size(); ++k) {
        const grid::Branch& br = c.branches[k];
        if (!br.in_service) continue;
        OutageImpact oi;
        oi.branch = static_cast<int>(k);
        oi.from_bus = br.from_bus;
        oi.to_bus = br.to_bus;
        const auto outage = std::optional<int>(static_cast<int>(k));
        if (!grid::is_connected(grid::build_adjacency(c, outage))) {
            oi.connected = false;
            impacts.push_back(oi);
            continue;
        }
        const pf::PowerFlowSolution sol = pf::solve_power_flow(c, base_load, outage);
        if (!sol.converged) {
            oi.converged = false;
            impacts.push_back(oi);
            continue;
        }
        double impact = 0.0;
        for (const pf::BranchFlow& f : pf::branch_flows(c, sol, outage)) {
            if (f.branch == oi.branch) continue;
            impact += std::abs(f.p_from - base_pfrom.at(f.branch));
        }
        oi.impact_mw = impact;
        impacts.push_back(oi);
    }
    std::sort(impacts.begin(), impacts.end(), [](const OutageImpact& a, const OutageImpact& b) {
        const bool ranked_a = a.connected && a.converged;
        const bool ranked_b = b.connected && b.converged;
        if (ranked_a != ranked_b) return ranked_a;
        if (ranked_a && a.impact_mw != b.impact_mw) return a.impact_mw > b.impact_mw;
        return a.branch < b.branch;
    });
    return impacts;
}

namespace {

struct EvalSet {
    std::vector<Eigen::MatrixXd> features;
    std::vector<Eigen::MatrixXd> labels;
    std::vector<Eigen::MatrixXd> lse;  // empty when not observable
    bool lse_observable = true;
};

EvalSet generate_eval_set(const grid::NetworkCase& c, const meas::PmuPlacement& placement,
                          const meas::NoiseModel& noise, int n_samples, std::uint64_t seed,
                          const pf::ScenarioConfig& scen, std::optional<int> outage) {
    EvalSet set;
    const grid::YBus ybus = grid::build_ybus(c, outage);
    meas::LseProblem lse_problem = meas::build_H(c, placement, outage);
    set.lse_observable = lse_problem.rank() == 2 * c.n();
    const int max_redraws = std::max(1, n_samples / 100);
    int redraws = 0;
    std::uint64_t redraw_index = static_cast<std::uint64_t>(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        pf::SyntheticSample s =
            pf::make_sample(c, ybus, placement, noise, seed, i, scen, outage);
        while (!s.converged) {
            if (++redraws > max_redraws) throw Error("redraw cap exceeded in evaluation set");
            s = pf::make_sample(c, ybus, placement, noise, seed, redraw_index++, scen, outage);
        }
        if (set.lse_observable) {
            const meas::StateEstimate est =
                meas::solve_lse(lse_problem, meas::measurement_vector(s.measurements));
            Eigen::MatrixXd lse_mat(c.n(), 2);
            lse_mat.col(0) = est.vm;
            lse_mat.col(1) = est.va;
            set.lse.push_back(std::move(lse_mat));
        }
        set.features.push_back(std::move(s.features));
        set.labels.push_back(std::move(s.labels));
    }
    return set;
}

std::vector<Eigen::MatrixXd> predict_all(const nn::GnnModel& gnn, const nn::GraphContext& g,
                                         const std::vector<Eigen::MatrixXd>& features) {
    std::vector<Eigen::MatrixXd> preds;
    preds.reserve(features.size());
    for (const Eigen::MatrixXd& x : features) preds.push_back(gnn.predict(g, x));
    return preds;
}

std::vector<Eigen::MatrixXd> predict_all(const nn::MlpModel& mlp,
                                         const std::vector<Eigen::MatrixXd>& features) {
    std::vector<Eigen::MatrixXd> preds;
    preds.reserve(features.size());
    for (const Eigen::MatrixXd& x : features) preds.push_back(mlp.predict(x));
    return preds;
}

}  // namespace

NoiseStudyResult run_noise_study(const grid::NetworkCase& c, const meas::PmuPlacement& placement,
                                 const StudyConfig& cfg) {
    const grid::AdjacencyMatrix adj = grid::build_adjacency(c);
    const nn::GraphContext g = nn::GraphContext::build(adj);

    const std::uint64_t seed_train_gmm = cfg.data_seed;
    const std::uint64_t seed_test_gmm = cfg.data_seed + 1;
    const std::uint64_t seed_train_gauss = cfg.data_seed + 2;
    const std::uint64_t seed_test_gauss = cfg.data_seed + 3;

    const pf::Dataset train_gmm = pf::generate_dataset(c, cfg.train_samples, cfg.gmm_noise,
                                                       placement, seed_train_gmm, std::nullopt,
                                                       cfg.scenario);
    const pf::Dataset train_gauss = pf::generate_dataset(c, cfg.train_samples, cfg.gaussian_noise,
                                                         placement, seed_train_gauss, std::nullopt,
                                                         cfg.scenario);
    const EvalSet test_gmm = generate_eval_set(c, placement, cfg.gmm_noise, cfg.test_samples,
                                               seed_test_gmm, cfg.scenario, std::nullopt);
    const EvalSet test_gauss = generate_eval_set(c, placement, cfg.gaussian_noise,
                                                 cfg.test_samples, seed_test_gauss, cfg.scenario,
                                                 std::nullopt);

    nn::TrainConfig tc = cfg.training;
    tc.verbose = cfg.verbose;

    NoiseStudyResult out;
    {
        Rng init(cfg.model_seed);
        nn::GnnConfig gc;
        gc.hidden = cfg.gnn_hidden;
        out.gnn_gmm = nn::GnnModel::init(gc, 2, init);
        tc.seed = cfg.model_seed;
        train_gnn(out.gnn_gmm, g, train_gmm.features, train_gmm.labels, tc);
    }
    {
        Rng init(cfg.model_seed + 1);
        nn::GnnConfig gc;
        gc.hidden = cfg.gnn_hidden;
        out.gnn_gaussian = nn::GnnModel::init(gc, 2, init);
        tc.seed = cfg.model_seed + 1;
        train_gnn(out.gnn_gaussian, g, train_gauss.features, train_gauss.labels, tc);
    }
    {
        Rng init(cfg.model_seed + 2);
        out.mlp_gmm = nn::MlpModel::init(nn::MlpConfig{}, c.n(), init);
        tc.seed = cfg.model_seed + 2;
        train_mlp(out.mlp_gmm, train_gmm.features, train_gmm.labels, tc);
    }

    out.table["lse"]["gmm"] = compute_metrics(test_gmm.lse, test_gmm.labels, out.gnn_gmm.norm);
    out.table["lse"]["gaussian"] =
        compute_metrics(test_gauss.lse, test_gauss.labels, out.gnn_gaussian.norm);
    out.table["gnn"]["gmm"] =
        compute_metrics(predict_all(out.gnn_gmm, g, test_gmm.features), test_gmm.labels,
                        out.gnn_gmm.norm);
    out.table["gnn"]["gaussian"] =
        compute_metrics(predict_all(out.gnn_gaussian, g, test_gauss.features), test_gauss.labels,
                        out.gnn_gaussian.norm);
    out.table["mlp"]["gmm"] =
        compute_metrics(predict_all(out.mlp_gmm, test_gmm.features), test_gmm.labels,
                        out.gnn_gmm.norm);
    return out;
}

namespace {

TopologyResult evaluate_topology(const grid::NetworkCase& c, const meas::PmuPlacement& placement,
                                 const StudyConfig& cfg, const nn::GnnModel& gnn,
                                 const nn::MlpModel& mlp, int branch) {
    const grid::Branch& br = c.branches[branch];
    TopologyResult tr;
    tr.branch = branch;
    tr.topology = std::to_string(br.from_bus) + "-" + std::to_string(br.to_bus);

    const std::optional<int> outage(branch);
    const EvalSet set = generate_eval_set(c, placement, cfg.gmm_noise, cfg.test_samples,
                                          cfg.data_seed + 100 + static_cast<std::uint64_t>(branch),
                                          cfg.scenario, outage);
    // inference consumes the post-outage adjacency; no retraining
    const nn::GraphContext g_out =
        nn::GraphContext::build(grid::build_adjacency(c, outage), gnn.config.self_inclusive_degree);

    const std::vector<Eigen::MatrixXd> gnn_pred = predict_all(gnn, g_out, set.features);
    const std::vector<Eigen::MatrixXd> mlp_pred = predict_all(mlp, set.features);
    tr.gnn = compute_metrics(gnn_pred, set.labels, gnn.norm);
    tr.mlp = compute_metrics(mlp_pred, set.labels, gnn.norm);
    tr.lse_observable = set.lse_observable;
    if (set.lse_observable) tr.lse = compute_metrics(set.lse, set.labels, gnn.norm);

    const Eigen::MatrixXd gnn_err = per_sample_errors(gnn_pred, set.labels);
    const Eigen::MatrixXd mlp_err = per_sample_errors(mlp_pred, set.labels);
    const auto column = [](const Eigen::MatrixXd& m, int c0) {
        return std::vector<double>(m.col(c0).data(), m.col(c0).data() + m.rows());
    };
    tr.gnn_density_mag = error_density(column(gnn_err, 0), cfg.density_mag_lo, cfg.density_mag_hi,
                                       cfg.density_bins);
    tr.gnn_density_ang = error_density(column(gnn_err, 1), cfg.density_ang_lo, cfg.density_ang_hi,
                                       cfg.density_bins);
    tr.mlp_density_mag = error_density(column(mlp_err, 0), cfg.density_mag_lo, cfg.density_mag_hi,
                                       cfg.density_bins);
    tr.mlp_density_ang = error_density(column(mlp_err, 1), cfg.density_ang_lo, cfg.density_ang_hi,
                                       cfg.density_bins);
    return tr;
}

}  // namespace

TopologyStudyResult run_topology_study(const grid::NetworkCase& c,
                                       const meas::PmuPlacement& placement, const StudyConfig& cfg,
                                       const nn::GnnModel& gnn, const nn::MlpModel& mlp, int k,
                                       const std::vector<std::pair<int, int>>* pinned_most,
                                       const std::vector<std::pair<int, int>>* pinned_least) {
    std::vector<int> most, least;
    if (pinned_most && pinned_least) {
        for (const auto& [f, t] : *pinned_most) most.push_back(find_branch(c, f, t));
        for (const auto& [f, t] : *pinned_least) least.push_back(find_branch(c, f, t));
    } else {
        const std::vector<OutageImpact> ranked = rank_outages(c);
        std::vector<const OutageImpact*> ok;
        for (const OutageImpact& oi : ranked)
            if (oi.connected && oi.converged) ok.push_back(&oi);
        if (static_cast<int>(ok.size()) < 2 * k) throw Error("not enough rankable outages");
        for (int i = 0; i < k; ++i) most.push_back(ok[i]->branch);
        for (int i = 0; i < k; ++i) least.push_back(ok[ok.size() - 1 - i]->branch);
    }
    TopologyStudyResult out;
    for (int b : most)
        out.most_impactful.push_back(evaluate_topology(c, placement, cfg, gnn, mlp, b));
    for (int b : least)
        out.least_impactful.push_back(evaluate_topology(c, placement, cfg, gnn, mlp, b));
    return out;
}

}  // namespace gridse::xp
