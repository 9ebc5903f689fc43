// gridse: command-line workbench for PMU-based state estimation studies.
//
// Subcommands: gen-data, place-pmus, train, eval, lse, topo-scan, report.
// Every command takes explicit seeds, writes fixed-name artifacts under
// --out, and drops a .meta.json sidecar with the seeds, config hash and
// commit id so runs can be tied back to their configuration.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridse/case_io.hpp"
#include "gridse/dataset.hpp"
#include "gridse/experiments.hpp"
#include "gridse/measurement.hpp"
#include "gridse/metrics.hpp"
#include "gridse/nn.hpp"
#include "gridse/serialize.hpp"

#ifndef GRIDSE_COMMIT
#define GRIDSE_COMMIT "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gridse;

namespace {

struct RunSettings {
    pf::ScenarioConfig scenario;
    nn::TrainConfig training;
    int gnn_hidden = 64;
    int density_bins = 60;
    double density_mag_lo = -0.01, density_mag_hi = 0.01;
    double density_ang_lo = -1.0, density_ang_hi = 1.0;
};

RunSettings load_settings(const std::string& config_path) {
    RunSettings s;
    if (config_path.empty()) return s;
    std::ifstream is(config_path);
    if (!is) throw Error("cannot open config " + config_path);
    const json j = json::parse(is);
    if (j.contains("scenario")) {
        const json& sc = j["scenario"];
        s.scenario.global_lo = sc.value("global_lo", s.scenario.global_lo);
        s.scenario.global_hi = sc.value("global_hi", s.scenario.global_hi);
        s.scenario.per_bus_lo = sc.value("per_bus_lo", s.scenario.per_bus_lo);
        s.scenario.per_bus_hi = sc.value("per_bus_hi", s.scenario.per_bus_hi);
    }
    if (j.contains("training")) {
        const json& t = j["training"];
        s.training.epochs = t.value("epochs", s.training.epochs);
        s.training.batch_size = t.value("batch_size", s.training.batch_size);
        s.training.lr = t.value("lr", s.training.lr);
    }
    s.gnn_hidden = j.value("hidden", s.gnn_hidden);
    if (j.contains("density")) {
        const json& d = j["density"];
        s.density_bins = d.value("bins", s.density_bins);
        s.density_mag_lo = d.value("mag_lo", s.density_mag_lo);
        s.density_mag_hi = d.value("mag_hi", s.density_mag_hi);
        s.density_ang_lo = d.value("ang_lo", s.density_ang_lo);
        s.density_ang_hi = d.value("ang_hi", s.density_ang_hi);
    }
    return s;
}

// "8-5" -> branch index of the in-service line joining buses 8 and 5
std::optional<int> parse_outage(const grid::NetworkCase& c, const std::string& text) {
    if (text.empty()) return std::nullopt;
    const auto dash = text.find('-');
    if (dash == std::string::npos)
        throw Error("--outage expects FROM-TO bus ids, e.g. 8-5");
    const int f = std::stoi(text.substr(0, dash));
    const int t = std::stoi(text.substr(dash + 1));
    return xp::find_branch(c, f, t);
}

meas::PmuPlacement load_placement(const std::string& path, const grid::NetworkCase& c) {
    const grid::AdjacencyMatrix adj = grid::build_adjacency(c);
    if (path.empty() || path == "auto") return meas::place_pmus(adj);
    std::ifstream is(path);
    if (!is) throw Error("cannot open placement " + path);
    const json j = json::parse(is);
    meas::PmuPlacement p;
    for (const auto& id : j) p.buses.push_back(c.index_of(id.get<int>()));
    std::sort(p.buses.begin(), p.buses.end());
    if (!meas::dominates(p, adj)) throw Error("placement does not dominate the base graph");
    return p;
}

std::string noise_text(const std::string& arg) {
    // accepts inline JSON or a path to a JSON file
    if (!arg.empty() && arg.front() == '{') return arg;
    std::ifstream is(arg);
    if (!is) throw Error("cannot open noise model " + arg);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_sidecar(const fs::path& out_dir, const std::string& command, const json& config,
                   const std::vector<std::uint64_t>& seeds) {
    json side;
    side["command"] = command;
    side["seeds"] = seeds;
    side["config_hash"] = io::fnv1a_hex(config.dump());
    side["config"] = config;
    side["commit"] = GRIDSE_COMMIT;
    std::ofstream os(out_dir / (command + ".meta.json"));
    os << side.dump(1) << "\n";
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void write_metrics_csv(const fs::path& path, const std::vector<json>& rows) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << "estimator,noise,topology,mae_angle_deg,mape_magnitude_pct,r2_angle,r2_magnitude,"
          "total_mae,samples,excluded_zero_magnitude\n";
    for (const json& r : rows) {
        os << r.at("estimator").get<std::string>() << ',' << r.at("noise").get<std::string>() << ','
           << r.at("topology").get<std::string>() << ',' << fmt(r.at("mae_angle_deg").get<double>())
           << ',' << fmt(r.at("mape_magnitude_pct").get<double>()) << ','
           << fmt(r.at("r2_angle").get<double>()) << ',' << fmt(r.at("r2_magnitude").get<double>())
           << ',' << fmt(r.at("total_mae").get<double>()) << ',' << r.at("samples").get<long>()
           << ',' << r.at("excluded").get<long>() << "\n";
    }
}

json metrics_row(const std::string& estimator, const std::string& noise,
                 const std::string& topology, const xp::MetricsReport& m) {
    return {{"estimator", estimator},
            {"noise", noise},
            {"topology", topology},
            {"mae_angle_deg", m.mae_angle_deg},
            {"mape_magnitude_pct", m.mape_magnitude_pct},
            {"r2_angle", m.r2_angle},
            {"r2_magnitude", m.r2_magnitude},
            {"total_mae", m.total_mae},
            {"samples", m.samples},
            {"excluded", m.excluded_zero_magnitude}};
}

void write_density_csv(const fs::path& path, const xp::ErrorDensity& d) {
    std::ofstream os(path);
    os << "bin_left,bin_right,count\n";
    for (std::size_t k = 0; k < d.counts.size(); ++k)
        os << fmt(d.edges[k]) << ',' << fmt(d.edges[k + 1]) << ',' << d.counts[k] << "\n";
}

// ---------------------------------------------------------------- gen-data

int cmd_gen_data(const std::string& case_path, int samples, const std::string& noise_arg,
                 std::uint64_t seed, const std::string& outage_arg,
                 const std::string& placement_arg, const std::string& out_dir,
                 const RunSettings& settings) {
    const grid::NetworkCase c = grid::load_case(case_path);
    const std::optional<int> outage = parse_outage(c, outage_arg);
    const meas::NoiseModel noise = meas::noise_from_json(noise_text(noise_arg));
    const meas::PmuPlacement placement = load_placement(placement_arg, c);

    pf::Dataset ds = pf::generate_dataset(c, samples, noise, placement, seed, outage,
                                          settings.scenario);
    ds.case_id = fs::path(case_path).filename().string();
    ds.case_hash = io::file_hash(case_path);
    ds.noise_json = meas::noise_to_json(noise);
    const fs::path out(out_dir);
    fs::create_directories(out);
    pf::save_dataset(ds, out / "dataset");

    json cfg{{"case", case_path}, {"samples", samples}, {"noise", json::parse(ds.noise_json)},
             {"outage", outage_arg}, {"placement", placement_arg}};
    write_sidecar(out, "gen-data", cfg, {seed});
    std::cout << "wrote " << (out / "dataset").string() << " (" << ds.features.size()
              << " samples, topology " << ds.topology << ", redraws " << ds.redraws << ")\n";
    return 0;
}

// --------------------------------------------------------------- place-pmus

int cmd_place_pmus(const std::string& case_path, const std::string& out_dir) {
    const grid::NetworkCase c = grid::load_case(case_path);
    const grid::AdjacencyMatrix adj = grid::build_adjacency(c);
    const meas::PmuPlacement p = meas::place_pmus(adj);
    const fs::path out(out_dir);
    fs::create_directories(out);
    json ids = json::array();
    for (int b : p.buses) ids.push_back(c.buses[b].id);
    std::ofstream os(out / "placement.json");
    os << ids.dump() << "\n";
    write_sidecar(out, "place-pmus", json{{"case", case_path}}, {});
    std::cout << "placed " << p.buses.size() << " PMUs -> " << (out / "placement.json").string()
              << "\n";
    return 0;
}

// -------------------------------------------------------------------- train

int cmd_train(const std::string& model_kind, const std::string& dataset_dir,
              const std::string& case_path, int epochs, double lr, int hidden, int batch,
              std::uint64_t seed, const std::string& out_dir, const RunSettings& settings,
              bool verbose) {
    const grid::NetworkCase c = grid::load_case(case_path);
    const pf::Dataset ds = pf::load_dataset(fs::path(dataset_dir) / "dataset");
    if (!ds.case_hash.empty() && ds.case_hash != io::file_hash(case_path))
        throw Error("dataset was generated from a different case file (hash mismatch)");
    if (ds.n_nodes != c.n()) throw Error("dataset node count does not match the case");
    if (ds.topology != "base")
        std::cerr << "note: training on non-base topology " << ds.topology << "\n";

    nn::TrainConfig tc = settings.training;
    tc.epochs = epochs > 0 ? epochs : tc.epochs;
    tc.lr = lr > 0 ? lr : tc.lr;
    tc.batch_size = batch >= 0 ? batch : tc.batch_size;
    tc.seed = seed;
    tc.verbose = verbose;

    const fs::path out(out_dir);
    fs::create_directories(out);
    json meta{{"dataset_case_hash", ds.case_hash}, {"dataset_seed", ds.seed},
              {"topology", ds.topology}, {"train_seed", seed}, {"epochs", tc.epochs},
              {"lr", tc.lr}, {"batch_size", tc.batch_size}, {"samples", ds.features.size()}};

    nn::TrainTrace trace;
    if (model_kind == "gnn") {
        const grid::AdjacencyMatrix adj = grid::build_adjacency(c);
        const nn::GraphContext g = nn::GraphContext::build(adj);
        Rng init(seed);
        nn::GnnConfig gc;
        gc.hidden = hidden > 0 ? hidden : settings.gnn_hidden;
        nn::GnnModel model = nn::GnnModel::init(gc, 2, init);
        trace = nn::train_gnn(model, g, ds.features, ds.labels, tc);
        io::save_gnn(model, out / "model.bin", meta.dump());
    } else if (model_kind == "dnn") {
        Rng init(seed);
        nn::MlpModel model = nn::MlpModel::init(nn::MlpConfig{}, c.n(), init);
        trace = nn::train_mlp(model, ds.features, ds.labels, tc);
        io::save_mlp(model, out / "model.bin", meta.dump());
    } else {
        throw Error("--model must be gnn or dnn");
    }

    std::ofstream os(out / "loss.csv");
    os << "epoch,train_loss\n";
    for (std::size_t e = 0; e < trace.train_loss.size(); ++e)
        os << e << ',' << fmt(trace.train_loss[e]) << "\n";

    json cfg{{"model", model_kind}, {"dataset", dataset_dir}, {"case", case_path},
             {"epochs", tc.epochs}, {"lr", tc.lr}, {"batch", tc.batch_size},
             {"hidden", hidden > 0 ? hidden : settings.gnn_hidden}};
    write_sidecar(out, "train", cfg, {seed});
    std::cout << "trained " << model_kind << " for " << tc.epochs << " epochs, final loss "
              << trace.train_loss.back() << " -> " << (out / "model.bin").string() << "\n";
    return 0;
}

// --------------------------------------------------------------------- eval

int cmd_eval(const std::string& model_path, const std::string& dataset_dir,
             const std::string& case_path, bool base_adjacency, const std::string& out_dir,
             const RunSettings& settings) {
    const grid::NetworkCase c = grid::load_case(case_path);
    const pf::Dataset ds = pf::load_dataset(fs::path(dataset_dir) / "dataset");
    const json model_meta = json::parse(io::model_metadata(model_path));
    const std::string model_case_hash = model_meta.at("metadata").value("dataset_case_hash", "");
    if (!model_case_hash.empty() && !ds.case_hash.empty() && model_case_hash != ds.case_hash)
        throw Error("model and dataset come from different case files (hash mismatch); "
                    "regenerate artifacts with matching configuration");

    std::optional<int> outage;
    if (ds.topology != "base") {
        const auto dash = ds.topology.find('-');
        outage = xp::find_branch(c, std::stoi(ds.topology.substr(0, dash)),
                                 std::stoi(ds.topology.substr(dash + 1)));
    }

    io::AnyModel model = io::load_model(model_path);
    std::vector<Eigen::MatrixXd> preds;
    std::string estimator;
    nn::Normalization norm;
    if (std::holds_alternative<nn::GnnModel>(model)) {
        const nn::GnnModel& gnn = std::get<nn::GnnModel>(model);
        estimator = "gnn";
        norm = gnn.norm;
        const grid::AdjacencyMatrix adj =
            grid::build_adjacency(c, base_adjacency ? std::nullopt : outage);
        const nn::GraphContext g = nn::GraphContext::build(adj, gnn.config.self_inclusive_degree);
        for (const Eigen::MatrixXd& x : ds.features) preds.push_back(gnn.predict(g, x));
    } else {
        const nn::MlpModel& mlp = std::get<nn::MlpModel>(model);
        estimator = "dnn";
        norm = mlp.norm;
        for (const Eigen::MatrixXd& x : ds.features) preds.push_back(mlp.predict(x));
    }

    const xp::MetricsReport m = xp::compute_metrics(preds, ds.labels, norm);
    json noise = json::parse(ds.noise_json);
    const std::string noise_name = noise.value("type", "unknown") == "gmm2" ? "gmm" : "gaussian";

    const fs::path out(out_dir);
    fs::create_directories(out);
    write_metrics_csv(out / "metrics.csv", {metrics_row(estimator, noise_name, ds.topology, m)});

    const Eigen::MatrixXd errs = xp::per_sample_errors(preds, ds.labels);
    const auto column = [&](int c0) {
        return std::vector<double>(errs.col(c0).data(), errs.col(c0).data() + errs.rows());
    };
    write_density_csv(out / ("density_" + estimator + "_" + ds.topology + "_mag.csv"),
                      xp::error_density(column(0), settings.density_mag_lo,
                                        settings.density_mag_hi, settings.density_bins));
    write_density_csv(out / ("density_" + estimator + "_" + ds.topology + "_ang.csv"),
                      xp::error_density(column(1), settings.density_ang_lo,
                                        settings.density_ang_hi, settings.density_bins));

    json cfg{{"model", model_path}, {"dataset", dataset_dir}, {"case", case_path},
             {"base_adjacency", base_adjacency}};
    write_sidecar(out, "eval", cfg, {ds.seed});
    std::cout << estimator << " on " << ds.topology << ": MAE(angle) " << m.mae_angle_deg
              << " deg, MAPE(mag) " << m.mape_magnitude_pct << " %, TotalMAE " << m.total_mae
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------- lse

int cmd_lse(const std::string& case_path, const std::string& placement_arg,
            const std::string& noise_arg, int samples, std::uint64_t seed,
            const std::string& outage_arg, const std::string& out_dir,
            const RunSettings& settings) {
    const grid::NetworkCase c = grid::load_case(case_path);
    const std::optional<int> outage = parse_outage(c, outage_arg);
    const meas::NoiseModel noise = meas::noise_from_json(noise_text(noise_arg));
    const meas::PmuPlacement placement = load_placement(placement_arg, c);

    const grid::YBus ybus = grid::build_ybus(c, outage);
    meas::LseProblem problem = meas::build_H(c, placement, outage);
    if (problem.rank() < 2 * c.n())
        throw Error("LSE unobservable for this placement/topology (rank " +
                    std::to_string(problem.rank()) + ")");

    std::vector<Eigen::MatrixXd> preds, labels;
    const int max_redraws = std::max(1, samples / 100);
    int redraws = 0;
    std::uint64_t redraw_index = static_cast<std::uint64_t>(samples);
    // the same (seed, index) streams as gen-data, so LSE sees exactly the
    // samples a dataset generated with equal flags contains
    for (int i = 0; i < samples; ++i) {
        pf::SyntheticSample s =
            pf::make_sample(c, ybus, placement, noise, seed, i, settings.scenario, outage);
        while (!s.converged) {
            if (++redraws > max_redraws) throw Error("redraw cap exceeded");
            s = pf::make_sample(c, ybus, placement, noise, seed, redraw_index++, settings.scenario,
                                outage);
        }
        const meas::StateEstimate est =
            meas::solve_lse(problem, meas::measurement_vector(s.measurements));
        Eigen::MatrixXd pred(c.n(), 2);
        pred.col(0) = est.vm;
        pred.col(1) = est.va;
        preds.push_back(std::move(pred));
        labels.push_back(s.labels);
    }
    // Total MAE normalization comes from label statistics of this run
    const nn::Normalization norm = nn::fit_normalization(labels, labels);
    const xp::MetricsReport m = xp::compute_metrics(preds, labels, norm);

    const std::string topology = outage ? outage_arg : "base";
    const json noise_json = json::parse(meas::noise_to_json(noise));
    const std::string noise_name = noise_json.value("type", "") == "gmm2" ? "gmm" : "gaussian";
    const fs::path out(out_dir);
    fs::create_directories(out);
    write_metrics_csv(out / "metrics.csv", {metrics_row("lse", noise_name, topology, m)});
    json cfg{{"case", case_path}, {"placement", placement_arg}, {"noise", noise_json},
             {"samples", samples}, {"outage", outage_arg}};
    write_sidecar(out, "lse", cfg, {seed});
    std::cout << "lse on " << topology << ": MAE(angle) " << m.mae_angle_deg << " deg, MAPE(mag) "
              << m.mape_magnitude_pct << " %\n";
    return 0;
}

// ---------------------------------------------------------------- topo-scan

int cmd_topo_scan(const std::string& case_path, int top_k, bool pin_paper_lines,
                  const std::string& out_dir) {
    const grid::NetworkCase c = grid::load_case(case_path);
    const std::vector<xp::OutageImpact> ranked = xp::rank_outages(c);
    const fs::path out(out_dir);
    fs::create_directories(out);
    {
        std::ofstream os(out / "topo_rank.csv");
        os << "rank,branch,from,to,impact_mw,connected,converged\n";
        int rank = 1;
        for (const xp::OutageImpact& oi : ranked) {
            os << (oi.connected && oi.converged ? std::to_string(rank++) : "-") << ','
               << oi.branch << ',' << oi.from_bus << ',' << oi.to_bus << ','
               << fmt(oi.impact_mw) << ',' << (oi.connected ? 1 : 0) << ','
               << (oi.converged ? 1 : 0) << "\n";
        }
    }
    json lines;
    if (pin_paper_lines) {
        lines["most_impactful"] = json::array({{8, 5}, {30, 17}, {26, 30}, {38, 37}, {64, 65}});
        lines["least_impactful"] =
            json::array({{24, 70}, {56, 58}, {100, 101}, {14, 15}, {32, 113}});
    } else {
        std::vector<const xp::OutageImpact*> ok;
        for (const auto& oi : ranked)
            if (oi.connected && oi.converged) ok.push_back(&oi);
        if (static_cast<int>(ok.size()) < 2 * top_k) throw Error("not enough rankable outages");
        json most = json::array(), least = json::array();
        for (int i = 0; i < top_k; ++i) most.push_back({ok[i]->from_bus, ok[i]->to_bus});
        for (int i = 0; i < top_k; ++i)
            least.push_back({ok[ok.size() - 1 - i]->from_bus, ok[ok.size() - 1 - i]->to_bus});
        lines["most_impactful"] = most;
        lines["least_impactful"] = least;
    }
    std::ofstream os(out / "selected_lines.json");
    os << lines.dump(1) << "\n";
    write_sidecar(out, "topo-scan",
                  json{{"case", case_path}, {"top_k", top_k}, {"pin", pin_paper_lines}}, {});
    std::cout << "ranked " << ranked.size() << " outages -> " << (out / "topo_rank.csv").string()
              << "\n";
    return 0;
}

// ------------------------------------------------------------------- report

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_dir) {
    struct Row {
        std::string estimator, noise, topology;
        double mae = 0, mape = 0, r2a = 0, r2m = 0, total = 0;
    };
    std::vector<Row> rows;
    for (const std::string& in : inputs) {
        std::ifstream is(in);
        if (!is) throw Error("cannot open metrics file " + in);
        std::string line;
        std::getline(is, line);  // header
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            Row r;
            std::istringstream ls(line);
            std::string tok;
            std::getline(ls, r.estimator, ',');
            std::getline(ls, r.noise, ',');
            std::getline(ls, r.topology, ',');
            std::getline(ls, tok, ',');
            r.mae = std::stod(tok);
            std::getline(ls, tok, ',');
            r.mape = std::stod(tok);
            std::getline(ls, tok, ',');
            r.r2a = std::stod(tok);
            std::getline(ls, tok, ',');
            r.r2m = std::stod(tok);
            std::getline(ls, tok, ',');
            r.total = std::stod(tok);
            rows.push_back(r);
        }
    }
    const fs::path out(out_dir);
    fs::create_directories(out);
    const auto find_row = [&](const std::string& est, const std::string& noise,
                              const std::string& topo) -> const Row* {
        for (const Row& r : rows)
            if (r.estimator == est && r.noise == noise && r.topology == topo) return &r;
        return nullptr;
    };
    {
        // estimation error comparison, LSE vs GNN under both noise models
        std::ofstream os(out / "table1.csv");
        os << "estimator,gaussian_mae_angle_deg,gaussian_mape_magnitude_pct,"
              "gmm_mae_angle_deg,gmm_mape_magnitude_pct\n";
        for (const std::string est : {"lse", "gnn"}) {
            const Row* g = find_row(est, "gaussian", "base");
            const Row* m = find_row(est, "gmm", "base");
            if (!g && !m) continue;
            os << est << ',' << (g ? fmt(g->mae) : "") << ',' << (g ? fmt(g->mape) : "") << ','
               << (m ? fmt(m->mae) : "") << ',' << (m ? fmt(m->mape) : "") << "\n";
        }
    }
    {
        // regular DNN vs GNN under the mixture noise
        std::ofstream os(out / "table2.csv");
        os << "estimator,mae_angle_deg,mape_magnitude_pct,r2_angle,r2_magnitude\n";
        for (const std::string est : {"dnn", "gnn"}) {
            if (const Row* r = find_row(est, "gmm", "base"))
                os << est << ',' << fmt(r->mae) << ',' << fmt(r->mape) << ',' << fmt(r->r2a) << ','
                   << fmt(r->r2m) << "\n";
        }
    }
    {
        // per-topology Total MAE, DNN vs GNN
        std::ofstream os(out / "table3.csv");
        os << "topology,dnn_total_mae,gnn_total_mae\n";
        std::vector<std::string> topologies;
        for (const Row& r : rows)
            if (r.topology != "base" &&
                std::find(topologies.begin(), topologies.end(), r.topology) == topologies.end())
                topologies.push_back(r.topology);
        for (const std::string& topo : topologies) {
            const Row* d = find_row("dnn", "gmm", topo);
            const Row* g = find_row("gnn", "gmm", topo);
            os << topo << ',' << (d ? fmt(d->total) : "") << ',' << (g ? fmt(g->total) : "")
               << "\n";
        }
    }
    json cfg{{"inputs", inputs}};
    write_sidecar(out, "report", cfg, {});
    std::cout << "wrote table1.csv, table2.csv, table3.csv under " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PMU state-estimation workbench: synthetic measurement data, "
                 "power-flow labels, LSE / GNN / DNN estimators and topology studies"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config overriding built-in defaults");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "synthesize a noisy measurement dataset");
    std::string g_case, g_noise = R"({"type":"gaussian","std_mag":0.2,"std_ang":0.1})";
    std::string g_outage, g_placement = "auto", g_out = "out";
    int g_samples = 2000;
    std::uint64_t g_seed = 1;
    gen->add_option("--case", g_case, "case file (JSON or MATPOWER-style)")->required();
    gen->add_option("--samples", g_samples, "sample count");
    gen->add_option("--noise", g_noise, "noise model JSON or file path");
    gen->add_option("--seed", g_seed, "RNG seed")->required();
    gen->add_option("--outage", g_outage, "removed line as FROM-TO bus ids");
    gen->add_option("--placement", g_placement, "placement JSON file or 'auto'");
    gen->add_option("--out", g_out, "output directory");

    // place-pmus
    auto* place = app.add_subcommand("place-pmus", "greedy dominating-set PMU placement");
    std::string p_case, p_out = "out";
    place->add_option("--case", p_case)->required();
    place->add_option("--out", p_out);

    // train
    auto* train = app.add_subcommand("train", "train a state estimator on a dataset");
    std::string t_model = "gnn", t_dataset, t_case, t_out = "out";
    int t_epochs = 0, t_hidden = 0, t_batch = -1;
    double t_lr = 0.0;
    std::uint64_t t_seed = 1;
    bool t_verbose = false;
    train->add_option("--model", t_model, "gnn or dnn");
    train->add_option("--dataset", t_dataset, "directory produced by gen-data")->required();
    train->add_option("--case", t_case)->required();
    train->add_option("--epochs", t_epochs, "epochs (default 200)");
    train->add_option("--lr", t_lr, "learning rate (default 1e-3)");
    train->add_option("--hidden", t_hidden, "GNN hidden width (default 64)");
    train->add_option("--batch", t_batch, "mini-batch size, 0 = full batch (default 32)");
    train->add_option("--seed", t_seed)->required();
    train->add_option("--out", t_out);
    train->add_flag("--verbose", t_verbose, "log the loss during training");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a trained model on a dataset");
    std::string e_model, e_dataset, e_case, e_out = "out";
    bool e_base_adj = false;
    eval->add_option("--model-file", e_model)->required();
    eval->add_option("--dataset", e_dataset)->required();
    eval->add_option("--case", e_case)->required();
    eval->add_flag("--base-adjacency", e_base_adj,
                   "feed the base-topology adjacency even for outage datasets");
    eval->add_option("--out", e_out);

    // lse
    auto* lse = app.add_subcommand("lse", "run the linear state estimator");
    std::string l_case, l_placement = "auto", l_outage, l_out = "out";
    std::string l_noise = R"({"type":"gaussian","std_mag":0.2,"std_ang":0.1})";
    int l_samples = 500;
    std::uint64_t l_seed = 1;
    lse->add_option("--case", l_case)->required();
    lse->add_option("--placement", l_placement);
    lse->add_option("--noise", l_noise);
    lse->add_option("--samples", l_samples);
    lse->add_option("--seed", l_seed)->required();
    lse->add_option("--outage", l_outage);
    lse->add_option("--out", l_out);

    // topo-scan
    auto* topo = app.add_subcommand("topo-scan", "rank single-line outages by flow impact");
    std::string s_case, s_out = "out";
    int s_topk = 5;
    bool s_pin = false;
    topo->add_option("--case", s_case)->required();
    topo->add_option("--top-k", s_topk);
    topo->add_flag("--pin-paper-lines", s_pin, "select the fixed benchmark line lists");
    topo->add_option("--out", s_out);

    // report
    auto* rep = app.add_subcommand("report", "merge metrics CSVs into the comparison tables");
    std::vector<std::string> r_inputs;
    std::string r_out = "out";
    rep->add_option("--in", r_inputs, "metrics.csv files")->required();
    rep->add_option("--out", r_out);

    CLI11_PARSE(app, argc, argv);

    try {
        const RunSettings settings = load_settings(config_path);
        if (gen->parsed())
            return cmd_gen_data(g_case, g_samples, g_noise, g_seed, g_outage, g_placement, g_out,
                                settings);
        if (place->parsed()) return cmd_place_pmus(p_case, p_out);
        if (train->parsed())
            return cmd_train(t_model, t_dataset, t_case, t_epochs, t_lr, t_hidden, t_batch, t_seed,
                             t_out, settings, t_verbose);
        if (eval->parsed()) return cmd_eval(e_model, e_dataset, e_case, e_base_adj, e_out, settings);
        if (lse->parsed())
            return cmd_lse(l_case, l_placement, l_noise, l_samples, l_seed, l_outage, l_out,
                           settings);
        if (topo->parsed()) return cmd_topo_scan(s_case, s_topk, s_pin, s_out);
        if (rep->parsed()) return cmd_report(r_inputs, r_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
