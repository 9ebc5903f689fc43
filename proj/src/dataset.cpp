#include "gridse/dataset.hpp"

#include <fstream>

#include <json.hpp>

#include "gridse/serialize.hpp"

namespace gridse::pf {

using nlohmann::json;

SyntheticSample make_sample(const grid::NetworkCase& c, const grid::YBus& ybus,
                            const meas::PmuPlacement& placement, const meas::NoiseModel& noise,
                            std::uint64_t seed, std::uint64_t sample_index,
                            const ScenarioConfig& cfg, std::optional<int> outage) {
    Rng rng(derive_seed(seed, sample_index));
    SyntheticSample s;
    const LoadScenario scenario = sample_load_scenario(c, rng, cfg);
    s.solution = solve_power_flow(c, scenario, ybus, outage);
    s.converged = s.solution.converged;
    if (!s.converged) return s;
    s.measurements = meas::synthesize_measurements(s.solution, c, placement, noise, rng, outage);
    s.features = meas::build_feature_matrix(s.measurements, c, placement, outage);
    s.labels.resize(c.n(), 2);
    s.labels.col(0) = s.solution.vm;
    s.labels.col(1) = s.solution.va;
    return s;
}

Dataset generate_dataset(const grid::NetworkCase& c, int n_samples, const meas::NoiseModel& noise,
                         const meas::PmuPlacement& placement, std::uint64_t seed,
                         std::optional<int> outage, const ScenarioConfig& cfg) {
    Dataset ds;
    ds.n_nodes = c.n();
    ds.seed = seed;
    if (outage) {
        const grid::Branch& br = c.branches[*outage];
        ds.topology = std::to_string(br.from_bus) + "-" + std::to_string(br.to_bus);
    } else {
        ds.topology = "base";
    }
    const grid::YBus ybus = grid::build_ybus(c, outage);
    const int max_redraws = std::max(1, n_samples / 100);
    int redraws = 0;
    // redraw stream indices start past the nominal range so they never
    // collide with primary sample streams
    std::uint64_t redraw_index = static_cast<std::uint64_t>(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        SyntheticSample s = make_sample(c, ybus, placement, noise, seed, i, cfg, outage);
        while (!s.converged) {
            if (++redraws > max_redraws)
                throw Error("redraw cap exceeded: " + std::to_string(redraws) +
                            " non-converged scenarios");
            s = make_sample(c, ybus, placement, noise, seed, redraw_index++, cfg, outage);
        }
        ds.features.push_back(std::move(s.features));
        ds.labels.push_back(std::move(s.labels));
    }
    ds.redraws = redraws;
    return ds;
}

namespace {

void write_matrix_file(const std::filesystem::path& path,
                       const std::vector<Eigen::MatrixXd>& mats) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    for (const Eigen::MatrixXd& m : mats) {
        // node-major then feature-major
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                const double v = m(i, j);
                io::write_f64_block(os, &v, 1);
            }
    }
}

std::vector<Eigen::MatrixXd> read_matrix_file(const std::filesystem::path& path, int count,
                                              int rows, int cols) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot read " + path.string());
    std::vector<Eigen::MatrixXd> mats;
    for (int s = 0; s < count; ++s) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) {
                double v;
                io::read_f64_block(is, &v, 1);
                m(i, j) = v;
            }
        mats.push_back(std::move(m));
    }
    return mats;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["case"] = ds.case_id;
    manifest["case_hash"] = ds.case_hash;
    manifest["topology"] = ds.topology;
    manifest["n"] = ds.features.size();
    manifest["noise"] = ds.noise_json.empty() ? json::object() : json::parse(ds.noise_json);
    manifest["seed"] = ds.seed;
    manifest["redraws"] = ds.redraws;
    manifest["dims"] = {{"nodes", ds.n_nodes}, {"features", 2}, {"states", 2}};
    std::ofstream os(dir / "manifest.json");
    os << manifest.dump(1) << "\n";
    write_matrix_file(dir / "features.bin", ds.features);
    write_matrix_file(dir / "labels.bin", ds.labels);
}

Dataset load_dataset(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw Error("cannot read " + (dir / "manifest.json").string());
    json manifest = json::parse(is);
    Dataset ds;
    ds.case_id = manifest.value("case", "");
    ds.case_hash = manifest.value("case_hash", "");
    ds.topology = manifest.value("topology", "base");
    ds.seed = manifest.value("seed", 0ULL);
    ds.redraws = manifest.value("redraws", 0);
    ds.n_nodes = manifest.at("dims").at("nodes").get<int>();
    ds.noise_json = manifest.at("noise").dump();
    const int count = manifest.at("n").get<int>();
    const int feats = manifest.at("dims").at("features").get<int>();
    const int states = manifest.at("dims").at("states").get<int>();
    ds.features = read_matrix_file(dir / "features.bin", count, ds.n_nodes, feats);
    ds.labels = read_matrix_file(dir / "labels.bin", count, ds.n_nodes, states);
    return ds;
}

}  // namespace gridse::pf
