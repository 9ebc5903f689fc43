#include "gridse/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gridse::io {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; byte swapping is not implemented");

void write_f64_block(std::ostream& os, const double* data, std::size_t count) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
    if (!os) throw Error("write failed");
}

void read_f64_block(std::istream& is, double* data, std::size_t count) {
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
    if (!is) throw Error("read failed (truncated block?)");
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_hash(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return fnv1a_hex(ss.str());
}

namespace {

constexpr char kMagic[4] = {'G', 'S', 'E', '1'};

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            write_f64_block(os, &v, 1);
        }
}

Eigen::MatrixXd read_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            double v;
            read_f64_block(is, &v, 1);
            m(i, j) = v;
        }
    return m;
}

void write_container(const std::filesystem::path& path, const json& header,
                     const std::vector<const Eigen::MatrixXd*>& blocks) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    const std::string htext = header.dump();
    const std::uint64_t hlen = htext.size();
    os.write(kMagic, 4);
    os.write(reinterpret_cast<const char*>(&hlen), 8);
    os.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    for (const Eigen::MatrixXd* b : blocks) write_matrix(os, *b);
    if (!os) throw Error("write failed for " + path.string());
}

json norm_header(const nn::Normalization& n) {
    return {{"nodes", n.in_mean.rows()}, {"features", n.in_mean.cols()}};
}

void append_norm_blocks(std::vector<const Eigen::MatrixXd*>& blocks, const nn::Normalization& n) {
    blocks.push_back(&n.in_mean);
    blocks.push_back(&n.in_std);
    blocks.push_back(&n.out_mean);
    blocks.push_back(&n.out_std);
}

void read_norm_blocks(std::istream& is, Eigen::Index nodes, Eigen::Index feats,
                      nn::Normalization& n) {
    n.in_mean = read_matrix(is, nodes, feats);
    n.in_std = read_matrix(is, nodes, feats);
    n.out_mean = read_matrix(is, nodes, feats);
    n.out_std = read_matrix(is, nodes, feats);
}

json open_container(std::ifstream& is, const std::filesystem::path& path) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw Error(path.string() + " is not a model file");
    std::uint64_t hlen = 0;
    is.read(reinterpret_cast<char*>(&hlen), 8);
    std::string htext(hlen, '\0');
    is.read(htext.data(), static_cast<std::streamsize>(hlen));
    if (!is) throw Error("truncated model header in " + path.string());
    return json::parse(htext);
}

}  // namespace

void save_gnn(const nn::GnnModel& model, const std::filesystem::path& path,
              const std::string& metadata_json) {
    json header;
    header["type"] = "gnn";
    header["config"] = {{"gcn_layers", model.config.gcn_layers},
                        {"hidden", model.config.hidden},
                        {"leaky_slope", model.config.leaky_slope},
                        {"self_inclusive_degree", model.config.self_inclusive_degree}};
    json dims = json::array();
    std::vector<const Eigen::MatrixXd*> blocks;
    for (const nn::GcnLayer& l : model.gcn) {
        dims.push_back({l.weight.rows(), l.weight.cols()});
        blocks.push_back(&l.weight);
    }
    header["gcn_dims"] = dims;
    header["norm"] = norm_header(model.norm);
    header["metadata"] = json::parse(metadata_json);
    // fixed-order tail blocks: gat W, gat a, head W, head b, norm stats
    Eigen::MatrixXd att = model.gat.attention;
    Eigen::MatrixXd head_b = model.head.bias;
    blocks.push_back(&model.gat.weight);
    blocks.push_back(&att);
    blocks.push_back(&model.head.weight);
    blocks.push_back(&head_b);
    header["gat_dims"] = {model.gat.weight.rows(), model.gat.weight.cols()};
    header["head_dims"] = {model.head.weight.rows(), model.head.weight.cols()};
    append_norm_blocks(blocks, model.norm);
    write_container(path, header, blocks);
}

void save_mlp(const nn::MlpModel& model, const std::filesystem::path& path,
              const std::string& metadata_json) {
    json header;
    header["type"] = "mlp";
    header["config"] = {{"hidden_layers", model.config.hidden_layers},
                        {"width", model.config.width}};
    header["n"] = model.n;
    json dims = json::array();
    std::vector<const Eigen::MatrixXd*> blocks;
    for (std::size_t k = 0; k < model.weights.size(); ++k) {
        dims.push_back({model.weights[k].rows(), model.weights[k].cols()});
        blocks.push_back(&model.weights[k]);
        blocks.push_back(&model.biases[k]);
    }
    header["layer_dims"] = dims;
    header["norm"] = norm_header(model.norm);
    header["metadata"] = json::parse(metadata_json);
    append_norm_blocks(blocks, model.norm);
    write_container(path, header, blocks);
}

AnyModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path.string());
    const json header = open_container(is, path);
    const Eigen::Index nodes = header.at("norm").at("nodes").get<Eigen::Index>();
    const Eigen::Index feats = header.at("norm").at("features").get<Eigen::Index>();
    if (header.at("type") == "gnn") {
        nn::GnnModel m;
        const json& cfg = header.at("config");
        m.config.gcn_layers = cfg.at("gcn_layers").get<int>();
        m.config.hidden = cfg.at("hidden").get<int>();
        m.config.leaky_slope = cfg.at("leaky_slope").get<double>();
        m.config.self_inclusive_degree = cfg.at("self_inclusive_degree").get<bool>();
        for (const auto& d : header.at("gcn_dims"))
            m.gcn.push_back({read_matrix(is, d[0].get<Eigen::Index>(), d[1].get<Eigen::Index>())});
        const auto& gd = header.at("gat_dims");
        m.gat.weight = read_matrix(is, gd[0].get<Eigen::Index>(), gd[1].get<Eigen::Index>());
        m.gat.attention = read_matrix(is, 2 * gd[1].get<Eigen::Index>(), 1).col(0);
        m.gat.leaky_slope = m.config.leaky_slope;
        const auto& hd = header.at("head_dims");
        m.head.weight = read_matrix(is, hd[0].get<Eigen::Index>(), hd[1].get<Eigen::Index>());
        m.head.bias = read_matrix(is, 2, 1).col(0);
        read_norm_blocks(is, nodes, feats, m.norm);
        return m;
    }
    if (header.at("type") == "mlp") {
        nn::MlpModel m;
        m.config.hidden_layers = header.at("config").at("hidden_layers").get<int>();
        m.config.width = header.at("config").at("width").get<int>();
        m.n = header.at("n").get<int>();
        for (const auto& d : header.at("layer_dims")) {
            m.weights.push_back(read_matrix(is, d[0].get<Eigen::Index>(), d[1].get<Eigen::Index>()));
            m.biases.push_back(read_matrix(is, 1, d[1].get<Eigen::Index>()));
        }
        read_norm_blocks(is, nodes, feats, m.norm);
        return m;
    }
    throw Error("unknown model type in " + path.string());
}

std::string model_metadata(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path.string());
    return open_container(is, path).dump();
}

}  // namespace gridse::io
