#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gridse/common.hpp"
#include "gridse/grid.hpp"

namespace gridse::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Graph quantities precomputed once per topology. Batched node features are
// stacked row-wise into a (batch*n) x d matrix; aggregation applies per
// sample block.
struct GraphContext {
    int n = 0;
    Eigen::SparseMatrix<double> norm_adj;  // symmetric normalized A+I
    // GAT neighborhoods N(v) u {v} in CSR form: sources[row_begin[v] ..
    // row_begin[v+1]) are the u aggregated into v.
    std::vector<int> row_begin;
    std::vector<int> sources;

    static GraphContext build(const grid::AdjacencyMatrix& adj, bool self_inclusive_degree = true);

    // Y = norm_adj * X applied to each n-row block of a stacked batch.
    Mat aggregate(const Mat& x, int batch) const;
};

struct GcnCache {
    Mat input;  // stacked X_prev
    Mat pre_activation;
};

struct GcnLayer {
    Mat weight;  // d_in x d_out

    Mat forward(const GraphContext& g, const Mat& x, int batch, GcnCache* cache = nullptr) const;
    // Returns dL/dX_prev and accumulates dL/dW.
    Mat backward(const GraphContext& g, const GcnCache& cache, const Mat& dy, int batch,
                 Mat& grad_weight) const;
};

struct GatCache {
    Mat input;
    Mat transformed;        // H = X W, stacked
    std::vector<double> scores;  // pre-leaky attention logits, per batch*edge
    std::vector<double> alpha;   // softmax coefficients
    Mat pre_activation;
};

struct GatLayer {
    Mat weight;        // d_in x d_out
    Vec attention;     // 2*d_out
    double leaky_slope = 0.2;

    Mat forward(const GraphContext& g, const Mat& x, int batch, GatCache* cache = nullptr) const;
    Mat backward(const GraphContext& g, const GatCache& cache, const Mat& dy, int batch,
                 Mat& grad_weight, Vec& grad_attention) const;
};

struct LinearHead {
    Mat weight;  // d x 2
    Vec bias;    // 2

    Mat forward(const Mat& x, Mat* cache_input = nullptr) const;
    Mat backward(const Mat& input, const Mat& dy, Mat& grad_weight, Vec& grad_bias) const;
};

// Per-element standardization statistics in the node-feature layout (n x 2).
// Outputs whose training spread is below the floor keep a unit-free tiny
// divisor so constant targets normalize to exactly zero.
struct Normalization {
    Mat in_mean, in_std;
    Mat out_mean, out_std;

    static constexpr double kStdFloor = 1e-8;
};

Normalization fit_normalization(const std::vector<Mat>& features, const std::vector<Mat>& labels);

struct GnnConfig {
    int gcn_layers = 5;
    int hidden = 64;
    double leaky_slope = 0.2;
    bool self_inclusive_degree = true;
};

struct GnnModel {
    GnnConfig config;
    std::vector<GcnLayer> gcn;
    GatLayer gat;
    LinearHead head;
    Normalization norm;

    static GnnModel init(const GnnConfig& cfg, int in_features, Rng& rng);

    // Raw forward in normalized feature space; x stacked (batch*n) x f.
    Mat forward(const GraphContext& g, const Mat& x, int batch) const;

    // Normalizes input, runs forward with the supplied adjacency (which may
    // differ from the training topology), de-normalizes the output.
    Mat predict(const GraphContext& g, const Mat& features) const;

    std::vector<Mat*> parameters();
    std::vector<const Mat*> parameters() const;
};

struct MlpConfig {
    int hidden_layers = 6;
    int width = 200;
};

struct MlpModel {
    MlpConfig config;
    int n = 0;  // node count; input/output length 2n
    std::vector<Mat> weights;
    std::vector<Mat> biases;  // 1 x width rows
    Normalization norm;

    static MlpModel init(const MlpConfig& cfg, int n_nodes, Rng& rng);

    // x is batch x 2n (flattened node features, node-major).
    Mat forward(const Mat& x, std::vector<Mat>* cache = nullptr) const;
    Mat predict(const Mat& features) const;  // features n x 2 -> n x 2

    std::vector<Mat*> parameters();
    std::vector<const Mat*> parameters() const;
};

double loss_mse(const Mat& pred, const Mat& label);

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<Mat> m, v;

    void init(const std::vector<Mat*>& params);
};

// Standard bias-corrected Adam update; params and grads pair up by position.
void adam_step(std::vector<Mat*>& params, const std::vector<Mat>& grads, AdamState& state);

struct TrainConfig {
    int epochs = 200;
    int batch_size = 32;  // 0 = full batch
    double lr = 1e-3;
    std::uint64_t seed = 0;
    bool verbose = false;
};

struct TrainTrace {
    std::vector<double> train_loss;  // per epoch, averaged over samples
    std::vector<double> val_loss;
};

// Trains in z-scored space; fits and stores normalization from the training
// arrays. Aborts with Error on non-finite loss. Deterministic per seed.
TrainTrace train_gnn(GnnModel& model, const GraphContext& g, const std::vector<Mat>& features,
                     const std::vector<Mat>& labels, const TrainConfig& cfg,
                     const std::vector<Mat>* val_features = nullptr,
                     const std::vector<Mat>* val_labels = nullptr);

TrainTrace train_mlp(MlpModel& model, const std::vector<Mat>& features,
                     const std::vector<Mat>& labels, const TrainConfig& cfg,
                     const std::vector<Mat>* val_features = nullptr,
                     const std::vector<Mat>* val_labels = nullptr);

// Flattens an n x 2 node-feature matrix into the MLP input layout.
Vec flatten_features(const Mat& features);

}  // namespace gridse::nn
