#include "gridse/nn.hpp"

#include <cmath>

namespace gridse::nn {

GraphContext GraphContext::build(const grid::AdjacencyMatrix& adj, bool self_inclusive_degree) {
    GraphContext g;
    g.n = adj.n;
    // degree-normalized A+I per the renormalized convolution rule; the
    // exclusive variant divides by plain degrees (floored at 1).
    Eigen::VectorXd norm(adj.n);
    for (int v = 0; v < adj.n; ++v) {
        const double deg = adj.degree(v);
        norm(v) = 1.0 / std::sqrt(self_inclusive_degree ? deg + 1.0 : std::max(deg, 1.0));
    }
    std::vector<Eigen::Triplet<double>> trip;
    g.row_begin.assign(adj.n + 1, 0);
    for (int v = 0; v < adj.n; ++v) {
        bool self_added = false;
        for (int u = 0; u < adj.n; ++u) {
            const bool edge = adj.entries(v, u) != 0;
            if (!self_added && u >= v) {
                g.sources.push_back(v);
                trip.emplace_back(v, v, norm(v) * norm(v));
                self_added = true;
                if (u == v) continue;
            }
            if (edge) {
                g.sources.push_back(u);
                trip.emplace_back(v, u, norm(v) * norm(u));
            }
        }
        g.row_begin[v + 1] = static_cast<int>(g.sources.size());
    }
    g.norm_adj.resize(adj.n, adj.n);
    g.norm_adj.setFromTriplets(trip.begin(), trip.end());
    return g;
}

Mat GraphContext::aggregate(const Mat& x, int batch) const {
    Mat y(x.rows(), x.cols());
    for (int b = 0; b < batch; ++b) {
        y.middleRows(static_cast<Eigen::Index>(b) * n, n) =
            norm_adj * x.middleRows(static_cast<Eigen::Index>(b) * n, n);
    }
    return y;
}

namespace {

inline Mat relu(const Mat& x) { return x.cwiseMax(0.0); }

inline Mat relu_grad(const Mat& pre, const Mat& dy) {
    return (pre.array() > 0.0).select(dy, Mat::Zero(dy.rows(), dy.cols()));
}

}  // namespace

Mat GcnLayer::forward(const GraphContext& g, const Mat& x, int batch, GcnCache* cache) const {
    Mat pre = g.aggregate(x * weight, batch);
    Mat out = relu(pre);
    if (cache) {
        cache->input = x;
        cache->pre_activation = std::move(pre);
    }
    return out;
}

Mat GcnLayer::backward(const GraphContext& g, const GcnCache& cache, const Mat& dy, int batch,
                       Mat& grad_weight) const {
    const Mat dpre = relu_grad(cache.pre_activation, dy);
    const Mat dxw = g.aggregate(dpre, batch);  // norm_adj is symmetric
    grad_weight.noalias() += cache.input.transpose() * dxw;
    return dxw * weight.transpose();
}

Mat GatLayer::forward(const GraphContext& g, const Mat& x, int batch, GatCache* cache) const {
    const int n = g.n;
    const int d = static_cast<int>(weight.cols());
    const auto n_edges = static_cast<std::size_t>(g.sources.size());
    Mat h = x * weight;
    Mat pre(h.rows(), d);
    std::vector<double> scores(cache ? batch * n_edges : 0);
    std::vector<double> alpha(batch * n_edges);
    const Vec a_self = attention.head(d);
    const Vec a_nbr = attention.tail(d);
    std::vector<double> logit;
    for (int b = 0; b < batch; ++b) {
        // transposed block: one contiguous column per node
        const Mat ht = h.middleRows(static_cast<Eigen::Index>(b) * n, n).transpose();
        const Vec self_score = ht.transpose() * a_self;
        const Vec nbr_score = ht.transpose() * a_nbr;
        Mat mt = Mat::Zero(d, n);
        for (int v = 0; v < n; ++v) {
            const int begin = g.row_begin[v], end = g.row_begin[v + 1];
            logit.resize(end - begin);
            double mx = -std::numeric_limits<double>::infinity();
            for (int e = begin; e < end; ++e) {
                const double s = self_score(v) + nbr_score(g.sources[e]);
                if (cache) scores[b * n_edges + e] = s;
                const double l = s > 0.0 ? s : leaky_slope * s;
                logit[e - begin] = l;
                mx = std::max(mx, l);
            }
            double denom = 0.0;
            for (double& l : logit) {
                l = std::exp(l - mx);
                denom += l;
            }
            for (int e = begin; e < end; ++e) {
                const double av = logit[e - begin] / denom;
                alpha[b * n_edges + e] = av;
                mt.col(v) += av * ht.col(g.sources[e]);
            }
        }
        pre.middleRows(static_cast<Eigen::Index>(b) * n, n) = mt.transpose();
    }
    Mat out = relu(pre);
    if (cache) {
        cache->input = x;
        cache->transformed = std::move(h);
        cache->scores = std::move(scores);
        cache->alpha = std::move(alpha);
        cache->pre_activation = std::move(pre);
    }
    return out;
}

Mat GatLayer::backward(const GraphContext& g, const GatCache& cache, const Mat& dy, int batch,
                       Mat& grad_weight, Vec& grad_attention) const {
    const int n = g.n;
    const int d = static_cast<int>(weight.cols());
    const auto n_edges = static_cast<std::size_t>(g.sources.size());
    const Mat dpre = relu_grad(cache.pre_activation, dy);
    Mat dh(cache.transformed.rows(), d);
    const Vec a_self = attention.head(d);
    const Vec a_nbr = attention.tail(d);
    Vec da_self = Vec::Zero(d);
    Vec da_nbr = Vec::Zero(d);
    std::vector<double> dalpha;
    for (int b = 0; b < batch; ++b) {
        const Mat ht = cache.transformed.middleRows(static_cast<Eigen::Index>(b) * n, n).transpose();
        const Mat dpt = dpre.middleRows(static_cast<Eigen::Index>(b) * n, n).transpose();
        Mat dht = Mat::Zero(d, n);
        for (int v = 0; v < n; ++v) {
            const int begin = g.row_begin[v], end = g.row_begin[v + 1];
            dalpha.resize(end - begin);
            double common = 0.0;
            for (int e = begin; e < end; ++e) {
                const double da = dpt.col(v).dot(ht.col(g.sources[e]));
                dalpha[e - begin] = da;
                common += cache.alpha[b * n_edges + e] * da;
                dht.col(g.sources[e]) += cache.alpha[b * n_edges + e] * dpt.col(v);
            }
            for (int e = begin; e < end; ++e) {
                const int u = g.sources[e];
                const double de = cache.alpha[b * n_edges + e] * (dalpha[e - begin] - common);
                const double ds = de * (cache.scores[b * n_edges + e] > 0.0 ? 1.0 : leaky_slope);
                da_self += ds * ht.col(v);
                da_nbr += ds * ht.col(u);
                dht.col(v) += ds * a_self;
                dht.col(u) += ds * a_nbr;
            }
        }
        dh.middleRows(static_cast<Eigen::Index>(b) * n, n) = dht.transpose();
    }
    grad_attention.head(d) += da_self;
    grad_attention.tail(d) += da_nbr;
    grad_weight.noalias() += cache.input.transpose() * dh;
    return dh * weight.transpose();
}

Mat LinearHead::forward(const Mat& x, Mat* cache_input) const {
    if (cache_input) *cache_input = x;
    return (x * weight).rowwise() + bias.transpose();
}

Mat LinearHead::backward(const Mat& input, const Mat& dy, Mat& grad_weight, Vec& grad_bias) const {
    grad_weight.noalias() += input.transpose() * dy;
    grad_bias += dy.colwise().sum();
    return dy * weight.transpose();
}

Normalization fit_normalization(const std::vector<Mat>& features, const std::vector<Mat>& labels) {
    if (features.empty() || features.size() != labels.size())
        throw Error("normalization needs matching non-empty feature/label sets");
    // One statistic per feature column (all magnitudes share a scale, all
    // angles share a scale), broadcast to the node layout. Keeps the node
    // dimension exchangeable so a model trained on one topology stays
    // meaningful on a modified one.
    const auto moments = [](const std::vector<Mat>& set, Mat& mean, Mat& std) {
        const Eigen::Index rows = set[0].rows(), cols = set[0].cols();
        Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(cols);
        for (const Mat& s : set) mu += s.colwise().sum();
        mu /= static_cast<double>(set.size() * rows);
        Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(cols);
        for (const Mat& s : set) var += (s.rowwise() - mu).cwiseAbs2().colwise().sum();
        var /= static_cast<double>(set.size() * rows);
        mean = mu.replicate(rows, 1);
        std = var.cwiseSqrt().cwiseMax(Normalization::kStdFloor).replicate(rows, 1);
    };
    Normalization norm;
    moments(features, norm.in_mean, norm.in_std);
    moments(labels, norm.out_mean, norm.out_std);
    return norm;
}

namespace {

Mat glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Mat w(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = rng.uniform(-limit, limit);
    return w;
}

}  // namespace

GnnModel GnnModel::init(const GnnConfig& cfg, int in_features, Rng& rng) {
    GnnModel m;
    m.config = cfg;
    int d = in_features;
    for (int k = 0; k < cfg.gcn_layers; ++k) {
        m.gcn.push_back({glorot(d, cfg.hidden, rng)});
        d = cfg.hidden;
    }
    m.gat.weight = glorot(d, cfg.hidden, rng);
    m.gat.attention = glorot(2 * cfg.hidden, 1, rng).col(0);
    m.gat.leaky_slope = cfg.leaky_slope;
    m.head.weight = glorot(cfg.hidden, 2, rng);
    m.head.bias = Vec::Zero(2);
    return m;
}

Mat GnnModel::forward(const GraphContext& g, const Mat& x, int batch) const {
    Mat h = x;
    for (const GcnLayer& layer : gcn) h = layer.forward(g, h, batch);
    h = gat.forward(g, h, batch);
    return head.forward(h);
}

Mat GnnModel::predict(const GraphContext& g, const Mat& features) const {
    const Mat xn = (features - norm.in_mean).cwiseQuotient(norm.in_std);
    const Mat yn = forward(g, xn, 1);
    return yn.cwiseProduct(norm.out_std) + norm.out_mean;
}

std::vector<Mat*> GnnModel::parameters() {
    std::vector<Mat*> p;
    for (GcnLayer& l : gcn) p.push_back(&l.weight);
    p.push_back(&gat.weight);
    return p;
}

std::vector<const Mat*> GnnModel::parameters() const {
    std::vector<const Mat*> p;
    for (const GcnLayer& l : gcn) p.push_back(&l.weight);
    p.push_back(&gat.weight);
    return p;
}

MlpModel MlpModel::init(const MlpConfig& cfg, int n_nodes, Rng& rng) {
    MlpModel m;
    m.config = cfg;
    m.n = n_nodes;
    int d = 2 * n_nodes;
    for (int k = 0; k < cfg.hidden_layers; ++k) {
        m.weights.push_back(glorot(d, cfg.width, rng));
        m.biases.push_back(Mat::Zero(1, cfg.width));
        d = cfg.width;
    }
    m.weights.push_back(glorot(d, 2 * n_nodes, rng));
    m.biases.push_back(Mat::Zero(1, 2 * n_nodes));
    return m;
}

Mat MlpModel::forward(const Mat& x, std::vector<Mat>* cache) const {
    Mat h = x;
    if (cache) {
        cache->clear();
        cache->push_back(h);
    }
    for (std::size_t k = 0; k < weights.size(); ++k) {
        Mat pre = (h * weights[k]).rowwise() + biases[k].row(0);
        h = k + 1 < weights.size() ? relu(pre) : pre;
        if (cache) cache->push_back(std::move(pre));  // pre-activations; input sits at [0]
    }
    return h;
}

Vec flatten_features(const Mat& features) {
    Vec v(features.size());
    for (Eigen::Index i = 0; i < features.rows(); ++i)
        for (Eigen::Index j = 0; j < features.cols(); ++j)
            v(i * features.cols() + j) = features(i, j);
    return v;
}

Mat MlpModel::predict(const Mat& features) const {
    const Mat xn = (features - norm.in_mean).cwiseQuotient(norm.in_std);
    Mat row(1, 2 * n);
    row.row(0) = flatten_features(xn).transpose();
    const Mat out = forward(row);
    Mat y(n, 2);
    for (int i = 0; i < n; ++i) {
        y(i, 0) = out(0, 2 * i);
        y(i, 1) = out(0, 2 * i + 1);
    }
    return y.cwiseProduct(norm.out_std) + norm.out_mean;
}

std::vector<Mat*> MlpModel::parameters() {
    std::vector<Mat*> p;
    for (Mat& w : weights) p.push_back(&w);
    for (Mat& b : biases) p.push_back(&b);
    return p;
}

std::vector<const Mat*> MlpModel::parameters() const {
    std::vector<const Mat*> p;
    for (const Mat& w : weights) p.push_back(&w);
    for (const Mat& b : biases) p.push_back(&b);
    return p;
}

double loss_mse(const Mat& pred, const Mat& label) {
    if (pred.rows() != label.rows() || pred.cols() != label.cols())
        throw Error("loss_mse shape mismatch");
    return (pred - label).squaredNorm() / static_cast<double>(pred.size());
}

void AdamState::init(const std::vector<Mat*>& params) {
    m.clear();
    v.clear();
    step = 0;
    for (const Mat* p : params) {
        m.push_back(Mat::Zero(p->rows(), p->cols()));
        v.push_back(Mat::Zero(p->rows(), p->cols()));
    }
}

void adam_step(std::vector<Mat*>& params, const std::vector<Mat>& grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw Error("adam_step parameter/gradient count mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * grads[k];
        state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * grads[k].cwiseAbs2();
        const Mat mhat = state.m[k] / bc1;
        const Mat vhat = state.v[k] / bc2;
        params[k]->array() -= state.lr * mhat.array() / (vhat.array().sqrt() + state.eps);
    }
}

namespace {

struct GnnGrads {
    std::vector<Mat> gcn_w;
    Mat gat_w;
    Vec gat_a;
    Mat head_w;
    Vec head_b;

    explicit GnnGrads(const GnnModel& m) {
        for (const GcnLayer& l : m.gcn) gcn_w.push_back(Mat::Zero(l.weight.rows(), l.weight.cols()));
        gat_w = Mat::Zero(m.gat.weight.rows(), m.gat.weight.cols());
        gat_a = Vec::Zero(m.gat.attention.size());
        head_w = Mat::Zero(m.head.weight.rows(), m.head.weight.cols());
        head_b = Vec::Zero(2);
    }
};

// stacks selected samples into a (batch*n) x 2 matrix, normalized
Mat stack_normalized(const std::vector<Mat>& set, const std::vector<int>& idx, std::size_t begin,
                     std::size_t count, const Mat& mean, const Mat& std) {
    const Eigen::Index n = set[0].rows();
    Mat out(static_cast<Eigen::Index>(count) * n, set[0].cols());
    for (std::size_t k = 0; k < count; ++k)
        out.middleRows(static_cast<Eigen::Index>(k) * n, n) =
            (set[idx[begin + k]] - mean).cwiseQuotient(std);
    return out;
}

}  // namespace

TrainTrace train_gnn(GnnModel& model, const GraphContext& g, const std::vector<Mat>& features,
                     const std::vector<Mat>& labels, const TrainConfig& cfg,
                     const std::vector<Mat>* val_features, const std::vector<Mat>* val_labels) {
    model.norm = fit_normalization(features, labels);
    const int n_samples = static_cast<int>(features.size());
    const int batch = cfg.batch_size > 0 ? cfg.batch_size : n_samples;

    AdamState adam;
    adam.lr = cfg.lr;
    // every learnable enters the Adam list: GCN/GAT weights, the attention
    // vector and head bias as single-column matrices synced after each step
    std::vector<Mat*> all_params = model.parameters();
    Mat att_m(model.gat.attention.size(), 1), head_b_m(2, 1);
    att_m.col(0) = model.gat.attention;
    head_b_m.col(0) = model.head.bias;
    all_params.push_back(&att_m);
    all_params.push_back(&model.head.weight);
    all_params.push_back(&head_b_m);
    adam.init(all_params);

    Rng rng(cfg.seed);
    std::vector<int> order(n_samples);
    for (int i = 0; i < n_samples; ++i) order[i] = i;

    TrainTrace trace;
    std::vector<GcnCache> gcn_caches(model.gcn.size());
    GatCache gat_cache;
    Mat head_cache;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (int b0 = 0; b0 < n_samples; b0 += batch) {
            const int bs = std::min(batch, n_samples - b0);
            Mat x = stack_normalized(features, order, b0, bs, model.norm.in_mean, model.norm.in_std);
            const Mat y = stack_normalized(labels, order, b0, bs, model.norm.out_mean, model.norm.out_std);

            Mat h = x;
            for (std::size_t k = 0; k < model.gcn.size(); ++k)
                h = model.gcn[k].forward(g, h, bs, &gcn_caches[k]);
            h = model.gat.forward(g, h, bs, &gat_cache);
            const Mat pred = model.head.forward(h, &head_cache);

            const double loss = loss_mse(pred, y);
            if (!std::isfinite(loss))
                throw Error("training diverged: non-finite loss at epoch " + std::to_string(epoch));
            epoch_loss += loss * bs;

            GnnGrads grads(model);
            Mat dy = 2.0 * (pred - y) / static_cast<double>(pred.size());
            dy = model.head.backward(head_cache, dy, grads.head_w, grads.head_b);
            dy = model.gat.backward(g, gat_cache, dy, bs, grads.gat_w, grads.gat_a);
            for (std::size_t k = model.gcn.size(); k-- > 0;)
                dy = model.gcn[k].backward(g, gcn_caches[k], dy, bs, grads.gcn_w[k]);

            std::vector<Mat> grad_list;
            for (Mat& gw : grads.gcn_w) grad_list.push_back(std::move(gw));
            grad_list.push_back(std::move(grads.gat_w));
            Mat ga(att_m.rows(), 1);
            ga.col(0) = grads.gat_a;
            grad_list.push_back(std::move(ga));
            grad_list.push_back(std::move(grads.head_w));
            Mat gb(2, 1);
            gb.col(0) = grads.head_b;
            grad_list.push_back(std::move(gb));

            adam_step(all_params, grad_list, adam);
            model.gat.attention = att_m.col(0);
            model.head.bias = head_b_m.col(0);
        }
        trace.train_loss.push_back(epoch_loss / n_samples);
        if (val_features && val_labels) {
            double vl = 0.0;
            for (std::size_t s = 0; s < val_features->size(); ++s) {
                const Mat xv = ((*val_features)[s] - model.norm.in_mean).cwiseQuotient(model.norm.in_std);
                const Mat yv = ((*val_labels)[s] - model.norm.out_mean).cwiseQuotient(model.norm.out_std);
                vl += loss_mse(model.forward(g, xv, 1), yv);
            }
            trace.val_loss.push_back(vl / static_cast<double>(val_features->size()));
        }
        if (cfg.verbose && (epoch % 20 == 0 || epoch + 1 == cfg.epochs))
            std::fprintf(stderr, "epoch %4d  loss %.6f\n", epoch, trace.train_loss.back());
    }
    return trace;
}

TrainTrace train_mlp(MlpModel& model, const std::vector<Mat>& features,
                     const std::vector<Mat>& labels, const TrainConfig& cfg,
                     const std::vector<Mat>* val_features, const std::vector<Mat>* val_labels) {
    model.norm = fit_normalization(features, labels);
    const int n_samples = static_cast<int>(features.size());
    const int batch = cfg.batch_size > 0 ? cfg.batch_size : n_samples;
    const int width = 2 * model.n;

    // flatten normalized samples once
    Mat xall(n_samples, width), yall(n_samples, width);
    for (int s = 0; s < n_samples; ++s) {
        xall.row(s) =
            flatten_features((features[s] - model.norm.in_mean).cwiseQuotient(model.norm.in_std))
                .transpose();
        yall.row(s) =
            flatten_features((labels[s] - model.norm.out_mean).cwiseQuotient(model.norm.out_std))
                .transpose();
    }

    std::vector<Mat*> all_params = model.parameters();
    AdamState adam;
    adam.lr = cfg.lr;
    adam.init(all_params);

    Rng rng(cfg.seed);
    std::vector<int> order(n_samples);
    for (int i = 0; i < n_samples; ++i) order[i] = i;

    TrainTrace trace;
    std::vector<Mat> cache;
    const std::size_t L = model.weights.size();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (int b0 = 0; b0 < n_samples; b0 += batch) {
            const int bs = std::min(batch, n_samples - b0);
            Mat x(bs, width), y(bs, width);
            for (int k = 0; k < bs; ++k) {
                x.row(k) = xall.row(order[b0 + k]);
                y.row(k) = yall.row(order[b0 + k]);
            }
            const Mat pred = model.forward(x, &cache);
            const double loss = loss_mse(pred, y);
            if (!std::isfinite(loss))
                throw Error("training diverged: non-finite loss at epoch " + std::to_string(epoch));
            epoch_loss += loss * bs;

            std::vector<Mat> gw(L), gb(L);
            Mat dy = 2.0 * (pred - y) / static_cast<double>(pred.size());
            for (std::size_t k = L; k-- > 0;) {
                const Mat& input = k == 0 ? cache[0] : relu(cache[k]);
                gw[k] = input.transpose() * dy;
                gb[k] = dy.colwise().sum();
                if (k > 0) dy = relu_grad(cache[k], Mat(dy * model.weights[k].transpose()));
            }
            std::vector<Mat> grad_list;
            for (Mat& m : gw) grad_list.push_back(std::move(m));
            for (Mat& m : gb) grad_list.push_back(std::move(m));
            adam_step(all_params, grad_list, adam);
        }
        trace.train_loss.push_back(epoch_loss / n_samples);
        if (val_features && val_labels) {
            double vl = 0.0;
            for (std::size_t s = 0; s < val_features->size(); ++s) {
                Mat xv(1, width), yv(1, width);
                xv.row(0) = flatten_features(((*val_features)[s] - model.norm.in_mean)
                                                 .cwiseQuotient(model.norm.in_std))
                                .transpose();
                yv.row(0) = flatten_features(((*val_labels)[s] - model.norm.out_mean)
                                                 .cwiseQuotient(model.norm.out_std))
                                .transpose();
                vl += loss_mse(model.forward(xv), yv);
            }
            trace.val_loss.push_back(vl / static_cast<double>(val_features->size()));
        }
        if (cfg.verbose && (epoch % 20 == 0 || epoch + 1 == cfg.epochs))
            std::fprintf(stderr, "epoch %4d  loss %.6f\n", epoch, trace.train_loss.back());
    }
    return trace;
}

}  // namespace gridse::nn
