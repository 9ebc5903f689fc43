#include "gridse/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace gridse::xp {

MetricsReport compute_metrics(const std::vector<Eigen::MatrixXd>& preds,
                              const std::vector<Eigen::MatrixXd>& labels,
                              const nn::Normalization& norm) {
    if (preds.size() != labels.size() || preds.empty())
        throw Error("compute_metrics needs matching non-empty sets");
    MetricsReport r;
    r.samples = static_cast<long>(preds.size());
    double mae_ang = 0.0, mape = 0.0, total = 0.0;
    long n_ang = 0, n_mag = 0, n_total = 0;
    double ss_res_mag = 0.0, ss_res_ang = 0.0;
    double sum_mag = 0.0, sum_ang = 0.0;
    long count_all = 0;
    for (const auto& lab : labels) {
        sum_mag += lab.col(0).sum();
        sum_ang += lab.col(1).sum();
        count_all += static_cast<long>(lab.rows());
    }
    const double mean_mag = sum_mag / static_cast<double>(count_all);
    const double mean_ang = sum_ang / static_cast<double>(count_all);
    double ss_tot_mag = 0.0, ss_tot_ang = 0.0;

    for (std::size_t s = 0; s < preds.size(); ++s) {
        const Eigen::MatrixXd& p = preds[s];
        const Eigen::MatrixXd& y = labels[s];
        if (p.rows() != y.rows() || p.cols() != 2 || y.cols() != 2)
            throw Error("compute_metrics shape mismatch");
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            const double dm = p(i, 0) - y(i, 0);
            const double da = p(i, 1) - y(i, 1);
            if (y(i, 0) != 0.0) {
                mape += std::abs(dm / y(i, 0));
                ++n_mag;
            } else {
                ++r.excluded_zero_magnitude;
            }
            mae_ang += std::abs(rad2deg(da));
            ++n_ang;
            ss_res_mag += dm * dm;
            ss_res_ang += da * da;
            ss_tot_mag += (y(i, 0) - mean_mag) * (y(i, 0) - mean_mag);
            ss_tot_ang += (y(i, 1) - mean_ang) * (y(i, 1) - mean_ang);
        }
        const Eigen::MatrixXd pn = (p - norm.out_mean).cwiseQuotient(norm.out_std);
        const Eigen::MatrixXd yn = (y - norm.out_mean).cwiseQuotient(norm.out_std);
        total += (pn - yn).cwiseAbs().sum();
        n_total += static_cast<long>(y.size());
    }
    r.mae_angle_deg = mae_ang / static_cast<double>(n_ang);
    r.mape_magnitude_pct = n_mag ? 100.0 * mape / static_cast<double>(n_mag) : 0.0;
    r.total_mae = total / static_cast<double>(n_total);
    r.r2_magnitude = ss_tot_mag > 0.0 ? 1.0 - ss_res_mag / ss_tot_mag : 1.0;
    r.r2_angle = ss_tot_ang > 0.0 ? 1.0 - ss_res_ang / ss_tot_ang : 1.0;
    return r;
}

ErrorDensity error_density(const std::vector<double>& errors, double lo, double hi, int bins) {
    if (errors.empty()) throw Error("error_density needs a nonempty error list");
    if (!(lo < hi) || bins < 1) throw Error("error_density bad bin config");
    ErrorDensity d;
    d.edges.resize(bins + 1);
    const double w = (hi - lo) / bins;
    for (int k = 0; k <= bins; ++k) d.edges[k] = lo + w * k;
    d.counts.assign(bins, 0);
    for (double e : errors) {
        int bin = static_cast<int>(std::floor((e - lo) / w));
        bin = std::clamp(bin, 0, bins - 1);  // outliers accumulate at the edges
        d.counts[bin] += 1;
    }
    return d;
}

Eigen::MatrixXd per_sample_errors(const std::vector<Eigen::MatrixXd>& preds,
                                  const std::vector<Eigen::MatrixXd>& labels) {
    if (preds.size() != labels.size()) throw Error("per_sample_errors size mismatch");
    Eigen::MatrixXd e(preds.size(), 2);
    for (std::size_t s = 0; s < preds.size(); ++s) {
        e(static_cast<Eigen::Index>(s), 0) = (preds[s].col(0) - labels[s].col(0)).mean();
        e(static_cast<Eigen::Index>(s), 1) = rad2deg((preds[s].col(1) - labels[s].col(1)).mean());
    }
    return e;
}

}  // namespace gridse::xp
