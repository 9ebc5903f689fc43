#pragma once

#include <vector>

#include <Eigen/Dense>

#include "gridse/nn.hpp"

namespace gridse::xp {

struct MetricsReport {
    double mae_angle_deg = 0.0;
    double mape_magnitude_pct = 0.0;
    double r2_angle = 0.0;
    double r2_magnitude = 0.0;
    double total_mae = 0.0;  // mean |error| over all outputs, z-scored
    long samples = 0;
    long excluded_zero_magnitude = 0;
};

// preds/labels are per-sample n x 2 matrices in physical units (vm pu,
// va radians). Total MAE z-scores with the supplied training statistics.
MetricsReport compute_metrics(const std::vector<Eigen::MatrixXd>& preds,
                              const std::vector<Eigen::MatrixXd>& labels,
                              const nn::Normalization& norm);

struct ErrorDensity {
    std::vector<double> edges;  // bins+1 ascending
    std::vector<long> counts;   // per bin; outliers clamp to the edge bins
};

ErrorDensity error_density(const std::vector<double>& errors, double lo, double hi, int bins);

// Per-sample signed mean estimation error for density plots: column 0
// magnitude (pu), column 1 angle (degrees).
Eigen::MatrixXd per_sample_errors(const std::vector<Eigen::MatrixXd>& preds,
                                  const std::vector<Eigen::MatrixXd>& labels);

}  // namespace gridse::xp
