#pragma once
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace psahara {

struct ReturnsPanel {
    std::vector<std::string> dates;
    std::vector<std::string> assets;
    Eigen::MatrixXd returns;  // rows = observations, cols = assets
    double h = 1.0 / 252.0;   // years per observation
};

struct VolEstimate {
    Eigen::MatrixXd sigma;  // m x q
    std::string method;     // historical | implied | mle
    Eigen::VectorXd norms;  // row norms of sigma
};

VolEstimate historical_vol(const ReturnsPanel& panel);
Eigen::MatrixXd sample_covariance(const ReturnsPanel& panel);  // unbiased, annualized
Eigen::MatrixXd sample_correlation(const ReturnsPanel& panel);

double bs_put_price(double S, double K, double r, double T, double vol);
double bs_put_vega(double S, double K, double r, double T, double vol);
double implied_vol(double price, double S, double K, double r, double T);

VolEstimate assemble_sigma(const Eigen::VectorXd& norms, const Eigen::MatrixXd& corr);
Eigen::VectorXd mle_vol(const ReturnsPanel& panel);

// symmetric factor B with B B^T = S for PSD S (lower-triangular when S is PD)
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& S);

}  // namespace psahara
