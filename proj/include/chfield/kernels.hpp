#pragma once

namespace chfield {

struct MaternParams {
  double nu = 0.5;
  double phi = 1.0;
  double sigma2 = 1.0;
};

struct CHParams {
  double nu = 0.5;
  double alpha = 1.0;
  double beta = 1.0;
  double sigma2 = 1.0;
};

// sigma may be any real (it is the cross coefficient in multivariate use).
struct GCParams {
  double alpha = 1.0;
  double beta = 1.0;
  double phi = 1.0;
  double sigma = 1.0;
};

void validate(const MaternParams& p);
void validate(const CHParams& p);
void validate(const GCParams& p);

double matern_cov(double h, const MaternParams& p);
double matern_sdf(double x, const MaternParams& p, int dim);
// ln of matern_sdf with sigma2 = 1.
double log_matern_sdf_unit(double x, double nu, double phi, int dim);

double ch_cov(double h, const CHParams& p);
double ch_sdf(double x, const CHParams& p, int dim);
double log_ch_sdf_unit(double x, double nu, double alpha, double beta, int dim);

double gc_cov(double h, const GCParams& p);

// Leading tail constants: ch_cov(h) ~ c h^(-2 alpha), ch_sdf(x) ~ c x^(-2 nu - d).
double ch_cov_tail_constant(const CHParams& p);
double ch_sdf_tail_constant(const CHParams& p, int dim);

}  // namespace chfield
