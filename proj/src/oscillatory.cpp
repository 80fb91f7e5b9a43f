#include "chfield/oscillatory.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include <boost/math/special_functions/bessel.hpp>

#include "chfield/errors.hpp"

namespace chfield {

namespace {

// Kronrod abscissae (descending) and weights; Gauss weights for the 7-point subset.
constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double s = f(c - dx) + f(c + dx);
    kron += kWgk[j] * s;
    if (j % 2 == 1) gauss += kWg[j / 2] * s;
  }
  return {a, b, kron * h, std::abs((kron - gauss) * h)};
}

double kernel_value(OscKernel k, double t) {
  switch (k) {
    case OscKernel::None: return 1.0;
    case OscKernel::Cos: return std::cos(t);
    case OscKernel::Sin: return std::sin(t);
    case OscKernel::BesselJ0: return std::cyl_bessel_j(0.0, t);
  }
  return 0.0;
}

// m-th positive zero (m >= 1) of the kernel in t = r x.
double kernel_zero(OscKernel k, int m) {
  switch (k) {
    case OscKernel::Cos: return (m - 0.5) * M_PI;
    case OscKernel::Sin: return m * M_PI;
    case OscKernel::BesselJ0: return boost::math::cyl_bessel_j_zero(0.0, m);
    case OscKernel::None: break;
  }
  throw ContractError("kernel has no zeros");
}

}  // namespace

double adaptive_gk15(const std::function<double(double)>& f, double a, double b, double abs_tol, double rel_tol,
                     int max_intervals) {
  if (a == b) return 0.0;
  std::priority_queue<Panel> heap;
  Panel first = gk15(f, a, b);
  double total = first.value, err = first.error;
  heap.push(first);
  int count = 1;
  while (err > std::max(abs_tol, rel_tol * std::abs(total)) && count < max_intervals) {
    const Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push(worst);
      break;
    }
    const Panel l = gk15(f, worst.a, mid), r = gk15(f, mid, worst.b);
    total += l.value + r.value - worst.value;
    err += l.error + r.error - worst.error;
    heap.push(l);
    heap.push(r);
    ++count;
  }
  return total;
}

double EpsilonExtrapolator::push(double partial_sum) {
  sums_.push_back(partial_sum);
  if (sums_.size() > 40) sums_.erase(sums_.begin());
  const std::size_t n = sums_.size();
  std::vector<double> older(n + 1, 0.0);
  std::vector<double> col(sums_.begin(), sums_.end());
  double best = partial_sum;
  for (std::size_t k = 1; col.size() > 1; ++k) {
    std::vector<double> next(col.size() - 1);
    bool stop = false;
    for (std::size_t i = 0; i + 1 < col.size(); ++i) {
      const double diff = col[i + 1] - col[i];
      if (diff == 0.0 || !std::isfinite(1.0 / diff)) {
        stop = true;
        break;
      }
      next[i] = older[i + 1] + 1.0 / diff;
    }
    if (stop) break;
    if (k % 2 == 0) best = next.back();
    older = col;
    col = std::move(next);
  }
  prev_ = last_;
  last_ = best;
  error_ = sums_.size() < 3 ? 1e300 : std::abs(last_ - prev_);
  return best;
}

double oscillatory_integral(OscKernel kernel, double r, const std::function<double(double)>& g,
                            const std::function<double(double)>& tail, double tail_start, const OscOptions& opts) {
  const int sub = std::max(1, opts.subdivisions);
  const double tol = opts.rel_tol;

  auto integrate_panel = [&](const std::function<double(double)>& f, double a, double b, double abs_tol) {
    double s = 0.0;
    const double w = (b - a) / sub;
    for (int i = 0; i < sub; ++i) s += adaptive_gk15(f, a + i * w, i + 1 == sub ? b : a + (i + 1) * w, abs_tol / sub, tol);
    return s;
  };

  auto integrand = [&](double x) { return kernel_value(kernel, r * x) * g(x); };

  // Geometric panels over [0, end]: [0, x0], then doubling.
  auto geometric = [&](const std::function<double(double)>& f, double end) {
    const double x0 = std::min(opts.inner_scale, end);
    double s = integrate_panel(f, 0.0, x0, 0.0);
    double a = x0;
    while (a < end) {
      const double b = std::min(2.0 * a, end);
      s += integrate_panel(f, a, b, tol * std::abs(s) * 1e-2);
      a = b;
    }
    return s;
  };

  if (kernel == OscKernel::None || r == 0.0) return geometric(g, tail_start) + tail(tail_start);

  const double first_zero = kernel_zero(kernel, 1) / r;
  const double head = geometric(integrand, first_zero);
  EpsilonExtrapolator eps;
  double partial = head;
  double estimate = head;
  double lower = first_zero;
  int calm = 0;
  double scale = std::abs(head);
  for (int m = 1; m <= opts.max_lobes; ++m) {
    const double upper = kernel_zero(kernel, m + 1) / r;
    const double lobe = integrate_panel(integrand, lower, upper, tol * scale * 1e-2);
    partial += lobe;
    scale = std::max(scale, std::abs(lobe));
    lower = upper;
    estimate = eps.push(partial);
    if (m >= 6 && eps.error_estimate() <= tol * std::max(std::abs(estimate), 1e-300) + 1e-300) {
      if (++calm >= 2) break;
    } else {
      calm = 0;
    }
  }
  return estimate;
}

}  // namespace chfield
