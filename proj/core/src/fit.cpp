#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "rfseq/bench.hpp"

namespace rfseq::bench {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t parameter_count(FitKind kind) {
  switch (kind) {
    case FitKind::kLorentzian: return 4;
    case FitKind::kExponentialDecay: return 3;
    case FitKind::kSinusoid: return 4;
  }
  return 0;
}

std::string_view fit_name(FitKind kind) {
  switch (kind) {
    case FitKind::kLorentzian: return "lorentzian";
    case FitKind::kExponentialDecay: return "exponential decay";
    case FitKind::kSinusoid: return "sinusoid";
  }
  return "fit";
}

// Model value and its gradient with respect to the parameters.
double model_and_gradient(FitKind kind, const Eigen::VectorXd& p, double x, double* grad) {
  switch (kind) {
    case FitKind::kLorentzian: {
      const double c = p[0], w = p[1], a = p[2], o = p[3];
      const double u = 2.0 * (x - c) / w;
      const double l = 1.0 / (1.0 + u * u);
      const double dl_du = -2.0 * u * l * l;
      grad[0] = a * dl_du * (-2.0 / w);
      grad[1] = a * dl_du * (-u / w);
      grad[2] = l;
      grad[3] = 1.0;
      return o + a * l;
    }
    case FitKind::kExponentialDecay: {
      const double a = p[0], tau = p[1], o = p[2];
      const double e = std::exp(-x / tau);
      grad[0] = e;
      grad[1] = a * e * x / (tau * tau);
      grad[2] = 1.0;
      return o + a * e;
    }
    case FitKind::kSinusoid: {
      const double a = p[0], f = p[1], ph = p[2], o = p[3];
      const double arg = 2.0 * kPi * f * x + ph;
      const double s = std::sin(arg), c = std::cos(arg);
      grad[0] = s;
      grad[1] = a * c * 2.0 * kPi * x;
      grad[2] = a * c;
      grad[3] = 1.0;
      return o + a * s;
    }
  }
  return 0.0;
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

Eigen::VectorXd initial_guess(FitKind kind, const std::vector<double>& x,
                              const std::vector<double>& y) {
  const std::size_t n = x.size();
  Eigen::VectorXd p(static_cast<Eigen::Index>(parameter_count(kind)));
  const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
  const double span = *xmax_it - *xmin_it;

  switch (kind) {
    case FitKind::kLorentzian: {
      const double off = median(y);
      std::size_t peak = 0;
      for (std::size_t k = 1; k < n; ++k) {
        if (std::abs(y[k] - off) > std::abs(y[peak] - off)) peak = k;
      }
      const double amp = y[peak] - off;
      std::size_t lo = peak, hi = peak;
      while (lo > 0 && std::abs(y[lo - 1] - off) >= 0.5 * std::abs(amp)) --lo;
      while (hi + 1 < n && std::abs(y[hi + 1] - off) >= 0.5 * std::abs(amp)) ++hi;
      double width = std::abs(x[hi] - x[lo]);
      if (width <= 0.0) width = 2.0 * span / static_cast<double>(std::max<std::size_t>(n - 1, 1));
      p << x[peak], width, amp, off;
      break;
    }
    case FitKind::kExponentialDecay: {
      const double tau = span > 0.0 ? span / 3.0 : 1.0;
      const double off = y.back();
      const double amp = (y.front() - off) * std::exp(x.front() / tau);
      p << amp, tau, off;
      break;
    }
    case FitKind::kSinusoid: {
      double mean = 0.0;
      for (double v : y) mean += v;
      mean /= static_cast<double>(n);
      const double dx = span / static_cast<double>(n - 1);
      std::complex<double> best{0.0, 0.0};
      std::size_t best_k = 1;
      for (std::size_t k = 1; k <= n / 2; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t j = 0; j < n; ++j) {
          const double theta = -2.0 * kPi * static_cast<double>(k * j) / static_cast<double>(n);
          acc += (y[j] - mean) * std::polar(1.0, theta);
        }
        if (std::abs(acc) > std::abs(best)) {
          best = acc;
          best_k = k;
        }
      }
      const double f = static_cast<double>(best_k) / (static_cast<double>(n) * dx);
      const double amp = 2.0 * std::abs(best) / static_cast<double>(n);
      const double phase = std::arg(best) + kPi / 2.0 - 2.0 * kPi * f * x.front();
      p << amp, f, std::remainder(phase, 2.0 * kPi), mean;
      break;
    }
  }
  return p;
}

// Parameters are fitted on x/sx and y/sy; these map them back.
void unscale(FitKind kind, Eigen::VectorXd& p, double sx, double sy) {
  switch (kind) {
    case FitKind::kLorentzian:
      p[0] *= sx;
      p[1] *= sx;
      p[2] *= sy;
      p[3] *= sy;
      break;
    case FitKind::kExponentialDecay:
      p[0] *= sy;
      p[1] *= sx;
      p[2] *= sy;
      break;
    case FitKind::kSinusoid:
      p[0] *= sy;
      p[1] /= sx;
      p[3] *= sy;
      break;
  }
}

void scale(FitKind kind, Eigen::VectorXd& p, double sx, double sy) {
  unscale(kind, p, 1.0 / sx, 1.0 / sy);
}

struct Evaluation {
  Eigen::VectorXd residual;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> jacobian;
  double cost = 0.0;
};

Evaluation evaluate(FitKind kind, const Eigen::VectorXd& p, const std::vector<double>& x,
                    const std::vector<double>& y) {
  Evaluation e;
  const auto n = static_cast<Eigen::Index>(x.size());
  e.residual.resize(n);
  e.jacobian.resize(n, p.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    e.residual[k] = y[uk] - model_and_gradient(kind, p, x[uk], e.jacobian.row(k).data());
  }
  e.cost = e.residual.squaredNorm();
  return e;
}

FitResult make_result(FitKind kind, const Eigen::VectorXd& scaled, const Evaluation& e,
                      int iterations, double sx, double sy) {
  FitResult r;
  r.kind = kind;
  r.iterations = iterations;
  r.residual_norm = std::sqrt(e.cost) * sy;

  Eigen::VectorXd p = scaled;
  unscale(kind, p, sx, sy);
  r.parameters.assign(p.data(), p.data() + p.size());

  const auto m = scaled.size();
  const auto n = e.residual.size();
  const Eigen::MatrixXd normal = e.jacobian.transpose() * e.jacobian;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
  lu.setThreshold(1e-12);
  bool finite = std::isfinite(e.cost) && lu.rank() == m && n > m;
  Eigen::VectorXd sigma = Eigen::VectorXd::Constant(m, kInf);
  if (finite) {
    const Eigen::MatrixXd cov = lu.inverse() * (e.cost / static_cast<double>(n - m));
    for (Eigen::Index j = 0; j < m; ++j) {
      sigma[j] = cov(j, j) >= 0.0 ? std::sqrt(cov(j, j)) : kInf;
    }
  }
  // Uncertainties scale like their parameters; phase is dimensionless.
  Eigen::VectorXd factors = Eigen::VectorXd::Ones(m);
  unscale(kind, factors, sx, sy);
  r.uncertainties.resize(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    const double u = sigma[j] * std::abs(factors[j]);
    r.uncertainties[static_cast<std::size_t>(j)] = std::isfinite(u) ? u : kInf;
  }
  r.well_determined = finite;
  for (std::size_t j = 0; j < r.parameters.size(); ++j) {
    if (!std::isfinite(r.uncertainties[j])) r.well_determined = false;
  }
  // A decay constant known to no better than itself is not a measurement.
  if (kind == FitKind::kExponentialDecay &&
      !(r.uncertainties[1] < std::abs(r.parameters[1]))) {
    r.well_determined = false;
  }
  return r;
}

}  // namespace

double evaluate_model(FitKind kind, std::span<const double> parameters, double x) {
  if (parameters.size() != parameter_count(kind)) {
    throw InvalidArgument(fmt::format("{} takes {} parameters", fit_name(kind),
                                      parameter_count(kind)));
  }
  Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(parameters.data(),
                                                         static_cast<Eigen::Index>(parameters.size()));
  std::vector<double> grad(parameters.size());
  return model_and_gradient(kind, p, x, grad.data());
}

FitResult fit_model(FitKind kind, std::span<const double> xs, std::span<const double> ys,
                    int max_iterations) {
  const std::size_t m = parameter_count(kind);
  if (xs.size() != ys.size()) throw InvalidArgument("x and y differ in length");
  if (xs.size() < 2 * m) {
    throw InvalidArgument(fmt::format("{} fit needs at least {} points, got {}", fit_name(kind),
                                      2 * m, xs.size()));
  }
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (!std::isfinite(xs[k]) || !std::isfinite(ys[k])) {
      throw InvalidArgument("fit data must be finite");
    }
  }
  if (max_iterations < 1) throw InvalidArgument("max_iterations must be positive");

  double sx = 0.0, sy = 0.0;
  for (double v : xs) sx = std::max(sx, std::abs(v));
  for (double v : ys) sy = std::max(sy, std::abs(v));
  if (sx == 0.0) sx = 1.0;
  if (sy == 0.0) sy = 1.0;
  std::vector<double> x(xs.size()), y(ys.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    x[k] = xs[k] / sx;
    y[k] = ys[k] / sy;
  }

  Eigen::VectorXd p = initial_guess(kind, std::vector<double>(xs.begin(), xs.end()),
                                    std::vector<double>(ys.begin(), ys.end()));
  scale(kind, p, sx, sy);
  Evaluation current = evaluate(kind, p, x, y);
  const double tiny = 1e-28 * static_cast<double>(x.size());

  double lambda = 1e-3;
  int iteration = 0;
  bool converged = current.cost <= tiny;
  while (!converged && iteration < max_iterations) {
    ++iteration;
    const Eigen::MatrixXd a = current.jacobian.transpose() * current.jacobian;
    const Eigen::VectorXd g = current.jacobian.transpose() * current.residual;
    Eigen::VectorXd d = a.diagonal();
    const double floor = std::max(d.maxCoeff(), 1.0) * 1e-12;
    for (Eigen::Index j = 0; j < d.size(); ++j) d[j] = std::max(d[j], floor);

    bool accepted = false;
    while (!accepted && lambda < 1e16) {
      Eigen::MatrixXd damped = a;
      damped.diagonal() += lambda * d;
      const Eigen::VectorXd step = damped.ldlt().solve(g);
      const Eigen::VectorXd trial = p + step;
      Evaluation next = evaluate(kind, trial, x, y);
      if (std::isfinite(next.cost) && next.cost < current.cost) {
        const double drop = current.cost - next.cost;
        const bool small_step =
            (step.array().abs() <= 1e-10 * (trial.array().abs() + 1e-10)).all();
        p = trial;
        current = std::move(next);
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (current.cost <= tiny || small_step || drop <= 1e-14 * current.cost) converged = true;
      } else {
        lambda *= 10.0;
      }
    }
    // No downhill step at any damping: the iterate is a local minimum.
    if (!accepted) converged = true;
  }

  FitResult result = make_result(kind, p, current, iteration, sx, sy);
  if (!converged) {
    throw FitError(fmt::format("{} fit did not converge in {} iterations", fit_name(kind),
                               max_iterations),
                   std::move(result));
  }
  return result;
}

namespace {

const std::vector<double>& single_axis(const Dataset& ds) {
  if (ds.axes.size() != 1 || ds.axes[0].size() != ds.signal.size()) {
    throw InvalidArgument("analysis needs a one-dimensional dataset");
  }
  return ds.axes[0];
}

}  // namespace

double spectroscopy_peak(const Dataset& ds) {
  const auto& x = single_axis(ds);
  const FitResult fit = fit_model(FitKind::kLorentzian, x, ds.signal);
  return fit.parameters[0];
}

double estimate_t1(const Dataset& ds) {
  const auto& x = single_axis(ds);
  const FitResult fit = fit_model(FitKind::kExponentialDecay, x, ds.signal);
  if (!fit.well_determined) throw FitError("decay constant is not determined by the data", fit);
  return fit.parameters[1];
}

double estimate_pi_amplitude(const Dataset& ds) {
  const auto& x = single_axis(ds);
  const FitResult fit = fit_model(FitKind::kSinusoid, x, ds.signal);
  const double f = std::abs(fit.parameters[1]);
  if (f == 0.0) throw FitError("no oscillation in the data", fit);
  return 1.0 / (2.0 * f);
}

}  // namespace rfseq::bench
