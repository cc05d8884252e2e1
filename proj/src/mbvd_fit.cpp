#include "lwr/mbvd_fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace lwr::mbvd {

namespace {

constexpr Complex kJ{0.0, 1.0};
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxLogStep = 1.0;

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) {
    const double lower = *std::max_element(v.begin(), mid);
    m = 0.5 * (m + lower);
  }
  return m;
}

// Parameter vector layout (all natural logs):
//   [c_0, r_s, (r_0), {omega_r, c_m, r_m} per branch]
// Branches are carried as (omega_r, c_m) rather than (l_m, c_m) so the
// well-determined resonance is decoupled from the coupling strength.
struct ParamLayout {
  bool fit_r0 = false;
  std::size_t n_branches = 0;

  std::size_t branch_offset() const { return fit_r0 ? 3 : 2; }
  std::size_t size() const { return branch_offset() + 3 * n_branches; }
};

struct Problem {
  const AdmittanceTrace& trace;
  ParamLayout layout;
  double fixed_r0 = 0.0;
  std::vector<double> weight;  // 1/|Y_k|

  Eigen::VectorXd pack(const MbvdModel& m, double floor_ohm) const {
    Eigen::VectorXd theta(static_cast<Eigen::Index>(layout.size()));
    theta[0] = std::log(m.static_net.c_0);
    theta[1] = std::log(std::max(m.static_net.r_s, floor_ohm));
    if (layout.fit_r0) theta[2] = std::log(std::max(m.static_net.r_0, floor_ohm));
    for (std::size_t i = 0; i < layout.n_branches; ++i) {
      const auto& b = m.branches[i];
      const auto o = static_cast<Eigen::Index>(layout.branch_offset() + 3 * i);
      theta[o] = std::log(kTwoPi * b.resonance_hz());
      theta[o + 1] = std::log(b.c_m);
      theta[o + 2] = std::log(std::max(b.r_m, floor_ohm));
    }
    return theta;
  }

  MbvdModel unpack(const Eigen::VectorXd& theta) const {
    MbvdModel m;
    m.static_net.c_0 = std::exp(theta[0]);
    m.static_net.r_s = std::exp(theta[1]);
    m.static_net.r_0 = layout.fit_r0 ? std::exp(theta[2]) : fixed_r0;
    for (std::size_t i = 0; i < layout.n_branches; ++i) {
      const auto o = static_cast<Eigen::Index>(layout.branch_offset() + 3 * i);
      const double wr = std::exp(theta[o]);
      MotionalBranch b;
      b.c_m = std::exp(theta[o + 1]);
      b.l_m = 1.0 / (wr * wr * b.c_m);
      b.r_m = std::exp(theta[o + 2]);
      m.branches.push_back(b);
    }
    return m;
  }

  // Residual vector [Re e_0, Im e_0, Re e_1, ...] and optionally its Jacobian.
  void evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd& residual,
                Eigen::MatrixXd* jacobian) const {
    const std::size_t n = trace.size();
    const auto P = static_cast<Eigen::Index>(layout.size());
    residual.resize(static_cast<Eigen::Index>(2 * n));
    if (jacobian) jacobian->resize(static_cast<Eigen::Index>(2 * n), P);

    const double c0 = std::exp(theta[0]);
    const double rs = std::exp(theta[1]);
    const double r0 = layout.fit_r0 ? std::exp(theta[2]) : fixed_r0;
    std::vector<double> wr(layout.n_branches), cm(layout.n_branches), rm(layout.n_branches),
        lm(layout.n_branches);
    for (std::size_t i = 0; i < layout.n_branches; ++i) {
      const auto o = static_cast<Eigen::Index>(layout.branch_offset() + 3 * i);
      wr[i] = std::exp(theta[o]);
      cm[i] = std::exp(theta[o + 1]);
      rm[i] = std::exp(theta[o + 2]);
      lm[i] = 1.0 / (wr[i] * wr[i] * cm[i]);
    }

    std::vector<Complex> yb(layout.n_branches);
    for (std::size_t k = 0; k < n; ++k) {
      const double w = kTwoPi * trace.frequencies[k];
      const Complex zs = r0 + 1.0 / (kJ * w * c0);
      const Complex ys = 1.0 / zs;
      Complex yp = ys;
      for (std::size_t i = 0; i < layout.n_branches; ++i) {
        yb[i] = 1.0 / (rm[i] + kJ * w * lm[i] + 1.0 / (kJ * w * cm[i]));
        yp += yb[i];
      }
      const Complex y = yp / (1.0 + rs * yp);
      const Complex e = (y - trace.admittance[k]) * weight[k];
      const auto row = static_cast<Eigen::Index>(2 * k);
      residual[row] = e.real();
      residual[row + 1] = e.imag();
      if (!jacobian) continue;

      // Y = Yp / (1 + Rs Yp), so dY/dYp = 1 / (1 + Rs Yp)^2 stays finite as Yp -> 0.
      const Complex den = 1.0 + rs * yp;
      const Complex dy_dyp = weight[k] / (den * den);
      auto put = [&](Eigen::Index col, Complex d) {
        (*jacobian)(row, col) = d.real();
        (*jacobian)(row + 1, col) = d.imag();
      };
      auto put_yp = [&](Eigen::Index col, Complex dyp) { put(col, dy_dyp * dyp); };
      put(1, -y * y * rs * weight[k]);
      put_yp(0, -ys * ys * (-1.0 / (kJ * w * c0)));
      if (layout.fit_r0) put_yp(2, -ys * ys * r0);
      for (std::size_t i = 0; i < layout.n_branches; ++i) {
        const auto o = static_cast<Eigen::Index>(layout.branch_offset() + 3 * i);
        const Complex yb2 = yb[i] * yb[i];
        const Complex jwl = kJ * w * lm[i];
        put_yp(o, -yb2 * (-2.0 * jwl));
        put_yp(o + 1, -yb2 * (-jwl - 1.0 / (kJ * w * cm[i])));
        put_yp(o + 2, -yb2 * rm[i]);
      }
    }
  }
};

std::vector<ParameterEstimate> parameter_estimates(const Problem& problem,
                                                   const Eigen::VectorXd& theta,
                                                   const MbvdModel& model) {
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  problem.evaluate(theta, r, &J);
  const auto P = J.cols();
  const double dof = std::max<double>(1.0, static_cast<double>(J.rows() - P));
  const double sigma2 = r.squaredNorm() / dof;
  const Eigen::MatrixXd A = J.transpose() * J;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double cutoff = ev.cwiseAbs().maxCoeff() * 1e-14;
  Eigen::VectorXd inv_ev = ev.unaryExpr([cutoff](double v) { return v > cutoff ? 1.0 / v : 0.0; });
  const Eigen::MatrixXd cov =
      sigma2 * eig.eigenvectors() * inv_ev.asDiagonal() * eig.eigenvectors().transpose();

  auto sd = [&](Eigen::Index i) { return std::sqrt(std::max(0.0, cov(i, i))); };
  std::vector<ParameterEstimate> out;
  out.push_back({"c_0", model.static_net.c_0, sd(0)});
  out.push_back({"r_s", model.static_net.r_s, sd(1)});
  if (problem.layout.fit_r0) out.push_back({"r_0", model.static_net.r_0, sd(2)});
  for (std::size_t i = 0; i < problem.layout.n_branches; ++i) {
    const auto o = static_cast<Eigen::Index>(problem.layout.branch_offset() + 3 * i);
    const auto& b = model.branches[i];
    const std::string tag = "[" + std::to_string(i) + "]";
    // log l_m = -2 log w_r - log c_m
    const double var_l = 4.0 * cov(o, o) + cov(o + 1, o + 1) + 4.0 * cov(o, o + 1);
    out.push_back({"r_m" + tag, b.r_m, sd(o + 2)});
    out.push_back({"l_m" + tag, b.l_m, std::sqrt(std::max(0.0, var_l))});
    out.push_back({"c_m" + tag, b.c_m, sd(o + 1)});
  }
  return out;
}

}  // namespace

std::vector<double> median_filter(std::span<const double> values, std::size_t window) {
  const std::size_t n = values.size();
  std::vector<double> out(n);
  const std::size_t half = window / 2;
  std::vector<double> buf;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    buf.assign(values.begin() + static_cast<std::ptrdiff_t>(lo),
               values.begin() + static_cast<std::ptrdiff_t>(hi + 1));
    out[i] = median_of(buf);
  }
  return out;
}

std::vector<std::size_t> find_resonance_peaks(const AdmittanceTrace& trace, std::size_t count,
                                              std::size_t window) {
  trace.validate();
  if (count == 0) return {};
  std::vector<double> mag(trace.size());
  for (std::size_t k = 0; k < trace.size(); ++k) mag[k] = std::abs(trace.admittance[k]);
  const auto m = median_filter(mag, std::max<std::size_t>(window, 1));
  const std::size_t n = m.size();

  // Local maxima over runs of equal samples; a run is a maximum when both
  // neighbours are strictly lower. Endpoints never qualify.
  std::vector<std::size_t> maxima;
  std::size_t i = 1;
  while (i + 1 < n) {
    std::size_t j = i;
    while (j + 1 < n && m[j + 1] == m[i]) ++j;
    if (j + 1 < n && m[i - 1] < m[i] && m[j + 1] < m[j]) maxima.push_back(i);
    i = j + 1;
  }
  if (maxima.size() < count) {
    throw FitError("found " + std::to_string(maxima.size()) + " admittance peaks but " +
                   std::to_string(count) + " branches were requested (deficit " +
                   std::to_string(count - maxima.size()) + ")");
  }

  // Prominence in log|Y|: height above the higher of the two bases, each base
  // being the minimum between the peak and the nearest higher sample.
  struct Scored {
    std::size_t index;
    double prominence;
  };
  std::vector<Scored> scored;
  for (std::size_t p : maxima) {
    double left_min = m[p];
    for (std::size_t q = p; q-- > 0;) {
      if (m[q] > m[p]) break;
      left_min = std::min(left_min, m[q]);
    }
    double right_min = m[p];
    for (std::size_t q = p + 1; q < n; ++q) {
      if (m[q] > m[p]) break;
      right_min = std::min(right_min, m[q]);
    }
    const double base = std::max(left_min, right_min);
    scored.push_back({p, std::log(m[p]) - std::log(std::max(base, 1e-300))});
  }
  std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.prominence != b.prominence) return a.prominence > b.prominence;
    return a.index < b.index;
  });
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(scored[k].index);
  std::sort(out.begin(), out.end());
  return out;
}

MbvdModel initial_guess(const AdmittanceTrace& trace, std::size_t n_branches,
                        const FitOptions& options) {
  trace.validate();
  const std::size_t n = trace.size();

  std::vector<double> susceptance_slope(n), re_z(n), abs_z(n), mag(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = kTwoPi * trace.frequencies[k];
    susceptance_slope[k] = trace.admittance[k].imag() / w;
    const Complex z = 1.0 / trace.admittance[k];
    re_z[k] = z.real();
    abs_z[k] = std::abs(z);
    mag[k] = std::abs(trace.admittance[k]);
  }

  MbvdModel model;
  double c0 = median_of(susceptance_slope);
  if (!(c0 > 0.0)) {
    // Inductive-looking trace; fall back to the magnitude.
    std::vector<double> ratio(n);
    for (std::size_t k = 0; k < n; ++k) ratio[k] = mag[k] / (kTwoPi * trace.frequencies[k]);
    c0 = median_of(ratio);
  }
  model.static_net.c_0 = c0;
  const double z_scale = median_of(abs_z);
  model.static_net.r_s = std::max(median_of(re_z), 1e-6 * z_scale);
  model.static_net.r_0 = 0.0;

  if (n_branches == 0) return model;

  const auto peaks = find_resonance_peaks(trace, n_branches, options.median_window);
  const auto smooth = median_filter(mag, options.median_window);
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    const std::size_t p = peaks[i];
    const double fr = trace.frequencies[p];
    const double wr = kTwoPi * fr;

    // Antiresonance: lowest |Y| between this peak and the next one.
    const std::size_t end = i + 1 < peaks.size() ? peaks[i + 1] : n - 1;
    std::size_t valley = p;
    for (std::size_t q = p + 1; q <= end; ++q) {
      if (smooth[q] < smooth[valley]) valley = q;
    }
    double cm = 0.05 * c0;
    if (valley > p && valley < n - 1) {
      const double ratio = trace.frequencies[valley] / fr;
      const double est = c0 * (ratio * ratio - 1.0);
      if (est > 0.0 && std::isfinite(est)) cm = std::min(est, 2.0 * c0);
    }

    // Motional resistance from the peak admittance with the static part
    // removed.
    const Complex zp = 1.0 / trace.admittance[p] - model.static_net.r_s;
    const Complex ym = 1.0 / zp - kJ * wr * c0;
    double rm = (1.0 / ym).real();
    const double rm_floor = 1.0 / (1e4 * wr * cm);
    if (!std::isfinite(rm) || rm < rm_floor) rm = 1.0 / (100.0 * wr * cm);

    MotionalBranch b;
    b.c_m = cm;
    b.l_m = 1.0 / (wr * wr * cm);
    b.r_m = rm;
    model.branches.push_back(b);
  }
  return model;
}

FitResult refine_mbvd(const AdmittanceTrace& trace, const MbvdModel& start,
                      const FitOptions& options) {
  trace.validate();
  start.validate();

  Problem problem{trace, ParamLayout{options.fit_r0, start.branches.size()},
                  start.static_net.r_0, {}};
  problem.weight.resize(trace.size());
  std::vector<double> abs_z(trace.size());
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const double a = std::abs(trace.admittance[k]);
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw InputError("fit_mbvd: admittance samples must be finite and non-zero");
    }
    problem.weight[k] = 1.0 / a;
    abs_z[k] = 1.0 / a;
  }
  const double floor_ohm = 1e-12 * median_of(abs_z);

  Eigen::VectorXd theta = problem.pack(start, floor_ohm);
  // Resistances stop at the floor so a vanishing loss term cannot drift
  // towards -inf in log space.
  Eigen::VectorXd lower = Eigen::VectorXd::Constant(theta.size(), -std::numeric_limits<double>::infinity());
  lower[1] = std::log(floor_ohm);
  if (options.fit_r0) lower[2] = std::log(floor_ohm);
  for (std::size_t i = 0; i < start.branches.size(); ++i) {
    lower[static_cast<Eigen::Index>(problem.layout.branch_offset() + 3 * i + 2)] = std::log(floor_ohm);
  }
  Eigen::VectorXd r, r_trial;
  Eigen::MatrixXd J;
  problem.evaluate(theta, r, &J);
  double cost = r.squaredNorm();
  const double exact_cost = 1e-28 * static_cast<double>(r.size());

  double lambda = 1e-3;
  int iterations = 0;
  bool converged = cost <= exact_cost;
  while (!converged && iterations < options.max_iterations) {
    ++iterations;
    const Eigen::MatrixXd A = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    Eigen::VectorXd diag = A.diagonal();
    const double dmax = diag.maxCoeff();
    diag = diag.cwiseMax(1e-12 * dmax).cwiseMax(std::numeric_limits<double>::min());

    Eigen::MatrixXd damped = A;
    damped.diagonal() += lambda * diag;
    Eigen::VectorXd step = damped.ldlt().solve(-g);
    // Log-space trust region: no parameter changes by more than a factor e per step.
    if (const double big = step.cwiseAbs().maxCoeff(); big > kMaxLogStep) step *= kMaxLogStep / big;
    if (!step.allFinite()) {
      lambda *= 10.0;
      if (lambda > 1e20) break;
      continue;
    }
    const Eigen::VectorXd trial = (theta + step).cwiseMax(lower);
    problem.evaluate(trial, r_trial, nullptr);
    const double trial_cost = r_trial.allFinite() ? r_trial.squaredNorm()
                                                  : std::numeric_limits<double>::infinity();
    if (trial_cost < cost) {
      const double decrease = cost - trial_cost;
      const double moved = (trial - theta).cwiseAbs().maxCoeff();
      theta = trial;
      cost = trial_cost;
      problem.evaluate(theta, r, &J);
      lambda = std::max(lambda * 0.3, 1e-12);
      if (moved <= options.step_tolerance || cost <= exact_cost ||
          decrease <= options.cost_tolerance * (cost + decrease)) {
        converged = true;
      }
    } else {
      lambda *= 10.0;
      // No descent left at machine precision: the iterate is stationary.
      if (lambda > 1e16) converged = true;
    }
  }

  FitResult result;
  result.model = problem.unpack(theta);
  result.report.residual_norm = std::sqrt(cost);
  result.report.iterations = iterations;
  result.report.converged = converged;
  result.report.parameters = parameter_estimates(problem, theta, result.model);
  // Sort after the estimates so their branch indices follow the same order.
  std::vector<std::size_t> order(result.model.branches.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return result.model.branches[a].resonance_hz() < result.model.branches[b].resonance_hz();
  });
  if (!std::is_sorted(order.begin(), order.end())) {
    const std::size_t head = options.fit_r0 ? 3 : 2;
    std::vector<MotionalBranch> sorted;
    std::vector<ParameterEstimate> params(result.report.parameters.begin(),
                                          result.report.parameters.begin() + head);
    for (std::size_t dst = 0; dst < order.size(); ++dst) {
      const std::size_t src = order[dst];
      sorted.push_back(result.model.branches[src]);
      for (std::size_t q = 0; q < 3; ++q) {
        auto p = result.report.parameters[head + 3 * src + q];
        p.name = p.name.substr(0, p.name.find('[')) + "[" + std::to_string(dst) + "]";
        params.push_back(p);
      }
    }
    result.model.branches = std::move(sorted);
    result.report.parameters = std::move(params);
  }

  if (!converged) {
    throw FitError("mBVD fit did not converge within " + std::to_string(options.max_iterations) +
                       " iterations (relative residual " +
                       std::to_string(result.report.residual_norm) + ")",
                   result);
  }
  return result;
}

FitResult fit_mbvd(const AdmittanceTrace& trace, std::size_t n_branches,
                   const FitOptions& options) {
  const MbvdModel start = initial_guess(trace, n_branches, options);
  return refine_mbvd(trace, start, options);
}

}  // namespace lwr::mbvd
