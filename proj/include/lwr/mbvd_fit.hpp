#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lwr/equivalent_circuit.hpp"
#include "lwr/error.hpp"

namespace lwr::mbvd {

struct FitOptions {
  int max_iterations = 200;
  // Largest accepted log-parameter step (i.e. relative parameter change)
  // that counts as converged.
  double step_tolerance = 1e-10;
  // Relative cost decrease below which an accepted step counts as stalled.
  double cost_tolerance = 1e-14;
  bool fit_r0 = false;
  std::size_t median_window = 5;
};

// relative_sigma is the 1-sigma uncertainty of log(value), i.e. a relative
// standard error, from the Gauss-Newton covariance at the optimum.
struct ParameterEstimate {
  std::string name;
  double value = 0.0;
  double relative_sigma = 0.0;
};

struct FitReport {
  double residual_norm = 0.0;  // sqrt(sum |Y_model - Y|^2 / |Y|^2)
  int iterations = 0;
  bool converged = false;
  std::vector<ParameterEstimate> parameters;
};

struct FitResult {
  MbvdModel model;
  FitReport report;
};

class FitError : public Error {
 public:
  explicit FitError(const std::string& what, std::optional<FitResult> best = std::nullopt)
      : Error(what), best_(std::move(best)) {}
  const std::optional<FitResult>& best() const noexcept { return best_; }

 private:
  std::optional<FitResult> best_;
};

// Running median with a centred window; the window shrinks at the edges.
std::vector<double> median_filter(std::span<const double> values, std::size_t window);

// Indices of the `count` most prominent local maxima of the median-filtered
// |Y|, returned in ascending frequency order. Plateaus resolve to their
// lowest-frequency sample. Throws FitError when fewer maxima exist.
std::vector<std::size_t> find_resonance_peaks(const AdmittanceTrace& trace, std::size_t count,
                                              std::size_t window = 5);

// Peak-picking initialisation used by fit_mbvd.
MbvdModel initial_guess(const AdmittanceTrace& trace, std::size_t n_branches,
                        const FitOptions& options = {});

// Relative complex least squares over log-parameterised positive parameters,
// started from initial_guess. Returns a canonically sorted model.
FitResult fit_mbvd(const AdmittanceTrace& trace, std::size_t n_branches,
                   const FitOptions& options = {});

// Same, from a caller-supplied starting model.
FitResult refine_mbvd(const AdmittanceTrace& trace, const MbvdModel& start,
                      const FitOptions& options = {});

}  // namespace lwr::mbvd
