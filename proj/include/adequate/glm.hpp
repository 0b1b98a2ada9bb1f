#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "adequate/sparse.hpp"

namespace adequate {

struct Coefficient {
    std::uint32_t feature = 0;
    double value = 0.0;

    bool operator==(const Coefficient&) const = default;
};

// Sparse logistic model; `coefficients` holds the nonzeros sorted by feature id.
struct FittedModel {
    double intercept = 0.0;
    std::vector<Coefficient> coefficients;
    std::size_t n_features = 0;
    double lambda = 0.0;
    std::size_t n_nonzero = 0;
    bool converged = false;
    std::size_t n_iterations = 0;

    double coefficient(std::uint32_t feature) const;
    bool operator==(const FittedModel&) const = default;
};

struct SolverOptions {
    double tolerance = 1e-7;     // max |coefficient change| over a full cycle
    std::size_t max_cycles = 10000;
    double weight_floor = 1e-5;  // lower bound on p(1-p) in the coordinate Newton step

    bool operator==(const SolverOptions&) const = default;
};

// (1/n) * sum logistic loss + lambda * sum |beta_j|; the intercept is unpenalized.
double penalized_objective(const BinaryMatrix& design, std::span<const std::uint8_t> labels,
                           const FittedModel& model, double lambda);

// Smallest lambda for which the all-zero coefficient vector is optimal:
// max_j |(1/n) x_j'(y - ybar)|.
double lambda_max(const BinaryMatrix& design, std::span<const std::uint8_t> labels);

// Cyclic coordinate descent for L1-penalized logistic regression.
//
// Each coordinate takes a Newton step on the local quadratic model (working
// weights p(1-p) floored at weight_floor) followed by soft-thresholding. The
// step is halved until the exact one-dimensional objective does not increase,
// so the penalized objective is non-increasing across cycles. After a full
// sweep the solver iterates over the current nonzeros only until they settle,
// then sweeps again; it reports convergence once a full sweep moves no
// coefficient by more than `tolerance`.
//
// The solver keeps its state between calls, so successive fit() calls along a
// decreasing lambda path are warm-started.
class LassoLogistic {
public:
    LassoLogistic(const BinaryMatrix& design, std::span<const std::uint8_t> labels, SolverOptions options = {});

    // Throws NumericalError if the loss becomes non-finite.
    FittedModel fit(double lambda);

    // Restart from the intercept-only model at the observed outcome rate.
    void reset();
    void warm_start(const FittedModel& model);

    double lambda_max() const { return lambda_max_; }

private:
    double cycle(double lambda, bool full);
    double update_coordinate(std::size_t j, double lambda);
    double update_intercept();
    void refresh_probabilities();
    FittedModel snapshot(double lambda, bool converged, std::size_t cycles) const;

    const BinaryMatrix& x_;
    std::span<const std::uint8_t> y_;
    SolverOptions opt_;
    double inv_n_;
    double lambda_max_;

    double intercept_ = 0.0;
    std::vector<double> beta_;
    struct RowState {
        double p;    // P(y = 1)
        double q;    // 1 - p, kept separately to stay accurate as p -> 1
        double res;  // p - y
        double w;    // p q
    };
    void set_row(std::size_t i, double p, double q) {
        rows_[i] = {p, q, y_[i] ? -q : p, p * q};
    }

    std::vector<double> eta_;  // linear predictor
    std::vector<RowState> rows_;
};

FittedModel fit_lasso_logistic(const BinaryMatrix& design, std::span<const std::uint8_t> labels, double lambda,
                               const std::optional<FittedModel>& warm_start = std::nullopt,
                               const SolverOptions& options = {});

// Descending grid of `count` values log-spaced from lambda_max to
// ratio * lambda_max. A zero lambda_max yields the single point {0}.
std::vector<double> lambda_grid(double lambda_max, std::size_t count, double ratio);

struct CvOptions {
    std::size_t n_folds = 3;
    std::size_t n_lambdas = 50;
    double lambda_ratio = 1e-4;
    std::uint64_t seed = 0;
    SolverOptions solver;
};

struct CvResult {
    std::vector<double> lambda_grid;
    // Out-of-fold log-likelihood per held-out sample, one entry per grid point.
    std::vector<double> mean_oof_loglik;
    std::size_t selected_index = 0;
    double selected_lambda = 0.0;

    bool operator==(const CvResult&) const = default;
};

// Fold id per sample. Events and non-events are shuffled separately and dealt
// round-robin, so every fold receives floor or ceil of events / n_folds.
// Throws Error if any fold would receive no event.
std::vector<std::uint32_t> stratified_folds(std::span<const std::uint8_t> labels, std::size_t n_folds,
                                            std::uint64_t seed);

// Grid from the full data's lambda_max; each fold is fitted along the grid
// with warm starts. Selects the maximum mean held-out log-likelihood, the
// larger lambda on exact ties.
CvResult select_lambda_cv(const BinaryMatrix& design, std::span<const std::uint8_t> labels,
                          const CvOptions& options);

// Fits along cv.lambda_grid down to the selected lambda, warm-starting each point.
FittedModel refit_selected(const BinaryMatrix& design, std::span<const std::uint8_t> labels, const CvResult& cv,
                           const SolverOptions& options = {});

std::vector<double> linear_predictor(const FittedModel& model, const BinaryMatrix& rows);

// 1 / (1 + exp(-(intercept + x'beta))) per row. Throws InputError if the model
// references a feature the design does not have.
std::vector<double> predict_risk(const FittedModel& model, const BinaryMatrix& rows);

// Text layout:
//   intercept <value>
//   <feature_id> <coefficient>      (one line per nonzero)
//   lambda <value>
//   iterations <count>
//   converged <0|1>
//   n_features <count>
void write_model(const FittedModel& model, std::ostream& out);
FittedModel read_model(std::istream& in);

}  // namespace adequate
