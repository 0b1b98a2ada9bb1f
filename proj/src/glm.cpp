#include "adequate/glm.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "adequate/detail/text.hpp"
#include "adequate/errors.hpp"

namespace adequate {

namespace {

constexpr int kMaxHalvings = 60;
constexpr double kRoundoff = 1e-14;

double softplus(double eta) { return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

// log P(y | eta) for the logistic model.
double log_likelihood(double eta, std::uint8_t y) { return (y ? eta : 0.0) - softplus(eta); }

std::vector<double> dense_coefficients(const FittedModel& m, std::size_t n_features) {
    std::vector<double> beta(n_features, 0.0);
    for (const auto& c : m.coefficients) {
        if (c.feature >= n_features) {
            throw InputError("model references feature " + std::to_string(c.feature) + " but design has " +
                             std::to_string(n_features) + " features");
        }
        beta[c.feature] = c.value;
    }
    return beta;
}

}  // namespace

double FittedModel::coefficient(std::uint32_t feature) const {
    auto it = std::lower_bound(coefficients.begin(), coefficients.end(), feature,
                               [](const Coefficient& c, std::uint32_t f) { return c.feature < f; });
    return (it != coefficients.end() && it->feature == feature) ? it->value : 0.0;
}

double lambda_max(const BinaryMatrix& design, std::span<const std::uint8_t> labels) {
    const double n = static_cast<double>(labels.size());
    const double ybar = static_cast<double>(std::accumulate(labels.begin(), labels.end(), std::size_t{0})) / n;
    double best = 0.0;
    for (std::size_t j = 0; j < design.cols(); ++j) {
        double s = 0.0;
        for (RowIndex r : design.column(j)) s += labels[r] - ybar;
        best = std::max(best, std::abs(s) / n);
    }
    return best;
}

double penalized_objective(const BinaryMatrix& design, std::span<const std::uint8_t> labels,
                           const FittedModel& model, double lambda) {
    const auto eta = linear_predictor(model, design);
    double loss = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) loss -= log_likelihood(eta[i], labels[i]);
    double l1 = 0.0;
    for (const auto& c : model.coefficients) l1 += std::abs(c.value);
    return loss / static_cast<double>(labels.size()) + lambda * l1;
}

LassoLogistic::LassoLogistic(const BinaryMatrix& design, std::span<const std::uint8_t> labels, SolverOptions options)
    : x_(design),
      y_(labels),
      opt_(options),
      inv_n_(1.0 / static_cast<double>(labels.size())),
      lambda_max_(adequate::lambda_max(design, labels)) {
    if (design.rows() != labels.size()) throw InputError("design rows and labels differ in length");
    if (labels.empty()) throw InputError("cannot fit on zero samples");
    beta_.assign(design.cols(), 0.0);
    eta_.resize(labels.size());
    rows_.resize(labels.size());
    reset();
}

void LassoLogistic::reset() {
    const double events = static_cast<double>(std::accumulate(y_.begin(), y_.end(), std::size_t{0}));
    const double n = static_cast<double>(y_.size());
    // Intercept-only optimum; an all-one or all-zero sample has none, so clamp.
    const double ybar = std::clamp(events / n, 1e-12, 1.0 - 1e-12);
    intercept_ = std::log(ybar / (1.0 - ybar));
    std::fill(beta_.begin(), beta_.end(), 0.0);
    std::fill(eta_.begin(), eta_.end(), intercept_);
}

void LassoLogistic::warm_start(const FittedModel& model) {
    beta_ = dense_coefficients(model, x_.cols());
    intercept_ = model.intercept;
    std::fill(eta_.begin(), eta_.end(), intercept_);
    for (const auto& c : model.coefficients) {
        for (RowIndex r : x_.column(c.feature)) eta_[r] += c.value;
    }
}

void LassoLogistic::refresh_probabilities() {
    for (std::size_t i = 0; i < eta_.size(); ++i) {
        const double e = std::exp(-std::abs(eta_[i]));
        const double big = 1.0 / (1.0 + e);
        const double small = e * big;
        set_row(i, eta_[i] >= 0 ? big : small, eta_[i] >= 0 ? small : big);
    }
}

// Change of softplus(eta) when eta moves by delta, given p = sigmoid(eta).
static inline double softplus_shift(double p, double q, double em1, double ex) {
    return std::abs(em1) < 0.5 ? std::log1p(p * em1) : std::log(q + p * ex);
}

// Upper bound on the loss change of a step delta from gradient g and exact
// curvature curv (both per sample): log p(1-p) has slope at most 1 in eta, so
// the curvature anywhere on the step is at most curv * exp(|delta|).
static inline double loss_change_bound(double g, double curv, double delta) {
    return g * delta + 0.5 * curv * std::exp(std::abs(delta)) * delta * delta;
}

double LassoLogistic::update_coordinate(std::size_t j, double lambda) {
    const auto rows = x_.column(j);
    if (rows.empty()) return 0.0;

    double g = 0.0;
    double h = 0.0;
    double curv = 0.0;
    for (RowIndex r : rows) {
        const auto& row = rows_[r];
        g += row.res;
        const double w = row.w;
        curv += w;
        h += std::max(w, opt_.weight_floor);
    }
    g *= inv_n_;
    h *= inv_n_;
    curv *= inv_n_;

    const double b = beta_[j];
    const double z = b - g / h;
    const double thr = lambda / h;
    const double target = z > thr ? z - thr : (z < -thr ? z + thr : 0.0);
    double delta = target - b;
    if (delta == 0.0) return 0.0;

    double em1 = 0.0;
    double ex = 1.0;
    int halving = 0;
    for (; halving < kMaxHalvings; ++halving) {
        em1 = std::expm1(delta);
        ex = em1 + 1.0;
        if (loss_change_bound(g, curv, delta) + lambda * (std::abs(b + delta) - std::abs(b)) <= 0.0) break;
        double change = 0.0;
        double scale = 0.0;
        for (RowIndex r : rows) {
            const double s = softplus_shift(rows_[r].p, rows_[r].q, em1, ex) - (y_[r] ? delta : 0.0);
            change += s;
            scale += std::abs(s);
        }
        const double pen = lambda * (std::abs(b + delta) - std::abs(b));
        change = change * inv_n_ + pen;
        scale = scale * inv_n_ + lambda * (std::abs(b + delta) + std::abs(b));
        if (std::isfinite(change) && change <= kRoundoff * scale) break;
        delta *= 0.5;
    }
    if (halving == kMaxHalvings) return 0.0;

    beta_[j] = b + delta;
    for (RowIndex r : rows) {
        eta_[r] += delta;
        const auto& row = rows_[r];
        const double d = row.q + row.p * ex;
        set_row(r, row.p * ex / d, row.q / d);
    }
    return std::abs(delta);
}

double LassoLogistic::update_intercept() {
    const std::size_t n = y_.size();
    double g = 0.0;
    double h = 0.0;
    double curv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = rows_[i];
        g += row.res;
        const double w = row.w;
        curv += w;
        h += std::max(w, opt_.weight_floor);
    }
    double delta = -g / h;
    if (delta == 0.0 || !std::isfinite(delta)) return 0.0;

    double em1 = 0.0;
    double ex = 1.0;
    int halving = 0;
    for (; halving < kMaxHalvings; ++halving) {
        em1 = std::expm1(delta);
        ex = em1 + 1.0;
        if (loss_change_bound(g, curv, delta) <= 0.0) break;
        double change = 0.0;
        double scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = softplus_shift(rows_[i].p, rows_[i].q, em1, ex) - (y_[i] ? delta : 0.0);
            change += s;
            scale += std::abs(s);
        }
        if (std::isfinite(change) && change <= kRoundoff * scale) break;
        delta *= 0.5;
    }
    if (halving == kMaxHalvings) return 0.0;

    intercept_ += delta;
    for (std::size_t i = 0; i < n; ++i) {
        eta_[i] += delta;
        const auto& row = rows_[i];
        const double d = row.q + row.p * ex;
        set_row(i, row.p * ex / d, row.q / d);
    }
    return std::abs(delta);
}

double LassoLogistic::cycle(double lambda, bool full) {
    double max_change = update_intercept();
    for (std::size_t j = 0; j < beta_.size(); ++j) {
        if (!full && beta_[j] == 0.0) continue;
        max_change = std::max(max_change, update_coordinate(j, lambda));
    }
    return max_change;
}

FittedModel LassoLogistic::fit(double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be finite and >= 0");
    if (lambda >= lambda_max_) {
        // all-zero coefficients are optimal; skip the boundary case's roundoff
        reset();
        return snapshot(lambda, true, 0);
    }
    std::size_t cycles = 0;
    bool converged = false;
    while (cycles < opt_.max_cycles) {
        refresh_probabilities();
        if (!std::isfinite(intercept_)) {
            throw NumericalError("non-finite loss at cycle " + std::to_string(cycles));
        }
        const double full_change = cycle(lambda, true);
        ++cycles;
        if (full_change < opt_.tolerance) {
            converged = true;
            break;
        }
        while (cycles < opt_.max_cycles) {
            const double change = cycle(lambda, false);
            ++cycles;
            if (change < opt_.tolerance) break;
        }
    }
    for (double e : eta_) {
        if (!std::isfinite(e)) throw NumericalError("non-finite loss at cycle " + std::to_string(cycles));
    }
    return snapshot(lambda, converged, cycles);
}

FittedModel LassoLogistic::snapshot(double lambda, bool converged, std::size_t cycles) const {
    FittedModel m;
    m.intercept = intercept_;
    m.n_features = beta_.size();
    m.lambda = lambda;
    m.converged = converged;
    m.n_iterations = cycles;
    for (std::size_t j = 0; j < beta_.size(); ++j) {
        if (beta_[j] != 0.0) m.coefficients.push_back({static_cast<std::uint32_t>(j), beta_[j]});
    }
    m.n_nonzero = m.coefficients.size();
    return m;
}

FittedModel fit_lasso_logistic(const BinaryMatrix& design, std::span<const std::uint8_t> labels, double lambda,
                               const std::optional<FittedModel>& warm_start, const SolverOptions& options) {
    LassoLogistic solver(design, labels, options);
    if (warm_start) solver.warm_start(*warm_start);
    return solver.fit(lambda);
}

std::vector<double> lambda_grid(double lambda_max, std::size_t count, double ratio) {
    if (count == 0) throw InputError("lambda grid needs at least one point");
    if (!(ratio > 0.0 && ratio <= 1.0)) throw InputError("lambda ratio must lie in (0, 1]");
    if (lambda_max <= 0.0) return {0.0};
    std::vector<double> grid(count);
    const double log_hi = std::log(lambda_max);
    const double log_lo = std::log(lambda_max * ratio);
    for (std::size_t k = 0; k < count; ++k) {
        const double t = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
        grid[k] = std::exp(log_hi + t * (log_lo - log_hi));
    }
    grid.front() = lambda_max;
    return grid;
}

std::vector<std::uint32_t> stratified_folds(std::span<const std::uint8_t> labels, std::size_t n_folds,
                                            std::uint64_t seed) {
    if (n_folds < 2) throw InputError("cross-validation needs at least 2 folds");
    std::vector<RowIndex> pos;
    std::vector<RowIndex> neg;
    for (RowIndex i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
    if (pos.size() < n_folds) {
        throw Error("fold construction failed: " + std::to_string(pos.size()) + " events cannot cover " +
                    std::to_string(n_folds) + " folds");
    }
    std::mt19937_64 rng(seed);
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);
    std::vector<std::uint32_t> fold(labels.size());
    std::size_t k = 0;
    for (RowIndex r : pos) fold[r] = static_cast<std::uint32_t>(k++ % n_folds);
    for (RowIndex r : neg) fold[r] = static_cast<std::uint32_t>(k++ % n_folds);
    return fold;
}

CvResult select_lambda_cv(const BinaryMatrix& design, std::span<const std::uint8_t> labels, const CvOptions& options) {
    CvResult result;
    result.lambda_grid = lambda_grid(lambda_max(design, labels), options.n_lambdas, options.lambda_ratio);
    const auto folds = stratified_folds(labels, options.n_folds, options.seed);
    std::vector<double> total(result.lambda_grid.size(), 0.0);

    for (std::uint32_t f = 0; f < options.n_folds; ++f) {
        std::vector<RowIndex> train_rows;
        std::vector<RowIndex> held_rows;
        for (RowIndex i = 0; i < labels.size(); ++i) (folds[i] == f ? held_rows : train_rows).push_back(i);
        const auto x_train = design.select_rows(train_rows);
        const auto x_held = design.select_rows(held_rows);
        std::vector<std::uint8_t> y_train(train_rows.size());
        std::vector<std::uint8_t> y_held(held_rows.size());
        for (std::size_t k = 0; k < train_rows.size(); ++k) y_train[k] = labels[train_rows[k]];
        for (std::size_t k = 0; k < held_rows.size(); ++k) y_held[k] = labels[held_rows[k]];

        LassoLogistic solver(x_train, y_train, options.solver);
        for (std::size_t k = 0; k < result.lambda_grid.size(); ++k) {
            const auto model = solver.fit(result.lambda_grid[k]);
            const auto eta = linear_predictor(model, x_held);
            double ll = 0.0;
            for (std::size_t i = 0; i < eta.size(); ++i) ll += log_likelihood(eta[i], y_held[i]);
            total[k] += ll;
        }
    }

    const double n = static_cast<double>(labels.size());
    result.mean_oof_loglik.resize(total.size());
    for (std::size_t k = 0; k < total.size(); ++k) result.mean_oof_loglik[k] = total[k] / n;
    // Grid is descending, so keeping the first maximum prefers the larger lambda.
    std::size_t best = 0;
    for (std::size_t k = 1; k < total.size(); ++k) {
        if (result.mean_oof_loglik[k] > result.mean_oof_loglik[best]) best = k;
    }
    result.selected_index = best;
    result.selected_lambda = result.lambda_grid[best];
    return result;
}

FittedModel refit_selected(const BinaryMatrix& design, std::span<const std::uint8_t> labels, const CvResult& cv,
                           const SolverOptions& options) {
    LassoLogistic solver(design, labels, options);
    FittedModel model;
    for (std::size_t k = 0; k <= cv.selected_index; ++k) model = solver.fit(cv.lambda_grid[k]);
    return model;
}

std::vector<double> linear_predictor(const FittedModel& model, const BinaryMatrix& rows) {
    std::vector<double> eta(rows.rows(), model.intercept);
    for (const auto& c : model.coefficients) {
        if (c.feature >= rows.cols()) {
            throw InputError("unknown feature id " + std::to_string(c.feature) + " (design has " +
                             std::to_string(rows.cols()) + " features)");
        }
        for (RowIndex r : rows.column(c.feature)) eta[r] += c.value;
    }
    return eta;
}

std::vector<double> predict_risk(const FittedModel& model, const BinaryMatrix& rows) {
    auto risk = linear_predictor(model, rows);
    for (double& v : risk) v = 1.0 / (1.0 + std::exp(-v));
    return risk;
}

void write_model(const FittedModel& model, std::ostream& out) {
    out << "intercept " << detail::format_double(model.intercept) << '\n';
    for (const auto& c : model.coefficients) out << c.feature << ' ' << detail::format_double(c.value) << '\n';
    out << "lambda " << detail::format_double(model.lambda) << '\n';
    out << "iterations " << model.n_iterations << '\n';
    out << "converged " << (model.converged ? 1 : 0) << '\n';
    out << "n_features " << model.n_features << '\n';
}

FittedModel read_model(std::istream& in) {
    FittedModel m;
    std::string line;
    bool have_intercept = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key;
        std::string value;
        ls >> key >> value;
        const auto bad = [&] { return InputError("model line " + std::to_string(line_no) + ": '" + line + "'"); };
        bool ok = true;
        if (key == "intercept") {
            ok = detail::parse_number(value, m.intercept);
            have_intercept = true;
        } else if (key == "lambda") {
            ok = detail::parse_number(value, m.lambda);
        } else if (key == "iterations") {
            ok = detail::parse_number(value, m.n_iterations);
        } else if (key == "converged") {
            m.converged = value == "1";
            ok = value == "0" || value == "1";
        } else if (key == "n_features") {
            ok = detail::parse_number(value, m.n_features);
        } else {
            Coefficient c;
            ok = detail::parse_number(key, c.feature) && detail::parse_number(value, c.value);
            if (ok && !m.coefficients.empty() && c.feature <= m.coefficients.back().feature) ok = false;
            if (ok && c.value != 0.0) m.coefficients.push_back(c);
        }
        if (!ok) throw bad();
    }
    if (!have_intercept) throw InputError("model file lacks an intercept line");
    m.n_nonzero = m.coefficients.size();
    return m;
}

}  // namespace adequate
