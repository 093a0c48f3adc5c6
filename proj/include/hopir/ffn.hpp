#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "random.hpp"

namespace hopir {

inline double sigmoid(double z)
{
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

/// Binary cross-entropy of a logit against label y in {0, 1}:
/// -[y log p + (1 - y) log(1 - p)] with p = sigmoid(z).
inline double bce_with_logit(double z, double y) { return softplus(z) - y * z; }

/// Binary cross-entropy on a probability.
inline double bce(double y, double p) { return -(y * std::log(p) + (1.0 - y) * std::log1p(-p)); }

/// Two-layer feed-forward scorer: logit = w2 . relu(W1 x + b1) + b2.
///
/// Parameters live in one flat buffer laid out as [W1 (row-major, hidden x
/// input) | b1 | w2 | b2] so optimizers and the gradient checker can treat
/// them uniformly.
class FfnParams {
  public:
    FfnParams() = default;

    FfnParams(std::size_t input_dim, std::size_t hidden)
        : input_(input_dim), hidden_(hidden), theta_(hidden * input_dim + 2 * hidden + 1, 0.0)
    {
        if (input_dim == 0 || hidden == 0) {
            throw InvalidArgument("feed-forward shapes must be positive");
        }
    }

    static FfnParams zeros(std::size_t input_dim, std::size_t hidden) { return {input_dim, hidden}; }

    /// Uniform in +-1/sqrt(fan_in) for each layer, weights and biases alike.
    static FfnParams random(std::size_t input_dim, std::size_t hidden, std::uint64_t seed)
    {
        FfnParams p(input_dim, hidden);
        Rng rng(seed);
        double r1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
        double r2 = 1.0 / std::sqrt(static_cast<double>(hidden));
        for (std::size_t i = 0; i < p.w2_offset(); ++i) {
            p.theta_[i] = rng.uniform(-r1, r1);
        }
        for (std::size_t i = p.w2_offset(); i < p.theta_.size(); ++i) {
            p.theta_[i] = rng.uniform(-r2, r2);
        }
        return p;
    }

    [[nodiscard]] std::size_t input_dim() const noexcept { return input_; }
    [[nodiscard]] std::size_t hidden() const noexcept { return hidden_; }
    [[nodiscard]] std::size_t size() const noexcept { return theta_.size(); }

    [[nodiscard]] std::span<double> flat() noexcept { return theta_; }
    [[nodiscard]] std::span<const double> flat() const noexcept { return theta_; }

    double& w1(std::size_t j, std::size_t k) { return theta_[j * input_ + k]; }
    [[nodiscard]] double w1(std::size_t j, std::size_t k) const { return theta_[j * input_ + k]; }
    double& b1(std::size_t j) { return theta_[b1_offset() + j]; }
    [[nodiscard]] double b1(std::size_t j) const { return theta_[b1_offset() + j]; }
    double& w2(std::size_t j) { return theta_[w2_offset() + j]; }
    [[nodiscard]] double w2(std::size_t j) const { return theta_[w2_offset() + j]; }
    double& b2() { return theta_.back(); }
    [[nodiscard]] double b2() const { return theta_.back(); }

    [[nodiscard]] bool finite() const
    {
        return std::all_of(theta_.begin(), theta_.end(), [](double v) { return std::isfinite(v); });
    }

    [[nodiscard]] double logit(std::span<const double> x) const
    {
        check_input(x);
        double z = b2();
        for (std::size_t j = 0; j < hidden_; ++j) {
            double a = b1(j);
            const double* row = &theta_[j * input_];
            for (std::size_t k = 0; k < input_; ++k) {
                a += row[k] * x[k];
            }
            if (a > 0.0) {
                z += w2(j) * a;
            }
        }
        return z;
    }

    /// Accumulates d(scale * bce(logit(x), y))/d(theta) into `grad`; returns the
    /// unscaled loss of the sample.
    double accumulate_gradient(std::span<const double> x, double y, double scale, std::span<double> grad) const
    {
        check_input(x);
        std::vector<double> act(hidden_);
        double z = b2();
        for (std::size_t j = 0; j < hidden_; ++j) {
            double a = b1(j);
            const double* row = &theta_[j * input_];
            for (std::size_t k = 0; k < input_; ++k) {
                a += row[k] * x[k];
            }
            act[j] = a;
            if (a > 0.0) {
                z += w2(j) * a;
            }
        }
        double dz = scale * (sigmoid(z) - y);
        grad[theta_.size() - 1] += dz;
        for (std::size_t j = 0; j < hidden_; ++j) {
            if (act[j] <= 0.0) {
                continue;
            }
            grad[w2_offset() + j] += dz * act[j];
            double da = dz * w2(j);
            grad[b1_offset() + j] += da;
            double* grow = &grad[j * input_];
            for (std::size_t k = 0; k < input_; ++k) {
                grow[k] += da * x[k];
            }
        }
        return bce_with_logit(z, y);
    }

    [[nodiscard]] nlohmann::json to_json() const
    {
        std::vector<double> w1v(theta_.begin(), theta_.begin() + static_cast<std::ptrdiff_t>(b1_offset()));
        std::vector<double> b1v(theta_.begin() + static_cast<std::ptrdiff_t>(b1_offset()),
                                theta_.begin() + static_cast<std::ptrdiff_t>(w2_offset()));
        std::vector<double> w2v(theta_.begin() + static_cast<std::ptrdiff_t>(w2_offset()), theta_.end() - 1);
        return {{"input_dim", input_}, {"hidden", hidden_}, {"activation", "relu"},
                {"w1", w1v},           {"b1", b1v},         {"w2", w2v},
                {"b2", b2()}};
    }

    static FfnParams from_json(const nlohmann::json& j)
    {
        FfnParams p(j.at("input_dim").get<std::size_t>(), j.at("hidden").get<std::size_t>());
        if (j.value("activation", "relu") != "relu") {
            throw DataError("unsupported activation");
        }
        auto w1v = j.at("w1").get<std::vector<double>>();
        auto b1v = j.at("b1").get<std::vector<double>>();
        auto w2v = j.at("w2").get<std::vector<double>>();
        if (w1v.size() != p.hidden_ * p.input_ || b1v.size() != p.hidden_ || w2v.size() != p.hidden_) {
            throw DataError("feed-forward weight shapes do not match declared dimensions");
        }
        std::copy(w1v.begin(), w1v.end(), p.theta_.begin());
        std::copy(b1v.begin(), b1v.end(), p.theta_.begin() + static_cast<std::ptrdiff_t>(p.b1_offset()));
        std::copy(w2v.begin(), w2v.end(), p.theta_.begin() + static_cast<std::ptrdiff_t>(p.w2_offset()));
        p.b2() = j.at("b2").get<double>();
        if (!p.finite()) {
            throw DataError("feed-forward weights contain non-finite values");
        }
        return p;
    }

    bool operator==(const FfnParams&) const = default;

  private:
    [[nodiscard]] std::size_t b1_offset() const noexcept { return hidden_ * input_; }
    [[nodiscard]] std::size_t w2_offset() const noexcept { return hidden_ * input_ + hidden_; }

    void check_input(std::span<const double> x) const
    {
        if (x.size() != input_) {
            throw InvalidArgument("input has dimension " + std::to_string(x.size()) + ", expected "
                                  + std::to_string(input_));
        }
    }

    std::size_t input_ = 0;
    std::size_t hidden_ = 0;
    std::vector<double> theta_;
};

struct Sample {
    std::vector<double> x;
    double y = 0.0;
};

/// Mean BCE over `samples`.
inline double mean_loss(const FfnParams& model, std::span<const Sample> samples)
{
    if (samples.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (const auto& s : samples) {
        total += bce_with_logit(model.logit(s.x), s.y);
    }
    return total / static_cast<double>(samples.size());
}

/// Gradient of the mean BCE over `samples`.
inline std::vector<double> loss_gradient(const FfnParams& model, std::span<const Sample> samples)
{
    std::vector<double> grad(model.size(), 0.0);
    if (samples.empty()) {
        return grad;
    }
    double scale = 1.0 / static_cast<double>(samples.size());
    for (const auto& s : samples) {
        model.accumulate_gradient(s.x, s.y, scale, grad);
    }
    return grad;
}

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::size_t worst_parameter = 0;
};

/// Compares analytic gradients with central differences for every parameter.
/// Relative error is |a - n| / max(|a| + |n|, 1e-6); the floor keeps
/// round-off in vanishing gradients from dominating.
inline GradientCheckResult gradient_check(const FfnParams& model, std::span<const Sample> samples, double step = 1e-5)
{
    auto analytic = loss_gradient(model, samples);
    FfnParams probe = model;
    GradientCheckResult out;
    for (std::size_t i = 0; i < model.size(); ++i) {
        double saved = probe.flat()[i];
        probe.flat()[i] = saved + step;
        double up = mean_loss(probe, samples);
        probe.flat()[i] = saved - step;
        double down = mean_loss(probe, samples);
        probe.flat()[i] = saved;
        double numeric = (up - down) / (2.0 * step);
        double denom = std::max(std::abs(analytic[i]) + std::abs(numeric), 1e-6);
        double rel = std::abs(analytic[i] - numeric) / denom;
        if (rel > out.max_relative_error) {
            out.max_relative_error = rel;
            out.worst_parameter = i;
        }
    }
    return out;
}

enum class Optimizer { plain_gradient, adaptive_moment };

/// Adam with bias correction; reduces to plain gradient descent when selected.
class OptimizerState {
  public:
    OptimizerState(Optimizer kind, std::size_t n, double learning_rate)
        : kind_(kind), lr_(learning_rate), m_(n, 0.0), v_(n, 0.0)
    {}

    void step(std::span<double> theta, std::span<const double> grad)
    {
        if (kind_ == Optimizer::plain_gradient) {
            for (std::size_t i = 0; i < theta.size(); ++i) {
                theta[i] -= lr_ * grad[i];
            }
            return;
        }
        constexpr double beta1 = 0.9;
        constexpr double beta2 = 0.999;
        constexpr double eps = 1e-8;
        ++t_;
        double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
        double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m_[i] = beta1 * m_[i] + (1.0 - beta1) * grad[i];
            v_[i] = beta2 * v_[i] + (1.0 - beta2) * grad[i] * grad[i];
            theta[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
        }
    }

  private:
    Optimizer kind_;
    double lr_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::uint64_t t_ = 0;
};

}  // namespace hopir
