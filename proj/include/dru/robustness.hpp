#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dru/losses.hpp"

namespace dru {

struct WeightedPoint {
    double value = 0.0;
    double prob = 0.0;
};

/// Finite distribution; probabilities positive and summing to one.
class DiscreteDistribution {
public:
    explicit DiscreteDistribution(std::vector<WeightedPoint> points);

    static DiscreteDistribution uniform(std::span<const double> values);
    static DiscreteDistribution from(std::span<const double> values, std::span<const double> probs);

    std::span<const WeightedPoint> points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    double mean() const;

private:
    std::vector<WeightedPoint> points_;
};

/// Density ratios dQ/dP per support point of the worst-case Q, and the
/// expected loss under it.
struct WorstCase {
    std::vector<double> ratios;
    double sup_value = 0.0;
    /// dRU only: whether the reweighting shifts residual-sign mass toward
    /// the requested direction, sign(sum (w_i - p_i) s_i) == d.
    std::optional<bool> direction_consistent;
};

/// Fraction gamma / (gamma + 1). The complementary mass 1 - eta is the
/// probability mass that receives ratio gamma in a normalized worst case.
double eta(double gamma);

/// Lower level-quantile inf{v : F(v) >= level}.
double quantile(const DiscreteDistribution& dist, double level);

/// Quantile of the losses whose residual sign equals `direction`.
double directional_quantile(const DiscreteDistribution& losses, std::span<const int> signs,
                            Direction direction, double level);

/// Mean of the upper (1 - level) tail. An atom straddling the quantile is
/// split so the tail carries exactly 1 - level mass.
double cvar(const DiscreteDistribution& dist, double level);

/// Greedy worst case over {Q : 1/gamma <= dQ/dP <= gamma}: ratio gamma on the
/// highest losses until 1/(gamma+1) mass is used, one fractional point,
/// 1/gamma on the rest.
WorstCase worst_case_ru(const DiscreteDistribution& losses, double gamma);

/// Same construction restricted to points whose residual sign equals the
/// direction; every other point is held at 1/gamma. Throws
/// Error(infeasible) when the directional mass is below 1/(gamma+1).
WorstCase worst_case_dru(const DiscreteDistribution& losses, std::span<const int> signs,
                         const MetaInfo& meta);

/// Optional dRU restriction for the LP oracle.
struct DirectionalMask {
    std::span<const int> signs;
    Direction direction = Direction::up;
};

/// Exact LP maximum of sum w_i loss_i over w_i in [p_i/gamma, gamma p_i],
/// sum w_i = 1, by enumerating every vertex of the box-hyperplane
/// intersection. With a mask, points off the direction are pinned at
/// p_i/gamma. Intended for <= 20 points.
double sup_oracle_lp(const DiscreteDistribution& losses, double gamma,
                     std::optional<DirectionalMask> mask = std::nullopt);

}  // namespace dru
