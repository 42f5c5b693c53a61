#include "dru/robustness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dru/error.hpp"

namespace dru {

namespace {

constexpr double kProbTolerance = 1e-12;
constexpr double kFeasibilityTolerance = 1e-12;

void require_gamma(double gamma) {
    if (!(gamma >= 1.0) || !std::isfinite(gamma))
        throw Error(ErrorCode::parameter, "gamma must be finite and >= 1, got " + std::to_string(gamma));
}

void require_level(double level) {
    if (!(level > 0.0 && level < 1.0))
        throw Error(ErrorCode::parameter, "level must lie in (0,1), got " + std::to_string(level));
}

void require_signs(const DiscreteDistribution& losses, std::span<const int> signs) {
    if (signs.size() != losses.size())
        throw Error(ErrorCode::input_shape, "signs (" + std::to_string(signs.size()) + ") and losses (" +
                                                std::to_string(losses.size()) + ") differ in length");
}

// Indices by value descending, ties by original index.
std::vector<std::size_t> descending_order(std::span<const WeightedPoint> pts) {
    std::vector<std::size_t> order(pts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pts[a].value > pts[b].value; });
    return order;
}

// Shared greedy fill: candidates get ratio gamma from the top until
// 1/(gamma+1) mass is spent, everything else 1/gamma.
WorstCase greedy_fill(const DiscreteDistribution& losses, double gamma, const std::vector<bool>& eligible) {
    const auto pts = losses.points();
    const double inv = 1.0 / gamma;
    WorstCase wc;
    wc.ratios.assign(pts.size(), inv);
    if (gamma == 1.0) {
        wc.sup_value = losses.mean();
        return wc;
    }
    double budget = 1.0 - eta(gamma);
    for (std::size_t i : descending_order(pts)) {
        if (!eligible[i] || budget <= 0.0) continue;
        const double take = std::min(budget, pts[i].prob);
        // Ratio of a partially upweighted atom: mixture of gamma and 1/gamma.
        wc.ratios[i] = inv + (gamma - inv) * (take / pts[i].prob);
        budget -= take;
    }
    double sup = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) sup += wc.ratios[i] * pts[i].prob * pts[i].value;
    wc.sup_value = sup;
    return wc;
}

}  // namespace

DiscreteDistribution::DiscreteDistribution(std::vector<WeightedPoint> points) : points_(std::move(points)) {
    if (points_.empty()) throw Error(ErrorCode::parameter, "distribution has no support points");
    double total = 0.0;
    for (const auto& p : points_) {
        if (!(p.prob > 0.0) || !std::isfinite(p.value))
            throw Error(ErrorCode::parameter, "support points need positive probability and finite value");
        total += p.prob;
    }
    if (std::abs(total - 1.0) > kProbTolerance)
        throw Error(ErrorCode::parameter, "probabilities sum to " + std::to_string(total) + ", not 1");
}

DiscreteDistribution DiscreteDistribution::uniform(std::span<const double> values) {
    std::vector<WeightedPoint> pts;
    const double p = 1.0 / static_cast<double>(values.size());
    for (double v : values) pts.push_back({v, p});
    return DiscreteDistribution(std::move(pts));
}

DiscreteDistribution DiscreteDistribution::from(std::span<const double> values, std::span<const double> probs) {
    if (values.size() != probs.size()) throw Error(ErrorCode::input_shape, "values and probabilities differ in length");
    std::vector<WeightedPoint> pts;
    for (std::size_t i = 0; i < values.size(); ++i) pts.push_back({values[i], probs[i]});
    return DiscreteDistribution(std::move(pts));
}

double DiscreteDistribution::mean() const {
    double m = 0.0;
    for (const auto& p : points_) m += p.prob * p.value;
    return m;
}

double eta(double gamma) {
    require_gamma(gamma);
    return gamma / (gamma + 1.0);
}

double quantile(const DiscreteDistribution& dist, double level) {
    if (!(level >= 0.0 && level <= 1.0)) throw Error(ErrorCode::parameter, "quantile level must lie in [0,1]");
    auto order = descending_order(dist.points());
    std::reverse(order.begin(), order.end());
    double cum = 0.0;
    for (std::size_t i : order) {
        cum += dist.points()[i].prob;
        if (cum >= level - kProbTolerance) return dist.points()[i].value;
    }
    return dist.points()[order.back()].value;
}

double directional_quantile(const DiscreteDistribution& losses, std::span<const int> signs, Direction direction,
                            double level) {
    require_signs(losses, signs);
    std::vector<WeightedPoint> kept;
    double mass = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        if (signs[i] != sign_of(direction)) continue;
        kept.push_back(losses.points()[i]);
        mass += losses.points()[i].prob;
    }
    if (kept.empty()) throw Error(ErrorCode::infeasible, "no losses with the requested residual sign");
    for (auto& p : kept) p.prob /= mass;
    // Renormalization can leave a sum a few ulps off one.
    double total = 0.0;
    for (const auto& p : kept) total += p.prob;
    kept.back().prob += 1.0 - total;
    return quantile(DiscreteDistribution(std::move(kept)), level);
}

double cvar(const DiscreteDistribution& dist, double level) {
    require_level(level);
    const auto pts = dist.points();
    const double tail = 1.0 - level;
    double remaining = tail;
    // running weighted mean, so a constant tail comes back exactly
    double mean = 0.0, taken = 0.0;
    for (std::size_t i : descending_order(pts)) {
        if (remaining <= 0.0) break;
        const double take = std::min(remaining, pts[i].prob);
        taken += take;
        mean += take / taken * (pts[i].value - mean);
        remaining -= take;
    }
    return mean;
}

WorstCase worst_case_ru(const DiscreteDistribution& losses, double gamma) {
    require_gamma(gamma);
    return greedy_fill(losses, gamma, std::vector<bool>(losses.size(), true));
}

WorstCase worst_case_dru(const DiscreteDistribution& losses, std::span<const int> signs, const MetaInfo& meta) {
    require_gamma(meta.gamma);
    require_signs(losses, signs);
    if (meta.direction == Direction::none && meta.gamma > 1.0)
        throw Error(ErrorCode::parameter, "directional worst case needs direction +1 or -1");
    const auto pts = losses.points();
    std::vector<bool> eligible(pts.size());
    double directional_mass = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        eligible[i] = signs[i] == sign_of(meta.direction);
        if (eligible[i]) directional_mass += pts[i].prob;
    }
    const double needed = meta.gamma == 1.0 ? 0.0 : 1.0 - eta(meta.gamma);
    if (directional_mass + kFeasibilityTolerance < needed)
        throw Error(ErrorCode::infeasible, "directional mass " + std::to_string(directional_mass) +
                                               " is below the required " + std::to_string(needed) + " (deficit " +
                                               std::to_string(needed - directional_mass) + ")");
    WorstCase wc = greedy_fill(losses, meta.gamma, eligible);
    double shift = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) shift += (wc.ratios[i] - 1.0) * pts[i].prob * signs[i];
    const int shift_sign = shift > 0.0 ? 1 : (shift < 0.0 ? -1 : 0);
    wc.direction_consistent = meta.gamma == 1.0 || shift_sign == sign_of(meta.direction);
    return wc;
}

double sup_oracle_lp(const DiscreteDistribution& losses, double gamma, std::optional<DirectionalMask> mask) {
    require_gamma(gamma);
    const auto pts = losses.points();
    const std::size_t n = pts.size();
    if (n > 24) throw Error(ErrorCode::parameter, "LP oracle enumerates 2^n vertices; at most 24 points");
    if (mask) require_signs(losses, mask->signs);

    std::vector<double> lo(n), hi(n);
    for (std::size_t i = 0; i < n; ++i) {
        lo[i] = pts[i].prob / gamma;
        const bool free = !mask || mask->signs[i] == sign_of(mask->direction);
        hi[i] = free ? pts[i].prob * gamma : lo[i];
    }

    // A vertex of {lo <= w <= hi, sum w = 1} has every coordinate but one at
    // a bound. For each free coordinate k walk all bound patterns of the
    // others in Gray-code order, updating weight and objective sums in O(1).
    double best = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> others;
    others.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        others.clear();
        for (std::size_t i = 0; i < n; ++i)
            if (i != k) others.push_back(i);
        double mass = 0.0, value = 0.0;
        for (std::size_t i : others) {
            mass += lo[i];
            value += lo[i] * pts[i].value;
        }
        std::vector<bool> at_hi(others.size(), false);
        const std::uint64_t patterns = std::uint64_t{1} << others.size();
        for (std::uint64_t step = 0; step < patterns; ++step) {
            if (step > 0) {
                const auto bit = static_cast<std::size_t>(std::countr_zero(step));
                const std::size_t i = others[bit];
                const double delta = at_hi[bit] ? lo[i] - hi[i] : hi[i] - lo[i];
                at_hi[bit] = !at_hi[bit];
                mass += delta;
                value += delta * pts[i].value;
            }
            const double wk = 1.0 - mass;
            if (wk < lo[k] - kFeasibilityTolerance || wk > hi[k] + kFeasibilityTolerance) continue;
            best = std::max(best, value + wk * pts[k].value);
        }
    }
    if (!std::isfinite(best)) throw Error(ErrorCode::infeasible, "no distribution satisfies the ratio constraints");
    return best;
}

}  // namespace dru
