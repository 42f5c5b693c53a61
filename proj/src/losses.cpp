#include "dru/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dru/error.hpp"

namespace dru {

namespace {

void require_gamma(double gamma) {
    if (!(gamma >= 1.0) || !std::isfinite(gamma))
        throw Error(ErrorCode::parameter, "gamma must be finite and >= 1, got " + std::to_string(gamma));
}

void require_direction(const MetaInfo& meta) {
    require_gamma(meta.gamma);
    if (meta.direction == Direction::none && meta.gamma > 1.0)
        throw Error(ErrorCode::parameter, "dRU loss needs direction +1 or -1 when gamma > 1; use the RU loss");
}

void require_level(double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::parameter, "pinball level must lie in (0,1), got " + std::to_string(p));
}

// Residual sign matches the direction; false at z == y.
bool gate(double z, double y, Direction d) {
    const double r = z - y;
    return (r > 0.0 && d == Direction::up) || (r < 0.0 && d == Direction::down);
}

}  // namespace

Direction direction_from_int(int value) {
    switch (value) {
        case -1: return Direction::down;
        case 0: return Direction::none;
        case 1: return Direction::up;
        default: throw Error(ErrorCode::parameter, "direction must be -1, 0 or +1, got " + std::to_string(value));
    }
}

std::string_view to_string(LossKind kind) {
    switch (kind) {
        case LossKind::squared: return "squared";
        case LossKind::ru: return "ru";
        case LossKind::dru: return "dru";
        case LossKind::pinball: return "pinball";
    }
    return "squared";
}

LossKind loss_kind_from_string(std::string_view name) {
    if (name == "squared") return LossKind::squared;
    if (name == "ru") return LossKind::ru;
    if (name == "dru") return LossKind::dru;
    if (name == "pinball") return LossKind::pinball;
    throw Error(ErrorCode::parameter, "unknown loss '" + std::string(name) + "'");
}

void LossSpec::validate() const {
    switch (kind) {
        case LossKind::squared: break;
        case LossKind::ru: require_gamma(meta.gamma); break;
        case LossKind::dru: require_direction(meta); break;
        case LossKind::pinball: require_level(pinball_p); break;
    }
}

double squared_loss(double z, double y) {
    const double r = z - y;
    return r * r;
}

double ru_loss(double z, double a, double y, double gamma) {
    require_gamma(gamma);
    const double inv = 1.0 / gamma;
    const double l = squared_loss(z, y);
    return inv * l + (1.0 - inv) * a + (gamma - inv) * std::max(l - a, 0.0);
}

double dru_loss(double z, double a, double y, const MetaInfo& meta) {
    require_direction(meta);
    const double g = meta.gamma;
    const double l = squared_loss(z, y);
    double value = l / g + (g - 1.0) * a;
    if (gate(z, y, meta.direction)) value += ((g * g - 1.0) / g) * std::max(l - a, 0.0);
    return value;
}

double pinball_loss(double z, double y, double p) {
    require_level(p);
    const double l = squared_loss(z, y);
    if (z > y) return p * l;
    if (z < y) return (1.0 - p) * l;
    return 0.0;
}

double loss_value(const LossSpec& spec, double z, double a, double y) {
    switch (spec.kind) {
        case LossKind::squared: return squared_loss(z, y);
        case LossKind::ru: return ru_loss(z, a, y, spec.meta.gamma);
        case LossKind::dru: return dru_loss(z, a, y, spec.meta);
        case LossKind::pinball: return pinball_loss(z, y, spec.pinball_p);
    }
    return 0.0;
}

LossGradient loss_gradients(const LossSpec& spec, double z, double a, double y) {
    const double r = z - y;
    const double l = r * r;
    const double dl = 2.0 * r;
    switch (spec.kind) {
        case LossKind::squared: return {dl, 0.0};
        case LossKind::ru: {
            const double g = spec.meta.gamma;
            const double inv = 1.0 / g;
            LossGradient out{inv * dl, 1.0 - inv};
            if (l - a > 0.0) {
                out.dz += (g - inv) * dl;
                out.da -= (g - inv);
            }
            return out;
        }
        case LossKind::dru: {
            const double g = spec.meta.gamma;
            const double c = (g * g - 1.0) / g;
            LossGradient out{dl / g, g - 1.0};
            if (gate(z, y, spec.meta.direction) && l - a > 0.0) {
                out.dz += c * dl;
                out.da -= c;
            }
            return out;
        }
        case LossKind::pinball: {
            const double p = spec.pinball_p;
            if (r > 0.0) return {p * dl, 0.0};
            return {(1.0 - p) * dl, 0.0};
        }
    }
    return {};
}

MetaInfo loss_meta(const MetaInfo& population_meta) {
    return {population_meta.gamma, flipped(population_meta.direction)};
}

}  // namespace dru
