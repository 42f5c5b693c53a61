#pragma once

#include <string_view>

namespace dru {

enum class Direction : int { down = -1, none = 0, up = 1 };

inline int sign_of(Direction d) { return static_cast<int>(d); }
Direction direction_from_int(int value);
inline Direction flipped(Direction d) { return static_cast<Direction>(-sign_of(d)); }

/// Robustness meta-information for one target: how much selection bias
/// (gamma >= 1) and on which side.
struct MetaInfo {
    double gamma = 1.0;
    Direction direction = Direction::none;
};

enum class LossKind { squared, ru, dru, pinball };

std::string_view to_string(LossKind kind);
LossKind loss_kind_from_string(std::string_view name);

struct LossSpec {
    LossKind kind = LossKind::squared;
    MetaInfo meta;           // ru, dru
    double pinball_p = 0.5;  // pinball

    static LossSpec squared() { return {}; }
    static LossSpec ru(double gamma) { return {LossKind::ru, {gamma, Direction::none}, 0.5}; }
    static LossSpec dru(MetaInfo meta) { return {LossKind::dru, meta, 0.5}; }
    static LossSpec pinball(double p) { return {LossKind::pinball, {}, p}; }

    /// True for the losses that take the auxiliary alpha(x) output.
    bool uses_alpha() const { return kind == LossKind::ru || kind == LossKind::dru; }

    /// Throws dru::Error(parameter) when the kind-specific fields are out of range.
    void validate() const;
};

double squared_loss(double z, double y);

// Rockafellar-Uryasev loss with squared base loss:
//   L/G + (1 - 1/G) a + (G - 1/G) (L - a)_+
double ru_loss(double z, double a, double y, double gamma);

// Directional variant. The hinge is active only when sign(z - y) equals
// the direction, i.e. `direction` is a residual sign: +1 penalizes
// over-prediction, -1 under-prediction. z == y never activates it.
//   L/G + (G - 1) a + ((G^2 - 1)/G) (L - a)_+ [sign(z - y) = d]
double dru_loss(double z, double a, double y, const MetaInfo& meta);

// Squared pinball: p (z-y)^2 above, (1-p) (z-y)^2 below.
double pinball_loss(double z, double y, double p);

struct LossGradient {
    double dz = 0.0;
    double da = 0.0;
};

double loss_value(const LossSpec& spec, double z, double a, double y);

/// Subgradient w.r.t. prediction and alpha. On a hinge or indicator
/// boundary the lower branch is taken.
LossGradient loss_gradients(const LossSpec& spec, double z, double a, double y);

/// Population-level meta (direction = sign(population mean - sample mean))
/// converted to the residual-sign convention used by dru_loss. Under-sampled
/// successes (d = +1) call for penalizing under-prediction, so the sign flips.
MetaInfo loss_meta(const MetaInfo& population_meta);

}  // namespace dru
