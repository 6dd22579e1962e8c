#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "mkv/measure.hpp"

namespace mkv {

/**
 * Coefficients (b, sigma, f, g) of a McKean-Vlasov forward-backward system
 *
 *   dX_t = b(X_t, Y_t, L(X_t, Y_t)) dt + sigma(X_t, L(X_t)) dW_t,
 *   dY_t = -f(X_t, Y_t, Z_t, L(X_t, Y_t)) dt + Z_t dW_t,   Y_T = g(X_T, L(X_T)).
 *
 * Note the driver sign: a backward equation written as dY = c dt + Z dW has
 * f = -c. Implementations must be pure and reentrant; they are evaluated
 * concurrently across nodes.
 */
class CoefficientModel {
public:
    virtual ~CoefficientModel() = default;

    virtual std::string name() const = 0;
    /// Dimension d of X and of the noise.
    virtual std::size_t dim() const { return 1; }

    /// Writes the drift b(x, y, law) into `out` (size d).
    virtual void drift(std::span<const double> x, double y, const JointLaw& law, std::span<double> out) const = 0;
    /// Writes sigma(x, mu) into `out`, a row-major d x d matrix.
    virtual void diffusion(std::span<const double> x, const DiscreteMeasure& mu, std::span<double> out) const = 0;
    virtual double driver(std::span<const double> x, double y, std::span<const double> z, const JointLaw& law) const = 0;
    virtual double terminal(std::span<const double> x, const DiscreteMeasure& mu) const = 0;

    /// True when b and sigma depend on a node only through the laws, never on
    /// the node's own (x, y). Such models produce identical values on every
    /// path with the same branch counts, so a recombining lattice is exact.
    virtual bool state_free_dynamics() const { return false; }
};

/// dX = -rho E[Y] dt + sigma dW,  dY = -a Y dt + Z dW,  Y_T = X_T.
std::unique_ptr<CoefficientModel> linear_model(double rho, double a, double sigma);

/// dX = rho cos(Y) dt + sigma dW,  Y_t = E_t[sin(X_T)].
std::unique_ptr<CoefficientModel> cos_sin_model(double rho, double sigma);

/// dX = -rho Y dt + sigma dW,  dY = atan(E[X]) dt + Z dW,  Y_T = atan(X_T).
/// The mean-field game example uses sigma = 1.
std::unique_ptr<CoefficientModel> mfg_atan_model(double rho, double sigma = 1.0);

struct ModelParams {
    double rho = 0.0;
    double a = 0.0;
    double sigma = 1.0;
    double horizon = 1.0;
};

/// Builtin model by name: "linear", "cos_sin" or "mfg_atan".
std::unique_ptr<CoefficientModel> make_model(std::string_view kind, const ModelParams& params);

}  // namespace mkv
