#include "mkv/model.hpp"

#include <cmath>
#include <stdexcept>

namespace mkv {

namespace {

void require_finite(std::initializer_list<double> values, const char* who) {
    for (double v : values) {
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(who) + ": parameters must be finite");
    }
}

class LinearModel final : public CoefficientModel {
public:
    LinearModel(double rho, double a, double sigma) : rho_(rho), a_(a), sigma_(sigma) {}

    std::string name() const override { return "linear"; }

    void drift(std::span<const double>, double, const JointLaw& law, std::span<double> out) const override {
        out[0] = -rho_ * y_mean(law);
    }
    void diffusion(std::span<const double>, const DiscreteMeasure&, std::span<double> out) const override {
        out[0] = sigma_;
    }
    double driver(std::span<const double>, double y, std::span<const double>, const JointLaw&) const override {
        return a_ * y;
    }
    double terminal(std::span<const double> x, const DiscreteMeasure&) const override { return x[0]; }

    bool state_free_dynamics() const override { return true; }

private:
    double rho_;
    double a_;
    double sigma_;
};

class CosSinModel final : public CoefficientModel {
public:
    CosSinModel(double rho, double sigma) : rho_(rho), sigma_(sigma) {}

    std::string name() const override { return "cos_sin"; }

    void drift(std::span<const double>, double y, const JointLaw&, std::span<double> out) const override {
        out[0] = rho_ * std::cos(y);
    }
    void diffusion(std::span<const double>, const DiscreteMeasure&, std::span<double> out) const override {
        out[0] = sigma_;
    }
    double driver(std::span<const double>, double, std::span<const double>, const JointLaw&) const override {
        return 0.0;
    }
    double terminal(std::span<const double> x, const DiscreteMeasure&) const override { return std::sin(x[0]); }

    bool state_free_dynamics() const override { return rho_ == 0.0; }

private:
    double rho_;
    double sigma_;
};

class MfgAtanModel final : public CoefficientModel {
public:
    MfgAtanModel(double rho, double sigma) : rho_(rho), sigma_(sigma) {}

    std::string name() const override { return "mfg_atan"; }

    void drift(std::span<const double>, double y, const JointLaw&, std::span<double> out) const override {
        out[0] = -rho_ * y;
    }
    void diffusion(std::span<const double>, const DiscreteMeasure&, std::span<double> out) const override {
        out[0] = sigma_;
    }
    // dY = atan(E[X]) dt + Z dW, hence f = -atan(E[X]).
    double driver(std::span<const double>, double, std::span<const double>, const JointLaw& law) const override {
        return -std::atan(x_mean(law)[0]);
    }
    double terminal(std::span<const double> x, const DiscreteMeasure&) const override { return std::atan(x[0]); }

    bool state_free_dynamics() const override { return rho_ == 0.0; }

private:
    double rho_;
    double sigma_;
};

}  // namespace

std::unique_ptr<CoefficientModel> linear_model(double rho, double a, double sigma) {
    require_finite({rho, a, sigma}, "linear_model");
    return std::make_unique<LinearModel>(rho, a, sigma);
}

std::unique_ptr<CoefficientModel> cos_sin_model(double rho, double sigma) {
    require_finite({rho, sigma}, "cos_sin_model");
    return std::make_unique<CosSinModel>(rho, sigma);
}

std::unique_ptr<CoefficientModel> mfg_atan_model(double rho, double sigma) {
    require_finite({rho, sigma}, "mfg_atan_model");
    return std::make_unique<MfgAtanModel>(rho, sigma);
}

std::unique_ptr<CoefficientModel> make_model(std::string_view kind, const ModelParams& params) {
    if (!(params.sigma >= 0.0)) throw std::invalid_argument("model: sigma must be non-negative");
    if (!(params.horizon > 0.0)) throw std::invalid_argument("model: horizon T must be positive");
    if (kind == "linear") return linear_model(params.rho, params.a, params.sigma);
    if (kind == "cos_sin") return cos_sin_model(params.rho, params.sigma);
    if (kind == "mfg_atan") return mfg_atan_model(params.rho, params.sigma);
    throw std::invalid_argument("unknown model kind '" + std::string(kind) + "'");
}

}  // namespace mkv
