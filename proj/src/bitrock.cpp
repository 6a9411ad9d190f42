#include "drillabc/bitrock.hpp"

#include "drillabc/errors.hpp"

#include <algorithm>
#include <cmath>

namespace drillabc {

ModelKind model_from_index(int index) {
    if (index < 1 || index > 4) {
        throw DomainError("model index must be in 1..4, got " + std::to_string(index));
    }
    return static_cast<ModelKind>(index);
}

std::size_t parameter_count(ModelKind k) {
    switch (k) {
        case ModelKind::TanhRational: return 4;
        case ModelKind::ExponentialDecay: return 3;
        case ModelKind::BumpTanh: return 6;
        case ModelKind::Cubic: return 4;
    }
    throw DomainError("unknown model kind");
}

std::string model_name(ModelKind k) { return "m" + std::to_string(model_index(k)); }

ModelKind parse_model_name(std::string_view name) {
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s.size() == 2 && s[0] == 'm' && s[1] >= '1' && s[1] <= '4') {
        return model_from_index(s[1] - '0');
    }
    if (s.size() == 1 && s[0] >= '1' && s[0] <= '4') {
        return model_from_index(s[0] - '0');
    }
    throw DomainError("unknown model '" + std::string(name) + "' (valid: m1, m2, m3, m4)");
}

std::vector<std::string> parameter_names(ModelKind k) {
    switch (k) {
        case ModelKind::TanhRational: return {"b0", "b1", "b2", "b3"};
        case ModelKind::ExponentialDecay: return {"T_cb", "T_sb", "G_b"};
        case ModelKind::BumpTanh: return {"a0", "a1", "a2", "a3", "a4", "a5"};
        case ModelKind::Cubic: return {"c0", "c1", "c2", "c3"};
    }
    return {};
}

namespace {

void check_shape(ModelKind kind, std::span<const double> params) {
    const auto n = parameter_count(kind);
    if (params.size() != n) {
        throw DomainError(model_name(kind) + " expects " + std::to_string(n) + " parameters, got " +
                          std::to_string(params.size()));
    }
    for (double v : params) {
        if (!std::isfinite(v)) throw DomainError(model_name(kind) + ": non-finite parameter");
    }
}

bool sign_constraints_hold(ModelKind kind, std::span<const double> p) {
    switch (kind) {
        case ModelKind::TanhRational: return p[1] > 0.0 && p[3] > 0.0;
        case ModelKind::ExponentialDecay: return p[1] >= p[0] && p[0] >= 0.0 && p[2] > 0.0;
        case ModelKind::BumpTanh: return p[1] > 0.0 && p[5] > 0.0;
        case ModelKind::Cubic: return true;
    }
    return false;
}

void check_speed(double speed) {
    if (!std::isfinite(speed) || speed < 0.0) {
        throw DomainError("bit speed must be finite and >= 0, got " + std::to_string(speed));
    }
}

}  // namespace

BitRockModel::BitRockModel(ModelKind kind, std::span<const double> params) {
    check_shape(kind, params);
    if (!sign_constraints_hold(kind, params)) {
        throw DomainError(model_name(kind) + ": parameters violate the model's sign constraints");
    }
    kind_ = kind;
    size_ = params.size();
    std::copy(params.begin(), params.end(), params_.begin());
}

BitRockModel BitRockModel::unvalidated(ModelKind kind, std::span<const double> params) {
    check_shape(kind, params);
    BitRockModel m;
    m.kind_ = kind;
    m.size_ = params.size();
    std::copy(params.begin(), params.end(), m.params_.begin());
    return m;
}

bool BitRockModel::satisfies_invariants(ModelKind kind, std::span<const double> params) {
    if (params.size() != parameter_count(kind)) return false;
    for (double v : params) {
        if (!std::isfinite(v)) return false;
    }
    return sign_constraints_hold(kind, params);
}

bool BitRockModel::operator==(const BitRockModel& other) const {
    return kind_ == other.kind_ && size_ == other.size_ &&
           std::equal(params_.begin(), params_.begin() + size_, other.params_.begin());
}

BitRockModel published_estimate(ModelKind kind) {
    switch (kind) {
        case ModelKind::TanhRational: {
            const double p[] = {5.67, 0.48, 8.79, 4.56};
            return BitRockModel(kind, p);
        }
        case ModelKind::ExponentialDecay: {
            const double p[] = {6.5, 13.0, 0.3};
            return BitRockModel(kind, p);
        }
        case ModelKind::BumpTanh: {
            const double p[] = {2.72, 1.0, 0.09, 9.52, 4.0, 0.08};
            return BitRockModel(kind, p);
        }
        case ModelKind::Cubic: {
            const double p[] = {11.8, -0.93, 0.057, -1.2e-3};
            return BitRockModel(kind, p);
        }
    }
    throw DomainError("unknown model kind");
}

WobRatio::WobRatio(double wob, double wob_ref) : wob_(wob), wob_ref_(wob_ref), r_(0.0) {
    if (!(wob > 0.0) || !(wob_ref > 0.0) || !std::isfinite(wob) || !std::isfinite(wob_ref)) {
        throw DomainError("weight on bit and reference weight must be positive and finite");
    }
    r_ = wob_ / wob_ref_;
}

WobRatio WobRatio::from_ratio(double r, double wob_ref) { return WobRatio(r * wob_ref, wob_ref); }

namespace detail {

double unit_torque(ModelKind kind, const double* p, double s) noexcept {
    switch (kind) {
        case ModelKind::TanhRational:
            return p[0] * (std::tanh(p[1] * s) + p[2] * s / (1.0 + p[3] * s * s));
        case ModelKind::ExponentialDecay:
            return (p[1] - p[0]) * std::exp(-p[2] * s) + p[0];
        case ModelKind::BumpTanh: {
            const double d = s - p[2];
            return p[0] * std::exp(-p[1] * d * d) + p[3] - p[4] * std::tanh(p[5] * s);
        }
        case ModelKind::Cubic:
            return p[0] + s * (p[1] + s * (p[2] + s * p[3]));
    }
    return 0.0;
}

double unit_torque_derivative(ModelKind kind, const double* p, double s) noexcept {
    switch (kind) {
        case ModelKind::TanhRational: {
            const double th = std::tanh(p[1] * s);
            const double q = 1.0 + p[3] * s * s;
            return -p[0] * (p[1] * (th * th - 1.0) - p[2] / q + 2.0 * p[2] * p[3] * s * s / (q * q));
        }
        case ModelKind::ExponentialDecay:
            return -(p[1] - p[0]) * p[2] * std::exp(-p[2] * s);
        case ModelKind::BumpTanh: {
            const double th = std::tanh(p[5] * s);
            const double d = s - p[2];
            return p[4] * p[5] * (th * th - 1.0) + (2.0 * p[2] - 2.0 * s) * p[0] * p[1] * std::exp(-p[1] * d * d);
        }
        case ModelKind::Cubic:
            return p[1] + s * (2.0 * p[2] + 3.0 * p[3] * s);
    }
    return 0.0;
}

}  // namespace detail

double torque(const BitRockModel& model, const WobRatio& r, double speed) {
    check_speed(speed);
    return r.ratio() * detail::unit_torque(model.kind(), model.params().data(), speed);
}

double torque_derivative(const BitRockModel& model, const WobRatio& r, double speed) {
    check_speed(speed);
    return r.ratio() * detail::unit_torque_derivative(model.kind(), model.params().data(), speed);
}

}  // namespace drillabc
