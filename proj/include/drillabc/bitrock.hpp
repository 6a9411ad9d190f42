#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace drillabc {

// Reference weight on bit of the calibration data, kN.
inline constexpr double kReferenceWob = 244.2;

// Four torque-on-bit laws. Parameter order per model:
//   TanhRational     {b0, b1, b2, b3}
//   ExponentialDecay {T_cb, T_sb, G_b}
//   BumpTanh         {a0, a1, a2, a3, a4, a5}
//   Cubic            {c0, c1, c2, c3}
enum class ModelKind : int {
    TanhRational = 1,
    ExponentialDecay = 2,
    BumpTanh = 3,
    Cubic = 4,
};

inline constexpr std::array<ModelKind, 4> kAllModels = {
    ModelKind::TanhRational, ModelKind::ExponentialDecay, ModelKind::BumpTanh, ModelKind::Cubic};

inline constexpr std::size_t kMaxParameters = 6;

constexpr int model_index(ModelKind k) { return static_cast<int>(k); }
ModelKind model_from_index(int index);
std::size_t parameter_count(ModelKind k);
// "m1".."m4"
std::string model_name(ModelKind k);
ModelKind parse_model_name(std::string_view name);
std::vector<std::string> parameter_names(ModelKind k);

class BitRockModel {
public:
    // Validates arity, finiteness and the model's sign constraints.
    BitRockModel(ModelKind kind, std::span<const double> params);

    // Arity and finiteness only. Used for prior draws, whose support is the
    // prior box rather than the physical sign constraints.
    static BitRockModel unvalidated(ModelKind kind, std::span<const double> params);

    // Non-throwing check of the full invariants.
    static bool satisfies_invariants(ModelKind kind, std::span<const double> params);

    ModelKind kind() const noexcept { return kind_; }
    std::span<const double> params() const noexcept { return {params_.data(), size_}; }
    std::size_t size() const noexcept { return size_; }

    bool operator==(const BitRockModel& other) const;

private:
    BitRockModel() = default;

    ModelKind kind_ = ModelKind::Cubic;
    std::array<double, kMaxParameters> params_{};
    std::size_t size_ = 0;
};

// Least-squares estimates published for the field data.
BitRockModel published_estimate(ModelKind kind);

class WobRatio {
public:
    WobRatio(double wob, double wob_ref);
    static WobRatio from_ratio(double r, double wob_ref = kReferenceWob);
    static WobRatio unit() { return WobRatio(kReferenceWob, kReferenceWob); }

    double wob() const noexcept { return wob_; }
    double wob_ref() const noexcept { return wob_ref_; }
    double ratio() const noexcept { return r_; }

private:
    double wob_;
    double wob_ref_;
    double r_;
};

// Torque on bit, kN·m, for bit speed in rad/s (speed >= 0).
double torque(const BitRockModel& model, const WobRatio& r, double speed);
// d(torque)/d(speed), kN·m·s/rad.
double torque_derivative(const BitRockModel& model, const WobRatio& r, double speed);

namespace detail {

// Speed-only part of each law (r = 1), no argument checking.
double unit_torque(ModelKind kind, const double* p, double speed) noexcept;
double unit_torque_derivative(ModelKind kind, const double* p, double speed) noexcept;

}  // namespace detail

}  // namespace drillabc
