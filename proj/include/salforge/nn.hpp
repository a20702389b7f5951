#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "salforge/graph.hpp"
#include "salforge/rng.hpp"
#include "salforge/tensor.hpp"

namespace salforge::nn {

inline constexpr std::string_view kArchLightSal = "lightsal";
inline constexpr std::string_view kArchSalBaseline = "sal-baseline";
inline constexpr std::string_view kInitScaledUniform = "scaled-uniform";
inline constexpr std::string_view kInitGeometricSphere = "geometric-sphere";

inline constexpr int kLatentDim = 256;

// Reference size of the original full-scale SAL encoder; not constructed
// here. Used only for the whole-model size-ratio report.
inline constexpr std::int64_t kBaselineEncoderReferenceParams = 2365952;

// Named, ordered parameter tensors. Registration order is the serialization
// and optimizer-state order, so it must stay stable across runs.
template <typename S>
class ModelParams {
public:
    ModelParams() = default;
    ModelParams(ModelParams&&) noexcept = default;
    ModelParams& operator=(ModelParams&&) noexcept = default;

    ad::Tensor<S>& add(const std::string& name, ad::Shape shape);
    ad::Tensor<S>& at(std::string_view name);
    const ad::Tensor<S>& at(std::string_view name) const;
    bool has(std::string_view name) const { return index_.count(std::string(name)) > 0; }

    std::size_t size() const { return tensors_.size(); }
    const std::string& name(std::size_t i) const { return names_[i]; }
    ad::Tensor<S>& tensor(std::size_t i) { return *tensors_[i]; }
    const ad::Tensor<S>& tensor(std::size_t i) const { return *tensors_[i]; }

    std::int64_t param_count() const;
    std::int64_t param_count_prefix(std::string_view prefix) const;
    void zero_grad();

    std::string arch;
    std::string init;
    std::uint64_t seed = 0;

private:
    std::vector<std::string> names_;
    std::vector<std::unique_ptr<ad::Tensor<S>>> tensors_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Allocates and initializes parameters for an architecture tag. scaled-uniform
// draws W ~ U(+-sqrt(6/(fan_in+fan_out))), b = 0. geometric-sphere additionally
// shapes the decoder so its zero level set starts near the unit sphere
// (f(x) ~ |x| - 1 at z = 0); the encoder, when present, stays scaled-uniform.
// Initialization is keyed per tensor name, so it is order-independent.
template <typename S>
ModelParams<S> init_params(std::string_view arch, std::string_view init, std::uint64_t seed);

// (mu, eta), each [256]. points is [3, N].
template <typename S>
std::pair<ad::Value<S>, ad::Value<S>> encoder_forward(ad::Graph<S>& g, ModelParams<S>& params,
                                                      const ad::Value<S>& points);

// z = mu + exp(eta/2) * eps with eps ~ N(0, I) drawn from rng (reparameterized,
// gradients flow to mu and eta); pass rng = nullptr for mean mode (z = mu).
template <typename S>
ad::Value<S> sample_latent(ad::Graph<S>& g, const ad::Value<S>& mu, const ad::Value<S>& eta,
                           Rng* rng);

// One scalar per query column: [M]. z is [256], points is [3, M]. Dispatches
// on params.arch.
template <typename S>
ad::Value<S> decoder_forward(ad::Graph<S>& g, ModelParams<S>& params, const ad::Value<S>& z,
                             const ad::Value<S>& points);

}  // namespace salforge::nn
