#include "salforge/nn.hpp"

#include <cmath>

#include "salforge/errors.hpp"

namespace salforge::nn {

using ad::Graph;
using ad::Shape;
using ad::Tensor;
using ad::Value;

template <typename S>
Tensor<S>& ModelParams<S>::add(const std::string& name, Shape shape) {
    if (index_.count(name)) throw ContractError("ModelParams: duplicate tensor '" + name + "'");
    auto t = std::make_unique<Tensor<S>>(std::move(shape));
    t->requires_grad = true;
    Tensor<S>& ref = *t;
    index_.emplace(name, tensors_.size());
    names_.push_back(name);
    tensors_.push_back(std::move(t));
    return ref;
}

template <typename S>
Tensor<S>& ModelParams<S>::at(std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it == index_.end())
        throw ContractError("ModelParams: no tensor named '" + std::string(name) + "'");
    return *tensors_[it->second];
}

template <typename S>
const Tensor<S>& ModelParams<S>::at(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end())
        throw ContractError("ModelParams: no tensor named '" + std::string(name) + "'");
    return *tensors_[it->second];
}

template <typename S>
std::int64_t ModelParams<S>::param_count() const {
    std::int64_t n = 0;
    for (const auto& t : tensors_) n += t->size();
    return n;
}

template <typename S>
std::int64_t ModelParams<S>::param_count_prefix(std::string_view prefix) const {
    std::int64_t n = 0;
    for (std::size_t i = 0; i < tensors_.size(); ++i)
        if (names_[i].rfind(prefix, 0) == 0) n += tensors_[i]->size();
    return n;
}

template <typename S>
void ModelParams<S>::zero_grad() {
    for (auto& t : tensors_) t->zero_grad();
}

namespace {

struct LayerSpec {
    std::string name;
    int in = 0, out = 0;
};

// Registration order defines checkpoint and Adam-state layout.
void lightsal_encoder_layers(std::vector<LayerSpec>& out) {
    const int eq[6] = {3, 128, 128, 128, 256, 256};
    for (int i = 0; i < 5; ++i) {
        const std::string base = "encoder.e" + std::to_string(i + 1);
        out.push_back({base + ".element", eq[i], eq[i + 1]});
        out.push_back({base + ".pooled", eq[i], eq[i + 1]});
    }
    out.push_back({"encoder.c6", 256, 512});
    out.push_back({"encoder.mu", 512, 256});
    out.push_back({"encoder.eta", 512, 256});
}

void lightsal_decoder_layers(std::vector<LayerSpec>& out) {
    // Widths 128/256/512 repeated; the skip re-injects the 259-dim input after
    // the third layer, which therefore emits 512-259 = 253 channels.
    out.push_back({"decoder.d1", 259, 128});
    out.push_back({"decoder.d2", 128, 256});
    out.push_back({"decoder.d3", 256, 253});
    out.push_back({"decoder.d4", 512, 128});
    out.push_back({"decoder.d5", 128, 256});
    out.push_back({"decoder.d6", 256, 512});
    out.push_back({"decoder.out", 512, 1});
}

void baseline_decoder_layers(std::vector<LayerSpec>& out) {
    // Eight 512-wide layers; the input is concatenated back in before layer 4.
    out.push_back({"decoder.l1", 259, 512});
    out.push_back({"decoder.l2", 512, 512});
    out.push_back({"decoder.l3", 512, 512});
    out.push_back({"decoder.l4", 771, 512});
    out.push_back({"decoder.l5", 512, 512});
    out.push_back({"decoder.l6", 512, 512});
    out.push_back({"decoder.l7", 512, 512});
    out.push_back({"decoder.l8", 512, 1});
}

template <typename S>
void fill_scaled_uniform(Tensor<S>& w, int fan_in, int fan_out, Rng rng) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (S& v : w.data) v = static_cast<S>(rng.uniform(-bound, bound));
}

template <typename S>
void fill_normal(Tensor<S>& w, double mean, double stddev, Rng rng) {
    for (S& v : w.data) v = static_cast<S>(rng.normal(mean, stddev));
}

bool is_decoder_final(const std::string& name) {
    return name == "decoder.out" || name == "decoder.l8";
}

bool is_post_skip(const std::string& name) {
    return name == "decoder.d4" || name == "decoder.l4";
}

}  // namespace

template <typename S>
ModelParams<S> init_params(std::string_view arch, std::string_view init, std::uint64_t seed) {
    if (init != kInitScaledUniform && init != kInitGeometricSphere)
        throw ConfigError("unknown init scheme '" + std::string(init) + "'");
    std::vector<LayerSpec> layers;
    if (arch == kArchLightSal) {
        lightsal_encoder_layers(layers);
        lightsal_decoder_layers(layers);
    } else if (arch == kArchSalBaseline) {
        baseline_decoder_layers(layers);
    } else {
        throw ConfigError("unknown arch '" + std::string(arch) + "'");
    }

    ModelParams<S> params;
    params.arch = std::string(arch);
    params.init = std::string(init);
    params.seed = seed;
    const bool geometric = init == kInitGeometricSphere;

    for (const LayerSpec& l : layers) {
        Tensor<S>& w = params.add(l.name + ".w", {l.out, l.in});
        Tensor<S>& b = params.add(l.name + ".b", {l.out});
        Rng rng = Rng::substream(seed, "init", fnv1a64(l.name));
        const bool decoder_layer = l.name.rfind("decoder.", 0) == 0;
        if (!geometric || !decoder_layer) {
            fill_scaled_uniform(w, l.in, l.out, std::move(rng));
            continue;  // b stays zero
        }
        // Geometric sphere: hidden layers preserve the input norm in
        // expectation; the final layer averages the ReLU features so that
        // f(x) ~ |(z, x)| - 1 at init. The layer after the skip halves the
        // variance because concatenation doubles the expected squared norm.
        if (is_decoder_final(l.name)) {
            fill_normal(w, std::sqrt(3.14159265358979323846 / l.in), 1e-5, std::move(rng));
            for (S& v : b.data) v = S(-1);
        } else if (is_post_skip(l.name)) {
            fill_normal(w, 0.0, 1.0 / std::sqrt(static_cast<double>(l.out)), std::move(rng));
        } else {
            fill_normal(w, 0.0, std::sqrt(2.0 / l.out), std::move(rng));
        }
    }
    return params;
}

namespace {

// Shared-affine layer application: binds the named weight pair as graph
// leaves and applies out = W x + b.
template <typename S>
Value<S> affine(Graph<S>& g, ModelParams<S>& p, const std::string& base, const Value<S>& x) {
    return g.affine_pointwise(x, g.leaf(p.at(base + ".w")), g.leaf(p.at(base + ".b")));
}

template <typename S>
Value<S> equivariant(Graph<S>& g, ModelParams<S>& p, const std::string& base, const Value<S>& x) {
    // sequenced so node creation order (and with it backward's accumulation
    // order) is fixed by this source, not by argument evaluation order
    const Value<S> el = affine(g, p, base + ".element", x);
    const Value<S> po = affine(g, p, base + ".pooled", g.maxpool_pairs(x));
    return g.add(el, po);
}

}  // namespace

template <typename S>
std::pair<Value<S>, Value<S>> encoder_forward(Graph<S>& g, ModelParams<S>& params,
                                              const Value<S>& points) {
    if (params.arch != kArchLightSal)
        throw ContractError("encoder_forward: arch '" + params.arch + "' has no encoder");
    if (points.shape().size() != 2 || points.shape()[0] != 3)
        throw ShapeError("encoder_forward: points must be [3,N], got " +
                         ad::shape_str(points.shape()));
    Value<S> h = points;
    for (int i = 1; i <= 5; ++i)
        h = g.relu(equivariant(g, params, "encoder.e" + std::to_string(i), h));
    h = g.relu(affine(g, params, "encoder.c6", h));
    const Value<S> pooled = g.global_maxpool(h);                    // [512]
    const Value<S> col = g.reshape(pooled, {512, 1});
    const Value<S> mu = g.reshape(affine(g, params, "encoder.mu", col), {kLatentDim});
    const Value<S> eta = g.reshape(affine(g, params, "encoder.eta", col), {kLatentDim});
    return {mu, eta};
}

template <typename S>
Value<S> sample_latent(Graph<S>& g, const Value<S>& mu, const Value<S>& eta, Rng* rng) {
    if (mu.shape() != Shape{kLatentDim} || eta.shape() != Shape{kLatentDim})
        throw ShapeError("sample_latent: mu/eta must be [256], got " + ad::shape_str(mu.shape()) +
                         " and " + ad::shape_str(eta.shape()));
    if (!rng) return mu;
    std::vector<S> eps(kLatentDim);
    for (S& e : eps) e = static_cast<S>(rng->normal());
    return g.add(mu, g.mul(g.exp(g.scale(eta, S(0.5))), g.constant({kLatentDim}, std::move(eps))));
}

namespace {

template <typename S>
Value<S> lightsal_decoder(Graph<S>& g, ModelParams<S>& p, const Value<S>& input) {
    Value<S> h = g.relu(affine(g, p, "decoder.d1", input));
    h = g.relu(affine(g, p, "decoder.d2", h));
    h = g.relu(affine(g, p, "decoder.d3", h));
    h = g.concat_rows(input, h);  // 259 + 253 = 512
    h = g.relu(affine(g, p, "decoder.d4", h));
    h = g.relu(affine(g, p, "decoder.d5", h));
    h = g.relu(affine(g, p, "decoder.d6", h));
    return affine(g, p, "decoder.out", h);  // no final activation
}

template <typename S>
Value<S> baseline_decoder(Graph<S>& g, ModelParams<S>& p, const Value<S>& input) {
    Value<S> h = input;
    for (int i = 1; i <= 7; ++i) {
        if (i == 4) h = g.concat_rows(input, h);  // 259 + 512 = 771
        h = g.relu(affine(g, p, "decoder.l" + std::to_string(i), h));
    }
    return affine(g, p, "decoder.l8", h);
}

}  // namespace

template <typename S>
Value<S> decoder_forward(Graph<S>& g, ModelParams<S>& params, const Value<S>& z,
                         const Value<S>& points) {
    if (points.shape().size() != 2 || points.shape()[0] != 3)
        throw ShapeError("decoder_forward: points must be [3,M], got " +
                         ad::shape_str(points.shape()));
    if (z.shape() != Shape{kLatentDim})
        throw ShapeError("decoder_forward: z must be [256], got " + ad::shape_str(z.shape()));
    const int m = points.shape()[1];
    const Value<S> input = g.concat_rows(g.broadcast_col(z, m), points);  // [259, M]
    Value<S> out;
    if (params.arch == kArchLightSal) out = lightsal_decoder(g, params, input);
    else if (params.arch == kArchSalBaseline) out = baseline_decoder(g, params, input);
    else throw ContractError("decoder_forward: unknown arch '" + params.arch + "'");
    return g.reshape(out, {m});
}

template class ModelParams<float>;
template class ModelParams<double>;
template ModelParams<float> init_params<float>(std::string_view, std::string_view, std::uint64_t);
template ModelParams<double> init_params<double>(std::string_view, std::string_view,
                                                 std::uint64_t);
template std::pair<Value<float>, Value<float>> encoder_forward<float>(Graph<float>&,
                                                                      ModelParams<float>&,
                                                                      const Value<float>&);
template std::pair<Value<double>, Value<double>> encoder_forward<double>(Graph<double>&,
                                                                         ModelParams<double>&,
                                                                         const Value<double>&);
template Value<float> sample_latent<float>(Graph<float>&, const Value<float>&,
                                           const Value<float>&, Rng*);
template Value<double> sample_latent<double>(Graph<double>&, const Value<double>&,
                                             const Value<double>&, Rng*);
template Value<float> decoder_forward<float>(Graph<float>&, ModelParams<float>&,
                                             const Value<float>&, const Value<float>&);
template Value<double> decoder_forward<double>(Graph<double>&, ModelParams<double>&,
                                               const Value<double>&, const Value<double>&);

}  // namespace salforge::nn
