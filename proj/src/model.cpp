// SPDX-License-Identifier: Apache-2.0
#include "hmtl/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "hmtl/affect.hpp"
#include "hmtl/error.hpp"
#include "hmtl/numeric.hpp"

namespace hmtl {

using nlohmann::json;

ModelSpec affect_model_spec(std::size_t input_dim, std::vector<std::size_t> trunk_widths, std::uint64_t seed) {
    return {input_dim,
            std::move(trunk_widths),
            {{"va", 2, HeadActivation::Tanh},
             {"expr", kNumEmotions, HeadActivation::Softmax},
             {"au", kNumAus, HeadActivation::Sigmoid}},
            seed};
}

ModelSpec recognition_model_spec(std::size_t input_dim, std::vector<std::size_t> trunk_widths, std::size_t num_ids,
                                 std::size_t num_attrs, std::uint64_t seed) {
    return {input_dim,
            std::move(trunk_widths),
            {{"id", num_ids, HeadActivation::Softmax}, {"attr", num_attrs, HeadActivation::Sigmoid}},
            seed};
}

namespace {

std::string activation_name(HeadActivation a) {
    switch (a) {
        case HeadActivation::Tanh: return "tanh";
        case HeadActivation::Softmax: return "softmax";
        case HeadActivation::Sigmoid: return "sigmoid";
    }
    return "?";
}

HeadActivation parse_activation(const std::string& s) {
    if (s == "tanh") return HeadActivation::Tanh;
    if (s == "softmax") return HeadActivation::Softmax;
    if (s == "sigmoid") return HeadActivation::Sigmoid;
    throw DataError("unknown head activation '" + s + "'");
}

DenseLayer init_layer(std::size_t in, std::size_t out, std::mt19937_64& rng) {
    DenseLayer layer{Tensor::matrix(out, in), Tensor({out})};
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-a, a);
    for (double& w : layer.weight.values()) w = dist(rng);
    return layer;
}

// y = x W^T + b for every row of x.
Tensor affine(const Tensor& x, const DenseLayer& layer) {
    const std::size_t n = x.rows(), in = layer.weight.cols(), out = layer.weight.rows();
    Tensor y = Tensor::matrix(n, out);
    for (std::size_t r = 0; r < n; ++r) {
        const auto xr = x.row(r);
        for (std::size_t o = 0; o < out; ++o) {
            const auto wr = layer.weight.row(o);
            double s = layer.bias[o];
            for (std::size_t i = 0; i < in; ++i) s += wr[i] * xr[i];
            y(r, o) = s;
        }
    }
    return y;
}

// Accumulates dW = g^T x, db = sum_rows g and returns dx = g W.
Tensor affine_backward(const Tensor& x, const Tensor& g, const DenseLayer& layer, Tensor& dw, Tensor& db,
                       bool want_input_grad) {
    const std::size_t n = x.rows(), in = layer.weight.cols(), out = layer.weight.rows();
    Tensor dx = want_input_grad ? Tensor::matrix(n, in) : Tensor();
    for (std::size_t r = 0; r < n; ++r) {
        const auto xr = x.row(r);
        const auto gr = g.row(r);
        for (std::size_t o = 0; o < out; ++o) {
            const double go = gr[o];
            if (go == 0.0) continue;
            db[o] += go;
            auto dwr = dw.row(o);
            const auto wr = layer.weight.row(o);
            for (std::size_t i = 0; i < in; ++i) dwr[i] += go * xr[i];
            if (want_input_grad) {
                auto dxr = dx.row(r);
                for (std::size_t i = 0; i < in; ++i) dxr[i] += go * wr[i];
            }
        }
    }
    return dx;
}

}  // namespace

json to_json(const ModelSpec& spec) {
    json heads = json::array();
    for (const auto& h : spec.heads)
        heads.push_back({{"name", h.name}, {"width", h.width}, {"activation", activation_name(h.activation)}});
    return {{"input_dim", spec.input_dim}, {"trunk", spec.trunk_widths}, {"heads", heads}, {"seed", spec.seed}};
}

ModelSpec model_spec_from_json(const json& j) {
    ModelSpec spec;
    spec.input_dim = j.at("input_dim").get<std::size_t>();
    spec.trunk_widths = j.at("trunk").get<std::vector<std::size_t>>();
    spec.seed = j.value("seed", std::uint64_t{0});
    for (const auto& h : j.at("heads"))
        spec.heads.push_back({h.at("name").get<std::string>(), h.at("width").get<std::size_t>(),
                              parse_activation(h.at("activation").get<std::string>())});
    return spec;
}

MultiHeadModel::MultiHeadModel(ModelSpec spec) : spec_(std::move(spec)) {
    if (spec_.input_dim == 0) throw ConfigError("model: input dimension must be positive");
    if (spec_.heads.empty()) throw ConfigError("model: at least one head is required");
    std::mt19937_64 rng(spec_.seed);
    std::size_t in = spec_.input_dim;
    for (std::size_t w : spec_.trunk_widths) {
        if (w == 0) throw ConfigError("model: trunk widths must be positive");
        trunk_.push_back(init_layer(in, w, rng));
        in = w;
    }
    for (const auto& h : spec_.heads) {
        if (h.width == 0) throw ConfigError("model: head '" + h.name + "' has zero width");
        if (h.activation == HeadActivation::Softmax && h.width < 2)
            throw ConfigError("model: softmax head '" + h.name + "' needs at least two classes");
        heads_.push_back(init_layer(in, h.width, rng));
    }
}

std::size_t MultiHeadModel::feature_dim() const {
    return spec_.trunk_widths.empty() ? spec_.input_dim : spec_.trunk_widths.back();
}

bool MultiHeadModel::has_head(const std::string& name) const {
    return std::any_of(spec_.heads.begin(), spec_.heads.end(), [&](const auto& h) { return h.name == name; });
}

std::size_t MultiHeadModel::head_index(const std::string& name) const {
    for (std::size_t i = 0; i < spec_.heads.size(); ++i)
        if (spec_.heads[i].name == name) return i;
    throw ConfigError("model has no head named '" + name + "'");
}

ForwardPass MultiHeadModel::forward(const Tensor& batch) const {
    if (batch.rank() != 2 || batch.cols() != spec_.input_dim)
        throw DataError("forward: expected batch of width " + std::to_string(spec_.input_dim) + ", got " +
                        std::to_string(batch.rank() == 2 ? batch.cols() : 0));
    ForwardPass pass;
    pass.version = version_;
    pass.activations.push_back(batch);
    for (const auto& layer : trunk_) {
        Tensor h = affine(pass.activations.back(), layer);
        for (double& v : h.values()) v = std::tanh(v);
        pass.activations.push_back(std::move(h));
    }
    const Tensor& feature = pass.activations.back();
    for (std::size_t k = 0; k < heads_.size(); ++k) {
        Tensor z = affine(feature, heads_[k]);
        switch (spec_.heads[k].activation) {
            case HeadActivation::Tanh:
                for (double& v : z.values()) v = std::tanh(v);
                break;
            case HeadActivation::Sigmoid:
                for (double& v : z.values()) v = sigmoid(v);
                break;
            case HeadActivation::Softmax:
                for (std::size_t r = 0; r < z.rows(); ++r) {
                    const auto p = softmax(z.row(r));
                    std::copy(p.begin(), p.end(), z.row(r).begin());
                }
                break;
        }
        pass.outputs.emplace(spec_.heads[k].name, std::move(z));
    }
    return pass;
}

std::vector<PredictionBundle> MultiHeadModel::bundles(const ForwardPass& pass) const {
    std::vector<PredictionBundle> out(pass.batch_size());
    const auto va = pass.outputs.find("va");
    const auto expr = pass.outputs.find("expr");
    const auto au = pass.outputs.find("au");
    for (std::size_t r = 0; r < out.size(); ++r) {
        if (va != pass.outputs.end()) out[r].va = {va->second(r, 0), va->second(r, 1)};
        if (expr != pass.outputs.end()) out[r].expr_probs.assign(expr->second.row(r).begin(), expr->second.row(r).end());
        if (au != pass.outputs.end()) out[r].au_probs.assign(au->second.row(r).begin(), au->second.row(r).end());
    }
    return out;
}

Gradients MultiHeadModel::backward(const ForwardPass& pass, const HeadOutputs& output_grads) const {
    if (pass.version != version_ || pass.activations.size() != trunk_.size() + 1)
        throw NumericalError("backward: forward state is stale (parameters changed since forward)");
    const std::size_t n = pass.batch_size();

    Gradients grads;
    for (const Tensor* p : parameters()) grads.emplace_back(p->shape());
    const std::size_t head_base = 2 * trunk_.size();

    const Tensor& feature = pass.activations.back();
    Tensor d_feature = Tensor::matrix(n, feature_dim());
    for (std::size_t k = 0; k < heads_.size(); ++k) {
        const auto& name = spec_.heads[k].name;
        const auto git = output_grads.find(name);
        if (git == output_grads.end()) continue;
        const Tensor& g = git->second;
        const Tensor& y = pass.outputs.at(name);
        if (!g.same_shape(y)) throw DataError("backward: gradient for head '" + name + "' has the wrong shape");
        Tensor dz = Tensor::matrix(n, y.cols());
        switch (spec_.heads[k].activation) {
            case HeadActivation::Tanh:
                for (std::size_t i = 0; i < y.size(); ++i) dz[i] = g[i] * (1.0 - y[i] * y[i]);
                break;
            case HeadActivation::Sigmoid:
                for (std::size_t i = 0; i < y.size(); ++i) dz[i] = g[i] * y[i] * (1.0 - y[i]);
                break;
            case HeadActivation::Softmax:
                for (std::size_t r = 0; r < n; ++r) {
                    const auto d = softmax_backward(y.row(r), g.row(r));
                    std::copy(d.begin(), d.end(), dz.row(r).begin());
                }
                break;
        }
        const Tensor dx = affine_backward(feature, dz, heads_[k], grads[head_base + 2 * k],
                                          grads[head_base + 2 * k + 1], !trunk_.empty());
        if (!trunk_.empty())
            for (std::size_t i = 0; i < dx.size(); ++i) d_feature[i] += dx[i];
    }

    if (trunk_frozen_) return grads;
    Tensor d_h = std::move(d_feature);
    for (std::size_t l = trunk_.size(); l-- > 0;) {
        const Tensor& h = pass.activations[l + 1];
        for (std::size_t i = 0; i < d_h.size(); ++i) d_h[i] *= 1.0 - h[i] * h[i];
        d_h = affine_backward(pass.activations[l], d_h, trunk_[l], grads[2 * l], grads[2 * l + 1], l > 0);
    }
    return grads;
}

std::vector<Tensor*> MultiHeadModel::parameters() {
    std::vector<Tensor*> out;
    for (auto* group : {&trunk_, &heads_})
        for (auto& layer : *group) {
            out.push_back(&layer.weight);
            out.push_back(&layer.bias);
        }
    return out;
}

std::vector<const Tensor*> MultiHeadModel::parameters() const {
    std::vector<const Tensor*> out;
    for (const auto* group : {&trunk_, &heads_})
        for (const auto& layer : *group) {
            out.push_back(&layer.weight);
            out.push_back(&layer.bias);
        }
    return out;
}

std::vector<std::string> MultiHeadModel::parameter_names() const {
    std::vector<std::string> out;
    for (std::size_t l = 0; l < trunk_.size(); ++l) {
        out.push_back("trunk" + std::to_string(l) + ".weight");
        out.push_back("trunk" + std::to_string(l) + ".bias");
    }
    for (const auto& h : spec_.heads) {
        out.push_back(h.name + ".weight");
        out.push_back(h.name + ".bias");
    }
    return out;
}

std::size_t MultiHeadModel::parameter_count() const {
    std::size_t n = 0;
    for (const Tensor* p : parameters()) n += p->size();
    return n;
}

void MultiHeadModel::replace_head(const std::string& name, std::size_t num_classes, bool freeze_trunk,
                                  std::uint64_t seed) {
    if (num_classes < 2) throw ConfigError("replace_head: a softmax head needs at least two classes");
    std::mt19937_64 rng(seed);
    DenseLayer layer = init_layer(feature_dim(), num_classes, rng);
    HeadSpec head{name, num_classes, HeadActivation::Softmax};
    const auto it = std::find_if(spec_.heads.begin(), spec_.heads.end(), [&](const auto& h) { return h.name == name; });
    if (it == spec_.heads.end()) {
        spec_.heads.push_back(head);
        heads_.push_back(std::move(layer));
    } else {
        const auto k = static_cast<std::size_t>(it - spec_.heads.begin());
        *it = head;
        heads_[k] = std::move(layer);
    }
    trunk_frozen_ = freeze_trunk;
    mark_updated();
}

namespace {

constexpr char kCheckpointMagic[8] = {'H', 'M', 'T', 'L', 'C', 'K', 'P', '1'};

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
    return v;
}

}  // namespace

// Layout: 8-byte magic, u64 header length, JSON header, then every parameter
// as little-endian IEEE-754 doubles in declaration order.
std::vector<std::uint8_t> MultiHeadModel::to_bytes() const {
    json shapes = json::array();
    const auto names = parameter_names();
    const auto params = parameters();
    for (std::size_t i = 0; i < params.size(); ++i) shapes.push_back({{"name", names[i]}, {"shape", params[i]->shape()}});
    const std::string header =
        json{{"spec", to_json(spec_)}, {"trunk_frozen", trunk_frozen_}, {"parameters", shapes}}.dump();

    std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + 8);
    put_u64(out, header.size());
    out.insert(out.end(), header.begin(), header.end());
    for (const Tensor* p : params)
        for (double v : p->values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

MultiHeadModel MultiHeadModel::from_bytes(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 16 || !std::equal(kCheckpointMagic, kCheckpointMagic + 8, bytes.begin()))
        throw DataError("checkpoint: bad magic");
    const std::uint64_t header_len = get_u64(bytes, 8);
    if (16 + header_len > bytes.size()) throw DataError("checkpoint: truncated header");
    json header;
    try {
        header = json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint: malformed header: ") + e.what());
    }
    MultiHeadModel model(model_spec_from_json(header.at("spec")));
    model.trunk_frozen_ = header.value("trunk_frozen", false);
    std::size_t at = 16 + header_len;
    for (Tensor* p : model.parameters()) {
        if (at + 8 * p->size() > bytes.size()) throw DataError("checkpoint: truncated parameter data");
        for (double& v : p->values()) {
            v = std::bit_cast<double>(get_u64(bytes, at));
            at += 8;
        }
    }
    if (at != bytes.size()) throw DataError("checkpoint: trailing bytes after parameters");
    return model;
}

void MultiHeadModel::save(const std::filesystem::path& path) const {
    const auto bytes = to_bytes();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

MultiHeadModel MultiHeadModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read checkpoint: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_bytes(bytes);
}

SgdMomentum::SgdMomentum(double lr, double momentum) : lr_(lr), momentum_(momentum) {
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
}

void SgdMomentum::step(MultiHeadModel& model, const Gradients& grads) {
    auto params = model.parameters();
    if (grads.size() != params.size()) throw DataError("optimizer: gradient count does not match parameters");
    if (velocity_.size() != params.size()) {
        velocity_.clear();
        for (const Tensor* p : params) velocity_.emplace_back(p->shape());
    }
    const std::size_t frozen = model.trunk_frozen() ? model.trunk_parameter_tensors() : 0;
    for (std::size_t k = frozen; k < params.size(); ++k) {
        if (!velocity_[k].same_shape(*params[k])) velocity_[k] = Tensor(params[k]->shape());
        if (!grads[k].same_shape(*params[k])) throw DataError("optimizer: gradient shape mismatch");
        auto& v = velocity_[k];
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = momentum_ * v[i] + grads[k][i];
            (*params[k])[i] -= lr_ * v[i];
        }
    }
    model.mark_updated();
}

GradCheckReport gradient_check(MultiHeadModel model, const Tensor& batch, const OutputObjective& objective,
                               const GradCheckOptions& options) {
    if (model.parameter_count() >= kGradCheckMaxParameters)
        throw ConfigError("gradient_check: model has " + std::to_string(model.parameter_count()) +
                          " parameters; limit is " + std::to_string(kGradCheckMaxParameters));
    auto loss_at = [&](const MultiHeadModel& m) {
        const double l = objective(m.forward(batch).outputs).first;
        if (!std::isfinite(l)) throw NumericalError("gradient_check: non-finite loss");
        return l;
    };

    const ForwardPass pass = model.forward(batch);
    auto [loss, out_grads] = objective(pass.outputs);
    if (!std::isfinite(loss)) throw NumericalError("gradient_check: non-finite loss");
    Gradients analytic = model.backward(pass, out_grads);
    if (options.tamper) options.tamper(analytic);

    GradCheckReport report;
    std::mt19937_64 rng(options.seed);
    auto params = model.parameters();
    const std::size_t frozen_tensors = model.trunk_frozen() ? model.trunk_parameter_tensors() : 0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        double worst = 0.0;
        if (k < frozen_tensors) {
            for (double g : analytic[k].values())
                if (g != 0.0) report.frozen_trunk_gradients_zero = false;
            report.per_tensor_error.push_back(0.0);
            continue;
        }
        std::vector<std::size_t> idx(p.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(std::min(idx.size(), options.samples_per_tensor));
        for (std::size_t i : idx) {
            const double saved = p[i];
            p[i] = saved + options.step;
            const double up = loss_at(model);
            p[i] = saved - options.step;
            const double down = loss_at(model);
            p[i] = saved;
            const double numeric = (up - down) / (2.0 * options.step);
            const double a = analytic[k][i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
            worst = std::max(worst, std::abs(a - numeric) / denom);
            ++report.checked;
        }
        report.per_tensor_error.push_back(worst);
        report.max_relative_error = std::max(report.max_relative_error, worst);
    }
    return report;
}

std::vector<double> median_filter(std::span<const double> sequence, std::size_t window) {
    if (window == 0 || window % 2 == 0) throw ConfigError("median_filter: window must be odd and positive");
    const std::size_t n = sequence.size();
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(window / 2);
    std::vector<double> out(n), buf(window);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::ptrdiff_t k = -half; k <= half; ++k) {
            const std::ptrdiff_t j =
                std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(i) + k, 0, static_cast<std::ptrdiff_t>(n) - 1);
            buf[static_cast<std::size_t>(k + half)] = sequence[static_cast<std::size_t>(j)];
        }
        std::nth_element(buf.begin(), buf.begin() + half, buf.end());
        out[i] = buf[static_cast<std::size_t>(half)];
    }
    return out;
}

std::vector<std::vector<double>> median_filter(const std::vector<std::vector<double>>& sequence, std::size_t window) {
    if (sequence.empty()) {
        if (window == 0 || window % 2 == 0) throw ConfigError("median_filter: window must be odd and positive");
        return {};
    }
    const std::size_t dims = sequence.front().size();
    std::vector<std::vector<double>> out(sequence.size(), std::vector<double>(dims));
    std::vector<double> column(sequence.size());
    for (std::size_t d = 0; d < dims; ++d) {
        for (std::size_t i = 0; i < sequence.size(); ++i) {
            if (sequence[i].size() != dims) throw DataError("median_filter: ragged sequence");
            column[i] = sequence[i][d];
        }
        const auto filtered = median_filter(column, window);
        for (std::size_t i = 0; i < sequence.size(); ++i) out[i][d] = filtered[i];
    }
    return out;
}

}  // namespace hmtl
