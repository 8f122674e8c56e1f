#include "difpath/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "difpath/diffusion.hpp"
#include "difpath/kernels.hpp"

namespace difpath {

namespace {

inline double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

inline double silu(double x) {
    return x * sigmoid(x);
}

inline double silu_grad(double x) {
    const double s = sigmoid(x);
    return s * (1.0 + x * (1.0 - s));
}

Tensor gaussian_init(RngStream& rng, std::vector<std::size_t> shape, double scale) {
    Tensor t = gaussian(rng, shape);
    for (double& v : t.data) {
        v *= scale;
    }
    return t;
}

struct ConvWorkspace final : Workspace {
    Tensor emb;      // sinusoidal timestep embedding
    Tensor h1_pre;   // time MLP hidden pre-activation
    Tensor h1;       // silu(h1_pre)
    int class_row{0};
    std::vector<Tensor> stage_in;  // input to conv j (stage_in[0] = x_t)
    std::vector<Tensor> z;         // injected pre-activations per hidden stage
};

}  // namespace

std::vector<Tensor> TrainableDenoiser::zero_gradients() {
    std::vector<Tensor> grads;
    for (Tensor* p : parameters()) {
        grads.emplace_back(p->shape);
    }
    return grads;
}

ConvDenoiser::ConvDenoiser(const ConvDenoiserConfig& cfg, RngStream init_rng) : cfg_(cfg) {
    require(cfg.in_channels >= 1, errc::parameter, "ConvDenoiser: in_channels must be >= 1");
    require(cfg.width >= 1, errc::parameter, "ConvDenoiser: width must be >= 1");
    require(cfg.stages >= 4 && cfg.stages <= 6, errc::parameter, "ConvDenoiser: stages must be in 4..6");
    require(cfg.time_embed_dim >= 2 && cfg.time_embed_dim % 2 == 0, errc::parameter,
            "ConvDenoiser: time_embed_dim must be even and >= 2");
    require(cfg.num_classes >= 0, errc::parameter, "ConvDenoiser: num_classes must be >= 0");

    const std::size_t w = static_cast<std::size_t>(cfg.width);
    const std::size_t e = static_cast<std::size_t>(cfg.time_embed_dim);
    const std::size_t in_c = static_cast<std::size_t>(cfg.in_channels);

    for (int j = 0; j < cfg.stages; ++j) {
        const std::size_t ic = j == 0 ? in_c : w;
        const std::size_t oc = j == cfg.stages - 1 ? in_c : w;
        const double scale = 1.0 / std::sqrt(static_cast<double>(ic) * 9.0);
        if (j == cfg.stages - 1) {
            // zero-init so the untrained net predicts eps_hat = 0
            conv_w.push_back(Tensor({oc, ic, 3, 3}));
        } else {
            conv_w.push_back(gaussian_init(init_rng, {oc, ic, 3, 3}, scale));
        }
        conv_b.push_back(Tensor({oc}));
    }

    time_w1 = gaussian_init(init_rng, {e, e}, 1.0 / std::sqrt(static_cast<double>(e)));
    time_b1 = Tensor({e});
    time_w2 = gaussian_init(init_rng, {w, e}, 1.0 / std::sqrt(static_cast<double>(e)));
    time_b2 = Tensor({w});
    class_embed = Tensor({static_cast<std::size_t>(cfg.num_classes) + 1, w});
}

int ConvDenoiser::class_row(int class_label) const {
    if (class_label == kNullClass) {
        return cfg_.num_classes;
    }
    require(class_label >= 0 && class_label < cfg_.num_classes, errc::parameter,
            "ConvDenoiser: class label out of range");
    return class_label;
}

Tensor ConvDenoiser::time_embedding(int t, int dim) {
    const int half = dim / 2;
    Tensor emb({static_cast<std::size_t>(dim)});
    for (int i = 0; i < half; ++i) {
        const double period = half > 1 ? std::pow(1e4, static_cast<double>(i) / (half - 1)) : 1.0;
        const double angle = static_cast<double>(t) / period;
        emb[i] = std::sin(angle);
        emb[half + i] = std::cos(angle);
    }
    return emb;
}

std::vector<Tensor*> ConvDenoiser::parameters() {
    std::vector<Tensor*> ps;
    for (int j = 0; j < cfg_.stages; ++j) {
        ps.push_back(&conv_w[j]);
        ps.push_back(&conv_b[j]);
    }
    ps.push_back(&time_w1);
    ps.push_back(&time_b1);
    ps.push_back(&time_w2);
    ps.push_back(&time_b2);
    ps.push_back(&class_embed);
    return ps;
}

std::vector<std::string> ConvDenoiser::parameter_names() const {
    std::vector<std::string> names;
    for (int j = 0; j < cfg_.stages; ++j) {
        names.push_back("conv" + std::to_string(j) + ".weight");
        names.push_back("conv" + std::to_string(j) + ".bias");
    }
    names.insert(names.end(), {"time.w1", "time.b1", "time.w2", "time.b2", "class.embed"});
    return names;
}

std::unique_ptr<Workspace> ConvDenoiser::make_workspace() const {
    return std::make_unique<ConvWorkspace>();
}

Tensor ConvDenoiser::forward_train(const Tensor& x_t, int t, int class_label, Workspace& ws_base) const {
    auto& ws = dynamic_cast<ConvWorkspace&>(ws_base);
    require(x_t.rank() == 3, errc::contract, "ConvDenoiser: rank-3 (C,H,W) input required");
    require(x_t.shape[0] == static_cast<std::size_t>(cfg_.in_channels), errc::contract,
            "ConvDenoiser: channel count mismatch");
    require(x_t.shape[1] >= 8 && x_t.shape[2] >= 8, errc::size, "ConvDenoiser: spatial size must be >= 8");

    const int h = static_cast<int>(x_t.shape[1]);
    const int w = static_cast<int>(x_t.shape[2]);
    const std::size_t width = static_cast<std::size_t>(cfg_.width);
    const std::size_t e = static_cast<std::size_t>(cfg_.time_embed_dim);

    ws.class_row = class_row(class_label);
    ws.emb = time_embedding(t, cfg_.time_embed_dim);
    ws.h1_pre = Tensor({e});
    for (std::size_t i = 0; i < e; ++i) {
        double acc = time_b1[i];
        for (std::size_t j = 0; j < e; ++j) {
            acc += time_w1(i, j) * ws.emb[j];
        }
        ws.h1_pre[i] = acc;
    }
    ws.h1 = ws.h1_pre;
    for (double& v : ws.h1.data) {
        v = silu(v);
    }
    Tensor inj({width});
    for (std::size_t i = 0; i < width; ++i) {
        double acc = time_b2[i];
        for (std::size_t j = 0; j < e; ++j) {
            acc += time_w2(i, j) * ws.h1[j];
        }
        inj[i] = acc + class_embed(static_cast<std::size_t>(ws.class_row), i);
    }

    ws.stage_in.clear();
    ws.z.clear();
    ws.stage_in.push_back(x_t);

    Tensor act;
    for (int j = 0; j < cfg_.stages; ++j) {
        const Tensor& in = ws.stage_in.back();
        kernels::Conv2dShape shape{static_cast<int>(in.shape[0]),
                                   static_cast<int>(conv_w[j].shape[0]),
                                   h,
                                   w,
                                   3,
                                   1,
                                   1};
        act = Tensor({conv_w[j].shape[0], static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
        kernels::conv2d_forward(in.data.data(), conv_w[j].data.data(), conv_b[j].data.data(), act.data.data(),
                                shape);
        if (j == cfg_.stages - 1) {
            break;
        }
        const std::size_t plane = static_cast<std::size_t>(h) * w;
        for (std::size_t ch = 0; ch < width; ++ch) {
            const double b = inj[ch];
            double* p = act.data.data() + ch * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                p[i] += b;
            }
        }
        ws.z.push_back(act);
        Tensor s_out = act;
        for (double& v : s_out.data) {
            v = silu(v);
        }
        ws.stage_in.push_back(std::move(s_out));
    }
    return act;
}

Tensor ConvDenoiser::predict(const Tensor& x_t, int t, int class_label) const {
    ConvWorkspace ws;
    return forward_train(x_t, t, class_label, ws);
}

void ConvDenoiser::backward(const Tensor& d_out, const Workspace& ws_base, std::vector<Tensor>& grads) const {
    const auto& ws = dynamic_cast<const ConvWorkspace&>(ws_base);
    const int h = static_cast<int>(ws.stage_in[0].shape[1]);
    const int w = static_cast<int>(ws.stage_in[0].shape[2]);
    const std::size_t width = static_cast<std::size_t>(cfg_.width);
    const std::size_t e = static_cast<std::size_t>(cfg_.time_embed_dim);
    const std::size_t plane = static_cast<std::size_t>(h) * w;

    // grads layout mirrors parameters(): conv pairs, then time MLP, class embed
    const std::size_t gw1 = 2 * static_cast<std::size_t>(cfg_.stages);

    Tensor d_inj({width});  // shared by the time and class injection paths
    Tensor d = d_out;
    for (int j = cfg_.stages - 1; j >= 0; --j) {
        const Tensor& in = ws.stage_in[static_cast<std::size_t>(j)];
        kernels::Conv2dShape shape{static_cast<int>(in.shape[0]),
                                   static_cast<int>(conv_w[j].shape[0]),
                                   h,
                                   w,
                                   3,
                                   1,
                                   1};
        kernels::conv2d_backward_params(in.data.data(), d.data.data(),
                                        grads[2 * static_cast<std::size_t>(j)].data.data(),
                                        grads[2 * static_cast<std::size_t>(j) + 1].data.data(), shape);
        if (j == 0) {
            break;
        }
        Tensor d_s(in.shape);
        kernels::conv2d_backward_input(d.data.data(), conv_w[j].data.data(), d_s.data.data(), shape);

        const Tensor& z = ws.z[static_cast<std::size_t>(j) - 1];
        Tensor d_z(z.shape);
        for (std::size_t i = 0; i < d_z.size(); ++i) {
            d_z.data[i] = d_s.data[i] * silu_grad(z.data[i]);
        }
        for (std::size_t ch = 0; ch < width; ++ch) {
            const double* p = d_z.data.data() + ch * plane;
            double acc = 0.0;
            for (std::size_t i = 0; i < plane; ++i) {
                acc += p[i];
            }
            d_inj[ch] += acc;
        }
        d = std::move(d_z);
    }

    // class embedding: the used row sees the same per-channel sums
    Tensor& g_embed = grads[gw1 + 4];
    for (std::size_t i = 0; i < width; ++i) {
        g_embed(static_cast<std::size_t>(ws.class_row), i) += d_inj[i];
    }

    // time MLP: inj_t = W2 h1 + b2
    Tensor& g_w2 = grads[gw1 + 2];
    Tensor& g_b2 = grads[gw1 + 3];
    Tensor d_h1({e});
    for (std::size_t i = 0; i < width; ++i) {
        g_b2[i] += d_inj[i];
        for (std::size_t j = 0; j < e; ++j) {
            g_w2(i, j) += d_inj[i] * ws.h1[j];
            d_h1[j] += time_w2(i, j) * d_inj[i];
        }
    }
    Tensor& g_w1 = grads[gw1];
    Tensor& g_b1 = grads[gw1 + 1];
    for (std::size_t i = 0; i < e; ++i) {
        const double d_pre = d_h1[i] * silu_grad(ws.h1_pre[i]);
        g_b1[i] += d_pre;
        for (std::size_t j = 0; j < e; ++j) {
            g_w1(i, j) += d_pre * ws.emb[j];
        }
    }
}

void GaussianMixture::validate() const {
    require(!weights.empty() && weights.size() == means.size() && weights.size() == vars.size(), errc::parameter,
            "GaussianMixture: component count mismatch");
    double total = 0.0;
    for (double w : weights) {
        require(w > 0.0, errc::parameter, "GaussianMixture: weights must be positive");
        total += w;
    }
    require(std::fabs(total - 1.0) <= 1e-9, errc::parameter, "GaussianMixture: weights must sum to 1");
    for (double v : vars) {
        require(v > 0.0, errc::parameter, "GaussianMixture: variances must be positive");
    }
    for (const Tensor& m : means) {
        require(m.same_shape(means[0]), errc::parameter, "GaussianMixture: mean shape mismatch");
        m.require_finite("GaussianMixture");
    }
}

Tensor GaussianMixture::draw(RngStream& rng) const {
    const double u = rng.next_uniform();
    std::size_t k = 0;
    double cum = 0.0;
    for (; k < weights.size(); ++k) {
        cum += weights[k];
        if (u <= cum) {
            break;
        }
    }
    k = std::min(k, weights.size() - 1);
    Tensor x = gaussian(rng, means[k].shape);
    const double sd = std::sqrt(vars[k]);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x.data[i] = means[k].data[i] + sd * x.data[i];
    }
    return x;
}

AnalyticGMMDenoiser::AnalyticGMMDenoiser(GaussianMixture mixture, NoiseSchedule schedule)
    : mix_(std::move(mixture)), schedule_(std::move(schedule)) {
    mix_.validate();
}

Tensor AnalyticGMMDenoiser::predict(const Tensor& x_t, int t, int /*class_label*/) const {
    schedule_.require_timestep(t);
    x_t.require_finite("AnalyticGMMDenoiser");
    require(x_t.size() == mix_.dim(), errc::contract, "AnalyticGMMDenoiser: dimension mismatch");

    const double abar = schedule_.alpha_bar[t];
    const double sqrt_abar = std::sqrt(abar);
    const std::size_t K = mix_.weights.size();
    const std::size_t d = x_t.size();

    // responsibilities under the time-t marginal, log-sum-exp stabilized
    std::vector<double> log_r(K);
    std::vector<double> marg_var(K);
    for (std::size_t k = 0; k < K; ++k) {
        marg_var[k] = abar * mix_.vars[k] + 1.0 - abar;
        double sq = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double diff = x_t.data[i] - sqrt_abar * mix_.means[k].data[i];
            sq += diff * diff;
        }
        log_r[k] = std::log(mix_.weights[k]) -
                   0.5 * (static_cast<double>(d) * std::log(marg_var[k]) + sq / marg_var[k]);
    }
    const double m = *std::max_element(log_r.begin(), log_r.end());
    double den = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        log_r[k] = std::exp(log_r[k] - m);
        den += log_r[k];
    }

    Tensor x0_mean(x_t.shape);
    for (std::size_t k = 0; k < K; ++k) {
        const double r = log_r[k] / den;
        const double shrink = sqrt_abar * mix_.vars[k] / marg_var[k];
        for (std::size_t i = 0; i < d; ++i) {
            const double centered = x_t.data[i] - sqrt_abar * mix_.means[k].data[i];
            x0_mean.data[i] += r * (mix_.means[k].data[i] + shrink * centered);
        }
    }

    const double inv_sigma = 1.0 / schedule_.sqrt_one_minus_alpha_bar(t);
    Tensor eps_hat(x_t.shape);
    for (std::size_t i = 0; i < d; ++i) {
        eps_hat.data[i] = (x_t.data[i] - sqrt_abar * x0_mean.data[i]) * inv_sigma;
    }
    return eps_hat;
}

Adam::Adam(const std::vector<Tensor*>& params, AdamConfig cfg) : cfg_(cfg) {
    require(cfg.lr >= 0.0 && cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0 &&
                cfg.eps > 0.0,
            errc::parameter, "Adam: invalid hyperparameters");
    for (const Tensor* p : params) {
        m_.emplace_back(p->shape);
        v_.emplace_back(p->shape);
    }
}

void Adam::step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads) {
    require(params.size() == m_.size() && grads.size() == m_.size(), errc::contract,
            "Adam: parameter/gradient count mismatch");
    t_ += 1;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& w = *params[p];
        const Tensor& g = grads[p];
        require_same_shape(w, g, "Adam::step");
        for (std::size_t i = 0; i < w.size(); ++i) {
            m_[p].data[i] = cfg_.beta1 * m_[p].data[i] + (1.0 - cfg_.beta1) * g.data[i];
            v_[p].data[i] = cfg_.beta2 * v_[p].data[i] + (1.0 - cfg_.beta2) * g.data[i] * g.data[i];
            const double mhat = m_[p].data[i] / bc1;
            const double vhat = v_[p].data[i] / bc2;
            w.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

std::vector<double> train(ConvDenoiser& net, const std::vector<LabeledImage>& dataset, const NoiseSchedule& s,
                          Adam& opt, const TrainOptions& options, RngStream& rng) {
    require(!dataset.empty(), errc::parameter, "train: empty dataset");
    require(options.p_uncond >= 0.0 && options.p_uncond < 1.0, errc::parameter,
            "train: p_uncond must be in [0, 1)");
    require(options.epochs >= 1 && options.batch_size >= 1, errc::parameter,
            "train: epochs and batch_size must be >= 1");

    auto params = net.parameters();
    std::vector<double> trace;
    const RngStream base = rng;
    rng.counter += 1;

    std::vector<std::size_t> order(dataset.size());
    long global_step = 0;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        RngStream erng = base.child(static_cast<std::uint64_t>(epoch));
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[erng.next_below(i)]);
        }

        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
            const std::size_t stop = std::min(order.size(), start + options.batch_size);
            std::vector<LabeledImage> batch;
            batch.reserve(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                const LabeledImage& src = dataset[order[i]];
                int label = src.label;
                if (options.p_uncond > 0.0 && erng.next_uniform() <= options.p_uncond) {
                    label = kNullClass;
                }
                batch.push_back({src.image, label});
            }
            LossResult res = simple_loss(net, batch, s, erng);
            global_step += 1;
            if (!std::isfinite(res.loss)) {
                fail(errc::divergence, "train: non-finite loss at step " + std::to_string(global_step));
            }
            opt.step(params, res.gradients);
            epoch_loss += res.loss;
            batches += 1;
        }
        trace.push_back(epoch_loss / static_cast<double>(batches));
    }
    return trace;
}

}  // namespace difpath
