#pragma once

#include <memory>
#include <string>
#include <vector>

#include "difpath/rng.hpp"
#include "difpath/schedule.hpp"
#include "difpath/tensor.hpp"

namespace difpath {

struct LabeledImage {
    Tensor image;
    int label{-1};  // -1 is the NULL/unconditional token
};

constexpr int kNullClass = -1;

// Noise prediction eps_hat(x_t, t, c).
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual Tensor predict(const Tensor& x_t, int t, int class_label) const = 0;
    virtual bool size_agnostic() const = 0;
};

// Opaque per-call activation cache; one per concurrent forward pass.
struct Workspace {
    virtual ~Workspace() = default;
};

class TrainableDenoiser : public Denoiser {
public:
    virtual std::vector<Tensor*> parameters() = 0;
    virtual std::vector<std::string> parameter_names() const = 0;
    virtual std::unique_ptr<Workspace> make_workspace() const = 0;
    virtual Tensor forward_train(const Tensor& x_t, int t, int class_label, Workspace& ws) const = 0;
    // Accumulates dL/dparam into grads, aligned with parameters().
    virtual void backward(const Tensor& d_out, const Workspace& ws, std::vector<Tensor>& grads) const = 0;

    std::vector<Tensor> zero_gradients();
};

struct ConvDenoiserConfig {
    int in_channels{3};
    int width{32};
    int stages{5};  // conv layers, 4..6
    int time_embed_dim{64};
    int num_classes{0};  // learned class rows; a NULL row always exists
};

// Plain fully-convolutional noise predictor: 3x3 stride-1 convs, SiLU, with a
// sinusoidal timestep embedding (2-layer MLP) and a learned class embedding
// added as per-channel biases after every hidden conv. The final conv is
// zero-initialized. Accepts any spatial size >= 8, so a net trained at one
// patch size can sample at others.
class ConvDenoiser : public TrainableDenoiser {
public:
    ConvDenoiser(const ConvDenoiserConfig& cfg, RngStream init_rng);

    Tensor predict(const Tensor& x_t, int t, int class_label) const override;
    bool size_agnostic() const override { return true; }

    std::vector<Tensor*> parameters() override;
    std::vector<std::string> parameter_names() const override;
    std::unique_ptr<Workspace> make_workspace() const override;
    Tensor forward_train(const Tensor& x_t, int t, int class_label, Workspace& ws) const override;
    void backward(const Tensor& d_out, const Workspace& ws, std::vector<Tensor>& grads) const override;

    const ConvDenoiserConfig& config() const { return cfg_; }

    // Sinusoidal embedding with geometrically spaced periods 1..1e4.
    static Tensor time_embedding(int t, int dim);

    std::vector<Tensor> conv_w;  // stage i: (out_c, in_c, 3, 3)
    std::vector<Tensor> conv_b;
    Tensor time_w1, time_b1;  // (E, E), (E)
    Tensor time_w2, time_b2;  // (width, E), (width)
    Tensor class_embed;       // (num_classes + 1, width), last row = NULL

private:
    ConvDenoiserConfig cfg_;
    int class_row(int class_label) const;
};

struct GaussianMixture {
    std::vector<double> weights;  // positive, sum to 1
    std::vector<Tensor> means;    // shared shape
    std::vector<double> vars;     // isotropic component variances

    void validate() const;
    std::size_t dim() const { return means.empty() ? 0 : means[0].size(); }
    Tensor draw(RngStream& rng) const;
};

// Exact eps_hat for a Gaussian-mixture target under the forward marginal:
// eps_hat = (x_t - sqrt(abar_t) * E[x0 | x_t]) / sqrt(1 - abar_t), with the
// per-component posterior computed in closed form. Used to validate samplers
// independently of any training.
class AnalyticGMMDenoiser : public Denoiser {
public:
    AnalyticGMMDenoiser(GaussianMixture mixture, NoiseSchedule schedule);

    Tensor predict(const Tensor& x_t, int t, int class_label) const override;
    bool size_agnostic() const override { return false; }

    const GaussianMixture& mixture() const { return mix_; }
    const NoiseSchedule& schedule() const { return schedule_; }

private:
    GaussianMixture mix_;
    NoiseSchedule schedule_;
};

struct AdamConfig {
    double lr{1e-3};
    double beta1{0.9};
    double beta2{0.999};
    double eps{1e-8};
};

class Adam {
public:
    Adam(const std::vector<Tensor*>& params, AdamConfig cfg = {});

    void step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads);
    long step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::vector<Tensor> m_, v_;
    long t_{0};
};

struct TrainOptions {
    int epochs{1};
    int batch_size{16};
    double p_uncond{0.1};  // label dropout to the NULL class
};

// One entry per epoch: mean loss over the epoch's batches.
std::vector<double> train(ConvDenoiser& net, const std::vector<LabeledImage>& dataset, const NoiseSchedule& s,
                          Adam& opt, const TrainOptions& options, RngStream& rng);

}  // namespace difpath
