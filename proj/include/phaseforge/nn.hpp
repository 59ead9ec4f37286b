#ifndef PHASEFORGE_NN_HPP
#define PHASEFORGE_NN_HPP

#include "phaseforge/common.hpp"

#include <string>
#include <vector>

namespace phaseforge {

// Flat view of one parameter tensor, shared by the optimizer, checkpoints
// and finite-difference probes. Backward passes accumulate into `grad`.
struct TensorRef {
    std::string name;
    double* value = nullptr;
    double* grad = nullptr;
    long size = 0;
};

// Feature maps are channel-major throughout the network: rows = channels,
// cols = time steps / frames.

struct Linear {
    Mat weight;  // out x in
    Vec bias;    // out
    Mat weight_grad;
    Vec bias_grad;

    void init(int in_dim, int out_dim, Rng& rng);
    // Leading square block of the weight set to the identity, the rest zero.
    void init_identity(int in_dim, int out_dim);

    Mat forward(const Mat& x) const;
    Mat backward(const Mat& x, const Mat& grad_out);
    void zero_grad();
    void collect(const std::string& prefix, std::vector<TensorRef>& out);
};

struct Conv1d {
    int in_channels = 0, out_channels = 0, kernel = 1, stride = 1;
    int pad_left = 0, pad_right = 0;
    Mat weight;  // out x (in * kernel); column ci * kernel + j
    Vec bias;
    Mat weight_grad;
    Vec bias_grad;

    void init(int in_ch, int out_ch, int kernel_size, int stride_len, Rng& rng);
    long output_frames(long input_len) const {
        return (input_len + pad_left + pad_right - kernel) / stride + 1;
    }
    Mat forward(const Mat& x) const;
    Mat backward(const Mat& x, const Mat& grad_out);
    void zero_grad();
    void collect(const std::string& prefix, std::vector<TensorRef>& out);
};

struct ConvTranspose1d {
    int in_channels = 0, out_channels = 0, kernel = 1, stride = 1;
    int trim_left = 0, trim_right = 0;
    Mat weight;  // (out * kernel) x in; row co * kernel + j
    Vec bias;
    Mat weight_grad;
    Vec bias_grad;

    void init(int in_ch, int out_ch, int kernel_size, int stride_len, Rng& rng);
    long output_length(long frames) const {
        return (frames - 1) * stride + kernel - trim_left - trim_right;
    }
    Mat forward(const Mat& x) const;
    Mat backward(const Mat& x, const Mat& grad_out);
    void zero_grad();
    void collect(const std::string& prefix, std::vector<TensorRef>& out);
};

// Gated linear unit over the channel dimension: (2C x T) -> (C x T).
Mat glu(const Mat& x);
Mat glu_backward(const Mat& x, const Mat& grad_out);

Mat relu(const Mat& x);
Mat relu_backward(const Mat& x, const Mat& grad_out);

struct LstmLayer {
    int input_dim = 0, hidden_dim = 0;
    Mat w_input;  // 4H x in, gate rows packed [input, forget, cell, output]
    Mat w_recur;  // 4H x H
    Vec bias;     // 4H
    Mat w_input_grad, w_recur_grad;
    Vec bias_grad;

    struct Cache {
        Mat x;  // layer input, in x T
        Mat gate_i, gate_f, gate_g, gate_o;
        Mat cell, tanh_cell, hidden;  // each H x T
    };

    void init(int in_dim, int hid_dim, Rng& rng);
    Mat forward(const Mat& x, Cache& cache) const;
    Mat backward(const Cache& cache, const Mat& grad_out);
    void zero_grad();
    void collect(const std::string& prefix, std::vector<TensorRef>& out);
};

// Stacked LSTM bottleneck; bidirectional mode runs a mirrored stack over
// reversed time and merges with a linear layer back to `dim` channels.
struct SequenceModule {
    bool bidirectional = false;
    int dim = 0;
    std::vector<LstmLayer> fwd_stack;
    std::vector<LstmLayer> bwd_stack;
    Linear merge;  // (2 * dim) -> dim, bidirectional only

    struct Cache {
        std::vector<LstmLayer::Cache> fwd, bwd;
        Mat concat;  // 2 dim x T, bidirectional only
    };

    void init(int width, int num_layers, bool bidir, Rng& rng);
    Mat forward(const Mat& x, Cache& cache) const;
    Mat backward(const Cache& cache, const Mat& grad_out);
    void zero_grad();
    void collect(const std::string& prefix, std::vector<TensorRef>& out);
};

}  // namespace phaseforge

#endif  // PHASEFORGE_NN_HPP
