#include "phaseforge/nn.hpp"

namespace phaseforge {

namespace {

void fill_uniform(double* data, long size, double bound, Rng& rng) {
    for (long i = 0; i < size; ++i) data[i] = rng.uniform(-bound, bound);
}

Mat sigmoid(const Mat& x) { return ((-x.array()).exp() + 1.0).inverse().matrix(); }

void collect_tensor(const std::string& name, Mat& value, Mat& grad,
                    std::vector<TensorRef>& out) {
    out.push_back({name, value.data(), grad.data(), value.size()});
}

void collect_tensor(const std::string& name, Vec& value, Vec& grad,
                    std::vector<TensorRef>& out) {
    out.push_back({name, value.data(), grad.data(), value.size()});
}

}  // namespace

// ---------------------------------------------------------------- Linear

void Linear::init(int in_dim, int out_dim, Rng& rng) {
    weight.resize(out_dim, in_dim);
    bias = Vec::Zero(out_dim);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    fill_uniform(weight.data(), weight.size(), bound, rng);
    fill_uniform(bias.data(), bias.size(), bound, rng);
    zero_grad();
}

void Linear::init_identity(int in_dim, int out_dim) {
    weight = Mat::Zero(out_dim, in_dim);
    weight.topLeftCorner(std::min(in_dim, out_dim), std::min(in_dim, out_dim)).setIdentity();
    bias = Vec::Zero(out_dim);
    zero_grad();
}

Mat Linear::forward(const Mat& x) const { return (weight * x).colwise() + bias; }

Mat Linear::backward(const Mat& x, const Mat& grad_out) {
    weight_grad += grad_out * x.transpose();
    bias_grad += grad_out.rowwise().sum();
    return weight.transpose() * grad_out;
}

void Linear::zero_grad() {
    weight_grad = Mat::Zero(weight.rows(), weight.cols());
    bias_grad = Vec::Zero(bias.size());
}

void Linear::collect(const std::string& prefix, std::vector<TensorRef>& out) {
    collect_tensor(prefix + ".weight", weight, weight_grad, out);
    collect_tensor(prefix + ".bias", bias, bias_grad, out);
}

// ---------------------------------------------------------------- Conv1d

void Conv1d::init(int in_ch, int out_ch, int kernel_size, int stride_len, Rng& rng) {
    in_channels = in_ch;
    out_channels = out_ch;
    kernel = kernel_size;
    stride = stride_len;
    weight.resize(out_ch, in_ch * kernel_size);
    bias.resize(out_ch);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch * kernel_size));
    fill_uniform(weight.data(), weight.size(), bound, rng);
    fill_uniform(bias.data(), bias.size(), bound, rng);
    zero_grad();
}

Mat Conv1d::forward(const Mat& x) const {
    const long frames = output_frames(x.cols());
    Mat patches = Mat::Zero(static_cast<long>(in_channels) * kernel, frames);
    for (long t = 0; t < frames; ++t) {
        const long start = t * stride - pad_left;
        for (int j = 0; j < kernel; ++j) {
            const long src = start + j;
            if (src < 0 || src >= x.cols()) continue;
            for (int ci = 0; ci < in_channels; ++ci)
                patches(static_cast<long>(ci) * kernel + j, t) = x(ci, src);
        }
    }
    return (weight * patches).colwise() + bias;
}

Mat Conv1d::backward(const Mat& x, const Mat& grad_out) {
    const long frames = grad_out.cols();
    Mat patches = Mat::Zero(static_cast<long>(in_channels) * kernel, frames);
    for (long t = 0; t < frames; ++t) {
        const long start = t * stride - pad_left;
        for (int j = 0; j < kernel; ++j) {
            const long src = start + j;
            if (src < 0 || src >= x.cols()) continue;
            for (int ci = 0; ci < in_channels; ++ci)
                patches(static_cast<long>(ci) * kernel + j, t) = x(ci, src);
        }
    }
    weight_grad += grad_out * patches.transpose();
    bias_grad += grad_out.rowwise().sum();

    const Mat patch_grad = weight.transpose() * grad_out;
    Mat grad_x = Mat::Zero(x.rows(), x.cols());
    for (long t = 0; t < frames; ++t) {
        const long start = t * stride - pad_left;
        for (int j = 0; j < kernel; ++j) {
            const long src = start + j;
            if (src < 0 || src >= x.cols()) continue;
            for (int ci = 0; ci < in_channels; ++ci)
                grad_x(ci, src) += patch_grad(static_cast<long>(ci) * kernel + j, t);
        }
    }
    return grad_x;
}

void Conv1d::zero_grad() {
    weight_grad = Mat::Zero(weight.rows(), weight.cols());
    bias_grad = Vec::Zero(bias.size());
}

void Conv1d::collect(const std::string& prefix, std::vector<TensorRef>& out) {
    collect_tensor(prefix + ".weight", weight, weight_grad, out);
    collect_tensor(prefix + ".bias", bias, bias_grad, out);
}

// ------------------------------------------------------- ConvTranspose1d

void ConvTranspose1d::init(int in_ch, int out_ch, int kernel_size, int stride_len, Rng& rng) {
    in_channels = in_ch;
    out_channels = out_ch;
    kernel = kernel_size;
    stride = stride_len;
    weight.resize(static_cast<long>(out_ch) * kernel_size, in_ch);
    bias.resize(out_ch);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch * kernel_size));
    fill_uniform(weight.data(), weight.size(), bound, rng);
    fill_uniform(bias.data(), bias.size(), bound, rng);
    zero_grad();
}

Mat ConvTranspose1d::forward(const Mat& x) const {
    const long frames = x.cols();
    const long full_len = (frames - 1) * stride + kernel;
    const Mat expanded = weight * x;  // (out*kernel) x frames
    Mat full = Mat::Zero(out_channels, full_len);
    for (long t = 0; t < frames; ++t) {
        for (int j = 0; j < kernel; ++j)
            for (int co = 0; co < out_channels; ++co)
                full(co, t * stride + j) += expanded(static_cast<long>(co) * kernel + j, t);
    }
    Mat out = full.middleCols(trim_left, output_length(frames));
    out.colwise() += bias;
    return out;
}

Mat ConvTranspose1d::backward(const Mat& x, const Mat& grad_out) {
    const long frames = x.cols();
    const long full_len = (frames - 1) * stride + kernel;
    Mat grad_full = Mat::Zero(out_channels, full_len);
    grad_full.middleCols(trim_left, grad_out.cols()) = grad_out;
    bias_grad += grad_out.rowwise().sum();

    Mat grad_expanded = Mat::Zero(static_cast<long>(out_channels) * kernel, frames);
    for (long t = 0; t < frames; ++t) {
        for (int j = 0; j < kernel; ++j)
            for (int co = 0; co < out_channels; ++co)
                grad_expanded(static_cast<long>(co) * kernel + j, t) = grad_full(co, t * stride + j);
    }
    weight_grad += grad_expanded * x.transpose();
    return weight.transpose() * grad_expanded;
}

void ConvTranspose1d::zero_grad() {
    weight_grad = Mat::Zero(weight.rows(), weight.cols());
    bias_grad = Vec::Zero(bias.size());
}

void ConvTranspose1d::collect(const std::string& prefix, std::vector<TensorRef>& out) {
    collect_tensor(prefix + ".weight", weight, weight_grad, out);
    collect_tensor(prefix + ".bias", bias, bias_grad, out);
}

// ------------------------------------------------------------ activations

Mat glu(const Mat& x) {
    const long half = x.rows() / 2;
    return x.topRows(half).cwiseProduct(sigmoid(x.bottomRows(half)));
}

Mat glu_backward(const Mat& x, const Mat& grad_out) {
    const long half = x.rows() / 2;
    const Mat gate = sigmoid(x.bottomRows(half));
    Mat grad(x.rows(), x.cols());
    grad.topRows(half) = grad_out.cwiseProduct(gate);
    grad.bottomRows(half) = grad_out.cwiseProduct(x.topRows(half))
                                .cwiseProduct(gate)
                                .cwiseProduct((1.0 - gate.array()).matrix());
    return grad;
}

Mat relu(const Mat& x) { return x.cwiseMax(0.0); }

Mat relu_backward(const Mat& x, const Mat& grad_out) {
    return (x.array() > 0.0).select(grad_out, Mat::Zero(x.rows(), x.cols()));
}

// -------------------------------------------------------------- LstmLayer

void LstmLayer::init(int in_dim, int hid_dim, Rng& rng) {
    input_dim = in_dim;
    hidden_dim = hid_dim;
    w_input.resize(4 * hid_dim, in_dim);
    w_recur.resize(4 * hid_dim, hid_dim);
    bias.resize(4 * hid_dim);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hid_dim));
    fill_uniform(w_input.data(), w_input.size(), bound, rng);
    fill_uniform(w_recur.data(), w_recur.size(), bound, rng);
    fill_uniform(bias.data(), bias.size(), bound, rng);
    zero_grad();
}

Mat LstmLayer::forward(const Mat& x, Cache& cache) const {
    const long steps = x.cols();
    const int H = hidden_dim;
    cache.x = x;
    cache.gate_i.resize(H, steps);
    cache.gate_f.resize(H, steps);
    cache.gate_g.resize(H, steps);
    cache.gate_o.resize(H, steps);
    cache.cell.resize(H, steps);
    cache.tanh_cell.resize(H, steps);
    cache.hidden.resize(H, steps);

    Vec h = Vec::Zero(H), c = Vec::Zero(H);
    for (long t = 0; t < steps; ++t) {
        Vec pre = w_input * x.col(t) + w_recur * h + bias;
        const auto i = sigmoid(pre.segment(0, H));
        const auto f = sigmoid(pre.segment(H, H));
        const Vec g = pre.segment(2 * H, H).array().tanh();
        const auto o = sigmoid(pre.segment(3 * H, H));
        c = f.cwiseProduct(c) + i.cwiseProduct(g);
        const Vec tc = c.array().tanh();
        h = o.cwiseProduct(tc);
        cache.gate_i.col(t) = i;
        cache.gate_f.col(t) = f;
        cache.gate_g.col(t) = g;
        cache.gate_o.col(t) = o;
        cache.cell.col(t) = c;
        cache.tanh_cell.col(t) = tc;
        cache.hidden.col(t) = h;
    }
    return cache.hidden;
}

Mat LstmLayer::backward(const Cache& cache, const Mat& grad_out) {
    const long steps = cache.x.cols();
    const int H = hidden_dim;
    Mat grad_x = Mat::Zero(cache.x.rows(), steps);
    Vec dh_next = Vec::Zero(H), dc_next = Vec::Zero(H);

    for (long t = steps - 1; t >= 0; --t) {
        const Vec dh = grad_out.col(t) + dh_next;
        const Vec i = cache.gate_i.col(t), f = cache.gate_f.col(t);
        const Vec g = cache.gate_g.col(t), o = cache.gate_o.col(t);
        const Vec tc = cache.tanh_cell.col(t);
        const Vec c_prev = (t > 0) ? Vec(cache.cell.col(t - 1)) : Vec(Vec::Zero(H));

        const Vec dc = dh.cwiseProduct(o).cwiseProduct((1.0 - tc.array().square()).matrix()) + dc_next;
        Vec dpre(4 * H);
        dpre.segment(0, H) =
            dc.cwiseProduct(g).cwiseProduct(i).cwiseProduct((1.0 - i.array()).matrix());
        dpre.segment(H, H) =
            dc.cwiseProduct(c_prev).cwiseProduct(f).cwiseProduct((1.0 - f.array()).matrix());
        dpre.segment(2 * H, H) = dc.cwiseProduct(i).cwiseProduct((1.0 - g.array().square()).matrix());
        dpre.segment(3 * H, H) =
            dh.cwiseProduct(tc).cwiseProduct(o).cwiseProduct((1.0 - o.array()).matrix());

        w_input_grad += dpre * cache.x.col(t).transpose();
        if (t > 0) w_recur_grad += dpre * cache.hidden.col(t - 1).transpose();
        bias_grad += dpre;
        grad_x.col(t) = w_input.transpose() * dpre;
        dh_next = w_recur.transpose() * dpre;
        dc_next = dc.cwiseProduct(f);
    }
    return grad_x;
}

void LstmLayer::zero_grad() {
    w_input_grad = Mat::Zero(w_input.rows(), w_input.cols());
    w_recur_grad = Mat::Zero(w_recur.rows(), w_recur.cols());
    bias_grad = Vec::Zero(bias.size());
}

void LstmLayer::collect(const std::string& prefix, std::vector<TensorRef>& out) {
    collect_tensor(prefix + ".w_input", w_input, w_input_grad, out);
    collect_tensor(prefix + ".w_recur", w_recur, w_recur_grad, out);
    collect_tensor(prefix + ".bias", bias, bias_grad, out);
}

// ---------------------------------------------------------- SequenceModule

void SequenceModule::init(int width, int num_layers, bool bidir, Rng& rng) {
    bidirectional = bidir;
    dim = width;
    fwd_stack.resize(num_layers);
    for (auto& layer : fwd_stack) layer.init(width, width, rng);
    if (bidir) {
        bwd_stack.resize(num_layers);
        for (auto& layer : bwd_stack) layer.init(width, width, rng);
        merge.init(2 * width, width, rng);
    } else {
        bwd_stack.clear();
    }
}

namespace {
Mat reverse_cols(const Mat& x) { return x.rowwise().reverse(); }
}  // namespace

Mat SequenceModule::forward(const Mat& x, Cache& cache) const {
    cache.fwd.resize(fwd_stack.size());
    Mat h = x;
    for (size_t l = 0; l < fwd_stack.size(); ++l) h = fwd_stack[l].forward(h, cache.fwd[l]);
    if (!bidirectional) return h;

    cache.bwd.resize(bwd_stack.size());
    Mat r = reverse_cols(x);
    for (size_t l = 0; l < bwd_stack.size(); ++l) r = bwd_stack[l].forward(r, cache.bwd[l]);
    cache.concat.resize(2 * dim, x.cols());
    cache.concat.topRows(dim) = h;
    cache.concat.bottomRows(dim) = reverse_cols(r);
    return merge.forward(cache.concat);
}

Mat SequenceModule::backward(const Cache& cache, const Mat& grad_out) {
    Mat grad_fwd_top, grad_bwd_top;
    if (bidirectional) {
        const Mat grad_concat = merge.backward(cache.concat, grad_out);
        grad_fwd_top = grad_concat.topRows(dim);
        grad_bwd_top = reverse_cols(Mat(grad_concat.bottomRows(dim)));
    } else {
        grad_fwd_top = grad_out;
    }

    Mat g = grad_fwd_top;
    for (size_t l = fwd_stack.size(); l-- > 0;) g = fwd_stack[l].backward(cache.fwd[l], g);
    if (!bidirectional) return g;

    Mat gb = grad_bwd_top;
    for (size_t l = bwd_stack.size(); l-- > 0;) gb = bwd_stack[l].backward(cache.bwd[l], gb);
    return g + reverse_cols(gb);
}

void SequenceModule::zero_grad() {
    for (auto& layer : fwd_stack) layer.zero_grad();
    for (auto& layer : bwd_stack) layer.zero_grad();
    if (bidirectional) merge.zero_grad();
}

void SequenceModule::collect(const std::string& prefix, std::vector<TensorRef>& out) {
    for (size_t l = 0; l < fwd_stack.size(); ++l)
        fwd_stack[l].collect(prefix + ".fwd." + std::to_string(l), out);
    for (size_t l = 0; l < bwd_stack.size(); ++l)
        bwd_stack[l].collect(prefix + ".bwd." + std::to_string(l), out);
    if (bidirectional) merge.collect(prefix + ".merge", out);
}

}  // namespace phaseforge
