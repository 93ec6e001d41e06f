#pragma once

#include <string>

#include "qmrl/nn/params.hpp"
#include "qmrl/rng.hpp"

namespace qmrl::nn {

/// Element-wise logistic and tanh built on the vectorised exp; Eigen's tanh
/// for doubles is scalar and dominates LSTM time otherwise.
Mat sigmoid(const Mat& x);
Mat fast_tanh(const Mat& x);

/// Fills with U(-scale, scale).
void uniform_init(Mat& m, double scale, Rng& rng);

/// Fully connected layer y = W x + b on column batches.
class Dense {
  public:
    Dense() = default;
    Dense(ParamStore& store, const std::string& name, int in, int out, Rng& rng, double init_gain = 1.0);

    Mat forward(const ParamStore& store, const Mat& x, bool cache = true);
    /// Accumulates parameter gradients and returns d loss / d x.
    Mat backward(ParamStore& store, const Mat& dy) const;

    int in() const { return in_; }
    int out() const { return out_; }

  private:
    std::size_t w_ = 0;
    std::size_t b_ = 0;
    int in_ = 0;
    int out_ = 0;
    Mat x_;
};

class Relu {
  public:
    Mat forward(const Mat& x, bool cache = true);
    Mat backward(const Mat& dy) const;

  private:
    Mat mask_;
};

/// Inverted dropout: kept units are scaled by 1/(1-p) during training; the
/// identity in evaluation.
class Dropout {
  public:
    Dropout() = default;
    explicit Dropout(double p);

    Mat forward(const Mat& x, bool training, Rng& rng);
    Mat backward(const Mat& dy) const;
    double rate() const { return p_; }

  private:
    double p_ = 0.0;
    bool active_ = false;
    Mat mask_;
};

/// Single-layer LSTM over a batch of sequences.
///
/// Sequences are packed as a (input_size x T*B) matrix whose column t*B + b is
/// step t of sequence b. Gate order in the stacked weights is i, f, g, o.
class Lstm {
  public:
    Lstm() = default;
    Lstm(ParamStore& store, const std::string& name, int input_size, int hidden_size, Rng& rng);

    /// Runs the sequence and returns the final hidden state (H x B). With
    /// cache=false no activations are kept and backward is unavailable.
    Mat forward(const ParamStore& store, const Mat& x, int steps, bool cache = true);

    /// Hidden outputs of the last cached forward pass, (H x T*B).
    Mat outputs() const;

    /// Backpropagation through time. `d_last` is the gradient on the final
    /// hidden state; `d_all` (optional, H x T*B) adds per-step output
    /// gradients. Returns d loss / d x when want_dx is set.
    Mat backward(ParamStore& store, const Mat& d_last, const Mat* d_all = nullptr, bool want_dx = false) const;

    int input_size() const { return input_; }
    int hidden_size() const { return hidden_; }
    std::size_t wx_index() const { return wx_; }
    std::size_t wh_index() const { return wh_; }
    std::size_t bias_index() const { return b_; }

  private:
    std::size_t wx_ = 0;
    std::size_t wh_ = 0;
    std::size_t b_ = 0;
    int input_ = 0;
    int hidden_ = 0;

    int steps_ = 0;
    int batch_ = 0;
    Mat x_;
    Mat gates_;     // post-activation i, f, g, o per step
    Mat cells_;     // c_0 .. c_T
    Mat hiddens_;   // h_0 .. h_T
    Mat tanh_c_;    // tanh(c_1) .. tanh(c_T)
};

}    // namespace qmrl::nn
