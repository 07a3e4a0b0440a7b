#pragma once

#include "vexel/common.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace vexel::nn {

/// Dense tensor of 64-bit reals. Training and tests run in f64; checkpoints
/// store f32.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c, double fill = 0.0)
        : shape{r, c}, data(r * c, fill) {}
    static Tensor scalar(double v) {
        Tensor t;
        t.shape = {1, 1};
        t.data = {v};
        return t;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }
    double item() const { return data.at(0); }
    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

/// Counter-based generator: value i depends only on (seed, i), so streams are
/// reproducible and platform-independent.
struct Rng {
    std::uint64_t seed = 0;
    std::uint64_t counter = 0;

    explicit Rng(std::uint64_t s) : seed(s) {}
    std::uint64_t next_u64();
    double uniform(); // [0,1)
    double normal();  // standard normal (Box-Muller)
    Tensor normal_tensor(std::size_t r, std::size_t c, double stddev = 1.0);
};

// --------------------------------------------------------------- autograd

class Node;
using Var = std::shared_ptr<Node>;

class Node {
public:
    Tensor value;
    Tensor grad; // allocated lazily, same shape as value
    bool requires_grad = false;
    std::vector<Var> parents;
    std::function<void(Node&)> backward_fn;
    std::string name; // set for parameters

    Tensor& ensure_grad();
};

Var constant(Tensor t);
Var param(Tensor t, std::string name = {});
/// Building block for custom ops (tests use it to model corrupted backwards).
Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b); // elementwise
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var matmul(const Var& a, const Var& b);
Var matmul_nt(const Var& a, const Var& b); // a @ b^T
Var add_rowvec(const Var& a, const Var& row);
Var mul_rowvec(const Var& a, const Var& row);
Var gelu(const Var& a);
Var exp(const Var& a);
Var square(const Var& a);
Var clamp(const Var& a, double lo, double hi); // zero gradient outside range
Var softmax_rows(const Var& a);
Var layer_norm_rows(const Var& a, double eps = 1e-5);
Var rope_rows(const Var& a); // rotary embedding, position = row index
Var gather_rows(const Var& table, std::vector<std::size_t> idx);
Var slice_cols(const Var& a, std::size_t c0, std::size_t c1);
Var concat_cols(const std::vector<Var>& parts);
Var sum_all(const Var& a);
Var mean_all(const Var& a);
/// Weighted mean over rows: sum_i w_i * sum_j a_ij / (sum_i w_i * cols).
Var masked_row_mean(const Var& a, std::vector<double> row_weights);

void backward(const Var& loss);

// --------------------------------------------------------------- parameters

struct ParamStore {
    std::vector<Var> params; // registration order
    std::map<std::string, Var> by_name;

    Var add(const std::string& name, Tensor init);
    const Var& get(const std::string& name) const;
    void zero_grad();
    /// Replaces parameter values from a checkpoint map; every parameter must
    /// be present with a matching shape.
    void load_values(const std::map<std::string, Tensor>& values);
    std::size_t count_scalars() const;
};

// --------------------------------------------------------------- layers

struct Linear {
    Var w; // in x out
    Var b; // 1 x out
};
Linear make_linear(ParamStore& ps, const std::string& prefix, std::size_t d_in, std::size_t d_out,
                   Rng& rng, double init_scale = -1.0 /* default 1/sqrt(d_in) */);
Var linear(const Var& x, const Linear& l);

struct Attention {
    Var wq, bq; // d_q x d
    Var wk, bk; // d_kv x d
    Var wv, bv; // d_kv x d
    Var wo, bo; // d x d
};
Attention make_attention(ParamStore& ps, const std::string& prefix, std::size_t d_q,
                         std::size_t d_kv, std::size_t d, Rng& rng);
/// Scaled dot-product attention over `heads` heads. Pass q_in == kv_in for
/// self-attention. With `rope`, rotary rotations are applied to q and k per
/// position before scoring.
Var multi_head_attention(const Var& q_in, const Var& kv_in, const Attention& p, int heads, bool rope);

// --------------------------------------------------------------- optimizer

struct AdamW {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.1;
    long step_count = 0;
    std::vector<Tensor> m, v;

    void init(const std::vector<Var>& params);
    /// One decoupled-weight-decay update; gradients are left untouched.
    void step(const std::vector<Var>& params, double lr);
};

/// Scales gradients so their global L2 norm is at most max_norm.
/// Returns the pre-clip norm.
double clip_grad_norm(const std::vector<Var>& params, double max_norm = 2.0);

/// Linear warmup to `peak`, then cosine decay to `floor_lr` at `total_steps`.
double lr_schedule(long step, long total_steps, long warmup = 2000, double peak = 3e-4,
                   double floor_lr = 1.5e-5);

// --------------------------------------------------------------- verification

struct GradCheckOptions {
    double eps = 1e-5;
    int samples_per_param = 8; // coordinates checked per tensor (<=0: all)
    std::uint64_t seed = 7;
};

/// Central-difference check of reverse-mode gradients. `make_loss` must build
/// a fresh scalar graph over `params` on every call. Returns
/// max_i |analytic_i - numeric_i| / max(|analytic_i|, |numeric_i|, 1e-8)
/// over the sampled coordinates.
double grad_check(const std::function<Var()>& make_loss, const std::vector<Var>& params,
                  GradCheckOptions opts = {});

} // namespace vexel::nn
