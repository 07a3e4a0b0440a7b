#include "vexel/nn.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace vexel::nn {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_2d(const Tensor& t, const char* who) {
    if (t.shape.size() != 2) fail(Errc::shape_mismatch, std::string(who) + ": tensor must be 2-D");
}

void check_same(const Tensor& a, const Tensor& b, const char* who) {
    if (!a.same_shape(b)) fail(Errc::shape_mismatch, std::string(who) + ": shape mismatch");
}

} // namespace

// ----------------------------------------------------------------- rng

namespace {

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace

std::uint64_t Rng::next_u64() {
    ++counter;
    return mix64(seed + counter * 0x9E3779B97F4A7C15ull);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

Tensor Rng::normal_tensor(std::size_t r, std::size_t c, double stddev) {
    Tensor t(r, c);
    for (double& v : t.data) v = normal() * stddev;
    return t;
}

// ----------------------------------------------------------------- nodes

Tensor& Node::ensure_grad() {
    if (grad.data.size() != value.data.size()) {
        grad.shape = value.shape;
        grad.data.assign(value.data.size(), 0.0);
    }
    return grad;
}

Var constant(Tensor t) {
    auto n = std::make_shared<Node>();
    n->value = std::move(t);
    return n;
}

Var param(Tensor t, std::string name) {
    auto n = std::make_shared<Node>();
    n->value = std::move(t);
    n->requires_grad = true;
    n->name = std::move(name);
    return n;
}

Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    for (const auto& p : n->parents) {
        if (p->requires_grad) {
            n->requires_grad = true;
            break;
        }
    }
    if (n->requires_grad) n->backward_fn = std::move(backward);
    return n;
}

void backward(const Var& loss) {
    if (loss->value.numel() != 1) fail(Errc::shape_mismatch, "backward: loss must be scalar");
    // iterative topological order
    std::vector<Node*> order;
    std::vector<std::pair<Node*, std::size_t>> stack;
    std::set<Node*> visited;
    stack.emplace_back(loss.get(), 0);
    visited.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* parent = node->parents[idx].get();
            ++idx;
            if (parent->requires_grad && visited.insert(parent).second)
                stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    loss->ensure_grad().data[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->grad.numel() == n->value.numel()) n->backward_fn(*n);
    }
}

// ----------------------------------------------------------------- ops

namespace {

// shorthand for elementwise binary ops
Var binary_op(const Var& a, const Var& b, const char* who,
              const std::function<double(double, double)>& f,
              const std::function<void(Node&, Node&, Node&)>& bwd) {
    check_same(a->value, b->value, who);
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = f(a->value.data[i], b->value.data[i]);
    Var av = a, bv = b;
    return make_node(std::move(out), {a, b}, [av, bv, bwd](Node& n) { bwd(n, *av, *bv); });
}

} // namespace

Var add(const Var& a, const Var& b) {
    return binary_op(a, b, "add", [](double x, double y) { return x + y; },
                     [](Node& n, Node& pa, Node& pb) {
                         if (pa.requires_grad) {
                             auto& g = pa.ensure_grad();
                             for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += n.grad.data[i];
                         }
                         if (pb.requires_grad) {
                             auto& g = pb.ensure_grad();
                             for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += n.grad.data[i];
                         }
                     });
}

Var sub(const Var& a, const Var& b) {
    return binary_op(a, b, "sub", [](double x, double y) { return x - y; },
                     [](Node& n, Node& pa, Node& pb) {
                         if (pa.requires_grad) {
                             auto& g = pa.ensure_grad();
                             for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += n.grad.data[i];
                         }
                         if (pb.requires_grad) {
                             auto& g = pb.ensure_grad();
                             for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] -= n.grad.data[i];
                         }
                     });
}

Var mul(const Var& a, const Var& b) {
    return binary_op(a, b, "mul", [](double x, double y) { return x * y; },
                     [](Node& n, Node& pa, Node& pb) {
                         if (pa.requires_grad) {
                             auto& g = pa.ensure_grad();
                             for (std::size_t i = 0; i < g.data.size(); ++i)
                                 g.data[i] += n.grad.data[i] * pb.value.data[i];
                         }
                         if (pb.requires_grad) {
                             auto& g = pb.ensure_grad();
                             for (std::size_t i = 0; i < g.data.size(); ++i)
                                 g.data[i] += n.grad.data[i] * pa.value.data[i];
                         }
                     });
}

Var scale(const Var& a, double s) {
    Tensor out = a->value;
    for (double& v : out.data) v *= s;
    Var av = a;
    return make_node(std::move(out), {a}, [av, s](Node& n) {
        auto& g = av->ensure_grad();
        for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += n.grad.data[i] * s;
    });
}

Var add_scalar(const Var& a, double s) {
    Tensor out = a->value;
    for (double& v : out.data) v += s;
    Var av = a;
    return make_node(std::move(out), {a}, [av](Node& n) {
        auto& g = av->ensure_grad();
        for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += n.grad.data[i];
    });
}

namespace {

// C(m,n) += A(m,k) * B(k,n); cache-friendly ikj order
void gemm(const Tensor& a, const Tensor& b, Tensor& c) {
    std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = &a.data[i * k];
        double* crow = &c.data[i * n];
        for (std::size_t p = 0; p < k; ++p) {
            double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = &b.data[p * n];
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C(m,n) += A(m,k) * B(n,k)^T
void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c) {
    std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = &a.data[i * k];
        double* crow = &c.data[i * n];
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = &b.data[j * k];
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] += acc;
        }
    }
}

// C(k,n) += A(m,k)^T * B(m,n)
void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c) {
    std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = &a.data[i * k];
        const double* brow = &b.data[i * n];
        for (std::size_t p = 0; p < k; ++p) {
            double av = arow[p];
            if (av == 0.0) continue;
            double* crow = &c.data[p * n];
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

} // namespace

Var matmul(const Var& a, const Var& b) {
    check_2d(a->value, "matmul");
    check_2d(b->value, "matmul");
    if (a->value.cols() != b->value.rows()) fail(Errc::shape_mismatch, "matmul: inner dims differ");
    Tensor out(a->value.rows(), b->value.cols());
    gemm(a->value, b->value, out);
    Var av = a, bv = b;
    return make_node(std::move(out), {a, b}, [av, bv](Node& n) {
        if (av->requires_grad) gemm_nt(n.grad, bv->value, av->ensure_grad()); // dA += dC B^T
        if (bv->requires_grad) gemm_tn(av->value, n.grad, bv->ensure_grad()); // dB += A^T dC
    });
}

Var matmul_nt(const Var& a, const Var& b) {
    check_2d(a->value, "matmul_nt");
    check_2d(b->value, "matmul_nt");
    if (a->value.cols() != b->value.cols()) fail(Errc::shape_mismatch, "matmul_nt: inner dims differ");
    Tensor out(a->value.rows(), b->value.rows());
    gemm_nt(a->value, b->value, out);
    Var av = a, bv = b;
    return make_node(std::move(out), {a, b}, [av, bv](Node& n) {
        if (av->requires_grad) gemm(n.grad, bv->value, av->ensure_grad());    // dA += dC B
        if (bv->requires_grad) gemm_tn(n.grad, av->value, bv->ensure_grad()); // dB += dC^T A
    });
}

Var add_rowvec(const Var& a, const Var& row) {
    check_2d(a->value, "add_rowvec");
    if (row->value.rows() != 1 || row->value.cols() != a->value.cols())
        fail(Errc::shape_mismatch, "add_rowvec: row must be 1 x cols");
    Tensor out = a->value;
    std::size_t cols = out.cols();
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < cols; ++j) out.data[i * cols + j] += row->value.data[j];
    Var av = a, rv = row;
    return make_node(std::move(out), {a, row}, [av, rv](Node& n) {
        std::size_t cols = n.value.cols();
        if (av->requires_grad) {
            auto& g = av->ensure_grad();
            for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += n.grad.data[i];
        }
        if (rv->requires_grad) {
            auto& g = rv->ensure_grad();
            for (std::size_t i = 0; i < n.value.rows(); ++i)
                for (std::size_t j = 0; j < cols; ++j) g.data[j] += n.grad.data[i * cols + j];
        }
    });
}

Var mul_rowvec(const Var& a, const Var& row) {
    check_2d(a->value, "mul_rowvec");
    if (row->value.rows() != 1 || row->value.cols() != a->value.cols())
        fail(Errc::shape_mismatch, "mul_rowvec: row must be 1 x cols");
    Tensor out = a->value;
    std::size_t cols = out.cols();
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < cols; ++j) out.data[i * cols + j] *= row->value.data[j];
    Var av = a, rv = row;
    return make_node(std::move(out), {a, row}, [av, rv](Node& n) {
        std::size_t cols = n.value.cols();
        if (av->requires_grad) {
            auto& g = av->ensure_grad();
            for (std::size_t i = 0; i < n.value.rows(); ++i)
                for (std::size_t j = 0; j < cols; ++j)
                    g.data[i * cols + j] += n.grad.data[i * cols + j] * rv->value.data[j];
        }
        if (rv->requires_grad) {
            auto& g = rv->ensure_grad();
            for (std::size_t i = 0; i < n.value.rows(); ++i)
                for (std::size_t j = 0; j < cols; ++j)
                    g.data[j] += n.grad.data[i * cols + j] * av->value.data[i * cols + j];
        }
    });
}

Var gelu(const Var& a) {
    Tensor out = a->value;
    for (double& v : out.data) v = 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2));
    Var av = a;
    return make_node(std::move(out), {a}, [av](Node& n) {
        auto& g = av->ensure_grad();
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            double x = av->value.data[i];
            double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
            double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
            g.data[i] += n.grad.data[i] * (cdf + x * pdf);
        }
    });
}

Var exp(const Var& a) {
    Tensor out = a->value;
    for (double& v : out.data) v = std::exp(v);
    Var av = a;
    return make_node(std::move(out), {a}, [av](Node& n) {
        auto& g = av->ensure_grad();
        for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += n.grad.data[i] * n.value.data[i];
    });
}

Var square(const Var& a) {
    Tensor out = a->value;
    for (double& v : out.data) v = v * v;
    Var av = a;
    return make_node(std::move(out), {a}, [av](Node& n) {
        auto& g = av->ensure_grad();
        for (std::size_t i = 0; i < g.data.size(); ++i)
            g.data[i] += n.grad.data[i] * 2.0 * av->value.data[i];
    });
}

Var clamp(const Var& a, double lo, double hi) {
    Tensor out = a->value;
    for (double& v : out.data) v = std::clamp(v, lo, hi);
    Var av = a;
    return make_node(std::move(out), {a}, [av, lo, hi](Node& n) {
        auto& g = av->ensure_grad();
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            double x = av->value.data[i];
            if (x > lo && x < hi) g.data[i] += n.grad.data[i];
        }
    });
}

Var softmax_rows(const Var& a) {
    check_2d(a->value, "softmax_rows");
    Tensor out = a->value;
    std::size_t cols = out.cols();
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double* row = &out.data[i * cols];
        double mx = row[0];
        for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (std::size_t j = 0; j < cols; ++j) row[j] /= sum;
    }
    Var av = a;
    return make_node(std::move(out), {a}, [av](Node& n) {
        auto& g = av->ensure_grad();
        std::size_t cols = n.value.cols();
        for (std::size_t i = 0; i < n.value.rows(); ++i) {
            const double* y = &n.value.data[i * cols];
            const double* dy = &n.grad.data[i * cols];
            double dotv = 0.0;
            for (std::size_t j = 0; j < cols; ++j) dotv += y[j] * dy[j];
            for (std::size_t j = 0; j < cols; ++j) g.data[i * cols + j] += y[j] * (dy[j] - dotv);
        }
    });
}

Var layer_norm_rows(const Var& a, double eps) {
    check_2d(a->value, "layer_norm_rows");
    std::size_t rows = a->value.rows(), cols = a->value.cols();
    Tensor out(rows, cols);
    Tensor inv_std(rows, 1);
    for (std::size_t i = 0; i < rows; ++i) {
        const double* x = &a->value.data[i * cols];
        double mean = 0.0;
        for (std::size_t j = 0; j < cols; ++j) mean += x[j];
        mean /= static_cast<double>(cols);
        double var = 0.0;
        for (std::size_t j = 0; j < cols; ++j) var += (x[j] - mean) * (x[j] - mean);
        var /= static_cast<double>(cols);
        double is = 1.0 / std::sqrt(var + eps);
        inv_std.data[i] = is;
        for (std::size_t j = 0; j < cols; ++j) out.data[i * cols + j] = (x[j] - mean) * is;
    }
    Var av = a;
    auto istd = std::make_shared<Tensor>(std::move(inv_std));
    return make_node(std::move(out), {a}, [av, istd](Node& n) {
        auto& g = av->ensure_grad();
        std::size_t cols = n.value.cols();
        double inv_cols = 1.0 / static_cast<double>(cols);
        for (std::size_t i = 0; i < n.value.rows(); ++i) {
            const double* y = &n.value.data[i * cols];
            const double* dy = &n.grad.data[i * cols];
            double mean_dy = 0.0, mean_dyy = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
                mean_dy += dy[j];
                mean_dyy += dy[j] * y[j];
            }
            mean_dy *= inv_cols;
            mean_dyy *= inv_cols;
            double is = istd->data[i];
            for (std::size_t j = 0; j < cols; ++j)
                g.data[i * cols + j] += is * (dy[j] - mean_dy - y[j] * mean_dyy);
        }
    });
}

namespace {

void rope_rotate(const Tensor& in, Tensor& out, bool inverse) {
    std::size_t rows = in.rows(), cols = in.cols();
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j + 1 < cols; j += 2) {
            double theta = static_cast<double>(i) *
                           std::pow(10000.0, -static_cast<double>(j) / static_cast<double>(cols));
            double c = std::cos(theta), s = std::sin(theta);
            if (inverse) s = -s;
            double x = in.data[i * cols + j], y = in.data[i * cols + j + 1];
            out.data[i * cols + j] = x * c - y * s;
            out.data[i * cols + j + 1] = x * s + y * c;
        }
    }
}

} // namespace

Var rope_rows(const Var& a) {
    check_2d(a->value, "rope_rows");
    if (a->value.cols() % 2 != 0) fail(Errc::shape_mismatch, "rope_rows: width must be even");
    Tensor out(a->value.rows(), a->value.cols());
    rope_rotate(a->value, out, false);
    Var av = a;
    return make_node(std::move(out), {a}, [av](Node& n) {
        // rotation is orthogonal: pull the gradient back with the inverse rotation
        Tensor gin(n.grad.rows(), n.grad.cols());
        rope_rotate(n.grad, gin, true);
        auto& g = av->ensure_grad();
        for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += gin.data[i];
    });
}

Var gather_rows(const Var& table, std::vector<std::size_t> idx) {
    check_2d(table->value, "gather_rows");
    std::size_t cols = table->value.cols();
    Tensor out(idx.size(), cols);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= table->value.rows()) fail(Errc::unknown_index, "gather_rows: index out of range");
        std::copy_n(&table->value.data[idx[i] * cols], cols, &out.data[i * cols]);
    }
    Var tv = table;
    auto ids = std::make_shared<std::vector<std::size_t>>(std::move(idx));
    return make_node(std::move(out), {table}, [tv, ids](Node& n) {
        auto& g = tv->ensure_grad();
        std::size_t cols = n.value.cols();
        for (std::size_t i = 0; i < ids->size(); ++i)
            for (std::size_t j = 0; j < cols; ++j)
                g.data[(*ids)[i] * cols + j] += n.grad.data[i * cols + j];
    });
}

Var slice_cols(const Var& a, std::size_t c0, std::size_t c1) {
    check_2d(a->value, "slice_cols");
    if (c0 >= c1 || c1 > a->value.cols()) fail(Errc::shape_mismatch, "slice_cols: bad range");
    std::size_t rows = a->value.rows(), cols = a->value.cols(), w = c1 - c0;
    Tensor out(rows, w);
    for (std::size_t i = 0; i < rows; ++i)
        std::copy_n(&a->value.data[i * cols + c0], w, &out.data[i * w]);
    Var av = a;
    return make_node(std::move(out), {a}, [av, c0, w](Node& n) {
        auto& g = av->ensure_grad();
        std::size_t cols = av->value.cols();
        for (std::size_t i = 0; i < n.value.rows(); ++i)
            for (std::size_t j = 0; j < w; ++j) g.data[i * cols + c0 + j] += n.grad.data[i * w + j];
    });
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) fail(Errc::shape_mismatch, "concat_cols: empty");
    std::size_t rows = parts[0]->value.rows();
    std::size_t total = 0;
    for (const auto& p : parts) {
        check_2d(p->value, "concat_cols");
        if (p->value.rows() != rows) fail(Errc::shape_mismatch, "concat_cols: row mismatch");
        total += p->value.cols();
    }
    Tensor out(rows, total);
    std::size_t off = 0;
    for (const auto& p : parts) {
        std::size_t w = p->value.cols();
        for (std::size_t i = 0; i < rows; ++i)
            std::copy_n(&p->value.data[i * w], w, &out.data[i * total + off]);
        off += w;
    }
    auto held = std::make_shared<std::vector<Var>>(parts);
    return make_node(std::move(out), parts, [held, total](Node& n) {
        std::size_t off = 0;
        for (const auto& p : *held) {
            std::size_t w = p->value.cols();
            if (p->requires_grad) {
                auto& g = p->ensure_grad();
                for (std::size_t i = 0; i < n.value.rows(); ++i)
                    for (std::size_t j = 0; j < w; ++j) g.data[i * w + j] += n.grad.data[i * total + off + j];
            }
            off += w;
        }
    });
}

Var sum_all(const Var& a) {
    double s = 0.0;
    for (double v : a->value.data) s += v;
    Var av = a;
    return make_node(Tensor::scalar(s), {a}, [av](Node& n) {
        auto& g = av->ensure_grad();
        double gv = n.grad.data[0];
        for (double& x : g.data) x += gv;
    });
}

Var mean_all(const Var& a) {
    double inv = 1.0 / static_cast<double>(a->value.numel());
    double s = 0.0;
    for (double v : a->value.data) s += v;
    Var av = a;
    return make_node(Tensor::scalar(s * inv), {a}, [av, inv](Node& n) {
        auto& g = av->ensure_grad();
        double gv = n.grad.data[0] * inv;
        for (double& x : g.data) x += gv;
    });
}

Var masked_row_mean(const Var& a, std::vector<double> row_weights) {
    check_2d(a->value, "masked_row_mean");
    if (row_weights.size() != a->value.rows())
        fail(Errc::shape_mismatch, "masked_row_mean: weight count != rows");
    std::size_t cols = a->value.cols();
    double wsum = 0.0;
    for (double w : row_weights) wsum += w;
    if (wsum <= 0.0) fail(Errc::shape_mismatch, "masked_row_mean: empty mask");
    double denom = wsum * static_cast<double>(cols);
    double acc = 0.0;
    for (std::size_t i = 0; i < a->value.rows(); ++i) {
        if (row_weights[i] == 0.0) continue;
        const double* row = &a->value.data[i * cols];
        double rs = 0.0;
        for (std::size_t j = 0; j < cols; ++j) rs += row[j];
        acc += row_weights[i] * rs;
    }
    Var av = a;
    auto wts = std::make_shared<std::vector<double>>(std::move(row_weights));
    return make_node(Tensor::scalar(acc / denom), {a}, [av, wts, denom](Node& n) {
        auto& g = av->ensure_grad();
        std::size_t cols = av->value.cols();
        double gv = n.grad.data[0] / denom;
        for (std::size_t i = 0; i < av->value.rows(); ++i) {
            double w = (*wts)[i];
            if (w == 0.0) continue;
            for (std::size_t j = 0; j < cols; ++j) g.data[i * cols + j] += gv * w;
        }
    });
}

// ----------------------------------------------------------------- params

Var ParamStore::add(const std::string& name, Tensor init) {
    if (by_name.count(name)) fail(Errc::bad_checkpoint, "duplicate parameter name: " + name);
    Var p = param(std::move(init), name);
    params.push_back(p);
    by_name[name] = p;
    return p;
}

const Var& ParamStore::get(const std::string& name) const {
    auto it = by_name.find(name);
    if (it == by_name.end()) fail(Errc::bad_checkpoint, "no parameter named " + name);
    return it->second;
}

void ParamStore::zero_grad() {
    for (auto& p : params) {
        if (p->grad.numel()) std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
    }
}

void ParamStore::load_values(const std::map<std::string, Tensor>& values) {
    for (auto& p : params) {
        auto it = values.find(p->name);
        if (it == values.end()) fail(Errc::bad_checkpoint, "checkpoint missing tensor " + p->name);
        if (!it->second.same_shape(p->value))
            fail(Errc::bad_checkpoint, "checkpoint tensor " + p->name + " has wrong shape");
        p->value = it->second;
    }
}

std::size_t ParamStore::count_scalars() const {
    std::size_t n = 0;
    for (const auto& p : params) n += p->value.numel();
    return n;
}

// ----------------------------------------------------------------- layers

Linear make_linear(ParamStore& ps, const std::string& prefix, std::size_t d_in, std::size_t d_out,
                   Rng& rng, double init_scale) {
    if (init_scale < 0) init_scale = 1.0 / std::sqrt(static_cast<double>(d_in));
    Linear l;
    l.w = ps.add(prefix + ".w", rng.normal_tensor(d_in, d_out, init_scale));
    l.b = ps.add(prefix + ".b", Tensor(1, d_out));
    return l;
}

Var linear(const Var& x, const Linear& l) { return add_rowvec(matmul(x, l.w), l.b); }

Attention make_attention(ParamStore& ps, const std::string& prefix, std::size_t d_q,
                         std::size_t d_kv, std::size_t d, Rng& rng) {
    Attention a;
    double sq = 1.0 / std::sqrt(static_cast<double>(d_q));
    double skv = 1.0 / std::sqrt(static_cast<double>(d_kv));
    double sd = 1.0 / std::sqrt(static_cast<double>(d));
    a.wq = ps.add(prefix + ".wq", rng.normal_tensor(d_q, d, sq));
    a.bq = ps.add(prefix + ".bq", Tensor(1, d));
    a.wk = ps.add(prefix + ".wk", rng.normal_tensor(d_kv, d, skv));
    a.bk = ps.add(prefix + ".bk", Tensor(1, d));
    a.wv = ps.add(prefix + ".wv", rng.normal_tensor(d_kv, d, skv));
    a.bv = ps.add(prefix + ".bv", Tensor(1, d));
    a.wo = ps.add(prefix + ".wo", rng.normal_tensor(d, d, sd));
    a.bo = ps.add(prefix + ".bo", Tensor(1, d));
    return a;
}

Var multi_head_attention(const Var& q_in, const Var& kv_in, const Attention& p, int heads, bool rope) {
    std::size_t d = p.wq->value.cols();
    if (heads <= 0 || d % static_cast<std::size_t>(heads) != 0)
        fail(Errc::shape_mismatch, "attention: model dim not divisible by heads");
    std::size_t hd = d / static_cast<std::size_t>(heads);
    Var q = add_rowvec(matmul(q_in, p.wq), p.bq);
    Var k = add_rowvec(matmul(kv_in, p.wk), p.bk);
    Var v = add_rowvec(matmul(kv_in, p.wv), p.bv);
    double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
    std::vector<Var> outs;
    outs.reserve(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        std::size_t c0 = static_cast<std::size_t>(h) * hd;
        Var qh = slice_cols(q, c0, c0 + hd);
        Var kh = slice_cols(k, c0, c0 + hd);
        Var vh = slice_cols(v, c0, c0 + hd);
        if (rope) {
            qh = rope_rows(qh);
            kh = rope_rows(kh);
        }
        Var scores = scale(matmul_nt(qh, kh), inv_sqrt);
        Var attn = softmax_rows(scores);
        outs.push_back(matmul(attn, vh));
    }
    Var merged = heads == 1 ? outs[0] : concat_cols(outs);
    return add_rowvec(matmul(merged, p.wo), p.bo);
}

// ----------------------------------------------------------------- optimizer

void AdamW::init(const std::vector<Var>& params) {
    step_count = 0;
    m.clear();
    v.clear();
    for (const auto& p : params) {
        Tensor z;
        z.shape = p->value.shape;
        z.data.assign(p->value.numel(), 0.0);
        m.push_back(z);
        v.push_back(std::move(z));
    }
}

void AdamW::step(const std::vector<Var>& params, double lr) {
    if (m.size() != params.size()) fail(Errc::shape_mismatch, "AdamW: call init() first");
    ++step_count;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        if (p->grad.numel() != p->value.numel()) p->ensure_grad();
        auto& theta = p->value.data;
        const auto& g = p->grad.data;
        auto& mi = m[i].data;
        auto& vi = v[i].data;
        for (std::size_t j = 0; j < theta.size(); ++j) {
            theta[j] -= lr * weight_decay * theta[j]; // decoupled decay
            mi[j] = beta1 * mi[j] + (1.0 - beta1) * g[j];
            vi[j] = beta2 * vi[j] + (1.0 - beta2) * g[j] * g[j];
            double mhat = mi[j] / bc1;
            double vhat = vi[j] / bc2;
            theta[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

double clip_grad_norm(const std::vector<Var>& params, double max_norm) {
    double total = 0.0;
    for (const auto& p : params) {
        if (p->grad.numel() != p->value.numel()) continue;
        for (double g : p->grad.data) total += g * g;
    }
    double norm = std::sqrt(total);
    if (norm > max_norm && norm > 0.0) {
        double s = max_norm / norm;
        for (const auto& p : params) {
            if (p->grad.numel() != p->value.numel()) continue;
            for (double& g : p->grad.data) g *= s;
        }
    }
    return norm;
}

double lr_schedule(long step, long total_steps, long warmup, double peak, double floor_lr) {
    if (step < 0) fail(Errc::shape_mismatch, "lr_schedule: negative step");
    if (warmup > 0 && step <= warmup)
        return peak * static_cast<double>(step) / static_cast<double>(warmup);
    if (step >= total_steps) return floor_lr;
    double progress = static_cast<double>(step - warmup) / static_cast<double>(total_steps - warmup);
    return floor_lr + (peak - floor_lr) * 0.5 * (1.0 + std::cos(kPi * progress));
}

// ----------------------------------------------------------------- grad check

double grad_check(const std::function<Var()>& make_loss, const std::vector<Var>& params,
                  GradCheckOptions opts) {
    for (const auto& p : params) {
        p->ensure_grad();
        std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
    }
    backward(make_loss());
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p->grad.data);

    Rng rng(opts.seed);
    double max_rel = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi];
        std::size_t n = p->value.numel();
        std::vector<std::size_t> coords;
        if (opts.samples_per_param <= 0 || static_cast<std::size_t>(opts.samples_per_param) >= n) {
            coords.resize(n);
            for (std::size_t i = 0; i < n; ++i) coords[i] = i;
        } else {
            for (int s = 0; s < opts.samples_per_param; ++s)
                coords.push_back(rng.next_u64() % n);
        }
        for (std::size_t ci : coords) {
            double old = p->value.data[ci];
            p->value.data[ci] = old + opts.eps;
            double lp = make_loss()->value.item();
            p->value.data[ci] = old - opts.eps;
            double lm = make_loss()->value.item();
            p->value.data[ci] = old;
            double numeric = (lp - lm) / (2.0 * opts.eps);
            double a = analytic[pi][ci];
            double rel = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

} // namespace vexel::nn
