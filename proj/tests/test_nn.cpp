#include "vexel/checkpoint.hpp"
#include "vexel/nn.hpp"

#include "helpers.hpp"

#include <cmath>
#include <doctest.h>

using namespace vexel;
using nn::Tensor;
using nn::Var;

TEST_CASE("softmax: constant rows become uniform, rows sum to one") {
    Tensor t(3, 5, 2.5);
    Var s = nn::softmax_rows(nn::constant(t));
    for (std::size_t i = 0; i < 3; ++i) {
        double sum = 0;
        for (std::size_t j = 0; j < 5; ++j) {
            CHECK(s->value.at(i, j) == doctest::Approx(0.2).epsilon(1e-12));
            CHECK(s->value.at(i, j) >= 0.0);
            sum += s->value.at(i, j);
        }
        CHECK(std::fabs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("layer_norm: rows have zero mean and unit variance") {
    nn::Rng rng(1);
    Var x = nn::constant(rng.normal_tensor(4, 16, 3.0));
    Var y = nn::layer_norm_rows(x, 1e-10);
    for (std::size_t i = 0; i < 4; ++i) {
        double mean = 0, var = 0;
        for (std::size_t j = 0; j < 16; ++j) mean += y->value.at(i, j);
        mean /= 16;
        for (std::size_t j = 0; j < 16; ++j) {
            double d = y->value.at(i, j) - mean;
            var += d * d;
        }
        var /= 16;
        CHECK(std::fabs(mean) < 1e-10);
        CHECK(std::fabs(var - 1.0) < 1e-6);
    }
}

TEST_CASE("linear: identity weight and zero bias is the identity") {
    nn::ParamStore ps;
    nn::Rng rng(2);
    nn::Linear l = nn::make_linear(ps, "id", 4, 4, rng);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) l.w->value.at(i, j) = i == j ? 1.0 : 0.0;
    Tensor x = rng.normal_tensor(3, 4);
    Var y = nn::linear(nn::constant(x), l);
    CHECK(y->value.data == x.data);
}

TEST_CASE("attention: single token self-attention returns its value projection") {
    nn::ParamStore ps;
    nn::Rng rng(3);
    nn::Attention a = nn::make_attention(ps, "attn", 8, 8, 8, rng);
    Tensor x = rng.normal_tensor(1, 8);
    Var out = nn::multi_head_attention(nn::constant(x), nn::constant(x), a, 2, false);
    // softmax over one key is 1, so out = (x Wv + bv) Wo + bo
    Var v = nn::add_rowvec(nn::matmul(nn::constant(x), a.wv), a.bv);
    Var expect = nn::add_rowvec(nn::matmul(v, a.wo), a.bo);
    for (std::size_t j = 0; j < 8; ++j)
        CHECK(out->value.at(0, j) == doctest::Approx(expect->value.at(0, j)).epsilon(1e-12));
}

TEST_CASE("rope: position zero is the identity rotation") {
    nn::Rng rng(4);
    Tensor x = rng.normal_tensor(3, 8);
    Var y = nn::rope_rows(nn::constant(x));
    for (std::size_t j = 0; j < 8; ++j) CHECK(y->value.at(0, j) == x.at(0, j));
    // later rows are rotated
    bool changed = false;
    for (std::size_t j = 0; j < 8; ++j)
        if (y->value.at(2, j) != x.at(2, j)) changed = true;
    CHECK(changed);
}

TEST_CASE("rope: attention logits depend only on relative offset") {
    // content-constant q/k rows: logits(m, n) must be a function of m-n
    nn::Rng rng(5);
    Tensor row = rng.normal_tensor(1, 8);
    Tensor qk(9, 8);
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = 0; j < 8; ++j) qk.at(i, j) = row.at(0, j);
    Var rot = nn::rope_rows(nn::constant(qk));
    Var logits = nn::matmul_nt(rot, rot);
    for (int offset = -2; offset <= 2; ++offset) {
        double ref = logits->value.at(4, 4 + offset);
        for (int m = 3; m <= 5; ++m) {
            CHECK(logits->value.at(m, m + offset) == doctest::Approx(ref).epsilon(1e-9));
        }
    }
}

TEST_CASE("adamw: first step moves by about lr against unit gradient") {
    nn::ParamStore ps;
    Var theta = ps.add("theta", Tensor(1, 1, 0.0));
    theta->ensure_grad().data[0] = 1.0;
    nn::AdamW opt;
    opt.init(ps.params);
    opt.step(ps.params, 1e-3);
    CHECK(theta->value.data[0] == doctest::Approx(-1e-3).epsilon(1e-6));
}

TEST_CASE("adamw: zero gradient and zero decay leave parameters unchanged") {
    nn::ParamStore ps;
    Var theta = ps.add("theta", Tensor(2, 2, 1.5));
    theta->ensure_grad();
    nn::AdamW opt;
    opt.weight_decay = 0.0;
    opt.init(ps.params);
    opt.step(ps.params, 1e-2);
    for (double v : theta->value.data) CHECK(v == 1.5);
}

TEST_CASE("adamw: identical runs are bit-identical") {
    auto run = []() {
        nn::ParamStore ps;
        nn::Rng rng(17);
        Var w = ps.add("w", rng.normal_tensor(4, 4));
        nn::AdamW opt;
        opt.init(ps.params);
        for (int s = 0; s < 25; ++s) {
            ps.zero_grad();
            Var loss = nn::mean_all(nn::square(w));
            nn::backward(loss);
            nn::clip_grad_norm(ps.params, 2.0);
            opt.step(ps.params, 1e-2);
        }
        return w->value.data;
    };
    CHECK(run() == run());
}

TEST_CASE("clip_grad_norm: scales by half at norm 4, leaves norm 1 alone") {
    nn::ParamStore ps;
    Var a = ps.add("a", Tensor(1, 1));
    a->ensure_grad().data[0] = 4.0;
    double norm = nn::clip_grad_norm(ps.params, 2.0);
    CHECK(norm == 4.0);
    CHECK(a->grad.data[0] == 2.0);

    a->grad.data[0] = 1.0;
    nn::clip_grad_norm(ps.params, 2.0);
    CHECK(a->grad.data[0] == 1.0);

    a->grad.data[0] = 0.0;
    nn::clip_grad_norm(ps.params, 2.0);
    CHECK(a->grad.data[0] == 0.0);
}

TEST_CASE("lr_schedule: pinned values") {
    CHECK(nn::lr_schedule(2000, 10000) == doctest::Approx(3e-4).epsilon(1e-15));
    CHECK(nn::lr_schedule(10000, 10000) == doctest::Approx(1.5e-5).epsilon(1e-15));
    CHECK(nn::lr_schedule(1000, 10000) == doctest::Approx(1.5e-4).epsilon(1e-15));
    CHECK(nn::lr_schedule(0, 10000) == 0.0);
}

TEST_CASE("grad_check: analytic quadratic") {
    nn::ParamStore ps;
    Var x = ps.add("x", Tensor(1, 1, 3.0));
    auto loss = [&]() { return nn::sum_all(nn::square(x)); };
    nn::GradCheckOptions opts;
    opts.samples_per_param = 0; // all coordinates
    CHECK(nn::grad_check(loss, ps.params, opts) < 1e-8);
}

TEST_CASE("grad_check: every primitive op") {
    nn::Rng rng(23);
    nn::ParamStore ps;
    Var a = ps.add("a", rng.normal_tensor(5, 6));
    Var b = ps.add("b", rng.normal_tensor(5, 6));
    Var w = ps.add("w", rng.normal_tensor(6, 4));
    Var row = ps.add("row", rng.normal_tensor(1, 6));
    Var table = ps.add("table", rng.normal_tensor(7, 6));
    std::vector<double> mask = {1, 0, 1, 1, 0};
    nn::GradCheckOptions opts;
    opts.samples_per_param = 6;

    auto check = [&](const char* name, std::function<Var()> f) {
        double err = nn::grad_check(f, ps.params, opts);
        CHECK_MESSAGE(err < 1e-4, name, " err=", err);
    };
    check("add/mul/sub", [&]() { return nn::mean_all(nn::mul(nn::add(a, b), nn::sub(a, b))); });
    check("matmul", [&]() { return nn::mean_all(nn::matmul(a, w)); });
    check("matmul_nt", [&]() { return nn::mean_all(nn::matmul_nt(a, b)); });
    check("rowvec", [&]() { return nn::mean_all(nn::mul_rowvec(nn::add_rowvec(a, row), row)); });
    check("gelu", [&]() { return nn::mean_all(nn::gelu(a)); });
    check("exp", [&]() { return nn::mean_all(nn::exp(nn::scale(a, 0.3))); });
    check("square", [&]() { return nn::mean_all(nn::square(a)); });
    check("clamp", [&]() { return nn::mean_all(nn::clamp(a, -0.6, 0.6)); });
    check("softmax", [&]() { return nn::mean_all(nn::mul(nn::softmax_rows(a), b)); });
    check("layer_norm", [&]() { return nn::mean_all(nn::mul(nn::layer_norm_rows(a), b)); });
    check("rope", [&]() { return nn::mean_all(nn::mul(nn::rope_rows(a), b)); });
    check("gather", [&]() { return nn::mean_all(nn::gather_rows(table, {0, 3, 6, 3})); });
    check("slice/concat", [&]() {
        return nn::mean_all(nn::concat_cols({nn::slice_cols(a, 0, 3), nn::slice_cols(b, 2, 6)}));
    });
    check("masked_row_mean", [&]() { return nn::masked_row_mean(nn::square(nn::sub(a, b)), mask); });
}

TEST_CASE("grad_check: attention layers and a 2-layer block") {
    nn::Rng rng(31);
    nn::ParamStore ps;
    nn::Attention self_attn = nn::make_attention(ps, "self", 8, 8, 8, rng);
    nn::Attention cross_attn = nn::make_attention(ps, "cross", 8, 12, 8, rng);
    nn::Linear fc1 = nn::make_linear(ps, "fc1", 8, 16, rng);
    nn::Linear fc2 = nn::make_linear(ps, "fc2", 16, 8, rng);
    Tensor x = rng.normal_tensor(6, 8);
    Tensor kv = rng.normal_tensor(5, 12);
    Tensor target = rng.normal_tensor(6, 8);

    auto loss = [&]() {
        Var h = nn::constant(x);
        h = nn::add(h, nn::multi_head_attention(nn::layer_norm_rows(h), nn::constant(kv), cross_attn, 2, false));
        Var a = nn::layer_norm_rows(h);
        h = nn::add(h, nn::multi_head_attention(a, a, self_attn, 2, true));
        h = nn::add(h, nn::linear(nn::gelu(nn::linear(nn::layer_norm_rows(h), fc1)), fc2));
        return nn::mean_all(nn::square(nn::sub(h, nn::constant(target))));
    };
    nn::GradCheckOptions opts;
    opts.samples_per_param = 5;
    CHECK(nn::grad_check(loss, ps.params, opts) < 1e-4);
}

TEST_CASE("grad_check: corrupted backward is caught (negative control)") {
    nn::ParamStore ps;
    nn::Rng rng(37);
    Var w = ps.add("w", rng.normal_tensor(4, 4));
    auto bad_gelu = [](const Var& v) {
        Tensor out = v->value;
        for (double& x : out.data) x = 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
        Var held = v;
        return nn::make_node(std::move(out), {v}, [held](nn::Node& n) {
            auto& g = held->ensure_grad();
            for (std::size_t i = 0; i < g.data.size(); ++i) {
                double x = held->value.data[i];
                double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
                g.data[i] += n.grad.data[i] * cdf * 1.15; // wrong on purpose
            }
        });
    };
    auto loss = [&]() { return nn::mean_all(bad_gelu(w)); };
    nn::GradCheckOptions opts;
    opts.samples_per_param = 0;
    CHECK(nn::grad_check(loss, ps.params, opts) > 1e-2);
}

TEST_CASE("checkpoint: round trip identity on f32-rounded values") {
    nn::ParamStore ps;
    nn::Rng rng(41);
    ps.add("layer.w", rng.normal_tensor(3, 7));
    ps.add("layer.b", rng.normal_tensor(1, 7));
    std::string path = testutil::temp_path("test.vxc");
    ckpt::save_checkpoint(path, "{\"hello\":1}", ckpt::named_tensors(ps));
    ckpt::Checkpoint c = ckpt::load_checkpoint(path);
    CHECK(c.config_json == "{\"hello\":1}");
    REQUIRE(c.tensors.count("layer.w") == 1);
    for (std::size_t i = 0; i < ps.params[0]->value.data.size(); ++i)
        CHECK(c.tensors["layer.w"].data[i] ==
              static_cast<double>(static_cast<float>(ps.params[0]->value.data[i])));

    // save-load-save is bit-stable
    nn::ParamStore ps2;
    ps2.add("layer.w", c.tensors["layer.w"]);
    ps2.add("layer.b", c.tensors["layer.b"]);
    std::string path2 = testutil::temp_path("test2.vxc");
    ckpt::save_checkpoint(path2, c.config_json, ckpt::named_tensors(ps2));
    CHECK(read_file(path) == read_file(path2));

    // missing tensor detected on load_values
    std::map<std::string, Tensor> missing{{"layer.w", c.tensors["layer.w"]}};
    CHECK_THROWS_AS(ps2.load_values(missing), Error);
}

TEST_CASE("rng: deterministic, uniform in range, counter-based") {
    nn::Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    nn::Rng c(123);
    c.counter = 50;
    nn::Rng d(123);
    for (int i = 0; i < 50; ++i) d.next_u64();
    CHECK(c.next_u64() == d.next_u64()); // value i depends only on (seed, i)
    nn::Rng u(9);
    for (int i = 0; i < 1000; ++i) {
        double v = u.uniform();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
}
