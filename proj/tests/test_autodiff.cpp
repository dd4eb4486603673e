#include "cdckg/grad_check.hpp"
#include "cdckg/tape.hpp"

#include <doctest.h>

using namespace cdckg;

namespace {

// sum of all elements as a scalar loss, built from tape primitives
int sum_all(Tape<double>& tp, int x) {
  const Tensor<double>& v = tp.val(x);
  const int64_t n = v.numel();
  int flat = tp.reshape(x, {1, n});
  Tensor<double> ones_w = Tensor<double>::full({n, 1}, 1.0);
  int w = tp.constant(std::move(ones_w));
  return tp.reshape(tp.matmul(flat, w), {1});
}

struct Fixture {
  std::vector<Tensor<double>> values, grads;
  std::vector<ParamSlot<double>> slots;

  Tensor<double>* add(const std::string& name, Tensor<double> v) {
    values.push_back(std::move(v));
    grads.emplace_back(values.back().shape);
    return &values.back();
  }
  void finalize() {
    // vectors are stable from here on; record the slots
    for (size_t i = 0; i < values.size(); ++i)
      slots.push_back({"p" + std::to_string(i), &values[i], &grads[i]});
  }
  void zero_grads() {
    for (auto& g : grads) g.fill(0.0);
  }
};

}  // namespace

TEST_CASE("pure affine loss gradient is exact") {
  Rng rng(1);
  Fixture fx;
  fx.add("x", Tensor<double>::uniform({2, 3}, -1, 1, rng));
  fx.add("w", Tensor<double>::uniform({3, 4}, -1, 1, rng));
  fx.add("b", Tensor<double>::uniform({4}, -1, 1, rng));
  fx.finalize();

  auto loss_fn = [&]() {
    fx.zero_grads();
    Tape<double> tp(ops::RunMode::kEval);
    int x = tp.param(&fx.values[0], &fx.grads[0]);
    int w = tp.param(&fx.values[1], &fx.grads[1]);
    int b = tp.param(&fx.values[2], &fx.grads[2]);
    int loss = sum_all(tp, tp.affine(x, w, b));
    tp.backward(loss);
    return tp.val(loss)[0];
  };
  auto report = grad_check<double>(loss_fn, fx.slots);
  CHECK(report.max_rel_err < 1e-9);
}

TEST_CASE("gradients of each op against finite differences") {
  Rng rng(2);
  Fixture fx;
  fx.add("m", Tensor<double>::uniform({2, 3, 9}, -1, 1, rng));     // conv input, B=2, k=9
  fx.add("kern", Tensor<double>::uniform({2, 3, 3}, -1, 1, rng));  // 2 kernels
  fx.add("cbias", Tensor<double>::uniform({2}, -1, 1, rng));
  fx.add("w", Tensor<double>::uniform({12, 5}, -1, 1, rng));  // 2 kernels * width 3 = 6... see below
  fx.add("att_x", Tensor<double>::uniform({3, 4}, -1, 1, rng));
  fx.add("att_y", Tensor<double>::uniform({5, 4}, -1, 1, rng));
  fx.add("pool_x", Tensor<double>::uniform({2, 5}, -1, 1, rng));
  fx.finalize();

  // conv width for k=9 is 3, flattened 2*3=6 per row; w maps 12 stacked (two rows concatenated)
  auto loss_fn = [&]() {
    fx.zero_grads();
    Tape<double> tp(ops::RunMode::kEval);
    int m = tp.param(&fx.values[0], &fx.grads[0]);
    int kern = tp.param(&fx.values[1], &fx.grads[1]);
    int cbias = tp.param(&fx.values[2], &fx.grads[2]);
    int w = tp.param(&fx.values[3], &fx.grads[3]);
    int ax = tp.param(&fx.values[4], &fx.grads[4]);
    int ay = tp.param(&fx.values[5], &fx.grads[5]);
    int px = tp.param(&fx.values[6], &fx.grads[6]);

    int c = tp.relu(tp.conv_stride3(m, kern, cbias));  // {2,2,3}
    int f = tp.reshape(c, {1, 12});
    int s = tp.sigmoid(tp.matmul(f, w));  // {1,5}

    int logits = tp.matmul(ax, ay, false, true);  // {3,5}
    int att = tp.softmax_rows(tp.tanh_map(logits));
    int mixed = tp.matmul(att, ay);  // {3,4}

    int pooled = tp.max_pool_cols(px, 2);     // {2,3}
    int meaned = tp.mean_pool_rows(pooled);   // {2}
    int tr = tp.transpose(mixed);             // {4,3}

    int total = tp.add_scalars({sum_all(tp, s), sum_all(tp, mixed), sum_all(tp, meaned),
                                sum_all(tp, tr), tp.l1_diff_sum(att, logits)});
    tp.backward(total);
    return tp.val(total)[0];
  };
  auto report = grad_check<double>(loss_fn, fx.slots);
  INFO("worst: ", report.worst_param, "[", report.worst_index, "] analytic=", report.analytic,
       " numeric=", report.numeric);
  CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("stack3 and lookup gradients") {
  Rng rng(3);
  Fixture fx;
  fx.add("table", Tensor<double>::uniform({5, 4}, -1, 1, rng));
  fx.finalize();

  auto loss_fn = [&]() {
    fx.zero_grads();
    Tape<double> tp(ops::RunMode::kEval);
    // repeated ids exercise the scatter-add
    int h = tp.lookup_rows(&fx.values[0], &fx.grads[0], {0, 2, 2});
    int r = tp.lookup_rows(&fx.values[0], &fx.grads[0], {1, 1, 3});
    int t = tp.lookup_rows(&fx.values[0], &fx.grads[0], {4, 0, 2});
    int m = tp.stack3(h, r, t);  // {3,3,4}
    int loss = sum_all(tp, tp.tanh_map(m));
    tp.backward(loss);
    return tp.val(loss)[0];
  };
  auto report = grad_check<double>(loss_fn, fx.slots);
  CHECK(report.max_rel_err < 1e-7);
}

TEST_CASE("conv_rows gradient") {
  Rng rng(4);
  Fixture fx;
  fx.add("x", Tensor<double>::uniform({5, 3}, -1, 1, rng));
  fx.add("filt", Tensor<double>::uniform({4, 2, 3}, -1, 1, rng));
  fx.add("bias", Tensor<double>::uniform({4}, -1, 1, rng));
  fx.finalize();

  auto loss_fn = [&]() {
    fx.zero_grads();
    Tape<double> tp(ops::RunMode::kEval);
    int x = tp.param(&fx.values[0], &fx.grads[0]);
    int filt = tp.param(&fx.values[1], &fx.grads[1]);
    int bias = tp.param(&fx.values[2], &fx.grads[2]);
    int loss = sum_all(tp, tp.sigmoid(tp.conv_rows(x, filt, bias)));
    tp.backward(loss);
    return tp.val(loss)[0];
  };
  auto report = grad_check<double>(loss_fn, fx.slots);
  CHECK(report.max_rel_err < 1e-7);
}

TEST_CASE("bce gradient and clamping") {
  Rng rng(5);
  Fixture fx;
  fx.add("z", Tensor<double>::uniform({4, 1}, -2, 2, rng));
  fx.finalize();

  auto loss_fn = [&]() {
    fx.zero_grads();
    Tape<double> tp(ops::RunMode::kEval);
    int z = tp.param(&fx.values[0], &fx.grads[0]);
    int s = tp.sigmoid(z);
    int loss = tp.bce_sum(s, {1.0, 0.0, 0.95, 0.05});
    tp.backward(loss);
    return tp.val(loss)[0];
  };
  auto report = grad_check<double>(loss_fn, fx.slots);
  CHECK(report.max_rel_err < 1e-7);

  // saturated scores stay finite through the clamp
  Tape<double> tp(ops::RunMode::kEval);
  int z = tp.constant(Tensor<double>({2, 1}, {1000.0, -1000.0}));
  int s = tp.sigmoid(z);
  int loss = tp.bce_sum(s, {0.0, 1.0});
  CHECK(std::isfinite(tp.val(loss)[0]));
  CHECK(tp.val(loss)[0] > 0.0);
}

TEST_CASE("dropout gradient with frozen masks") {
  Fixture fx;
  Rng init(6);
  fx.add("x", Tensor<double>::uniform({6, 6}, -1, 1, init));
  fx.finalize();

  // reseeding per evaluation freezes the mask, making the loss deterministic
  auto loss_fn = [&]() {
    fx.zero_grads();
    Rng rng(99);
    Tape<double> tp(ops::RunMode::kTrain, &rng);
    int x = tp.param(&fx.values[0], &fx.grads[0]);
    int y = tp.dropout(x, 0.3);
    int loss = sum_all(tp, tp.tanh_map(y));
    tp.backward(loss);
    return tp.val(loss)[0];
  };
  auto report = grad_check<double>(loss_fn, fx.slots);
  CHECK(report.max_rel_err < 1e-7);
}

TEST_CASE("lincomb and scale gradients") {
  Rng rng(7);
  Fixture fx;
  fx.add("a", Tensor<double>::uniform({1, 1}, -1, 1, rng));
  fx.add("b", Tensor<double>::uniform({1, 1}, -1, 1, rng));
  fx.finalize();

  auto loss_fn = [&]() {
    fx.zero_grads();
    Tape<double> tp(ops::RunMode::kEval);
    int a = tp.param(&fx.values[0], &fx.grads[0]);
    int b = tp.param(&fx.values[1], &fx.grads[1]);
    int mean = tp.lincomb(0.5, tp.sigmoid(a), 0.5, tp.sigmoid(b));
    int loss = tp.scale(2.0, tp.bce_sum(mean, {1.0}));
    tp.backward(loss);
    return tp.val(loss)[0];
  };
  auto report = grad_check<double>(loss_fn, fx.slots);
  CHECK(report.max_rel_err < 1e-8);
}

TEST_CASE("grad_check flags a wrong gradient") {
  Fixture fx;
  fx.add("x", Tensor<double>({1}, {0.7}));
  fx.finalize();
  auto loss_fn = [&]() {
    fx.zero_grads();
    fx.grads[0][0] = 1.0;  // claims d(x^2)/dx == 1
    return fx.values[0][0] * fx.values[0][0];
  };
  auto report = grad_check<double>(loss_fn, fx.slots);
  CHECK(report.max_rel_err > 0.1);
}
