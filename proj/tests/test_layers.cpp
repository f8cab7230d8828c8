#include <random>

#include "doctest.h"
#include "sgsg/adam.hpp"
#include "sgsg/layers.hpp"
#include "support/gradcheck.hpp"

using namespace sgsg;

namespace {

VecX<double> rvec(int n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  VecX<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

VecX<double> vec2(double a, double b) {
  VecX<double> v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("affine identity, hand-evaluated, and zero-weight cases") {
  Tape<double> tape;
  {
    VecX<double> wv(4);
    wv << 1, 0, 0, 1;
    Var<double> y = affine(make_vec(tape, vec2(1, 2)),
                           make_leaf(tape, Tensor<double>(Shape{2, 2}, wv)),
                           make_vec(tape, vec2(0, 0)));
    CHECK(y.value().data[0] == 1.0);
    CHECK(y.value().data[1] == 2.0);
  }
  {
    VecX<double> wv(2);
    wv << 2, 3;
    VecX<double> b(1);
    b << 1;
    Var<double> y = affine(make_vec(tape, vec2(1, 1)),
                           make_leaf(tape, Tensor<double>(Shape{1, 2}, wv)), make_vec(tape, b));
    CHECK(y.value().data[0] == doctest::Approx(6.0));  // 2 + 3 + 1
  }
  {
    std::mt19937_64 rng(5);
    VecX<double> b(1);
    b << 5;
    Var<double> y = affine(make_vec(tape, rvec(3, rng)),
                           make_leaf(tape, Tensor<double>(Shape{1, 3}, VecX<double>::Zero(3))),
                           make_vec(tape, b));
    CHECK(y.value().data[0] == 5.0);
  }
  {
    Var<double> x = make_vec(tape, vec2(1, 2));
    Var<double> w = make_leaf(tape, Tensor<double>(Shape{3, 3}, VecX<double>::Zero(9)));
    CHECK_THROWS_AS(matvec(w, x), ShapeError);
  }
}

TEST_CASE("lstm cell zero weights and forget-gate saturation") {
  std::mt19937_64 rng(11);
  const int H = 4, D = 3;
  auto make_lstm = [&](Tape<double>& tape, const VecX<double>& b) {
    return LstmVars<double>{
        make_leaf(tape, Tensor<double>(Shape{4 * H, D}, VecX<double>::Zero(4 * H * D))),
        make_leaf(tape, Tensor<double>(Shape{4 * H, H}, VecX<double>::Zero(4 * H * H))),
        make_leaf(tape, Tensor<double>(Shape{4 * H}, b))};
  };

  {
    Tape<double> tape;
    LstmVars<double> p = make_lstm(tape, VecX<double>::Zero(4 * H));
    auto st = lstm_cell(make_vec(tape, rvec(D, rng)), lstm_zero_state(tape, H), p);
    CHECK(st.h.value().data.isZero(0));
    CHECK(st.c.value().data.isZero(0));
  }
  {
    // Forget gate forced on (bias 50), input gate forced off (bias -50):
    // c stays at c_prev up to sigmoid saturation error.
    Tape<double> tape;
    VecX<double> b = VecX<double>::Zero(4 * H);
    b.segment(0, H).setConstant(-50.0);
    b.segment(H, H).setConstant(50.0);
    LstmVars<double> p = make_lstm(tape, b);
    VecX<double> c_prev = rvec(H, rng);
    LstmState<double> st{make_zeros<double>(tape, H), make_vec(tape, c_prev)};
    auto next = lstm_cell(make_vec(tape, rvec(D, rng)), st, p);
    CHECK((next.c.value().data - c_prev).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("lstm cell gradients match finite differences on a 4-dim cell") {
  std::mt19937_64 rng(23);
  const int H = 4, D = 4;
  ParamStore<double> ps;
  ps.add("w_ih", uniform_fan_in<double>(Shape{4 * H, D}, D, rng));
  ps.add("w_hh", uniform_fan_in<double>(Shape{4 * H, H}, H, rng));
  ps.add("b", Tensor<double>(Shape{4 * H}, rvec(4 * H, rng)));
  VecX<double> xv = rvec(D, rng);
  VecX<double> hv = rvec(H, rng);
  VecX<double> cv = rvec(H, rng);

  auto eval = [&]() {
    Tape<double> tape;
    LstmVars<double> p{ps.bind(tape, "w_ih"), ps.bind(tape, "w_hh"), ps.bind(tape, "b")};
    LstmState<double> st{make_vec(tape, hv), make_vec(tape, cv)};
    auto next = lstm_cell(make_vec(tape, xv), st, p);
    return sum(next.h).value().data[0];
  };

  Tape<double> tape;
  LstmVars<double> p{ps.bind(tape, "w_ih"), ps.bind(tape, "w_hh"), ps.bind(tape, "b")};
  LstmState<double> st{make_vec(tape, hv), make_vec(tape, cv)};
  auto next = lstm_cell(make_vec(tape, xv), st, p);
  tape.backward(sum(next.h).id());
  ps.zero_grad();
  ps.collect(tape);

  auto res = sgsg::test::check_gradients(ps, eval);
  CAPTURE(res.worst);
  CHECK(res.max_rel_err < 1e-4);
  CHECK(res.checked == 4 * H * D + 4 * H * H + 4 * H);
}

TEST_CASE("conv2d hand-evaluated cases") {
  Tape<double> tape;
  {
    // 1x1 kernel of value 2 over a 3x3 field of ones.
    Var<double> x = make_leaf(tape, Tensor<double>(Shape{1, 3, 3}, VecX<double>::Ones(9)));
    VecX<double> k(1);
    k << 2;
    Var<double> w = make_leaf(tape, Tensor<double>(Shape{1, 1, 1, 1}, k));
    Var<double> y = conv2d(x, w, make_zeros(tape, 1));
    CHECK(y.value().shape == Shape{1, 3, 3});
    CHECK((y.value().data.array() == 2.0).all());
  }
  {
    // 2x2 mean kernel, stride 2: block means of a 4x4 ramp.
    VecX<double> xv(16);
    for (int i = 0; i < 16; ++i) xv[i] = i + 1;
    Var<double> x = make_leaf(tape, Tensor<double>(Shape{1, 4, 4}, xv));
    Var<double> w =
        make_leaf(tape, Tensor<double>(Shape{1, 1, 2, 2}, VecX<double>::Constant(4, 0.25)));
    Var<double> y = conv2d(x, w, make_zeros(tape, 1), 2);
    REQUIRE(y.value().shape == Shape{1, 2, 2});
    CHECK(y.value().data[0] == doctest::Approx(3.5));
    CHECK(y.value().data[1] == doctest::Approx(5.5));
    CHECK(y.value().data[2] == doctest::Approx(11.5));
    CHECK(y.value().data[3] == doctest::Approx(13.5));
  }
  {
    std::mt19937_64 rng(3);
    Var<double> x = make_leaf(tape, Tensor<double>(Shape{2, 3, 3}, rvec(18, rng)));
    Var<double> w = make_leaf(tape, Tensor<double>(Shape{3, 2, 2, 2}, VecX<double>::Zero(24)));
    Var<double> y = conv2d(x, w, make_zeros(tape, 3));
    CHECK(y.value().data.isZero(0));
  }
  {
    // Identity-like 1x1 unit kernel reproduces the input exactly.
    std::mt19937_64 rng(4);
    VecX<double> xv = rvec(9, rng);
    Var<double> x = make_leaf(tape, Tensor<double>(Shape{1, 3, 3}, xv));
    Var<double> w = make_leaf(tape, Tensor<double>(Shape{1, 1, 1, 1}, VecX<double>::Ones(1)));
    Var<double> y = conv2d(x, w, make_zeros(tape, 1));
    CHECK(y.value().data == xv);
  }
  {
    Var<double> x = make_leaf(tape, Tensor<double>(Shape{1, 2, 2}, VecX<double>::Zero(4)));
    Var<double> w = make_leaf(tape, Tensor<double>(Shape{1, 1, 5, 5}, VecX<double>::Zero(25)));
    CHECK_THROWS_AS(conv2d(x, w, make_zeros(tape, 1), 1, 1), ShapeError);
  }
}

TEST_CASE("conv2d and avg_pool2d gradients match finite differences") {
  std::mt19937_64 rng(31);
  ParamStore<double> ps;
  ps.add("w", uniform_fan_in<double>(Shape{2, 2, 3, 3}, 18, rng));
  ps.add("b", Tensor<double>(Shape{2}, rvec(2, rng)));
  VecX<double> xv = rvec(2 * 6 * 6, rng);

  auto eval = [&]() {
    Tape<double> tape;
    Var<double> x = make_leaf(tape, Tensor<double>(Shape{2, 6, 6}, xv));
    Var<double> y = conv2d(x, ps.bind(tape, "w"), ps.bind(tape, "b"), 1, 1);
    return sum_squares(avg_pool2d(relu(y))).value().data[0];
  };

  Tape<double> tape;
  Var<double> x = make_leaf(tape, Tensor<double>(Shape{2, 6, 6}, xv));
  Var<double> y = conv2d(x, ps.bind(tape, "w"), ps.bind(tape, "b"), 1, 1);
  Var<double> loss = sum_squares(avg_pool2d(relu(y)));
  tape.backward(loss.id());
  ps.zero_grad();
  ps.collect(tape);

  auto res = sgsg::test::check_gradients(ps, eval);
  CAPTURE(res.worst);
  CHECK(res.max_rel_err < 1e-4);

  VecX<double> gx = tape.grad(x.id());
  auto rx = sgsg::test::check_input_gradient(xv, gx, eval);
  CHECK(rx.max_rel_err < 1e-4);
}

TEST_CASE("adam zero-gradient no-op, first-step size, and determinism") {
  {
    std::mt19937_64 rng(41);
    ParamStore<float> ps;
    ps.add("p", Tensor<float>(Shape{3}, VecX<float>::Ones(3)));
    ps.zero_grad();
    Adam<float> opt;
    opt.step(ps);
    CHECK(ps.value("p").data == VecX<float>::Ones(3));
    (void)rng;
  }
  {
    ParamStore<double> ps;
    ps.add("p", Tensor<double>::scalar(1.0));
    ps.grad("p").data[0] = 1.0;
    AdamConfig<double> cfg;
    cfg.lr = 0.1;
    Adam<double> opt(cfg);
    opt.step(ps);
    // Bias correction makes the first step ~ lr * sign(grad).
    CHECK(ps.value("p").data[0] == doctest::Approx(0.9).epsilon(1e-6));
  }
  {
    auto run = [] {
      ParamStore<double> ps;
      ps.add("p", Tensor<double>(Shape{4}, VecX<double>::LinSpaced(4, -1.0, 2.0)));
      Adam<double> opt;
      for (int i = 0; i < 5; ++i) {
        ps.zero_grad();
        ps.grad("p").data = ps.value("p").data;  // grad of 0.5*|p|^2
        opt.step(ps);
      }
      return ps.value("p").data;
    };
    CHECK(run() == run());
  }
}

TEST_CASE("activation enum dispatch") {
  Tape<double> tape;
  Var<double> x = make_vec(tape, vec2(-1.0, 1.0));
  CHECK(activation(x, Act::relu).value().data[0] == 0.0);
  CHECK(activation(x, Act::sigmoid).value().data[1] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  CHECK(activation(x, Act::tanh).value().data[1] == doctest::Approx(std::tanh(1.0)));
}
