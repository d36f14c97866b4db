#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "tdanet/grad/check.hpp"
#include "tdanet/grad/graph.hpp"
#include "tdanet/grad/layers.hpp"
#include "tdanet/grad/ops.hpp"
#include "tdanet/grad/optim.hpp"
#include "test_support.hpp"

using namespace tdanet::grad;
using tdanet::testing::fd_max_rel_error;
using tdanet::testing::random_tensor;

namespace {

Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

}  // namespace

TEST(Linear, IdentityLikeWeights) {
  Graph g;
  const Var x = g.constant(Tensor::from_rows({{1, 0}}));
  const Var w = g.constant(Tensor::from_rows({{2, 0}, {0, 3}}));
  const Var b = g.constant(Tensor::from_rows({{0, 0}}));
  EXPECT_EQ(g.value(linear(g, x, w, b)), Tensor::from_rows({{2, 0}}));
}

TEST(Linear, ZeroInputPassesBias) {
  std::mt19937_64 rng(3);
  Graph g;
  const Var x = g.constant(Tensor(4, 3, 0.0));
  const Var w = g.constant(random_tensor(3, 2, rng));
  const Var b = g.constant(Tensor::from_rows({{1, 1}}));
  const Tensor& out = g.value(linear(g, x, w, b));
  ASSERT_EQ(out.rows(), 4u);
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_EQ(out(r, 0), 1.0);
    EXPECT_EQ(out(r, 1), 1.0);
  }
}

TEST(Linear, MatchesNaiveMatmul) {
  std::mt19937_64 rng(11);
  const Tensor xa = random_tensor(3, 4, rng);
  const Tensor wa = random_tensor(4, 2, rng);
  Graph g;
  const Var out = linear(g, g.constant(xa), g.constant(wa), g.constant(Tensor(1, 2, 0.0)));
  EXPECT_LE(max_abs_diff(g.value(out), naive_matmul(xa, wa)), 1e-12);
  const Var mm = matmul(g, g.constant(xa), g.constant(wa));
  EXPECT_LE(max_abs_diff(g.value(mm), naive_matmul(xa, wa)), 1e-12);
}

TEST(Linear, ShapeMismatchNamesBothShapes) {
  Graph g;
  const Var x = g.constant(Tensor(2, 3));
  const Var w = g.constant(Tensor(4, 5));
  const Var b = g.constant(Tensor(1, 5));
  try {
    linear(g, x, w, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4x5]"), std::string::npos) << msg;
  }
}

TEST(Softmax, Examples) {
  Graph g;
  const Tensor& a = g.value(softmax(g, g.constant(Tensor::row({0.0, 0.0}))));
  EXPECT_DOUBLE_EQ(a[0], 0.5);
  EXPECT_DOUBLE_EQ(a[1], 0.5);
  EXPECT_EQ(g.value(softmax(g, g.constant(Tensor::row({-41.7}))))[0], 1.0);
  const Tensor& c = g.value(softmax(g, g.constant(Tensor::row({std::log(3.0), 0.0}))));
  EXPECT_NEAR(c[0], 0.75, 1e-15);
  EXPECT_NEAR(c[1], 0.25, 1e-15);
}

TEST(Softmax, EmptyInputIsAnError) {
  Graph g;
  EXPECT_THROW(softmax(g, g.constant(Tensor(1, 0))), DimensionError);
}

TEST(Softmax, SumsToOneAndIsShiftInvariant) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> len(1, 12);
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor v = random_tensor(1, static_cast<std::size_t>(len(rng)), rng, 3.0);
    Tensor shifted = v;
    const double k = std::normal_distribution<double>(0.0, 10.0)(rng);
    for (double& x : shifted.data()) x += k;
    Graph g;
    const Tensor& p = g.value(softmax(g, g.constant(v)));
    const Tensor& q = g.value(softmax(g, g.constant(shifted)));
    EXPECT_NEAR(std::accumulate(p.data().begin(), p.data().end(), 0.0), 1.0, 1e-12);
    EXPECT_LE(max_abs_diff(p, q), 1e-12);
  }
}

TEST(Lstm, ZeroParamsZeroState) {
  Graph g;
  const std::size_t h = 4;
  LstmWeights w{g.constant(Tensor(3, 4 * h)), g.constant(Tensor(h, 4 * h)), g.constant(Tensor(1, 4 * h))};
  const LstmOutput out = lstm_step(g, g.constant(Tensor(1, 3)), g.constant(Tensor(1, h)), g.constant(Tensor(1, h)), w);
  for (double v : g.value(out.h).data()) EXPECT_EQ(v, 0.0);
  for (double v : g.value(out.c).data()) EXPECT_EQ(v, 0.0);
}

TEST(Lstm, CellUpdateBounded) {
  std::mt19937_64 rng(17);
  const std::size_t h = 5;
  for (int trial = 0; trial < 100; ++trial) {
    Graph g;
    LstmWeights w{g.constant(random_tensor(3, 4 * h, rng, 4.0)), g.constant(random_tensor(h, 4 * h, rng, 4.0)),
                  g.constant(random_tensor(1, 4 * h, rng, 4.0))};
    const Tensor c0 = random_tensor(1, h, rng, 3.0);
    const LstmOutput out =
        lstm_step(g, g.constant(random_tensor(1, 3, rng, 5.0)), g.constant(random_tensor(1, h, rng)), g.constant(c0), w);
    for (std::size_t k = 0; k < h; ++k) EXPECT_LE(std::abs(g.value(out.c)[k]), std::abs(c0[k]) + 1.0);
  }
}

TEST(Lstm, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(23);
  const std::size_t h = 3, in = 4;
  ParamSet p;
  p.add("wih", random_tensor(in, 4 * h, rng, 0.5));
  p.add("whh", random_tensor(h, 4 * h, rng, 0.5));
  p.add("b", random_tensor(1, 4 * h, rng, 0.5));
  p.add("x", random_tensor(1, in, rng));
  p.add("h0", random_tensor(1, h, rng));
  p.add("c0", random_tensor(1, h, rng));
  const Tensor rh = random_tensor(1, h, rng);
  const Tensor rc = random_tensor(1, h, rng);
  auto f = [&](Graph& g, const ParamSet& ps) {
    const LstmOutput o = lstm_step(g, g.param(ps, "x"), g.param(ps, "h0"), g.param(ps, "c0"),
                                   {g.param(ps, "wih"), g.param(ps, "whh"), g.param(ps, "b")});
    return add(g, sum(g, mul(g, o.h, g.constant(rh))), sum(g, mul(g, o.c, g.constant(rc))));
  };
  EXPECT_LE(fd_max_rel_error(f, p), 1e-4);
}

TEST(Dropout, EvalModeAndZeroRateAreIdentity) {
  std::mt19937_64 rng(1);
  Graph g;
  const Tensor x = random_tensor(3, 7, rng);
  const Var xv = g.constant(x);
  EXPECT_EQ(g.value(dropout(g, xv, 0.6, Mode::eval, rng)), x);
  EXPECT_EQ(g.value(dropout(g, xv, 0.0, Mode::train, rng)), x);
}

TEST(Dropout, InvertedScalingStatistics) {
  std::mt19937_64 rng(99);
  Graph g;
  const Var x = g.constant(Tensor(1, 100000, 1.0));
  const Tensor& out = g.value(dropout(g, x, 0.5, Mode::train, rng));
  std::size_t kept = 0;
  double total = 0.0;
  for (double v : out.data()) {
    if (v != 0.0) {
      ++kept;
      EXPECT_DOUBLE_EQ(v, 2.0);
    }
    total += v;
  }
  EXPECT_NEAR(static_cast<double>(kept) / 1e5, 0.5, 0.01);
  EXPECT_NEAR(total / 1e5, 1.0, 0.02);
}

TEST(Dropout, RejectsRateOutsideRange) {
  std::mt19937_64 rng(1);
  Graph g;
  const Var x = g.constant(Tensor(1, 3, 1.0));
  EXPECT_THROW(dropout(g, x, 1.0, Mode::train, rng), std::invalid_argument);
  EXPECT_THROW(dropout(g, x, -0.1, Mode::eval, rng), std::invalid_argument);
}

TEST(Backward, SumOfWeightsGivesOnes) {
  ParamSet p;
  p.add("W", Tensor(3, 2, 0.7));
  Graph g;
  const GradSet gs = g.backward(sum(g, g.param(p, 0)), p);
  for (double v : gs.tensors[0].data()) EXPECT_EQ(v, 1.0);
}

TEST(Backward, SquaredErrorChainMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  ParamSet p;
  p.add("W", random_tensor(4, 3, rng));
  p.add("b", random_tensor(1, 3, rng));
  const Tensor x = random_tensor(5, 4, rng);
  const Tensor y = random_tensor(5, 3, rng);
  auto f = [&](Graph& g, const ParamSet& ps) {
    const Var pred = linear(g, g.constant(x), g.param(ps, "W"), g.param(ps, "b"));
    return sum(g, square(g, sub(g, pred, g.constant(y))));
  };
  EXPECT_LE(fd_max_rel_error(f, p), 1e-6);
}

TEST(Backward, IndependentGraphsDoNotInterfere) {
  std::mt19937_64 rng(8);
  ParamSet p;
  p.add("W", random_tensor(3, 3, rng));
  auto loss_a = [&](Graph& g) { return sum(g, square(g, g.param(p, 0))); };
  auto loss_b = [&](Graph& g) { return sum(g, tanh(g, g.param(p, 0))); };
  Graph ga1, gb1;
  const GradSet single_a = ga1.backward(loss_a(ga1), p);
  const GradSet single_b = gb1.backward(loss_b(gb1), p);
  Graph ga2, gb2;
  const Var la = loss_a(ga2);
  const Var lb = loss_b(gb2);
  const GradSet both_a = ga2.backward(la, p);
  const GradSet both_b = gb2.backward(lb, p);
  EXPECT_EQ(both_a.tensors[0], single_a.tensors[0]);
  EXPECT_EQ(both_b.tensors[0], single_b.tensors[0]);
  // Repeating backward on the same graph gives the same answer.
  EXPECT_EQ(ga2.backward(la, p).tensors[0], single_a.tensors[0]);
}

TEST(Backward, NonScalarLossRejected) {
  ParamSet p;
  p.add("W", Tensor(2, 2, 1.0));
  Graph g;
  EXPECT_THROW(g.backward(g.param(p, 0), p), DimensionError);
}

TEST(Backward, UnreachableParamsGetZeroGradient) {
  ParamSet p;
  p.add("used", Tensor(1, 2, 1.0));
  p.add("unused", Tensor(2, 2, 1.0));
  Graph g;
  g.param(p, 1);
  const GradSet gs = g.backward(sum(g, g.param(p, 0)), p);
  ASSERT_EQ(gs.size(), 2u);
  EXPECT_EQ(gs.tensors[1], Tensor(2, 2, 0.0));
}

TEST(Backward, AssociativityEquivalentGraphsAgree) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    ParamSet p;
    p.add("A", random_tensor(2, 3, rng));
    p.add("B", random_tensor(3, 4, rng));
    p.add("C", random_tensor(4, 2, rng));
    Graph g1, g2;
    const Var l1 = sum(g1, matmul(g1, matmul(g1, g1.param(p, 0), g1.param(p, 1)), g1.param(p, 2)));
    const Var l2 = sum(g2, matmul(g2, g2.param(p, 0), matmul(g2, g2.param(p, 1), g2.param(p, 2))));
    const GradSet a = g1.backward(l1, p);
    const GradSet b = g2.backward(l2, p);
    for (std::size_t t = 0; t < 3; ++t) EXPECT_LE(max_abs_diff(a.tensors[t], b.tensors[t]), 1e-12);
    Graph g3, g4;
    const Var x = g3.param(p, 0);
    const Var l3 = sum(g3, add(g3, add(g3, x, x), x));
    const Var y = g4.param(p, 0);
    const Var l4 = sum(g4, add(g4, y, add(g4, y, y)));
    EXPECT_LE(max_abs_diff(g3.backward(l3, p).tensors[0], g4.backward(l4, p).tensors[0]), 1e-12);
  }
}

TEST(Backward, NonFiniteValuesRaise) {
  Graph g;
  const Var x = g.constant(Tensor::row({800.0}));
  EXPECT_THROW(add(g, x, scale(g, x, std::numeric_limits<double>::max())), NumericError);
}

// Every primitive against central differences over random shapes and seeds.
TEST(Primitives, GradientsMatchFiniteDifferencesOverSeeds) {
  using Builder = std::function<Var(Graph&, Var, Var)>;
  struct Case {
    const char* name;
    Builder op;
    bool second_input_same_shape;
  };
  const std::vector<Case> cases = {
      {"add", [](Graph& g, Var a, Var b) { return add(g, a, b); }, true},
      {"sub", [](Graph& g, Var a, Var b) { return sub(g, a, b); }, true},
      {"mul", [](Graph& g, Var a, Var b) { return mul(g, a, b); }, true},
      {"matmul_nt", [](Graph& g, Var a, Var b) { return matmul_nt(g, a, b); }, true},
      {"scale", [](Graph& g, Var a, Var) { return scale(g, a, -1.7); }, true},
      {"square", [](Graph& g, Var a, Var) { return square(g, a); }, true},
      {"abs", [](Graph& g, Var a, Var) { return abs(g, a); }, true},
      {"relu", [](Graph& g, Var a, Var) { return relu(g, a); }, true},
      {"sigmoid", [](Graph& g, Var a, Var) { return sigmoid(g, a); }, true},
      {"tanh", [](Graph& g, Var a, Var) { return tanh(g, a); }, true},
      {"softmax", [](Graph& g, Var a, Var) { return softmax(g, a); }, true},
      {"log_softmax", [](Graph& g, Var a, Var) { return log_softmax(g, a); }, true},
      {"mean_rows", [](Graph& g, Var a, Var) { return mean_rows(g, a); }, true},
      {"concat_cols", [](Graph& g, Var a, Var b) { return concat_cols(g, a, b); }, true},
      {"slice_cols", [](Graph& g, Var a, Var) { return slice_cols(g, a, 1, g.shape(a).cols - 1); }, true},
      {"pick", [](Graph& g, Var a, Var) { return pick(g, a, 0, 1); }, true},
      {"matmul", [](Graph& g, Var a, Var b) { return matmul(g, a, b); }, false},
      {"linear", [](Graph& g, Var a, Var b) {
         return linear(g, a, b, g.constant(Tensor(1, g.shape(b).cols, 0.25)));
       }, false},
  };
  std::uniform_int_distribution<int> dim(2, 4);
  for (const auto& c : cases) {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      std::mt19937_64 rng(seed * 7919 + 1);
      const std::size_t r = static_cast<std::size_t>(dim(rng));
      const std::size_t k = static_cast<std::size_t>(dim(rng));
      const std::size_t n = static_cast<std::size_t>(dim(rng));
      ParamSet p;
      p.add("a", random_tensor(r, k, rng));
      p.add("b", c.second_input_same_shape ? random_tensor(r, k, rng) : random_tensor(k, n, rng));
      Tensor weights;
      {
        Graph probe;
        const Shape out = probe.shape(c.op(probe, probe.param(p, 0), probe.param(p, 1)));
        weights = random_tensor(out.rows, out.cols, rng);
      }
      auto f = [&](Graph& g, const ParamSet& ps) {
        return sum(g, mul(g, c.op(g, g.param(ps, 0), g.param(ps, 1)), g.constant(weights)));
      };
      worst = std::max(worst, fd_max_rel_error(f, p, 1e-5, 1e-4));
    }
    EXPECT_LE(worst, 1e-6) << c.name;
  }
}

TEST(Optimizer, ZeroGradsLeaveParamsAndBumpVersion) {
  std::mt19937_64 rng(4);
  ParamSet p;
  p.add("W", random_tensor(3, 3, rng));
  const ParamSet before = p;
  AdamState s = AdamState::for_params(p);
  const UpdateResult r = optimizer_step(p, s, GradSet::zeros_like(p), AdamConfig{});
  EXPECT_TRUE(r.applied);
  EXPECT_EQ(p.tensor(0), before.tensor(0));
  EXPECT_EQ(p.version(), before.version() + 1);
}

TEST(Optimizer, ClipsToMaxNorm) {
  ParamSet p;
  p.add("W", Tensor(1, 4, 0.0));
  GradSet g = GradSet::zeros_like(p);
  g.tensors[0] = Tensor::row({50.0, 50.0, 50.0, 50.0});  // norm 100
  const double before = clip_global_norm(g, 40.0);
  EXPECT_DOUBLE_EQ(before, 100.0);
  EXPECT_NEAR(g.global_norm(), 40.0, 1e-9);

  GradSet g2 = GradSet::zeros_like(p);
  g2.tensors[0] = Tensor::row({50.0, 50.0, 50.0, 50.0});
  AdamState s = AdamState::for_params(p);
  const UpdateResult r = optimizer_step(p, s, g2, AdamConfig{});
  EXPECT_NEAR(r.grad_norm, 100.0, 1e-12);
  EXPECT_NEAR(r.applied_norm, 40.0, 1e-9);
}

TEST(Optimizer, QuadraticBowlConverges) {
  std::mt19937_64 rng(12);
  ParamSet p;
  p.add("theta", random_tensor(1, 6, rng, 2.0));
  const Tensor centre = random_tensor(1, 6, rng);
  AdamState s = AdamState::for_params(p);
  AdamConfig cfg;
  cfg.lr = 1e-2;
  double loss = 0.0;
  int steps = 0;
  for (; steps < 5000; ++steps) {
    Graph g;
    const Var l = sum(g, square(g, sub(g, g.param(p, 0), g.constant(centre))));
    loss = g.scalar(l);
    if (loss < 1e-6) break;
    optimizer_step(p, s, g.backward(l, p), cfg);
  }
  EXPECT_LT(loss, 1e-6) << "after " << steps << " steps";
}

TEST(Optimizer, NonFiniteGradientRejected) {
  ParamSet p;
  p.add("W", Tensor(1, 3, 1.0));
  const ParamSet before = p;
  AdamState s = AdamState::for_params(p);
  GradSet g = GradSet::zeros_like(p);
  g.tensors[0][1] = std::numeric_limits<double>::quiet_NaN();
  const UpdateResult r = optimizer_step(p, s, g, AdamConfig{});
  EXPECT_FALSE(r.applied);
  EXPECT_NE(r.diagnostic.find("W"), std::string::npos);
  EXPECT_EQ(p.tensor(0), before.tensor(0));
  EXPECT_EQ(p.version(), before.version());
  EXPECT_EQ(s.step, 0u);
}

TEST(Optimizer, DeterministicGivenInputs) {
  std::mt19937_64 rng(2);
  ParamSet p;
  p.add("W", random_tensor(2, 5, rng));
  GradSet g = GradSet::zeros_like(p);
  g.tensors[0] = random_tensor(2, 5, rng);
  ParamSet a = p, b = p;
  AdamState sa = AdamState::for_params(p), sb = AdamState::for_params(p);
  for (int k = 0; k < 3; ++k) {
    optimizer_step(a, sa, g, AdamConfig{});
    optimizer_step(b, sb, g, AdamConfig{});
  }
  EXPECT_EQ(a.tensor(0), b.tensor(0));
  EXPECT_EQ(sa.m[0], sb.m[0]);
  EXPECT_EQ(sa.v[0], sb.v[0]);
}

TEST(GradCheck, LinearSoftmaxCrossEntropyToy) {
  std::mt19937_64 rng(21);
  ParamSet p;
  p.add("W", random_tensor(4, 3, rng));
  p.add("b", random_tensor(1, 3, rng));
  const Tensor x = random_tensor(1, 4, rng);
  auto f = [&](Graph& g, const ParamSet& ps) {
    const Var logp = log_softmax(g, linear(g, g.constant(x), g.param(ps, "W"), g.param(ps, "b")));
    return neg(g, pick(g, logp, 0, 2));
  };
  const GradCheckReport r = grad_check(f, p);
  EXPECT_EQ(r.coords_checked, 15u);
  EXPECT_LE(r.max_rel_error, 1e-6) << r.worst_param << "[" << r.worst_index << "]";
}

TEST(GradCheck, ZeroEpsilonRejected) {
  ParamSet p;
  p.add("W", Tensor(1, 1, 1.0));
  GradCheckOptions opt;
  opt.eps = 0.0;
  EXPECT_THROW(grad_check([](Graph& g, const ParamSet& ps) { return sum(g, g.param(ps, 0)); }, p, opt),
               std::invalid_argument);
}

TEST(GradCheck, NonDeterministicClosureDetected) {
  ParamSet p;
  std::mt19937_64 rng(0);
  p.add("W", random_tensor(1, 64, rng));
  auto f = [&](Graph& g, const ParamSet& ps) { return sum(g, dropout(g, g.param(ps, 0), 0.5, Mode::train, rng)); };
  EXPECT_THROW(grad_check(f, p), std::logic_error);
}

TEST(Params, NamesUniqueAndCount) {
  ParamSet p;
  EXPECT_EQ(count_params(p), 0u);
  p.add("w", Tensor(10, 10));
  p.add("b", Tensor(1, 10));
  EXPECT_EQ(count_params(p), 110u);
  EXPECT_THROW(p.add("w", Tensor(1, 1)), std::invalid_argument);
}
