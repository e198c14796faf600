#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "mgnn/checkpoint.hpp"
#include "mgnn/errors.hpp"
#include "mgnn/experiments.hpp"
#include "mgnn/mnn.hpp"
#include "test_util.hpp"

using namespace mgnn;

namespace {

std::shared_ptr<const ShiftOperator> random_shift(Eigen::Index n, std::mt19937_64& rng) {
  return std::make_shared<const ShiftOperator>(eig_sym(testutil::random_laplacian(n, rng)));
}

MnnModel single_filter_model(std::vector<double> taps, Nonlinearity sigma) {
  MnnModel m = MnnModel::create(std::vector<int>{1, 1}, static_cast<int>(taps.size()), sigma, 0);
  m.layers[0].set_filter(0, 0, FirFilter(std::move(taps)));
  m.readout.weights.setOnes();
  m.readout.bias = 0.0;
  return m;
}

Eigen::MatrixXd permutation_matrix(const std::vector<int>& perm) {
  const auto n = static_cast<Eigen::Index>(perm.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) p(i, perm[static_cast<std::size_t>(i)]) = 1.0;
  return p;
}

}  // namespace

TEST(FirApply, Examples) {
  std::mt19937_64 rng(1);
  const auto shift = random_shift(12, rng);
  const Eigen::VectorXd x = testutil::random_matrix(12, 1, rng);
  EXPECT_LE(testutil::rel_diff(fir_apply(*shift, FirFilter({1, 0, 0, 0, 0}), x), x), 1e-15);
  const FirFilter h({0.4, 0.3, 0.2});
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(12);
  EXPECT_LE((fir_apply(*shift, h, ones).array() - 0.9).abs().maxCoeff(), 1e-12);
  const auto spec = eig_sym(testutil::random_laplacian(12, rng));
  EXPECT_LE(testutil::rel_diff(fir_apply(ShiftOperator(spec), h, x), spectral_filter_apply(spec, h, x)), 1e-8);
  EXPECT_THROW(fir_apply(*shift, h, Eigen::VectorXd::Ones(5)), InvalidArgument);
}

TEST(LayerForward, Examples) {
  std::mt19937_64 rng(2);
  const auto shift = random_shift(10, rng);
  const Eigen::MatrixXd x = testutil::random_matrix(10, 2, rng);

  FilterBank id(1, 1, 1);
  id.tap(0, 0, 0) = 1.0;
  EXPECT_EQ(layer_forward(id, *shift, x.col(0), Nonlinearity::Identity).output, x.col(0));

  FilterBank neg(1, 1, 1);
  neg.tap(0, 0, 0) = 1.0;
  const Eigen::MatrixXd negative = -x.col(0).cwiseAbs() - Eigen::VectorXd::Ones(10);
  EXPECT_EQ(layer_forward(neg, *shift, negative, Nonlinearity::ReLU).output.cwiseAbs().maxCoeff(), 0.0);

  FilterBank sum(2, 1, 1);
  sum.tap(0, 0, 0) = 1.0;
  sum.tap(0, 1, 0) = 1.0;
  const Eigen::MatrixXd out = layer_forward(sum, *shift, x, Nonlinearity::ReLU).output;
  EXPECT_LE((out.col(0) - (x.col(0) + x.col(1)).cwiseMax(0.0)).cwiseAbs().maxCoeff(), 1e-15);

  EXPECT_THROW(layer_forward(sum, *shift, x.col(0), Nonlinearity::ReLU), InvalidArgument);
}

TEST(LayerForward, TapeCachesDiffusedInputs) {
  std::mt19937_64 rng(3);
  const auto shift = random_shift(8, rng);
  const Eigen::MatrixXd x = testutil::random_matrix(8, 3, rng);
  FilterBank bank(3, 2, 4);
  const auto r = layer_forward(bank, *shift, x, Nonlinearity::ReLU);
  ASSERT_EQ(r.tape.diffused.size(), 4u);
  EXPECT_EQ(r.tape.diffused[0], x);
  EXPECT_LE(testutil::rel_diff(r.tape.diffused[3], shift->matrix() * (shift->matrix() * (shift->matrix() * x))),
            1e-13);
}

TEST(MnnForward, Examples) {
  std::mt19937_64 rng(4);
  const auto shift = random_shift(9, rng);
  MnnModel m = MnnModel::create(std::vector<int>{2, 4, 3}, 3, Nonlinearity::ReLU, 5);
  m.readout.bias = 0.0;
  EXPECT_EQ(mnn_forward(m, *shift, Eigen::MatrixXd::Zero(9, 2)).logit, 0.0);

  const MnnModel id = single_filter_model({1.0}, Nonlinearity::Identity);
  EXPECT_NEAR(mnn_forward(id, *shift, Eigen::VectorXd::Constant(9, 1.7)).logit, 1.7, 1e-15);
  EXPECT_THROW(mnn_forward(m, *shift, Eigen::MatrixXd::Zero(9, 3)), InvalidArgument);
}

TEST(MnnModel, ParameterCountAndLayout) {
  const auto gnn2 = MnnModel::create(std::vector<int>{3, 64, 32}, 5, Nonlinearity::ReLU, 0);
  EXPECT_EQ(gnn2.parameter_count(), 11233u);
  EXPECT_EQ(gnn2.parameters().size(), 11233u);
  EXPECT_EQ(architecture_spec("GNN2Ly", 5).widths, (std::vector<int>{3, 64, 32}));

  MnnModel m = MnnModel::create(std::vector<int>{2, 3}, 2, Nonlinearity::ReLU, 1);
  std::vector<double> p(m.parameter_count());
  std::iota(p.begin(), p.end(), 0.0);
  m.set_parameters(p);
  EXPECT_EQ(m.layers[0].tap(0, 0, 0), 0.0);
  EXPECT_EQ(m.layers[0].tap(0, 0, 1), 1.0);
  EXPECT_EQ(m.layers[0].tap(0, 1, 0), 2.0);
  EXPECT_EQ(m.layers[0].tap(1, 0, 0), 4.0);
  EXPECT_EQ(m.readout.weights(0), 12.0);
  EXPECT_EQ(m.readout.bias, 15.0);
  EXPECT_EQ(m.parameters(), p);
  EXPECT_THROW(m.set_parameters(std::vector<double>(3)), InvalidArgument);
}

TEST(MnnModel, InitializationRanges) {
  const auto m = MnnModel::create(std::vector<int>{3, 8, 4}, 5, Nonlinearity::ReLU, 9);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const double bound = 1.0 / (m.layers[l].in_features() * 5);
    for (int k = 0; k < 5; ++k) EXPECT_LE(m.layers[l].tap_matrix(k).cwiseAbs().maxCoeff(), bound);
  }
  EXPECT_LE(m.readout.weights.cwiseAbs().maxCoeff(), 0.25);
  EXPECT_EQ(m.readout.bias, 0.0);
  EXPECT_EQ(m.fingerprint(), MnnModel::create(std::vector<int>{3, 8, 4}, 5, Nonlinearity::ReLU, 9).fingerprint());
  EXPECT_NE(m.fingerprint(), MnnModel::create(std::vector<int>{3, 8, 4}, 5, Nonlinearity::ReLU, 10).fingerprint());
}

TEST(Loss, Examples) {
  EXPECT_NEAR(loss_bce(0.0, 1), std::log(2.0), 1e-15);
  EXPECT_NEAR(loss_bce(0.0, 0), std::log(2.0), 1e-15);
  EXPECT_NEAR(loss_bce(2.0, 1), std::log1p(std::exp(-2.0)), 1e-15);
  EXPECT_NEAR(loss_bce(2.0, 1), 0.126928, 1e-6);
  EXPECT_TRUE(std::isfinite(loss_bce(800.0, 0)));
  EXPECT_NEAR(loss_bce(800.0, 0), 800.0, 1e-9);
  EXPECT_NEAR(loss_bce(-800.0, 0), 0.0, 1e-300);
  EXPECT_NEAR(loss_bce_grad(0.0, 1), -0.5, 1e-15);
  EXPECT_THROW(loss_bce(0.0, 2), InvalidArgument);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 rng(5);
  const auto shift = random_shift(7, rng);
  const auto m = MnnModel::create(std::vector<int>{2, 3, 2}, 3, Nonlinearity::ReLU, 2);
  const auto fwd = mnn_forward(m, *shift, testutil::random_matrix(7, 2, rng));
  for (double g : mnn_backward_logit(m, *shift, fwd.tape, 0.0).flatten()) EXPECT_EQ(g, 0.0);
}

TEST(Backward, LinearSingleFeatureByHand) {
  std::mt19937_64 rng(6);
  const auto shift = random_shift(11, rng);
  const MnnModel m = single_filter_model({0.3, -0.2, 0.5, 0.1}, Nonlinearity::Identity);
  const Eigen::VectorXd x = testutil::random_matrix(11, 1, rng);
  const auto fwd = mnn_forward(m, *shift, x);
  const auto g = mnn_backward_logit(m, *shift, fwd.tape, 1.0);
  Eigen::VectorXd s = x;
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(g.taps[0][static_cast<std::size_t>(k)](0, 0), s.mean(), 1e-13);
    s = shift->matrix() * s;
  }
  EXPECT_NEAR(g.readout_bias, 1.0, 1e-15);
}

TEST(Backward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 6; ++trial) {
    const auto shift = random_shift(10, rng);
    const auto sigma = trial % 2 ? Nonlinearity::Identity : Nonlinearity::ReLU;
    MnnModel m = MnnModel::create(std::vector<int>{3, 4, 2}, 3, sigma, 100 + trial);
    m.readout.bias = 0.3;
    EXPECT_LE(gradient_check(m, *shift, testutil::random_matrix(10, 3, rng), trial % 2, 1e-5), 1e-4);
  }
}

TEST(Backward, StaleTapeThrows) {
  std::mt19937_64 rng(8);
  const auto shift = random_shift(6, rng);
  MnnModel m = MnnModel::create(std::vector<int>{1, 2}, 2, Nonlinearity::ReLU, 3);
  const auto fwd = mnn_forward(m, *shift, testutil::random_matrix(6, 1, rng));
  const auto other = random_shift(7, rng);
  EXPECT_THROW(mnn_backward(m, *other, fwd.tape, 1), InvalidArgument);
  m.readout.bias += 1.0;
  EXPECT_THROW(mnn_backward(m, *shift, fwd.tape, 1), InvalidArgument);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p{1.0, -2.0};
  AdamState st(2);
  TrainConfig cfg;
  for (int i = 0; i < 3; ++i) adam_step(p, std::vector<double>{0.0, 0.0}, st, cfg);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
}

TEST(Adam, FirstStepAndScalarTrace) {
  TrainConfig cfg;
  std::vector<double> p{0.0, 0.0};
  AdamState st(2);
  adam_step(p, std::vector<double>{3.0, -0.01}, st, cfg);
  EXPECT_NEAR(p[0], -0.005, 1e-9);
  EXPECT_NEAR(p[1], 0.005, 1e-6);

  // Independent scalar simulation with g = 1.
  std::vector<double> x{1.0};
  AdamState s1(1);
  double m = 0.0, v = 0.0, ref = 1.0;
  for (int t = 1; t <= 3; ++t) {
    const double before = x[0];
    adam_step(x, std::vector<double>{1.0}, s1, cfg);
    m = 0.9 * m + 0.1;
    v = 0.999 * v + 0.001;
    ref -= 0.005 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    EXPECT_NEAR(x[0], ref, 1e-15);
    EXPECT_NEAR(before - x[0], 0.005, 1e-8);
  }
  EXPECT_THROW(adam_step(x, std::vector<double>{1.0, 2.0}, s1, cfg), InvalidArgument);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.beta1 = 1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = TrainConfig{};
  c.learning_rate = -0.1;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

namespace {

std::vector<Sample> toy_dataset(int count, std::mt19937_64& rng) {
  std::vector<Sample> data;
  for (int i = 0; i < count; ++i) {
    Sample s;
    s.shift = random_shift(8, rng);
    s.label = i % 2;
    s.features = testutil::random_matrix(8, 2, rng);
    s.features.col(0).array() += s.label ? 1.0 : -1.0;
    data.push_back(std::move(s));
  }
  return data;
}

}  // namespace

TEST(Train, OverfitsSingleSample) {
  std::mt19937_64 rng(9);
  auto data = toy_dataset(1, rng);
  TrainConfig cfg;
  cfg.batch_size = 1;
  cfg.epochs = 200;
  const auto m = MnnModel::create(std::vector<int>{2, 4}, 3, Nonlinearity::ReLU, 1);
  const auto r = train(m, data, cfg);
  ASSERT_EQ(r.loss_history.size(), 200u);
  EXPECT_LT(r.loss_history.back(), r.loss_history.front());
  EXPECT_LT(loss_bce(predict_logit(r.model, data[0]), data[0].label), loss_bce(predict_logit(m, data[0]), data[0].label));
}

TEST(Train, ZeroLearningRateKeepsModel) {
  std::mt19937_64 rng(10);
  auto data = toy_dataset(12, rng);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 4;
  const auto m = MnnModel::create(std::vector<int>{2, 3}, 2, Nonlinearity::ReLU, 2);
  const auto r = train(m, data, cfg);
  EXPECT_EQ(r.model.parameters(), m.parameters());
  for (double l : r.loss_history) EXPECT_EQ(l, r.loss_history.front());
}

TEST(Train, DeterministicAcrossRunsAndExecution) {
  std::mt19937_64 rng(11);
  auto data = toy_dataset(23, rng);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 77;
  const auto m = MnnModel::create(std::vector<int>{2, 4, 3}, 3, Nonlinearity::ReLU, 3);
  const auto a = train(m, data, cfg, {}, kernels::Exec::Parallel);
  const auto b = train(m, data, cfg, {}, kernels::Exec::Parallel);
  const auto c = train(m, data, cfg, {}, kernels::Exec::Serial);
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_EQ(a.loss_history, c.loss_history);
  EXPECT_EQ(a.model.parameters(), c.model.parameters());
}

TEST(Train, EmptyDatasetThrowsAndCallbackRuns) {
  const auto m = MnnModel::create(std::vector<int>{2, 3}, 2, Nonlinearity::ReLU, 2);
  EXPECT_THROW(train(m, std::vector<Sample>{}, TrainConfig{}), InvalidArgument);
  std::mt19937_64 rng(12);
  auto data = toy_dataset(4, rng);
  TrainConfig cfg;
  cfg.epochs = 3;
  std::vector<int> seen;
  train(m, data, cfg, [&](int e, const MnnModel&, double) { seen.push_back(e); });
  EXPECT_EQ(seen, (std::vector<int>{0, 1, 2}));
}

TEST(Train, ErrorRate) {
  std::mt19937_64 rng(13);
  auto data = toy_dataset(6, rng);
  MnnModel m = MnnModel::create(std::vector<int>{2, 1}, 1, Nonlinearity::Identity, 0);
  m.readout.weights.setZero();
  m.readout.bias = 1.0;
  EXPECT_DOUBLE_EQ(error_rate(m, data), 0.5);
}

TEST(Properties, GraphFilterIsSpecialCase) {
  std::mt19937_64 rng(14);
  const auto shift = random_shift(13, rng);
  const std::vector<double> taps{0.7, -0.4, 0.25, 0.1};
  const MnnModel m = single_filter_model(taps, Nonlinearity::Identity);
  const Eigen::VectorXd x = testutil::random_matrix(13, 1, rng);
  EXPECT_EQ(mnn_features(m, *shift, x), fir_apply(*shift, FirFilter(taps), x));
}

TEST(Properties, PermutationEquivariance) {
  std::mt19937_64 rng(15);
  const Eigen::Index n = 12;
  const auto cloud = testutil::random_cloud(n, 3, rng);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const Eigen::MatrixXd p = permutation_matrix(perm);
  PointCloud permuted = cloud;
  permuted.points = p * cloud.points;

  const ShiftOperator s1(eig_sym(build_graph(cloud, KernelScale::fixed(0.5)).laplacian));
  const ShiftOperator s2(eig_sym(build_graph(permuted, KernelScale::fixed(0.5)).laplacian));
  const auto m = MnnModel::create(std::vector<int>{3, 5, 2}, 4, Nonlinearity::ReLU, 8);
  const auto a = mnn_forward(m, s1, cloud.points);
  const auto b = mnn_forward(m, s2, permuted.points);
  EXPECT_LE((p * a.tape.layers.back().output - b.tape.layers.back().output).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(a.logit, b.logit, 1e-12);
}

TEST(Properties, ForwardIsDeterministic) {
  std::mt19937_64 rng(16);
  const auto shift = random_shift(10, rng);
  const auto m = MnnModel::create(std::vector<int>{2, 6, 3}, 4, Nonlinearity::ReLU, 4);
  const Eigen::MatrixXd x = testutil::random_matrix(10, 2, rng);
  const double first = mnn_forward(m, *shift, x).logit;
  for (int i = 0; i < 5; ++i) EXPECT_EQ(mnn_forward(m, *shift, x).logit, first);
}

TEST(Checkpoint, RoundTrip) {
  Checkpoint cp;
  cp.model = MnnModel::create(std::vector<int>{3, 4, 2}, 3, Nonlinearity::Identity, 21);
  cp.model.readout.bias = -0.123456789012345678;
  cp.config.learning_rate = 0.0123;
  cp.config.epochs = 7;
  cp.config.seed = 12345678901234ULL;
  std::stringstream buf;
  write_checkpoint(buf, cp);
  const auto back = read_checkpoint(buf);
  EXPECT_EQ(back.model.parameters(), cp.model.parameters());
  EXPECT_EQ(back.model.widths(), cp.model.widths());
  EXPECT_EQ(back.model.nonlinearity, Nonlinearity::Identity);
  EXPECT_EQ(back.model.fingerprint(), cp.model.fingerprint());
  EXPECT_EQ(back.config.learning_rate, 0.0123);
  EXPECT_EQ(back.config.epochs, 7);
  EXPECT_EQ(back.config.seed, 12345678901234ULL);

  const auto path = std::filesystem::temp_directory_path() / "mgnn_checkpoint_test.txt";
  save_checkpoint(path, cp);
  EXPECT_EQ(load_checkpoint(path).model.parameters(), cp.model.parameters());
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint("/nonexistent/dir/ckpt.txt"), IoError);
}

TEST(Checkpoint, MalformedInputReportsLine) {
  Checkpoint cp;
  cp.model = MnnModel::create(std::vector<int>{1, 2}, 2, Nonlinearity::ReLU, 1);
  std::stringstream buf;
  write_checkpoint(buf, cp);
  std::string text = buf.str();

  std::string bad_sigma = text;
  bad_sigma.replace(bad_sigma.find("relu"), 4, "tanh");
  std::istringstream in1(bad_sigma);
  try {
    read_checkpoint(in1);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }

  std::istringstream in2(text.substr(0, text.find("readout")));
  try {
    read_checkpoint(in2);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 0u);
    EXPECT_NE(std::string(e.what()).find("readout"), std::string::npos);
  }

  std::istringstream in3("mgnn-checkpoint 9\n");
  EXPECT_THROW(read_checkpoint(in3), ParseError);
}
