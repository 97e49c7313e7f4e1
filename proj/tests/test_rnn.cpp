#include <doctest.h>

#include <cmath>

#include "pgrnn/rng.hpp"
#include "pgrnn/rnn.hpp"

using namespace pgrnn;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.uniform(-1.0, 1.0);
  return m;
}

GruParams random_params(std::uint64_t seed, Eigen::Index in, Eigen::Index z, Eigen::Index out) {
  GruParams p = init_params(seed, in, z, out);
  Rng rng(derive_seed(seed, 77));
  for (Eigen::Index i = 0; i < p.bz.size(); ++i) {
    p.bz[i] = 0.1 * rng.uniform(-1.0, 1.0);
    p.br[i] = 0.1 * rng.uniform(-1.0, 1.0);
    p.bh[i] = 0.1 * rng.uniform(-1.0, 1.0);
  }
  for (Eigen::Index i = 0; i < p.bout.size(); ++i) p.bout[i] = 0.1 * rng.uniform(-1.0, 1.0);
  return p;
}

// The linear functional sum_k <G_k, y_k> whose exact parameter gradient
// rnn_backward promises; evaluated by forward passes only, so central finite
// differences of it form an independent oracle.
double linear_probe(const GruParams& p, const Eigen::MatrixXd& inputs,
                    const Eigen::MatrixXd& probe) {
  const Eigen::VectorXd h0 = Eigen::VectorXd::Zero(p.hidden_dim());
  const RnnForwardResult fwd = rnn_forward(p, inputs, h0, false);
  return (fwd.outputs.cwiseProduct(probe)).sum();
}

struct FdCheck {
  double worst_rel = 0.0;
};

FdCheck finite_difference_check(std::uint64_t seed, Eigen::Index in, Eigen::Index z,
                                Eigen::Index out, Eigen::Index steps, double eps = 1e-6) {
  GruParams p = random_params(seed, in, z, out);
  Rng rng(derive_seed(seed, 13));
  const Eigen::MatrixXd inputs = random_matrix(rng, steps, in, 1.0);
  const Eigen::MatrixXd probe = random_matrix(rng, steps, out, 1.0);

  const Eigen::VectorXd h0 = Eigen::VectorXd::Zero(z);
  const RnnForwardResult fwd = rnn_forward(p, inputs, h0, true);
  const Gradients analytic = rnn_backward(p, fwd.caches, probe);

  FdCheck result;
  auto grad_blocks = analytic.blocks();
  auto param_blocks = p.blocks();
  for (std::size_t b = 0; b < param_blocks.size(); ++b) {
    double block_norm = 0.0;
    double block_err = 0.0;
    for (Eigen::Index i = 0; i < param_blocks[b].size; ++i) {
      double& theta = param_blocks[b].data[i];
      const double saved = theta;
      theta = saved + eps;
      const double up = linear_probe(p, inputs, probe);
      theta = saved - eps;
      const double down = linear_probe(p, inputs, probe);
      theta = saved;
      const double fd = (up - down) / (2.0 * eps);
      block_norm = std::max(block_norm, std::abs(fd));
      block_err = std::max(block_err, std::abs(fd - grad_blocks[b].data[i]));
    }
    result.worst_rel = std::max(result.worst_rel, block_err / std::max(block_norm, 1e-8));
  }
  return result;
}

}  // namespace

TEST_CASE("gru cell with zero parameters") {
  const GruParams p = GruParams::zeros(3, 4, 2);
  Eigen::VectorXd h0(4);
  h0 << 0.4, -0.2, 0.8, 0.0;
  const Eigen::VectorXd s = Eigen::VectorXd::Zero(3);

  // Gates sit at 1/2 and the candidate at 0, so the state halves.
  const Eigen::VectorXd h = gru_cell_forward(p, s, h0);
  CHECK((h - 0.5 * h0).cwiseAbs().maxCoeff() < 1e-15);

  const Eigen::VectorXd from_rest = gru_cell_forward(p, s, Eigen::VectorXd::Zero(4));
  CHECK(from_rest.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gru cell scalar hand evaluation") {
  GruParams p = GruParams::zeros(2, 1, 1);
  p.Wz(0, 0) = 1.0;
  p.Wr(0, 0) = 1.0;
  p.Wh(0, 0) = 1.0;
  Eigen::VectorXd s(2);
  s << 1.0, 0.0;
  const Eigen::VectorXd h = gru_cell_forward(p, s, Eigen::VectorXd::Zero(1));
  // z = r = logistic(1), candidate = tanh(1), h = z * candidate.
  const double sigma1 = 1.0 / (1.0 + std::exp(-1.0));
  CHECK(h[0] == doctest::Approx(sigma1 * std::tanh(1.0)).epsilon(1e-15));
  CHECK(h[0] == doctest::Approx(0.5567699411459397).epsilon(1e-12));
}

TEST_CASE("rnn_forward readout behavior") {
  Rng rng(3);
  GruParams p = random_params(21, 3, 5, 2);
  const Eigen::MatrixXd inputs = random_matrix(rng, 7, 3, 1.0);

  SUBCASE("zero readout weight pins every output at the bias") {
    p.Wout.setZero();
    p.bout << 1.5, -2.0;
    const auto res = rnn_forward(p, inputs, Eigen::VectorXd::Zero(5));
    for (Eigen::Index k = 0; k < res.outputs.rows(); ++k) {
      CHECK(res.outputs(k, 0) == 1.5);
      CHECK(res.outputs(k, 1) == -2.0);
    }
  }

  SUBCASE("a one-step sequence is the cell composed with the readout") {
    const auto res = rnn_forward(p, inputs.topRows(1), Eigen::VectorXd::Zero(5));
    const Eigen::VectorXd h = gru_cell_forward(p, inputs.row(0).transpose(),
                                               Eigen::VectorXd::Zero(5));
    CHECK(res.outputs.row(0).transpose() == p.Wout * h + p.bout);
    CHECK(res.final_hidden == h);
  }

  SUBCASE("all-zero parameters give all-zero outputs") {
    const GruParams zeros = GruParams::zeros(3, 5, 2);
    const auto res = rnn_forward(zeros, inputs, Eigen::VectorXd::Zero(5));
    CHECK(res.outputs.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("forward is bitwise deterministic") {
    const auto a = rnn_forward(p, inputs, Eigen::VectorXd::Zero(5));
    const auto b = rnn_forward(p, inputs, Eigen::VectorXd::Zero(5));
    CHECK(a.outputs == b.outputs);
    CHECK(a.final_hidden == b.final_hidden);
  }
}

TEST_CASE("hidden state and gates stay inside their ranges") {
  Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    const GruParams p = random_params(100 + trial, 4, 6, 2);
    const Eigen::MatrixXd inputs = random_matrix(rng, 25, 4, 3.0);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(6);
    for (Eigen::Index k = 0; k < inputs.rows(); ++k) {
      GruStepCache cache;
      h = gru_cell_forward(p, inputs.row(k).transpose(), h, &cache);
      CHECK(h.cwiseAbs().maxCoeff() < 1.0);
      CHECK(cache.update_gate.minCoeff() > 0.0);
      CHECK(cache.update_gate.maxCoeff() < 1.0);
      CHECK(cache.reset_gate.minCoeff() > 0.0);
      CHECK(cache.reset_gate.maxCoeff() < 1.0);
    }
  }
}

TEST_CASE("backward: zero output gradients give zero parameter gradients") {
  GruParams p = random_params(5, 3, 4, 2);
  Rng rng(55);
  const Eigen::MatrixXd inputs = random_matrix(rng, 6, 3, 1.0);
  const auto fwd = rnn_forward(p, inputs, Eigen::VectorXd::Zero(4));
  const Gradients g = rnn_backward(p, fwd.caches, Eigen::MatrixXd::Zero(6, 2));
  for (const auto& block : g.blocks()) {
    CHECK(Eigen::Map<const Eigen::VectorXd>(block.data, block.size).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("backward: readout bias gradient is the sum of output gradients") {
  GruParams p = random_params(6, 3, 4, 2);
  Rng rng(56);
  const Eigen::MatrixXd inputs = random_matrix(rng, 9, 3, 1.0);
  const Eigen::MatrixXd probe = random_matrix(rng, 9, 2, 1.0);
  const auto fwd = rnn_forward(p, inputs, Eigen::VectorXd::Zero(4));
  const Gradients g = rnn_backward(p, fwd.caches, probe);
  CHECK((g.bout - probe.colwise().sum().transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("BPTT matches central finite differences across 20 seeds") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const FdCheck check = finite_difference_check(seed, 4, 4, 2, 10);
    CHECK(check.worst_rel <= 1e-5);
  }
}

TEST_CASE("windowed backward sums to the full gradient when windows chain gradients") {
  // Truncation at a window boundary drops the cross-boundary terms, so the
  // windowed sum differs from full BPTT in general but must agree when the
  // split is the whole range.
  GruParams p = random_params(8, 3, 4, 2);
  Rng rng(57);
  const Eigen::MatrixXd inputs = random_matrix(rng, 12, 3, 1.0);
  const Eigen::MatrixXd probe = random_matrix(rng, 12, 2, 1.0);
  const auto fwd = rnn_forward(p, inputs, Eigen::VectorXd::Zero(4));

  const Gradients full = rnn_backward(p, fwd.caches, probe);
  Gradients single = GruParams::zeros(3, 4, 2);
  rnn_backward_window(p, fwd.caches, probe, 0, 12, single);
  auto fb = full.blocks();
  auto sb = single.blocks();
  for (std::size_t b = 0; b < fb.size(); ++b) {
    for (Eigen::Index i = 0; i < fb[b].size; ++i) {
      CHECK(fb[b].data[i] == sb[b].data[i]);
    }
  }

  Gradients split = GruParams::zeros(3, 4, 2);
  rnn_backward_window(p, fwd.caches, probe, 0, 6, split);
  rnn_backward_window(p, fwd.caches, probe, 6, 12, split);
  // The truncated windows still accumulate every readout term exactly.
  CHECK((split.bout - full.bout).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("init_params: determinism, bounds, seed sensitivity") {
  const GruParams a = init_params(9, 5, 7, 2);
  const GruParams b = init_params(9, 5, 7, 2);
  CHECK(a.Wz == b.Wz);
  CHECK(a.Rh == b.Rh);
  CHECK(a.Wout == b.Wout);

  const double bound = std::sqrt(6.0 / (5.0 + 7.0));
  CHECK(a.Wz.cwiseAbs().maxCoeff() <= bound);
  CHECK(a.bz.cwiseAbs().maxCoeff() == 0.0);

  const GruParams c = init_params(10, 5, 7, 2);
  CHECK((a.Wz - c.Wz).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("parameter checkpoints round trip exactly") {
  const GruParams p = random_params(77, 4, 6, 2);
  const GruParams q = params_from_json(params_to_json(p));
  auto pb = p.blocks();
  auto qb = q.blocks();
  for (std::size_t b = 0; b < pb.size(); ++b) {
    for (Eigen::Index i = 0; i < pb[b].size; ++i) CHECK(pb[b].data[i] == qb[b].data[i]);
  }

  nlohmann::json bad = params_to_json(p);
  bad["version"] = 3;
  CHECK_THROWS_AS(params_from_json(bad), SchemaError);
}
