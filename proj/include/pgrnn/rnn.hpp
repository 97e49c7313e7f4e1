#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "pgrnn/errors.hpp"

namespace pgrnn {

// All learnables of one recurrent model: GRU gate weights, recurrent weights
// and biases, plus the linear readout that maps the hidden state back to
// state-derivative space.
struct GruParams {
  Eigen::MatrixXd Wz, Wr, Wh;  // hidden x input
  Eigen::MatrixXd Rz, Rr, Rh;  // hidden x hidden
  Eigen::VectorXd bz, br, bh;  // hidden
  Eigen::MatrixXd Wout;        // output x hidden
  Eigen::VectorXd bout;        // output

  Eigen::Index input_dim() const { return Wz.cols(); }
  Eigen::Index hidden_dim() const { return Wz.rows(); }
  Eigen::Index output_dim() const { return Wout.rows(); }
  bool empty() const { return Wz.size() == 0; }

  static GruParams zeros(Eigen::Index input_dim, Eigen::Index hidden_dim,
                         Eigen::Index output_dim);
  void set_zero();
  void validate() const;

  struct BlockRef {
    const char* name;
    double* data;
    Eigen::Index size;
  };
  struct ConstBlockRef {
    const char* name;
    const double* data;
    Eigen::Index size;
  };
  std::array<BlockRef, 11> blocks();
  std::array<ConstBlockRef, 11> blocks() const;
};

// Gradients share the parameter layout exactly.
using Gradients = GruParams;

// Per-step intermediates retained for backpropagation through time.
struct GruStepCache {
  Eigen::VectorXd input;          // s_k
  Eigen::VectorXd h_prev;         // h_{k-1}
  Eigen::VectorXd update_gate;    // z_k
  Eigen::VectorXd reset_gate;     // r_k
  Eigen::VectorXd candidate;      // tanh candidate state
  Eigen::VectorXd rec_candidate;  // Rh * h_{k-1}
  Eigen::VectorXd hidden;         // h_k
};

// One GRU update: gates from the logistic function, candidate from tanh,
// new hidden state as the gate-weighted combination of previous and
// candidate state.
Eigen::VectorXd gru_cell_forward(const GruParams& p, const Eigen::VectorXd& s,
                                 const Eigen::VectorXd& h_prev, GruStepCache* cache = nullptr);

struct RnnForwardResult {
  Eigen::MatrixXd outputs;  // n x output_dim, readout applied at every step
  Eigen::VectorXd final_hidden;
  std::vector<GruStepCache> caches;  // empty unless requested
};

RnnForwardResult rnn_forward(const GruParams& p, const Eigen::MatrixXd& inputs,
                             const Eigen::VectorXd& h0, bool keep_caches = true);

// Exact gradient of sum_k <output_grads[k], outputs[k]> with respect to all
// parameters, accumulated through the recurrent chain of steps
// [begin, end). Gradient flow is truncated at `begin` (no contribution to
// earlier steps), which is what truncated BPTT windows need.
void rnn_backward_window(const GruParams& p, const std::vector<GruStepCache>& caches,
                         const Eigen::MatrixXd& output_grads, std::size_t begin, std::size_t end,
                         Gradients& acc);

Gradients rnn_backward(const GruParams& p, const std::vector<GruStepCache>& caches,
                       const Eigen::MatrixXd& output_grads);

// Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out)) per matrix) and zero
// biases; bit-reproducible per seed.
GruParams init_params(std::uint64_t seed, Eigen::Index input_dim, Eigen::Index hidden_dim,
                      Eigen::Index output_dim);

nlohmann::json params_to_json(const GruParams& p);
GruParams params_from_json(const nlohmann::json& j);

}  // namespace pgrnn
