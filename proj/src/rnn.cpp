#include "pgrnn/rnn.hpp"

#include <cmath>

#include "pgrnn/rng.hpp"

namespace pgrnn {

namespace {

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

GruParams GruParams::zeros(Eigen::Index input_dim, Eigen::Index hidden_dim,
                           Eigen::Index output_dim) {
  GruParams p;
  p.Wz = Eigen::MatrixXd::Zero(hidden_dim, input_dim);
  p.Wr = Eigen::MatrixXd::Zero(hidden_dim, input_dim);
  p.Wh = Eigen::MatrixXd::Zero(hidden_dim, input_dim);
  p.Rz = Eigen::MatrixXd::Zero(hidden_dim, hidden_dim);
  p.Rr = Eigen::MatrixXd::Zero(hidden_dim, hidden_dim);
  p.Rh = Eigen::MatrixXd::Zero(hidden_dim, hidden_dim);
  p.bz = Eigen::VectorXd::Zero(hidden_dim);
  p.br = Eigen::VectorXd::Zero(hidden_dim);
  p.bh = Eigen::VectorXd::Zero(hidden_dim);
  p.Wout = Eigen::MatrixXd::Zero(output_dim, hidden_dim);
  p.bout = Eigen::VectorXd::Zero(output_dim);
  return p;
}

void GruParams::set_zero() {
  for (auto& block : blocks()) {
    Eigen::Map<Eigen::VectorXd>(block.data, block.size).setZero();
  }
}

void GruParams::validate() const {
  const auto z = hidden_dim();
  const auto in = input_dim();
  if (z < 1 || in < 1 || output_dim() < 1) {
    throw InvalidInputError("GruParams: dimensions must be at least 1");
  }
  auto shape = [&](const Eigen::MatrixXd& m, Eigen::Index r, Eigen::Index c, const char* name) {
    if (m.rows() != r || m.cols() != c) {
      throw InvalidInputError(std::string("GruParams: bad shape for ") + name);
    }
  };
  shape(Wr, z, in, "Wr");
  shape(Wh, z, in, "Wh");
  shape(Rz, z, z, "Rz");
  shape(Rr, z, z, "Rr");
  shape(Rh, z, z, "Rh");
  if (bz.size() != z || br.size() != z || bh.size() != z) {
    throw InvalidInputError("GruParams: bias size mismatch");
  }
  if (Wout.cols() != z || bout.size() != Wout.rows()) {
    throw InvalidInputError("GruParams: readout shape mismatch");
  }
  for (const auto& block : blocks()) {
    if (!Eigen::Map<const Eigen::VectorXd>(block.data, block.size).allFinite()) {
      throw InvalidInputError(std::string("GruParams: non-finite entries in ") + block.name);
    }
  }
}

std::array<GruParams::BlockRef, 11> GruParams::blocks() {
  return {{{"Wz", Wz.data(), Wz.size()},
           {"Wr", Wr.data(), Wr.size()},
           {"Wh", Wh.data(), Wh.size()},
           {"Rz", Rz.data(), Rz.size()},
           {"Rr", Rr.data(), Rr.size()},
           {"Rh", Rh.data(), Rh.size()},
           {"bz", bz.data(), bz.size()},
           {"br", br.data(), br.size()},
           {"bh", bh.data(), bh.size()},
           {"Wout", Wout.data(), Wout.size()},
           {"bout", bout.data(), bout.size()}}};
}

std::array<GruParams::ConstBlockRef, 11> GruParams::blocks() const {
  return {{{"Wz", Wz.data(), Wz.size()},
           {"Wr", Wr.data(), Wr.size()},
           {"Wh", Wh.data(), Wh.size()},
           {"Rz", Rz.data(), Rz.size()},
           {"Rr", Rr.data(), Rr.size()},
           {"Rh", Rh.data(), Rh.size()},
           {"bz", bz.data(), bz.size()},
           {"br", br.data(), br.size()},
           {"bh", bh.data(), bh.size()},
           {"Wout", Wout.data(), Wout.size()},
           {"bout", bout.data(), bout.size()}}};
}

Eigen::VectorXd gru_cell_forward(const GruParams& p, const Eigen::VectorXd& s,
                                 const Eigen::VectorXd& h_prev, GruStepCache* cache) {
  if (s.size() != p.input_dim() || h_prev.size() != p.hidden_dim()) {
    throw InvalidInputError("gru_cell_forward: input or hidden dimension mismatch");
  }
  const Eigen::VectorXd pre_update = p.Wz * s + p.bz + p.Rz * h_prev;
  const Eigen::VectorXd pre_reset = p.Wr * s + p.br + p.Rr * h_prev;
  const Eigen::VectorXd update_gate = pre_update.unaryExpr([](double v) { return logistic(v); });
  const Eigen::VectorXd reset_gate = pre_reset.unaryExpr([](double v) { return logistic(v); });
  const Eigen::VectorXd rec_candidate = p.Rh * h_prev;
  const Eigen::VectorXd pre_candidate =
      p.Wh * s + p.bh + reset_gate.cwiseProduct(rec_candidate);
  const Eigen::VectorXd candidate = pre_candidate.array().tanh();
  Eigen::VectorXd hidden =
      (Eigen::VectorXd::Ones(p.hidden_dim()) - update_gate).cwiseProduct(h_prev) +
      update_gate.cwiseProduct(candidate);
  if (cache != nullptr) {
    cache->input = s;
    cache->h_prev = h_prev;
    cache->update_gate = update_gate;
    cache->reset_gate = reset_gate;
    cache->candidate = candidate;
    cache->rec_candidate = rec_candidate;
    cache->hidden = hidden;
  }
  return hidden;
}

RnnForwardResult rnn_forward(const GruParams& p, const Eigen::MatrixXd& inputs,
                             const Eigen::VectorXd& h0, bool keep_caches) {
  if (inputs.rows() == 0) throw InvalidInputError("rnn_forward: empty input sequence");
  if (inputs.cols() != p.input_dim()) {
    throw InvalidInputError("rnn_forward: input width does not match the parameters");
  }
  if (h0.size() != p.hidden_dim()) throw InvalidInputError("rnn_forward: h0 size mismatch");

  const Eigen::Index n = inputs.rows();
  RnnForwardResult res;
  res.outputs.resize(n, p.output_dim());
  if (keep_caches) res.caches.resize(static_cast<std::size_t>(n));

  Eigen::VectorXd h = h0;
  for (Eigen::Index k = 0; k < n; ++k) {
    GruStepCache* cache = keep_caches ? &res.caches[static_cast<std::size_t>(k)] : nullptr;
    h = gru_cell_forward(p, inputs.row(k).transpose(), h, cache);
    res.outputs.row(k) = (p.Wout * h + p.bout).transpose();
  }
  res.final_hidden = std::move(h);
  return res;
}

void rnn_backward_window(const GruParams& p, const std::vector<GruStepCache>& caches,
                         const Eigen::MatrixXd& output_grads, std::size_t begin, std::size_t end,
                         Gradients& acc) {
  if (end > caches.size() || begin > end) {
    throw InvalidInputError("rnn_backward_window: window out of range");
  }
  if (output_grads.rows() != static_cast<Eigen::Index>(caches.size()) ||
      output_grads.cols() != p.output_dim()) {
    throw InvalidInputError("rnn_backward_window: output gradient shape mismatch");
  }

  const Eigen::Index z = p.hidden_dim();
  Eigen::VectorXd dh = Eigen::VectorXd::Zero(z);
  for (std::size_t k = end; k-- > begin;) {
    const GruStepCache& c = caches[k];
    const Eigen::VectorXd dy = output_grads.row(static_cast<Eigen::Index>(k)).transpose();

    acc.Wout.noalias() += dy * c.hidden.transpose();
    acc.bout += dy;
    dh.noalias() += p.Wout.transpose() * dy;

    // Through h_k = (1 - z_k) .* h_{k-1} + z_k .* candidate.
    const Eigen::VectorXd d_update = dh.cwiseProduct(c.candidate - c.h_prev);
    const Eigen::VectorXd d_candidate = dh.cwiseProduct(c.update_gate);
    Eigen::VectorXd dh_prev =
        dh.cwiseProduct(Eigen::VectorXd::Ones(z) - c.update_gate);

    // Candidate branch: tanh' = 1 - candidate^2.
    const Eigen::VectorXd d_pre_candidate =
        d_candidate.cwiseProduct(Eigen::VectorXd::Ones(z) - c.candidate.cwiseProduct(c.candidate));
    acc.Wh.noalias() += d_pre_candidate * c.input.transpose();
    acc.bh += d_pre_candidate;
    const Eigen::VectorXd d_reset = d_pre_candidate.cwiseProduct(c.rec_candidate);
    const Eigen::VectorXd d_rec_candidate = d_pre_candidate.cwiseProduct(c.reset_gate);
    acc.Rh.noalias() += d_rec_candidate * c.h_prev.transpose();
    dh_prev.noalias() += p.Rh.transpose() * d_rec_candidate;

    // Reset gate branch: logistic' = r (1 - r).
    const Eigen::VectorXd d_pre_reset =
        d_reset.cwiseProduct(c.reset_gate)
            .cwiseProduct(Eigen::VectorXd::Ones(z) - c.reset_gate);
    acc.Wr.noalias() += d_pre_reset * c.input.transpose();
    acc.br += d_pre_reset;
    acc.Rr.noalias() += d_pre_reset * c.h_prev.transpose();
    dh_prev.noalias() += p.Rr.transpose() * d_pre_reset;

    // Update gate branch.
    const Eigen::VectorXd d_pre_update =
        d_update.cwiseProduct(c.update_gate)
            .cwiseProduct(Eigen::VectorXd::Ones(z) - c.update_gate);
    acc.Wz.noalias() += d_pre_update * c.input.transpose();
    acc.bz += d_pre_update;
    acc.Rz.noalias() += d_pre_update * c.h_prev.transpose();
    dh_prev.noalias() += p.Rz.transpose() * d_pre_update;

    dh = std::move(dh_prev);
  }
}

Gradients rnn_backward(const GruParams& p, const std::vector<GruStepCache>& caches,
                       const Eigen::MatrixXd& output_grads) {
  Gradients g = GruParams::zeros(p.input_dim(), p.hidden_dim(), p.output_dim());
  rnn_backward_window(p, caches, output_grads, 0, caches.size(), g);
  return g;
}

GruParams init_params(std::uint64_t seed, Eigen::Index input_dim, Eigen::Index hidden_dim,
                      Eigen::Index output_dim) {
  if (input_dim < 1 || hidden_dim < 1 || output_dim < 1) {
    throw InvalidInputError("init_params: dimensions must be at least 1");
  }
  GruParams p = GruParams::zeros(input_dim, hidden_dim, output_dim);
  Rng rng(seed);
  auto fill = [&rng](Eigen::MatrixXd& m, Eigen::Index fan_in, Eigen::Index fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = rng.uniform(-bound, bound);
    }
  };
  fill(p.Wz, input_dim, hidden_dim);
  fill(p.Wr, input_dim, hidden_dim);
  fill(p.Wh, input_dim, hidden_dim);
  fill(p.Rz, hidden_dim, hidden_dim);
  fill(p.Rr, hidden_dim, hidden_dim);
  fill(p.Rh, hidden_dim, hidden_dim);
  fill(p.Wout, hidden_dim, output_dim);
  return p;
}

nlohmann::json params_to_json(const GruParams& p) {
  nlohmann::json j;
  j["version"] = 1;
  nlohmann::json blocks;
  auto put = [&blocks](const char* name, const double* data, Eigen::Index rows,
                       Eigen::Index cols) {
    nlohmann::json b;
    b["shape"] = {rows, cols};
    nlohmann::json values = nlohmann::json::array();
    for (Eigen::Index i = 0; i < rows * cols; ++i) values.push_back(data[i]);
    b["data"] = std::move(values);
    blocks[name] = std::move(b);
  };
  put("Wz", p.Wz.data(), p.Wz.rows(), p.Wz.cols());
  put("Wr", p.Wr.data(), p.Wr.rows(), p.Wr.cols());
  put("Wh", p.Wh.data(), p.Wh.rows(), p.Wh.cols());
  put("Rz", p.Rz.data(), p.Rz.rows(), p.Rz.cols());
  put("Rr", p.Rr.data(), p.Rr.rows(), p.Rr.cols());
  put("Rh", p.Rh.data(), p.Rh.rows(), p.Rh.cols());
  put("bz", p.bz.data(), p.bz.size(), 1);
  put("br", p.br.data(), p.br.size(), 1);
  put("bh", p.bh.data(), p.bh.size(), 1);
  put("Wout", p.Wout.data(), p.Wout.rows(), p.Wout.cols());
  put("bout", p.bout.data(), p.bout.size(), 1);
  j["blocks"] = std::move(blocks);
  return j;
}

GruParams params_from_json(const nlohmann::json& j) {
  if (j.value("version", -1) != 1) throw SchemaError("parameter checkpoint: unsupported version");
  if (!j.contains("blocks")) throw SchemaError("parameter checkpoint: missing 'blocks'");
  const auto& blocks = j.at("blocks");

  auto read = [&blocks](const char* name, double* data, Eigen::Index rows, Eigen::Index cols) {
    if (!blocks.contains(name)) {
      throw SchemaError(std::string("parameter checkpoint: missing block ") + name);
    }
    const auto& b = blocks.at(name);
    const auto& shape = b.at("shape");
    if (shape.at(0).get<Eigen::Index>() != rows || shape.at(1).get<Eigen::Index>() != cols) {
      throw SchemaError(std::string("parameter checkpoint: shape mismatch for ") + name);
    }
    const auto& values = b.at("data");
    if (static_cast<Eigen::Index>(values.size()) != rows * cols) {
      throw SchemaError(std::string("parameter checkpoint: data length mismatch for ") + name);
    }
    for (Eigen::Index i = 0; i < rows * cols; ++i) {
      data[i] = values.at(static_cast<std::size_t>(i)).get<double>();
    }
  };

  const auto& wz_shape = blocks.at("Wz").at("shape");
  const auto hidden = wz_shape.at(0).get<Eigen::Index>();
  const auto input = wz_shape.at(1).get<Eigen::Index>();
  const auto output = blocks.at("Wout").at("shape").at(0).get<Eigen::Index>();

  GruParams p = GruParams::zeros(input, hidden, output);
  read("Wz", p.Wz.data(), hidden, input);
  read("Wr", p.Wr.data(), hidden, input);
  read("Wh", p.Wh.data(), hidden, input);
  read("Rz", p.Rz.data(), hidden, hidden);
  read("Rr", p.Rr.data(), hidden, hidden);
  read("Rh", p.Rh.data(), hidden, hidden);
  read("bz", p.bz.data(), hidden, 1);
  read("br", p.br.data(), hidden, 1);
  read("bh", p.bh.data(), hidden, 1);
  read("Wout", p.Wout.data(), output, hidden);
  read("bout", p.bout.data(), output, 1);
  p.validate();
  return p;
}

}  // namespace pgrnn
