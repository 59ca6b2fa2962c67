#include "polsar/neural_io.hpp"

#include <iomanip>
#include <sstream>

namespace polsar::nn {

const char* activation_name(Activation a) { return a == Activation::Tanh ? "tanh" : "linear"; }

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "linear") return Activation::Linear;
  fail(ErrorCode::MalformedModel, "unknown activation '" + name + "'");
}

nlohmann::json describe(const FeedForward<double>& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers) {
    layers.push_back({{"in", l.in_dim()}, {"out", l.out_dim()}, {"activation", activation_name(l.activation)}});
  }
  return layers;
}

void append_parameters(std::vector<std::uint8_t>& payload, const FeedForward<double>& net) {
  for (const auto& l : net.layers) {
    for (Eigen::Index i = 0; i < l.weights.size(); ++i) append_f64(payload, l.weights.data()[i]);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) append_f64(payload, l.bias(i));
  }
}

FeedForward<double> read_parameters(const nlohmann::json& description, std::span<const std::uint8_t> payload,
                                    std::size_t& offset) {
  FeedForward<double> net;
  try {
    for (const auto& d : description) {
      const int in = d.at("in").get<int>();
      const int out = d.at("out").get<int>();
      if (in <= 0 || out <= 0) fail(ErrorCode::MalformedModel, "non-positive layer size");
      DenseLayer<double> layer(in, out, activation_from_name(d.at("activation").get<std::string>()));
      const std::size_t need = (static_cast<std::size_t>(in) * out + out) * sizeof(double);
      if (offset + need > payload.size()) fail(ErrorCode::MalformedModel, "parameter payload is truncated");
      for (Eigen::Index i = 0; i < layer.weights.size(); ++i, offset += sizeof(double)) {
        layer.weights.data()[i] = read_f64(payload, offset);
      }
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i, offset += sizeof(double)) {
        layer.bias(i) = read_f64(payload, offset);
      }
      if (!layer.all_finite()) fail(ErrorCode::MalformedModel, "non-finite parameter");
      net.layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedModel, std::string("layer description: ") + e.what());
  }
  return net;
}

nlohmann::json weights_to_json(const SparseAeWeights<double>& w) {
  return {{"reconstruction", w.reconstruction}, {"l2", w.l2}, {"sparsity", w.sparsity}, {"rho", w.rho}};
}

SparseAeWeights<double> weights_from_json(const nlohmann::json& j) {
  SparseAeWeights<double> w;
  w.reconstruction = j.at("reconstruction").get<double>();
  w.l2 = j.at("l2").get<double>();
  w.sparsity = j.at("sparsity").get<double>();
  w.rho = j.at("rho").get<double>();
  return w;
}

void save_autoencoder(const SparseAutoencoder<double>& ae, std::uint64_t seed, const fs::path& path) {
  const nlohmann::json header = {{"kind", "sparse_autoencoder"},
                                 {"encoder", describe(ae.encoder)},
                                 {"decoder", describe(ae.decoder)},
                                 {"hyper", weights_to_json(ae.weights)},
                                 {"seed", seed},
                                 {"dtype", "f64"}};
  std::vector<std::uint8_t> payload;
  append_parameters(payload, ae.encoder);
  append_parameters(payload, ae.decoder);
  write_file(path, encode_envelope(kCheckpointMagic, header, payload));
}

SparseAutoencoder<double> load_autoencoder(const fs::path& path) {
  const auto env = read_envelope(path, kCheckpointMagic, ErrorCode::MalformedModel);
  SparseAutoencoder<double> ae;
  std::size_t offset = 0;
  try {
    ae.encoder = read_parameters(env.header.at("encoder"), env.payload, offset);
    ae.decoder = read_parameters(env.header.at("decoder"), env.payload, offset);
    ae.weights = weights_from_json(env.header.at("hyper"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedModel, std::string("checkpoint header: ") + e.what());
  }
  if (offset != env.payload.size()) fail(ErrorCode::MalformedModel, "trailing bytes in checkpoint payload");
  ae.validate();
  return ae;
}

std::string loss_history_csv(const std::vector<LossBreakdown<double>>& history, bool classifier) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << (classifier ? "epoch,loss,l2,cross_entropy\n" : "epoch,loss,l2,reconstruction,sparsity\n");
  for (std::size_t e = 0; e < history.size(); ++e) {
    const auto& h = history[e];
    out << e + 1 << ',' << h.total << ',' << h.l2 << ',' << h.reconstruction;
    if (!classifier) out << ',' << h.sparsity;
    out << '\n';
  }
  return out.str();
}

}  // namespace polsar::nn
