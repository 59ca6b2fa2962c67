#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "polsar/io.hpp"
#include "polsar/neural.hpp"

namespace polsar::nn {

inline constexpr std::string_view kCheckpointMagic = "PLSRNN1\n";

/// Shape/activation description of a stack; parameters go to the payload.
nlohmann::json describe(const FeedForward<double>& net);

/// Appends weights (column-major) then bias for every layer, as f64 LE.
void append_parameters(std::vector<std::uint8_t>& payload, const FeedForward<double>& net);

/// Rebuilds a stack from its description, consuming the payload from
/// `offset` (advanced past the consumed bytes).
FeedForward<double> read_parameters(const nlohmann::json& description, std::span<const std::uint8_t> payload,
                                    std::size_t& offset);

nlohmann::json weights_to_json(const SparseAeWeights<double>& w);
SparseAeWeights<double> weights_from_json(const nlohmann::json& j);

/// Checkpoint: JSON header (shapes, activations, hyperparameters, seed)
/// and a little-endian float64 parameter payload.
void save_autoencoder(const SparseAutoencoder<double>& ae, std::uint64_t seed, const fs::path& path);
SparseAutoencoder<double> load_autoencoder(const fs::path& path);

/// CSV with columns epoch,loss,<term names...>.
std::string loss_history_csv(const std::vector<LossBreakdown<double>>& history, bool classifier = false);

}  // namespace polsar::nn
