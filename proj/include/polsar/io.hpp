#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "polsar/image.hpp"

namespace polsar {

namespace fs = std::filesystem;

/// Magic line shared by image, feature and segment rasters.
inline constexpr std::string_view kPlsrMagic = "PLSR1\n";

/// A PLSR1 envelope: magic, one JSON header line, raw little-endian payload.
struct PlsrEnvelope {
  nlohmann::json header;
  std::vector<std::uint8_t> payload;
};

PlsrEnvelope read_plsr(const fs::path& path);
void write_plsr(const fs::path& path, const nlohmann::json& header, std::span<const std::uint8_t> payload);

/// Same layout with an arbitrary magic line (model checkpoints use their own).
/// A magic mismatch raises `magic_error`.
PlsrEnvelope read_envelope(const fs::path& path, std::string_view magic, ErrorCode magic_error);
PlsrEnvelope parse_envelope(std::span<const std::uint8_t> bytes, std::string_view magic, ErrorCode magic_error);
std::vector<std::uint8_t> encode_envelope(std::string_view magic, const nlohmann::json& header,
                                          std::span<const std::uint8_t> payload);

/// Reads a PLSR1 scattering image ("dtype":"f32", 6 floats per pixel,
/// band-major then row-major).
MultiBandImage load_image(const fs::path& path);
void save_image(const MultiBandImage& image, const fs::path& path);

/// Bytes occupied by the header section (magic + JSON line) for this image.
std::size_t image_header_size(const MultiBandImage& image);
nlohmann::json image_header(const MultiBandImage& image);

/// Label maps are binary PGM (P5, maxval = class count) with the class
/// names in a JSON sidecar at `<path>.json`.
void save_label_map(const LabelMap& labels, const fs::path& path);
LabelMap load_label_map(const fs::path& path);
fs::path label_sidecar_path(const fs::path& path);

// Little-endian scalar packing used by every binary payload.
void append_f32(std::vector<std::uint8_t>& out, float v);
void append_f64(std::vector<std::uint8_t>& out, double v);
void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
float read_f32(std::span<const std::uint8_t> in, std::size_t offset);
double read_f64(std::span<const std::uint8_t> in, std::size_t offset);
std::uint32_t read_u32(std::span<const std::uint8_t> in, std::size_t offset);

std::vector<std::uint8_t> read_file(const fs::path& path);
void write_file(const fs::path& path, std::span<const std::uint8_t> bytes);
void write_text(const fs::path& path, const std::string& text);

}  // namespace polsar
