#include "polsar/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

namespace polsar {

static_assert(std::endian::native == std::endian::little, "binary payloads assume a little-endian host");

namespace {

template <typename T>
void append_raw(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T read_raw(std::span<const std::uint8_t> in, std::size_t offset) {
  if (offset + sizeof(T) > in.size()) fail(ErrorCode::DimensionMismatch, "payload read past end");
  T v;
  std::memcpy(&v, in.data() + offset, sizeof(T));
  return v;
}

}  // namespace

void append_f32(std::vector<std::uint8_t>& out, float v) { append_raw(out, v); }
void append_f64(std::vector<std::uint8_t>& out, double v) { append_raw(out, v); }
void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) { append_raw(out, v); }
float read_f32(std::span<const std::uint8_t> in, std::size_t offset) { return read_raw<float>(in, offset); }
double read_f64(std::span<const std::uint8_t> in, std::size_t offset) { return read_raw<double>(in, offset); }
std::uint32_t read_u32(std::span<const std::uint8_t> in, std::size_t offset) {
  return read_raw<std::uint32_t>(in, offset);
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoFailure, "short write to '" + path.string() + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

PlsrEnvelope parse_envelope(std::span<const std::uint8_t> bytes, std::string_view magic, ErrorCode magic_error) {
  if (bytes.size() < magic.size() || std::memcmp(bytes.data(), magic.data(), magic.size()) != 0) {
    fail(magic_error, "missing magic line");
  }
  const auto begin = bytes.begin() + static_cast<std::ptrdiff_t>(magic.size());
  const auto newline = std::find(begin, bytes.end(), std::uint8_t{'\n'});
  if (newline == bytes.end()) fail(magic_error, "header line is not terminated");

  PlsrEnvelope env;
  try {
    env.header = nlohmann::json::parse(begin, newline);
  } catch (const nlohmann::json::exception& e) {
    fail(magic_error, std::string("header is not valid JSON: ") + e.what());
  }
  if (!env.header.is_object()) fail(magic_error, "header must be a JSON object");
  env.payload.assign(newline + 1, bytes.end());
  return env;
}

PlsrEnvelope read_envelope(const fs::path& path, std::string_view magic, ErrorCode magic_error) {
  const auto bytes = read_file(path);
  try {
    return parse_envelope(bytes, magic, magic_error);
  } catch (const Error& e) {
    fail(e.code(), "'" + path.string() + "': " + e.message());
  }
}

std::vector<std::uint8_t> encode_envelope(std::string_view magic, const nlohmann::json& header,
                                          std::span<const std::uint8_t> payload) {
  std::vector<std::uint8_t> bytes(magic.begin(), magic.end());
  const std::string line = header.dump() + "\n";
  bytes.insert(bytes.end(), line.begin(), line.end());
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  return bytes;
}

PlsrEnvelope read_plsr(const fs::path& path) { return read_envelope(path, kPlsrMagic, ErrorCode::MalformedHeader); }

void write_plsr(const fs::path& path, const nlohmann::json& header, std::span<const std::uint8_t> payload) {
  write_file(path, encode_envelope(kPlsrMagic, header, payload));
}

nlohmann::json image_header(const MultiBandImage& image) {
  return {{"width", image.width}, {"height", image.height}, {"bands", image.band_names()}, {"dtype", "f32"}};
}

std::size_t image_header_size(const MultiBandImage& image) {
  return kPlsrMagic.size() + image_header(image).dump().size() + 1;
}

void save_image(const MultiBandImage& image, const fs::path& path) {
  std::vector<std::uint8_t> payload;
  payload.reserve(image.bands.size() * image.pixel_count() * 6 * sizeof(float));
  for (const auto& band : image.bands) {
    for (const auto& s : band.pixels) {
      append_f32(payload, s.hh.real());
      append_f32(payload, s.hh.imag());
      append_f32(payload, s.hv.real());
      append_f32(payload, s.hv.imag());
      append_f32(payload, s.vv.real());
      append_f32(payload, s.vv.imag());
    }
  }
  write_plsr(path, image_header(image), payload);
}

MultiBandImage load_image(const fs::path& path) {
  const auto env = read_plsr(path);
  const auto& h = env.header;
  int width = 0;
  int height = 0;
  std::vector<std::string> bands;
  try {
    width = h.at("width").get<int>();
    height = h.at("height").get<int>();
    bands = h.at("bands").get<std::vector<std::string>>();
    if (h.at("dtype").get<std::string>() != "f32") fail(ErrorCode::MalformedHeader, "unsupported dtype");
    if (h.contains("kind") && h.at("kind").get<std::string>() != "image") {
      fail(ErrorCode::MalformedHeader, "PLSR1 file is not a scattering image");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedHeader, std::string("missing or mistyped header key: ") + e.what());
  }
  if (width <= 0 || height <= 0) fail(ErrorCode::MalformedHeader, "width and height must be positive");
  if (bands.empty() || bands.size() > 3) fail(ErrorCode::MalformedHeader, "format v1 holds 1 to 3 bands");

  MultiBandImage image(width, height, bands);
  const std::size_t expected = bands.size() * image.pixel_count() * 6 * sizeof(float);
  if (env.payload.size() != expected) {
    fail(ErrorCode::DimensionMismatch, "payload has " + std::to_string(env.payload.size()) + " bytes, header implies " +
                                           std::to_string(expected));
  }
  std::size_t offset = 0;
  auto next = [&] {
    const float v = read_f32(env.payload, offset);
    offset += sizeof(float);
    return v;
  };
  for (auto& band : image.bands) {
    for (auto& s : band.pixels) {
      const float a = next(), b = next(), c = next(), d = next(), e = next(), f = next();
      s = {{a, b}, {c, d}, {e, f}};
      if (!is_finite(s)) fail(ErrorCode::NonFiniteValue, "non-finite scattering value in band '" + band.name + "'");
    }
  }
  return image;
}

fs::path label_sidecar_path(const fs::path& path) { return fs::path(path.string() + ".json"); }

void save_label_map(const LabelMap& labels, const fs::path& path) {
  labels.validate();
  const int maxval = std::max(1, labels.class_count());
  std::ostringstream head;
  head << "P5\n" << labels.width << " " << labels.height << "\n" << maxval << "\n";
  const std::string h = head.str();
  std::vector<std::uint8_t> bytes(h.begin(), h.end());
  for (auto id : labels.ids) {
    if (maxval < 256) {
      bytes.push_back(static_cast<std::uint8_t>(id));
    } else {
      bytes.push_back(static_cast<std::uint8_t>(id >> 8));
      bytes.push_back(static_cast<std::uint8_t>(id & 0xff));
    }
  }
  write_file(path, bytes);
  write_text(label_sidecar_path(path), nlohmann::json(labels.class_names).dump() + "\n");
}

LabelMap load_label_map(const fs::path& path) {
  const auto bytes = read_file(path);
  std::size_t pos = 0;
  auto token = [&]() -> std::string {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
    return t;
  };
  if (token() != "P5") fail(ErrorCode::MalformedHeader, "'" + path.string() + "' is not a binary PGM");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(token());
    height = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    fail(ErrorCode::MalformedHeader, "bad PGM header in '" + path.string() + "'");
  }
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) fail(ErrorCode::MalformedHeader, "bad PGM size");
  ++pos;  // single whitespace after maxval

  std::vector<std::string> names;
  const auto sidecar = label_sidecar_path(path);
  if (fs::exists(sidecar)) {
    const auto text = read_file(sidecar);
    try {
      names = nlohmann::json::parse(text.begin(), text.end()).get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::MalformedHeader, std::string("class-name sidecar: ") + e.what());
    }
  } else {
    for (int c = 1; c <= maxval; ++c) names.push_back("class" + std::to_string(c));
  }

  LabelMap labels(width, height, names);
  const std::size_t bpp = maxval < 256 ? 1 : 2;
  if (bytes.size() - pos != labels.pixel_count() * bpp) {
    fail(ErrorCode::DimensionMismatch, "PGM payload size does not match header");
  }
  for (std::size_t i = 0; i < labels.pixel_count(); ++i) {
    labels.ids[i] = bpp == 1 ? bytes[pos + i]
                             : static_cast<std::uint16_t>((bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1]);
  }
  labels.validate();
  return labels;
}

}  // namespace polsar
