#include "realexp/adapters.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace realexp {

std::string modality_name(Modality modality) {
  switch (modality) {
    case Modality::Tabular: return "tabular";
    case Modality::Text: return "text";
    case Modality::Image: return "image";
  }
  throw ValidationError("unknown modality");
}

Modality modality_from_name(const std::string& name) {
  if (name == "tabular") return Modality::Tabular;
  if (name == "text") return Modality::Text;
  if (name == "image") return Modality::Image;
  throw ValidationError("unknown modality: " + name);
}

AdaptedInstance AdaptedInstance::tabular(
    std::vector<double> columns, std::vector<double> baseline,
    std::optional<std::vector<std::string>> labels) {
  if (columns.empty()) throw ValidationError("tabular instance needs n >= 1");
  if (baseline.empty()) baseline.assign(columns.size(), 0.0);
  if (baseline.size() != columns.size()) {
    throw ValidationError("baseline length must match column count");
  }
  AdaptedInstance out;
  out.modality = Modality::Tabular;
  out.n = static_cast<int>(columns.size());
  out.columns = std::move(columns);
  out.baseline = std::move(baseline);
  if (labels) {
    if (labels->size() != out.columns.size()) {
      throw ValidationError("label count must match column count");
    }
    out.labels = std::move(labels);
  }
  return out;
}

AdaptedInstance AdaptedInstance::text(std::vector<std::string> tokens) {
  if (tokens.empty()) throw ValidationError("text instance needs n >= 1");
  for (const std::string& t : tokens) {
    if (t.empty()) throw ValidationError("text tokens must be non-empty");
  }
  AdaptedInstance out;
  out.modality = Modality::Text;
  out.n = static_cast<int>(tokens.size());
  out.tokens = std::move(tokens);
  return out;
}

AdaptedInstance AdaptedInstance::from_image(ImageData image,
                                            std::vector<int> segments,
                                            std::string path, MaskFill fill) {
  if (image.width < 1 || image.height < 1) {
    throw ValidationError("image must be non-empty");
  }
  if (image.channels != 1 && image.channels != 3) {
    throw ValidationError("image must have 1 or 3 channels");
  }
  if (image.pixels.size() != image.size()) {
    throw ValidationError("pixel buffer does not match image dimensions");
  }
  if (segments.size() !=
      static_cast<std::size_t>(image.width) * image.height) {
    throw ValidationError("segment map does not match image dimensions");
  }
  int max_label = -1;
  for (int label : segments) {
    if (label < 0) throw ValidationError("segment labels must be >= 0");
    max_label = std::max(max_label, label);
  }
  std::vector<bool> present(static_cast<std::size_t>(max_label) + 1, false);
  for (int label : segments) present[static_cast<std::size_t>(label)] = true;
  for (bool p : present) {
    if (!p) throw ValidationError("segment labels must be dense {0..n-1}");
  }
  AdaptedInstance out;
  out.modality = Modality::Image;
  out.n = max_label + 1;
  out.image = std::move(image);
  out.segments = std::move(segments);
  out.image_path = std::move(path);
  out.fill = fill;
  return out;
}

std::vector<int> grid_segment(int width, int height, int rows, int cols) {
  if (width < 1 || height < 1) throw ValidationError("image dimensions must be positive");
  if (rows < 1 || cols < 1) throw ValidationError("grid needs rows*cols >= 1");
  if (rows > height || cols > width) {
    throw ValidationError("grid cells cannot outnumber pixels per axis");
  }
  const int cell_h = height / rows;
  const int cell_w = width / cols;
  std::vector<int> labels(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    const int r = std::min(y / cell_h, rows - 1);
    for (int x = 0; x < width; ++x) {
      const int c = std::min(x / cell_w, cols - 1);
      labels[static_cast<std::size_t>(y) * width + x] = r * cols + c;
    }
  }
  return labels;
}

SegmentMap segment_map_from_rows(
    const std::vector<std::vector<long long>>& rows) {
  if (rows.empty() || rows.front().empty()) {
    throw ValidationError("segment map must be non-empty");
  }
  const std::size_t width = rows.front().size();
  for (const auto& row : rows) {
    if (row.size() != width) {
      throw ValidationError("segment map rows must form a rectangle");
    }
  }
  SegmentMap map;
  map.width = static_cast<int>(width);
  map.height = static_cast<int>(rows.size());
  map.labels.reserve(width * rows.size());
  std::map<long long, int> dense;  // first-appearance order in row-major scan
  for (const auto& row : rows) {
    for (long long raw : row) {
      auto it = dense.find(raw);
      if (it == dense.end()) {
        it = dense.emplace(raw, static_cast<int>(dense.size())).first;
      }
      map.labels.push_back(it->second);
    }
  }
  map.n = static_cast<int>(dense.size());
  return map;
}

namespace {

SegmentMap segment_map_from_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open segment map: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("segment map is not valid JSON: " +
                          std::string(e.what()));
  }
  if (!doc.is_array()) {
    throw ValidationError("segment map JSON must be a 2D integer array");
  }
  std::vector<std::vector<long long>> rows;
  for (const auto& row : doc) {
    if (!row.is_array()) {
      throw ValidationError("segment map JSON must be a 2D integer array");
    }
    std::vector<long long> values;
    for (const auto& cell : row) {
      if (!cell.is_number_integer()) {
        throw ValidationError("segment labels must be integers");
      }
      values.push_back(cell.get<long long>());
    }
    rows.push_back(std::move(values));
  }
  return segment_map_from_rows(rows);
}

bool ends_with(const std::string& text, const std::string& suffix) {
  return text.size() >= suffix.size() &&
         text.compare(text.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

SegmentMap load_segment_map(const std::string& path) {
  if (ends_with(path, ".pgm")) {
    const ImageData img = read_pnm(path);
    if (img.channels != 1) {
      throw ValidationError("segment map PGM must be single-channel");
    }
    std::vector<std::vector<long long>> rows(
        static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) {
      rows[static_cast<std::size_t>(y)].resize(
          static_cast<std::size_t>(img.width));
      for (int x = 0; x < img.width; ++x) {
        rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] =
            img.pixels[static_cast<std::size_t>(y) * img.width + x];
      }
    }
    return segment_map_from_rows(rows);
  }
  return segment_map_from_json(path);
}

namespace {

void check_mask_arity(const AdaptedInstance& instance, const Mask& mask) {
  if (mask.arity() != instance.n) {
    throw ValidationError("mask arity " + std::to_string(mask.arity()) +
                          " does not match instance n = " +
                          std::to_string(instance.n));
  }
}

}  // namespace

std::vector<double> apply_mask_tabular(const AdaptedInstance& instance,
                                       const Mask& mask) {
  if (instance.modality != Modality::Tabular) {
    throw ValidationError("instance is not tabular");
  }
  check_mask_arity(instance, mask);
  std::vector<double> out(instance.columns);
  for (int j = 0; j < instance.n; ++j) {
    if (!mask.mu[static_cast<std::size_t>(j)]) {
      out[static_cast<std::size_t>(j)] =
          instance.baseline[static_cast<std::size_t>(j)];
    }
  }
  return out;
}

std::vector<std::string> apply_mask_text(const AdaptedInstance& instance,
                                         const Mask& mask) {
  if (instance.modality != Modality::Text) {
    throw ValidationError("instance is not text");
  }
  check_mask_arity(instance, mask);
  std::vector<std::string> out;
  out.reserve(instance.tokens.size());
  for (int j = 0; j < instance.n; ++j) {
    if (mask.mu[static_cast<std::size_t>(j)]) {
      out.push_back(instance.tokens[static_cast<std::size_t>(j)]);
    }
  }
  return out;
}

ImageData apply_mask_image(const AdaptedInstance& instance, const Mask& mask) {
  if (instance.modality != Modality::Image) {
    throw ValidationError("instance is not an image");
  }
  check_mask_arity(instance, mask);
  const ImageData& src = instance.image;
  ImageData out = src;

  std::vector<double> fill(static_cast<std::size_t>(src.channels), 0.0);
  if (instance.fill == MaskFill::ChannelMean) {
    const std::size_t pixel_count =
        static_cast<std::size_t>(src.width) * src.height;
    for (std::size_t p = 0; p < pixel_count; ++p) {
      for (int ch = 0; ch < src.channels; ++ch) {
        fill[static_cast<std::size_t>(ch)] +=
            src.pixels[p * src.channels + ch];
      }
    }
    for (double& f : fill) f /= static_cast<double>(pixel_count);
  }

  const std::size_t pixel_count =
      static_cast<std::size_t>(src.width) * src.height;
  for (std::size_t p = 0; p < pixel_count; ++p) {
    const int segment = instance.segments[p];
    if (mask.mu[static_cast<std::size_t>(segment)]) continue;
    for (int ch = 0; ch < src.channels; ++ch) {
      out.pixels[p * src.channels + ch] = static_cast<std::uint8_t>(
          std::lround(fill[static_cast<std::size_t>(ch)]));
    }
  }
  return out;
}

nlohmann::json wire_payload(const AdaptedInstance& instance, const Mask& mask) {
  check_mask_arity(instance, mask);
  switch (instance.modality) {
    case Modality::Tabular:
      return nlohmann::json(apply_mask_tabular(instance, mask));
    case Modality::Text:
      return nlohmann::json(apply_mask_text(instance, mask));
    case Modality::Image: {
      nlohmann::json payload;
      payload["path"] = instance.image_path;
      std::vector<int> masked;
      for (int j = 0; j < instance.n; ++j) {
        if (!mask.mu[static_cast<std::size_t>(j)]) masked.push_back(j);
      }
      payload["masked_segments"] = masked;
      return payload;
    }
  }
  throw ValidationError("unknown modality");
}

void render_overlay(const AdaptedInstance& instance,
                    const Attribution& attribution, const OverlayStyle& style,
                    const std::string& out_path) {
  if (instance.modality != Modality::Image) {
    throw ValidationError("overlay rendering needs an image instance");
  }
  if (attribution.arity() != instance.n) {
    throw ValidationError("attribution arity does not match segment count");
  }
  if (style.mode == OverlayStyle::Mode::TopKHighlight &&
      (style.k < 1 || style.k > instance.n)) {
    throw ValidationError("top-k must lie in [1, n]");
  }

  const std::vector<int> ranking = ranking_of(attribution.phi);

  // Per-segment intensity factor.
  std::vector<double> factor(static_cast<std::size_t>(instance.n), 1.0);
  if (style.mode == OverlayStyle::Mode::TopKHighlight) {
    std::fill(factor.begin(), factor.end(), style.dim);
    for (int r = 0; r < style.k; ++r) {
      factor[static_cast<std::size_t>(ranking[static_cast<std::size_t>(r)])] =
          1.0;
    }
  } else {
    const auto [lo_it, hi_it] =
        std::minmax_element(attribution.phi.begin(), attribution.phi.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi > lo) {
      for (int j = 0; j < instance.n; ++j) {
        factor[static_cast<std::size_t>(j)] =
            (attribution.phi[static_cast<std::size_t>(j)] - lo) / (hi - lo);
      }
    }
  }

  ImageData out = instance.image;
  const std::size_t pixel_count =
      static_cast<std::size_t>(out.width) * out.height;
  for (std::size_t p = 0; p < pixel_count; ++p) {
    const double f = factor[static_cast<std::size_t>(instance.segments[p])];
    for (int ch = 0; ch < out.channels; ++ch) {
      const std::size_t at = p * out.channels + ch;
      out.pixels[at] = static_cast<std::uint8_t>(
          std::lround(static_cast<double>(out.pixels[at]) * f));
    }
  }
  write_pnm(out, out_path);

  nlohmann::json sidecar;
  sidecar["ranking"] = ranking;
  sidecar["phi"] = attribution.phi;
  std::ofstream side(out_path + ".json");
  if (!side) throw ValidationError("cannot write sidecar for " + out_path);
  side << sidecar.dump(2) << '\n';
}

ImageData read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open image: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6") {
    throw ValidationError("unsupported PNM magic '" + magic + "' in " + path);
  }
  auto next_int = [&in, &path]() {
    // Skips whitespace and '#' comment lines.
    while (true) {
      const int c = in.peek();
      if (c == '#') {
        std::string line;
        std::getline(in, line);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        break;
      }
    }
    long long value = 0;
    if (!(in >> value)) throw ValidationError("truncated PNM header: " + path);
    return value;
  };
  ImageData img;
  img.width = static_cast<int>(next_int());
  img.height = static_cast<int>(next_int());
  const long long maxval = next_int();
  if (img.width < 1 || img.height < 1 || maxval < 1 || maxval > 255) {
    throw ValidationError("unsupported PNM geometry in " + path);
  }
  img.channels = (magic == "P3" || magic == "P6") ? 3 : 1;
  img.pixels.resize(img.size());
  if (magic == "P5" || magic == "P6") {
    in.get();  // single whitespace after maxval
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
      throw ValidationError("truncated PNM payload: " + path);
    }
  } else {
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      img.pixels[i] = static_cast<std::uint8_t>(next_int());
    }
  }
  return img;
}

void write_pnm(const ImageData& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write image: " + path);
  out << (image.channels == 3 ? "P6" : "P5") << '\n'
      << image.width << ' ' << image.height << '\n'
      << 255 << '\n';
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
}

}  // namespace realexp
