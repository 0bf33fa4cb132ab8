#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "realexp/coalition.hpp"
#include "realexp/perturbation.hpp"

namespace realexp {

enum class Modality { Tabular, Text, Image };

std::string modality_name(Modality modality);
Modality modality_from_name(const std::string& name);

// Raw pixels, row-major, channels interleaved (1 = gray, 3 = rgb).
struct ImageData {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  std::size_t size() const {
    return static_cast<std::size_t>(width) * height * channels;
  }
};

// Fill rule for masked-out image segments.
enum class MaskFill { ChannelMean, Black };

// A raw instance adapted to a feature set: tabular columns, text tokens, or
// an image plus a segment map whose labels are exactly {0..n-1}.
struct AdaptedInstance {
  Modality modality = Modality::Tabular;
  int n = 0;
  std::optional<std::vector<std::string>> labels;

  // Tabular
  std::vector<double> columns;
  std::vector<double> baseline;

  // Text
  std::vector<std::string> tokens;

  // Image
  ImageData image;
  std::vector<int> segments;  // one label per pixel
  std::string image_path;     // payload reference used on the wire
  MaskFill fill = MaskFill::ChannelMean;

  static AdaptedInstance tabular(
      std::vector<double> columns, std::vector<double> baseline = {},
      std::optional<std::vector<std::string>> labels = {});
  static AdaptedInstance text(std::vector<std::string> tokens);
  static AdaptedInstance from_image(ImageData image, std::vector<int> segments,
                                    std::string path = "",
                                    MaskFill fill = MaskFill::ChannelMean);
};

// Partitions a width x height image into rows x cols rectangles labeled
// row-major; remainder pixels join the last row/column of cells.
std::vector<int> grid_segment(int width, int height, int rows, int cols);

struct SegmentMap {
  int width = 0;
  int height = 0;
  int n = 0;
  std::vector<int> labels;  // dense {0..n-1}, row-major
};

// Reads a segment map from a JSON 2D integer array or a PGM image whose
// pixel values are segment labels; labels are re-mapped to dense {0..n-1}
// in order of first appearance.
SegmentMap load_segment_map(const std::string& path);
SegmentMap segment_map_from_rows(const std::vector<std::vector<long long>>& rows);

// Masked payload renderers. The all-ones mask is the identity for every
// modality; text masking drops tokens while preserving survivor order.
std::vector<double> apply_mask_tabular(const AdaptedInstance& instance,
                                       const Mask& mask);
std::vector<std::string> apply_mask_text(const AdaptedInstance& instance,
                                         const Mask& mask);
ImageData apply_mask_image(const AdaptedInstance& instance, const Mask& mask);

// The modality-specific payload sent to scoring endpoints: tabular = float
// array, text = surviving token array, image = {"path", "masked_segments"}.
nlohmann::json wire_payload(const AdaptedInstance& instance, const Mask& mask);

struct OverlayStyle {
  enum class Mode { TopKHighlight, HeatRamp };
  Mode mode = Mode::HeatRamp;
  int k = 1;          // TopKHighlight only
  double dim = 0.3;   // intensity factor for non-selected segments
};

// Writes the overlay as a PPM/PGM next to a JSON sidecar ("<out>.json")
// holding {"ranking": [...], "phi": [...]} with phi sorted descending by
// ranking order.
void render_overlay(const AdaptedInstance& instance,
                    const Attribution& attribution, const OverlayStyle& style,
                    const std::string& out_path);

// Minimal PNM codec (P2/P3/P5/P6).
ImageData read_pnm(const std::string& path);
void write_pnm(const ImageData& image, const std::string& path);

}  // namespace realexp
