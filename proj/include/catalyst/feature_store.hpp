#pragma once

// Interchange format for dumped pre-pooling activation maps, logits and
// classifier heads.
//
// A dump is a directory holding
//   manifest.json       JSON, fixed key order
//   activations.catf    "CATF" u32 version, n_samples, n_channels, spatial_k,
//                       then f32 payload (sample, channel, row, column)
//   logits.catl         "CATL" u32 version, n_samples, n_classes, f32 payload
//   head.cath           "CATH" u32 version, n_channels, n_classes,
//                       weights (channel-major, n x C) then bias (C)
// All integers are little-endian u32 and all floats little-endian IEEE f32.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catalyst/error.hpp"

namespace catalyst {

// One sample's n x k x k feature map, channel-major then row-major.
class ActivationMap {
 public:
  ActivationMap() = default;
  // Throws Error(kDimensionMismatch) if values.size() != n*k*k, and
  // Error(kInvalidArgument) if n or k is zero.
  ActivationMap(std::uint32_t channels, std::uint32_t spatial, std::vector<float> values);

  std::uint32_t channels() const noexcept { return channels_; }
  std::uint32_t spatial() const noexcept { return spatial_; }
  std::size_t spatial_size() const noexcept {
    return static_cast<std::size_t>(spatial_) * spatial_;
  }
  std::span<const float> channel(std::size_t i) const noexcept {
    return std::span<const float>(values_).subspan(i * spatial_size(), spatial_size());
  }
  std::span<const float> values() const noexcept { return values_; }
  std::span<float> mutable_values() noexcept { return values_; }

  friend bool operator==(const ActivationMap&, const ActivationMap&) = default;

 private:
  std::uint32_t channels_ = 0;
  std::uint32_t spatial_ = 0;
  std::vector<float> values_;
};

struct LogitRecord {
  std::vector<float> values;
  friend bool operator==(const LogitRecord&, const LogitRecord&) = default;
};

// Final linear layer: logits = Wᵀh + b with W stored n x C (row i = channel i).
struct ClassifierHead {
  std::uint32_t channels = 0;
  std::uint32_t classes = 0;
  std::vector<float> weights;
  std::vector<float> bias;

  std::span<const float> row(std::size_t channel) const noexcept {
    return std::span<const float>(weights).subspan(channel * classes, classes);
  }
  friend bool operator==(const ClassifierHead&, const ClassifierHead&) = default;
};

enum class SplitRole { kIdTrain, kIdVal, kIdTest, kOod };

std::string_view to_string(SplitRole role) noexcept;
SplitRole parse_split_role(std::string_view text);

struct DatasetManifest {
  std::uint32_t format_version = 1;
  std::string name;
  SplitRole role = SplitRole::kIdTest;
  std::uint32_t n_samples = 0;
  std::uint32_t n_channels = 0;
  std::uint32_t spatial_k = 0;
  std::uint32_t n_classes = 0;
  // File paths as written in the manifest (relative to base_dir unless
  // absolute).
  std::string activations_file;
  std::string logits_file;
  std::optional<std::string> head_file;
  // Directory the manifest was read from or written to. Not serialized.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& file) const;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<ActivationMap> maps;
  std::vector<LogitRecord> logits;
  std::optional<ClassifierHead> head;
};

struct LoadOptions {
  // Accept negative activations (non-ReLU hook points).
  bool allow_negative = false;
};

struct Violation {
  ErrorCode code = ErrorCode::kInvalidValue;
  std::string message;
  std::optional<std::uint32_t> sample;
  std::optional<std::uint32_t> channel;
};

// Writes the three binary files plus manifest.json into `dir` (created if
// needed) and returns the manifest.
DatasetManifest save_dump(std::span<const ActivationMap> samples,
                          std::span<const LogitRecord> logits,
                          const std::optional<ClassifierHead>& head,
                          const std::filesystem::path& dir, std::string_view name,
                          SplitRole role);

Dataset load_dump(const DatasetManifest& manifest, const LoadOptions& options = {});

// Empty iff load_dump(manifest, options) succeeds.
std::vector<Violation> validate_dump(const DatasetManifest& manifest,
                                     const LoadOptions& options = {});

// `path` may name manifest.json itself or the directory containing it.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& file);
std::string manifest_to_json(const DatasetManifest& manifest);

// Head files on their own; the formats above.
void save_head(const ClassifierHead& head, const std::filesystem::path& file);
ClassifierHead load_head(const std::filesystem::path& file);

}  // namespace catalyst
