#include "catalyst/feature_store.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "json.hpp"

namespace catalyst {
namespace fs = std::filesystem;
using detail::Reader;

namespace {

constexpr std::string_view kActivationMagic = "CATF";
constexpr std::string_view kLogitMagic = "CATL";
constexpr std::string_view kHeadMagic = "CATH";
constexpr std::size_t kMaxValueViolations = 64;

std::string mismatch(std::string_view field, std::uint64_t header, std::uint64_t manifest) {
  std::ostringstream os;
  os << field << " in header (" << header << ") != manifest (" << manifest << ")";
  return os.str();
}

std::vector<unsigned char> encode_head(const ClassifierHead& head) {
  auto bytes = detail::make_header(kHeadMagic, {head.channels, head.classes});
  detail::put_f32s(bytes, head.weights);
  detail::put_f32s(bytes, head.bias);
  return bytes;
}

// Collects problems with one dump. When `out` is non-null the parsed payload
// is stored there as well. load_dump and validate_dump both run through this
// so that their verdicts cannot diverge.
class DumpScanner {
 public:
  DumpScanner(const DatasetManifest& manifest, const LoadOptions& options, Dataset* out)
      : m_(manifest), options_(options), out_(out) {}

  std::vector<Violation> run() {
    if (m_.format_version != detail::kFormatVersion) {
      add(ErrorCode::kInvalidValue,
          "unsupported format_version " + std::to_string(m_.format_version));
    }
    check_positive("n_samples", m_.n_samples);
    check_positive("n_channels", m_.n_channels);
    check_positive("spatial_k", m_.spatial_k);
    check_positive("n_classes", m_.n_classes);
    if (!violations_.empty()) return std::move(violations_);

    guarded([&] { scan_activations(); });
    guarded([&] { scan_logits(); });
    if (m_.head_file) guarded([&] { scan_head(); });
    return std::move(violations_);
  }

 private:
  void add(ErrorCode code, std::string message, std::optional<std::uint32_t> sample = {},
           std::optional<std::uint32_t> channel = {}) {
    violations_.push_back({code, std::move(message), sample, channel});
  }

  void check_positive(std::string_view field, std::uint32_t value) {
    if (value == 0) add(ErrorCode::kInvalidValue, std::string(field) + " must be positive");
  }

  template <typename F>
  void guarded(F&& f) {
    try {
      f();
    } catch (const Error& e) {
      add(e.code(), e.what());
    }
  }

  std::vector<unsigned char> open(const std::string& file) {
    const fs::path path = m_.resolve(file);
    if (!fs::exists(path)) throw Error(ErrorCode::kIo, "missing file: " + path.string());
    return detail::read_file(path);
  }

  bool header_matches(std::string_view field, std::uint32_t header, std::uint32_t expected) {
    if (header == expected) return true;
    add(ErrorCode::kDimensionMismatch, mismatch(field, header, expected));
    return false;
  }

  void value_violation(ErrorCode code, std::string message, std::uint32_t sample,
                       std::optional<std::uint32_t> channel) {
    ++value_violations_;
    if (value_violations_ <= kMaxValueViolations) {
      add(code, std::move(message), sample, channel);
    }
  }

  void flush_value_overflow(std::string_view file) {
    if (value_violations_ > kMaxValueViolations) {
      add(ErrorCode::kInvalidValue,
          std::to_string(value_violations_ - kMaxValueViolations) +
              " further value violations in " + std::string(file));
    }
    value_violations_ = 0;
  }

  void read_version(Reader& r) {
    const std::uint32_t version = r.u32();
    if (version != detail::kFormatVersion) {
      throw Error(ErrorCode::kInvalidValue, "unsupported file version " + std::to_string(version));
    }
  }

  void scan_activations() {
    const auto bytes = open(m_.activations_file);
    Reader r(bytes, m_.activations_file);
    r.expect_magic(kActivationMagic);
    read_version(r);
    const std::uint32_t n_samples = r.u32();
    const std::uint32_t n_channels = r.u32();
    const std::uint32_t k = r.u32();
    bool ok = header_matches("n_samples", n_samples, m_.n_samples);
    ok &= header_matches("n_channels", n_channels, m_.n_channels);
    ok &= header_matches("spatial_k", k, m_.spatial_k);
    if (!ok) return;

    const std::size_t per_channel = static_cast<std::size_t>(k) * k;
    const std::size_t per_sample = per_channel * n_channels;
    if (out_ != nullptr) out_->maps.reserve(n_samples);
    std::vector<float> buffer(per_sample);
    for (std::uint32_t s = 0; s < n_samples; ++s) {
      r.f32s(buffer);
      for (std::uint32_t c = 0; c < n_channels; ++c) {
        for (std::size_t j = 0; j < per_channel; ++j) {
          const float v = buffer[c * per_channel + j];
          if (!std::isfinite(v)) {
            value_violation(ErrorCode::kInvalidValue,
                            "non-finite activation at sample " + std::to_string(s) +
                                ", channel " + std::to_string(c),
                            s, c);
            break;
          }
          if (v < 0.0f && !options_.allow_negative) {
            value_violation(ErrorCode::kInvalidValue,
                            "negative activation at sample " + std::to_string(s) +
                                ", channel " + std::to_string(c),
                            s, c);
            break;
          }
        }
      }
      if (out_ != nullptr) out_->maps.emplace_back(n_channels, k, buffer);
    }
    r.expect_end();
    flush_value_overflow(m_.activations_file);
  }

  void scan_logits() {
    const auto bytes = open(m_.logits_file);
    Reader r(bytes, m_.logits_file);
    r.expect_magic(kLogitMagic);
    read_version(r);
    const std::uint32_t n_samples = r.u32();
    const std::uint32_t n_classes = r.u32();
    bool ok = header_matches("n_samples", n_samples, m_.n_samples);
    ok &= header_matches("n_classes", n_classes, m_.n_classes);
    if (!ok) return;

    if (out_ != nullptr) out_->logits.reserve(n_samples);
    std::vector<float> buffer(n_classes);
    for (std::uint32_t s = 0; s < n_samples; ++s) {
      r.f32s(buffer);
      for (float v : buffer) {
        if (!std::isfinite(v)) {
          value_violation(ErrorCode::kInvalidValue,
                          "non-finite logit at sample " + std::to_string(s), s, {});
          break;
        }
      }
      if (out_ != nullptr) out_->logits.push_back({buffer});
    }
    r.expect_end();
    flush_value_overflow(m_.logits_file);
  }

  void scan_head() {
    const auto bytes = open(*m_.head_file);
    Reader r(bytes, *m_.head_file);
    r.expect_magic(kHeadMagic);
    read_version(r);
    ClassifierHead head;
    head.channels = r.u32();
    head.classes = r.u32();
    bool ok = header_matches("n_channels", head.channels, m_.n_channels);
    ok &= header_matches("n_classes", head.classes, m_.n_classes);
    if (!ok) return;
    head.weights.resize(static_cast<std::size_t>(head.channels) * head.classes);
    head.bias.resize(head.classes);
    r.f32s(head.weights);
    r.f32s(head.bias);
    r.expect_end();
    for (float v : head.weights) {
      if (!std::isfinite(v)) {
        add(ErrorCode::kInvalidValue, "non-finite head weight");
        break;
      }
    }
    for (float v : head.bias) {
      if (!std::isfinite(v)) {
        add(ErrorCode::kInvalidValue, "non-finite head bias");
        break;
      }
    }
    if (out_ != nullptr) out_->head = std::move(head);
  }

  const DatasetManifest& m_;
  const LoadOptions& options_;
  Dataset* out_;
  std::vector<Violation> violations_;
  std::size_t value_violations_ = 0;
};

}  // namespace

ActivationMap::ActivationMap(std::uint32_t channels, std::uint32_t spatial,
                             std::vector<float> values)
    : channels_(channels), spatial_(spatial), values_(std::move(values)) {
  if (channels == 0 || spatial == 0) {
    throw Error(ErrorCode::kInvalidArgument, "activation map needs n >= 1 and k >= 1");
  }
  if (values_.size() != static_cast<std::size_t>(channels) * spatial * spatial) {
    throw Error(ErrorCode::kDimensionMismatch,
                "activation map expects " +
                    std::to_string(static_cast<std::size_t>(channels) * spatial * spatial) +
                    " values, got " + std::to_string(values_.size()));
  }
}

std::string_view to_string(SplitRole role) noexcept {
  switch (role) {
    case SplitRole::kIdTrain:
      return "id_train";
    case SplitRole::kIdVal:
      return "id_val";
    case SplitRole::kIdTest:
      return "id_test";
    case SplitRole::kOod:
      return "ood";
  }
  return "unknown";
}

SplitRole parse_split_role(std::string_view text) {
  for (SplitRole r : {SplitRole::kIdTrain, SplitRole::kIdVal, SplitRole::kIdTest, SplitRole::kOod}) {
    if (to_string(r) == text) return r;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown split role: " + std::string(text));
}

fs::path DatasetManifest::resolve(const std::string& file) const {
  const fs::path p(file);
  return p.is_absolute() ? p : base_dir / p;
}

DatasetManifest save_dump(std::span<const ActivationMap> samples,
                          std::span<const LogitRecord> logits,
                          const std::optional<ClassifierHead>& head, const fs::path& dir,
                          std::string_view name, SplitRole role) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyInput, "empty dataset");
  const std::uint32_t n = samples.front().channels();
  const std::uint32_t k = samples.front().spatial();
  for (const auto& s : samples) {
    if (s.channels() != n || s.spatial() != k) {
      throw Error(ErrorCode::kDimensionMismatch, "samples do not share (n, k)");
    }
  }
  if (logits.size() != samples.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "expected one logit record per sample (" + std::to_string(samples.size()) +
                    "), got " + std::to_string(logits.size()));
  }
  const auto n_classes = static_cast<std::uint32_t>(logits.front().values.size());
  if (n_classes < 2) throw Error(ErrorCode::kInvalidArgument, "logits need C >= 2");
  for (const auto& l : logits) {
    if (l.values.size() != n_classes) {
      throw Error(ErrorCode::kDimensionMismatch, "logit records do not share C");
    }
  }
  if (head) {
    if (head->channels != n || head->classes != n_classes ||
        head->weights.size() != static_cast<std::size_t>(n) * n_classes ||
        head->bias.size() != n_classes) {
      throw Error(ErrorCode::kDimensionMismatch, "head dimensions disagree with samples");
    }
  }

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());

  DatasetManifest m;
  m.name = std::string(name);
  m.role = role;
  m.n_samples = static_cast<std::uint32_t>(samples.size());
  m.n_channels = n;
  m.spatial_k = k;
  m.n_classes = n_classes;
  m.activations_file = "activations.catf";
  m.logits_file = "logits.catl";
  m.base_dir = dir;

  auto act = detail::make_header(kActivationMagic, {m.n_samples, n, k});
  act.reserve(act.size() + samples.size() * samples.front().values().size_bytes());
  for (const auto& s : samples) detail::put_f32s(act, s.values());
  detail::write_file(dir / m.activations_file, act);

  auto lg = detail::make_header(kLogitMagic, {m.n_samples, n_classes});
  for (const auto& l : logits) detail::put_f32s(lg, l.values);
  detail::write_file(dir / m.logits_file, lg);

  if (head) {
    m.head_file = "head.cath";
    detail::write_file(dir / *m.head_file, encode_head(*head));
  }
  write_manifest(m, dir / "manifest.json");
  return m;
}

Dataset load_dump(const DatasetManifest& manifest, const LoadOptions& options) {
  Dataset data;
  data.manifest = manifest;
  auto violations = DumpScanner(manifest, options, &data).run();
  if (!violations.empty()) {
    throw Error(violations.front().code, violations.front().message);
  }
  return data;
}

std::vector<Violation> validate_dump(const DatasetManifest& manifest, const LoadOptions& options) {
  return DumpScanner(manifest, options, nullptr).run();
}

std::string manifest_to_json(const DatasetManifest& m) {
  nlohmann::ordered_json j;
  j["format_version"] = m.format_version;
  j["name"] = m.name;
  j["role"] = std::string(to_string(m.role));
  j["n_samples"] = m.n_samples;
  j["n_channels"] = m.n_channels;
  j["spatial_k"] = m.spatial_k;
  j["n_classes"] = m.n_classes;
  j["files"]["activations"] = m.activations_file;
  j["files"]["logits"] = m.logits_file;
  j["files"]["head"] = m.head_file ? nlohmann::ordered_json(*m.head_file) : nullptr;
  return j.dump(2) + "\n";
}

void write_manifest(const DatasetManifest& manifest, const fs::path& file) {
  const std::string text = manifest_to_json(manifest);
  detail::write_file(file, std::span(reinterpret_cast<const unsigned char*>(text.data()),
                                     text.size()));
}

DatasetManifest read_manifest(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / "manifest.json" : path;
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest: " + file.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    DatasetManifest m;
    m.format_version = j.at("format_version").get<std::uint32_t>();
    m.name = j.at("name").get<std::string>();
    m.role = parse_split_role(j.at("role").get<std::string>());
    m.n_samples = j.at("n_samples").get<std::uint32_t>();
    m.n_channels = j.at("n_channels").get<std::uint32_t>();
    m.spatial_k = j.at("spatial_k").get<std::uint32_t>();
    m.n_classes = j.at("n_classes").get<std::uint32_t>();
    const auto& files = j.at("files");
    m.activations_file = files.at("activations").get<std::string>();
    m.logits_file = files.at("logits").get<std::string>();
    if (files.contains("head") && !files.at("head").is_null()) {
      m.head_file = files.at("head").get<std::string>();
    }
    m.base_dir = file.parent_path();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidValue, "malformed manifest " + file.string() + ": " + e.what());
  }
}

void save_head(const ClassifierHead& head, const fs::path& file) {
  detail::write_file(file, encode_head(head));
}

ClassifierHead load_head(const fs::path& file) {
  const auto bytes = detail::read_file(file);
  Reader r(bytes, file.filename().string());
  r.expect_magic(kHeadMagic);
  if (r.u32() != detail::kFormatVersion) {
    throw Error(ErrorCode::kInvalidValue, "unsupported head version");
  }
  ClassifierHead head;
  head.channels = r.u32();
  head.classes = r.u32();
  head.weights.resize(static_cast<std::size_t>(head.channels) * head.classes);
  head.bias.resize(head.classes);
  r.f32s(head.weights);
  r.f32s(head.bias);
  r.expect_end();
  return head;
}

}  // namespace catalyst
