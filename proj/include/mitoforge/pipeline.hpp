#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mitoforge/imaging.hpp"

namespace mitoforge {

// primary_train: the splittable source group. external_a / external_b are
// extra labelled sets used in their entirety for training.
enum class DatasetGroup { PrimaryTrain, ExternalA, ExternalB };
enum class Split { Unassigned, Train, Val };

const char* to_string(DatasetGroup group) noexcept;
const char* to_string(Split split) noexcept;
DatasetGroup parse_group(const std::string& text);
Split parse_split(const std::string& text);

struct ManifestRecord {
  std::string id;
  std::filesystem::path path;
  int label = 0;
  DatasetGroup group = DatasetGroup::PrimaryTrain;
  std::string domain;
  Split split = Split::Unassigned;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

// CSV with header `id,path,label,group,domain,split`. Ids must be unique and
// labels nonnegative.
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);
std::vector<ManifestRecord> parse_manifest(const std::string& text,
                                           const std::string& source_name);
void write_manifest(const std::vector<ManifestRecord>& records,
                    const std::filesystem::path& path);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct AugmentConfig {
  std::size_t side = 224;
  Interval brightness_range{-0.2, 0.2};
  Interval contrast_range{0.8, 1.2};
  Interval rotation_range{-180.0, 180.0};
  Interval fisheye_range{-0.9, 0.9};
  double fda_probability = 0.5;
  double fda_beta = 0.01;
  std::optional<std::filesystem::path> target_dir;
  std::uint64_t seed = 0;

  // Throws InvalidInput on empty intervals, out-of-range probabilities,
  // nonpositive contrast or fisheye coefficients <= -1.
  void validate() const;

  friend bool operator==(const AugmentConfig&, const AugmentConfig&) = default;
};

// JSON using the field names above; missing fields keep their defaults and
// intervals are two-element arrays.
AugmentConfig parse_augment_config(const std::string& json_text);
AugmentConfig load_augment_config(const std::filesystem::path& path);
std::string to_json(const AugmentConfig& cfg);

// Named pool of FDA target images. Loaded from every *.png in a directory,
// ordered by filename.
class TargetPool {
 public:
  TargetPool() = default;
  static TargetPool load(const std::filesystem::path& dir);

  void add(std::string name, ImageBuffer image);
  bool empty() const noexcept { return names_.empty(); }
  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const ImageBuffer& image(std::size_t i) const { return images_.at(i); }

 private:
  std::vector<std::string> names_;
  std::vector<ImageBuffer> images_;
};

// Every random parameter drawn for one item. Replaying these through the
// primitives reproduces the augmented image bit-exactly.
struct Provenance {
  std::string id;
  double brightness = 0.0;
  double contrast = 1.0;
  double angle = 0.0;
  double k = 0.0;
  bool fda_applied = false;
  std::optional<std::string> fda_target;
  double fda_beta = 0.0;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

// One JSON object per line: {id, brightness, contrast, angle, k, fda_applied,
// fda_target, fda_beta}.
std::string to_json_line(const Provenance& p);
Provenance parse_provenance_line(const std::string& line);

struct AugmentResult {
  ImageBuffer image;
  Provenance provenance;
};

// resize_pad -> brightness_contrast -> rotate -> fisheye -> FDA (with
// probability cfg.fda_probability). Draws come from CounterRng(item_seed) in
// a fixed order: brightness, contrast, angle, k, FDA coin, target index. All
// six draws are consumed whether or not FDA fires.
// Throws MissingTargets when FDA fires and `targets` is null or empty.
AugmentResult augment_one(const ImageBuffer& img, const AugmentConfig& cfg,
                          std::uint64_t item_seed,
                          const TargetPool* targets = nullptr,
                          std::string id = {});

// Augments every record (item index = position in `records`, item seed =
// derive_seed(cfg.seed, index)) and writes <out_dir>/<id>.png. Relative
// record paths resolve against `base_dir`. Returns provenance in record
// order, independent of `workers`.
std::vector<Provenance> augment_records(const std::vector<ManifestRecord>& records,
                                        const std::filesystem::path& base_dir,
                                        const AugmentConfig& cfg,
                                        const TargetPool& targets,
                                        const std::filesystem::path& out_dir,
                                        std::size_t workers);

struct GroupWeights {
  std::map<DatasetGroup, double> weights{{DatasetGroup::PrimaryTrain, 1.0},
                                         {DatasetGroup::ExternalA, 0.15},
                                         {DatasetGroup::ExternalB, 0.15}};
};

// n draws with replacement; a record's per-draw probability is
// gw[group] / sum over records of gw[record group].
std::vector<std::string> weighted_sample(const std::vector<ManifestRecord>& records,
                                         const GroupWeights& gw, std::size_t n,
                                         std::uint64_t seed);

struct SplitResult {
  std::vector<ManifestRecord> train;
  std::vector<ManifestRecord> val;
};

// Shuffles the primary_train records with CounterRng(seed) (Fisher-Yates),
// sends the first ceil(ratio * N) to train and the rest to val. External
// groups always go to train, after the primary records, in input order.
SplitResult split_manifest(const std::vector<ManifestRecord>& records,
                           double ratio, std::uint64_t seed);

}  // namespace mitoforge
