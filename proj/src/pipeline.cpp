#include "mitoforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mitoforge/error.hpp"
#include "mitoforge/fda.hpp"
#include "mitoforge/fisheye.hpp"
#include "mitoforge/random.hpp"

namespace mitoforge {

using nlohmann::json;

// ---- AugmentConfig ----------------------------------------------------------

void AugmentConfig::validate() const {
  auto check_interval = [](const Interval& iv, const char* name) {
    require(std::isfinite(iv.lo) && std::isfinite(iv.hi) && iv.lo <= iv.hi,
            std::string("augment config: ") + name + " must be a finite [lo, hi] with lo <= hi");
  };
  require(side >= 1, "augment config: side must be >= 1");
  check_interval(brightness_range, "brightness_range");
  check_interval(contrast_range, "contrast_range");
  check_interval(rotation_range, "rotation_range");
  check_interval(fisheye_range, "fisheye_range");
  require(contrast_range.lo > 0.0, "augment config: contrast_range must be > 0");
  require(fisheye_range.lo > -1.0, "augment config: fisheye_range must lie in (-1, inf)");
  require(fda_probability >= 0.0 && fda_probability <= 1.0,
          "augment config: fda_probability must lie in [0, 1]");
  require(fda_beta >= 0.0 && fda_beta <= 1.0, "augment config: fda_beta must lie in [0, 1]");
}

namespace {

Interval interval_from(const json& j, const char* name) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    fail(ErrorKind::InvalidInput,
         std::string("augment config: ") + name + " must be a two-number array");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

AugmentConfig parse_augment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::InvalidInput, std::string("augment config: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::InvalidInput, "augment config must be a JSON object");

  static const char* known[] = {"side",          "brightness_range", "contrast_range",
                                "rotation_range", "fisheye_range",    "fda_probability",
                                "fda_beta",       "target_dir",       "seed"};
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(std::begin(known), std::end(known),
                     [&](const char* k) { return key == k; }) == std::end(known)) {
      fail(ErrorKind::InvalidInput, "augment config: unknown field '" + key + "'");
    }
  }

  AugmentConfig cfg;
  try {
    if (j.contains("side")) cfg.side = j["side"].get<std::size_t>();
    if (j.contains("brightness_range"))
      cfg.brightness_range = interval_from(j["brightness_range"], "brightness_range");
    if (j.contains("contrast_range"))
      cfg.contrast_range = interval_from(j["contrast_range"], "contrast_range");
    if (j.contains("rotation_range"))
      cfg.rotation_range = interval_from(j["rotation_range"], "rotation_range");
    if (j.contains("fisheye_range"))
      cfg.fisheye_range = interval_from(j["fisheye_range"], "fisheye_range");
    if (j.contains("fda_probability")) cfg.fda_probability = j["fda_probability"].get<double>();
    if (j.contains("fda_beta")) cfg.fda_beta = j["fda_beta"].get<double>();
    if (j.contains("target_dir") && !j["target_dir"].is_null())
      cfg.target_dir = j["target_dir"].get<std::string>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  } catch (const json::type_error& e) {
    fail(ErrorKind::InvalidInput, std::string("augment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

AugmentConfig load_augment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_augment_config(text.str());
}

std::string to_json(const AugmentConfig& cfg) {
  json j;
  j["side"] = cfg.side;
  j["brightness_range"] = {cfg.brightness_range.lo, cfg.brightness_range.hi};
  j["contrast_range"] = {cfg.contrast_range.lo, cfg.contrast_range.hi};
  j["rotation_range"] = {cfg.rotation_range.lo, cfg.rotation_range.hi};
  j["fisheye_range"] = {cfg.fisheye_range.lo, cfg.fisheye_range.hi};
  j["fda_probability"] = cfg.fda_probability;
  j["fda_beta"] = cfg.fda_beta;
  j["target_dir"] = cfg.target_dir ? json(cfg.target_dir->string()) : json(nullptr);
  j["seed"] = cfg.seed;
  return j.dump(2);
}

// ---- provenance -------------------------------------------------------------

std::string to_json_line(const Provenance& p) {
  // nlohmann::ordered_json keeps the documented field order.
  nlohmann::ordered_json j;
  j["id"] = p.id;
  j["brightness"] = p.brightness;
  j["contrast"] = p.contrast;
  j["angle"] = p.angle;
  j["k"] = p.k;
  j["fda_applied"] = p.fda_applied;
  j["fda_target"] = p.fda_target ? json(*p.fda_target) : json(nullptr);
  j["fda_beta"] = p.fda_beta;
  return j.dump();
}

Provenance parse_provenance_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    Provenance p;
    p.id = j.at("id").get<std::string>();
    p.brightness = j.at("brightness").get<double>();
    p.contrast = j.at("contrast").get<double>();
    p.angle = j.at("angle").get<double>();
    p.k = j.at("k").get<double>();
    p.fda_applied = j.at("fda_applied").get<bool>();
    if (!j.at("fda_target").is_null()) p.fda_target = j["fda_target"].get<std::string>();
    p.fda_beta = j.at("fda_beta").get<double>();
    return p;
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidInput, std::string("provenance line: ") + e.what());
  }
}

// ---- targets ----------------------------------------------------------------

TargetPool TargetPool::load(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    fail(ErrorKind::Io, "target directory not found: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  TargetPool pool;
  for (const auto& f : files) pool.add(f.filename().string(), load_png(f));
  return pool;
}

void TargetPool::add(std::string name, ImageBuffer image) {
  names_.push_back(std::move(name));
  images_.push_back(std::move(image));
}

// ---- augmentation -----------------------------------------------------------

AugmentResult augment_one(const ImageBuffer& img, const AugmentConfig& cfg,
                          std::uint64_t item_seed, const TargetPool* targets,
                          std::string id) {
  cfg.validate();
  CounterRng rng(item_seed);

  Provenance p;
  p.id = std::move(id);
  p.brightness = rng.uniform(cfg.brightness_range.lo, cfg.brightness_range.hi);
  p.contrast = rng.uniform(cfg.contrast_range.lo, cfg.contrast_range.hi);
  p.angle = rng.uniform(cfg.rotation_range.lo, cfg.rotation_range.hi);
  p.k = rng.uniform(cfg.fisheye_range.lo, cfg.fisheye_range.hi);
  const double coin = rng.next_unit();
  const double pick = rng.next_unit();
  p.fda_applied = coin < cfg.fda_probability;
  p.fda_beta = cfg.fda_beta;

  ImageBuffer out = resize_pad(img, cfg.side);
  out = brightness_contrast(out, p.brightness, p.contrast);
  out = rotate(out, p.angle);
  out = fisheye(out, {p.k, Interpolator::clamp()});

  if (p.fda_applied) {
    if (targets == nullptr || targets->empty()) {
      fail(ErrorKind::MissingTargets,
           "FDA selected for item '" + p.id + "' but no target images are available");
    }
    const std::size_t n = targets->size();
    const std::size_t index =
        std::min(n - 1, static_cast<std::size_t>(pick * static_cast<double>(n)));
    p.fda_target = targets->name(index);
    out = fda_transfer(out, targets->image(index), {cfg.fda_beta});
  }
  return {std::move(out), std::move(p)};
}

std::vector<Provenance> augment_records(const std::vector<ManifestRecord>& records,
                                        const std::filesystem::path& base_dir,
                                        const AugmentConfig& cfg,
                                        const TargetPool& targets,
                                        const std::filesystem::path& out_dir,
                                        std::size_t workers) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  std::vector<Provenance> provenance(records.size());
  std::vector<std::exception_ptr> errors(records.size());
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      try {
        const auto& r = records[i];
        const auto path = r.path.is_absolute() ? r.path : base_dir / r.path;
        auto result = augment_one(load_png(path), cfg, derive_seed(cfg.seed, i),
                                  &targets, r.id);
        save_png(result.image, out_dir / (r.id + ".png"));
        provenance[i] = std::move(result.provenance);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(records.size(), 1));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  // Report the lowest-index failure so errors do not depend on scheduling.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return provenance;
}

// ---- sampling and splitting -------------------------------------------------

std::vector<std::string> weighted_sample(const std::vector<ManifestRecord>& records,
                                         const GroupWeights& gw, std::size_t n,
                                         std::uint64_t seed) {
  require(!records.empty(), "weighted_sample: no records");
  require(n >= 1, "weighted_sample: n must be >= 1");

  std::vector<double> cumulative(records.size());
  double total = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto it = gw.weights.find(records[i].group);
    if (it == gw.weights.end()) {
      fail(ErrorKind::InvalidInput, std::string("weighted_sample: no weight for group ") +
                                        to_string(records[i].group));
    }
    require(it->second > 0.0 && std::isfinite(it->second),
            "weighted_sample: group weights must be positive");
    total += it->second;
    cumulative[i] = total;
  }

  CounterRng rng(seed);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t d = 0; d < n; ++d) {
    const double u = rng.next_unit() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    out.push_back(records[static_cast<std::size_t>(it - cumulative.begin())].id);
  }
  return out;
}

SplitResult split_manifest(const std::vector<ManifestRecord>& records, double ratio,
                           std::uint64_t seed) {
  require(ratio > 0.0 && ratio < 1.0, "split_manifest: ratio must lie in (0, 1)");
  std::vector<ManifestRecord> primary;
  std::vector<ManifestRecord> external;
  for (const auto& r : records) {
    (r.group == DatasetGroup::PrimaryTrain ? primary : external).push_back(r);
  }

  CounterRng rng(seed);
  for (std::size_t i = primary.size(); i > 1; --i) {
    std::swap(primary[i - 1], primary[rng.below(i)]);
  }
  // The small epsilon absorbs representation error such as 0.8 * 5.
  const auto n_train = static_cast<std::size_t>(
      std::ceil(ratio * static_cast<double>(primary.size()) - 1e-9));

  SplitResult result;
  for (std::size_t i = 0; i < primary.size(); ++i) {
    primary[i].split = i < n_train ? Split::Train : Split::Val;
    (i < n_train ? result.train : result.val).push_back(std::move(primary[i]));
  }
  for (auto& r : external) {
    r.split = Split::Train;
    result.train.push_back(std::move(r));
  }
  return result;
}

}  // namespace mitoforge
