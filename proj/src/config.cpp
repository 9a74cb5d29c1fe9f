#include "svo/config.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <string>

#include "svo/error.hpp"

namespace svo {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& why) {
  throw Error(ErrorCode::kInvalidArgument, "config key '" + path + "': " + why);
}

// Walks one JSON object, dispatching known keys and rejecting the rest.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad(path_.empty() ? "<root>" : path_, "expected an object");
  }

  void field(const std::string& key, std::function<void(const json&, const std::string&)> fn) {
    handlers_[key] = std::move(fn);
  }

  void integer(const std::string& key, int& out) {
    field(key, [&out](const json& v, const std::string& p) {
      if (!v.is_number_integer()) bad(p, "expected an integer");
      const auto x = v.get<long long>();
      if (x < -(1LL << 31) || x > (1LL << 31) - 1) bad(p, "integer out of range");
      out = static_cast<int>(x);
    });
  }

  void real(const std::string& key, double& out) {
    field(key, [&out](const json& v, const std::string& p) {
      if (!v.is_number()) bad(p, "expected a number");
      out = v.get<double>();
      if (!std::isfinite(out)) bad(p, "expected a finite number");
    });
  }

  void boolean(const std::string& key, bool& out) {
    field(key, [&out](const json& v, const std::string& p) {
      if (!v.is_boolean()) bad(p, "expected true or false");
      out = v.get<bool>();
    });
  }

  void run() {
    for (const auto& [key, value] : j_.items()) {
      const std::string p = path_.empty() ? key : path_ + "." + key;
      const auto it = handlers_.find(key);
      if (it == handlers_.end()) bad(p, "unknown key");
      it->second(value, p);
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::map<std::string, std::function<void(const json&, const std::string&)>> handlers_;
};

void read_features(const json& j, const std::string& path, FeatureConfig& f) {
  Section s(j, path);
  s.integer("stride", f.stride);
  s.real("fine_sigma", f.fine_sigma);
  s.real("coarse_sigma", f.coarse_sigma);
  s.integer("variance_radius", f.variance_radius);
  s.run();
}

void read_pipeline(const json& j, const std::string& path, PipelineConfig& c) {
  Section s(j, path);
  s.integer("patches_per_frame", c.patches_per_frame);
  s.integer("random_patches", c.random_patches);
  s.integer("patch_radius", c.patch_radius);
  s.integer("nms_radius", c.nms_radius);
  s.integer("grid", c.grid);
  s.integer("border", c.border);
  s.integer("removal_window", c.removal_window);
  s.integer("iterations", c.iterations);
  s.integer("neighborhood", c.neighborhood);
  s.integer("gn_iterations", c.gn_iterations);
  s.integer("correlation_side", c.correlation_side);
  s.real("damping", c.damping);
  s.boolean("full_patch_residuals", c.full_patch_residuals);
  s.field("provider", [&c](const json& v, const std::string& p) {
    if (!v.is_string()) bad(p, "expected \"oracle\" or \"tracker\"");
    const auto name = v.get<std::string>();
    if (name == "oracle") {
      c.provider = ProviderKind::kOracle;
    } else if (name == "tracker") {
      c.provider = ProviderKind::kTracker;
    } else {
      bad(p, "expected \"oracle\" or \"tracker\", got \"" + name + "\"");
    }
  });
  s.real("oracle_sigma", c.oracle_sigma);
  s.integer("threads", c.threads);
  s.field("features", [&c](const json& v, const std::string& p) { read_features(v, p, c.features); });
  s.run();
}

void read_homography(const json& j, const std::string& path, SequenceConfig& c) {
  Section s(j, path);
  HomographySchedule& h = c.schedule;
  AugmentationConfig& a = c.augmentation;
  s.integer("length", h.length);
  s.real("scale", h.scale);
  s.real("rotation", h.rotation);
  s.real("translation", h.translation);
  s.real("perspective", h.perspective);
  s.field("augmentation", [&a](const json& v, const std::string& p) {
    Section as(v, p);
    as.real("gain", a.gain);
    as.real("gain_gradient", a.gain_gradient);
    as.real("bias", a.bias);
    as.real("saturation", a.saturation);
    as.real("hue", a.hue);
    as.integer("max_blur_length", a.max_blur_length);
    as.field("occlusion", [&a](const json& ov, const std::string& op) {
      OcclusionConfig& o = a.occlusion;
      Section os(ov, op);
      os.boolean("enabled", o.enabled);
      os.integer("superpixels", o.superpixels);
      os.real("compactness", o.compactness);
      os.integer("iterations", o.iterations);
      os.integer("max_segments", o.max_segments);
      os.real("min_fraction", o.min_fraction);
      os.real("max_fraction", o.max_fraction);
      os.run();
    });
    as.run();
  });
  s.run();
}

void validate_homography(const SequenceConfig& c) {
  const HomographySchedule& h = c.schedule;
  const AugmentationConfig& a = c.augmentation;
  if (h.length < 1) bad("homography.length", "must be positive");
  if (h.scale < 0 || h.scale >= 1) bad("homography.scale", "must be in [0, 1)");
  if (h.rotation < 0) bad("homography.rotation", "must be non-negative");
  if (h.translation < 0) bad("homography.translation", "must be non-negative");
  if (h.perspective < 0) bad("homography.perspective", "must be non-negative");
  if (a.gain < 0 || a.gain >= 1) bad("homography.augmentation.gain", "must be in [0, 1)");
  if (a.gain_gradient < 0) bad("homography.augmentation.gain_gradient", "must be non-negative");
  if (a.bias < 0) bad("homography.augmentation.bias", "must be non-negative");
  if (a.saturation < 0 || a.saturation >= 1) {
    bad("homography.augmentation.saturation", "must be in [0, 1)");
  }
  if (a.hue < 0) bad("homography.augmentation.hue", "must be non-negative");
  if (a.max_blur_length < 0) bad("homography.augmentation.max_blur_length", "must be non-negative");
  const OcclusionConfig& o = a.occlusion;
  if (o.superpixels < 1) bad("homography.augmentation.occlusion.superpixels", "must be positive");
  if (o.compactness <= 0) bad("homography.augmentation.occlusion.compactness", "must be positive");
  if (o.iterations < 1) bad("homography.augmentation.occlusion.iterations", "must be positive");
  if (o.max_segments < 1) bad("homography.augmentation.occlusion.max_segments", "must be positive");
  if (o.min_fraction < 0 || o.max_fraction > 1 || o.min_fraction > o.max_fraction) {
    bad("homography.augmentation.occlusion", "need 0 <= min_fraction <= max_fraction <= 1");
  }
}

}  // namespace

std::string provider_name(ProviderKind kind) {
  return kind == ProviderKind::kOracle ? "oracle" : "tracker";
}

RunConfig parse_run_config(const json& j) {
  RunConfig c;
  Section s(j, "");
  s.field("seed", [&c](const json& v, const std::string& p) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      bad(p, "expected a non-negative integer");
    }
    c.seed = v.get<std::uint64_t>();
  });
  s.field("pipeline", [&c](const json& v, const std::string& p) { read_pipeline(v, p, c.pipeline); });
  s.field("homography", [&c](const json& v, const std::string& p) {
    read_homography(v, p, c.homography);
  });
  s.field("patch_set", [&c](const json& v, const std::string& p) {
    Section ps(v, p);
    ps.integer("salient", c.patch_set.salient);
    ps.integer("random", c.patch_set.random);
    ps.run();
  });
  s.run();

  c.pipeline.seed = c.seed;
  try {
    c.pipeline.validate();
  } catch (const Error& e) {
    bad("pipeline", e.detail());
  }
  validate_homography(c.homography);
  if (c.patch_set.salient < 0 || c.patch_set.random < 0 ||
      c.patch_set.salient + c.patch_set.random < 1) {
    bad("patch_set", "counts must be non-negative with at least one patch");
  }
  return c;
}

nlohmann::json to_json(const RunConfig& c) {
  const PipelineConfig& p = c.pipeline;
  const HomographySchedule& h = c.homography.schedule;
  const AugmentationConfig& a = c.homography.augmentation;
  const OcclusionConfig& o = a.occlusion;
  json j;
  j["seed"] = c.seed;
  j["pipeline"] = {
      {"patches_per_frame", p.patches_per_frame},
      {"random_patches", p.random_patches},
      {"patch_radius", p.patch_radius},
      {"nms_radius", p.nms_radius},
      {"grid", p.grid},
      {"border", p.border},
      {"removal_window", p.removal_window},
      {"iterations", p.iterations},
      {"neighborhood", p.neighborhood},
      {"gn_iterations", p.gn_iterations},
      {"correlation_side", p.correlation_side},
      {"damping", p.damping},
      {"full_patch_residuals", p.full_patch_residuals},
      {"provider", provider_name(p.provider)},
      {"oracle_sigma", p.oracle_sigma},
      {"threads", p.threads},
      {"features",
       {{"stride", p.features.stride},
        {"fine_sigma", p.features.fine_sigma},
        {"coarse_sigma", p.features.coarse_sigma},
        {"variance_radius", p.features.variance_radius}}},
  };
  j["homography"] = {
      {"length", h.length},
      {"scale", h.scale},
      {"rotation", h.rotation},
      {"translation", h.translation},
      {"perspective", h.perspective},
      {"augmentation",
       {{"gain", a.gain},
        {"gain_gradient", a.gain_gradient},
        {"bias", a.bias},
        {"saturation", a.saturation},
        {"hue", a.hue},
        {"max_blur_length", a.max_blur_length},
        {"occlusion",
         {{"enabled", o.enabled},
          {"superpixels", o.superpixels},
          {"compactness", o.compactness},
          {"iterations", o.iterations},
          {"max_segments", o.max_segments},
          {"min_fraction", o.min_fraction},
          {"max_fraction", o.max_fraction}}}}},
  };
  j["patch_set"] = {{"salient", c.patch_set.salient}, {"random", c.patch_set.random}};
  return j;
}

}  // namespace svo
