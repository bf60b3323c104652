#include "panograph/io/dataset.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

#include "panograph/errors.hpp"
#include "panograph/io/container.hpp"
#include "panograph/io/jsonl.hpp"

namespace panograph::io {

namespace fs = std::filesystem;
using nlohmann::json;

graph::BodyTopology Manifest::body() const {
  auto b = graph::make_body(layout, joints);
  if (objects == 0) return b;
  return graph::attach_objects(std::move(b), objects, attachments);
}

bool is_validation(std::size_t index) { return splitmix64(index) % 5 == 0; }

std::string sample_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sample_%04zu", index);
  return buf;
}

Manifest read_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  json j;
  try {
    j = json::parse(read_file(path));
    Manifest m;
    m.num_classes = j.at("num_classes").get<std::size_t>();
    m.persons = j.at("persons").get<std::size_t>();
    m.joints = j.at("joints").get<std::size_t>();
    m.objects = j.at("objects").get<std::size_t>();
    m.frames = j.at("frames").get<std::size_t>();
    m.layout = graph::parse_layout(j.at("layout").get<std::string>());
    for (const auto& a : j.at("attachments")) m.attachments.push_back({a.at(0).get<std::size_t>(), a.at(1).get<std::size_t>()});
    for (const auto& s : j.at("samples")) {
      SampleRecord r{s.at("id").get<std::string>(), s.at("label").get<std::size_t>(), s.at("split") == "val"};
      if (r.label >= m.num_classes) throw InputError(path.string() + ": sample " + r.id + " label out of range");
      m.samples.push_back(std::move(r));
    }
    return m;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_manifest(const fs::path& dir, const Manifest& m) {
  json j;
  j["format"] = "panograph-dataset";
  j["num_classes"] = m.num_classes;
  j["persons"] = m.persons;
  j["joints"] = m.joints;
  j["objects"] = m.objects;
  j["frames"] = m.frames;
  j["layout"] = graph::to_string(m.layout);
  j["attachments"] = json::array();
  for (const auto& a : m.attachments) j["attachments"].push_back({a.slot, a.joint});
  j["samples"] = json::array();
  for (const auto& s : m.samples) {
    j["samples"].push_back({{"id", s.id}, {"label", s.label}, {"split", s.validation ? "val" : "train"}});
  }
  write_file_atomic(dir / "manifest.json", j.dump(2) + "\n");
}

Manifest write_synthetic_dataset(const fs::path& dir, const SyntheticSpec& spec) {
  spec.validate();
  Manifest m;
  m.num_classes = spec.num_classes;
  m.persons = spec.persons;
  m.joints = spec.joints;
  m.objects = spec.objects;
  m.frames = spec.frames;
  m.layout = graph::Layout::Chain;
  m.attachments = synthetic_attachments(spec);
  fs::create_directories(dir / "detections");
  for (std::size_t i = 0; i < spec.sample_count(); ++i) {
    const SyntheticSample s = generate_sample(spec, i);
    const std::string id = sample_id(i);
    save_skeleton(dir / (id + ".pgt"), s.skeleton, s.label);
    write_file_atomic(dir / "detections" / (id + ".jsonl"), format_detections(s.detections));
    m.samples.push_back({id, s.label, is_validation(i)});
  }
  write_manifest(dir, m);
  return m;
}

void save_skeleton(const fs::path& path, const Tensor& skeleton, std::size_t label) {
  Container c;
  c.add("skeleton", skeleton);
  c.add("label", Tensor({1}, static_cast<double>(label)));
  write_container(path, c);
}

namespace {

std::size_t read_label(const Container& c, const fs::path& path) {
  const Tensor& t = c.get("label");
  if (t.size() != 1 || t[0] < 0 || t[0] != static_cast<double>(static_cast<std::size_t>(t[0]))) {
    throw FormatError(path.string() + ": entry 'label' must hold one non-negative integer");
  }
  return static_cast<std::size_t>(t[0]);
}

}  // namespace

LabeledSkeleton load_skeleton(const fs::path& path) {
  const Container c = read_container(path);
  const Tensor& s = c.get("skeleton");
  if (s.rank() != 4) throw FormatError(path.string() + ": entry 'skeleton' must be rank 4");
  return {s, read_label(c, path)};
}

void save_features(const fs::path& path, const features::FeatureBundle& bundle, std::size_t label) {
  Container c;
  for (std::size_t s = 0; s < features::kStreamCount; ++s) {
    c.add(features::to_string(static_cast<features::Stream>(s)), bundle.streams[s]);
  }
  c.add("label", Tensor({1}, static_cast<double>(label)));
  write_container(path, c);
}

train::Sample load_features(const fs::path& path) {
  const Container c = read_container(path);
  train::Sample s;
  for (std::size_t k = 0; k < features::kStreamCount; ++k) {
    s.features.streams[k] = c.get(features::to_string(static_cast<features::Stream>(k)));
  }
  s.label = read_label(c, path);
  return s;
}

std::string format_report(const reassign::SequenceReport& report) {
  json j;
  j["slot_mean_track_len"] = report.slot_mean_track_len;
  j["dropped_per_frame"] = report.dropped_per_frame;
  j["mean_track_len"] = report.mean_track_len;
  return j.dump() + "\n";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Validation;
  if (name == "all") return Split::All;
  throw ConfigError("unknown split '" + name + "' (expected train, val or all)");
}

std::vector<train::Sample> load_feature_split(const fs::path& dir, const Manifest& manifest, Split split) {
  std::vector<train::Sample> out;
  for (const auto& r : manifest.samples) {
    if (split == Split::Train && r.validation) continue;
    if (split == Split::Validation && !r.validation) continue;
    const fs::path path = dir / "features" / (r.id + ".pgt");
    if (!fs::exists(path)) throw InputError("missing feature cache " + path.string() + " (run the features stage)");
    train::Sample s = load_features(path);
    if (s.label != r.label) throw InputError(path.string() + ": label disagrees with the manifest");
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace panograph::io
