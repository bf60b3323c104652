#include "panograph/io/jsonl.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "panograph/errors.hpp"

namespace panograph::io {

namespace {

using nlohmann::json;

class LineContext {
 public:
  LineContext(const std::string& source, std::size_t line) : where_(source + ":" + std::to_string(line) + ": ") {}

  [[noreturn]] void fail(const std::string& message) const { throw FormatError(where_ + message); }

  const json& field(const json& record, const char* key) const {
    const auto it = record.find(key);
    if (it == record.end()) fail(std::string("missing \"") + key + "\"");
    return *it;
  }

  double number(const json& value, const std::string& what) const {
    if (!value.is_number()) fail(what + " must be a number");
    const double v = value.get<double>();
    if (!std::isfinite(v)) fail(what + " must be finite");
    return v;
  }

  std::int64_t integer(const json& value, const std::string& what) const {
    if (!value.is_number_integer()) fail(what + " must be an integer");
    return value.get<std::int64_t>();
  }

  reassign::Keypoint keypoint(const json& value, const std::string& what) const {
    if (!value.is_array() || value.size() != 3) fail(what + " must be [x, y, v]");
    return {number(value[0], what + ".x"), number(value[1], what + ".y"), number(value[2], what + ".v")};
  }

 private:
  std::string where_;
};

}  // namespace

std::vector<reassign::PoseFrame> parse_detections(std::string_view text, std::size_t joints, std::size_t objects,
                                                  const std::string& source) {
  std::vector<reassign::PoseFrame> frames;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const LineContext ctx(source, line_no);

    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      ctx.fail(std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) ctx.fail("record must be a JSON object");

    const std::int64_t t = ctx.integer(ctx.field(record, "t"), "\"t\"");
    if (t < 0) ctx.fail("\"t\" must be non-negative");
    const auto frame_index = static_cast<std::size_t>(t);
    if (!frames.empty() && frame_index < frames.back().frame_index) {
      ctx.fail("frame " + std::to_string(frame_index) + " follows frame " + std::to_string(frames.back().frame_index));
    }
    if (frames.empty() || frames.back().frame_index != frame_index) {
      frames.push_back({});
      frames.back().frame_index = frame_index;
    }
    reassign::PoseFrame& frame = frames.back();

    if (record.contains("obj")) {
      const std::int64_t slot = ctx.integer(record["obj"], "\"obj\"");
      if (slot < 0 || static_cast<std::size_t>(slot) >= objects) {
        ctx.fail("object slot " + std::to_string(slot) + " out of range (n=" + std::to_string(objects) + ")");
      }
      frame.objects.push_back({static_cast<std::size_t>(slot), ctx.keypoint(ctx.field(record, "kpt"), "\"kpt\"")});
      continue;
    }

    reassign::Detection det;
    det.track_id = ctx.integer(ctx.field(record, "id"), "\"id\"");
    det.confidence = ctx.number(ctx.field(record, "conf"), "\"conf\"");
    const json& bbox = ctx.field(record, "bbox");
    if (!bbox.is_array() || bbox.size() != 4) ctx.fail("\"bbox\" must be [cx, cy, w, h]");
    det.center_x = ctx.number(bbox[0], "bbox cx");
    det.center_y = ctx.number(bbox[1], "bbox cy");
    const json& kpts = ctx.field(record, "kpts");
    if (!kpts.is_array()) ctx.fail("\"kpts\" must be an array");
    if (kpts.size() != joints) {
      ctx.fail("expected " + std::to_string(joints) + " keypoints, got " + std::to_string(kpts.size()));
    }
    for (std::size_t j = 0; j < kpts.size(); ++j) {
      det.keypoints.push_back(ctx.keypoint(kpts[j], "keypoint " + std::to_string(j)));
    }
    frame.detections.push_back(std::move(det));
  }
  return frames;
}

std::string format_detections(const std::vector<reassign::PoseFrame>& frames) {
  std::string out;
  for (const auto& frame : frames) {
    for (const auto& det : frame.detections) {
      json kpts = json::array();
      double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
      for (std::size_t j = 0; j < det.keypoints.size(); ++j) {
        const auto& k = det.keypoints[j];
        kpts.push_back({k.x, k.y, k.v});
        min_x = j == 0 ? k.x : std::min(min_x, k.x);
        max_x = j == 0 ? k.x : std::max(max_x, k.x);
        min_y = j == 0 ? k.y : std::min(min_y, k.y);
        max_y = j == 0 ? k.y : std::max(max_y, k.y);
      }
      const json record = {{"t", frame.frame_index},
                           {"id", det.track_id},
                           {"conf", det.confidence},
                           {"bbox", {det.center_x, det.center_y, max_x - min_x, max_y - min_y}},
                           {"kpts", kpts}};
      out += record.dump();
      out += '\n';
    }
    for (const auto& obj : frame.objects) {
      const json record = {{"t", frame.frame_index}, {"obj", obj.slot}, {"kpt", {obj.point.x, obj.point.y, obj.point.v}}};
      out += record.dump();
      out += '\n';
    }
  }
  return out;
}

}  // namespace panograph::io
