#include "pairbox/toolkit/io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace pairbox::io {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Errors raised while decoding one record; the caller adds source and line.
struct FieldError {
  std::string reason;
};

[[noreturn]] void fail(const std::string& field, const std::string& reason) {
  throw FieldError{field + ": " + reason};
}

void require_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) fail(where.empty() ? key : where + "." + key, "unknown field");
  }
}

const json& member(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(where.empty() ? key : where + "." + key, "missing");
  return *it;
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(field, "must be finite");
  return d;
}

Box parse_box(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != 4) fail(field, "expected [x, y, w, h]");
  const double x = number(v[0], field + "[0]");
  const double y = number(v[1], field + "[1]");
  const double w = number(v[2], field + "[2]");
  const double h = number(v[3], field + "[3]");
  if (w < 0.0) fail(field, "negative width w=" + format_g9(w));
  if (h < 0.0) fail(field, "negative height h=" + format_g9(h));
  return Box(x, y, w, h);
}

PairedBox parse_pair(const json& obj, const std::string& where) {
  const bool has_box = obj.contains("box");
  const bool has_v = obj.contains("v");
  const bool has_t = obj.contains("t");
  if (has_box) {
    if (has_v || has_t) fail(where, "\"box\" cannot be combined with \"v\"/\"t\"");
    const Box b = parse_box(obj["box"], where + ".box");
    return PairedBox{b, b};
  }
  if (!has_v || !has_t) fail(where, "needs both \"v\" and \"t\" (or a single \"box\")");
  return PairedBox{parse_box(obj["v"], where + ".v"), parse_box(obj["t"], where + ".t")};
}

std::string parse_frame_id(const json& record) {
  const json& id = member(record, "frame", "");
  if (id.is_string()) {
    const auto s = id.get<std::string>();
    if (s.empty()) fail("frame", "empty id");
    return s;
  }
  if (id.is_number_integer()) return std::to_string(id.get<long long>());
  if (id.is_number_unsigned()) return std::to_string(id.get<unsigned long long>());
  fail("frame", "expected a string or integer id");
}

const json& array_member(const json& record, const char* key) {
  const json& arr = member(record, key, "");
  if (!arr.is_array()) fail(key, "expected an array");
  return arr;
}

std::string sub(const char* key, std::size_t i) {
  return std::string(key) + "[" + std::to_string(i) + "]";
}

GtObject parse_object(const json& obj, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  require_keys(obj, where, {"v", "t", "box", "occ", "ignore"});
  GtObject out;
  out.pair = parse_pair(obj, where);
  if (const auto it = obj.find("occ"); it != obj.end()) {
    if (!it->is_string()) fail(where + ".occ", "expected a string");
    const auto occ = parse_occlusion(it->get<std::string>());
    if (!occ) fail(where + ".occ", "expected none, partial or heavy");
    out.occlusion = *occ;
  }
  if (const auto it = obj.find("ignore"); it != obj.end()) {
    if (!it->is_boolean()) fail(where + ".ignore", "expected true or false");
    out.ignore = it->get<bool>();
  }
  return out;
}

Detection parse_detection(const json& obj, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  require_keys(obj, where, {"v", "t", "box", "score"});
  const double score = number(member(obj, "score", where), where + ".score");
  if (score < 0.0 || score > 1.0) fail(where + ".score", "must lie in [0, 1], got " + format_g9(score));
  if (obj.contains("box") && !obj.contains("v") && !obj.contains("t")) {
    return substitute_single_modality(SingleBoxDetection{parse_box(obj["box"], where + ".box"), score});
  }
  return Detection{parse_pair(obj, where), score, kPedestrianClass};
}

DatasetMetadata parse_metadata(const json& meta) {
  if (!meta.is_object()) fail("dataset", "expected an object");
  require_keys(meta, "dataset", {"name", "width", "height"});
  DatasetMetadata out;
  if (const auto it = meta.find("name"); it != meta.end()) {
    if (!it->is_string()) fail("dataset.name", "expected a string");
    out.name = it->get<std::string>();
  }
  if (const auto it = meta.find("width"); it != meta.end()) out.image_width = number(*it, "dataset.width");
  if (const auto it = meta.find("height"); it != meta.end()) out.image_height = number(*it, "dataset.height");
  if (!(out.image_width > 0.0)) fail("dataset.width", "must be positive");
  if (!(out.image_height > 0.0)) fail("dataset.height", "must be positive");
  return out;
}

// Calls fn(record, line_no) for each non-blank line, translating errors.
template <typename Fn>
void for_each_record(std::istream& in, std::string_view source, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string(source), line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) throw ParseError(std::string(source), line_no, "record must be a JSON object");
    try {
      fn(record, line_no);
    } catch (const FieldError& e) {
      throw ParseError(std::string(source), line_no, e.reason);
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string(source), line_no, e.what());
    }
  }
  if (in.bad()) throw IoError("read error on " + std::string(source));
}

ordered_json box_json(const Box& b) { return ordered_json::array({b.x(), b.y(), b.w(), b.h()}); }

void check_unique(std::set<std::string>& seen, const std::string& id) {
  if (!seen.insert(id).second) fail("frame", "duplicate frame id '" + id + "'");
}

}  // namespace

ParseError::ParseError(std::string source, std::size_t line, const std::string& reason)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + reason),
      source_(std::move(source)),
      line_(line) {}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

Dataset parse_dataset(std::istream& in, std::string_view source) {
  Dataset dataset;
  std::set<std::string> seen;
  bool first = true;
  for_each_record(in, source, [&](const json& record, std::size_t) {
    const bool is_header = record.contains("dataset");
    if (is_header) {
      if (!first) fail("dataset", "metadata must be the first record");
      require_keys(record, "", {"dataset"});
      dataset.metadata = parse_metadata(record["dataset"]);
    } else {
      require_keys(record, "", {"frame", "objects"});
      FrameAnnotations frame;
      frame.frame_id = parse_frame_id(record);
      check_unique(seen, frame.frame_id);
      const json& objects = array_member(record, "objects");
      for (std::size_t i = 0; i < objects.size(); ++i) {
        frame.objects.push_back(parse_object(objects[i], sub("objects", i)));
      }
      dataset.frames.push_back(std::move(frame));
    }
    first = false;
  });
  return dataset;
}

Dataset read_dataset(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_dataset(in, path.string());
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  ordered_json header;
  header["dataset"]["name"] = dataset.metadata.name;
  header["dataset"]["width"] = dataset.metadata.image_width;
  header["dataset"]["height"] = dataset.metadata.image_height;
  out << header.dump() << '\n';
  for (const auto& frame : dataset.frames) {
    ordered_json record;
    record["frame"] = frame.frame_id;
    record["objects"] = ordered_json::array();
    for (const auto& obj : frame.objects) {
      ordered_json o;
      o["v"] = box_json(obj.pair.visible);
      o["t"] = box_json(obj.pair.thermal);
      o["occ"] = std::string(to_string(obj.occlusion));
      o["ignore"] = obj.ignore;
      record["objects"].push_back(std::move(o));
    }
    out << record.dump() << '\n';
  }
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  auto out = open_output(path);
  write_dataset(dataset, out);
  if (!out) throw IoError("write error on '" + path.string() + "'");
}

std::vector<FrameDetections> parse_detections(std::istream& in, std::string_view source) {
  std::vector<FrameDetections> frames;
  std::set<std::string> seen;
  for_each_record(in, source, [&](const json& record, std::size_t) {
    require_keys(record, "", {"frame", "dets"});
    FrameDetections frame;
    frame.frame_id = parse_frame_id(record);
    check_unique(seen, frame.frame_id);
    const json& dets = array_member(record, "dets");
    for (std::size_t i = 0; i < dets.size(); ++i) {
      frame.detections.push_back(parse_detection(dets[i], sub("dets", i)));
    }
    frames.push_back(std::move(frame));
  });
  return frames;
}

std::vector<FrameDetections> read_detections(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_detections(in, path.string());
}

void write_detections(std::span<const FrameDetections> frames, std::ostream& out) {
  for (const auto& frame : frames) {
    ordered_json record;
    record["frame"] = frame.frame_id;
    record["dets"] = ordered_json::array();
    for (const auto& det : frame.detections) {
      ordered_json d;
      d["v"] = box_json(det.pair.visible);
      d["t"] = box_json(det.pair.thermal);
      d["score"] = det.score;
      record["dets"].push_back(std::move(d));
    }
    out << record.dump() << '\n';
  }
}

void write_detections(std::span<const FrameDetections> frames, const std::filesystem::path& path) {
  auto out = open_output(path);
  write_detections(frames, out);
  if (!out) throw IoError("write error on '" + path.string() + "'");
}

std::vector<FrameCandidates> parse_candidates(std::istream& in, std::string_view source) {
  std::vector<FrameCandidates> frames;
  std::set<std::string> seen;
  for_each_record(in, source, [&](const json& record, std::size_t) {
    require_keys(record, "", {"frame", "boxes"});
    FrameCandidates frame;
    frame.frame_id = parse_frame_id(record);
    check_unique(seen, frame.frame_id);
    const json& boxes = array_member(record, "boxes");
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const std::string where = sub("boxes", i);
      if (!boxes[i].is_object()) fail(where, "expected an object");
      require_keys(boxes[i], where, {"v", "t", "box"});
      frame.boxes.push_back(parse_pair(boxes[i], where));
    }
    frames.push_back(std::move(frame));
  });
  return frames;
}

std::vector<FrameCandidates> read_candidates(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_candidates(in, path.string());
}

}  // namespace pairbox::io
