#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pairbox/evaluation.hpp"

namespace pairbox::io {

/// Unreadable or unwritable file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed record. what() reads "<source>:<line>: <field>: <reason>".
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& reason);

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

struct DatasetMetadata {
  std::string name;
  double image_width = 640.0;
  double image_height = 512.0;

  friend bool operator==(const DatasetMetadata&, const DatasetMetadata&) = default;
};

struct Dataset {
  DatasetMetadata metadata;
  std::vector<FrameAnnotations> frames;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Annotation files are JSON Lines. An optional first line carries metadata:
//   {"dataset": {"name": "...", "width": 640, "height": 512}}
// followed by one frame per line:
//   {"frame": "id", "objects": [{"v": [x,y,w,h], "t": [x,y,w,h],
//                                "occ": "none|partial|heavy", "ignore": false}]}
// Blank lines are skipped. Integer frame ids are read as their decimal text.

Dataset parse_dataset(std::istream& in, std::string_view source = "<stream>");
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(const Dataset& dataset, std::ostream& out);
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);

// Detection files: {"frame": "id", "dets": [{"v": [...], "t": [...], "score": s}]}
// A det may give "box": [...] instead of v/t; it becomes a pair with v == t.

std::vector<FrameDetections> parse_detections(std::istream& in, std::string_view source = "<stream>");
std::vector<FrameDetections> read_detections(const std::filesystem::path& path);
void write_detections(std::span<const FrameDetections> frames, std::ostream& out);
void write_detections(std::span<const FrameDetections> frames, const std::filesystem::path& path);

/// Candidate (anchor or RoI) pairs: {"frame": "id", "boxes": [{"v": [...], "t": [...]}]},
/// with "box" accepted in place of v/t.
struct FrameCandidates {
  std::string frame_id;
  std::vector<PairedBox> boxes;
};

std::vector<FrameCandidates> parse_candidates(std::istream& in, std::string_view source = "<stream>");
std::vector<FrameCandidates> read_candidates(const std::filesystem::path& path);

/// Opens `path` for reading; throws IoError naming the path on failure.
std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace pairbox::io
