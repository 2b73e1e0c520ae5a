#include "pvc/yuv_io.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

namespace pvc {

namespace {

void read_plane(std::ifstream& in, std::vector<uint8_t>& plane) {
  in.read(reinterpret_cast<char*>(plane.data()), static_cast<std::streamsize>(plane.size()));
}

}  // namespace

Sequence read_yuv420(const std::filesystem::path& path, int width, int height, size_t max_frames) {
  Frame::check_dims(width, height);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  in.seekg(0, std::ios::end);
  const uint64_t bytes = static_cast<uint64_t>(in.tellg());
  in.seekg(0, std::ios::beg);

  const uint64_t frame_bytes = static_cast<uint64_t>(width) * height * 3 / 2;
  if (bytes % frame_bytes != 0)
    throw FormatError("'" + path.string() + "': " + std::to_string(bytes) +
                      " bytes is not a multiple of the " + std::to_string(frame_bytes) +
                      "-byte frame size for " + std::to_string(width) + "x" +
                      std::to_string(height));

  const size_t available = static_cast<size_t>(bytes / frame_bytes);
  const size_t count = std::min(max_frames, available);

  Sequence seq;
  seq.name = path.stem().string();
  seq.frames.reserve(count);
  for (size_t i = 0; i < count; i++) {
    Frame f(width, height);
    read_plane(in, f.y);
    read_plane(in, f.u);
    read_plane(in, f.v);
    if (!in) throw IoError("short read from '" + path.string() + "'");
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

void write_yuv420(const Sequence& seq, const std::filesystem::path& path) {
  if (seq.frames.empty()) throw FormatError("refusing to write empty sequence");
  seq.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const auto& f : seq.frames) {
    out.write(reinterpret_cast<const char*>(f.y.data()), static_cast<std::streamsize>(f.y.size()));
    out.write(reinterpret_cast<const char*>(f.u.data()), static_cast<std::streamsize>(f.u.size()));
    out.write(reinterpret_cast<const char*>(f.v.data()), static_cast<std::streamsize>(f.v.size()));
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

SequenceMeta read_sidecar(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw IoError("cannot open sidecar '" + json_path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("sidecar '" + json_path.string() + "': " + e.what());
  }
  SequenceMeta m;
  try {
    m.name = j.at("name").get<std::string>();
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    m.frame_rate = j.value("frame_rate", 30.0);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("sidecar '" + json_path.string() + "': " + e.what());
  }
  Frame::check_dims(m.width, m.height);
  return m;
}

void write_sidecar(const SequenceMeta& meta, const std::filesystem::path& json_path) {
  nlohmann::json j{{"name", meta.name},
                   {"width", meta.width},
                   {"height", meta.height},
                   {"frame_rate", meta.frame_rate}};
  std::ofstream out(json_path, std::ios::trunc);
  if (!out) throw IoError("cannot write sidecar '" + json_path.string() + "'");
  out << j.dump(2) << '\n';
}

Sequence read_sequence_with_sidecar(const std::filesystem::path& yuv_path, size_t max_frames) {
  std::filesystem::path sidecar = yuv_path;
  sidecar.replace_extension(".json");
  const SequenceMeta meta = read_sidecar(sidecar);
  Sequence seq = read_yuv420(yuv_path, meta.width, meta.height, max_frames);
  seq.name = meta.name;
  seq.frame_rate = meta.frame_rate;
  return seq;
}

std::vector<Sequence> load_sequence_dir(const std::filesystem::path& dir, size_t max_frames) {
  if (!std::filesystem::is_directory(dir))
    throw IoError("'" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".yuv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no .yuv files in '" + dir.string() + "'");
  std::vector<Sequence> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_sequence_with_sidecar(f, max_frames));
  return out;
}

std::vector<Frame> crop_group(const Sequence& seq, size_t start, int group_len, int patch_size,
                              int off_x, int off_y) {
  if (start + group_len > seq.size()) throw ShapeError("crop_group: window exceeds sequence");
  if (off_x % 2 != 0 || off_y % 2 != 0)
    throw ShapeError("crop offsets must be even to keep chroma aligned");
  std::vector<Frame> out;
  out.reserve(group_len);
  for (int i = 0; i < group_len; i++) {
    const Frame& f = seq.frames[start + i];
    Frame c(patch_size, patch_size);
    for (int yy = 0; yy < patch_size; yy++) {
      std::copy_n(&f.y[static_cast<size_t>(off_y + yy) * f.width + off_x], patch_size,
                  &c.y[static_cast<size_t>(yy) * patch_size]);
    }
    const int cp = patch_size / 2, cox = off_x / 2, coy = off_y / 2;
    for (int yy = 0; yy < cp; yy++) {
      std::copy_n(&f.u[static_cast<size_t>(coy + yy) * f.chroma_width() + cox], cp,
                  &c.u[static_cast<size_t>(yy) * cp]);
      std::copy_n(&f.v[static_cast<size_t>(coy + yy) * f.chroma_width() + cox], cp,
                  &c.v[static_cast<size_t>(yy) * cp]);
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<std::vector<Frame>> extract_training_pairs(const Sequence& seq, int patch_size,
                                                       int group_len, RandomSource& rng) {
  seq.validate();
  if (group_len < 1) throw ConfigError("group_len must be >= 1");
  if (seq.size() < static_cast<size_t>(group_len))
    throw FormatError("sequence '" + seq.name + "' too short: need " + std::to_string(group_len) +
                      " frames, have " + std::to_string(seq.size()));
  if (patch_size < 2 || patch_size % 2 != 0 || patch_size > seq.width() ||
      patch_size > seq.height())
    throw ConfigError("patch_size must be even and fit the " + std::to_string(seq.width()) + "x" +
                      std::to_string(seq.height()) + " frames");

  const int max_off_x = seq.width() - patch_size;
  const int max_off_y = seq.height() - patch_size;
  std::vector<std::vector<Frame>> groups;
  const size_t windows = seq.size() - group_len + 1;
  groups.reserve(windows);
  for (size_t start = 0; start < windows; start++) {
    const int off_x = 2 * static_cast<int>(rng.uniform_int(0, max_off_x / 2));
    const int off_y = 2 * static_cast<int>(rng.uniform_int(0, max_off_y / 2));
    groups.push_back(crop_group(seq, start, group_len, patch_size, off_x, off_y));
  }
  return groups;
}

}  // namespace pvc
