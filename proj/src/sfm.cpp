// Copyright 2026 The demokit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "demokit/sfm.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "demokit/error.hpp"
#include "demokit/jsonio.hpp"

namespace demokit::sfm {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s, size_t max_fields) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size()) break;
    if (out.size() + 1 == max_fields) {
      out.push_back(trim(s.substr(i)));  // remainder as one field
      break;
    }
    size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_double_tok(std::string_view tok, const char* field, int line) {
  double v;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw ParseError(std::string("bad numeric field ") + field + " '" +
                         std::string(tok) + "'",
                     line);
  if (!std::isfinite(v))
    throw ParseError(std::string("non-finite field ") + field, line);
  return v;
}

int64_t parse_int_tok(std::string_view tok, const char* field, int line) {
  int64_t v;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw ParseError(std::string("bad integer field ") + field + " '" +
                         std::string(tok) + "'",
                     line);
  return v;
}

bool is_blank_or_comment(std::string_view s) {
  const std::string_view t = trim(s);
  return t.empty() || t.front() == '#';
}

// Expected parameter counts for known camera models.
const std::map<std::string, size_t, std::less<>>& camera_model_params() {
  static const std::map<std::string, size_t, std::less<>> table{
      {"SIMPLE_PINHOLE", 3}, {"PINHOLE", 4},
      {"SIMPLE_RADIAL", 4},  {"RADIAL", 5},
      {"OPENCV", 8},         {"FULL_OPENCV", 12},
      {"OPENCV_FISHEYE", 8}, {"SIMPLE_RADIAL_FISHEYE", 4},
      {"RADIAL_FISHEYE", 5}, {"FOV", 5},
      {"THIN_PRISM_FISHEYE", 12}};
  return table;
}

}  // namespace

std::vector<SfmImageRecord> parse_images_text(std::istream& in) {
  std::vector<SfmImageRecord> records;
  std::string line;
  int lineno = 0;
  int pending_pose_line = 0;  // nonzero while the points line is still owed
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (pending_pose_line != 0) {
      // The 2D point observations line; content is discarded.
      pending_pose_line = 0;
      continue;
    }
    if (is_blank_or_comment(line)) continue;

    const auto tok = split_ws(line, 10);
    if (tok.size() < 10 || tok[9].empty())
      throw ParseError("image record needs 10 fields "
                       "(IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME)",
                       lineno);
    SfmImageRecord rec;
    rec.image_id = parse_int_tok(tok[0], "IMAGE_ID", lineno);
    rec.q.w = parse_double_tok(tok[1], "QW", lineno);
    rec.q.x = parse_double_tok(tok[2], "QX", lineno);
    rec.q.y = parse_double_tok(tok[3], "QY", lineno);
    rec.q.z = parse_double_tok(tok[4], "QZ", lineno);
    rec.t.x() = parse_double_tok(tok[5], "TX", lineno);
    rec.t.y() = parse_double_tok(tok[6], "TY", lineno);
    rec.t.z() = parse_double_tok(tok[7], "TZ", lineno);
    rec.camera_id = parse_int_tok(tok[8], "CAMERA_ID", lineno);
    rec.name = std::string(tok[9]);
    if (rec.q.norm() <= 1e-12)
      throw ParseError("zero-norm quaternion", lineno);
    records.push_back(std::move(rec));
    pending_pose_line = lineno;
  }
  if (pending_pose_line != 0)
    throw ParseError("truncated file: image record is missing its points line",
                     pending_pose_line);
  return records;
}

std::vector<SfmCameraRecord> parse_cameras_text(std::istream& in) {
  std::vector<SfmCameraRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank_or_comment(line)) continue;
    const auto tok = split_ws(line, SIZE_MAX);
    if (tok.size() < 4)
      throw ParseError("camera record needs CAMERA_ID MODEL WIDTH HEIGHT PARAMS[]",
                       lineno);
    SfmCameraRecord rec;
    rec.camera_id = parse_int_tok(tok[0], "CAMERA_ID", lineno);
    rec.model_name = std::string(tok[1]);
    rec.width = static_cast<int>(parse_int_tok(tok[2], "WIDTH", lineno));
    rec.height = static_cast<int>(parse_int_tok(tok[3], "HEIGHT", lineno));
    if (rec.width <= 0 || rec.height <= 0)
      throw ParseError("non-positive camera dimensions", lineno);
    for (size_t i = 4; i < tok.size(); ++i)
      rec.params.push_back(parse_double_tok(tok[i], "PARAM", lineno));
    const auto& table = camera_model_params();
    const auto it = table.find(rec.model_name);
    if (it == table.end())
      throw ParseError("unknown camera model '" + rec.model_name + "'", lineno);
    if (rec.params.size() != it->second)
      throw ParseError("camera model " + rec.model_name + " expects " +
                           std::to_string(it->second) + " params, got " +
                           std::to_string(rec.params.size()),
                       lineno);
    records.push_back(std::move(rec));
  }
  return records;
}

std::string serialize_images_text(const std::vector<SfmImageRecord>& records) {
  std::string out;
  for (const SfmImageRecord& r : records) {
    out += std::to_string(r.image_id);
    for (double v : {r.q.w, r.q.x, r.q.y, r.q.z, r.t.x(), r.t.y(), r.t.z()}) {
      out += ' ';
      out += fmt_double(v);
    }
    out += ' ';
    out += std::to_string(r.camera_id);
    out += ' ';
    out += r.name;
    out += '\n';
    out += '\n';  // empty points line
  }
  return out;
}

std::string serialize_cameras_text(const std::vector<SfmCameraRecord>& records) {
  std::string out;
  for (const SfmCameraRecord& r : records) {
    out += std::to_string(r.camera_id);
    out += ' ';
    out += r.model_name;
    out += ' ';
    out += std::to_string(r.width);
    out += ' ';
    out += std::to_string(r.height);
    for (double v : r.params) {
      out += ' ';
      out += fmt_double(v);
    }
    out += '\n';
  }
  return out;
}

bool natural_less(const std::string& a, const std::string& b) {
  size_t i = 0, j = 0;
  int tiebreak = 0;  // falls back to plain comparison of equal-value digit runs
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
    const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
    if (da && db) {
      size_t ia = i, jb = j;
      while (ia < a.size() && std::isdigit(static_cast<unsigned char>(a[ia]))) ++ia;
      while (jb < b.size() && std::isdigit(static_cast<unsigned char>(b[jb]))) ++jb;
      std::string_view ra(a.data() + i, ia - i), rb(b.data() + j, jb - j);
      std::string_view sa = ra.substr(std::min(ra.find_first_not_of('0'), ra.size()));
      std::string_view sb = rb.substr(std::min(rb.find_first_not_of('0'), rb.size()));
      if (sa.size() != sb.size()) return sa.size() < sb.size();
      if (sa != sb) return sa < sb;
      if (tiebreak == 0 && ra != rb) tiebreak = ra < rb ? -1 : 1;
      i = ia;
      j = jb;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  if (i < a.size()) return false;
  if (j < b.size()) return true;
  return tiebreak < 0;
}

namespace {

// Last run of digits in the name, or -1 when absent / too large.
int64_t trailing_number(const std::string& name) {
  size_t end = name.size();
  while (end > 0 && !std::isdigit(static_cast<unsigned char>(name[end - 1])))
    --end;
  if (end == 0) return -1;
  size_t begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(name[begin - 1])))
    --begin;
  int64_t v = -1;
  auto [p, ec] = std::from_chars(name.data() + begin, name.data() + end, v);
  if (ec != std::errc() || p != name.data() + end) return -1;
  return v;
}

}  // namespace

FramePoseSeq to_camera_poses(const std::vector<SfmImageRecord>& records,
                             const std::string& trajectory_id) {
  std::vector<const SfmImageRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SfmImageRecord* x, const SfmImageRecord* y) {
                     return natural_less(x->name, y->name);
                   });
  for (size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i]->name == sorted[i - 1]->name)
      throw InvalidArgument("ambiguous model: duplicate image name '" +
                            sorted[i]->name + "'");

  // Use name-embedded indices only when they are informative and consistent.
  std::vector<int64_t> idx(sorted.size());
  bool embedded = !sorted.empty();
  for (size_t i = 0; i < sorted.size(); ++i) {
    idx[i] = trailing_number(sorted[i]->name);
    if (idx[i] < 0 || (i > 0 && idx[i] <= idx[i - 1])) embedded = false;
  }

  FramePoseSeq seq;
  seq.trajectory_id = trajectory_id;
  seq.frames.reserve(sorted.size());
  for (size_t i = 0; i < sorted.size(); ++i) {
    FramePose fp;
    fp.frame_index = embedded ? idx[i] : static_cast<int64_t>(i);
    fp.name = sorted[i]->name;
    const geom::Mat3 r_wc = geom::quat_to_rotmat(sorted[i]->q);
    fp.cam_to_world.R = r_wc.transpose();
    fp.cam_to_world.t = -(r_wc.transpose() * sorted[i]->t);
    seq.frames.push_back(std::move(fp));
  }
  return seq;
}

QcReport qc_filter(const FramePoseSeq& seq, const QcConfig& rules) {
  if (seq.frames.empty()) throw InvalidArgument("qc_filter: empty sequence");
  QcReport rep;
  const size_t n = seq.frames.size();

  if (static_cast<int>(n) < rules.min_frames)
    rep.reasons.push_back("too-few-frames");

  const int64_t span =
      seq.frames.back().frame_index - seq.frames.front().frame_index + 1;
  rep.missing_fraction =
      span > 0 ? 1.0 - static_cast<double>(n) / static_cast<double>(span) : 0.0;
  if (rep.missing_fraction > rules.max_missing_fraction)
    rep.reasons.push_back("missing-frames");

  if (n >= 2) {
    std::vector<double> steps(n - 1);
    for (size_t i = 0; i + 1 < n; ++i)
      steps[i] =
          (seq.frames[i + 1].cam_to_world.t - seq.frames[i].cam_to_world.t)
              .norm();
    std::vector<double> sorted = steps;
    std::sort(sorted.begin(), sorted.end());
    const double median =
        sorted.size() % 2 == 1
            ? sorted[sorted.size() / 2]
            : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
    const double max_step = sorted.back();
    rep.max_step_ratio = max_step / std::max(median, 1e-12);
    const double mean =
        std::accumulate(steps.begin(), steps.end(), 0.0) / steps.size();
    double var = 0;
    for (double s : steps) var += (s - mean) * (s - mean);
    const double sd = std::sqrt(var / steps.size());
    rep.max_step_zscore = sd > 1e-18 ? (max_step - mean) / sd : 0.0;
    if (rep.max_step_ratio > rules.step_outlier_factor)
      rep.reasons.push_back("step-outlier");
  }

  rep.kept = rep.reasons.empty();
  return rep;
}

FramePoseSeq load_model_dir(const std::filesystem::path& dir,
                            const std::string& trajectory_id) {
  std::ifstream images(dir / "images.txt");
  if (!images) throw IoError("cannot open " + (dir / "images.txt").string());
  const auto records = parse_images_text(images);
  std::ifstream cams(dir / "cameras.txt");
  if (cams) parse_cameras_text(cams);  // validate when present
  return to_camera_poses(records, trajectory_id);
}

void write_poses_json(const std::filesystem::path& file, const FramePoseSeq& seq,
                      const QcReport& qc) {
  Json frames = Json::array();
  for (const FramePose& fp : seq.frames) {
    const geom::Quat q = geom::rotmat_to_quat(fp.cam_to_world.R);
    frames.push_back({{"frame_index", fp.frame_index},
                      {"name", fp.name},
                      {"q", {q.w, q.x, q.y, q.z}},
                      {"c", {fp.cam_to_world.t.x(), fp.cam_to_world.t.y(),
                             fp.cam_to_world.t.z()}}});
  }
  const Json j = {{"schema_version", 1},
                  {"trajectory_id", seq.trajectory_id},
                  {"frames", frames},
                  {"qc",
                   {{"kept", qc.kept},
                    {"reasons", qc.reasons},
                    {"missing_fraction", qc.missing_fraction},
                    {"max_step_ratio", qc.max_step_ratio},
                    {"max_step_zscore", qc.max_step_zscore}}}};
  write_json_file(file, j);
}

FramePoseSeq read_poses_json(const std::filesystem::path& file,
                             QcReport* qc_out) {
  const Json j = read_json_file(file);
  FramePoseSeq seq;
  seq.trajectory_id = j.at("trajectory_id").get<std::string>();
  for (const Json& f : j.at("frames")) {
    FramePose fp;
    fp.frame_index = f.at("frame_index").get<int64_t>();
    fp.name = f.at("name").get<std::string>();
    const auto& q = f.at("q");
    fp.cam_to_world.R = geom::quat_to_rotmat(
        {q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
         q.at(3).get<double>()});
    const auto& c = f.at("c");
    fp.cam_to_world.t = geom::Vec3(c.at(0).get<double>(), c.at(1).get<double>(),
                                   c.at(2).get<double>());
    seq.frames.push_back(std::move(fp));
  }
  if (qc_out != nullptr) {
    const Json& qc = j.at("qc");
    qc_out->kept = qc.at("kept").get<bool>();
    qc_out->reasons = qc.at("reasons").get<std::vector<std::string>>();
    qc_out->missing_fraction = qc.at("missing_fraction").get<double>();
    qc_out->max_step_ratio = qc.at("max_step_ratio").get<double>();
    qc_out->max_step_zscore = qc.at("max_step_zscore").get<double>();
  }
  return seq;
}

}  // namespace demokit::sfm
