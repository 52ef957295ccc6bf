#include "detlab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace detlab::io {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// nlohmann reports byte offsets; translate to a line number for diagnostics.
int line_of_byte(const std::string& text, size_t byte) {
  int line = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

double require_number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw SchemaError(where + ": missing or non-numeric field '" + key + "'");
  }
  return j[key].get<double>();
}

}  // namespace

json parse_json_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + ":" + std::to_string(line_of_byte(text, e.byte)) +
                      ": " + e.what());
  }
}

json to_json(const BBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

BBox bbox_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) {
    throw SchemaError(where + ": box must be an array of four numbers");
  }
  for (const auto& v : j) {
    if (!v.is_number()) throw SchemaError(where + ": box coordinates must be numbers");
  }
  try {
    return make_bbox(j[0], j[1], j[2], j[3]);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(where + ": " + e.what());
  }
}

json to_json(const Assignment& a) {
  json j;
  j["mode"] = a.mode == AssignMode::one_to_one ? "one_to_one" : "one_to_many";
  j["positives"] = a.positives;
  j["has_conflict"] = a.has_conflict;
  j["total_cost"] = a.total_cost;
  return j;
}

json to_json(const Histogram& h) {
  json j;
  j["bins"] = h.bins;
  j["lo"] = h.lo;
  j["hi"] = h.hi;
  j["counts"] = h.counts;
  return j;
}

json to_json(const EvalResult& r) {
  json j;
  j["ap"] = r.ap;
  j["ap50"] = r.ap50;
  j["recall50"] = r.recall50;
  j["mmr"] = r.mmr;
  j["redundancy"] = r.redundancy;
  return j;
}

CandidateFile load_candidates(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  if (!j.contains("candidates") || !j["candidates"].is_array()) {
    throw SchemaError(path.string() + ": expected a 'candidates' array");
  }
  CandidateFile file;
  file.categories = j.value("categories", 0);
  int index = 0;
  for (const json& c : j["candidates"]) {
    const std::string where = path.string() + ": candidate " + std::to_string(index++);
    Candidate cand;
    const std::string kind = c.value("kind", "");
    if (kind == "point") {
      if (!c.contains("point") || !c["point"].is_array() || c["point"].size() != 2) {
        throw SchemaError(where + ": point candidates need a [x, y] 'point'");
      }
      cand.predefined = GridPoint{c["point"][0].get<double>(), c["point"][1].get<double>()};
    } else if (kind == "anchor") {
      if (!c.contains("box")) throw SchemaError(where + ": anchor candidates need a 'box'");
      cand.predefined = bbox_from_json(c["box"], where);
    } else {
      throw SchemaError(where + ": kind must be 'point' or 'anchor'");
    }
    if (c.contains("predicted_box")) {
      cand.predicted_box = bbox_from_json(c["predicted_box"], where);
    }
    if (!c.contains("scores") || !c["scores"].is_array() || c["scores"].empty()) {
      throw SchemaError(where + ": needs a non-empty 'scores' array");
    }
    for (const auto& s : c["scores"]) {
      if (!s.is_number()) throw SchemaError(where + ": scores must be numbers");
      cand.class_scores.push_back(s.get<double>());
    }
    if (file.categories == 0) file.categories = static_cast<int>(cand.class_scores.size());
    if (static_cast<int>(cand.class_scores.size()) != file.categories) {
      throw SchemaError(where + ": score length disagrees with the configured categories");
    }
    file.candidates.push_back(std::move(cand));
  }
  if (file.candidates.empty()) throw SchemaError(path.string() + ": no candidates");
  return file;
}

std::vector<GroundTruth> load_objects(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  if (!j.contains("objects") || !j["objects"].is_array()) {
    throw SchemaError(path.string() + ": expected an 'objects' array");
  }
  std::vector<GroundTruth> objects;
  int index = 0;
  for (const json& o : j["objects"]) {
    const std::string where = path.string() + ": object " + std::to_string(index++);
    GroundTruth gt;
    if (!o.contains("box")) throw SchemaError(where + ": needs a 'box'");
    gt.box = bbox_from_json(o["box"], where);
    gt.category = static_cast<int>(require_number(o, "category", where));
    objects.push_back(gt);
  }
  return objects;
}

DetectionSet load_detections(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  if (!j.contains("images") || !j["images"].is_array()) {
    throw SchemaError(path.string() + ": expected an 'images' array");
  }
  DetectionSet set;
  int img = 0;
  for (const json& image : j["images"]) {
    const std::string where = path.string() + ": image " + std::to_string(img++);
    std::vector<Detection> dets;
    if (!image.is_array()) throw SchemaError(where + ": each image is an array");
    for (const json& d : image) {
      Detection det;
      det.box = bbox_from_json(d.at("box"), where);
      det.category = static_cast<int>(require_number(d, "category", where));
      det.score = require_number(d, "score", where);
      dets.push_back(det);
    }
    set.push_back(std::move(dets));
  }
  return set;
}

GroundTruthSet load_ground_truth_set(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  if (!j.contains("images") || !j["images"].is_array()) {
    throw SchemaError(path.string() + ": expected an 'images' array");
  }
  GroundTruthSet set;
  int img = 0;
  for (const json& image : j["images"]) {
    const std::string where = path.string() + ": image " + std::to_string(img++);
    std::vector<GroundTruth> gts;
    if (!image.is_array()) throw SchemaError(where + ": each image is an array");
    for (const json& g : image) {
      GroundTruth gt;
      gt.box = bbox_from_json(g.at("box"), where);
      gt.category = static_cast<int>(require_number(g, "category", where));
      gts.push_back(gt);
    }
    set.push_back(std::move(gts));
  }
  return set;
}

void save_detections(const std::filesystem::path& path, const DetectionSet& dets) {
  json images = json::array();
  for (const auto& img : dets) {
    json list = json::array();
    for (const Detection& d : img) {
      json e;
      e["box"] = to_json(d.box);
      e["category"] = d.category;
      e["score"] = d.score;
      list.push_back(e);
    }
    images.push_back(list);
  }
  json j;
  j["schema_version"] = 1;
  j["images"] = images;
  write_text_file(path, j.dump(2) + "\n");
}

void save_scenes_jsonl(const std::filesystem::path& path,
                       const std::vector<toy::Scene>& scenes) {
  std::ostringstream out;
  for (const toy::Scene& s : scenes) {
    json j;
    j["seed"] = s.seed;
    j["width"] = s.width;
    j["height"] = s.height;
    json objs = json::array();
    for (const GroundTruth& g : s.objects) {
      json o;
      o["box"] = to_json(g.box);
      o["category"] = g.category;
      objs.push_back(o);
    }
    j["objects"] = objs;
    out << j.dump() << "\n";
  }
  write_text_file(path, out.str());
}

std::vector<toy::Scene> load_scenes_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path.string());
  std::vector<toy::Scene> scenes;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    toy::Scene s;
    s.seed = j.at("seed").get<uint64_t>();
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
    for (const json& o : j.at("objects")) {
      GroundTruth gt;
      gt.box = bbox_from_json(o.at("box"), path.string() + ":" + std::to_string(line_no));
      gt.category = o.at("category").get<int>();
      s.objects.push_back(gt);
    }
    toy::render_pixels(s);
    scenes.push_back(std::move(s));
  }
  return scenes;
}

void save_checkpoint(const std::filesystem::path& path, const toy::ToyModel& model) {
  json header;
  header["schema_version"] = 1;
  header["grid"] = model.cfg.grid;
  header["patch"] = model.cfg.patch;
  header["hidden"] = model.cfg.hidden;
  header["categories"] = model.cfg.categories;
  header["param_count"] = model.params.size();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << header.dump() << "\n";
  out.write(reinterpret_cast<const char*>(model.params.data()),
            static_cast<std::streamsize>(model.params.size() * sizeof(double)));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

toy::ToyModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open " + path.string());
  std::string header_line;
  if (!std::getline(in, header_line)) throw SchemaError(path.string() + ": missing header");
  json header;
  try {
    header = json::parse(header_line);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + ":1: " + e.what());
  }
  toy::ToyConfig cfg;
  cfg.grid = header.at("grid").get<int>();
  cfg.patch = header.at("patch").get<int>();
  cfg.hidden = header.at("hidden").get<int>();
  cfg.categories = header.at("categories").get<int>();
  toy::ToyModel model = toy::ToyModel::zeros(cfg);
  const size_t count = header.at("param_count").get<size_t>();
  if (count != model.params.size()) {
    throw SchemaError(path.string() + ": parameter count does not match the header");
  }
  in.read(reinterpret_cast<char*>(model.params.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (static_cast<size_t>(in.gcount()) != count * sizeof(double)) {
    throw SchemaError(path.string() + ": truncated parameter payload");
  }
  return model;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("short write to " + path.string());
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string histogram_csv(const Histogram& h, long display_cap) {
  std::ostringstream out;
  out << "# display_cap=" << display_cap << "\n";
  out << "bin_lo,bin_hi,count\n";
  const double width = (h.hi - h.lo) / h.bins;
  for (int b = 0; b < h.bins; ++b) {
    out << format_double(h.lo + b * width) << "," << format_double(h.lo + (b + 1) * width)
        << "," << h.counts[b] << "\n";
  }
  return out.str();
}

std::string trace_csv(const theory::PerceptronState& state) {
  std::ostringstream out;
  out << "t,eta_t,gamma_t,delta_t,i_max,violation,condition_flag,w_norm\n";
  for (const theory::TraceEntry& e : state.trace) {
    out << e.step << "," << format_double(e.eta) << ",";
    out << (e.gamma ? format_double(*e.gamma) : "nan") << ",";
    out << (e.delta ? format_double(*e.delta) : "nan") << ",";
    out << e.argmax_index << "," << format_double(e.violation) << ",";
    if (e.stepsize_condition.has_value()) {
      out << (*e.stepsize_condition ? "1" : "0");
    } else {
      out << "nan";
    }
    out << "," << format_double(e.w_norm_after) << "\n";
  }
  return out.str();
}

}  // namespace detlab::io
