#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "detlab/assign.hpp"
#include "detlab/metrics.hpp"
#include "detlab/theory.hpp"
#include "detlab/toydet.hpp"

namespace detlab::io {

using json = nlohmann::ordered_json;

// Configuration / input-file problems; the CLI maps these to exit code 2.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parse with line/column diagnostics folded into the SchemaError message.
json parse_json_file(const std::filesystem::path& path);

json to_json(const BBox& b);
BBox bbox_from_json(const json& j, const std::string& where);

json to_json(const Assignment& a);
json to_json(const Histogram& h);
json to_json(const EvalResult& r);

// Candidate/object files for the assign and eval commands.
struct CandidateFile {
  int categories = 0;
  std::vector<Candidate> candidates;
};
CandidateFile load_candidates(const std::filesystem::path& path);
std::vector<GroundTruth> load_objects(const std::filesystem::path& path);
DetectionSet load_detections(const std::filesystem::path& path);
GroundTruthSet load_ground_truth_set(const std::filesystem::path& path);
void save_detections(const std::filesystem::path& path, const DetectionSet& dets);

// One scene per line: seed, size, objects; pixels re-render from the seed.
void save_scenes_jsonl(const std::filesystem::path& path,
                       const std::vector<toy::Scene>& scenes);
std::vector<toy::Scene> load_scenes_jsonl(const std::filesystem::path& path);

// Flat little-endian doubles after a single-line JSON header.
void save_checkpoint(const std::filesystem::path& path, const toy::ToyModel& model);
toy::ToyModel load_checkpoint(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);

// bin_lo,bin_hi,count rows; the display cap is recorded as metadata, counts
// stay untouched.
std::string histogram_csv(const Histogram& h, long display_cap = 10000);

std::string trace_csv(const theory::PerceptronState& state);

std::string format_double(double v);

}  // namespace detlab::io
