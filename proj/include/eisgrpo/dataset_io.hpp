#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "eisgrpo/core.hpp"

namespace eisgrpo {

// Samples: one JSON object per line, {id, x, y1, y2, len1, len2, source}.
void write_samples_jsonl(std::ostream& out, const std::vector<PairwiseSample>& samples);
std::vector<PairwiseSample> read_samples_jsonl(std::istream& in);
void save_samples(const std::string& path, const std::vector<PairwiseSample>& samples);
std::vector<PairwiseSample> load_samples(const std::string& path);

// Presented records: {sample_id, ell, d_q, d_r, features, gold}.
void write_instances_jsonl(std::ostream& out, const std::vector<PresentedInstance>& instances);
std::vector<PresentedInstance> read_instances_jsonl(std::istream& in);
void save_instances(const std::string& path, const std::vector<PresentedInstance>& instances);
std::vector<PresentedInstance> load_instances(const std::string& path);

}  // namespace eisgrpo
