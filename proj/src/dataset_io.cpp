#include "eisgrpo/dataset_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "eisgrpo/errors.hpp"

namespace eisgrpo {

using nlohmann::json;

namespace {

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            fn(json::parse(line));
        } catch (const json::exception& e) {
            throw IoError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
}

Label parse_label(const std::string& s) {
    if (s == "A") return Label::A;
    if (s == "B") return Label::B;
    throw IoError("gold label must be \"A\" or \"B\", got \"" + s + "\"");
}

}  // namespace

void write_samples_jsonl(std::ostream& out, const std::vector<PairwiseSample>& samples) {
    for (const auto& s : samples) {
        json j = {{"id", s.id},     {"x", s.x},       {"y1", s.y1},         {"y2", s.y2},
                  {"len1", s.len1}, {"len2", s.len2}, {"source", s.source}};
        out << j.dump() << '\n';
    }
}

std::vector<PairwiseSample> read_samples_jsonl(std::istream& in) {
    std::vector<PairwiseSample> out;
    for_each_line(in, [&](const json& j) {
        PairwiseSample s;
        s.id = j.at("id").get<std::string>();
        s.x = j.at("x").get<std::vector<double>>();
        s.y1 = j.at("y1").get<std::vector<double>>();
        s.y2 = j.at("y2").get<std::vector<double>>();
        s.len1 = j.at("len1").get<int>();
        s.len2 = j.at("len2").get<int>();
        s.source = j.value("source", std::string{});
        if (s.y1.size() != s.y2.size()) throw IoError("sample " + s.id + ": y1 and y2 lengths differ");
        if (s.len1 < 1 || s.len2 < 1) throw IoError("sample " + s.id + ": lengths must be >= 1");
        if (!out.empty() && (out.front().x.size() != s.x.size() || out.front().y1.size() != s.y1.size())) {
            throw IoError("sample " + s.id + ": feature dimensions differ from the first sample");
        }
        out.push_back(std::move(s));
    });
    return out;
}

void save_samples(const std::string& path, const std::vector<PairwiseSample>& samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write_samples_jsonl(out, samples);
}

std::vector<PairwiseSample> load_samples(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    try {
        return read_samples_jsonl(in);
    } catch (const IoError& e) {
        throw IoError(path + ": " + e.what());
    }
}

void write_instances_jsonl(std::ostream& out, const std::vector<PresentedInstance>& instances) {
    for (const auto& i : instances) {
        json j = {{"sample_id", i.sample_id},
                  {"ell", i.ell},
                  {"d_q", i.question_dim},
                  {"d_r", i.response_dim},
                  {"features", i.features},
                  {"gold", std::string(1, label_char(i.gold))}};
        out << j.dump() << '\n';
    }
}

std::vector<PresentedInstance> read_instances_jsonl(std::istream& in) {
    std::vector<PresentedInstance> out;
    for_each_line(in, [&](const json& j) {
        PresentedInstance i;
        i.sample_id = j.at("sample_id").get<std::string>();
        i.ell = j.at("ell").get<int>();
        i.question_dim = j.at("d_q").get<std::size_t>();
        i.response_dim = j.at("d_r").get<std::size_t>();
        i.features = j.at("features").get<std::vector<double>>();
        i.gold = parse_label(j.at("gold").get<std::string>());
        if (i.features.size() != i.question_dim + 2 * i.response_dim) {
            throw IoError("record " + i.sample_id + ": feature length does not equal d_q + 2 d_r");
        }
        out.push_back(std::move(i));
    });
    return out;
}

void save_instances(const std::string& path, const std::vector<PresentedInstance>& instances) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write_instances_jsonl(out, instances);
}

std::vector<PresentedInstance> load_instances(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    try {
        return read_instances_jsonl(in);
    } catch (const IoError& e) {
        throw IoError(path + ": " + e.what());
    }
}

}  // namespace eisgrpo
