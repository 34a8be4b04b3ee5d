#include "coolkws/config.hpp"

#include <algorithm>
#include <cstdlib>

namespace coolkws {
namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentConfig::validate() const {
  dsp.validate();
  train.validate();
  stream.validate();
  online.validate();
  model.validate();
  if (model.input_frames != dsp.n_frames || model.input_coeffs != dsp.n_mfcc) {
    throw Error(Errc::config, "model input does not match the feature shape");
  }
  if (stream.window_len != dsp.sample_rate_hz) throw Error(Errc::config, "stream window must be 1 s");
  if (words.empty()) throw Error(Errc::config, "no keywords configured");
  if (modes.empty()) throw Error(Errc::config, "no run modes configured");
}

fs::path ExperimentConfig::validation_list_path() const {
  return validation_list.empty() ? fs::path(gsc_root) / "validation_list.txt" : fs::path(validation_list);
}

fs::path ExperimentConfig::test_list_path() const {
  return test_list.empty() ? fs::path(gsc_root) / "testing_list.txt" : fs::path(test_list);
}

namespace {

void shape_to_json(json& j, const ModelShape& s) {
  j = {{"input_frames", s.input_frames}, {"input_coeffs", s.input_coeffs},
       {"filter_frames", s.filter_frames}, {"filter_coeffs", s.filter_coeffs},
       {"stride", s.stride}, {"n_maps", s.n_maps}, {"bottleneck", s.bottleneck},
       {"dense", s.dense}, {"classes", s.classes}};
}

ModelShape shape_from_json(const json& j) {
  ModelShape s;
  s.input_frames = j.value("input_frames", s.input_frames);
  s.input_coeffs = j.value("input_coeffs", s.input_coeffs);
  s.filter_frames = j.value("filter_frames", s.filter_frames);
  s.filter_coeffs = j.value("filter_coeffs", s.filter_coeffs);
  s.stride = j.value("stride", s.stride);
  s.n_maps = j.value("n_maps", s.n_maps);
  s.bottleneck = j.value("bottleneck", s.bottleneck);
  s.dense = j.value("dense", s.dense);
  s.classes = j.value("classes", s.classes);
  return s;
}

}  // namespace

void to_json(json& j, const ExperimentConfig& c) {
  json modes = json::array();
  for (auto m : c.modes) modes.push_back(to_string(m));
  json model;
  shape_to_json(model, c.model);
  j = {{"schema_version", kSchemaVersion},
       {"corpus", {{"gsc_root", c.gsc_root},
                   {"validation_list", c.validation_list},
                   {"test_list", c.test_list},
                   {"noise", c.noise}}},
       {"dsp", c.dsp},
       {"train", c.train},
       {"stream", c.stream},
       {"online", c.online},
       {"model", model},
       {"modes", modes},
       {"words", c.words},
       {"holdout_size", c.holdout_size},
       {"seed", c.seed},
       {"output_dir", c.output_dir},
       {"report", {{"gain", to_string(c.gain)},
                   {"std", c.std_kind == StdKind::population ? "population" : "sample"}}}};
}

void from_json(const json& j, ExperimentConfig& c) {
  if (j.value("schema_version", 0) != kSchemaVersion) {
    throw Error(Errc::config, "config needs schema_version " + std::to_string(kSchemaVersion));
  }
  ExperimentConfig d;
  c = d;
  if (j.contains("corpus")) {
    const json& corpus = j.at("corpus");
    c.gsc_root = corpus.value("gsc_root", d.gsc_root);
    c.validation_list = corpus.value("validation_list", d.validation_list);
    c.test_list = corpus.value("test_list", d.test_list);
    c.noise = corpus.value("noise", d.noise);
  }
  if (j.contains("dsp")) c.dsp = j.at("dsp").get<DspConfig>();
  if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
  if (j.contains("stream")) c.stream = j.at("stream").get<StreamConfig>();
  if (j.contains("online")) c.online = j.at("online").get<OnlineConfig>();
  if (j.contains("model")) c.model = shape_from_json(j.at("model"));
  if (j.contains("modes")) {
    c.modes.clear();
    for (const auto& m : j.at("modes")) c.modes.push_back(parse_mode(m.get<std::string>()));
  }
  c.words = j.value("words", d.words);
  c.holdout_size = j.value("holdout_size", d.holdout_size);
  c.seed = j.value("seed", d.seed);
  c.output_dir = j.value("output_dir", d.output_dir);
  if (j.contains("report")) {
    c.gain = parse_gain_convention(j.at("report").value("gain", std::string(to_string(d.gain))));
    const std::string kind = j.at("report").value("std", std::string("population"));
    if (kind != "population" && kind != "sample") throw Error(Errc::config, "report.std must be population or sample");
    c.std_kind = kind == "sample" ? StdKind::sample : StdKind::population;
  }
}

ExperimentConfig load_config(const fs::path& path) {
  json doc;
  try {
    doc = load_json(path);
  } catch (const Error& e) {
    throw Error(Errc::config, std::string("cannot read config: ") + e.what());
  }
  ExperimentConfig c;
  try {
    c = doc.get<ExperimentConfig>();
  } catch (const json::exception& e) {
    throw Error(Errc::config, path.string() + ": " + e.what());
  }
  if (const char* data = std::getenv("COOLKWS_DATA"); data != nullptr && *data != '\0') {
    c.gsc_root = data;
  }
  c.validate();
  return c;
}

std::uint64_t module_seed(std::uint64_t root, std::string_view module, std::string_view key) {
  std::string tag(module);
  tag += ':';
  tag += key;
  return derive_seed(root, tag);
}

AudioClip load_noise(const fs::path& path) {
  if (fs::is_regular_file(path)) return read_wav(path);
  if (!fs::is_directory(path)) throw Error(Errc::corpus_not_found, "noise source " + path.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(path)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
  }
  if (files.empty()) throw Error(Errc::corpus_not_found, "no WAV files in " + path.string());
  std::sort(files.begin(), files.end());
  std::vector<Eigen::VectorXf> parts;
  Eigen::Index total = 0;
  for (const auto& f : files) {
    parts.push_back(read_wav(f).samples);
    total += parts.back().size();
  }
  AudioClip clip;
  clip.source_path = path.string();
  clip.samples.resize(total);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    clip.samples.segment(at, p.size()) = p;
    at += p.size();
  }
  return clip;
}

}  // namespace coolkws
