#include "tghoa/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tghoa/decay.hpp"
#include "tghoa/rng.hpp"

using nlohmann::json;

namespace tghoa {

DatasetConfig SynthConfig::dataset_config() const {
  DatasetConfig d;
  d.num_codes = num_codes;
  d.indicators.reserve(static_cast<size_t>(n_v));
  for (int i = 0; i < n_v; ++i) d.indicators.push_back("lab_" + std::to_string(i));
  d.time_unit = time_unit;
  d.num_classes = 2;
  d.n_u_max = n_u_max;
  return d;
}

void validate_record(const PatientRecord& rec, const DatasetConfig& cfg) {
  auto fail = [&](const std::string& field, const std::string& why) {
    throw SchemaError("patient '" + rec.patient_id + "': field '" + field + "': " + why);
  };
  if (rec.patient_id.empty()) fail("patient_id", "must be non-empty");
  if (rec.label < 0 || rec.label >= cfg.num_classes)
    fail("label", "value " + std::to_string(rec.label) + " outside [0," +
                      std::to_string(cfg.num_classes) + ")");
  if (rec.visits.empty()) fail("visits", "must be non-empty");
  double prev_time = -1.0;
  for (size_t t = 0; t < rec.visits.size(); ++t) {
    const Visit& v = rec.visits[t];
    std::string at = "visits[" + std::to_string(t) + "]";
    if (!std::isfinite(v.time)) fail(at + ".time", "not finite");
    if (t == 0 && v.time < 0.0) fail(at + ".time", "first visit time must be >= 0");
    if (t > 0 && v.time <= prev_time)
      fail(at + ".time", "visit times must be strictly increasing");
    prev_time = v.time;
    if (v.diagnoses.empty()) fail(at + ".diagnoses", "visit has no diagnosis codes");
    std::set<int> seen;
    for (int code : v.diagnoses) {
      if (code < 0 || code >= cfg.num_codes)
        fail(at + ".diagnoses", "code " + std::to_string(code) + " outside [0," +
                                    std::to_string(cfg.num_codes) + ")");
      if (!seen.insert(code).second)
        fail(at + ".diagnoses", "duplicate code " + std::to_string(code));
    }
    if (static_cast<int>(v.labs.size()) != cfg.n_v())
      fail(at + ".labs", "expected " + std::to_string(cfg.n_v()) + " waveforms, got " +
                             std::to_string(v.labs.size()));
    for (size_t i = 0; i < v.labs.size(); ++i)
      for (double x : v.labs[i])
        if (!std::isfinite(x))
          fail(at + ".labs[" + std::to_string(i) + "]", "non-finite sample");
  }
}

namespace {

// Keep the n_u_max most frequent codes of an oversized visit; frequency is
// counted over the whole dataset, ties broken by lower code index. Original
// in-visit order of the survivors is preserved.
void cap_visit_codes(std::vector<PatientRecord>& records, int n_u_max) {
  std::map<int, long> freq;
  for (const auto& rec : records)
    for (const auto& v : rec.visits)
      for (int code : v.diagnoses) ++freq[code];
  for (auto& rec : records)
    for (auto& v : rec.visits) {
      if (static_cast<int>(v.diagnoses.size()) <= n_u_max) continue;
      std::vector<int> sorted = v.diagnoses;
      std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
        if (freq[a] != freq[b]) return freq[a] > freq[b];
        return a < b;
      });
      std::set<int> keep(sorted.begin(), sorted.begin() + n_u_max);
      std::vector<int> kept;
      kept.reserve(static_cast<size_t>(n_u_max));
      for (int code : v.diagnoses)
        if (keep.count(code)) kept.push_back(code);
      v.diagnoses = std::move(kept);
    }
}

json visit_to_json(const Visit& v) {
  json j;
  j["time"] = v.time;
  j["diagnoses"] = v.diagnoses;
  j["labs"] = v.labs;
  return j;
}

}  // namespace

std::vector<PatientRecord> load_jsonl(const std::string& path, const DatasetConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<PatientRecord> records;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError(path + ":" + std::to_string(lineno) + ": parse error: " + e.what());
    }
    PatientRecord rec;
    try {
      rec.patient_id = j.at("patient_id").get<std::string>();
      rec.label = j.at("label").get<int>();
      for (const auto& jv : j.at("visits")) {
        Visit v;
        v.time = jv.at("time").get<double>();
        v.diagnoses = jv.at("diagnoses").get<std::vector<int>>();
        v.labs = jv.at("labs").get<std::vector<std::vector<double>>>();
        rec.visits.push_back(std::move(v));
      }
    } catch (const json::exception& e) {
      throw SchemaError(path + ":" + std::to_string(lineno) + ": patient '" +
                        rec.patient_id + "': " + e.what());
    }
    try {
      validate_record(rec, cfg);
    } catch (const SchemaError& e) {
      throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    records.push_back(std::move(rec));
  }
  cap_visit_codes(records, cfg.n_u_max);
  return records;
}

void save_jsonl(const std::string& path, const std::vector<PatientRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& rec : records) {
    json j;
    j["patient_id"] = rec.patient_id;
    j["label"] = rec.label;
    json visits = json::array();
    for (const auto& v : rec.visits) visits.push_back(visit_to_json(v));
    j["visits"] = visits;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("write failed for " + path);
}

std::vector<std::vector<double>> indicator_z(const std::vector<PatientRecord>& records,
                                             int indicator) {
  // per-visit raw mean of the indicator (missing waveform counts as one zero
  // sample), standardized over every visit in the dataset
  std::vector<std::vector<double>> means;
  means.reserve(records.size());
  double sum = 0.0, sumsq = 0.0;
  long count = 0;
  for (const auto& rec : records) {
    std::vector<double> row;
    row.reserve(rec.visits.size());
    for (const auto& v : rec.visits) {
      const auto& w = v.labs.at(static_cast<size_t>(indicator));
      double m = 0.0;
      if (!w.empty()) {
        for (double x : w) m += x;
        m /= static_cast<double>(w.size());
      }
      row.push_back(m);
      sum += m;
      sumsq += m * m;
      ++count;
    }
    means.push_back(std::move(row));
  }
  double mean = count ? sum / count : 0.0;
  double var = count ? std::max(0.0, sumsq / count - mean * mean) : 0.0;
  double sd = std::sqrt(var);
  if (sd < 1e-12) sd = 1.0;
  for (auto& row : means)
    for (double& m : row) m = (m - mean) / sd;
  return means;
}

std::vector<double> planted_feature(const std::vector<PatientRecord>& records,
                                    int marker_code, int marker_indicator) {
  auto z = indicator_z(records, marker_indicator);
  std::vector<double> feature(records.size(), 0.0);
  for (size_t p = 0; p < records.size(); ++p) {
    const auto& visits = records[p].visits;
    double t_last = visits.back().time;
    double s = 0.0;
    for (size_t t = 0; t < visits.size(); ++t) {
      bool has_marker = std::find(visits[t].diagnoses.begin(), visits[t].diagnoses.end(),
                                  marker_code) != visits[t].diagnoses.end();
      if (!has_marker) continue;
      s += decay(t_last - visits[t].time, DecayKind::G2) * z[p][t];
    }
    feature[p] = s;
  }
  return feature;
}

std::vector<PatientRecord> generate_synthetic(const SynthConfig& cfg, uint64_t seed) {
  if (cfg.n_patients < 1 || cfg.t_max < 2 || cfg.num_codes < 1 || cfg.n_u_max < 1 ||
      cfg.n_v < 1 || cfg.wave_len_min < 1 || cfg.wave_len_max < cfg.wave_len_min ||
      cfg.gap_min <= 0.0 || cfg.gap_max < cfg.gap_min)
    throw SchemaError("generate_synthetic: config fields must be positive and ordered");
  if (cfg.marker_code < 0 || cfg.marker_code >= cfg.num_codes ||
      cfg.marker_indicator < 0 || cfg.marker_indicator >= cfg.n_v)
    throw SchemaError("generate_synthetic: marker indices out of range");

  Rng root(seed);
  Rng structure = root.split(1);
  ZipfSampler zipf(cfg.num_codes, cfg.zipf_s);

  int id_width = static_cast<int>(std::to_string(cfg.n_patients - 1).size());
  std::vector<PatientRecord> records;
  records.reserve(static_cast<size_t>(cfg.n_patients));
  for (int p = 0; p < cfg.n_patients; ++p) {
    Rng r = structure.split(static_cast<uint64_t>(p));
    PatientRecord rec;
    std::string num = std::to_string(p);
    rec.patient_id = "p" + std::string(static_cast<size_t>(id_width) - num.size(), '0') + num;
    int visit_count = r.uniform_int(2, cfg.t_max);
    double t = 0.0;
    for (int vi = 0; vi < visit_count; ++vi) {
      Visit v;
      if (vi > 0) t += r.log_uniform(cfg.gap_min, cfg.gap_max);
      v.time = t;
      int n_u = r.uniform_int(1, cfg.n_u_max);
      std::set<int> codes;
      while (static_cast<int>(codes.size()) < n_u) codes.insert(zipf.sample(r));
      v.diagnoses.assign(codes.begin(), codes.end());
      for (int i = 0; i < cfg.n_v; ++i) {
        if (r.uniform() < cfg.missing_prob) {
          v.labs.emplace_back();
          continue;
        }
        int len = r.uniform_int(cfg.wave_len_min, cfg.wave_len_max);
        std::vector<double> w(static_cast<size_t>(len));
        double level = r.normal(0.0, 1.0);
        for (int k = 0; k < len; ++k) {
          w[static_cast<size_t>(k)] = level;
          level += r.normal(0.0, cfg.wave_step);
        }
        v.labs.push_back(std::move(w));
      }
      rec.visits.push_back(std::move(v));
    }
    records.push_back(std::move(rec));
  }

  // plant the label: p(y=1) = sigmoid(beta * S + b), with the intercept b
  // bisected so the expected prevalence hits the target
  std::vector<double> s = planted_feature(records, cfg.marker_code, cfg.marker_indicator);
  auto expected_prevalence = [&](double b) {
    double acc = 0.0;
    for (double x : s) acc += 1.0 / (1.0 + std::exp(-(cfg.beta * x + b)));
    return acc / static_cast<double>(s.size());
  };
  double lo = -30.0, hi = 30.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (expected_prevalence(mid) < cfg.target_prevalence)
      lo = mid;
    else
      hi = mid;
  }
  double intercept = 0.5 * (lo + hi);

  const int max_attempts = 16;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Rng label_rng = root.split(1000 + static_cast<uint64_t>(attempt));
    long positives = 0;
    for (size_t p = 0; p < records.size(); ++p) {
      double prob = 1.0 / (1.0 + std::exp(-(cfg.beta * s[p] + intercept)));
      records[p].label = label_rng.uniform() < prob ? 1 : 0;
      positives += records[p].label;
    }
    double prevalence = static_cast<double>(positives) / static_cast<double>(records.size());
    if (std::fabs(prevalence - cfg.target_prevalence) <= cfg.prevalence_tol)
      return records;
  }
  throw SchemaError("generate_synthetic: could not land within " +
                    std::to_string(cfg.prevalence_tol) + " of target prevalence " +
                    std::to_string(cfg.target_prevalence) + " after " +
                    std::to_string(max_attempts) + " attempts");
}

std::vector<Batch> group_by_visit_count(const std::vector<PatientRecord>& records,
                                        int max_batch) {
  std::map<int, std::vector<PatientRecord>> by_count;
  for (const auto& rec : records) by_count[rec.visit_count()].push_back(rec);
  std::vector<Batch> batches;
  for (auto& [count, group] : by_count) {
    for (size_t off = 0; off < group.size(); off += static_cast<size_t>(max_batch)) {
      Batch b;
      b.visit_count = count;
      size_t end = std::min(group.size(), off + static_cast<size_t>(max_batch));
      b.records.assign(group.begin() + static_cast<long>(off),
                       group.begin() + static_cast<long>(end));
      batches.push_back(std::move(b));
    }
  }
  return batches;
}

std::pair<std::vector<Batch>, std::vector<Batch>> split_and_batch(
    const std::vector<PatientRecord>& records, double ratio, uint64_t seed,
    int max_batch) {
  if (records.size() < 2) throw SchemaError("split_and_batch: fewer than 2 records");
  if (!(ratio > 0.0 && ratio < 1.0))
    throw std::invalid_argument("split_and_batch: ratio must be in (0,1)");
  std::vector<size_t> idx(records.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  long n_train = std::llround(ratio * static_cast<double>(records.size()));
  n_train = std::clamp<long>(n_train, 1, static_cast<long>(records.size()) - 1);
  std::vector<PatientRecord> train, test;
  for (size_t i = 0; i < idx.size(); ++i)
    (static_cast<long>(i) < n_train ? train : test).push_back(records[idx[i]]);
  return {group_by_visit_count(train, max_batch), group_by_visit_count(test, max_batch)};
}

}  // namespace tghoa
