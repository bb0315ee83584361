#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tghoa/errors.hpp"

namespace tghoa {

// One hospital visit: a set of diagnosis codes plus one waveform per
// configured lab indicator. An empty waveform means the indicator was not
// recorded; it is replaced by a single zero sample before feature extraction.
struct Visit {
  double time = 0.0;  // configured units since the first visit
  std::vector<int> diagnoses;
  std::vector<std::vector<double>> labs;
};

struct PatientRecord {
  std::string patient_id;
  int label = 0;
  std::vector<Visit> visits;

  int visit_count() const { return static_cast<int>(visits.size()); }
};

struct DatasetConfig {
  int num_codes = 50;
  std::vector<std::string> indicators;  // names, length n_v
  std::string time_unit = "day";        // "day" or "year"
  int num_classes = 2;
  int n_u_max = 5;  // diagnosis codes kept per visit

  int n_v() const { return static_cast<int>(indicators.size()); }
};

// Records sharing the same visit count, trained as one batch.
struct Batch {
  int visit_count = 0;
  std::vector<PatientRecord> records;
};

// Synthetic cohort with a planted label signal that requires the joint
// occurrence of a marker code, an elevated marker indicator, and recency.
struct SynthConfig {
  int n_patients = 2000;
  int t_max = 6;            // visits per patient in [2, t_max]
  double gap_min = 3.0;     // inter-visit gaps, log-uniform
  double gap_max = 180.0;
  int num_codes = 50;
  double zipf_s = 1.05;     // code popularity skew
  int n_u_max = 5;          // codes per visit in [1, n_u_max]
  int n_v = 3;
  int wave_len_min = 12;
  int wave_len_max = 48;
  double wave_step = 0.25;  // random-walk increment stddev
  double missing_prob = 0.05;
  int marker_code = 0;       // c*, drives the label jointly with...
  int marker_indicator = 0;  // ...the i*-th indicator's per-visit level
  double beta = 8.0;         // signal strength
  double target_prevalence = 0.5;
  double prevalence_tol = 0.02;
  std::string time_unit = "day";

  DatasetConfig dataset_config() const;
};

// One patient per line:
// {"patient_id": str, "label": int, "visits": [{"time": f, "diagnoses": [int],
//  "labs": [[f], ...]}]}
std::vector<PatientRecord> load_jsonl(const std::string& path, const DatasetConfig& cfg);
void save_jsonl(const std::string& path, const std::vector<PatientRecord>& records);

// Throws SchemaError naming the violated field and patient id.
void validate_record(const PatientRecord& rec, const DatasetConfig& cfg);

std::vector<PatientRecord> generate_synthetic(const SynthConfig& cfg, uint64_t seed);

// Recomputes the planted per-patient feature sum_t g2(t_T - t_t) * [c* in
// D^t] * z_t from a dataset, where z_t is the per-visit mean of indicator i*
// standardized over all visits. Used by oracle checks and the explain study.
std::vector<std::vector<double>> indicator_z(const std::vector<PatientRecord>& records,
                                             int indicator);
std::vector<double> planted_feature(const std::vector<PatientRecord>& records,
                                    int marker_code, int marker_indicator);

// Seed-deterministic split, then grouping by identical visit count into
// batches of at most max_batch records.
std::pair<std::vector<Batch>, std::vector<Batch>> split_and_batch(
    const std::vector<PatientRecord>& records, double ratio, uint64_t seed,
    int max_batch = 32);

std::vector<Batch> group_by_visit_count(const std::vector<PatientRecord>& records,
                                        int max_batch = 32);

}  // namespace tghoa
