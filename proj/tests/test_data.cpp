#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "tghoa/data.hpp"
#include "tghoa/metrics.hpp"
#include "tghoa/rng.hpp"

using namespace tghoa;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  auto dir = fs::temp_directory_path() / "tghoa_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PatientRecord valid_record() {
  PatientRecord rec;
  rec.patient_id = "p0";
  rec.label = 1;
  Visit v1{0.0, {1, 3}, {{0.5, 0.7}, {}}};
  Visit v2{4.5, {2}, {{1.0}, {0.1, 0.2, 0.3}}};
  rec.visits = {v1, v2};
  return rec;
}

DatasetConfig small_config() {
  DatasetConfig cfg;
  cfg.num_codes = 10;
  cfg.indicators = {"hr", "spo2"};
  cfg.num_classes = 2;
  cfg.n_u_max = 3;
  return cfg;
}

// one-feature logistic regression fit by Newton's method
double logistic_auc(const std::vector<double>& x, const std::vector<int>& y) {
  double w = 0.0, b = 0.0;
  for (int it = 0; it < 50; ++it) {
    double gw = 0, gb = 0, hww = 0, hwb = 0, hbb = 0;
    for (size_t i = 0; i < x.size(); ++i) {
      double p = 1.0 / (1.0 + std::exp(-(w * x[i] + b)));
      double d = p - y[i];
      gw += d * x[i];
      gb += d;
      double v = p * (1 - p);
      hww += v * x[i] * x[i];
      hwb += v * x[i];
      hbb += v;
    }
    hww += 1e-9;
    hbb += 1e-9;
    double det = hww * hbb - hwb * hwb;
    double dw = (hbb * gw - hwb * gb) / det;
    double db = (hww * gb - hwb * gw) / det;
    w -= dw;
    b -= db;
    if (std::fabs(dw) + std::fabs(db) < 1e-10) break;
  }
  std::vector<double> scores(x.size());
  for (size_t i = 0; i < x.size(); ++i)
    scores[i] = 1.0 / (1.0 + std::exp(-(w * x[i] + b)));
  return auc_roc(scores, y).value();
}

}  // namespace

TEST_CASE("load a single valid patient") {
  auto path = temp_file("one.jsonl");
  {
    std::ofstream out(path);
    out << R"({"patient_id":"a","label":0,"visits":[{"time":0.0,"diagnoses":[1],"labs":[[1.0],[2.0]]}]})"
        << "\n";
  }
  auto records = load_jsonl(path.string(), small_config());
  REQUIRE(records.size() == 1);
  CHECK(records[0].patient_id == "a");
  CHECK(records[0].visits[0].diagnoses == std::vector<int>{1});
}

TEST_CASE("empty file loads as empty list") {
  auto path = temp_file("empty.jsonl");
  std::ofstream(path).close();
  CHECK(load_jsonl(path.string(), small_config()).empty());
}

TEST_CASE("missing file is an io error") {
  CHECK_THROWS_AS(load_jsonl("/nonexistent/nope.jsonl", small_config()), IoError);
}

TEST_CASE("parse error reports the line number") {
  auto path = temp_file("bad.jsonl");
  {
    std::ofstream out(path);
    out << R"({"patient_id":"a","label":0,"visits":[{"time":0.0,"diagnoses":[1],"labs":[[1],[2]]}]})"
        << "\n";
    out << "{not json\n";
  }
  try {
    load_jsonl(path.string(), small_config());
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
}

TEST_CASE("out-of-order visit times are rejected citing the patient") {
  auto path = temp_file("order.jsonl");
  {
    std::ofstream out(path);
    out << R"({"patient_id":"px","label":0,"visits":[)"
        << R"({"time":5.0,"diagnoses":[1],"labs":[[1],[2]]},)"
        << R"({"time":2.0,"diagnoses":[2],"labs":[[1],[2]]}]})" << "\n";
  }
  try {
    load_jsonl(path.string(), small_config());
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    std::string msg = e.what();
    CHECK(msg.find("px") != std::string::npos);
    CHECK(msg.find("increasing") != std::string::npos);
  }
}

TEST_CASE("validation rejects exactly the corrupted records") {
  DatasetConfig cfg = small_config();
  CHECK_NOTHROW(validate_record(valid_record(), cfg));

  auto expect_reject = [&](PatientRecord rec, const std::string& needle) {
    try {
      validate_record(rec, cfg);
      FAIL("expected SchemaError for ", needle);
    } catch (const SchemaError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
      CHECK(std::string(e.what()).find(rec.patient_id) != std::string::npos);
    }
  };

  PatientRecord r = valid_record();
  r.label = 2;
  expect_reject(r, "label");

  r = valid_record();
  r.visits.clear();
  expect_reject(r, "visits");

  r = valid_record();
  r.visits[1].time = r.visits[0].time;
  expect_reject(r, "time");

  r = valid_record();
  r.visits[0].diagnoses = {1, 1};
  expect_reject(r, "duplicate");

  r = valid_record();
  r.visits[0].diagnoses = {99};
  expect_reject(r, "code 99");

  r = valid_record();
  r.visits[0].diagnoses.clear();
  expect_reject(r, "diagnoses");

  r = valid_record();
  r.visits[0].labs.pop_back();
  expect_reject(r, "labs");
}

TEST_CASE("oversized visits keep the most frequent codes") {
  auto path = temp_file("cap.jsonl");
  {
    std::ofstream out(path);
    // codes 1 and 2 appear twice across the file, 4/5/6 once each
    out << R"({"patient_id":"a","label":0,"visits":[{"time":0.0,"diagnoses":[1,2],"labs":[[1],[2]]}]})"
        << "\n";
    out << R"({"patient_id":"b","label":0,"visits":[{"time":0.0,"diagnoses":[4,1,5,2,6],"labs":[[1],[2]]}]})"
        << "\n";
  }
  auto records = load_jsonl(path.string(), small_config());  // n_u_max = 3
  REQUIRE(records.size() == 2);
  // survivors: 1 and 2 (frequency 2), then 4 (tie broken by lower index)
  CHECK(records[1].visits[0].diagnoses == std::vector<int>{4, 1, 2});
}

TEST_CASE("synthetic generation is a pure function of config and seed") {
  SynthConfig cfg;
  cfg.n_patients = 10;
  auto a = generate_synthetic(cfg, 7);
  auto b = generate_synthetic(cfg, 7);
  auto pa = temp_file("gen_a.jsonl");
  auto pb = temp_file("gen_b.jsonl");
  save_jsonl(pa.string(), a);
  save_jsonl(pb.string(), b);
  CHECK(file_bytes(pa) == file_bytes(pb));
  CHECK(file_bytes(pa).size() > 0);

  auto c = generate_synthetic(cfg, 8);
  auto pc = temp_file("gen_c.jsonl");
  save_jsonl(pc.string(), c);
  CHECK(file_bytes(pa) != file_bytes(pc));
}

TEST_CASE("generated records pass validation and round-trip through jsonl") {
  SynthConfig cfg;
  cfg.n_patients = 50;
  auto records = generate_synthetic(cfg, 3);
  DatasetConfig dcfg = cfg.dataset_config();
  for (const auto& rec : records) CHECK_NOTHROW(validate_record(rec, dcfg));

  auto path = temp_file("roundtrip.jsonl");
  save_jsonl(path.string(), records);
  auto loaded = load_jsonl(path.string(), dcfg);
  REQUIRE(loaded.size() == records.size());
  auto path2 = temp_file("roundtrip2.jsonl");
  save_jsonl(path2.string(), loaded);
  CHECK(file_bytes(path) == file_bytes(path2));
}

TEST_CASE("beta zero gives prevalence near one half") {
  SynthConfig cfg;
  cfg.n_patients = 1000;
  cfg.beta = 0.0;
  auto records = generate_synthetic(cfg, 11);
  double positives = 0;
  for (const auto& r : records) positives += r.label;
  double prevalence = positives / static_cast<double>(records.size());
  CHECK(prevalence >= 0.4);
  CHECK(prevalence <= 0.6);
}

TEST_CASE("logistic oracle on the planted feature separates the classes") {
  SynthConfig cfg;  // defaults: 2000 patients
  auto records = generate_synthetic(cfg, 42);
  auto feature = planted_feature(records, cfg.marker_code, cfg.marker_indicator);
  std::vector<int> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(r.label);
  double auc = logistic_auc(feature, labels);
  INFO("planted-feature oracle AUC ", auc);
  CHECK(auc >= 0.85);
}

TEST_CASE("grouping is by identical visit count") {
  std::vector<PatientRecord> records;
  for (int t : {2, 2, 3, 3, 3}) {
    PatientRecord rec = valid_record();
    rec.patient_id = "p" + std::to_string(records.size());
    rec.visits.clear();
    for (int i = 0; i < t; ++i)
      rec.visits.push_back(Visit{static_cast<double>(i), {1}, {{1.0}, {2.0}}});
    records.push_back(rec);
  }
  auto batches = group_by_visit_count(records);
  REQUIRE(batches.size() == 2);
  CHECK(batches[0].visit_count == 2);
  CHECK(batches[0].records.size() == 2);
  CHECK(batches[1].visit_count == 3);
  CHECK(batches[1].records.size() == 3);
}

TEST_CASE("split ratio and determinism") {
  SynthConfig cfg;
  cfg.n_patients = 10;
  auto records = generate_synthetic(cfg, 5);
  auto [train, test] = split_and_batch(records, 0.8, 99);
  size_t n_train = 0, n_test = 0;
  for (const auto& b : train) n_train += b.records.size();
  for (const auto& b : test) n_test += b.records.size();
  CHECK(n_train == 8);
  CHECK(n_test == 2);

  auto [train2, test2] = split_and_batch(records, 0.8, 99);
  auto ids = [](const std::vector<Batch>& bs) {
    std::vector<std::string> out;
    for (const auto& b : bs)
      for (const auto& r : b.records) out.push_back(r.patient_id);
    return out;
  };
  CHECK(ids(train) == ids(train2));
  CHECK(ids(test) == ids(test2));
}

TEST_CASE("batches are homogeneous and partition the input") {
  SynthConfig cfg;
  cfg.n_patients = 137;
  auto records = generate_synthetic(cfg, 21);
  auto [train, test] = split_and_batch(records, 0.7, 4, /*max_batch=*/16);
  std::multiset<std::string> seen;
  for (const auto* side : {&train, &test})
    for (const auto& b : *side) {
      CHECK(b.records.size() <= 16);
      for (const auto& r : b.records) {
        CHECK(r.visit_count() == b.visit_count);
        seen.insert(r.patient_id);
      }
    }
  std::multiset<std::string> expected;
  for (const auto& r : records) expected.insert(r.patient_id);
  CHECK(seen == expected);
}

TEST_CASE("split rejects degenerate inputs") {
  std::vector<PatientRecord> one{valid_record()};
  CHECK_THROWS_AS(split_and_batch(one, 0.5, 1), SchemaError);
}
