#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tghoa/data.hpp"
#include "tghoa/decay.hpp"
#include "tghoa/tape.hpp"

namespace tghoa {

struct ModelConfig {
  int d = 128;      // LSTM hidden width
  int d_u = 64;     // code embedding width
  int d_v = 16;     // lab feature width
  int c1 = 8;       // first conv channels
  int k1 = 5;       // first conv kernel width
  int pool_width = 2;
  int pool_stride = 2;
  int k2 = 3;       // second conv kernel width
  int d_o = 0;      // head hidden width, 0 means d/2
  int n_v = 1;      // lab indicators (from the dataset)
  int n_u_max = 5;  // diagnosis slots per visit
  int num_codes = 50;
  int num_classes = 2;

  int head_hidden() const { return d_o > 0 ? d_o : d / 2; }
  int lstm_input() const { return d_u + n_v * d_v; }

  void adopt_dataset(const DatasetConfig& ds) {
    n_v = ds.n_v();
    n_u_max = ds.n_u_max;
    num_codes = ds.num_codes;
    num_classes = ds.num_classes;
  }
};

// Which attention units of the score combination are active, and whether the
// query is scaled by the time decay. All units off degenerates to uniform
// attention, i.e. the plain LSTM baseline.
struct AblationConfig {
  bool use_intra = true;
  bool use_inter = true;
  bool use_third = true;
  bool use_time_guide = true;
  DecayKind decay = DecayKind::G2;

  static AblationConfig from_name(const std::string& name);
  std::string name() const;
};

struct CnnParams {
  Param conv1_w, conv1_b;  // {c1,1,k1}, {c1}
  Param conv2_w, conv2_b;  // {d_v,c1,k2}, {d_v}
};

// Every learnable tensor of the model, in one flat bag. Names follow the
// symbols used in the checkpoint format (see save()).
struct ModelParams {
  ModelConfig cfg;

  Param theta_e;                     // {d_u, num_codes}
  std::vector<CnnParams> cnn;        // one per indicator, never shared

  Param theta_d, b_d;                // query projection {d,d}, {d}
  Param theta_u1, theta_v1;          // intra-sequence {d,d_u}, {d,d_v}
  Param theta_uq, theta_vq;          // {d,d}
  Param theta_u2, theta_v2;          // inter-sequence {d,d_u}, {d,d_v}
  Param theta_u2_kernel;             // {n_u_max}
  Param theta_v2_kernel;             // {n_v}
  Param theta_u3, theta_v3, theta_q; // third-order {d,d_u}, {d,d_v}, {d,d}
  Param theta_u3_kernel;             // {n_u_max}
  Param theta_v3_kernel;             // {n_v}
  Param eta, epsilon;                // {4} each

  Param lstm_w_input, lstm_w_forget, lstm_w_output, lstm_w_cell;  // {d, d_x+d}
  Param lstm_b_input, lstm_b_forget, lstm_b_output, lstm_b_cell;  // {d}

  Param head_w, head_b;              // {d_o, d}, {d_o}
  Param theta_o, b_o;                // {K, d_o}, {K}

  // per-indicator waveform standardization, fitted on the training split
  std::vector<double> norm_mean, norm_std;

  static ModelParams init(const ModelConfig& cfg, uint64_t seed);

  std::vector<Param*> all();         // stable order, used by optimizer and FD
  void zero_grads();
  long scalar_count();

  void save(const std::string& path, const AblationConfig& ablation,
            const DatasetConfig& dataset) const;
  struct Loaded;
  static Loaded load(const std::string& path);
};

struct ModelParams::Loaded {
  ModelParams params;
  AblationConfig ablation;
  DatasetConfig dataset;
};

}  // namespace tghoa
