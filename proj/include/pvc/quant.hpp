#pragma once

#include <array>
#include <vector>

#include "pvc/common.hpp"
#include "pvc/graph.hpp"
#include "pvc/rng.hpp"

namespace pvc {

inline constexpr int kQpLevels = 64;  // training QP range [0, 63]

enum class TableSide { first_of_pair, second_of_pair };

// Per-QP channel gains, one table per pair position. Parameterized so each
// channel's gain is non-decreasing in QP by construction:
//   gains[q][c] = exp(raw_min[c] + sum_{i<q} softplus(raw_inc[i][c]))
// Both parameter tensors are trainable model parameters. At init raw_min is
// zero, so gains[0] is exactly 1 and the ladder spans roughly 1..16.
struct QuantTable {
  TableSide side = TableSide::first_of_pair;
  int channels = 0;
  VarPtr raw_min;  // (C,1,1)
  VarPtr raw_inc;  // (63,C,1), increment i covers the step q=i -> q=i+1

  QuantTable() = default;
  QuantTable(TableSide s, int channels_, bool trainable);

  // Materialized row for one QP; bit-identical to the graph-op path.
  std::vector<float> gains_row(int qp) const;

  // Full 64xC table (row-major by QP), for inspection and tests.
  std::vector<float> materialize() const;
};

struct QpPair {
  int qp_first = 0;
  int qp_second = 0;
};

struct QpSchedule {
  int base_qp = 32;
  std::array<int, 8> bias{0, 8, 0, 4, 0, 4, 0, 4};

  void validate() const {
    if (base_qp < 0 || base_qp >= kQpLevels)
      throw ConfigError("base_qp out of [0,63]: " + std::to_string(base_qp));
    for (int b : bias)
      if (b < 0) throw ConfigError("qp bias entries must be >= 0");
  }
};

// clamp(base + bias[index mod 8], 0, 63); higher QP means higher quality.
int schedule_qp(const QpSchedule& schedule, int frame_index);

// QPs of the two frames of pair `pair_index` (frames 2p and 2p+1).
QpPair qp_pair_for(const QpSchedule& schedule, int pair_index);

// concat(first.gains[qp_first], second.gains[qp_second]); the result has
// 2C entries and multiplies the channel-concatenated latent elementwise.
std::vector<float> lookup_pair_gains(const QuantTable& table_first,
                                     const QuantTable& table_second, const QpPair& qp);

// Graph-op version of the lookup, used by the training path so gradients
// reach the table parameters.
VarPtr pair_gains_var(Graph& g, const QuantTable& table_first, const QuantTable& table_second,
                      const QpPair& qp);

}  // namespace pvc
