#include "pvc/quant.hpp"

#include <algorithm>
#include <cmath>

namespace pvc {

QuantTable::QuantTable(TableSide s, int channels_, bool trainable) : side(s), channels(channels_) {
  if (channels <= 0) throw ConfigError("QuantTable needs a positive channel count");
  raw_min = make_var(Tensor(channels, 1, 1), trainable);
  raw_inc = make_var(Tensor(kQpLevels - 1, channels, 1), trainable);
  // softplus(x) = ln(16)/63 per step spans gains 1..16 across the QP range.
  const float step = std::log(16.0f) / (kQpLevels - 1);
  const float raw0 = std::log(std::expm1(step));
  raw_inc->val.fill(raw0);
}

std::vector<float> QuantTable::gains_row(int qp) const {
  if (qp < 0 || qp >= kQpLevels) throw ConfigError("qp out of [0,63]: " + std::to_string(qp));
  std::vector<float> out(channels);
  quant_gain_row(raw_min->val.data(), raw_inc->val.data(), channels, qp, out.data());
  return out;
}

std::vector<float> QuantTable::materialize() const {
  std::vector<float> table(static_cast<size_t>(kQpLevels) * channels);
  for (int q = 0; q < kQpLevels; q++) {
    quant_gain_row(raw_min->val.data(), raw_inc->val.data(), channels, q,
                   table.data() + static_cast<size_t>(q) * channels);
  }
  return table;
}

int schedule_qp(const QpSchedule& schedule, int frame_index) {
  if (frame_index < 0) throw ConfigError("frame_index must be >= 0");
  const int raw = schedule.base_qp + schedule.bias[frame_index % 8];
  return std::clamp(raw, 0, kQpLevels - 1);
}

QpPair qp_pair_for(const QpSchedule& schedule, int pair_index) {
  if (pair_index < 0) throw ConfigError("pair_index must be >= 0");
  return QpPair{schedule_qp(schedule, 2 * pair_index), schedule_qp(schedule, 2 * pair_index + 1)};
}

std::vector<float> lookup_pair_gains(const QuantTable& table_first,
                                     const QuantTable& table_second, const QpPair& qp) {
  if (table_first.channels != table_second.channels)
    throw ConfigError("quantization tables disagree on channel count: " +
                      std::to_string(table_first.channels) + " vs " +
                      std::to_string(table_second.channels));
  std::vector<float> out = table_first.gains_row(qp.qp_first);
  const std::vector<float> second = table_second.gains_row(qp.qp_second);
  out.insert(out.end(), second.begin(), second.end());
  return out;
}

VarPtr pair_gains_var(Graph& g, const QuantTable& table_first, const QuantTable& table_second,
                      const QpPair& qp) {
  if (table_first.channels != table_second.channels)
    throw ConfigError("quantization tables disagree on channel count: " +
                      std::to_string(table_first.channels) + " vs " +
                      std::to_string(table_second.channels));
  VarPtr a = g.qp_gains(table_first.raw_min, table_first.raw_inc, qp.qp_first);
  VarPtr b = g.qp_gains(table_second.raw_min, table_second.raw_inc, qp.qp_second);
  return g.concat_c(a, b);
}

}  // namespace pvc
