#pragma once

#include <vector>

#include "pvc/bdrate.hpp"
#include "pvc/csv.hpp"
#include "pvc/pipeline.hpp"

namespace pvc {

// Per-sequence-first averaging: each report contributes its own (bpp, mean
// PSNR); the point is the plain mean of those.
RDPoint rd_point_from_reports(const std::vector<SequenceReport>& reports);

// Per-QP sweep results, in ascending QP order.
struct RdSweep {
  std::vector<int> qps;
  std::vector<RDPoint> points;  // aligned with qps
  std::string label;

  RDCurve curve() const { return RDCurve::make(points, label); }
};

// One RDPoint per QP, averaged per sequence then across sequences. Sequences
// are processed in name order so the result is independent of input order.
// `workers` fans the (sequence, qp) grid out across threads.
RdSweep build_rd_sweep(const CodecModel& model, const std::vector<Sequence>& sequences,
                       const std::vector<int>& qp_list, const CodingConfig& base_cfg,
                       const std::string& label, int workers = 1);

inline RDCurve build_rd_curve(const CodecModel& model, const std::vector<Sequence>& sequences,
                              const std::vector<int>& qp_list, const CodingConfig& base_cfg,
                              const std::string& label, int workers = 1) {
  return build_rd_sweep(model, sequences, qp_list, base_cfg, label, workers).curve();
}

// frame_index,bits,bpp,psnr_y,psnr_u,psnr_v,psnr_yuv
CsvTable per_frame_trace(const SequenceReport& report);

CsvTable rd_sweep_csv(const RdSweep& sweep);
RDCurve rd_curve_from_csv(const std::filesystem::path& path, const std::string& label);

}  // namespace pvc
