#include "pvc/rdcurve.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace pvc {

RDPoint rd_point_from_reports(const std::vector<SequenceReport>& reports) {
  if (reports.empty()) throw ConfigError("rd_point_from_reports: no reports");
  double bpp = 0.0, psnr = 0.0;
  for (const auto& r : reports) {
    bpp += r.total_bpp;
    psnr += r.mean_psnr();
  }
  const double n = static_cast<double>(reports.size());
  return RDPoint{bpp / n, psnr / n};
}

RdSweep build_rd_sweep(const CodecModel& model, const std::vector<Sequence>& sequences,
                       const std::vector<int>& qp_list, const CodingConfig& base_cfg,
                       const std::string& label, int workers) {
  if (sequences.empty()) throw ConfigError("build_rd_sweep: empty sequence set");
  if (qp_list.size() < 4)
    throw ConfigError("build_rd_sweep: need at least 4 QPs, got " +
                      std::to_string(qp_list.size()));

  std::vector<int> qps = qp_list;
  std::sort(qps.begin(), qps.end());

  // Canonical sequence order: results do not depend on caller ordering.
  std::vector<const Sequence*> ordered;
  ordered.reserve(sequences.size());
  for (const auto& s : sequences) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(),
            [](const Sequence* a, const Sequence* b) { return a->name < b->name; });

  const size_t nq = qps.size(), ns = ordered.size();
  std::vector<SequenceReport> reports(nq * ns);

  auto run_task = [&](size_t t) {
    const size_t qi = t / ns, si = t % ns;
    CodingConfig cfg = base_cfg;
    cfg.base_qp = qps[qi];
    cfg.validate();
    reports[t] = encode_sequence(model, *ordered[si], cfg).second;
  };

  const size_t total = nq * ns;
  if (workers <= 1 || total <= 1) {
    for (size_t t = 0; t < total; t++) run_task(t);
  } else {
    std::atomic<size_t> next{0};
    auto worker = [&] {
      SerialKernelGuard guard;  // inner GEMMs stay single-threaded per worker
      for (;;) {
        const size_t t = next.fetch_add(1);
        if (t >= total) return;
        run_task(t);
      }
    };
    std::vector<std::thread> pool;
    const int nthreads = std::min<int>(workers, static_cast<int>(total));
    pool.reserve(nthreads);
    for (int i = 0; i < nthreads; i++) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  RdSweep sweep;
  sweep.label = label;
  sweep.qps = qps;
  sweep.points.resize(nq);
  for (size_t qi = 0; qi < nq; qi++) {
    std::vector<SequenceReport> per_qp(reports.begin() + qi * ns, reports.begin() + (qi + 1) * ns);
    sweep.points[qi] = rd_point_from_reports(per_qp);
  }
  return sweep;
}

CsvTable per_frame_trace(const SequenceReport& report) {
  CsvTable t;
  t.header = {"frame_index", "bits", "bpp", "psnr_y", "psnr_u", "psnr_v", "psnr_yuv"};
  const double pixels = static_cast<double>(report.reconstructions.width()) *
                        report.reconstructions.height();
  for (size_t i = 0; i < report.per_frame_bits.size(); i++) {
    const PlanePsnr& p = report.per_frame_components[i];
    t.rows.push_back({std::to_string(i), format_number(report.per_frame_bits[i]),
                      format_number(report.per_frame_bits[i] / pixels), format_number(p.y),
                      format_number(p.u), format_number(p.v), format_number(p.yuv)});
  }
  return t;
}

CsvTable rd_sweep_csv(const RdSweep& sweep) {
  CsvTable t;
  t.header = {"qp", "bpp", "psnr"};
  for (size_t i = 0; i < sweep.points.size(); i++) {
    t.rows.push_back({std::to_string(sweep.qps[i]), format_number(sweep.points[i].bpp),
                      format_number(sweep.points[i].psnr)});
  }
  return t;
}

RDCurve rd_curve_from_csv(const std::filesystem::path& path, const std::string& label) {
  const CsvTable t = read_csv(path);
  const int bpp_col = t.column("bpp");
  const int psnr_col = t.column("psnr");
  if (bpp_col < 0 || psnr_col < 0)
    throw FormatError("'" + path.string() + "': rd curve csv needs 'bpp' and 'psnr' columns");
  std::vector<RDPoint> pts;
  pts.reserve(t.rows.size());
  for (size_t r = 0; r < t.rows.size(); r++)
    pts.push_back(RDPoint{t.number(r, bpp_col), t.number(r, psnr_col)});
  return RDCurve::make(std::move(pts), label);
}

}  // namespace pvc
