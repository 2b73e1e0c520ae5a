// pairvc: train / encode / decode / eval / plot for the paired-frame codec.
// Exit codes: 0 success, 2 usage or configuration error, 1 runtime failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "json.hpp"
#include "pvc/checkpoint.hpp"
#include "pvc/container.hpp"
#include "pvc/rdcurve.hpp"
#include "pvc/svg_plot.hpp"
#include "pvc/synthetic.hpp"
#include "pvc/trainer.hpp"
#include "pvc/yuv_io.hpp"

namespace fs = std::filesystem;
using namespace pvc;

namespace {

// --config FILE: JSON keys become "--key=value" arguments appended after the
// real command line, so explicit flags win. Unknown keys surface as CLI11
// extras errors naming the key.
std::vector<std::string> merge_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  fs::path config_path;
  for (size_t i = 0; i < args.size(); i++) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    }
  }
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open config file '" + config_path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + config_path.string() + "': " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");

  auto already_given = [&](const std::string& key) {
    const std::string flag = "--" + key;
    for (const auto& a : args) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };

  for (const auto& [key, value] : j.items()) {
    if (already_given(key)) continue;
    std::string v;
    if (value.is_string()) {
      v = value.get<std::string>();
    } else if (value.is_array()) {
      for (size_t i = 0; i < value.size(); i++) {
        if (i) v += ",";
        v += value[i].is_string() ? value[i].get<std::string>() : value[i].dump();
      }
    } else {
      v = value.dump();
    }
    args.push_back("--" + key + "=" + v);
  }
  return args;
}

Sequence load_input_sequence(const fs::path& path, int width, int height, size_t max_frames) {
  fs::path sidecar = path;
  sidecar.replace_extension(".json");
  if (fs::exists(sidecar)) return read_sequence_with_sidecar(path, max_frames);
  if (width <= 0 || height <= 0)
    throw ConfigError("no sidecar for '" + path.string() + "'; pass --width and --height");
  return read_yuv420(path, width, height, max_frames);
}

std::pair<std::string, std::string> split_label_path(const std::string& s,
                                                     const char* what) {
  const size_t eq = s.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= s.size())
    throw ConfigError(std::string(what) + " must be label=path, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

// ---- train ----

struct TrainArgs {
  std::string data_dir, out_dir;
  TrainConfig cfg;
  ModelConfig model_cfg;
  size_t max_frames = 1 << 20;
  std::vector<int> qp_bias;
  std::vector<double> hier_weights, yuv_weights, ref_probs, noise_sigma;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig cfg = a.cfg;
  auto fill = [](auto& arr, const auto& vec, const char* name) {
    if (vec.empty()) return;
    if (vec.size() != arr.size())
      throw ConfigError(std::string(name) + " needs exactly " + std::to_string(arr.size()) +
                        " values");
    std::copy(vec.begin(), vec.end(), arr.begin());
  };
  fill(cfg.qp_bias, a.qp_bias, "--qp-bias");
  fill(cfg.hierarchical_weights, a.hier_weights, "--hier-weights");
  fill(cfg.yuv_loss_weights, a.yuv_weights, "--yuv-weights");
  fill(cfg.reference_mode_probs, a.ref_probs, "--ref-probs");
  fill(cfg.noise_sigma_range, a.noise_sigma, "--noise-sigma");
  cfg.validate();
  a.model_cfg.validate();

  const std::vector<Sequence> dataset = load_sequence_dir(a.data_dir, a.max_frames);
  CodecModel model(a.model_cfg, cfg.seed);
  const TrainResult r = train(model, dataset, cfg, a.out_dir, &std::cerr);
  std::cout << "final_loss " << format_number(r.final_loss) << "\n"
            << "checkpoint " << r.final_checkpoint.string() << "\n";
  return 0;
}

// ---- encode ----

struct EncodeArgs {
  std::string ckpt;
  std::vector<std::string> inputs;
  std::string out;
  int width = 0, height = 0;
  CodingConfig cfg;
  std::string mode = "unified";
  int workers = 1;
  size_t max_frames = 1 << 20;
};

int cmd_encode(const EncodeArgs& a) {
  if (a.inputs.empty()) throw ConfigError("encode needs at least one --input");
  CodingConfig cfg = a.cfg;
  cfg.mode = coding_mode_from_string(a.mode);
  cfg.validate();
  CodecModel model = load_checkpoint(a.ckpt);

  const bool multi = a.inputs.size() > 1;
  fs::path out(a.out.empty() ? "." : a.out);
  if (multi || fs::is_directory(out)) fs::create_directories(out);

  struct Task {
    fs::path input, container, metrics;
  };
  std::vector<Task> tasks;
  for (const auto& in : a.inputs) {
    fs::path ip(in);
    fs::path container, metrics;
    if (!multi && !fs::is_directory(out) && !a.out.empty()) {
      container = out;
    } else {
      container = out / (ip.stem().string() + ".pvcs");
    }
    metrics = container;
    metrics.replace_extension(".metrics.csv");
    tasks.push_back({ip, container, metrics});
  }

  std::vector<std::string> lines(tasks.size());
  auto run_task = [&](size_t t) {
    const Sequence seq = load_input_sequence(tasks[t].input, a.width, a.height, a.max_frames);
    auto [packets, report] = encode_sequence(model, seq, cfg);
    StreamHeader h;
    h.width = seq.width();
    h.height = seq.height();
    h.frame_count = static_cast<int64_t>(seq.size());
    h.base_qp = cfg.base_qp;
    h.mode = cfg.mode;
    h.refresh_period = cfg.refresh_period;
    h.intra_period = cfg.intra_period;
    h.latent_channels = model.config().latent_channels;
    write_container(tasks[t].container, h, packets);
    write_csv(tasks[t].metrics, per_frame_trace(report));
    lines[t] = seq.name + " frames " + std::to_string(seq.size()) + " bpp " +
               format_number(report.total_bpp) + " psnr_yuv " +
               format_number(report.mean_psnr()) + " -> " + tasks[t].container.string();
  };

  if (a.workers <= 1 || tasks.size() == 1) {
    for (size_t t = 0; t < tasks.size(); t++) run_task(t);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int i = 0; i < std::min<int>(a.workers, static_cast<int>(tasks.size())); i++) {
      pool.emplace_back([&] {
        SerialKernelGuard guard;
        for (;;) {
          const size_t t = next.fetch_add(1);
          if (t >= tasks.size()) return;
          run_task(t);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& l : lines) std::cout << l << "\n";
  return 0;
}

// ---- decode ----

struct DecodeArgs {
  std::string ckpt, input, out;
  bool no_verify = false;
};

int cmd_decode(const DecodeArgs& a) {
  CodecModel model = load_checkpoint(a.ckpt);
  auto [header, packets] = read_container(a.input);
  if (header.latent_channels != model.config().latent_channels)
    throw ConfigError("stream latent channels (" + std::to_string(header.latent_channels) +
                      ") do not match the checkpoint (" +
                      std::to_string(model.config().latent_channels) + ")");
  const Sequence recon = decode_sequence(model, packets, header.dims(), header.coding_config(),
                                         !a.no_verify);
  write_yuv420(recon, a.out);
  SequenceMeta meta{fs::path(a.out).stem().string(), header.width, header.height, 30.0};
  fs::path sidecar(a.out);
  sidecar.replace_extension(".json");
  write_sidecar(meta, sidecar);
  std::cout << "decoded " << recon.size() << " frames " << header.width << "x" << header.height
            << " -> " << a.out << "\n";
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string ckpt;
  std::vector<std::string> inputs;
  std::vector<int> qps;
  std::string label = "ours";
  std::string mode = "unified";
  CodingConfig cfg;
  std::vector<std::string> curves;
  std::string anchor;
  std::string dataset = "all";
  std::string out_dir = ".";
  int workers = 1;
  int bd_samples = 1000;
  size_t max_frames = 1 << 20;
  int width = 0, height = 0;
};

int cmd_eval(const EvalArgs& a) {
  fs::create_directories(a.out_dir);
  std::map<std::string, RDCurve> curves;

  if (!a.inputs.empty()) {
    if (a.ckpt.empty()) throw ConfigError("eval with --inputs needs --ckpt");
    if (a.qps.size() < 4) throw ConfigError("eval needs at least 4 --qps");
    CodingConfig cfg = a.cfg;
    cfg.mode = coding_mode_from_string(a.mode);
    std::vector<Sequence> seqs;
    for (const auto& in : a.inputs)
      seqs.push_back(load_input_sequence(in, a.width, a.height, a.max_frames));
    CodecModel model = load_checkpoint(a.ckpt);
    const RdSweep sweep = build_rd_sweep(model, seqs, a.qps, cfg, a.label, a.workers);
    const fs::path csv_path = fs::path(a.out_dir) / (a.label + "_rd.csv");
    write_csv(csv_path, rd_sweep_csv(sweep));
    std::cout << "curve " << a.label << " -> " << csv_path.string() << "\n";
    curves.emplace(a.label, sweep.curve());
  }

  for (const auto& c : a.curves) {
    auto [label, path] = split_label_path(c, "--curves");
    curves.emplace(label, rd_curve_from_csv(path, label));
  }

  if (curves.empty()) throw ConfigError("eval has nothing to do: no inputs and no curves");

  if (!a.anchor.empty()) {
    auto it = curves.find(a.anchor);
    if (it == curves.end())
      throw ConfigError("anchor '" + a.anchor + "' is not among the evaluated methods");
    CsvTable t;
    t.header = {"method", "dataset", "bd_rate_percent_vs_" + a.anchor};
    for (const auto& [label, curve] : curves) {
      std::string cell;
      try {
        cell = format_number(bd_rate(it->second, curve, a.bd_samples));
      } catch (const ConfigError& e) {
        std::cerr << "bd-rate " << a.anchor << " vs " << label << ": " << e.what() << "\n";
        cell = "";
      }
      t.rows.push_back({label, a.dataset, cell});
      std::cout << "bd-rate " << label << " vs " << a.anchor << ": "
                << (cell.empty() ? "n/a" : cell + " %") << "\n";
    }
    const fs::path bd_path = fs::path(a.out_dir) / "bd_matrix.csv";
    write_csv(bd_path, t);
    std::cout << "bd matrix -> " << bd_path.string() << "\n";
  }
  return 0;
}

// ---- plot ----

struct PlotArgs {
  std::vector<std::string> traces, curves;
  std::string out_dir = ".";
};

int cmd_plot(const PlotArgs& a) {
  if (a.traces.empty() && a.curves.empty())
    throw ConfigError("plot needs --trace and/or --curves inputs");
  fs::create_directories(a.out_dir);

  if (!a.traces.empty()) {
    PlotSpec bpp_spec, psnr_spec;
    bpp_spec.title = "Bitrate per frame";
    bpp_spec.x_label = "frame";
    bpp_spec.y_label = "bpp";
    psnr_spec.title = "Quality per frame";
    psnr_spec.x_label = "frame";
    psnr_spec.y_label = "PSNR (dB)";
    for (const auto& spec : a.traces) {
      std::string label, path;
      if (spec.find('=') != std::string::npos) {
        std::tie(label, path) = split_label_path(spec, "--trace");
      } else {
        path = spec;
        label = fs::path(spec).stem().string();
      }
      const CsvTable t = read_csv(path);
      const int fi = t.column("frame_index"), bpp = t.column("bpp"), ps = t.column("psnr_yuv");
      if (fi < 0 || bpp < 0 || ps < 0)
        throw FormatError("'" + path +
                          "': trace csv needs frame_index, bpp and psnr_yuv columns");
      PlotSeries sb{label, {}}, sp{label, {}};
      for (size_t r = 0; r < t.rows.size(); r++) {
        sb.points.push_back({t.number(r, fi), t.number(r, bpp)});
        sp.points.push_back({t.number(r, fi), t.number(r, ps)});
      }
      bpp_spec.series.push_back(std::move(sb));
      psnr_spec.series.push_back(std::move(sp));
    }
    write_svg_plot(fs::path(a.out_dir) / "trace_bpp.svg", bpp_spec);
    write_svg_plot(fs::path(a.out_dir) / "trace_psnr.svg", psnr_spec);
    std::cout << "wrote " << (fs::path(a.out_dir) / "trace_bpp.svg").string() << " and "
              << (fs::path(a.out_dir) / "trace_psnr.svg").string() << "\n";
  }

  if (!a.curves.empty()) {
    PlotSpec rd;
    rd.title = "Rate-distortion";
    rd.x_label = "bpp";
    rd.y_label = "PSNR (dB)";
    for (const auto& spec : a.curves) {
      auto [label, path] = split_label_path(spec, "--curves");
      const RDCurve curve = rd_curve_from_csv(path, label);
      PlotSeries s{label, {}};
      for (const RDPoint& p : curve.points) s.points.push_back({p.bpp, p.psnr});
      rd.series.push_back(std::move(s));
    }
    write_svg_plot(fs::path(a.out_dir) / "rd_curves.svg", rd);
    std::cout << "wrote " << (fs::path(a.out_dir) / "rd_curves.svg").string() << "\n";
  }
  return 0;
}

// ---- synth ----

struct SynthArgs {
  std::string out;
  int width = 64, height = 64, frames = 16, period = 16;
  uint64_t seed = 7;
  double fps = 30.0;
};

int cmd_synth(const SynthArgs& a) {
  Sequence seq = make_moving_gradient_clip(a.width, a.height, a.frames, a.seed, a.period);
  write_yuv420(seq, a.out);
  fs::path sidecar(a.out);
  sidecar.replace_extension(".json");
  write_sidecar(SequenceMeta{fs::path(a.out).stem().string(), a.width, a.height, a.fps}, sidecar);
  std::cout << "wrote " << a.frames << " frames to " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pairvc - trainable two-frame neural video codec"};
  app.option_defaults()->always_capture_default(true);
  app.require_subcommand(1);

  // Every subcommand accepts --config FILE (JSON; flags override file keys).
  TrainArgs ta;
  EncodeArgs ea;
  DecodeArgs da;
  EvalArgs va;
  PlotArgs pa;
  SynthArgs sa;
  std::string config_dummy;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_dummy, "JSON config file; explicit flags override it");
  };

  CLI::App* tr = app.add_subcommand("train", "train a model on a directory of .yuv clips");
  add_config(tr);
  tr->add_option("--data", ta.data_dir, "directory of .yuv files with .json sidecars")->required();
  tr->add_option("--out", ta.out_dir, "output directory for checkpoints and logs")->required();
  tr->add_option("--steps", ta.cfg.steps, "optimization steps");
  tr->add_option("--batch", ta.cfg.batch, "groups per step");
  tr->add_option("--patch-size", ta.cfg.patch_size, "training crop size (multiple of 8)");
  tr->add_option("--seed", ta.cfg.seed, "sampling and init seed");
  tr->add_option("--qp", ta.cfg.fixed_base_qp, "fix base QP (-1: uniform random per step)");
  tr->add_option("--lr", ta.cfg.lr, "learning rate");
  tr->add_option("--lr-schedule", ta.cfg.lr_schedule, "constant | cosine");
  tr->add_option("--lr-final", ta.cfg.lr_final, "final lr for cosine schedule");
  tr->add_option("--lambda-min", ta.cfg.lambda_min, "lambda at QP 0");
  tr->add_option("--lambda-max", ta.cfg.lambda_max, "lambda at QP 63");
  tr->add_option("--qp-bias", ta.qp_bias, "8 QP bias values")->delimiter(',');
  tr->add_option("--hier-weights", ta.hier_weights, "8 per-frame loss weights")->delimiter(',');
  tr->add_option("--yuv-weights", ta.yuv_weights, "3 plane MSE weights (sum 1)")->delimiter(',');
  tr->add_option("--ref-probs", ta.ref_probs, "blank,gt,noisy reference probabilities")
      ->delimiter(',');
  tr->add_option("--noise-sigma", ta.noise_sigma, "noise sigma range lo,hi")->delimiter(',');
  tr->add_option("--checkpoint-interval", ta.cfg.checkpoint_interval, "steps between checkpoints");
  tr->add_option("--long-stage-steps", ta.cfg.long_stage_steps,
                 "extra steps on chained 16-frame windows");
  tr->add_option("--max-frames", ta.max_frames, "cap frames loaded per sequence");
  tr->add_option("--latent-channels", ta.model_cfg.latent_channels, "joint latent channels");
  tr->add_option("--feature-channels", ta.model_cfg.feature_channels, "reference feature width");
  tr->add_option("--trunk-channels", ta.model_cfg.trunk_channels, "conv trunk width");
  tr->add_option("--head-channels", ta.model_cfg.head_channels, "reconstruction head width");

  CLI::App* en = app.add_subcommand("encode", "encode raw YUV420 into a packet container");
  add_config(en);
  en->add_option("--ckpt", ea.ckpt, "model checkpoint")->required();
  en->add_option("--input", ea.inputs, "input .yuv file(s)")->required();
  en->add_option("--out", ea.out, "output container path (or directory for several inputs)");
  en->add_option("--width", ea.width, "frame width when no sidecar exists");
  en->add_option("--height", ea.height, "frame height when no sidecar exists");
  en->add_option("--qp", ea.cfg.base_qp, "base QP in [0,63]");
  en->add_option("--mode", ea.mode, "unified | divided_refresh");
  en->add_option("--refresh-period", ea.cfg.refresh_period,
                 "refresh period in frames (divided_refresh only)");
  en->add_option("--intra-period", ea.cfg.intra_period, "-1 or a positive frame period");
  en->add_option("--workers", ea.workers, "parallel workers across inputs");
  en->add_option("--max-frames", ea.max_frames, "cap frames read per input");

  CLI::App* de = app.add_subcommand("decode", "decode a packet container to raw YUV420");
  add_config(de);
  de->add_option("--ckpt", da.ckpt, "model checkpoint")->required();
  de->add_option("--input", da.input, "packet container")->required();
  de->add_option("--out", da.out, "output .yuv path")->required();
  de->add_flag("--no-verify", da.no_verify, "skip prior digest verification");

  CLI::App* ev = app.add_subcommand("eval", "build RD curves and a BD-rate matrix");
  add_config(ev);
  ev->add_option("--ckpt", va.ckpt, "model checkpoint (needed with --inputs)");
  ev->add_option("--inputs", va.inputs, "evaluation .yuv sequences");
  ev->add_option("--qps", va.qps, "QP list (at least 4)")->delimiter(',');
  ev->add_option("--label", va.label, "label for the evaluated model");
  ev->add_option("--mode", va.mode, "unified | divided_refresh");
  ev->add_option("--refresh-period", va.cfg.refresh_period, "refresh period (divided_refresh)");
  ev->add_option("--intra-period", va.cfg.intra_period, "-1 or a positive frame period");
  ev->add_option("--curves", va.curves, "extra curves as label=path.csv");
  ev->add_option("--anchor", va.anchor, "anchor label for BD-rate");
  ev->add_option("--dataset", va.dataset, "dataset column for the BD matrix");
  ev->add_option("--out-dir", va.out_dir, "output directory");
  ev->add_option("--workers", va.workers, "parallel workers over (sequence, qp)");
  ev->add_option("--bd-samples", va.bd_samples, "trapezoid samples for BD-rate");
  ev->add_option("--width", va.width, "frame width when no sidecar exists");
  ev->add_option("--height", va.height, "frame height when no sidecar exists");
  ev->add_option("--max-frames", va.max_frames, "cap frames read per input");

  CLI::App* pl = app.add_subcommand("plot", "render trace and RD-curve SVG plots");
  add_config(pl);
  pl->add_option("--trace", pa.traces, "per-frame metrics csv (label=path or path)");
  pl->add_option("--curves", pa.curves, "RD curve csv as label=path");
  pl->add_option("--out-dir", pa.out_dir, "output directory");

  CLI::App* sy = app.add_subcommand("synth", "generate a synthetic moving-gradient clip");
  add_config(sy);
  sy->add_option("--out", sa.out, "output .yuv path")->required();
  sy->add_option("--width", sa.width, "frame width");
  sy->add_option("--height", sa.height, "frame height");
  sy->add_option("--frames", sa.frames, "frame count");
  sy->add_option("--period", sa.period, "motion period in frames");
  sy->add_option("--seed", sa.seed, "pattern seed");
  sy->add_option("--fps", sa.fps, "sidecar frame rate");

  std::vector<std::string> args;
  try {
    args = merge_config_args(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  // CLI11 parses reversed vectors.
  std::vector<std::string> rargs(args.rbegin(), args.rend());
  try {
    app.parse(rargs);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (tr->parsed()) return cmd_train(ta);
    if (en->parsed()) return cmd_encode(ea);
    if (de->parsed()) return cmd_decode(da);
    if (ev->parsed()) return cmd_eval(va);
    if (pl->parsed()) return cmd_plot(pa);
    if (sy->parsed()) return cmd_synth(sa);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
