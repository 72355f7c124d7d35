#include "monoball/commands.hpp"

#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <queue>
#include <sstream>
#include <thread>
#include <variant>

#include "monoball/evaluation.hpp"

namespace monoball {

namespace {

template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  bool push(T value) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push(std::move(value));
    not_empty_.notify_one();
    return true;
  }

  // Blocks until an item arrives; nullopt once closed and drained.
  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop();
    not_full_.notify_one();
    return v;
  }

  bool empty() {
    std::lock_guard lock(mu_);
    return items_.empty();
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_full_.notify_all();
    not_empty_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable not_full_, not_empty_;
  std::queue<T> items_;
  bool closed_ = false;
};

constexpr std::size_t kQueueDepth = 64;

struct ReadFailure {
  std::string message;
};

using ReaderItem = std::variant<FrameObservations, ReadFailure>;

Config config_or_default(const std::optional<std::string>& path) {
  return path ? load_config(*path) : Config{};
}

// Opens `path` unless it is "-", in which case `fallback` is used.
template <typename Stream, typename Base>
Base* open_or(const std::string& path, std::optional<Stream>& holder, Base& fallback) {
  if (path == "-") return &fallback;
  holder.emplace(path);
  if (!*holder) return nullptr;
  return &*holder;
}

}  // namespace

int track_stream(std::istream& in, std::ostream& out, std::ostream& err, const ModelParams& params, std::size_t lag) {
  BoundedQueue<ReaderItem> frames(kQueueDepth);
  BoundedQueue<std::string> lines(kQueueDepth * 4);

  std::thread reader([&] {
    FrameStreamReader r(in);
    try {
      while (auto f = r.next()) {
        if (!frames.push(std::move(*f))) return;
      }
    } catch (const Error& e) {
      frames.push(ReadFailure{e.what()});
    }
    frames.close();
  });

  std::thread writer([&] {
    // flush whenever we have caught up, so a downstream pipe sees records live
    while (auto line = lines.pop()) {
      out << *line << '\n';
      if (lines.empty()) out.flush();
    }
    out.flush();
  });

  int status = kExitOk;
  try {
    FixedLagTracker tracker(params, lag, /*keep_committed=*/false);
    while (auto item = frames.pop()) {
      if (auto* failure = std::get_if<ReadFailure>(&*item)) {
        err << "parse error: " << failure->message << '\n';
        status = kExitBadInput;
        break;
      }
      for (const auto& r : tracker.push(std::get<FrameObservations>(*item))) lines.push(trajectory_line(r));
    }
    if (status == kExitOk && !tracker.empty()) {
      for (const auto& r : tracker.finish()) lines.push(trajectory_line(r));
    }
  } catch (const Error& e) {
    err << "tracking failed: " << e.what() << '\n';
    status = (e.code() == ErrorCode::BeamExtinct || e.code() == ErrorCode::EmptyFrame) ? kExitExtinct : kExitBadInput;
  }

  frames.close();
  lines.close();
  reader.join();
  writer.join();
  return status;
}

int cmd_track(const TrackOptions& opts, std::ostream& err) {
  Config config;
  try {
    config = config_or_default(opts.config);
    if (opts.beam) config.model.beam_width = *opts.beam;
    validate(config.model);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitBadInput;
  }
  std::optional<std::ifstream> in_file;
  std::optional<std::ofstream> out_file;
  std::istream* in = open_or(opts.input, in_file, std::cin);
  if (!in) {
    err << "cannot open " << opts.input << '\n';
    return kExitIo;
  }
  std::ostream* out = open_or(opts.output, out_file, std::cout);
  if (!out) {
    err << "cannot open " << opts.output << '\n';
    return kExitIo;
  }
  return track_stream(*in, *out, err, config.model, opts.lag.value_or(config.model.lag));
}

int cmd_simulate(const SimulateOptions& opts, std::ostream& err) {
  Config config;
  try {
    config = config_or_default(opts.config);
    if (opts.seed) config.sim.seed = *opts.seed;
    validate(config.sim);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitBadInput;
  }
  const Simulation sim = simulate(config.sim);
  std::optional<std::ofstream> out_file;
  std::ostream* out = open_or(opts.output, out_file, std::cout);
  std::ofstream truth(opts.truth);
  if (!out || !truth) {
    err << "cannot open output files\n";
    return kExitIo;
  }
  replay_to_stream(sim.truth, sim.frames, *out, truth);
  return kExitOk;
}

namespace {

std::optional<GroundTruth> load_truth(const std::string& path, std::ostream& err) {
  std::ifstream in(path);
  if (!in) {
    err << "cannot open " << path << '\n';
    return std::nullopt;
  }
  return read_ground_truth(in);
}

}  // namespace

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  if (opts.window < 0) {
    err << "window must be non-negative\n";
    return kExitBadInput;
  }
  try {
    std::ifstream pred_in(opts.pred);
    if (!pred_in) {
      err << "cannot open " << opts.pred << '\n';
      return kExitIo;
    }
    const auto pred = read_trajectory(pred_in);
    const auto truth = load_truth(opts.truth, err);
    if (!truth) return kExitIo;
    out << format_report(evaluate(pred, *truth, opts.window));
    return kExitOk;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitBadInput;
  }
}

std::vector<std::size_t> parse_lag_list(const std::string& text) {
  std::vector<std::size_t> lags;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    long long v = -1;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos || v < 0) {
      throw Error(ErrorCode::ConfigInvalid, "bad lag \"" + item + "\"");
    }
    lags.push_back(static_cast<std::size_t>(v));
  }
  if (lags.empty()) throw Error(ErrorCode::ConfigInvalid, "empty lag list");
  return lags;
}

int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    Config config = config_or_default(opts.config);
    if (opts.beam) config.model.beam_width = *opts.beam;
    validate(config.model);

    std::ifstream in(opts.input);
    if (!in) {
      err << "cannot open " << opts.input << '\n';
      return kExitIo;
    }
    const auto frames = read_frame_stream(in);
    const auto truth = load_truth(opts.truth, err);
    if (!truth) return kExitIo;

    std::ostringstream csv;
    csv << "lag";
    for (double d : kDefaultThresholds) csv << ",acc_" << d;
    csv << ",f1_kick,f1_oop,latency_frames\n";

    char buf[256];
    std::snprintf(buf, sizeof buf, "%-6s %8s %8s %8s %8s %8s %8s %8s %8s %8s\n", "lag", "acc@0.5", "acc@1", "acc@2",
                  "acc@4", "acc@8", "f1_kick", "f1_oop", "fps", "latency");
    out << buf;
    for (std::size_t lag : opts.lags) {
      const auto run = measure_throughput_latency(frames, config.model, lag);
      EvalReport r = evaluate(run.trajectory, *truth, opts.window);
      r.throughput_fps = run.fps;
      r.latency_frames = run.latency_frames;
      const auto& a = r.accuracy_at;
      std::snprintf(buf, sizeof buf, "%-6zu %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f %8.1f %8.2f\n", lag, a.at(0.5),
                    a.at(1.0), a.at(2.0), a.at(4.0), a.at(8.0), r.f1_kick, r.f1_oop, r.throughput_fps, r.latency_frames);
      out << buf;
      csv << lag;
      for (double d : kDefaultThresholds) {
        std::snprintf(buf, sizeof buf, ",%.6f", a.at(d));
        csv << buf;
      }
      std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.2f\n", r.f1_kick, r.f1_oop, r.latency_frames);
      csv << buf;
    }
    if (opts.output) {
      std::ofstream file(*opts.output);
      if (!file) {
        err << "cannot open " << *opts.output << '\n';
        return kExitIo;
      }
      file << csv.str();
    }
    return kExitOk;
  } catch (const Error& e) {
    err << e.what() << '\n';
    if (e.code() == ErrorCode::BeamExtinct || e.code() == ErrorCode::EmptyFrame) return kExitExtinct;
    return kExitBadInput;
  }
}

}  // namespace monoball
