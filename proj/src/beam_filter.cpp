#include "monoball/beam_filter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "monoball/io.hpp"

namespace monoball {

namespace {

/// Bounded selection of the best `capacity` hypotheses under ranks_before.
/// The heap front is the worst retained entry.
class TopK {
 public:
  explicit TopK(std::size_t capacity) : capacity_(capacity) {}

  double threshold() const noexcept { return heap_.size() < capacity_ ? kNegInf : heap_.front().log_weight; }

  void push(Hypothesis&& h) {
    if (heap_.size() < capacity_) {
      heap_.push_back(std::move(h));
      std::push_heap(heap_.begin(), heap_.end(), ranks_before);
    } else if (ranks_before(h, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), ranks_before);
      heap_.back() = std::move(h);
      std::push_heap(heap_.begin(), heap_.end(), ranks_before);
    }
  }

  std::vector<Hypothesis> take_sorted() {
    std::sort(heap_.begin(), heap_.end(), ranks_before);
    return std::move(heap_);
  }

 private:
  std::size_t capacity_;
  std::vector<Hypothesis> heap_;
};

/// Keeps, at most `width` in total, the best `reserve` hypotheses of every
/// mode plus the best of the rest. Input and output sorted by ranks_before.
void select_beam(std::vector<Hypothesis>& sorted, std::size_t width, std::size_t reserve) {
  if (sorted.size() <= width) return;
  reserve = std::min(reserve, width / kAllModes.size());
  std::array<std::size_t, 4> taken{};
  std::vector<char> keep(sorted.size(), 0);
  std::size_t reserved = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    auto& n = taken[index(sorted[i].mode())];
    if (n < reserve) {
      ++n;
      keep[i] = 1;
      ++reserved;
    }
  }
  std::size_t open = width - reserved;
  for (std::size_t i = 0; i < sorted.size() && open > 0; ++i) {
    if (!keep[i]) {
      keep[i] = 1;
      --open;
    }
  }
  std::size_t w = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (keep[i]) sorted[w++] = std::move(sorted[i]);
  }
  sorted.resize(w);
}

/// Streaming counterpart of select_beam: a global TopK plus one per mode.
class BeamSelector {
 public:
  BeamSelector(std::size_t width, std::size_t reserve)
      : width_(width), reserve_(std::min(reserve, width / kAllModes.size())), global_(width),
        per_mode_{TopK(reserve_), TopK(reserve_), TopK(reserve_), TopK(reserve_)} {}

  /// Scores below this cannot enter for a child of mode `m`.
  double threshold(Mode m) const noexcept {
    if (reserve_ == 0) return global_.threshold();
    return std::min(global_.threshold(), per_mode_[index(m)].threshold());
  }

  void push(Hypothesis&& h) {
    if (reserve_ > 0) {
      TopK& mode_heap = per_mode_[index(h.mode())];
      if (!(h.log_weight < mode_heap.threshold())) {
        Hypothesis copy = h;
        mode_heap.push(std::move(copy));
      }
    }
    global_.push(std::move(h));
  }

  std::vector<Hypothesis> take_sorted() {
    std::vector<Hypothesis> all = global_.take_sorted();
    if (reserve_ > 0) {
      for (auto& heap : per_mode_) {
        for (auto& h : heap.take_sorted()) all.push_back(std::move(h));
      }
      std::sort(all.begin(), all.end(), ranks_before);
      // The same candidate may sit in two heaps.
      all.erase(std::unique(all.begin(), all.end(),
                            [](const Hypothesis& a, const Hypothesis& b) {
                              return a.log_weight == b.log_weight && a.parent == b.parent && same_state(a, b);
                            }),
                all.end());
      select_beam(all, width_, reserve_);
    }
    return all;
  }

 private:
  std::size_t width_;
  std::size_t reserve_;
  TopK global_;
  std::array<TopK, 4> per_mode_;
};

/// Sorts by state and keeps, per distinct state, the highest weight; equal
/// weights go to the better-ranked parent (lower index).
void dedup_by_state(std::vector<Hypothesis>& hs) {
  std::sort(hs.begin(), hs.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (auto c = compare_state(a, b); c != 0) return c < 0;
    if (a.log_weight != b.log_weight) return a.log_weight > b.log_weight;
    return a.parent < b.parent;
  });
  hs.erase(std::unique(hs.begin(), hs.end(), same_state), hs.end());
}

Hypothesis with_parent(ScoredCandidate&& c, std::int32_t parent) {
  c.hypothesis.parent = parent;
  return std::move(c.hypothesis);
}

bool vec_less(const Vec3& a, const Vec3& b) {
  return std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
}

/// Index window on one ray segment outside of which a Gaussian score with
/// peak log-weight `peak` must stay below `tau`. Returns false when empty.
bool gaussian_window(const RayPositions::Segment& seg, double step, const Vec3& mean, const IsoGaussian& gauss,
                     double base, double tau, std::size_t& lo, std::size_t& hi) {
  lo = 0;
  hi = seg.count;
  if (!(tau > kNegInf) || base + kLogDensityFloor >= tau) return true;
  const double budget = base + gauss.log_norm - tau;  // allowed d^2 / two_var
  if (budget < 0) return false;
  const double max_d2 = budget * gauss.two_var * (1.0 + 1e-9) + 1e-9;
  const Vec3 a = seg.ground - mean;
  const double along = a.dot(seg.up);
  const double perp2 = std::max(0.0, a.squaredNorm() - along * along);
  if (perp2 > max_d2 + 1e-6) return false;
  const double half = std::sqrt(std::max(0.0, max_d2 - perp2 + 1e-6)) / step + 1.0;
  const double centre = -along / step;
  const double first = std::ceil(centre - half);
  const double last = std::floor(centre + half);
  if (last < 0 || first >= static_cast<double>(seg.count)) return false;
  lo = first <= 0 ? 0 : static_cast<std::size_t>(first);
  hi = std::min(seg.count, static_cast<std::size_t>(last) + 1);
  return lo < hi;
}

}  // namespace

Beam init_beam(const FrameObservations& obs, const ModelParams& params) {
  const RayPositions rays = gen_ray_positions(obs, params);
  std::vector<Hypothesis> seeds;
  seeds.reserve(rays.size() + obs.players.size() + 1);
  for (const Vec3& r : rays.points) {
    seeds.push_back({obs.frame, r, JumpLatent{Vec3::Zero(), params.sigma_g, true}, 0.0, -1});
  }
  for (std::size_t i = 0; i < obs.players.size(); ++i) {
    const Vec3 pos(obs.players[i].x(), obs.players[i].y(), params.physics.ball_radius);
    seeds.push_back({obs.frame, pos, PossessionLatent{static_cast<int>(i)}, 0.0, -1});
  }
  if (obs.detections.empty() && obs.players.empty()) {
    seeds.push_back({obs.frame, Vec3(0.0, 0.0, params.physics.ball_radius), OutLatent{}, 0.0, -1});
  }
  if (seeds.empty()) {
    throw Error(ErrorCode::EmptyFrame, "frame " + std::to_string(obs.frame) + " yields no seed hypotheses");
  }
  dedup_by_state(seeds);
  std::sort(seeds.begin(), seeds.end(), ranks_before);
  select_beam(seeds, params.beam_width, params.mode_reserve);
  return {obs.frame, std::move(seeds)};
}

Beam step(const Beam& prev, const FrameObservations& obs, const ModelParams& params, StepStats* stats) {
  if (obs.frame != prev.frame + 1) {
    throw Error(ErrorCode::RangeMismatch, "expected frame " + std::to_string(prev.frame + 1) + ", got " +
                                              std::to_string(obs.frame));
  }
  const RayPositions rays = gen_ray_positions(obs, params);
  const auto& parents = prev.hypotheses;
  const auto& tm = params.transition;
  StepStats local;

  // Families whose descendants are few per parent: build them outright.
  std::vector<Hypothesis> small;
  std::vector<JumpPrediction> predictions(parents.size());
  std::vector<std::int32_t> jump_parents;
  std::vector<std::int32_t> wait_parents;
  const double logp_jj = tm(Mode::J, Mode::J);
  const double miss = unexplained_logp(obs, params, false);
  const double hit = unexplained_logp(obs, params, true);
  // Distant possession candidates cost the same from every parent of a mode,
  // so only the best parent of each mode can contribute the winning one.
  std::array<std::int32_t, 4> first_of_mode;
  first_of_mode.fill(-1);
  for (std::size_t i = 0; i < parents.size(); ++i) {
    auto& f = first_of_mode[index(parents[i].mode())];
    if (f < 0) f = static_cast<std::int32_t>(i);
  }
  for (std::size_t i = 0; i < parents.size(); ++i) {
    const Hypothesis& h = parents[i];
    const auto idx = static_cast<std::int32_t>(i);
    if (stats) local.candidates += count_descendants(h, obs, rays, params);
    auto take = [&](std::vector<ScoredCandidate>&& cs) {
      for (auto& c : cs) small.push_back(with_parent(std::move(c), idx));
    };
    auto inherit = [&](Mode to) {
      if (tm(h.mode(), to) > kNegInf) small.push_back(with_parent(gen_inherit(h, to, obs.frame, params, miss), idx));
    };
    switch (h.mode()) {
      case Mode::J:
        if (logp_jj > kNegInf) {
          predictions[i] = predict_jump(h, params);
          jump_parents.push_back(idx);
          if (params.logp_invisible > kNegInf) {
            const auto& pred = predictions[i];
            const double delta = (logp_jj + params.logp_invisible) + miss;
            small.push_back({obs.frame, pred.state.position, JumpLatent{pred.state.velocity, pred.variance, false},
                             h.log_weight + delta, idx});
          }
        }
        take(gen_possession(h, obs, params, first_of_mode[index(h.mode())] == idx));
        if (!params.pitch.contains(h.position)) inherit(Mode::O);
        break;
      case Mode::P:
        take(gen_possession(h, obs, params, first_of_mode[index(h.mode())] == idx));
        inherit(Mode::W);
        break;
      case Mode::W:
        inherit(Mode::W);
        wait_parents.push_back(idx);
        break;
      case Mode::O:
        inherit(Mode::O);
        take(gen_possession(h, obs, params, first_of_mode[index(h.mode())] == idx));
        break;
    }
  }
  local.scored += small.size();
  dedup_by_state(small);

  BeamSelector top(params.beam_width, params.mode_reserve);
  for (auto& h : small) top.push(std::move(h));

  // Visible J from J: children at ray point j share a state exactly when the
  // parents extrapolate to the same velocity, so group parents by velocity
  // and keep the best score per (group, j).
  if (!rays.empty() && !jump_parents.empty()) {
    std::vector<std::int32_t> order = jump_parents;
    std::stable_sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
      return vec_less(predictions[a].state.velocity, predictions[b].state.velocity);
    });
    struct Group {
      std::size_t begin, end;
    };
    std::vector<Group> groups;
    for (std::size_t b = 0; b < order.size();) {
      std::size_t e = b + 1;
      while (e < order.size() && predictions[order[e]].state.velocity == predictions[order[b]].state.velocity) ++e;
      groups.push_back({b, e});
      b = e;
    }
    // Strongest groups first so the selection threshold rises early.
    std::sort(groups.begin(), groups.end(),
              [&](const Group& a, const Group& b) { return order[a.begin] < order[b.begin]; });

    const std::size_t n = rays.size();
    std::vector<double> best(n, kNegInf);
    std::vector<std::int32_t> best_parent(n, -1);
    std::vector<std::uint32_t> touched;
    touched.reserve(n);
    for (const Group& g : groups) {
      for (std::size_t k = g.begin; k < g.end; ++k) {
        const std::int32_t pi = order[k];
        const Hypothesis& h = parents[pi];
        const JumpPrediction& pred = predictions[pi];
        const IsoGaussian gauss(pred.variance);
        const Vec3& mean = pred.state.position;
        const double tau = top.threshold(Mode::J);
        for (const auto& seg : rays.segments) {
          std::size_t lo, hi;
          if (!gaussian_window(seg, rays.step, mean, gauss, h.log_weight + logp_jj + hit, tau, lo, hi)) continue;
          for (std::size_t j = seg.begin + lo; j < seg.begin + hi; ++j) {
            const double score =
                h.log_weight + ((logp_jj + gauss.log_density(squared_distance(rays.points[j], mean))) + hit);
            ++local.scored;
            if (score < tau) continue;
            if (best_parent[j] < 0) {
              touched.push_back(static_cast<std::uint32_t>(j));
              best[j] = score;
              best_parent[j] = pi;
            } else if (score > best[j]) {
              best[j] = score;
              best_parent[j] = pi;
            }
          }
        }
      }
      const Vec3& velocity = predictions[order[g.begin]].state.velocity;
      for (std::uint32_t j : touched) {
        top.push({obs.frame, rays.points[j], JumpLatent{velocity, 0.0, true}, best[j], best_parent[j]});
        best[j] = kNegInf;
        best_parent[j] = -1;
      }
      touched.clear();
    }
  }

  // W -> J: children depend only on (kick_frame, kicker); the best-ranked
  // parent of each group dominates the rest.
  const double logp_wj = tm(Mode::W, Mode::J);
  if (!rays.empty() && !wait_parents.empty() && logp_wj > kNegInf) {
    std::map<std::tuple<FrameIndex, double, double>, std::int32_t> seen;
    for (std::int32_t pi : wait_parents) {
      const auto& wait = std::get<WaitLatent>(parents[pi].latent);
      auto [it, fresh] = seen.try_emplace({wait.kick_frame, wait.kicker_position.x(), wait.kicker_position.y()}, pi);
      if (!fresh) continue;
      const double bound = parents[pi].log_weight + ((logp_wj + wait_log_prior(wait, obs.frame, params)) + hit);
      if (bound < top.threshold(Mode::J)) continue;
      for (const Vec3& r : rays.points) {
        if (bound < top.threshold(Mode::J)) break;
        const auto prior = launch_log_prior(wait, r, obs.frame, params);
        if (!prior) continue;
        ++local.scored;
        const double score = parents[pi].log_weight + ((logp_wj + *prior) + hit);
        if (score < top.threshold(Mode::J)) continue;
        top.push({obs.frame, r, JumpLatent{velocity_after_wait(wait, r, obs.frame, params), params.sigma_g, true},
                  score, pi});
      }
    }
  }

  Beam next{obs.frame, top.take_sorted()};
  // Distinct families never share a state except through exact floating
  // coincidences; drop any such repeat, keeping the better-ranked entry.
  if (next.hypotheses.size() > 1) {
    std::vector<std::size_t> idx(next.hypotheses.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (auto c = compare_state(next.hypotheses[a], next.hypotheses[b]); c != 0) return c < 0;
      return a < b;
    });
    std::vector<bool> drop(idx.size(), false);
    bool any = false;
    for (std::size_t k = 1; k < idx.size(); ++k) {
      if (same_state(next.hypotheses[idx[k]], next.hypotheses[idx[k - 1]])) {
        drop[idx[k]] = true;
        any = true;
      }
    }
    if (any) {
      std::size_t w = 0;
      for (std::size_t k = 0; k < next.hypotheses.size(); ++k) {
        if (!drop[k]) next.hypotheses[w++] = std::move(next.hypotheses[k]);
      }
      next.hypotheses.resize(w);
    }
  }
  if (next.hypotheses.empty()) {
    throw Error(ErrorCode::BeamExtinct, "no finite-weight descendant at frame " + std::to_string(obs.frame));
  }
  local.retained = next.hypotheses.size();
  if (stats) *stats = local;
  return next;
}

Beam step_exhaustive(const Beam& prev, const FrameObservations& obs, const ModelParams& params) {
  if (obs.frame != prev.frame + 1) {
    throw Error(ErrorCode::RangeMismatch, "non-consecutive frame");
  }
  const RayPositions rays = gen_ray_positions(obs, params);
  std::vector<Hypothesis> all;
  for (std::size_t i = 0; i < prev.hypotheses.size(); ++i) {
    for (auto& c : generate_all(prev.hypotheses[i], obs, rays, params)) {
      all.push_back(with_parent(std::move(c), static_cast<std::int32_t>(i)));
    }
  }
  dedup_by_state(all);
  std::sort(all.begin(), all.end(), ranks_before);
  select_beam(all, params.beam_width, params.mode_reserve);
  if (all.empty()) throw Error(ErrorCode::BeamExtinct, "no finite-weight descendant");
  return {obs.frame, std::move(all)};
}

namespace {

TrajectoryRecord record_of(const Hypothesis& h, bool finalized) {
  return {h.frame, h.position, h.mode(), h.log_weight, finalized};
}

/// Best chain back to frame `stop` (inclusive), oldest first.
std::vector<TrajectoryRecord> chain_until(const std::deque<Beam>& history, FrameIndex stop) {
  std::vector<TrajectoryRecord> out;
  if (history.empty() || history.back().hypotheses.empty()) return out;
  std::size_t layer = history.size() - 1;
  const Hypothesis* h = &history[layer].hypotheses.front();
  while (true) {
    if (h->frame < stop) break;
    out.push_back(record_of(*h, false));
    if (h->parent < 0 || layer == 0) break;
    --layer;
    h = &history[layer].hypotheses[static_cast<std::size_t>(h->parent)];
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<TrajectoryRecord> trace_best_chain(const std::deque<Beam>& history) {
  return chain_until(history, std::numeric_limits<FrameIndex>::min());
}

Extraction extract(const std::deque<Beam>& history, std::size_t lag) {
  Extraction out;
  if (history.empty()) return out;
  const FrameIndex t = history.back().frame;
  for (auto& r : trace_best_chain(history)) {
    r.finalized = static_cast<FrameIndex>(lag) <= t - r.frame;
    (r.finalized ? out.finalized : out.soft).push_back(r);
  }
  return out;
}

FixedLagTracker::FixedLagTracker(ModelParams params, std::size_t lag, bool keep_committed)
    : params_(std::move(params)), lag_(lag), keep_committed_(keep_committed) {
  validate(params_);
}

std::vector<TrajectoryRecord> FixedLagTracker::push(const FrameObservations& obs) {
  std::vector<TrajectoryRecord> out;
  if (history_.empty()) {
    history_.push_back(init_beam(obs, params_));
    next_commit_ = obs.frame;
  } else {
    try {
      history_.push_back(step(history_.back(), obs, params_, &last_stats_));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BeamExtinct) throw;
      // Commit what the old chain still holds, then start over from this frame.
      for (auto& r : soft()) {
        r.finalized = true;
        if (keep_committed_) committed_.push_back(r);
        out.push_back(r);
      }
      ++discontinuities_;
      log_message(LogLevel::Warn, "beam extinct at frame " + std::to_string(obs.frame) + ", reseeding");
      history_.clear();
      history_.push_back(init_beam(obs, params_));
      next_commit_ = obs.frame;
    }
  }
  commit_ready(out);
  trim();
  return out;
}

void FixedLagTracker::commit_ready(std::vector<TrajectoryRecord>& out) {
  if (lag_ == kUnbounded) return;
  const FrameIndex t = history_.back().frame;
  while (next_commit_ + static_cast<FrameIndex>(lag_) <= t) {
    const auto chain = chain_until(history_, next_commit_);
    TrajectoryRecord r = chain.front();
    r.finalized = true;
    if (keep_committed_) committed_.push_back(r);
    out.push_back(r);
    ++next_commit_;
  }
}

void FixedLagTracker::trim() {
  if (lag_ == kUnbounded) return;
  while (history_.size() > 1 && history_.front().frame < next_commit_) history_.pop_front();
}

std::vector<TrajectoryRecord> FixedLagTracker::soft() const { return chain_until(history_, next_commit_); }

Extraction FixedLagTracker::extract() const { return {committed_, soft()}; }

std::vector<TrajectoryRecord> run_offline(std::span<const FrameObservations> frames, const ModelParams& params) {
  FixedLagTracker tracker(params, FixedLagTracker::kUnbounded, false);
  for (const auto& f : frames) tracker.push(f);
  auto out = tracker.finish();
  for (auto& r : out) r.finalized = true;
  return out;
}

}  // namespace monoball
