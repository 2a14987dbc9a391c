#include "probseq/sequencer.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <stdexcept>

#include "probseq/rng.hpp"

namespace probseq {

EdgeThreshold::EdgeThreshold(double value) : value_(value) {
  if (!(value >= 0.0 && value < 1.0)) throw std::invalid_argument("edge threshold must lie in [0, 1)");
}

std::size_t OrderedBatches::event_count() const {
  std::size_t n = 0;
  for (const auto& b : batches) n += b.size();
  return n;
}

void OrderedBatches::append(OrderedBatches&& other) {
  for (auto& b : other.batches) batches.push_back(std::move(b));
  other.batches.clear();
}

ProbMatrix build_prob_matrix(std::span<const Event> events, const DifferenceTable& diffs) {
  ProbMatrix p(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    for (std::size_t j = 0; j < events.size(); ++j) {
      if (i == j) continue;
      p(i, j) = pairwise_query(events[i], events[j], diffs.at(events[i].client, events[j].client)).value();
    }
  }
  return p;
}

ProbMatrix build_prob_matrix_direct(std::span<const Event> events, std::span<const CorrectionDistribution> dists) {
  std::vector<std::vector<std::int64_t>> samples;
  samples.reserve(dists.size());
  for (std::size_t k = 0; k < dists.size(); ++k) {
    if (dists[k].client().value != k) throw std::invalid_argument("build_prob_matrix_direct: client ids not dense");
    samples.push_back(dists[k].samples());
  }
  ProbMatrix p(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    for (std::size_t j = 0; j < events.size(); ++j) {
      if (i == j) continue;
      const auto ci = events[i].client.value;
      const auto cj = events[j].client.value;
      if (ci >= samples.size() || cj >= samples.size()) {
        throw std::out_of_range("build_prob_matrix_direct: no distribution for event client");
      }
      p(i, j) = pairwise_probability(events[i].ts, events[j].ts, samples[ci], samples[cj]).value();
    }
  }
  return p;
}

std::vector<std::vector<std::size_t>> strongly_connected_components(const ProbMatrix& p, EdgeThreshold threshold) {
  const std::size_t n = p.size();
  constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();
  const double t = threshold.value();

  std::vector<std::size_t> index(n, kUnvisited), lowlink(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> components;
  std::size_t next_index = 0;

  // Iterative Tarjan: each frame is (vertex, next neighbour to try).
  std::vector<std::pair<std::size_t, std::size_t>> frames;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    frames.emplace_back(root, 0);
    index[root] = lowlink[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;

    while (!frames.empty()) {
      auto& [v, w] = frames.back();
      bool descended = false;
      for (; w < n; ++w) {
        if (w == v || !(p(v, w) > t)) continue;
        if (index[w] == kUnvisited) {
          index[w] = lowlink[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          const std::size_t child = w++;
          frames.emplace_back(child, 0);
          descended = true;
          break;
        }
        if (on_stack[w]) lowlink[v] = std::min(lowlink[v], index[w]);
      }
      if (descended) continue;

      const std::size_t done = v;
      if (lowlink[done] == index[done]) {
        std::vector<std::size_t> comp;
        std::size_t x;
        do {
          x = stack.back();
          stack.pop_back();
          on_stack[x] = false;
          comp.push_back(x);
        } while (x != done);
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
      }
      frames.pop_back();
      if (!frames.empty()) {
        const std::size_t parent = frames.back().first;
        lowlink[parent] = std::min(lowlink[parent], lowlink[done]);
      }
    }
  }
  return components;
}

OrderedBatches order_from_matrix(std::span<const Event> events, const ProbMatrix& p, EdgeThreshold threshold) {
  if (p.size() != events.size()) throw std::invalid_argument("order_from_matrix: matrix size mismatch");
  OrderedBatches out;
  if (events.empty()) return out;

  auto components = strongly_connected_components(p, threshold);
  const std::size_t n = events.size();
  const std::size_t k = components.size();
  const double t = threshold.value();

  auto less = [&](std::size_t a, std::size_t b) { return timestamp_order(events[a], events[b]); };

  std::vector<std::size_t> comp_of(n);
  std::vector<std::size_t> rep(k);  // smallest member under timestamp_order
  for (std::size_t c = 0; c < k; ++c) {
    std::sort(components[c].begin(), components[c].end(), less);
    rep[c] = components[c].front();
    for (auto v : components[c]) comp_of[v] = c;
  }

  std::vector<std::vector<char>> adj(k, std::vector<char>(k, 0));
  std::vector<std::size_t> indegree(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || !(p(i, j) > t)) continue;
      const auto a = comp_of[i], b = comp_of[j];
      if (a != b && !adj[a][b]) {
        adj[a][b] = 1;
        ++indegree[b];
      }
    }
  }

  auto later = [&](std::size_t a, std::size_t b) { return less(rep[b], rep[a]); };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(later)> ready(later);
  for (std::size_t c = 0; c < k; ++c) {
    if (indegree[c] == 0) ready.push(c);
  }
  while (!ready.empty()) {
    const auto c = ready.top();
    ready.pop();
    std::vector<Event> batch;
    batch.reserve(components[c].size());
    for (auto v : components[c]) batch.push_back(events[v]);
    out.batches.push_back(std::move(batch));
    for (std::size_t d = 0; d < k; ++d) {
      if (adj[c][d] && --indegree[d] == 0) ready.push(d);
    }
  }
  return out;
}

OrderedBatches order_events(std::span<const Event> events, const DifferenceTable& diffs, EdgeThreshold threshold) {
  return order_from_matrix(events, build_prob_matrix(events, diffs), threshold);
}

bool gaussian_transitivity_check(std::span<const double> means, std::span<const double> sigmas,
                                 std::size_t sample_count, std::uint64_t seed) {
  if (means.size() != sigmas.size()) throw std::invalid_argument("gaussian_transitivity_check: size mismatch");
  if (sample_count == 0) throw std::invalid_argument("gaussian_transitivity_check: need samples");
  const std::size_t n = means.size();

  std::vector<std::vector<std::int64_t>> samples(n);
  std::vector<Event> events(n);
  for (std::size_t c = 0; c < n; ++c) {
    Rng rng = make_rng(seed, "gaussian-corrections", c);
    std::normal_distribution<double> dist(means[c], sigmas[c]);
    samples[c].reserve(sample_count);
    for (std::size_t s = 0; s < sample_count; ++s) samples[c].push_back(ticks::round_nearest(dist(rng)));
    events[c] = Event{ClientId{static_cast<std::uint32_t>(c)}, LocalTimestamp{0}, 0, std::nullopt};
  }

  ProbMatrix p(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) p(i, j) = pairwise_probability_merged(events[i].ts, events[j].ts, samples[i], samples[j]).value();
    }
  }
  const auto batches = order_from_matrix(events, p, EdgeThreshold{0.5});

  std::vector<std::size_t> by_mean(n);
  std::iota(by_mean.begin(), by_mean.end(), 0);
  std::stable_sort(by_mean.begin(), by_mean.end(), [&](auto a, auto b) { return means[a] < means[b]; });
  if (batches.batches.size() != n) return false;
  for (std::size_t r = 0; r < n; ++r) {
    if (batches.batches[r].size() != 1 || batches.batches[r][0].client.value != by_mean[r]) return false;
  }
  return true;
}

void write_batches_csv(std::ostream& out, const OrderedBatches& batches) {
  out << "batch_index,client_id,seq,local_ts_ns\n";
  for (std::size_t b = 0; b < batches.batches.size(); ++b) {
    for (const auto& e : batches.batches[b]) {
      out << b << ',' << e.client.value << ',' << e.seq << ',' << e.ts.ticks << '\n';
    }
  }
}

}  // namespace probseq
