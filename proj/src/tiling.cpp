#include "urbanseg/tiling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <json.hpp>

#include "urbanseg/errors.hpp"
#include "urbanseg/rng.hpp"

namespace urbanseg {

using nlohmann::json;

std::size_t BlockGrid::point_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.indices.size();
  return n;
}

BlockGrid build_blocks(const PointCloud& cloud, double target_area) {
  if (!(target_area > 0.0) || !std::isfinite(target_area)) {
    fail(ErrorKind::Argument, "target block area must be positive, got " + std::to_string(target_area));
  }
  if (cloud.empty()) fail(ErrorKind::Argument, "cannot tile an empty cloud");

  BlockGrid grid;
  grid.cell_side = std::sqrt(target_area);
  const Bounds2 bb = xy_bounds(cloud);
  grid.origin_x = bb.min_x;
  grid.origin_y = bb.min_y;

  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> cells;  // (row, col)
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto col = static_cast<std::int64_t>(std::floor((cloud.x[i] - grid.origin_x) / grid.cell_side));
    const auto row = static_cast<std::int64_t>(std::floor((cloud.y[i] - grid.origin_y) / grid.cell_side));
    cells[{row, col}].push_back(i);
  }
  grid.blocks.reserve(cells.size());
  for (auto& [key, idx] : cells) {
    const double x0 = grid.origin_x + static_cast<double>(key.second) * grid.cell_side;
    const double y0 = grid.origin_y + static_cast<double>(key.first) * grid.cell_side;
    grid.blocks.push_back(Block{static_cast<std::uint32_t>(grid.blocks.size()),
                                Rect{x0, y0, x0 + grid.cell_side, y0 + grid.cell_side}, std::move(idx)});
  }
  return grid;
}

const char* to_string(Split s) noexcept {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  fail(ErrorKind::Parse, "unknown split '" + name + "'");
}

namespace {

void check_targets(const SplitTargets& t) {
  double sum = 0.0;
  for (double f : t.fractions) {
    if (!(f > 0.0)) fail(ErrorKind::Argument, "split targets must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(ErrorKind::Argument, "split targets must sum to 1");
}

struct Evaluator {
  const std::vector<std::size_t>& sizes;
  const SplitTargets& targets;
  const std::optional<ClassBalance>& balance;
  double total;

  double deviation(const std::array<std::size_t, kNumSplits>& counts) const {
    double dev = 0.0;
    for (int s = 0; s < kNumSplits; ++s) {
      dev = std::max(dev, std::abs(static_cast<double>(counts[s]) / total - targets.fractions[s]));
    }
    return dev;
  }

  double imbalance(const std::vector<Split>& assign) const {
    if (!balance || balance->weight == 0.0) return 0.0;
    std::array<std::array<double, 6>, kNumSplits> hist{};
    std::array<double, 6> global{};
    for (std::size_t b = 0; b < assign.size(); ++b) {
      for (int c = 0; c < 6; ++c) {
        const double v = static_cast<double>(balance->block_histograms[b][c]);
        hist[static_cast<int>(assign[b])][c] += v;
        global[c] += v;
      }
    }
    const double gsum = std::accumulate(global.begin(), global.end(), 0.0);
    if (gsum == 0.0) return 0.0;
    double total_l1 = 0.0;
    int used = 0;
    for (const auto& h : hist) {
      const double s = std::accumulate(h.begin(), h.end(), 0.0);
      if (s == 0.0) continue;
      double l1 = 0.0;
      for (int c = 0; c < 6; ++c) l1 += std::abs(h[c] / s - global[c] / gsum);
      total_l1 += l1;
      ++used;
    }
    return used ? total_l1 / used : 0.0;
  }

  /// Sum of absolute deviations; breaks ties between assignments with the
  /// same maximum deviation so the search can leave plateaus.
  double total_deviation(const std::array<std::size_t, kNumSplits>& counts) const {
    double dev = 0.0;
    for (int s = 0; s < kNumSplits; ++s) {
      dev += std::abs(static_cast<double>(counts[s]) / total - targets.fractions[s]);
    }
    return dev;
  }

  double objective(const std::vector<Split>& assign, const std::array<std::size_t, kNumSplits>& counts) const {
    return deviation(counts) + (balance ? balance->weight * imbalance(assign) : 0.0);
  }
};

}  // namespace

double split_deviation(const std::vector<std::size_t>& block_sizes, const std::vector<Split>& assignment,
                       const SplitTargets& targets) {
  std::array<std::size_t, kNumSplits> counts{};
  double total = 0.0;
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    counts[static_cast<int>(assignment[b])] += block_sizes[b];
    total += static_cast<double>(block_sizes[b]);
  }
  double dev = 0.0;
  for (int s = 0; s < kNumSplits; ++s) {
    dev = std::max(dev, std::abs(static_cast<double>(counts[s]) / total - targets.fractions[s]));
  }
  return dev;
}

SplitAssignment assign_splits(const std::vector<std::size_t>& sizes, const SplitTargets& targets,
                              std::uint64_t seed, const std::optional<ClassBalance>& balance) {
  check_targets(targets);
  if (sizes.size() < static_cast<std::size_t>(kNumSplits)) {
    fail(ErrorKind::Infeasible, std::to_string(sizes.size()) + " blocks cannot fill " +
                                    std::to_string(kNumSplits) + " splits");
  }
  if (balance && balance->block_histograms.size() != sizes.size()) {
    fail(ErrorKind::Alignment, "class-balance histograms do not match the block count");
  }
  const double total = static_cast<double>(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}));
  if (total == 0.0) fail(ErrorKind::Argument, "blocks hold no points");

  Rng rng(seed);
  std::vector<std::uint64_t> tie_key(sizes.size());
  for (auto& k : tie_key) k = rng.next();
  std::vector<std::size_t> order(sizes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (sizes[a] != sizes[b]) return sizes[a] > sizes[b];
    return tie_key[a] < tie_key[b];
  });

  std::vector<Split> assign(sizes.size(), Split::Train);
  std::array<std::size_t, kNumSplits> counts{};
  const double tie_eps = 1e-12 * total;
  for (std::size_t b : order) {
    std::array<double, kNumSplits> deficit{};
    double best = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < kNumSplits; ++s) {
      deficit[s] = targets.fractions[s] * total - static_cast<double>(counts[s]);
      best = std::max(best, deficit[s]);
    }
    std::vector<int> tied;
    for (int s = 0; s < kNumSplits; ++s) {
      if (deficit[s] >= best - tie_eps) tied.push_back(s);
    }
    const int chosen = tied.size() == 1 ? tied[0] : tied[rng.index(tied.size())];
    assign[b] = static_cast<Split>(chosen);
    counts[chosen] += sizes[b];
  }

  // Local search: single-block moves and two-block swaps between splits,
  // taking the best strict improvement until none remains.
  Evaluator eval{sizes, targets, balance, total};
  double current = eval.objective(assign, counts);
  double current_total = eval.total_deviation(counts);
  // Strictly better objective, or equal objective and strictly lower total.
  auto better = [](double obj, double tot, double ref_obj, double ref_tot) {
    if (obj < ref_obj - 1e-15) return true;
    return obj <= ref_obj + 1e-15 && tot < ref_tot - 1e-15;
  };
  for (;;) {
    double best_obj = current;
    double best_total = current_total;
    std::size_t move_a = sizes.size(), move_b = sizes.size();
    int move_to = 0;
    for (std::size_t b : order) {
      const int from = static_cast<int>(assign[b]);
      for (int to = 0; to < kNumSplits; ++to) {
        if (to == from) continue;
        auto trial_counts = counts;
        trial_counts[from] -= sizes[b];
        trial_counts[to] += sizes[b];
        assign[b] = static_cast<Split>(to);
        const double obj = eval.objective(assign, trial_counts);
        assign[b] = static_cast<Split>(from);
        const double tot = eval.total_deviation(trial_counts);
        if (better(obj, tot, best_obj, best_total)) {
          best_obj = obj;
          best_total = tot;
          move_a = b;
          move_b = sizes.size();
          move_to = to;
        }
      }
    }
    for (std::size_t ia = 0; ia < order.size(); ++ia) {
      for (std::size_t ib = ia + 1; ib < order.size(); ++ib) {
        const std::size_t a = order[ia], b = order[ib];
        const int sa = static_cast<int>(assign[a]), sb = static_cast<int>(assign[b]);
        if (sa == sb || sizes[a] == sizes[b]) continue;
        auto trial_counts = counts;
        trial_counts[sa] = trial_counts[sa] - sizes[a] + sizes[b];
        trial_counts[sb] = trial_counts[sb] - sizes[b] + sizes[a];
        std::swap(assign[a], assign[b]);
        const double obj = eval.objective(assign, trial_counts);
        std::swap(assign[a], assign[b]);
        const double tot = eval.total_deviation(trial_counts);
        if (better(obj, tot, best_obj, best_total)) {
          best_obj = obj;
          best_total = tot;
          move_a = a;
          move_b = b;
        }
      }
    }
    if (move_a == sizes.size()) break;
    if (move_b == sizes.size()) {
      counts[static_cast<int>(assign[move_a])] -= sizes[move_a];
      counts[move_to] += sizes[move_a];
      assign[move_a] = static_cast<Split>(move_to);
    } else {
      const int sa = static_cast<int>(assign[move_a]), sb = static_cast<int>(assign[move_b]);
      counts[sa] = counts[sa] - sizes[move_a] + sizes[move_b];
      counts[sb] = counts[sb] - sizes[move_b] + sizes[move_a];
      std::swap(assign[move_a], assign[move_b]);
    }
    current = best_obj;
    current_total = best_total;
  }

  if (sizes.size() <= kExactSplitBlocks) {
    // Base-3 odometer over all assignments, counts updated incrementally.
    std::vector<Split> trial(sizes.size(), Split::Train);
    std::array<std::size_t, kNumSplits> trial_counts{};
    std::array<std::size_t, kNumSplits> used{};
    trial_counts[0] = static_cast<std::size_t>(total);
    used[0] = sizes.size();
    for (;;) {
      if (used[0] && used[1] && used[2]) {
        const double obj = eval.objective(trial, trial_counts);
        const double tot = eval.total_deviation(trial_counts);
        if (better(obj, tot, current, current_total)) {
          assign = trial;
          counts = trial_counts;
          current = obj;
          current_total = tot;
        }
      }
      std::size_t digit = 0;
      for (; digit < trial.size(); ++digit) {
        const int from = static_cast<int>(trial[digit]);
        const int to = (from + 1) % kNumSplits;
        trial_counts[from] -= sizes[digit];
        trial_counts[to] += sizes[digit];
        used[from]--;
        used[to]++;
        trial[digit] = static_cast<Split>(to);
        if (to != 0) break;
      }
      if (digit == trial.size()) break;
    }
  }

  SplitAssignment out;
  out.block_split = std::move(assign);
  out.point_counts = counts;
  for (auto s : out.block_split) out.block_counts[static_cast<int>(s)]++;
  for (int s = 0; s < kNumSplits; ++s) out.achieved[s] = static_cast<double>(counts[s]) / total;
  out.max_deviation = eval.deviation(counts);
  return out;
}

SplitAssignment assign_splits(const BlockGrid& grid, const SplitTargets& targets, std::uint64_t seed,
                              const std::optional<ClassBalance>& balance) {
  std::vector<std::size_t> sizes;
  sizes.reserve(grid.blocks.size());
  for (const auto& b : grid.blocks) sizes.push_back(b.indices.size());
  return assign_splits(sizes, targets, seed, balance);
}

void save_block_grid(const BlockGrid& grid, const std::filesystem::path& path) {
  json j;
  j["cell_side"] = grid.cell_side;
  j["origin"] = {grid.origin_x, grid.origin_y};
  j["blocks"] = json::array();
  for (const auto& b : grid.blocks) {
    j["blocks"].push_back({{"id", b.id},
                           {"rect", {b.rect.min_x, b.rect.min_y, b.rect.max_x, b.rect.max_y}},
                           {"points", b.indices.size()},
                           {"indices", b.indices}});
  }
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(1) << "\n";
}

BlockGrid load_block_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  BlockGrid grid;
  try {
    json j = json::parse(in);
    grid.cell_side = j.at("cell_side").get<double>();
    grid.origin_x = j.at("origin").at(0).get<double>();
    grid.origin_y = j.at("origin").at(1).get<double>();
    for (const auto& jb : j.at("blocks")) {
      Block b;
      b.id = jb.at("id").get<std::uint32_t>();
      const auto& r = jb.at("rect");
      b.rect = Rect{r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(), r.at(3).get<double>()};
      b.indices = jb.at("indices").get<std::vector<std::size_t>>();
      grid.blocks.push_back(std::move(b));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  return grid;
}

void save_split_assignment(const BlockGrid& grid, const SplitAssignment& a, const SplitTargets& targets,
                           std::uint64_t seed, const std::filesystem::path& path) {
  json j;
  j["seed"] = seed;
  j["targets"] = targets.fractions;
  j["achieved"] = a.achieved;
  j["max_deviation"] = a.max_deviation;
  j["block_counts"] = a.block_counts;
  j["point_counts"] = a.point_counts;
  j["blocks"] = json::array();
  for (std::size_t b = 0; b < grid.blocks.size(); ++b) {
    j["blocks"].push_back({{"id", grid.blocks[b].id}, {"split", to_string(a.block_split[b])}});
  }
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(1) << "\n";
}

}  // namespace urbanseg
