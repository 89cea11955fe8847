#include "offdet/gbdt.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "offdet/binary_io.h"
#include "offdet/error.h"

namespace offdet {
namespace {

constexpr double kMinGain = 1e-12;

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Split {
  double gain = 0.0;
  std::int32_t feature = -1;
  double threshold = 0.0;
};

// Per-node accumulators while scanning one column.
struct ScanState {
  double nz_grad = 0.0;
  double nz_hess = 0.0;
  std::size_t nz_count = 0;
  double left_grad = 0.0;
  double left_hess = 0.0;
  double last_value = 0.0;
  bool has_last = false;
  bool zero_done = false;
};

struct ActiveNode {
  std::int32_t id;
  int depth;
  double grad;
  double hess;
  std::size_t count;
  Split best;
};

}  // namespace

void GbdtParams::Validate() const {
  if (n_rounds < 1) throw UsageError("gbdt: n_rounds must be >= 1");
  if (max_depth < 1) throw UsageError("gbdt: max_depth must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw UsageError("gbdt: learning_rate must be in (0, 1]");
  if (!(l2_leaf_reg >= 0.0)) throw UsageError("gbdt: l2_leaf_reg must be >= 0");
  if (!(min_child_weight >= 0.0)) throw UsageError("gbdt: min_child_weight must be >= 0");
}

double SparseAt(const SparseVector& row, std::uint32_t col) {
  const auto it = std::lower_bound(row.begin(), row.end(), col,
                                   [](const auto& e, std::uint32_t c) { return e.first < c; });
  return it != row.end() && it->first == col ? it->second : 0.0;
}

double RegressionTree::LeafWeight(const SparseVector& row) const {
  std::int32_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    i = SparseAt(row, static_cast<std::uint32_t>(n.feature)) < n.threshold ? n.left : n.right;
  }
  return nodes[i].weight;
}

int RegressionTree::Depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int max_depth = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) continue;
    depth[nodes[i].left] = depth[nodes[i].right] = depth[i] + 1;
    max_depth = std::max(max_depth, depth[i] + 1);
  }
  return max_depth;
}

ColumnIndex::ColumnIndex(const SparseMatrix& x) : x_(&x) {
  std::vector<std::size_t> counts(x.n_cols, 0);
  for (const auto& row : x.rows) {
    for (const auto& [col, v] : row) {
      if (col >= x.n_cols) throw UsageError("feature index out of range");
      if (v != 0.0) ++counts[col];
    }
  }
  offsets_.assign(x.n_cols + 1, 0);
  for (std::size_t j = 0; j < x.n_cols; ++j) offsets_[j + 1] = offsets_[j] + counts[j];
  entries_.resize(offsets_.back());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t r = 0; r < x.rows.size(); ++r) {
    for (const auto& [col, v] : x.rows[r]) {
      if (v != 0.0) entries_[fill[col]++] = {v, static_cast<std::uint32_t>(r)};
    }
  }
  for (std::size_t j = 0; j < x.n_cols; ++j) {
    std::stable_sort(entries_.begin() + offsets_[j], entries_.begin() + offsets_[j + 1],
                     [](const Entry& a, const Entry& b) { return a.value < b.value; });
  }
}

RegressionTree FitTree(const ColumnIndex& index, std::span<const double> grad,
                       std::span<const double> hess, const GbdtParams& params) {
  const SparseMatrix& x = index.matrix();
  const std::size_t n = x.n_rows();
  const double lambda = params.l2_leaf_reg;
  const auto score = [lambda](double g, double h) { return g * g / (h + lambda); };

  RegressionTree tree;
  tree.nodes.emplace_back();

  // Slot of each row's node within the current level, -1 once settled.
  std::vector<std::int32_t> slot_of_row(n, 0);
  std::vector<ActiveNode> level(1);
  level[0] = {0, 0, 0.0, 0.0, n, {}};
  for (std::size_t i = 0; i < n; ++i) {
    level[0].grad += grad[i];
    level[0].hess += hess[i];
  }

  std::vector<ScanState> scan;
  std::vector<std::int32_t> touched;
  while (!level.empty()) {
    const bool can_split = level.front().depth < params.max_depth;
    if (can_split) {
      scan.assign(level.size(), {});
      for (std::size_t j = 0; j < index.n_cols(); ++j) {
        const auto column = index.Column(j);
        if (column.empty()) continue;
        touched.clear();
        for (const auto& e : column) {
          const std::int32_t s = slot_of_row[e.row];
          if (s < 0) continue;
          ScanState& st = scan[s];
          if (st.nz_count == 0) touched.push_back(s);
          st.nz_grad += grad[e.row];
          st.nz_hess += hess[e.row];
          ++st.nz_count;
        }

        const auto consider = [&](std::int32_t s, double value, double g, double h) {
          ScanState& st = scan[s];
          ActiveNode& node = level[s];
          if (st.has_last && value > st.last_value) {
            const double gl = st.left_grad, hl = st.left_hess;
            const double gr = node.grad - gl, hr = node.hess - hl;
            if (hl >= params.min_child_weight && hr >= params.min_child_weight) {
              const double gain =
                  0.5 * (score(gl, hl) + score(gr, hr) - score(node.grad, node.hess));
              if (gain > node.best.gain + kMinGain) {
                node.best = {gain, static_cast<std::int32_t>(j), 0.5 * (st.last_value + value)};
              }
            }
          }
          st.left_grad += g;
          st.left_hess += h;
          st.last_value = value;
          st.has_last = true;
        };
        const auto zero_block = [&](std::int32_t s) {
          ScanState& st = scan[s];
          st.zero_done = true;
          const ActiveNode& node = level[s];
          if (node.count > st.nz_count) {
            consider(s, 0.0, node.grad - st.nz_grad, node.hess - st.nz_hess);
          }
        };

        for (const auto& e : column) {
          const std::int32_t s = slot_of_row[e.row];
          if (s < 0) continue;
          if (e.value > 0.0 && !scan[s].zero_done) zero_block(s);
          consider(s, e.value, grad[e.row], hess[e.row]);
        }
        for (std::int32_t s : touched) {
          if (!scan[s].zero_done) zero_block(s);
          scan[s] = {};
        }
      }
    }

    // Settle this level: leaves get weights, split nodes get children.
    std::vector<ActiveNode> next;
    std::vector<std::int32_t> child_slot(level.size() * 2, -1);
    for (std::size_t s = 0; s < level.size(); ++s) {
      ActiveNode& node = level[s];
      if (!can_split || node.best.feature < 0) {
        tree.nodes[node.id].weight = -node.grad / (node.hess + lambda);
        continue;
      }
      const auto left = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      TreeNode& parent = tree.nodes[node.id];
      parent.feature = node.best.feature;
      parent.threshold = node.best.threshold;
      parent.left = left;
      parent.right = left + 1;
      child_slot[2 * s] = static_cast<std::int32_t>(next.size());
      next.push_back({left, node.depth + 1, 0.0, 0.0, 0, {}});
      child_slot[2 * s + 1] = static_cast<std::int32_t>(next.size());
      next.push_back({left + 1, node.depth + 1, 0.0, 0.0, 0, {}});
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::int32_t s = slot_of_row[i];
      if (s < 0) continue;
      const ActiveNode& node = level[s];
      if (child_slot[2 * s] < 0) {
        slot_of_row[i] = -1;
        continue;
      }
      const bool go_left =
          SparseAt(x.rows[i], static_cast<std::uint32_t>(node.best.feature)) < node.best.threshold;
      const std::int32_t c = child_slot[2 * s + (go_left ? 0 : 1)];
      slot_of_row[i] = c;
      next[c].grad += grad[i];
      next[c].hess += hess[i];
      ++next[c].count;
    }
    level = std::move(next);
  }
  return tree;
}

double GbdtModel::Margin(const SparseVector& row) const {
  if (!row.empty() && row.back().first >= n_features) {
    throw UsageError("predict_gbdt: feature index " + std::to_string(row.back().first) +
                     " out of range (model has " + std::to_string(n_features) + " features)");
  }
  double m = base_score;
  for (const auto& t : trees) m += learning_rate * t.LeafWeight(row);
  return m;
}

double GbdtModel::PredictProba(const SparseVector& row) const { return Sigmoid(Margin(row)); }

double LogLoss(std::span<const double> margins, std::span<const int> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    // log(1 + e^m) - y m, evaluated stably.
    const double m = margins[i];
    const double softplus = m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
    total += softplus - labels[i] * m;
  }
  return total / static_cast<double>(margins.size());
}

GbdtModel TrainGbdt(const SparseMatrix& x, std::span<const int> labels, const GbdtParams& params,
                    const ProgressFn& progress) {
  params.Validate();
  if (x.n_rows() == 0 || x.n_cols == 0) throw UsageError("train_gbdt: empty feature matrix");
  if (x.n_rows() != labels.size()) throw UsageError("train_gbdt: label count does not match rows");
  if (x.n_rows() < 2) throw UsageError("train_gbdt: need at least 2 samples");
  std::size_t positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw UsageError("train_gbdt: labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  if (positives == 0 || positives == labels.size()) {
    throw DataError("train_gbdt: both classes must be present");
  }

  GbdtModel model;
  model.n_features = x.n_cols;
  model.learning_rate = params.learning_rate;
  const double rate = static_cast<double>(positives) / static_cast<double>(labels.size());
  model.base_score = params.base_margin.value_or(std::log(rate / (1.0 - rate)));

  const ColumnIndex index(x);
  const std::size_t n = x.n_rows();
  std::vector<double> margin(n, model.base_score), grad(n), hess(n);
  for (int round = 0; round < params.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = Sigmoid(margin[i]);
      grad[i] = p - labels[i];
      hess[i] = std::max(p * (1.0 - p), 1e-16);
    }
    RegressionTree tree = FitTree(index, grad, hess, params);
    for (std::size_t i = 0; i < n; ++i) margin[i] += params.learning_rate * tree.LeafWeight(x.rows[i]);
    model.trees.push_back(std::move(tree));
    if (progress) progress({"gbdt", "round", round + 1, LogLoss(margin, labels)});
  }
  return model;
}

std::vector<std::uint8_t> SaveGbdt(const GbdtModel& m) {
  ByteWriter w;
  w.Header(ModelKind::kGbdt);
  w.U64(m.n_features);
  w.F64(m.base_score);
  w.F64(m.learning_rate);
  w.U64(m.trees.size());
  for (const auto& t : m.trees) {
    w.U64(t.nodes.size());
    for (const auto& node : t.nodes) {
      w.I32(node.feature);
      w.F64(node.threshold);
      w.I32(node.left);
      w.I32(node.right);
      w.F64(node.weight);
    }
  }
  return w.Take();
}

GbdtModel LoadGbdt(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.ExpectHeader(ModelKind::kGbdt);
  GbdtModel m;
  m.n_features = r.U64();
  m.base_score = r.F64();
  m.learning_rate = r.F64();
  const std::uint64_t n_trees = r.U64();
  if (n_trees > r.remaining()) throw DataError("model payload: truncated");
  m.trees.resize(n_trees);
  for (auto& t : m.trees) {
    const std::uint64_t n_nodes = r.U64();
    if (n_nodes == 0 || n_nodes > r.remaining()) throw DataError("model payload: bad tree size");
    t.nodes.resize(n_nodes);
    for (auto& node : t.nodes) {
      node.feature = r.I32();
      node.threshold = r.F64();
      node.left = r.I32();
      node.right = r.I32();
      node.weight = r.F64();
    }
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const TreeNode& node = t.nodes[i];
      if (node.is_leaf()) continue;
      const auto valid = [&](std::int32_t c) {
        return c > static_cast<std::int32_t>(i) && c < static_cast<std::int32_t>(n_nodes);
      };
      if (!valid(node.left) || !valid(node.right) ||
          static_cast<std::uint64_t>(node.feature) >= m.n_features) {
        throw DataError("gbdt payload: malformed tree");
      }
    }
  }
  r.ExpectEnd();
  return m;
}

}  // namespace offdet
