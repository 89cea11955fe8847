#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "offdet/features.h"
#include "offdet/progress.h"

namespace offdet {

struct GbdtParams {
  int n_rounds = 100;
  int max_depth = 4;
  double learning_rate = 0.1;
  double l2_leaf_reg = 1.0;
  double min_child_weight = 1.0;
  // Initial margin; defaults to the log-odds of the training positive rate.
  std::optional<double> base_margin;

  void Validate() const;

  bool operator==(const GbdtParams&) const = default;
};

// Row-major sparse matrix; absent entries are 0. Columns within each row are
// strictly increasing.
struct SparseMatrix {
  std::size_t n_cols = 0;
  std::vector<SparseVector> rows;

  std::size_t n_rows() const { return rows.size(); }
};

// Value of column `col` in a sorted sparse row (0 when absent).
double SparseAt(const SparseVector& row, std::uint32_t col);

struct TreeNode {
  std::int32_t feature = -1;  // -1 for leaves
  double threshold = 0.0;     // value < threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  double weight = 0.0;        // leaf weight (unscaled by the learning rate)

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // root at index 0

  double LeafWeight(const SparseVector& row) const;
  int Depth() const;
  bool operator==(const RegressionTree&) const = default;
};

// Feature columns pre-sorted by value for exact greedy split search. Only
// nonzero entries are stored; zeros form an implicit block at value 0.
class ColumnIndex {
 public:
  explicit ColumnIndex(const SparseMatrix& x);

  struct Entry {
    double value;
    std::uint32_t row;
  };
  std::span<const Entry> Column(std::size_t j) const {
    return {entries_.data() + offsets_[j], entries_.data() + offsets_[j + 1]};
  }
  std::size_t n_cols() const { return offsets_.size() - 1; }
  const SparseMatrix& matrix() const { return *x_; }

 private:
  const SparseMatrix* x_;
  std::vector<std::size_t> offsets_;
  std::vector<Entry> entries_;
};

// Grows one tree on first/second-order statistics: exact greedy splits by
// gain = 1/2 [GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)], leaves -G/(H+l).
RegressionTree FitTree(const ColumnIndex& index, std::span<const double> grad,
                       std::span<const double> hess, const GbdtParams& params);

struct GbdtModel {
  std::size_t n_features = 0;
  double base_score = 0.0;  // margin before any tree
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;

  double Margin(const SparseVector& row) const;
  double PredictProba(const SparseVector& row) const;

  bool operator==(const GbdtModel&) const = default;
};

// Logistic-loss boosting. Requires >= 2 rows and both classes. `progress`
// receives the training log-loss after each round.
GbdtModel TrainGbdt(const SparseMatrix& x, std::span<const int> labels, const GbdtParams& params,
                    const ProgressFn& progress = {});

double LogLoss(std::span<const double> margins, std::span<const int> labels);

std::vector<std::uint8_t> SaveGbdt(const GbdtModel& m);
GbdtModel LoadGbdt(std::span<const std::uint8_t> bytes);

}  // namespace offdet
