#pragma once

#include <vector>

namespace fabl {

/// The (modality x joint) block structure of a feature vector.
///
/// A d-dimensional feature vector is tiled by m*s blocks, laid out
/// modality-major then joint-minor: all joints of modality 0, then all
/// joints of modality 1, and so on. Block (q, r) holds the features of
/// joint r within modality q and has dimension dims[q][r].
///
/// The layout is the single source of truth for every group-norm
/// computation: a modality group is the contiguous run of all joints of one
/// modality; a joint group gathers the same joint's block from every
/// modality.
class PartitionLayout {
  public:
    PartitionLayout() = default;

    /// dims[q][r] = dimension of joint r's block within modality q.
    /// Every modality must cover the same number of joints and every block
    /// must be non-empty.
    explicit PartitionLayout(std::vector<std::vector<int>> dims);

    /// All m*s blocks share one dimension.
    static PartitionLayout uniform(int modalities, int joints, int block_dim);

    int modalities() const { return static_cast<int>(dims_.size()); }
    int joints() const { return dims_.empty() ? 0 : static_cast<int>(dims_[0].size()); }
    int dim() const { return total_dim_; }

    int block_dim(int q, int r) const { return dims_[q][r]; }
    int block_offset(int q, int r) const { return offsets_[q][r]; }

    /// d_q and the start of modality q's contiguous run.
    int modality_dim(int q) const { return modality_dims_[q]; }
    int modality_offset(int q) const { return offsets_[q][0]; }

    /// d_k: total dimension of joint k across all modalities.
    int joint_dim(int k) const { return joint_dims_[k]; }

    const std::vector<std::vector<int>>& dims() const { return dims_; }

    bool operator==(const PartitionLayout& other) const { return dims_ == other.dims_; }
    bool operator!=(const PartitionLayout& other) const { return !(*this == other); }

  private:
    std::vector<std::vector<int>> dims_;
    std::vector<std::vector<int>> offsets_;
    std::vector<int> modality_dims_;
    std::vector<int> joint_dims_;
    int total_dim_ = 0;
};

} // namespace fabl
