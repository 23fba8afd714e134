#include "fabl/layout.hpp"

#include <string>

#include "fabl/error.hpp"

namespace fabl {

PartitionLayout::PartitionLayout(std::vector<std::vector<int>> dims) : dims_(std::move(dims)) {
    if (dims_.empty())
        throw Error(ErrorCode::invalid_argument, "layout needs at least one modality");
    const auto joints = dims_[0].size();
    if (joints == 0)
        throw Error(ErrorCode::invalid_argument, "layout needs at least one joint");

    offsets_.resize(dims_.size());
    modality_dims_.resize(dims_.size());
    joint_dims_.assign(joints, 0);

    int offset = 0;
    for (size_t q = 0; q < dims_.size(); ++q) {
        if (dims_[q].size() != joints)
            throw Error(ErrorCode::invalid_argument,
                        "modality " + std::to_string(q) + " covers " +
                            std::to_string(dims_[q].size()) + " joints, expected " +
                            std::to_string(joints));
        offsets_[q].resize(joints);
        int modality_dim = 0;
        for (size_t r = 0; r < joints; ++r) {
            const int block = dims_[q][r];
            if (block <= 0)
                throw Error(ErrorCode::invalid_argument,
                            "block (" + std::to_string(q) + ", " + std::to_string(r) +
                                ") has non-positive dimension");
            offsets_[q][r] = offset;
            offset += block;
            modality_dim += block;
            joint_dims_[r] += block;
        }
        modality_dims_[q] = modality_dim;
    }
    total_dim_ = offset;
}

PartitionLayout PartitionLayout::uniform(int modalities, int joints, int block_dim) {
    if (modalities <= 0 || joints <= 0 || block_dim <= 0)
        throw Error(ErrorCode::invalid_argument, "uniform layout dimensions must be positive");
    return PartitionLayout(
        std::vector<std::vector<int>>(modalities, std::vector<int>(joints, block_dim)));
}

} // namespace fabl
