#pragma once

#include "randfact/dense.hpp"

namespace randfact {

/// One-shot column-block view of a matrix that is only allowed to stream past
/// once. Single-pass algorithms consume it block by block; any access after
/// the pass completes raises StreamContractError. Telemetry counts entries
/// served so tests can assert that exactly one traversal happened.
///
/// The stream references the backing matrix; the caller keeps it alive.
class MatrixStream {
public:
    struct Block {
        idx col0 = 0;       // first column of the block
        DenseMatrix block;  // rows x width slice
    };

    explicit MatrixStream(const DenseMatrix& a, idx block_cols = 32);

    idx rows() const { return a_->rows; }
    idx cols() const { return a_->cols; }

    bool has_next() const { return next_col_ < a_->cols; }

    /// Next column block; throws once the single pass is exhausted.
    Block next_block();

    /// Entries handed out so far (rows * columns served).
    std::uint64_t entries_served() const { return entries_served_; }

    /// 1 once the whole matrix has streamed past, else 0.
    int passes_completed() const { return next_col_ >= a_->cols ? 1 : 0; }

private:
    const DenseMatrix* a_;
    idx block_cols_;
    idx next_col_ = 0;
    std::uint64_t entries_served_ = 0;
};

} // namespace randfact
