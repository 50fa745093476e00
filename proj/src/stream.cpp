#include "randfact/stream.hpp"

#include <algorithm>

namespace randfact {

MatrixStream::MatrixStream(const DenseMatrix& a, idx block_cols)
    : a_(&a), block_cols_(block_cols) {
    if (block_cols_ < 1) throw ParameterError("MatrixStream: block width must be positive");
}

MatrixStream::Block MatrixStream::next_block() {
    if (next_col_ >= a_->cols) {
        throw StreamContractError("MatrixStream: single pass already consumed");
    }
    const idx c0 = next_col_;
    const idx c1 = std::min(a_->cols, c0 + block_cols_);
    Block b;
    b.col0 = c0;
    b.block = submatrix(*a_, 0, a_->rows, c0, c1);
    next_col_ = c1;
    entries_served_ += static_cast<std::uint64_t>(a_->rows) * static_cast<std::uint64_t>(c1 - c0);
    return b;
}

} // namespace randfact
