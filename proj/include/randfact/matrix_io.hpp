#pragma once

#include <string>

#include "randfact/dense.hpp"

namespace randfact {

/// Read a dense matrix; the format follows the file extension:
///  - .mtx / .mm  Matrix Market, array or coordinate, real/integer/pattern
///                fields, general or symmetric storage (densified on read)
///  - .csv        comma-separated rows
/// Malformed content, unsupported qualifiers, and non-finite values raise
/// ParseError. Unknown extensions raise ParameterError.
DenseMatrix read_matrix(const std::string& path);

/// Write a matrix by extension: Matrix Market array/general (.mtx/.mm) or
/// CSV (.csv), both at full %.17g round-trip precision. The write goes
/// through a temporary file renamed into place, so readers never observe a
/// half-written file. Non-finite entries raise NumericalError.
void write_matrix(const std::string& path, const DenseMatrix& a);

} // namespace randfact
