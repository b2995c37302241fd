#pragma once

#include "sparsequad/dataset.hpp"

#include <filesystem>
#include <iosfwd>

namespace sparsequad {

// Matrix CSV layout: a header line "rows,cols" followed by `rows` lines of
// `cols` comma-separated values, row-major, printed with 17 significant
// digits so that a round trip is exact. Vectors are written as n x 1.

void write_matrix_csv(std::ostream& os, const Eigen::Ref<const Matrix>& m);
void write_matrix_csv(const std::filesystem::path& path, const Eigen::Ref<const Matrix>& m);

Matrix read_matrix_csv(std::istream& is);
Matrix read_matrix_csv(const std::filesystem::path& path);

/// Reads an n x 1 (or 1 x n) matrix file as a vector.
Vector read_vector_csv(const std::filesystem::path& path);

}  // namespace sparsequad
