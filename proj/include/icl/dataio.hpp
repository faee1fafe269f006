#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

#include "icl/missingness.hpp"
#include "icl/numeric.hpp"

namespace icl {

// Rectangular CSV with a header row. Empty cells are missing (mask 0); every
// other cell must parse completely as a number.
MaskedDataset read_csv(std::istream& in, const std::string& source = "<stream>");
MaskedDataset load_csv(const std::filesystem::path& path);

// Header x0..x{d-1}, values as %.17g, missing entries left empty.
void write_csv(std::ostream& out, const MaskedDataset& data);
void write_csv(std::ostream& out, const Matrix& data);
// 0/1 mask with the same header.
void write_mask_csv(std::ostream& out, const Mask& mask);

std::string format_double(double v);

// Opens a file for writing, creating parent directories; throws IoError.
std::ofstream open_output(const std::filesystem::path& path);
std::ifstream open_input(const std::filesystem::path& path);

// FNV-1a over the bit patterns, for asserting that runs share their inputs.
std::uint64_t checksum(const Matrix& m);
std::uint64_t checksum(const Mask& m);

}  // namespace icl
