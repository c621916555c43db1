#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spm/decomposer.hpp"
#include "spm/subspace.hpp"
#include "spm/tensor.hpp"

namespace spm {

// Little-endian f64 binary formats. Readers throw IoError on short reads,
// bad magic or sizes that do not match the payload.

/// "SPT1", u32 m, u32 D, D^m values row-major.
void write_tensor(const std::filesystem::path& path, const SymTensor& t);
SymTensor read_tensor(const std::filesystem::path& path);

/// "SPE1", u32 D, u32 m, u32 K, K weights, D*K components column-major.
void write_ensemble(const std::filesystem::path& path, const ComponentEnsemble& e);
ComponentEnsemble read_ensemble(const std::filesystem::path& path);

/// "SPS1", u32 D, u32 n, u32 K, K singular values, D^n*K basis column-major.
void write_subspace(const std::filesystem::path& path, const TensorSubspace& s);
TensorSubspace read_subspace(const std::filesystem::path& path);

/// Columns k, lambda_hat, objective, restarts, a_hat_0 .. a_hat_{D-1}.
void write_decomposition_csv(const std::filesystem::path& path, const DecompositionResult& r);

/// One point per non-empty line, whitespace or comma separated; '#' starts a comment.
std::vector<Vector> read_points(const std::filesystem::path& path, int dim);

/// 17 significant digits, '.' decimal.
std::string format_double(double v);

}  // namespace spm
