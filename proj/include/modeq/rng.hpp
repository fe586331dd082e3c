#pragma once

#include <cstdint>
#include <array>

#include <Eigen/Core>

namespace modeq::rng {

// Counter-based generation (Philox4x32-10). Every draw is addressed by
// (seed, stream, block): `stream` identifies a logical substream (path index
// plus purpose tag) and `block` is the position within it. Draws are therefore
// reproducible for any scheduling of paths across workers.

enum class Purpose : std::uint64_t {
  kIncrements = 0,  // Gaussian increments driving scheme/SDE paths
  kBridge = 1,      // Brownian-bridge refinements between stored increments
  kSampling = 2,    // assumption checks, random test instances
};

/// Stream id for a (purpose, path) pair. Path indices up to 2^56 - 1.
constexpr std::uint64_t stream_id(Purpose purpose, std::uint64_t path) {
  return (static_cast<std::uint64_t>(purpose) << 56) | (path & 0x00ffffffffffffffULL);
}

/// One Philox4x32-10 block: 128 bits of counter -> 128 bits of output,
/// returned as two 64-bit words. Reference scalar implementation.
std::array<std::uint64_t, 2> philox_block(std::uint64_t seed, std::uint64_t stream,
                                          std::uint64_t block);

/// Fills out[0..2*nblocks) with standard normal variates, two per block,
/// for consecutive block indices starting at first_block. Uses the vector
/// (AVX-512) kernel when compiled in; results are bit-identical to the
/// scalar reference path.
void fill_normals(std::uint64_t seed, std::uint64_t stream,
                  std::uint64_t first_block, int nblocks, double* out);

/// Uniform variates on (0,1), two per block.
void fill_uniforms(std::uint64_t seed, std::uint64_t stream,
                   std::uint64_t first_block, int nblocks, double* out);

/// Number of Philox blocks consumed by one d-dimensional Gaussian vector.
constexpr int blocks_per_vector(int dim) { return (dim + 1) / 2; }

/// Draws the d-dimensional standard Gaussian addressed by vector_index.
/// Vector draws are laid out back to back: block = vector_index * blocks + b.
void gaussian_vector(std::uint64_t seed, std::uint64_t stream,
                     std::uint64_t vector_index, int dim, double* out);

inline Eigen::VectorXd gaussian_vector(std::uint64_t seed, std::uint64_t stream,
                                       std::uint64_t vector_index, int dim) {
  Eigen::VectorXd g(dim);
  gaussian_vector(seed, stream, vector_index, dim, g.data());
  return g;
}

/// True when the vectorized kernel is compiled in and used.
bool vector_kernel_active();

/// Scalar reference for fill_normals, exposed for equivalence testing.
void fill_normals_reference(std::uint64_t seed, std::uint64_t stream,
                            std::uint64_t first_block, int nblocks, double* out);

}  // namespace modeq::rng
