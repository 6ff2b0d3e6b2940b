#pragma once

#include <filesystem>
#include <string>

#include "rfq/fqi.hpp"

namespace rfq {

/// %.17g formatting: round-trips every finite double exactly.
std::string format_double(double v);

/// Columnar CSV with header
/// trajectory_id,t,s_0..s_{d-1},action,reward,s'_0..s'_{d-1}.
void write_batch_csv(const TrajectoryBatch& batch,
                     const std::filesystem::path& path);

/// Reads the CSV form back; num_actions is inferred as max action + 1 and
/// seed/fingerprint are not carried by this format.
TrajectoryBatch read_batch_csv(const std::filesystem::path& path);

/// Binary form: 32-byte header (magic "RFQI", u32 version, u64 n, u32 T,
/// u32 d, u32 num_actions, u32 reserved), then little-endian 64-bit floats,
/// row-major in (trajectory, t) order with each row laid out as
/// s_0..s_{d-1}, action, reward, s'_0..s'_{d-1}; a 16-byte trailer carries
/// the batch seed and spec fingerprint.
void write_batch_binary(const TrajectoryBatch& batch,
                        const std::filesystem::path& path);
TrajectoryBatch read_batch_binary(const std::filesystem::path& path);

/// Human-readable key=value spec file with whitespace-separated matrix rows.
void write_mdp_spec(const MdpSpec& spec, const std::filesystem::path& path);
MdpSpec read_mdp_spec(const std::filesystem::path& path);

/// Q-function coefficients as CSV rows (t,action,coordinate,coefficient).
void write_qfun_csv(const LinearQ& qfun, const std::filesystem::path& path);

/// Debug dump of a coefficient vector as (index,coefficient) rows.
void write_coefficients_csv(const Eigen::VectorXd& coefficients,
                            const std::filesystem::path& path);

/// Per-timestep fit diagnostics as CSV rows
/// (t,penalty,threshold,support_size,iterations,kkt_violation).
void write_fqi_diagnostics_csv(const FqiResult& result,
                               const std::filesystem::path& path);

}  // namespace rfq
