#pragma once

#include <cstdint>
#include <random>

namespace setinf {

using Engine = std::mt19937_64;

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Independent engine for (seed, stream, index). Every Monte Carlo draw,
/// bootstrap redraw, and replication derives its engine this way, so the
/// outcome is a function of the indices only and not of scheduling.
Engine derive_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// Named stream identifiers, keeping unrelated consumers of one seed apart.
namespace streams {
inline constexpr std::uint64_t omega_bootstrap = 0x0e1;
inline constexpr std::uint64_t critical_simulate = 0x0e2;
inline constexpr std::uint64_t critical_bootstrap = 0x0e3;
inline constexpr std::uint64_t parametric_studies = 0x0e4;
inline constexpr std::uint64_t gamma_bootstrap = 0x0e5;
inline constexpr std::uint64_t synth_panel = 0x0e6;
inline constexpr std::uint64_t coverage_rep = 0x0e7;
inline constexpr std::uint64_t weight_bootstrap = 0x0e8;
inline constexpr std::uint64_t growth_bootstrap = 0x0e9;
}  // namespace streams

}  // namespace setinf
