// Snapshot file format and CSV emission.
//
// "ELF1" field files: 8-byte magic "ELFIELD1", little-endian u32 dim,
// u32 M, f64 box length, f64 time, u32 component count, then
// components x M^dim f64 values in row-major axis order.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nematic/solver.hpp"

namespace nematic::io {

void write_elf1(const std::filesystem::path& path, const SpectralField& f, double time);

struct LoadedField {
    SpectralField field;
    double time = 0.0;
};

LoadedField read_elf1(const std::filesystem::path& path);

/// One snapshot stride of a trajectory: a_XXXX.elf, u_XXXX.elf, d_XXXX.elf,
/// gradpi_XXXX.elf per stored index plus trajectory.meta with the constants.
void save_trajectory(const std::filesystem::path& dir, const solver::Trajectory& traj,
                     int stride = 1);

solver::Trajectory load_trajectory(const std::filesystem::path& dir);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// Generic labeled rows (e.g. ledger components, verdict values).
void write_labeled_csv(const std::filesystem::path& path, const std::string& key_name,
                       const std::string& value_name,
                       const std::vector<std::pair<std::string, double>>& rows);

} // namespace nematic::io
