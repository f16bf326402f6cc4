#include "nematic/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace nematic::io {

namespace {

constexpr char magic[8] = {'E', 'L', 'F', 'I', 'E', 'L', 'D', '1'};

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

} // namespace

void write_elf1(const std::filesystem::path& path, const SpectralField& f, double time) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_elf1: cannot open " + path.string());
    os.write(magic, 8);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid().dim));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid().m));
    put<double>(os, f.grid().length);
    put<double>(os, time);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(f.components()));
    auto vals = f.values();
    os.write(reinterpret_cast<const char*>(vals.data()),
             static_cast<std::streamsize>(vals.size() * sizeof(double)));
    if (!os) throw std::runtime_error("write_elf1: short write to " + path.string());
}

LoadedField read_elf1(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_elf1: cannot open " + path.string());
    char m[8];
    is.read(m, 8);
    if (!is || std::memcmp(m, magic, 8) != 0)
        throw std::runtime_error("read_elf1: bad magic in " + path.string());
    auto dim = get<std::uint32_t>(is);
    auto mm = get<std::uint32_t>(is);
    double length = get<double>(is);
    double time = get<double>(is);
    auto comps = get<std::uint32_t>(is);
    Grid g(static_cast<int>(dim), static_cast<int>(mm), length);
    SpectralField f(g, static_cast<int>(comps));
    auto vals = f.mutable_values();
    is.read(reinterpret_cast<char*>(vals.data()),
            static_cast<std::streamsize>(vals.size() * sizeof(double)));
    if (!is) throw std::runtime_error("read_elf1: truncated file " + path.string());
    for (double v : vals)
        if (!std::isfinite(v))
            throw std::runtime_error("read_elf1: non-finite value in " + path.string());
    return {std::move(f), time};
}

void save_trajectory(const std::filesystem::path& dir, const solver::Trajectory& traj,
                     int stride) {
    if (stride < 1) stride = 1;
    std::filesystem::create_directories(dir);
    const std::size_t last = traj.steps() - 1;
    std::vector<std::size_t> idxs;
    for (std::size_t k = 0; k < traj.steps(); k += stride) idxs.push_back(k);
    if (idxs.back() != last) idxs.push_back(last); // keep the final level
    int count = 0;
    for (std::size_t idx : idxs) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%04d", count++);
        const auto& s = traj.snapshots[idx];
        write_elf1(dir / (std::string("a_") + buf + ".elf"), s.a, s.time);
        write_elf1(dir / (std::string("u_") + buf + ".elf"), s.u, s.time);
        write_elf1(dir / (std::string("d_") + buf + ".elf"), s.d, s.time);
        write_elf1(dir / (std::string("gradpi_") + buf + ".elf"), s.grad_pi, s.time);
    }
    std::ofstream meta(dir / "trajectory.meta");
    meta << "count = " << count << "\n";
    meta << "nu = " << std::setprecision(17) << traj.constants().nu << "\n";
    meta << "lambda = " << traj.constants().lambda << "\n";
    meta << "gamma = " << traj.constants().gamma << "\n";
    meta << "iterations = " << traj.iterations << "\n";
}

solver::Trajectory load_trajectory(const std::filesystem::path& dir) {
    std::ifstream meta(dir / "trajectory.meta");
    if (!meta)
        throw std::runtime_error("load_trajectory: missing trajectory.meta in " + dir.string());
    int count = 0, iterations = 0;
    PhysicalConstants pc;
    std::string line;
    while (std::getline(meta, line)) {
        std::istringstream ls(line);
        std::string key, eq;
        ls >> key >> eq;
        if (key == "count") ls >> count;
        else if (key == "nu") ls >> pc.nu;
        else if (key == "lambda") ls >> pc.lambda;
        else if (key == "gamma") ls >> pc.gamma;
        else if (key == "iterations") ls >> iterations;
    }
    if (count < 2)
        throw std::runtime_error("load_trajectory: need at least two snapshots");
    solver::Trajectory traj;
    traj.iterations = iterations;
    for (int k = 0; k < count; ++k) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%04d", k);
        auto a = read_elf1(dir / (std::string("a_") + buf + ".elf"));
        auto u = read_elf1(dir / (std::string("u_") + buf + ".elf"));
        auto d = read_elf1(dir / (std::string("d_") + buf + ".elf"));
        auto gp = read_elf1(dir / (std::string("gradpi_") + buf + ".elf"));
        solver::StateSnapshot s;
        s.time = a.time;
        s.a = std::move(a.field);
        s.u = std::move(u.field);
        s.d = std::move(d.field);
        s.grad_pi = std::move(gp.field);
        s.constants = pc;
        traj.snapshots.push_back(std::move(s));
    }
    return traj;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_csv: cannot open " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i)
        os << header[i] << (i + 1 < header.size() ? "," : "\n");
    os << std::setprecision(17);
    for (const auto& row : rows)
        for (std::size_t i = 0; i < row.size(); ++i)
            os << row[i] << (i + 1 < row.size() ? "," : "\n");
}

void write_labeled_csv(const std::filesystem::path& path, const std::string& key_name,
                       const std::string& value_name,
                       const std::vector<std::pair<std::string, double>>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_labeled_csv: cannot open " + path.string());
    os << key_name << "," << value_name << "\n" << std::setprecision(17);
    for (const auto& [k, v] : rows) os << "\"" << k << "\"," << v << "\n";
}

} // namespace nematic::io
