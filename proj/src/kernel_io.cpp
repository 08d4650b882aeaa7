#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "kinbridge/errors.hpp"
#include "kinbridge/kernel.hpp"

namespace kinbridge {

using nlohmann::json;

void export_kernel(const TransitionKernel& k, const std::string& stem, MatrixFormat format) {
    json side;
    side["schema_version"] = 1;
    side["t"] = k.t;
    side["grid_hash"] = k.grid_hash;
    side["rows"] = k.values.rows();
    side["cols"] = k.values.cols();
    side["balanced"] = k.balanced;
    side["origin"] = (k.origin.kind == KernelOrigin::Kind::ExactGaussian) ? "exact_gaussian" : "monte_carlo";
    side["nsamples"] = k.origin.nsamples;
    side["dt"] = k.origin.dt;
    side["seed"] = k.origin.seed;
    side["omega"] = std::vector<double>(k.omega.data(), k.omega.data() + k.omega.size());
    side["format"] = (format == MatrixFormat::Binary) ? "binary" : "csv";

    if (format == MatrixFormat::Binary) {
        std::ofstream out(stem + ".bin", std::ios::binary);
        if (!out) throw ConfigurationError("cannot write " + stem + ".bin");
        out.write(reinterpret_cast<const char*>(k.values.data()),
                  static_cast<std::streamsize>(sizeof(double) * k.values.size()));
    } else {
        std::ofstream out(stem + ".csv");
        if (!out) throw ConfigurationError("cannot write " + stem + ".csv");
        out << std::setprecision(17);
        for (Eigen::Index r = 0; r < k.values.rows(); ++r) {
            for (Eigen::Index c = 0; c < k.values.cols(); ++c) out << (c ? "," : "") << k.values(r, c);
            out << '\n';
        }
    }
    std::ofstream js(stem + ".json");
    if (!js) throw ConfigurationError("cannot write " + stem + ".json");
    js << side.dump(2) << '\n';
}

TransitionKernel import_kernel(const std::string& stem, const PhaseGrid* grid) {
    std::ifstream js(stem + ".json");
    if (!js) throw ConfigurationError("missing kernel sidecar " + stem + ".json");
    json side;
    try {
        js >> side;
    } catch (const json::exception& e) {
        throw ConfigurationError(std::string("malformed kernel sidecar: ") + e.what());
    }
    TransitionKernel k;
    k.t = side.at("t").get<double>();
    k.grid_hash = side.at("grid_hash").get<std::string>();
    if (grid && grid->hash() != k.grid_hash) throw ConfigurationError("kernel was built on a different grid");
    const auto rows = side.at("rows").get<Eigen::Index>();
    const auto cols = side.at("cols").get<Eigen::Index>();
    k.balanced = side.value("balanced", false);
    k.origin.kind = side.at("origin").get<std::string>() == "monte_carlo" ? KernelOrigin::Kind::MonteCarlo
                                                                          : KernelOrigin::Kind::ExactGaussian;
    k.origin.nsamples = side.value("nsamples", std::size_t{0});
    k.origin.dt = side.value("dt", 0.0);
    k.origin.seed = side.value("seed", std::uint64_t{0});
    const auto omega = side.at("omega").get<std::vector<double>>();
    k.omega = Eigen::Map<const Vector>(omega.data(), static_cast<Eigen::Index>(omega.size()));
    k.values.resize(rows, cols);
    if (side.at("format").get<std::string>() == "binary") {
        std::ifstream in(stem + ".bin", std::ios::binary);
        if (!in) throw ConfigurationError("missing kernel matrix " + stem + ".bin");
        in.read(reinterpret_cast<char*>(k.values.data()), static_cast<std::streamsize>(sizeof(double) * k.values.size()));
        if (!in) throw ConfigurationError("truncated kernel matrix " + stem + ".bin");
    } else {
        std::ifstream in(stem + ".csv");
        if (!in) throw ConfigurationError("missing kernel matrix " + stem + ".csv");
        std::string line;
        for (Eigen::Index r = 0; r < rows; ++r) {
            if (!std::getline(in, line)) throw ConfigurationError("truncated kernel matrix " + stem + ".csv");
            std::istringstream ls(line);
            std::string cell;
            for (Eigen::Index c = 0; c < cols; ++c) {
                if (!std::getline(ls, cell, ',')) throw ConfigurationError("short row in " + stem + ".csv");
                // strtod, unlike stod, accepts subnormal entries
                char* end = nullptr;
                k.values(r, c) = std::strtod(cell.c_str(), &end);
                if (end == cell.c_str()) throw ConfigurationError("malformed entry in " + stem + ".csv");
            }
        }
    }
    return k;
}

} // namespace kinbridge
