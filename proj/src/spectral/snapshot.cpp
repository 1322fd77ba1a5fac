#include "rbc/spectral/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace rbc::spectral {

namespace {

constexpr const char* kMagic = "RBCSNAP";

void put_le(std::ostream& os, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
    os.write(buf, 8);
}

double get_le(std::istream& is) {
    unsigned char buf[8];
    if (!is.read(reinterpret_cast<char*>(buf), 8)) throw std::runtime_error("snapshot: truncated data block");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

}  // namespace

void write_snapshot(std::ostream& os, const Snapshot& s) {
    const auto& d = s.field.disc();
    os << kMagic << ' ' << kSnapshotVersion << '\n';
    os << "L = " << fmt(d.period()) << '\n';
    os << "K = " << d.max_wavenumber() << '\n';
    os << "J = " << d.vertical_size() << '\n';
    os << "bc = " << to_string(d.bc().tag) << '\n';
    os << "space = " << to_string(d.bc().space) << '\n';
    os << "R = " << fmt(s.R) << '\n';
    os << "Pr = " << fmt(s.Pr) << '\n';
    os << "time = " << fmt(s.time) << '\n';
    for (const auto& [k, v] : s.extra) {
        if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
            throw std::invalid_argument("snapshot: extra keys/values must be single-line without '='");
        os << k << " = " << v << '\n';
    }
    const auto count = d.rows() * d.cols();
    os << "count = " << count << '\n';
    os << "end\n";
    for (int k = 0; k <= d.max_wavenumber(); ++k)
        for (Eigen::Index j = 0; j < d.rows(); ++j)
            for (Parity p : {Parity::Cos, Parity::Sin})
                put_le(os, s.field.coeffs()(j, Discretization::column(k, p)));
    if (!os) throw std::runtime_error("snapshot: write failed");
}

void write_snapshot(const std::filesystem::path& path, const Snapshot& s) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("snapshot: cannot open " + path.string());
    write_snapshot(os, s);
}

Snapshot read_snapshot(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("snapshot: empty stream");
    {
        std::istringstream hs(line);
        std::string magic;
        int version = 0;
        hs >> magic >> version;
        if (magic != kMagic) throw std::runtime_error("snapshot: bad magic '" + magic + "'");
        if (version != kSnapshotVersion)
            throw std::runtime_error("snapshot: unsupported version " + std::to_string(version));
    }
    std::map<std::string, std::string> kv;
    bool ended = false;
    while (std::getline(is, line)) {
        if (line == "end") {
            ended = true;
            break;
        }
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) throw std::runtime_error("snapshot: malformed header line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    if (!ended) throw std::runtime_error("snapshot: header not terminated");
    auto take = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw std::runtime_error("snapshot: missing header key '" + key + "'");
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    const double L = std::stod(take("L"));
    const int K = std::stoi(take("K"));
    const int J = std::stoi(take("J"));
    BoundaryCondition bc{parse_bc_tag(take("bc")), parse_space_tag(take("space"))};
    Snapshot s{SpectralField(Discretization::make(L, K, J, bc)), 0.0, 0.0, 0.0, {}};
    s.R = std::stod(take("R"));
    s.Pr = std::stod(take("Pr"));
    s.time = std::stod(take("time"));
    const long long count = std::stoll(take("count"));
    const auto& d = s.field.disc();
    if (count != d.rows() * d.cols()) throw std::runtime_error("snapshot: coefficient count mismatch");
    Eigen::MatrixXd c(d.rows(), d.cols());
    for (int k = 0; k <= K; ++k)
        for (Eigen::Index j = 0; j < d.rows(); ++j)
            for (Parity p : {Parity::Cos, Parity::Sin}) c(j, Discretization::column(k, p)) = get_le(is);
    s.field = SpectralField(s.field.disc_ptr(), std::move(c));
    s.extra = std::move(kv);
    return s;
}

Snapshot read_snapshot(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("snapshot: cannot open " + path.string());
    return read_snapshot(is);
}

}  // namespace rbc::spectral
