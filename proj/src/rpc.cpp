#include "satsurf/rpc.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace satsurf {

namespace {

constexpr double kDenominatorFloor = 1e-8;

double dot20(const std::array<double, 20>& c, const std::array<double, 20>& t) {
    double s = 0.0;
    for (int i = 0; i < 20; ++i) s += c[i] * t[i];
    return s;
}

// Normalized (x=lon, y=lat) -> normalized (line, samp). Altitude fixed.
Vec2 eval_normalized(const RpcModel& m, double x, double y, double z) {
    const auto t = rpc_terms(x, y, z);
    const double lden = dot20(m.line_den, t);
    const double sden = dot20(m.samp_den, t);
    if (std::fabs(lden) < kDenominatorFloor || std::fabs(sden) < kDenominatorFloor)
        throw DegenerateDenominatorError("rpc: rational denominator below 1e-8");
    return {dot20(m.line_num, t) / lden, dot20(m.samp_num, t) / sden};
}

}  // namespace

std::array<double, 20> rpc_terms(double x, double y, double z) {
    return {1.0,
            x, y, z,
            x * y, x * z, y * z,
            x * x, y * y, z * z,
            x * y * z,
            x * x * x, x * y * y, x * z * z,
            x * x * y, y * y * y, y * z * z,
            x * x * z, y * y * z, z * z * z};
}

RpcModel RpcModel::identity() {
    RpcModel m;
    m.line_den[0] = m.samp_den[0] = 1.0;
    m.line_num[2] = 1.0;  // y = normalized lat
    m.samp_num[1] = 1.0;  // x = normalized lon
    return m;
}

Vec2 rpc_project(const RpcModel& m, double lon_deg, double lat_deg, double alt_m,
                 const RpcOptions& opts) {
    const double x = (lon_deg - m.lon_off) / m.lon_scale;
    const double y = (lat_deg - m.lat_off) / m.lat_scale;
    const double z = (alt_m - m.alt_off) / m.alt_scale;
    const double lim = 1.0 + opts.domain_margin;
    if (std::fabs(x) > lim || std::fabs(y) > lim || std::fabs(z) > lim)
        throw OutOfDomainError("rpc_project: point outside the model's valid box");
    const Vec2 n = eval_normalized(m, x, y, z);
    return {m.line_off + m.line_scale * n[0], m.samp_off + m.samp_scale * n[1]};
}

Vec2 rpc_localize(const RpcModel& m, double u, double v, double alt_m,
                  const RpcOptions& opts) {
    const double z = (alt_m - m.alt_off) / m.alt_scale;
    const Vec2 target{(u - m.line_off) / m.line_scale, (v - m.samp_off) / m.samp_scale};

    double x = 0.0, y = 0.0;  // normalization center
    Vec2 resid = eval_normalized(m, x, y, z) - target;
    const double h = opts.jacobian_step;

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        if (resid.norm() < opts.newton_tol)
            return {m.lon_off + m.lon_scale * x, m.lat_off + m.lat_scale * y};

        const Vec2 fx1 = eval_normalized(m, x + h, y, z);
        const Vec2 fx0 = eval_normalized(m, x - h, y, z);
        const Vec2 fy1 = eval_normalized(m, x, y + h, z);
        const Vec2 fy0 = eval_normalized(m, x, y - h, z);
        const double j00 = (fx1[0] - fx0[0]) / (2 * h), j01 = (fy1[0] - fy0[0]) / (2 * h);
        const double j10 = (fx1[1] - fx0[1]) / (2 * h), j11 = (fy1[1] - fy0[1]) / (2 * h);
        const double det = j00 * j11 - j01 * j10;
        if (std::fabs(det) < 1e-12)
            throw DegenerateJacobianError("rpc_localize: singular 2x2 Jacobian");

        const double dx = (j11 * resid[0] - j01 * resid[1]) / det;
        const double dy = (-j10 * resid[0] + j00 * resid[1]) / det;

        // Damped step: halve until the residual stops growing.
        double step = 1.0;
        for (int halving = 0; halving < 12; ++halving) {
            const double xn = x - step * dx, yn = y - step * dy;
            const Vec2 rn = eval_normalized(m, xn, yn, z) - target;
            if (rn.norm() <= resid.norm() || step < 1e-6) {
                x = xn;
                y = yn;
                resid = rn;
                break;
            }
            step *= 0.5;
        }
    }
    if (resid.norm() < opts.newton_tol)
        return {m.lon_off + m.lon_scale * x, m.lat_off + m.lat_scale * y};
    throw NoConvergenceError("rpc_localize: Newton did not converge in " +
                             std::to_string(opts.max_iterations) + " iterations");
}

namespace {

std::string strip(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

RpcModel RpcModel::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("rpc: cannot open " + file.string());
    std::map<std::string, double> kv;
    std::string line;
    while (std::getline(in, line)) {
        line = strip(line);
        if (line.empty() || line[0] == '#') continue;
        // accept "KEY value", "KEY: value", and trailing unit words
        auto colon = line.find(':');
        if (colon != std::string::npos) line[colon] = ' ';
        std::istringstream ls(line);
        std::string key;
        double value;
        if (ls >> key >> value) kv[key] = value;
    }
    auto get = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw IoError("rpc: missing key " + key + " in " + file.string());
        return it->second;
    };
    RpcModel m;
    m.line_off = get("LINE_OFF");
    m.samp_off = get("SAMP_OFF");
    m.lat_off = get("LAT_OFF");
    m.lon_off = get("LONG_OFF");
    m.alt_off = get("HEIGHT_OFF");
    m.line_scale = get("LINE_SCALE");
    m.samp_scale = get("SAMP_SCALE");
    m.lat_scale = get("LAT_SCALE");
    m.lon_scale = get("LONG_SCALE");
    m.alt_scale = get("HEIGHT_SCALE");
    if (m.line_scale <= 0 || m.samp_scale <= 0 || m.lat_scale <= 0 || m.lon_scale <= 0 || m.alt_scale <= 0)
        throw ValidationError("rpc: scales must be strictly positive in " + file.string());
    for (int i = 0; i < 20; ++i) {
        const std::string n = std::to_string(i + 1);
        m.line_num[i] = get("LINE_NUM_COEFF_" + n);
        m.line_den[i] = get("LINE_DEN_COEFF_" + n);
        m.samp_num[i] = get("SAMP_NUM_COEFF_" + n);
        m.samp_den[i] = get("SAMP_DEN_COEFF_" + n);
    }
    return m;
}

void RpcModel::save(const std::filesystem::path& file) const {
    std::ofstream out(file);
    if (!out) throw IoError("rpc: cannot write " + file.string());
    out.precision(17);
    out << "LINE_OFF " << line_off << "\n"
        << "SAMP_OFF " << samp_off << "\n"
        << "LAT_OFF " << lat_off << "\n"
        << "LONG_OFF " << lon_off << "\n"
        << "HEIGHT_OFF " << alt_off << "\n"
        << "LINE_SCALE " << line_scale << "\n"
        << "SAMP_SCALE " << samp_scale << "\n"
        << "LAT_SCALE " << lat_scale << "\n"
        << "LONG_SCALE " << lon_scale << "\n"
        << "HEIGHT_SCALE " << alt_scale << "\n";
    auto block = [&](const char* prefix, const std::array<double, 20>& c) {
        for (int i = 0; i < 20; ++i) out << prefix << i + 1 << " " << c[i] << "\n";
    };
    block("LINE_NUM_COEFF_", line_num);
    block("LINE_DEN_COEFF_", line_den);
    block("SAMP_NUM_COEFF_", samp_num);
    block("SAMP_DEN_COEFF_", samp_den);
    if (!out) throw IoError("rpc: write failed for " + file.string());
}

}  // namespace satsurf
