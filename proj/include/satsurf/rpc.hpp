#pragma once

#include <array>
#include <filesystem>

#include "satsurf/common.hpp"

namespace satsurf {

// Rational polynomial camera. Image coordinates follow the (u, v) = (line, samp)
// convention used throughout: u is the image row, v the column.
//
// The 20-term cubic basis over normalized (x=lon, y=lat, z=alt) uses the
// standard RPC00B ordering:
//   1, x, y, z, xy, xz, yz, x^2, y^2, z^2,
//   xyz, x^3, xy^2, xz^2, x^2y, y^3, yz^2, x^2z, y^2z, z^3
struct RpcModel {
    std::array<double, 20> line_num{}, line_den{}, samp_num{}, samp_den{};
    double line_off = 0, samp_off = 0;
    double lat_off = 0, lon_off = 0, alt_off = 0;
    double line_scale = 1, samp_scale = 1;
    double lat_scale = 1, lon_scale = 1, alt_scale = 1;

    // line <- normalized lat, samp <- normalized lon, unit scales, zero offsets.
    static RpcModel identity();

    static RpcModel load(const std::filesystem::path& file);
    void save(const std::filesystem::path& file) const;
};

// Basis vector of the 20 cubic terms at normalized (x, y, z).
std::array<double, 20> rpc_terms(double x, double y, double z);

struct RpcOptions {
    double domain_margin = 0.5;     // allowed excess beyond the normalized unit box
    double newton_tol = 1e-10;      // convergence tolerance, normalized coordinates
    int max_iterations = 50;
    double jacobian_step = 1e-6;    // central-difference step, normalized coordinates
};

// Forward projection (lon, lat, alt) -> (u, v) pixels.
// Throws OutOfDomainError beyond the margin, DegenerateDenominatorError if a
// denominator magnitude drops below 1e-8.
Vec2 rpc_project(const RpcModel& model, double lon_deg, double lat_deg, double alt_m,
                 const RpcOptions& opts = {});

// Inverse projection at fixed altitude: (u, v, alt) -> (lon, lat).
// Damped Newton on the 2x2 system with a numerical Jacobian, initialized at the
// normalization center. Throws NoConvergenceError / DegenerateJacobianError.
Vec2 rpc_localize(const RpcModel& model, double u, double v, double alt_m,
                  const RpcOptions& opts = {});

}  // namespace satsurf
