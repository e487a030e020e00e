#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace iscap {

using cxd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

/// Raised on malformed configuration input (bad dimensions, units, files).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a requested linear-algebraic construction degenerates
/// (rank-deficient channel matrix, empty null space).
struct DegenerateChannelError : std::runtime_error {
    explicit DegenerateChannelError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised by the sensing pipeline when estimation cannot produce the
/// requested number of parameters.
struct EstimationError : std::runtime_error {
    explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0) ; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace iscap
