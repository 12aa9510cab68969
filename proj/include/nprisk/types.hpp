#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace nprisk {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Error categories, mapped to CLI exit codes (input=2, numerical=3, config=4).
enum class ErrorKind { Input, Numerical, Config };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

struct SingularLocalFit : Error {
    explicit SingularLocalFit(const std::string& m) : Error(ErrorKind::Numerical, m) {}
};
struct NotPSD : Error {
    explicit NotPSD(const std::string& m) : Error(ErrorKind::Numerical, m) {}
};
struct DegenerateDenominator : Error {
    explicit DegenerateDenominator(const std::string& m) : Error(ErrorKind::Numerical, m) {}
};
struct NonFiniteObjective : Error {
    explicit NonFiniteObjective(const std::string& m) : Error(ErrorKind::Numerical, m) {}
};
struct DegenerateCloud : Error {
    explicit DegenerateCloud(const std::string& m) : Error(ErrorKind::Numerical, m) {}
};
struct EmptyPilot : Error {
    explicit EmptyPilot(const std::string& m) : Error(ErrorKind::Numerical, m) {}
};
struct ZeroSill : Error {
    explicit ZeroSill(const std::string& m) : Error(ErrorKind::Numerical, m) {}
};
struct SingularSystem : Error {
    explicit SingularSystem(const std::string& m) : Error(ErrorKind::Numerical, m) {}
};
struct DegenerateResiduals : Error {
    explicit DegenerateResiduals(const std::string& m) : Error(ErrorKind::Numerical, m) {}
};
struct ParseError : Error {
    explicit ParseError(const std::string& m) : Error(ErrorKind::Input, m) {}
};
struct DuplicateLocation : Error {
    explicit DuplicateLocation(const std::string& m) : Error(ErrorKind::Input, m) {}
};
struct TooFewPoints : Error {
    explicit TooFewPoints(const std::string& m) : Error(ErrorKind::Input, m) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorKind::Config, m) {}
};

/// A planar site. Coordinates must be finite; unit square in simulations,
/// projected units for real data.
struct Location {
    double x1 = 0.0;
    double x2 = 0.0;

    bool finite() const { return std::isfinite(x1) && std::isfinite(x2); }
    bool operator==(const Location& o) const { return x1 == o.x1 && x2 == o.x2; }
};

inline double distance(const Location& a, const Location& b) {
    return std::hypot(a.x1 - b.x1, a.x2 - b.x2);
}

/// Observed values of a spatial process at distinct sites.
struct SpatialSample {
    std::vector<Location> locations;
    Vec values;

    int n() const { return static_cast<int>(locations.size()); }
};

/// Validates sizes, finiteness, n >= min_points and pairwise-distinct sites.
/// Throws ParseError / DuplicateLocation / TooFewPoints.
void validate_sample(const SpatialSample& sample, int min_points = 3);

/// Regular rectangular grid, boundary included, row-major with x1 varying fastest.
struct GridSpec {
    int nx = 1;
    int ny = 1;
    double x1_min = 0.0;
    double x1_max = 1.0;
    double x2_min = 0.0;
    double x2_max = 1.0;
};

}  // namespace nprisk
