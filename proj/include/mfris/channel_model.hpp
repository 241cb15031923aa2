#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "mfris/linalg.hpp"

namespace mfris {

struct Position3D {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

double distance(const Position3D& a, const Position3D& b);

struct PathLossModel {
  double referenceLossDb = -30.0;
  double exponentBsRis = 2.5;
  double exponentBsUser = 3.5;
  double exponentRisUser = 2.8;

  void validate() const;
};

/// Line-of-sight component used inside the Rician mixture.
enum class LosModel {
  kSteering,  // far-field array responses from node positions
  kAllOnes,
};

struct RicianConfig {
  double kFactorDb = 3.0;
  std::uint64_t seed = 0;
  LosModel los = LosModel::kSteering;

  double kFactorLinear() const { return dbToLinear(kFactorDb); }
};

struct NetworkGeometry {
  Position3D bs;
  Position3D ris;
  std::vector<Position3D> users;
  /// Index into circleCenters for every user, parallel to users.
  std::vector<int> userCircle;
  std::array<Position3D, 2> circleCenters{};
  double radius = 0.0;

  std::size_t userCount() const { return users.size(); }
};

/// Complex channel triplet of one realization: h_k (BS->user, length N),
/// H (BS->surface, M x N), g_k (surface->user, length M).
struct ChannelSet {
  std::vector<CVec> direct;
  CMat bsToRis;
  std::vector<CVec> risToUser;

  std::size_t users() const { return direct.size(); }
  Eigen::Index antennas() const { return bsToRis.cols(); }
  Eigen::Index elements() const { return bsToRis.rows(); }
};

using Rng = std::mt19937_64;

/// Uniform random angular placement on each of the two circles (z = 0).
/// Users [0, countPerCircle) sit on the first circle, the rest on the second.
NetworkGeometry placeUsers(const std::array<Position3D, 2>& centers,
                           double radius, int countPerCircle,
                           std::uint64_t seed);

/// Variant placing an explicit number of users on each circle.
NetworkGeometry placeUsers(const std::array<Position3D, 2>& centers,
                           double radius, std::array<int, 2> counts,
                           std::uint64_t seed);

/// 10^(referenceLossDb/10) * distance^(-exponent). Throws std::domain_error
/// for a non-positive distance.
double pathLossLinear(double distance, double exponent, double referenceLossDb);

/// sqrt(gain) * (sqrt(k/(1+k)) * los + sqrt(1/(1+k)) * nlos) with i.i.d.
/// CN(0,1) NLoS entries. An infinite K-factor returns the scaled LoS matrix
/// without consuming randomness.
CMat drawRicianChannel(int rows, int cols, double kFactorLinear,
                       double gainLinear, Rng& rng);
CMat drawRicianChannel(const CMat& los, double kFactorLinear,
                       double gainLinear, Rng& rng);

/// Unit-modulus half-wavelength array response. Element positions are given
/// in wavelengths; direction need not be normalized.
CVec steeringVector(const std::vector<std::array<double, 3>>& elements,
                    const Position3D& direction);
/// Uniform linear array along x.
std::vector<std::array<double, 3>> linearArray(int count);
/// Uniform planar array in the x-z plane, ceil(sqrt(count)) columns.
std::vector<std::array<double, 3>> planarArray(int count);

ChannelSet generateChannels(const NetworkGeometry& geometry,
                            const PathLossModel& pathLoss,
                            const RicianConfig& rician, int antennas,
                            int elements);

}  // namespace mfris
