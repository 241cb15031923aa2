#include "mfris/channel_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mfris {

double distance(const Position3D& a, const Position3D& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void PathLossModel::validate() const {
  if (!(referenceLossDb <= 0.0)) {
    throw std::invalid_argument("path loss: referenceLossDb must be <= 0");
  }
  for (double e : {exponentBsRis, exponentBsUser, exponentRisUser}) {
    if (!(e >= 1.5 && e <= 6.0)) {
      throw std::invalid_argument("path loss: exponent " + std::to_string(e) +
                                  " outside [1.5, 6]");
    }
  }
}

NetworkGeometry placeUsers(const std::array<Position3D, 2>& centers,
                           double radius, std::array<int, 2> counts,
                           std::uint64_t seed) {
  if (!(radius > 0.0)) throw std::invalid_argument("placeUsers: radius <= 0");
  if (counts[0] < 0 || counts[1] < 0) {
    throw std::invalid_argument("placeUsers: negative user count");
  }
  NetworkGeometry g;
  g.circleCenters = centers;
  g.radius = radius;
  Rng rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < counts[c]; ++i) {
      const double phi = angle(rng);
      g.users.push_back({centers[c].x + radius * std::cos(phi),
                         centers[c].y + radius * std::sin(phi), 0.0});
      g.userCircle.push_back(c);
    }
  }
  return g;
}

NetworkGeometry placeUsers(const std::array<Position3D, 2>& centers,
                           double radius, int countPerCircle,
                           std::uint64_t seed) {
  return placeUsers(centers, radius, {countPerCircle, countPerCircle}, seed);
}

double pathLossLinear(double distance, double exponent,
                      double referenceLossDb) {
  if (!(distance > 0.0)) {
    throw std::domain_error("pathLossLinear: distance must be positive");
  }
  return dbToLinear(referenceLossDb) * std::pow(distance, -exponent);
}

CMat drawRicianChannel(const CMat& los, double kFactorLinear,
                       double gainLinear, Rng& rng) {
  if (!(kFactorLinear >= 0.0) || !(gainLinear > 0.0)) {
    throw std::invalid_argument("drawRicianChannel: bad K-factor or gain");
  }
  const double amp = std::sqrt(gainLinear);
  if (std::isinf(kFactorLinear)) return amp * los;
  const double losWeight = std::sqrt(kFactorLinear / (1.0 + kFactorLinear));
  const double nlosWeight = std::sqrt(1.0 / (1.0 + kFactorLinear));
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CMat out(los.rows(), los.cols());
  // Row by row: adding rows (surface elements) keeps the earlier draws.
  for (Eigen::Index r = 0; r < los.rows(); ++r) {
    for (Eigen::Index c = 0; c < los.cols(); ++c) {
      const double re = normal(rng);
      const double im = normal(rng);
      out(r, c) = amp * (losWeight * los(r, c) + nlosWeight * cd(re, im));
    }
  }
  return out;
}

CMat drawRicianChannel(int rows, int cols, double kFactorLinear,
                       double gainLinear, Rng& rng) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("drawRicianChannel: empty shape");
  }
  return drawRicianChannel(CMat::Ones(rows, cols), kFactorLinear, gainLinear,
                           rng);
}

std::vector<std::array<double, 3>> linearArray(int count) {
  std::vector<std::array<double, 3>> out;
  for (int n = 0; n < count; ++n) out.push_back({0.5 * n, 0.0, 0.0});
  return out;
}

std::vector<std::array<double, 3>> planarArray(int count) {
  const int cols = static_cast<int>(std::ceil(std::sqrt(double(count))));
  std::vector<std::array<double, 3>> out;
  for (int m = 0; m < count; ++m) {
    out.push_back({0.5 * (m % cols), 0.0, 0.5 * (m / cols)});
  }
  return out;
}

CVec steeringVector(const std::vector<std::array<double, 3>>& elements,
                    const Position3D& direction) {
  const double norm = std::sqrt(direction.x * direction.x +
                                direction.y * direction.y +
                                direction.z * direction.z);
  CVec a(static_cast<Eigen::Index>(elements.size()));
  for (std::size_t i = 0; i < elements.size(); ++i) {
    double phase = 0.0;
    if (norm > 0.0) {
      phase = 2.0 * kPi *
              (elements[i][0] * direction.x + elements[i][1] * direction.y +
               elements[i][2] * direction.z) /
              norm;
    }
    a(static_cast<Eigen::Index>(i)) = std::polar(1.0, phase);
  }
  return a;
}

namespace {

Position3D toward(const Position3D& from, const Position3D& to) {
  return {to.x - from.x, to.y - from.y, to.z - from.z};
}

}  // namespace

ChannelSet generateChannels(const NetworkGeometry& geometry,
                            const PathLossModel& pathLoss,
                            const RicianConfig& rician, int antennas,
                            int elements) {
  if (antennas < 1 || elements < 1) {
    throw std::invalid_argument("generateChannels: N and M must be >= 1");
  }
  if (geometry.users.empty()) {
    throw std::invalid_argument("generateChannels: no users");
  }
  const double kappa = rician.kFactorLinear();
  const bool steering = rician.los == LosModel::kSteering;
  const auto bsArray = linearArray(antennas);
  const auto risArray = planarArray(elements);
  // One stream per link so that a link's fading does not depend on the
  // sizes of the links drawn before it.
  auto stream = [&](std::uint64_t link) {
    std::seed_seq seq{static_cast<std::uint32_t>(rician.seed),
                      static_cast<std::uint32_t>(rician.seed >> 32),
                      static_cast<std::uint32_t>(link)};
    return Rng(seq);
  };

  ChannelSet out;
  {
    Rng rng = stream(0);
    const double gain = pathLossLinear(distance(geometry.bs, geometry.ris),
                                       pathLoss.exponentBsRis,
                                       pathLoss.referenceLossDb);
    CMat los = CMat::Ones(elements, antennas);
    if (steering) {
      los = steeringVector(risArray, toward(geometry.ris, geometry.bs)) *
            steeringVector(bsArray, toward(geometry.bs, geometry.ris))
                .adjoint();
    }
    out.bsToRis = drawRicianChannel(los, kappa, gain, rng);
  }
  for (std::size_t k = 0; k < geometry.users.size(); ++k) {
    const auto& user = geometry.users[k];
    Rng directRng = stream(1 + 2 * k);
    Rng cascadeRng = stream(2 + 2 * k);
    const double gainDirect = pathLossLinear(distance(geometry.bs, user),
                                             pathLoss.exponentBsUser,
                                             pathLoss.referenceLossDb);
    CMat losDirect = CMat::Ones(antennas, 1);
    if (steering) losDirect = steeringVector(bsArray, toward(geometry.bs, user));
    out.direct.push_back(drawRicianChannel(losDirect, kappa, gainDirect, directRng));

    const double gainCascade = pathLossLinear(distance(geometry.ris, user),
                                              pathLoss.exponentRisUser,
                                              pathLoss.referenceLossDb);
    CMat losCascade = CMat::Ones(elements, 1);
    if (steering) {
      losCascade = steeringVector(risArray, toward(geometry.ris, user));
    }
    out.risToUser.push_back(
        drawRicianChannel(losCascade, kappa, gainCascade, cascadeRng));
  }
  return out;
}

}  // namespace mfris
