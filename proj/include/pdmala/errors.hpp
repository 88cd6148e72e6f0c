#pragma once

#include <stdexcept>
#include <string>

namespace pdmala {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotSymmetric : Error {
  using Error::Error;
};
struct NotPositiveDefinite : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
struct MissingMetric : Error {
  using Error::Error;
};
struct NonFiniteDensity : Error {
  using Error::Error;
};
struct NonFiniteTrajectory : Error {
  using Error::Error;
};
struct InvalidRun : Error {
  using Error::Error;
};
struct InsufficientSamples : Error {
  using Error::Error;
};
struct ConstantSeries : Error {
  using Error::Error;
};
struct EmptyInput : Error {
  using Error::Error;
};
struct BadConfig : Error {
  using Error::Error;
};
struct MissingDataset : Error {
  using Error::Error;
};

}  // namespace pdmala
