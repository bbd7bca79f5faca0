#pragma once

#include <stdexcept>
#include <string>

namespace mssrc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error
{
  public:
    using Error::Error;
};

/// Random reservoir could not be built (e.g. zero spectral radius).
class ConstructionError : public Error
{
  public:
    using Error::Error;
};

/// Readout system is singular; only raised for an unregularized solve.
class RankDeficiency : public Error
{
  public:
    using Error::Error;
};

class IntegrationDiverged : public Error
{
  public:
    using Error::Error;
};

class CannotTargetSnr : public Error
{
  public:
    using Error::Error;
};

class TuningFailed : public Error
{
  public:
    using Error::Error;
};

/// Malformed or out-of-schema configuration.
class ConfigError : public Error
{
  public:
    using Error::Error;
};

/// Unreadable or inconsistent input data.
class DataError : public Error
{
  public:
    using Error::Error;
};

}  // namespace mssrc
