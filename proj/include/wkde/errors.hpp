#pragma once

#include <stdexcept>
#include <string>

namespace wkde {

//! Wrong shapes or lengths (vecp length not triangular, d mismatch).
struct dimension_error : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

//! Parameter outside the domain of a formula (nu <= d - 1, alpha too small).
struct domain_error : std::domain_error
{
  using std::domain_error::domain_error;
};

struct not_positive_definite : domain_error
{
  using domain_error::domain_error;
};

//! Non-finite input or a computation that lost all precision.
struct numeric_error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

//! Invalid configuration, e.g. an empty h-lag neighbourhood.
struct config_error : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

//! Malformed input files.
struct data_error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

} // namespace wkde
