#pragma once

#include <stdexcept>
#include <string>

namespace chainstab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define CHAINSTAB_DECLARE_ERROR(Name)                                        \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

CHAINSTAB_DECLARE_ERROR(DimensionMismatch);
CHAINSTAB_DECLARE_ERROR(DisturbanceOutOfBox);
CHAINSTAB_DECLARE_ERROR(ControlOutOfSet);
CHAINSTAB_DECLARE_ERROR(InvalidArgument);
CHAINSTAB_DECLARE_ERROR(EmptyChain);
CHAINSTAB_DECLARE_ERROR(NotCovered);
CHAINSTAB_DECLARE_ERROR(ChainHeadMismatch);
CHAINSTAB_DECLARE_ERROR(EmptyGrid);
CHAINSTAB_DECLARE_ERROR(InversionFailure);
CHAINSTAB_DECLARE_ERROR(NonpositiveGamma);
CHAINSTAB_DECLARE_ERROR(NonConvergence);
CHAINSTAB_DECLARE_ERROR(NonpositiveEpsilon);
CHAINSTAB_DECLARE_ERROR(NotPositiveDrift);
CHAINSTAB_DECLARE_ERROR(ConfigError);

#undef CHAINSTAB_DECLARE_ERROR

}  // namespace chainstab
