#pragma once

#include <stdexcept>
#include <string>

namespace safd {

// Base class for all validation and computation failures raised by the
// library. CLI maps these to exit code 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define SAFD_DEFINE_ERROR(Name)                                  \
    class Name : public Error {                                  \
    public:                                                      \
        explicit Name(const std::string& msg) : Error(msg) {}    \
    }

SAFD_DEFINE_ERROR(RateOutOfRange);
SAFD_DEFINE_ERROR(BadWeights);
SAFD_DEFINE_ERROR(DimensionMismatch);
SAFD_DEFINE_ERROR(SymbolOutOfRange);
SAFD_DEFINE_ERROR(EmptyCoordinateSet);
SAFD_DEFINE_ERROR(NegativeArgument);
SAFD_DEFINE_ERROR(NoConvergence);
SAFD_DEFINE_ERROR(BudgetExceeded);
SAFD_DEFINE_ERROR(NotPlanar);
SAFD_DEFINE_ERROR(DegenerateAffinity);
SAFD_DEFINE_ERROR(PreconditionViolated);
SAFD_DEFINE_ERROR(ZeroMassBlock);
SAFD_DEFINE_ERROR(ZeroMassClass);
SAFD_DEFINE_ERROR(InsufficientDepth);
SAFD_DEFINE_ERROR(InsufficientResolution);
SAFD_DEFINE_ERROR(HypothesisViolated);
SAFD_DEFINE_ERROR(BadTranslations);
SAFD_DEFINE_ERROR(ModeMismatch);
SAFD_DEFINE_ERROR(ParseError);

#undef SAFD_DEFINE_ERROR

} // namespace safd
