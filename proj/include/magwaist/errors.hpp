#pragma once

#include <stdexcept>
#include <string>

namespace magwaist {

// Root of every error raised by the library. `kind()` is the stable name used
// in JSON failure reports.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

// Declared solver failure modes (CLI exit status 2) derive from SolverFailure;
// everything else is a usage or input error.
class SolverFailure : public Error {
public:
    using Error::Error;
};

#define MAGWAIST_ERROR(Name, Base)                                        \
    class Name : public Base {                                            \
    public:                                                               \
        explicit Name(const std::string& what) : Base(#Name, what) {}     \
    }

MAGWAIST_ERROR(ChartDomainError, Error);
MAGWAIST_ERROR(RandersDomainError, Error);
MAGWAIST_ERROR(NonMagneticError, Error);
MAGWAIST_ERROR(WindingResidualError, Error);
MAGWAIST_ERROR(DegenerateSegmentError, Error);
MAGWAIST_ERROR(TriplePointError, Error);
MAGWAIST_ERROR(EpsTooLargeError, Error);
MAGWAIST_ERROR(RasterizationError, Error);
MAGWAIST_ERROR(NotABoundaryError, Error);
MAGWAIST_ERROR(NotAtMaxError, Error);
MAGWAIST_ERROR(SignGuardError, Error);
MAGWAIST_ERROR(EnergyRangeError, Error);
MAGWAIST_ERROR(MixedEnergyError, Error);
MAGWAIST_ERROR(NotAMinimalBoundaryError, Error);
MAGWAIST_ERROR(NotAWaistError, Error);
MAGWAIST_ERROR(NotAnOrbitError, Error);
MAGWAIST_ERROR(ClosedFormError, Error);
MAGWAIST_ERROR(TooFarApart, Error);
MAGWAIST_ERROR(ConfigError, Error);
MAGWAIST_ERROR(PreconditionError, Error);
MAGWAIST_ERROR(NoLocalMinimizer, SolverFailure);
MAGWAIST_ERROR(NoNegativeCandidate, SolverFailure);
MAGWAIST_ERROR(NoWaistFound, SolverFailure);

#undef MAGWAIST_ERROR

}  // namespace magwaist
