#pragma once

#include <stdexcept>
#include <string>

namespace hyploop {

// Validation errors: the input violates a documented precondition.
// CLI maps these to exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numeric errors: the input is formally valid but numerically degenerate
// (tangencies, grazing contacts, ...). CLI maps these to exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define HYPLOOP_DEFINE_ERROR(NAME, BASE)                                       \
    struct NAME : BASE {                                                       \
        explicit NAME(const std::string& msg) : BASE(#NAME ": " + msg) {}      \
    }

HYPLOOP_DEFINE_ERROR(KindMismatch, ValidationError);
HYPLOOP_DEFINE_ERROR(BadRadius, ValidationError);
HYPLOOP_DEFINE_ERROR(BadBudget, ValidationError);
HYPLOOP_DEFINE_ERROR(OutsideDomain, ValidationError);
HYPLOOP_DEFINE_ERROR(TouchesComplement, ValidationError);
HYPLOOP_DEFINE_ERROR(NoGenerators, ValidationError);
HYPLOOP_DEFINE_ERROR(NullClass, ValidationError);
HYPLOOP_DEFINE_ERROR(NearBase, ValidationError);
HYPLOOP_DEFINE_ERROR(BadParams, ValidationError);
HYPLOOP_DEFINE_ERROR(NotSimple, ValidationError);
HYPLOOP_DEFINE_ERROR(NoRoomForBase, ValidationError);
HYPLOOP_DEFINE_ERROR(BadBase, ValidationError);
HYPLOOP_DEFINE_ERROR(ObstructedRegime, ValidationError);
HYPLOOP_DEFINE_ERROR(NotElliptic, ValidationError);
HYPLOOP_DEFINE_ERROR(InsufficientData, ValidationError);
HYPLOOP_DEFINE_ERROR(NotBordered, ValidationError);
HYPLOOP_DEFINE_ERROR(BadLattice, ValidationError);
HYPLOOP_DEFINE_ERROR(BadDomain, ValidationError);
HYPLOOP_DEFINE_ERROR(InvalidClass, ValidationError);

HYPLOOP_DEFINE_ERROR(DegenerateTangency, NumericError);
HYPLOOP_DEFINE_ERROR(TangentialCrossing, NumericError);

#undef HYPLOOP_DEFINE_ERROR

} // namespace hyploop
