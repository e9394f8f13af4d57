#pragma once

#include <stdexcept>
#include <string>

namespace mre {

/// Base of every error raised by the engine. `code()` is module-qualified,
/// e.g. "spectral.NoMalthusianError", and is what the CLI reports.
class Error : public std::runtime_error {
public:
    Error(std::string module, std::string kind, const std::string& what)
        : std::runtime_error(what), module_(std::move(module)), kind_(std::move(kind)) {}

    const std::string& module() const noexcept { return module_; }
    const std::string& kind() const noexcept { return kind_; }
    std::string code() const { return module_ + "." + kind_; }

private:
    std::string module_;
    std::string kind_;
};

#define MRE_DEFINE_ERROR(Name, Module)                                           \
    class Name : public Error {                                                 \
    public:                                                                     \
        explicit Name(const std::string& what) : Error(Module, #Name, what) {} \
    }

// measure_model / transform
MRE_DEFINE_ERROR(InvalidMeasureError, "measure");
MRE_DEFINE_ERROR(DomainError, "transform");
MRE_DEFINE_ERROR(PoleError, "transform");

// spectral
MRE_DEFINE_ERROR(ConvergenceError, "spectral");
MRE_DEFINE_ERROR(NotPrimitiveError, "spectral");
MRE_DEFINE_ERROR(NoMalthusianError, "spectral");
MRE_DEFINE_ERROR(AssumptionError, "spectral");

// roots
MRE_DEFINE_ERROR(BoundaryRootError, "roots");
MRE_DEFINE_ERROR(QuadratureError, "roots");
MRE_DEFINE_ERROR(MaxDepthError, "roots");
MRE_DEFINE_ERROR(DegenerateError, "roots");

// laurent
MRE_DEFINE_ERROR(RadiusError, "laurent");
MRE_DEFINE_ERROR(SingularContourError, "laurent");
MRE_DEFINE_ERROR(UnsupportedRootError, "laurent");
MRE_DEFINE_ERROR(DivergentMomentError, "laurent");

// expansion
MRE_DEFINE_ERROR(StripRootError, "expansion");
MRE_DEFINE_ERROR(OverflowGuard, "expansion");

// oracle_sim
MRE_DEFINE_ERROR(PopulationCapError, "oracle");
MRE_DEFINE_ERROR(InvalidModelError, "oracle");

// conditions
MRE_DEFINE_ERROR(RootOnLineError, "conditions");

// cli_io
MRE_DEFINE_ERROR(SchemaError, "cli");
MRE_DEFINE_ERROR(DimensionError, "cli");

#undef MRE_DEFINE_ERROR

}  // namespace mre
