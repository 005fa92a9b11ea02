#pragma once

#include <stdexcept>
#include <string>

namespace bnprop {

struct CycleDetected : std::runtime_error {
    explicit CycleDetected(const std::string& what) : std::runtime_error(what) {}
};

struct ParentIndexOutOfRange : std::runtime_error {
    explicit ParentIndexOutOfRange(const std::string& what) : std::runtime_error(what) {}
};

struct EnumerationCapExceeded : std::runtime_error {
    explicit EnumerationCapExceeded(const std::string& what) : std::runtime_error(what) {}
};

struct StructureMismatch : std::runtime_error {
    explicit StructureMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct BoundaryProbability : std::runtime_error {
    explicit BoundaryProbability(const std::string& what) : std::runtime_error(what) {}
};

struct SampleSourceExhausted : std::runtime_error {
    explicit SampleSourceExhausted(const std::string& what) : std::runtime_error(what) {}
};

struct BalancednessViolation : std::runtime_error {
    explicit BalancednessViolation(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidParameter : std::runtime_error {
    explicit InvalidParameter(const std::string& what) : std::runtime_error(what) {}
};

struct ArityMismatch : std::runtime_error {
    explicit ArityMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct InfeasibleMoments : std::runtime_error {
    explicit InfeasibleMoments(const std::string& what) : std::runtime_error(what) {}
};

struct TripleEnumerationCapExceeded : std::runtime_error {
    explicit TripleEnumerationCapExceeded(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigInvalid : std::runtime_error {
    explicit ConfigInvalid(const std::string& what) : std::runtime_error(what) {}
};

} // namespace bnprop
