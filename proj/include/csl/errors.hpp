#pragma once

#include <stdexcept>
#include <string>

namespace csl {

/// Base of every error raised by the library. `kind()` is a stable
/// machine-readable tag used in CLI error records.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define CSL_DEFINE_ERROR(Name, tag)                                         \
    class Name : public Error {                                             \
    public:                                                                 \
        explicit Name(const std::string& what) : Error(tag, what) {}        \
    };

CSL_DEFINE_ERROR(DomainError, "domain")
CSL_DEFINE_ERROR(UnsupportedOrderError, "unsupported-order")
CSL_DEFINE_ERROR(ApertureError, "aperture")
CSL_DEFINE_ERROR(ConvergenceError, "convergence")
CSL_DEFINE_ERROR(QuadratureError, "quadrature-accuracy")
CSL_DEFINE_ERROR(ConfigurationError, "configuration")
CSL_DEFINE_ERROR(GridError, "grid")
CSL_DEFINE_ERROR(GeometryError, "geometry")
CSL_DEFINE_ERROR(ResolutionError, "resolution")

#undef CSL_DEFINE_ERROR

} // namespace csl
