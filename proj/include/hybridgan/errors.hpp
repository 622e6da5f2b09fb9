#pragma once

#include <stdexcept>
#include <string>

namespace hybridgan {

/// Broad failure classes. The CLI maps each class onto its exit code.
enum class ErrorClass { config, io, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }

 private:
  ErrorClass cls_;
};

#define HYBRIDGAN_DEFINE_ERROR(Name, Class, prefix)                               \
  class Name : public Error {                                                     \
   public:                                                                        \
    explicit Name(const std::string& what) : Error(ErrorClass::Class, prefix + what) {} \
  };

HYBRIDGAN_DEFINE_ERROR(ConfigError, config, std::string("configuration error: "))
HYBRIDGAN_DEFINE_ERROR(ShapeError, config, std::string("shape error: "))
HYBRIDGAN_DEFINE_ERROR(ArityError, config, std::string("arity error: "))
HYBRIDGAN_DEFINE_ERROR(ValidationError, config, std::string("validation error: "))
HYBRIDGAN_DEFINE_ERROR(PhaseError, config, std::string("phase error: "))
HYBRIDGAN_DEFINE_ERROR(CompositionError, config, std::string("composition error: "))
HYBRIDGAN_DEFINE_ERROR(RangeError, config, std::string("range error: "))
HYBRIDGAN_DEFINE_ERROR(IoError, io, std::string("I/O error: "))
HYBRIDGAN_DEFINE_ERROR(CompatibilityError, io, std::string("compatibility error: "))
HYBRIDGAN_DEFINE_ERROR(IntegrityError, io, std::string("integrity error: "))

#undef HYBRIDGAN_DEFINE_ERROR

}  // namespace hybridgan
