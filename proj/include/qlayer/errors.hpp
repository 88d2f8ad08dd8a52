#pragma once

#include <stdexcept>
#include <string>

namespace qlayer {

// Every failure raised by the toolkit carries a stable kind name so that
// reports and the CLI can surface it without string matching on messages.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define QLAYER_DEFINE_ERROR(Name)                                       \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(#Name, what) {}      \
  };

QLAYER_DEFINE_ERROR(SingularChart)
QLAYER_DEFINE_ERROR(DomainError)
QLAYER_DEFINE_ERROR(UnsupportedDimension)
QLAYER_DEFINE_ERROR(ValidityError)
QLAYER_DEFINE_ERROR(TruncationTooSmall)
QLAYER_DEFINE_ERROR(UnsupportedChart)
QLAYER_DEFINE_ERROR(UnknownEulerChar)
QLAYER_DEFINE_ERROR(QuadratureDivergence)
QLAYER_DEFINE_ERROR(DegeneratePerturbation)
QLAYER_DEFINE_ERROR(NonAdmissibleChi1)
QLAYER_DEFINE_ERROR(NotStrictlyConvexAtOrigin)
QLAYER_DEFINE_ERROR(LevelSetEscapesTruncation)
QLAYER_DEFINE_ERROR(CertificateFailed)
QLAYER_DEFINE_ERROR(AssemblyError)
QLAYER_DEFINE_ERROR(NoConvergence)
QLAYER_DEFINE_ERROR(ZeroVector)
QLAYER_DEFINE_ERROR(Inconsistent)
QLAYER_DEFINE_ERROR(ConfigError)

#undef QLAYER_DEFINE_ERROR

}  // namespace qlayer
