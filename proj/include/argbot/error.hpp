#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace argbot {

enum class Errc {
  InvalidArgument,
  InvalidCatalog,
  InvalidConfig,
  DuplicateEnqueue,
  UnknownParticipant,
  UnknownRoom,
  NotMember,
  RoomNotActive,
  PhaseMismatch,
  PrematureClose,
  ControlRoom,
  EmptyText,
  IllegalTransition,
  ParseError,
  GatewayTimeout,
  GatewayMalformed,
  GatewayAuth,
  GatewayTransport,
  RankDeficient,
  TooFewObservations,
  ConstantVector,
  UndefinedRatio,
  MissingValue,
  UnknownCoefficient,
  IdMismatch,
  SampleTooLarge,
  MissingAnnotation,
  Io,
  OutputExists,
};

std::string_view to_string(Errc code);

// Every failure raised by the library carries a code so callers and tests can
// branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace argbot
