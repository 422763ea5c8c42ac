#include "argbot/error.hpp"

namespace argbot {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "invalid-argument";
    case Errc::InvalidCatalog: return "invalid-catalog";
    case Errc::InvalidConfig: return "invalid-config";
    case Errc::DuplicateEnqueue: return "duplicate-enqueue";
    case Errc::UnknownParticipant: return "unknown-participant";
    case Errc::UnknownRoom: return "unknown-room";
    case Errc::NotMember: return "not-member";
    case Errc::RoomNotActive: return "room-not-active";
    case Errc::PhaseMismatch: return "phase-mismatch";
    case Errc::PrematureClose: return "premature-close";
    case Errc::ControlRoom: return "control-room";
    case Errc::EmptyText: return "empty-text";
    case Errc::IllegalTransition: return "illegal-transition";
    case Errc::ParseError: return "parse-error";
    case Errc::GatewayTimeout: return "gateway-timeout";
    case Errc::GatewayMalformed: return "gateway-malformed";
    case Errc::GatewayAuth: return "gateway-auth";
    case Errc::GatewayTransport: return "gateway-transport";
    case Errc::RankDeficient: return "rank-deficient";
    case Errc::TooFewObservations: return "too-few-observations";
    case Errc::ConstantVector: return "constant-vector";
    case Errc::UndefinedRatio: return "undefined-ratio";
    case Errc::MissingValue: return "missing-value";
    case Errc::UnknownCoefficient: return "unknown-coefficient";
    case Errc::IdMismatch: return "id-mismatch";
    case Errc::SampleTooLarge: return "sample-too-large";
    case Errc::MissingAnnotation: return "missing-annotation";
    case Errc::Io: return "io";
    case Errc::OutputExists: return "output-exists";
  }
  return "unknown";
}

}  // namespace argbot
