#include "hamcg/errors.hpp"

namespace hamcg {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::MissingInteraction: return "MissingInteraction";
    case ErrorKind::DegenerateCritical: return "DegenerateCritical";
    case ErrorKind::SaddleValueCollision: return "SaddleValueCollision";
    case ErrorKind::UnstableStep: return "UnstableStep";
    case ErrorKind::BoxTooSmall: return "BoxTooSmall";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::NearCriticalLevel: return "NearCriticalLevel";
    case ErrorKind::OutsideGraph: return "OutsideGraph";
    case ErrorKind::ComponentNotFound: return "ComponentNotFound";
    case ErrorKind::TooCloseToSaddle: return "TooCloseToSaddle";
    case ErrorKind::VanishingGradient: return "VanishingGradient";
    case ErrorKind::MeshTableMismatch: return "MeshTableMismatch";
    case ErrorKind::SolveFailure: return "SolveFailure";
    case ErrorKind::EmptySource: return "EmptySource";
    case ErrorKind::BoundaryLeak: return "BoundaryLeak";
    case ErrorKind::NonRepresentableResidual: return "NonRepresentableResidual";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace hamcg
