#include "calitr/error.hpp"

namespace calitr {

std::string_view code_string(Errc code) noexcept {
  switch (code) {
    case Errc::MissingFile: return "input.missing_file";
    case Errc::ParseError: return "input.parse_error";
    case Errc::MissingColumn: return "data.missing_column";
    case Errc::NonBinaryTreatment: return "data.non_binary_treatment";
    case Errc::NonFinite: return "data.non_finite";
    case Errc::SingleArm: return "data.single_arm";
    case Errc::TooFewRows: return "data.too_few_rows";
    case Errc::IndexOutOfRange: return "constraints.index_out_of_range";
    case Errc::UnsupportedMoment: return "constraints.unsupported_moment";
    case Errc::InvalidArgument: return "input.invalid_argument";
    case Errc::DomainViolation: return "calibration.domain_violation";
    case Errc::NotConverged: return "calibration.not_converged";
    case Errc::Infeasible: return "calibration.infeasible";
    case Errc::NonPositiveWeight: return "calibration.non_positive_weight";
    case Errc::Separation: return "nuisance.separation";
    case Errc::RankDeficient: return "nuisance.rank_deficient";
    case Errc::TooFewObservations: return "nuisance.too_few_observations";
    case Errc::DegenerateCovariate: return "nuisance.degenerate_covariate";
    case Errc::LengthMismatch: return "value.length_mismatch";
    case Errc::SingularG: return "value.singular_g";
    case Errc::DimensionTooLarge: return "policy.dimension_too_large";
    case Errc::DimensionMismatch: return "policy.dimension_mismatch";
    case Errc::UnsupportedScenario: return "simulate.unsupported_scenario";
    case Errc::SchemaMismatch: return "report.schema_mismatch";
    case Errc::EmptyInput: return "report.empty_input";
  }
  return "unknown";
}

ErrorKind kind_of(Errc code) noexcept {
  switch (code) {
    case Errc::DomainViolation:
    case Errc::NotConverged:
    case Errc::Infeasible:
    case Errc::NonPositiveWeight:
    case Errc::Separation:
    case Errc::RankDeficient:
    case Errc::SingularG:
      return ErrorKind::Numerical;
    default:
      return ErrorKind::Validation;
  }
}

}  // namespace calitr
