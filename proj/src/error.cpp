#include "btimc/error.hpp"

namespace btimc {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::OutOfDomain: return "OutOfDomain";
        case ErrorKind::NumericalFailure: return "NumericalFailure";
        case ErrorKind::Infeasible: return "Infeasible";
        case ErrorKind::InconsistentScheme: return "InconsistentScheme";
        case ErrorKind::DataTooLarge: return "DataTooLarge";
        case ErrorKind::NonConverged: return "NonConverged";
        case ErrorKind::Io: return "IoError";
        case ErrorKind::Parse: return "ParseError";
    }
    return "Error";
}

}  // namespace btimc
