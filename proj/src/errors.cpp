#include "mgnn/errors.hpp"

namespace mgnn {

ParseError::ParseError(std::size_t line, const std::string& message)
    : std::runtime_error(line == 0 ? "end of input: " + message
                                   : "line " + std::to_string(line) + ": " + message),
      line_(line) {}

}  // namespace mgnn
