#pragma once

#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rcons {

class TraceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceVerdict {
  int runs = 0;
  std::vector<std::string> failures;  // "run_id: message"
  bool clean() const { return failures.empty(); }
};

// Replays the safety checks over a JSON-lines trace: termination by the
// last round, agreement, validity, no bottom without a deviation, utilities
// consistent with decisions, matching machinery, and the recorded invariant
// report. Several runs may share one file if their run_ids differ.
// Throws TraceFormatError when a line is not a well-formed record.
TraceVerdict check_trace(std::istream& in);

}  // namespace rcons
