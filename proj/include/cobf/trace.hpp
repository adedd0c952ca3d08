#pragma once

namespace cobf {

/// One row of an iterative solver's progress log.
struct TraceEntry {
    int iter = 0;
    int user = -1;       // updated block, -1 for Jacobi iterations
    double utility = 0.0;
    double elapsed_s = 0.0;
    long messages = 0;   // scalars exchanged during this iteration
};

} // namespace cobf
