#pragma once

namespace cprover {

/// Entry point of the curriculum_prover binary. Returns 0 on success, 1 on a
/// domain error, 2 on a usage error.
int dispatch(int argc, char** argv);

}  // namespace cprover
