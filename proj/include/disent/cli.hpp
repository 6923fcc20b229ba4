#pragma once

namespace disent {

// Entry point behind the `disent` binary; exposed so tests can drive the full
// pipeline in-process. Returns 0 on success, 1 on validation/usage errors,
// 2 on I/O errors.
int cli_main(int argc, const char* const* argv);

}  // namespace disent
