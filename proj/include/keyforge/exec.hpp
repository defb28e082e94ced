#pragma once

namespace kf {

/// Selects between the serial reference kernels and the OpenMP kernels.
/// `Default` defers to the process-wide setting, which forked benchmark
/// workers pin to `Serial`.
enum class Exec { Default, Serial, Parallel };

void set_default_exec(Exec exec);
Exec resolve_exec(Exec exec);

} // namespace kf
