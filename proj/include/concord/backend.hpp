#pragma once

namespace concord {

// Every kernel has a plain serial reference implementation and an
// OpenMP-parallel one. The two are bit-identical by construction: each
// output element is owned by exactly one thread and accumulated in the
// same fixed order, so the backend only changes scheduling, never values.
enum class Backend { serial, parallel };

Backend default_backend();
void set_default_backend(Backend b);
int max_threads();

}  // namespace concord
