#include "memlb/tape.hpp"

// RandomTape is header-only; this translation unit anchors the target.
namespace memlb {}
