#pragma once

namespace squidqct {

#ifndef SQUIDQCT_VERSION
#define SQUIDQCT_VERSION "0.1.0"
#endif

inline constexpr const char* kVersion = SQUIDQCT_VERSION;

}  // namespace squidqct
