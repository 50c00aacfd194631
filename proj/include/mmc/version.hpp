#pragma once

namespace mmc {

#ifndef MMC_VERSION
#define MMC_VERSION "v0.0.0-unknown"
#endif

inline constexpr const char* kVersion = MMC_VERSION;

}  // namespace mmc
