#ifndef CFSURV_VERSION_HPP
#define CFSURV_VERSION_HPP

namespace cfsurv {

inline constexpr const char* kVersion = "0.1.0";

} // namespace cfsurv

#endif
